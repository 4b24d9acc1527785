use statrs::function::beta::beta;

use super::HurstParam;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Default Gauss–Legendre node count for the inner `u`-integral.
pub const DEFAULT_KERNEL_NODES: usize = 64;

/// Nodes used per panel when integrating the kernel over `s`.
const OUTER_NODES: usize = 32;

/// The Volterra kernel
///
/// ```text
/// K(t, s) = c_H s^{1/2-H} ∫_s^t (u-s)^{H-3/2} u^{H-1/2} du,   0 < s < t,
/// c_H     = sqrt( H(2H-1) / B(2-2H, H-1/2) ),
/// ```
///
/// for `H > 1/2`. The `u`-integral is evaluated after the substitution
/// `v = (u-s)^{H-1/2}`, which turns the endpoint singularity into a smooth
/// integrand handled by fixed-node Gauss–Legendre.
#[derive(Debug, Clone)]
pub struct KernelEval {
    hurst: HurstParam,
    c_h: f64,
    rule: GaussLegendre,
    outer: GaussLegendre,
}

impl KernelEval {
    pub fn new(hurst: HurstParam) -> Result<Self> {
        Self::with_nodes(hurst, DEFAULT_KERNEL_NODES)
    }

    pub fn with_nodes(hurst: HurstParam, quadrature_nodes: usize) -> Result<Self> {
        let h = hurst.require_above(0.5, "the Volterra representation")?.value();
        if quadrature_nodes == 0 {
            return Err(Error::InvalidArgument("quadrature needs at least one node".into()));
        }
        let c_h = (h * (2.0 * h - 1.0) / beta(2.0 - 2.0 * h, h - 0.5)).sqrt();
        Ok(Self {
            hurst,
            c_h,
            rule: GaussLegendre::new(quadrature_nodes),
            outer: GaussLegendre::new(OUTER_NODES),
        })
    }

    pub fn hurst(&self) -> HurstParam {
        self.hurst
    }

    /// Normalization constant `c_H`.
    pub fn c_h(&self) -> f64 {
        self.c_h
    }

    pub fn quadrature_nodes(&self) -> usize {
        self.rule.len()
    }

    fn check_times(s: f64, t: f64) -> Result<()> {
        if !(s > 0.0) {
            return Err(Error::InvalidArgument(format!("kernel needs s > 0, got s = {s}")));
        }
        if !(s < t) {
            return Err(Error::InvalidArgument(format!("kernel needs s < t, got s = {s}, t = {t}")));
        }
        Ok(())
    }

    /// `K(t, s)` for `0 < s < t`.
    pub fn volterra_kernel(&self, t: f64, s: f64) -> Result<f64> {
        Self::check_times(s, t)?;
        Ok(self.kernel_unchecked(t, s))
    }

    /// `K(t, s)` extended by 0 outside `0 < s < t`.
    pub(crate) fn kernel_or_zero(&self, t: f64, s: f64) -> f64 {
        if s > 0.0 && s < t {
            self.kernel_unchecked(t, s)
        } else {
            0.0
        }
    }

    fn kernel_unchecked(&self, t: f64, s: f64) -> f64 {
        let a = self.hurst.value() - 0.5;
        let p = a.recip();
        let upper = (t - s).powf(a);
        // (s + v^p)^a changes regime where v^p ≈ s; split there.
        let knee = s.powf(a);
        let integrand = |v: f64| (s + v.powf(p)).powf(a);
        let integral = if knee < upper {
            self.rule.integrate(0.0, knee, integrand) + self.rule.integrate(knee, upper, integrand)
        } else {
            self.rule.integrate(0.0, upper, integrand)
        };
        self.c_h * s.powf(-a) * integral / a
    }

    /// `∂K/∂u (u, s) = c_H s^{1/2-H} (u-s)^{H-3/2} u^{H-1/2}` for `0 < s < u`.
    pub fn kernel_time_derivative(&self, u: f64, s: f64) -> Result<f64> {
        Self::check_times(s, u)?;
        let h = self.hurst.value();
        Ok(self.c_h * s.powf(0.5 - h) * (u - s).powf(h - 1.5) * u.powf(h - 0.5))
    }

    /// `∫_a^b K(t, s) ds` for `0 <= a < b <= t`, graded towards the
    /// integrable endpoint behaviour at `s = 0` and `s = t`.
    pub fn cell_integral(&self, t: f64, a: f64, b: f64) -> Result<f64> {
        if !(0.0 <= a && a < b && b <= t) {
            return Err(Error::InvalidArgument(format!(
                "cell [{a}, {b}] must lie in [0, {t}]"
            )));
        }
        let h = self.hurst.value();
        // Near 0, K mixes s^{1/2-H}, s^{H-1/2} and s^{3/2-H}; near t it is
        // (t-s)^{H-1/2} times a power series. These powers make the leading
        // terms polynomial in the graded variable and the rest at least C^2.
        let left_power = 3.0 / (1.5 - h);
        let right_power = 2.0 / (h + 0.5);
        let f = |s: f64| self.kernel_or_zero(t, s);
        let sum = |nodes: Vec<(f64, f64)>| nodes.into_iter().map(|(s, w)| w * f(s)).sum::<f64>();
        let value = match (a == 0.0, b >= t) {
            (true, true) => {
                let mid = 0.5 * (a + b);
                sum(self.outer.graded_left(a, mid, left_power))
                    + sum(self.outer.graded_right(mid, b, right_power))
            }
            (true, false) => sum(self.outer.graded_left(a, b, left_power)),
            (false, true) => sum(self.outer.graded_right(a, b, right_power)),
            (false, false) => sum(self.outer.iter().map(|(x, w)| (a + (b - a) * x, w * (b - a))).collect()),
        };
        Ok(value)
    }

    /// `∫_0^t K(t, s)^2 ds`; equals `t^{2H}` for the exact kernel.
    pub fn square_integral(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {t}")));
        }
        let h = self.hurst.value();
        let mid = 0.5 * t;
        let f = |s: f64| self.kernel_or_zero(t, s).powi(2);
        // K^2 ~ s^{1-2H} near 0 and ~ (t-s)^{2H-1} near t, plus higher powers.
        let left = self.rule.graded_left(0.0, mid, 3.0 / (2.0 - 2.0 * h));
        let right = self.rule.graded_right(mid, t, 2.0 / (2.0 * h));
        Ok(left.into_iter().chain(right).map(|(s, w)| w * f(s)).sum())
    }
}
