#![allow(dead_code)]

use liefbm_core::fbm::{covariance, FbmSample, HurstParam, TimeGrid};

/// Independent reference values, computed offline at 30 digits.
pub mod frozen {
    /// `(H, c_H)`.
    pub const C_H: [(f64, f64); 3] = [
        (0.6, 0.107_600_518_413_180_718_63),
        (0.75, 0.267_411_158_757_997_581_03),
        (0.9, 0.324_488_259_257_341_005_91),
    ];
    /// `(t, s, H, K(t, s))`.
    pub const KERNEL: [(f64, f64, f64, f64); 2] = [
        (1.0, 0.5, 0.75, 0.937_591_963_698_057_233_30),
        (1.0, 0.25, 0.75, 1.098_281_580_157_165_547_8),
    ];
    /// `(u, s, H, ∂K/∂u)`.
    pub const KERNEL_DERIVATIVE: (f64, f64, f64, f64) = (1.0, 0.5, 0.75, 0.534_822_317_515_995_162_05);
    /// `(H, ∫_0^1 K(1, s) ds)`.
    pub const KERNEL_MASS: [(f64, f64); 3] = [
        (0.6, 0.994_464_277_259_847_872_77),
        (0.75, 0.950_461_179_775_252_500_32),
        (0.9, 0.765_622_167_101_758_949_24),
    ];
}

/// Tanh-sinh quadrature on `[a, b]`. `f` receives the point together with its
/// distances to both ends, computed without cancellation.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    let step = 1.0 / 128.0;
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    let levels = (6.0 / step) as i64;
    for k in -levels..=levels {
        let tau = k as f64 * step;
        let q = (-std::f64::consts::PI * tau.sinh()).exp();
        if !q.is_finite() || q == 0.0 {
            continue;
        }
        let from_a = 2.0 * half / (1.0 + q);
        let from_b = 2.0 * half * q / (1.0 + q);
        if from_a <= 0.0 || from_b <= 0.0 {
            continue;
        }
        let w = 2.0 * std::f64::consts::PI * tau.cosh() * q / ((1.0 + q) * (1.0 + q));
        let value = f(a + from_a, from_a, from_b);
        if value.is_finite() {
            sum += w * value;
        }
    }
    sum * half * step
}

/// `K(t, s)` straight from its defining integral.
pub fn kernel_oracle(t: f64, s: f64, h: f64, c_h: f64) -> f64 {
    // subtract the endpoint singularity: the remainder vanishes like (u-s)^{H-1/2}
    let a = h - 0.5;
    let rest = tanh_sinh(s, t, |_, du, _| du.powf(h - 1.5) * s.powf(a) * (a * (du / s).ln_1p()).exp_m1());
    let head = s.powf(a) * (t - s).powf(a) / a;
    c_h * s.powf(-a) * (rest + head)
}

/// `B(a, b)` by quadrature.
pub fn beta_oracle(a: f64, b: f64) -> f64 {
    tanh_sinh(0.0, 1.0, |_, x, y| x.powf(a - 1.0) * y.powf(b - 1.0))
}

/// Largest `|empirical − exact| / SE` over all entries of the increment
/// covariance matrix, using the known zero mean.
pub fn increment_covariance_z(samples: &[FbmSample], grid: &TimeGrid, h: HurstParam) -> f64 {
    let p = grid.points();
    let n = grid.intervals();
    let exact = |i: usize, j: usize| {
        covariance(p[i + 1], p[j + 1], h) - covariance(p[i + 1], p[j], h) - covariance(p[i], p[j + 1], h)
            + covariance(p[i], p[j], h)
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for s in samples {
        for c in 0..s.dim() {
            rows.push((0..n).map(|k| s.component(c)[k + 1] - s.component(c)[k]).collect());
        }
    }
    let m = rows.len() as f64;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            let prods: Vec<f64> = rows.iter().map(|r| r[i] * r[j]).collect();
            let mean = prods.iter().sum::<f64>() / m;
            let var = prods.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
            let z = (mean - exact(i, j)).abs() / (var / m).sqrt();
            worst = worst.max(z);
        }
    }
    worst
}
