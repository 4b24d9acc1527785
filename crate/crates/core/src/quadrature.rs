//! Gauss–Legendre rules and power-graded substitutions for integrands with
//! algebraic endpoint behaviour.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(node, weight)` pairs on `[0, 1]`.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let len = b - a;
        self.iter().map(|(x, w)| w * f(a + len * x)).sum::<f64>() * len
    }

    /// Nodes and weights for `∫_a^b` graded towards `a`: `x = a + (b-a) w^p`.
    ///
    /// With `p = 1/(1+α)` an integrand behaving like `(x-a)^α` becomes smooth.
    pub fn graded_left(&self, a: f64, b: f64, p: f64) -> Vec<(f64, f64)> {
        let len = b - a;
        self.iter()
            .map(|(w, wt)| {
                let x = a + len * w.powf(p);
                (x, wt * len * p * w.powf(p - 1.0))
            })
            .collect()
    }

    /// Same as [`graded_left`](Self::graded_left) but graded towards `b`.
    pub fn graded_right(&self, a: f64, b: f64, p: f64) -> Vec<(f64, f64)> {
        let len = b - a;
        self.iter()
            .map(|(w, wt)| {
                let x = b - len * w.powf(p);
                (x, wt * len * p * w.powf(p - 1.0))
            })
            .collect()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(8);
        let total: f64 = gl.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-14);
        // degree 15 is the exactness limit for 8 nodes
        let v = gl.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() / v < 1e-13);
    }

    #[test]
    fn graded_rule_handles_endpoint_singularity() {
        let gl = GaussLegendre::new(16);
        // ∫_0^1 x^{-1/2} dx = 2
        let v: f64 = gl
            .graded_left(0.0, 1.0, 2.0)
            .into_iter()
            .map(|(x, w)| w / x.sqrt())
            .sum();
        assert!((v - 2.0).abs() < 1e-13);
        let v: f64 = gl
            .graded_right(0.0, 1.0, 2.0)
            .into_iter()
            .map(|(x, w)| w / (1.0 - x).sqrt())
            .sum();
        assert!((v - 2.0).abs() < 1e-12);
    }
}
