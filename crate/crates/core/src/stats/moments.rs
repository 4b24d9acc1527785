use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::{self, io, real};
use crate::rng::path_rng;

/// Fewest samples a report may have to take part in a comparison.
pub const MIN_COMPARISON_SAMPLES: usize = 1000;

/// Half-widths are reported at 95%.
const Z95: f64 = 1.959_963_984_540_054;

/// Moments of one scalar component of a functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentMoments {
    pub label: String,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    /// 10%, 50% and 90% quantiles.
    pub quantiles: [f64; 3],
    /// Bootstrap standard errors of the mean and the variance.
    pub mean_se: f64,
    pub variance_se: f64,
}

impl ComponentMoments {
    pub fn mean_half_width(&self) -> f64 {
        Z95 * self.mean_se
    }

    pub fn variance_half_width(&self) -> f64 {
        Z95 * self.variance_se
    }
}

/// Empirical moments of a vector functional over Monte Carlo paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub functional: String,
    pub count: usize,
    pub components: Vec<ComponentMoments>,
}

fn mean_var(xs: impl Iterator<Item = f64> + Clone, n: f64) -> (f64, f64) {
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

impl MomentReport {
    /// Builds a report from per-path rows. Standard errors come from
    /// `resamples` bootstrap replicates drawn from the stream `seed`.
    pub fn from_rows(
        functional: &str,
        labels: &[String],
        rows: &[Vec<f64>],
        resamples: usize,
        seed: u64,
    ) -> Result<Self> {
        let n = rows.len();
        let p = labels.len();
        if n < 2 || resamples < 2 {
            return Err(Error::InvalidArgument(format!(
                "a moment report needs at least 2 samples and 2 resamples, got {n} and {resamples}"
            )));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::DimensionMismatch { expected: p, got: bad.len() });
        }
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let nf = n as f64;

        // bootstrap: one index draw per replicate, shared by all components
        let mut boot_means = vec![Vec::with_capacity(resamples); p];
        let mut boot_vars = vec![Vec::with_capacity(resamples); p];
        let mut sum = vec![0.0; p];
        let mut sum_sq = vec![0.0; p];
        for b in 0..resamples {
            let mut rng = path_rng(seed, b as u64);
            sum.iter_mut().for_each(|x| *x = 0.0);
            sum_sq.iter_mut().for_each(|x| *x = 0.0);
            for _ in 0..n {
                let row = &rows[rng.random_range(0..n)];
                for c in 0..p {
                    sum[c] += row[c];
                    sum_sq[c] += row[c] * row[c];
                }
            }
            for c in 0..p {
                let m = sum[c] / nf;
                boot_means[c].push(m);
                boot_vars[c].push(((sum_sq[c] - nf * m * m) / (nf - 1.0)).max(0.0));
            }
        }
        let rb = resamples as f64;

        let components = (0..p)
            .map(|c| {
                let col = rows.iter().map(|r| r[c]);
                let (mean, variance) = mean_var(col.clone(), nf);
                let third = col.clone().map(|x| (x - mean).powi(3)).sum::<f64>() / nf;
                let skewness = if variance > 0.0 { third / variance.powf(1.5) } else { 0.0 };
                let mut sorted: Vec<f64> = col.collect();
                sorted.sort_by(f64::total_cmp);
                let (_, mv) = mean_var(boot_means[c].iter().copied(), rb);
                let (_, vv) = mean_var(boot_vars[c].iter().copied(), rb);
                ComponentMoments {
                    label: labels[c].clone(),
                    mean,
                    variance,
                    skewness,
                    quantiles: [quantile(&sorted, 0.1), quantile(&sorted, 0.5), quantile(&sorted, 0.9)],
                    mean_se: mv.sqrt(),
                    variance_se: vv.sqrt(),
                }
            })
            .collect();
        Ok(Self { functional: functional.to_string(), count: n, components })
    }

    pub fn component(&self, label: &str) -> Option<&ComponentMoments> {
        self.components.iter().find(|c| c.label == label)
    }

    /// Columns `label, mean, mean_half_width, variance, variance_half_width,
    /// skewness, q10, q50, q90`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = export::writer(out);
        w.write_record([
            "label", "mean", "mean_half_width", "variance", "variance_half_width", "skewness", "q10", "q50",
            "q90",
        ])
        .map_err(io)?;
        for c in &self.components {
            let mut row = vec![c.label.clone()];
            row.extend(
                [c.mean, c.mean_half_width(), c.variance, c.variance_half_width(), c.skewness]
                    .into_iter()
                    .chain(c.quantiles)
                    .map(real),
            );
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Outcome of [`compare_laws`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawComparison {
    pub pass: bool,
    /// Largest standardized difference over all compared moments.
    pub max_z: f64,
    pub worst_label: String,
    pub worst_moment: String,
    pub threshold: f64,
}

/// Standardized moment differences must stay below this.
pub const SIGMA_THRESHOLD: f64 = 4.0;

fn z_score(a: f64, b: f64, se_a: f64, se_b: f64) -> f64 {
    let diff = (a - b).abs();
    let se = se_a.hypot(se_b);
    if se > 0.0 {
        diff / se
    } else if diff <= 1e-14 * (1.0 + a.abs()) {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Compares means and variances component by component under the 4σ rule.
pub fn compare_laws(a: &MomentReport, b: &MomentReport) -> Result<LawComparison> {
    if a.functional != b.functional || a.components.len() != b.components.len() {
        return Err(Error::IncompatibleReports(format!(
            "functionals '{}' ({} components) and '{}' ({} components)",
            a.functional,
            a.components.len(),
            b.functional,
            b.components.len()
        )));
    }
    if a.count < MIN_COMPARISON_SAMPLES || b.count < MIN_COMPARISON_SAMPLES {
        return Err(Error::IncompatibleReports(format!(
            "comparisons need at least {MIN_COMPARISON_SAMPLES} samples per side, got {} and {}",
            a.count, b.count
        )));
    }
    if a.count > 2 * b.count || b.count > 2 * a.count {
        return Err(Error::IncompatibleReports(format!(
            "sample sizes {} and {} differ by more than a factor 2",
            a.count, b.count
        )));
    }
    let mut worst = (0.0, String::new(), String::new());
    for (ca, cb) in a.components.iter().zip(&b.components) {
        for (moment, z) in [
            ("mean", z_score(ca.mean, cb.mean, ca.mean_se, cb.mean_se)),
            ("variance", z_score(ca.variance, cb.variance, ca.variance_se, cb.variance_se)),
        ] {
            if z > worst.0 || worst.1.is_empty() {
                worst = (z, ca.label.clone(), moment.to_string());
            }
        }
    }
    Ok(LawComparison {
        pass: worst.0 < SIGMA_THRESHOLD,
        max_z: worst.0,
        worst_label: worst.1,
        worst_moment: worst.2,
        threshold: SIGMA_THRESHOLD,
    })
}
