//! Fractional Brownian motion: exact grid sampling, the Volterra kernel of
//! the `H > 1/2` representation, and synthesis from Wiener increments.

mod grid;
mod kernel;
mod sampler;
mod synthesis;

use serde::{Deserialize, Serialize};

pub use grid::TimeGrid;
pub use kernel::KernelEval;
pub use sampler::{sample_fbm, FbmSampler};
pub use synthesis::{synthesize_from_wiener, SynthesisPlan};

use crate::error::{Error, Result};

/// Hurst parameter, validated to lie in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HurstParam(f64);

impl HurstParam {
    pub fn new(h: f64) -> Result<Self> {
        if h > 0.0 && h < 1.0 {
            Ok(Self(h))
        } else {
            Err(Error::InvalidHurst(h))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Rejects `H <= bound` for `operation`.
    pub fn require_above(self, bound: f64, operation: &'static str) -> Result<Self> {
        if self.0 > bound {
            Ok(self)
        } else {
            Err(Error::HurstOutOfRange { operation, bound, got: self.0 })
        }
    }
}

impl TryFrom<f64> for HurstParam {
    type Error = Error;

    fn try_from(h: f64) -> Result<Self> {
        Self::new(h)
    }
}

impl From<HurstParam> for f64 {
    fn from(h: HurstParam) -> f64 {
        h.0
    }
}

/// `R(s, t) = (s^{2H} + t^{2H} - |t - s|^{2H}) / 2`.
pub fn covariance(s: f64, t: f64, h: HurstParam) -> f64 {
    let two_h = 2.0 * h.value();
    0.5 * (s.powf(two_h) + t.powf(two_h) - (t - s).abs().powf(two_h))
}

/// Covariance of the increments over `[a, b]` and `[c, d]`.
pub(crate) fn increment_covariance(a: f64, b: f64, c: f64, d: f64, h: HurstParam) -> f64 {
    let two_h = 2.0 * h.value();
    let p = |x: f64| x.abs().powf(two_h);
    0.5 * (p(b - c) + p(a - d) - p(b - d) - p(a - c))
}

/// A `d`-dimensional path on a time grid, optionally with the Wiener
/// increments it was synthesized from.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmSample {
    grid: TimeGrid,
    hurst: Option<HurstParam>,
    /// `values[i][k]` is component `i` at grid point `k`.
    values: Vec<Vec<f64>>,
    /// `wiener[i][k]` is the increment of `W^i` over cell `k`.
    wiener: Option<Vec<Vec<f64>>>,
}

impl FbmSample {
    /// Wraps a path given by its values. Every component must start at 0.
    pub fn from_values(grid: TimeGrid, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("sample needs at least one component".into()));
        }
        for row in &values {
            if row.len() != grid.len() {
                return Err(Error::DimensionMismatch { expected: grid.len(), got: row.len() });
            }
            if row[0] != 0.0 {
                return Err(Error::InvalidArgument("path must start at 0".into()));
            }
        }
        Ok(Self { grid, hurst: None, values, wiener: None })
    }

    /// Samples a deterministic driver `t ↦ f(t)` on `grid`, shifted to start at 0.
    pub fn from_fn<F: Fn(f64) -> Vec<f64>>(grid: TimeGrid, f: F) -> Result<Self> {
        let origin = f(0.0);
        let dim = origin.len();
        let mut values = vec![Vec::with_capacity(grid.len()); dim];
        for &t in grid.points() {
            let v = f(t);
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
            for (row, (x, x0)) in values.iter_mut().zip(v.iter().zip(&origin)) {
                row.push(x - x0);
            }
        }
        Self::from_values(grid, values)
    }

    pub(crate) fn from_parts(
        grid: TimeGrid,
        hurst: Option<HurstParam>,
        values: Vec<Vec<f64>>,
        wiener: Option<Vec<Vec<f64>>>,
    ) -> Self {
        Self { grid, hurst, values, wiener }
    }

    pub fn with_hurst(mut self, h: HurstParam) -> Self {
        self.hurst = Some(h);
        self
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn hurst(&self) -> Option<HurstParam> {
        self.hurst
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn value_at(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[k]).collect()
    }

    pub fn wiener(&self) -> Option<&[Vec<f64>]> {
        self.wiener.as_deref()
    }

    /// Increment of every component over cell `k`.
    pub fn increment(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[k + 1] - row[k]).collect()
    }

    /// The path `-B`. Wiener increments are negated alongside.
    pub fn negated(&self) -> Self {
        let neg = |rows: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            rows.iter().map(|r| r.iter().map(|x| -x).collect()).collect()
        };
        Self {
            grid: self.grid.clone(),
            hurst: self.hurst,
            values: neg(&self.values),
            wiener: self.wiener.as_ref().map(neg),
        }
    }

    /// `(B_{t_s + u} - B_{t_s})` on the shifted grid.
    pub fn shifted(&self, start: usize) -> Result<Self> {
        let grid = self.grid.shifted(start)?;
        let values = self
            .values
            .iter()
            .map(|row| row[start..].iter().map(|x| x - row[start]).collect())
            .collect();
        let wiener = self
            .wiener
            .as_ref()
            .map(|w| w.iter().map(|row| row[start..].to_vec()).collect());
        Ok(Self { grid, hurst: self.hurst, values, wiener })
    }

    /// Restriction to the dyadic sub-grid of level `coarse`.
    pub fn coarsen(&self, coarse: u32) -> Result<Self> {
        let (grid, stride) = self.grid.coarsen(coarse)?;
        let values = self
            .values
            .iter()
            .map(|row| row.iter().step_by(stride).copied().collect())
            .collect();
        Ok(Self { grid, hurst: self.hurst, values, wiener: None })
    }

    /// Restriction to grid points `0..=last_index`.
    pub fn truncated(&self, last_index: usize) -> Result<Self> {
        let grid = self.grid.truncated(last_index)?;
        let values = self.values.iter().map(|row| row[..=last_index].to_vec()).collect();
        let wiener = self
            .wiener
            .as_ref()
            .map(|w| w.iter().map(|row| row[..last_index].to_vec()).collect());
        Ok(Self { grid, hurst: self.hurst, values, wiener })
    }
}
