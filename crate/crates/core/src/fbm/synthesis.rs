use rand::Rng;
use rand_distr::StandardNormal;

use super::{FbmSample, KernelEval, TimeGrid};
use crate::error::{Error, Result};
use crate::rng::path_rng;

/// Discrete Volterra synthesis `B_{t_k} = Σ_{j<k} K̄(t_k, j) ΔW_j`, where
/// `K̄(t_k, j)` is the average of `K(t_k, ·)` over cell `j`.
///
/// The weight table is computed once per grid and shared read-only.
#[derive(Debug, Clone)]
pub struct SynthesisPlan {
    grid: TimeGrid,
    kernel: KernelEval,
    /// `weights[k - 1][j]`, `j < k`.
    weights: Vec<Vec<f64>>,
}

impl SynthesisPlan {
    pub fn new(grid: TimeGrid, kernel: KernelEval) -> Result<Self> {
        let t = grid.points();
        let weights = (1..grid.len())
            .map(|k| {
                (0..k)
                    .map(|j| {
                        let cell = kernel.cell_integral(t[k], t[j], t[j + 1])?;
                        Ok(cell / (t[j + 1] - t[j]))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, kernel, weights })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn kernel(&self) -> &KernelEval {
        &self.kernel
    }

    /// `K̄(t_k, j)` for `j < k`.
    pub fn weight(&self, k: usize, j: usize) -> f64 {
        if j < k {
            self.weights[k - 1][j]
        } else {
            0.0
        }
    }

    /// Maps `wiener[i][j]` (increment of `W^i` over cell `j`) to a path.
    pub fn synthesize(&self, wiener: Vec<Vec<f64>>) -> Result<FbmSample> {
        let n = self.grid.intervals();
        if wiener.is_empty() {
            return Err(Error::InvalidArgument("need at least one Wiener component".into()));
        }
        if let Some(row) = wiener.iter().find(|row| row.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: row.len() });
        }
        let values = wiener
            .iter()
            .map(|dw| {
                std::iter::once(0.0)
                    .chain(self.weights.iter().map(|w| {
                        w.iter().zip(dw).map(|(k, x)| k * x).sum::<f64>()
                    }))
                    .collect()
            })
            .collect();
        Ok(FbmSample::from_parts(
            self.grid.clone(),
            Some(self.kernel.hurst()),
            values,
            Some(wiener),
        ))
    }

    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> FbmSample {
        let wiener = (0..dim)
            .map(|_| {
                (0..self.grid.intervals())
                    .map(|j| self.grid.step(j).sqrt() * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        self.synthesize(wiener).expect("shapes are consistent by construction")
    }

    pub fn sample_path(&self, dim: usize, seed: u64, path: u64) -> FbmSample {
        self.sample(dim, &mut path_rng(seed, path))
    }
}

/// One-shot synthesis; builds the weight table on every call.
pub fn synthesize_from_wiener(
    wiener: Vec<Vec<f64>>,
    grid: &TimeGrid,
    kernel: &KernelEval,
) -> Result<FbmSample> {
    SynthesisPlan::new(grid.clone(), kernel.clone())?.synthesize(wiener)
}
