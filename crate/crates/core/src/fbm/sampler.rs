use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{increment_covariance, FbmSample, HurstParam, TimeGrid};
use crate::error::{Error, Result};
use crate::rng::path_rng;

/// Exact sampler: Cholesky factor of the increment covariance on a fixed
/// grid. Setup is `O(n^3)`, each component `O(n^2)`. Immutable once built.
#[derive(Debug, Clone)]
pub struct FbmSampler {
    hurst: HurstParam,
    grid: TimeGrid,
    factor: DMatrix<f64>,
}

impl FbmSampler {
    pub fn new(hurst: HurstParam, grid: TimeGrid) -> Result<Self> {
        let n = grid.intervals();
        let t = grid.points();
        let cov = DMatrix::from_fn(n, n, |i, j| {
            increment_covariance(t[i], t[i + 1], t[j], t[j + 1], hurst)
        });
        let not_pd = || Error::NotPositiveDefinite { points: grid.len(), hurst: hurst.value() };
        let chol = Cholesky::new(cov).ok_or_else(not_pd)?;
        let factor = chol.unpack();
        // A factor with a vanishing pivot is numerically singular even if
        // the decomposition itself went through.
        let max_pivot = factor.diagonal().iter().fold(0.0f64, |m, &d| m.max(d));
        if factor.diagonal().iter().any(|&d| !(d > 1e-7 * max_pivot)) {
            return Err(not_pd());
        }
        Ok(Self { hurst, grid, factor })
    }

    pub fn hurst(&self) -> HurstParam {
        self.hurst
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Draws `dim` independent components from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> FbmSample {
        let n = self.grid.intervals();
        let values = (0..dim)
            .map(|_| {
                let z = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
                let incr = &self.factor * z;
                let mut path = Vec::with_capacity(n + 1);
                let mut acc = 0.0;
                path.push(0.0);
                for dx in incr.iter() {
                    acc += dx;
                    path.push(acc);
                }
                path
            })
            .collect();
        FbmSample::from_parts(self.grid.clone(), Some(self.hurst), values, None)
    }

    /// Path `path` of the batch keyed by `seed`.
    pub fn sample_path(&self, dim: usize, seed: u64, path: u64) -> FbmSample {
        self.sample(dim, &mut path_rng(seed, path))
    }
}

/// One exact sample; a convenience over [`FbmSampler`].
pub fn sample_fbm(h: HurstParam, grid: &TimeGrid, dim: usize, seed: u64) -> Result<FbmSample> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    Ok(FbmSampler::new(h, grid.clone())?.sample_path(dim, seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_given_seed() {
        let h = HurstParam::new(0.7).unwrap();
        let grid = TimeGrid::dyadic(5, 1.0).unwrap();
        let a = sample_fbm(h, &grid, 2, 11).unwrap();
        let b = sample_fbm(h, &grid, 2, 11).unwrap();
        let c = sample_fbm(h, &grid, 2, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.component(0)[0], 0.0);
        assert_eq!(a.hurst(), Some(h));
    }

    #[test]
    fn brownian_factor_is_diagonal() {
        let h = HurstParam::new(0.5).unwrap();
        let grid = TimeGrid::uniform(8, 2.0).unwrap();
        let s = FbmSampler::new(h, grid).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let expected = if i == j { 0.25f64.sqrt() } else { 0.0 };
                assert!((s.factor[(i, j)] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_interval_grid() {
        let h = HurstParam::new(0.3).unwrap();
        let grid = TimeGrid::from_points(vec![0.0, 1.0]).unwrap();
        let s = sample_fbm(h, &grid, 1, 0).unwrap();
        assert_eq!(s.grid().len(), 2);
    }

    #[test]
    fn rejects_numerically_singular_grids() {
        // Nearly coincident points make the increment covariance singular.
        let h = HurstParam::new(0.95).unwrap();
        let grid = TimeGrid::from_points(vec![0.0, 1.0, 1.0 + 1e-15, 2.0]).unwrap();
        assert!(matches!(
            FbmSampler::new(h, grid),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }
}
