use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing time points starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    points: Vec<f64>,
    level: Option<u32>,
}

impl TimeGrid {
    /// Dyadic grid `t_i = i 2^{-m} · horizon`, `i = 0..=2^m`.
    pub fn dyadic(level: u32, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        if level > 24 {
            return Err(Error::InvalidGrid(format!("dyadic level {level} is too large")));
        }
        let n = 1usize << level;
        let scale = (n as f64).recip();
        let points = (0..=n).map(|i| i as f64 * scale * horizon).collect();
        Ok(Self { points, level: Some(level) })
    }

    /// `n` equal cells on `[0, horizon]`.
    pub fn uniform(n: usize, horizon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGrid("grid needs at least one interval".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        let points = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
        Ok(Self { points, level: None })
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid("grid needs at least two points".into()));
        }
        if points[0] != 0.0 {
            return Err(Error::InvalidGrid("grid must start at 0".into()));
        }
        if points.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidGrid("grid points must be strictly increasing".into()));
        }
        Ok(Self { points, level: None })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Dyadic level, when the grid was built by [`TimeGrid::dyadic`].
    pub fn level(&self) -> Option<u32> {
        self.level
    }

    /// Number of points (`n + 1`).
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of cells (`n`).
    pub fn intervals(&self) -> usize {
        self.points.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().expect("grid is never empty")
    }

    pub fn step(&self, k: usize) -> f64 {
        self.points[k + 1] - self.points[k]
    }

    /// Index of grid point `t`, matched to a relative tolerance of `1e-12`.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let tol = 1e-12 * self.horizon().max(1.0);
        let idx = self.points.partition_point(|&p| p < t - tol);
        match self.points.get(idx) {
            Some(&p) if (p - t).abs() <= tol => Ok(idx),
            _ => Err(Error::OffGrid(t)),
        }
    }

    /// The dyadic sub-grid of level `coarse` and the stride into this grid.
    pub fn coarsen(&self, coarse: u32) -> Result<(TimeGrid, usize)> {
        let fine = self.level.ok_or(Error::GridsNotNested)?;
        if coarse > fine {
            return Err(Error::GridsNotNested);
        }
        let stride = 1usize << (fine - coarse);
        let points = self.points.iter().step_by(stride).copied().collect();
        Ok((TimeGrid { points, level: Some(coarse) }, stride))
    }

    /// Points `t_j - t_start` for `j >= start`.
    pub fn shifted(&self, start: usize) -> Result<TimeGrid> {
        if start + 1 >= self.points.len() {
            return Err(Error::InvalidGrid(format!(
                "shift index {start} leaves no interval on a grid of {} points",
                self.points.len()
            )));
        }
        let origin = self.points[start];
        let points = self.points[start..].iter().map(|p| p - origin).collect();
        Ok(TimeGrid { points, level: None })
    }

    /// Points up to and including `last_index`.
    pub fn truncated(&self, last_index: usize) -> Result<TimeGrid> {
        if last_index == 0 || last_index >= self.points.len() {
            return Err(Error::InvalidGrid(format!("cannot truncate at index {last_index}")));
        }
        Ok(TimeGrid { points: self.points[..=last_index].to_vec(), level: None })
    }
}
