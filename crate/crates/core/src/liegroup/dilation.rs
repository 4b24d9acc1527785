use nalgebra::DMatrix;

use super::{bracket, exp_matrix, log_unipotent, AlgebraBasis, GroupElement};
use crate::error::{Error, Result};

/// Canonical dilations of a graded (Carnot) basis: `δ_c` scales layer `i`
/// by `c^i`, and `Δ_c = exp ∘ δ_c ∘ log` on the group.
#[derive(Debug, Clone)]
pub struct DilationSpec {
    basis: AlgebraBasis,
    layers: Vec<usize>,
}

impl DilationSpec {
    /// Fails with [`Error::Ungraded`] unless the basis carries a grading.
    pub fn new(basis: &AlgebraBasis) -> Result<Self> {
        let layers = basis.layers().ok_or(Error::Ungraded)?.to_vec();
        let spec = Self { basis: basis.clone(), layers };
        let defect = spec.automorphism_defect(2.0)?;
        if defect > basis.tolerances().algebra {
            return Err(Error::InvalidArgument(format!(
                "dilation is not an automorphism (defect {defect:.3e})"
            )));
        }
        Ok(spec)
    }

    pub fn basis(&self) -> &AlgebraBasis {
        &self.basis
    }

    fn check_scale(c: f64) -> Result<()> {
        if c > 0.0 && c.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("dilation factor must be positive, got {c}")))
        }
    }

    /// Scales completed-basis coordinates layer by layer.
    pub fn dilate_coordinates(&self, c: f64, coords: &[f64]) -> Result<Vec<f64>> {
        Self::check_scale(c)?;
        if coords.len() != self.layers.len() {
            return Err(Error::DimensionMismatch { expected: self.layers.len(), got: coords.len() });
        }
        Ok(coords
            .iter()
            .zip(&self.layers)
            .map(|(x, &l)| x * c.powi(l as i32))
            .collect())
    }

    /// `δ_c x`.
    pub fn dilate_algebra(&self, c: f64, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let coords = self.basis.coordinates(x)?;
        let scaled = self.dilate_coordinates(c, coords.as_slice())?;
        Ok(self.basis.element(&scaled))
    }

    /// `Δ_c g = exp(δ_c log g)`.
    pub fn dilate_group(&self, c: f64, g: &GroupElement) -> Result<GroupElement> {
        let x = log_unipotent(g)?;
        exp_matrix(&self.dilate_algebra(c, &x)?)
    }

    /// Largest `‖δ_c[x, y] − [δ_c x, δ_c y]‖` over completed-basis pairs,
    /// relative to `1 + c^{2N}`.
    pub fn automorphism_defect(&self, c: f64) -> Result<f64> {
        let completed = self.basis.completed();
        let step = self.layers.iter().copied().max().unwrap_or(1) as i32;
        let scale = 1.0 + c.powi(2 * step);
        let mut worst = 0.0f64;
        for x in completed {
            for y in completed {
                let lhs = self.dilate_algebra(c, &bracket(x, y)?)?;
                let rhs = bracket(&self.dilate_algebra(c, x)?, &self.dilate_algebra(c, y)?)?;
                worst = worst.max((lhs - rhs).norm() / scale);
            }
        }
        Ok(worst)
    }
}
