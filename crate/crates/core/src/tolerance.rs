use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by the membership, automorphism and
/// closure checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Maximum `membership_defect` accepted for a group element.
    pub membership: f64,
    /// Grading and automorphism checks on basis pairs.
    pub algebra: f64,
    /// Orthogonality of `Ad` and of isometry candidates.
    pub isometry: f64,
    /// Nilpotency test on `g - I` (relative to the matrix scale).
    pub nilpotent: f64,
    /// Central-difference step for directional derivatives.
    pub derivative_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            membership: 1e-9,
            algebra: 1e-12,
            isometry: 1e-10,
            nilpotent: 1e-12,
            derivative_step: 1e-5,
        }
    }
}
