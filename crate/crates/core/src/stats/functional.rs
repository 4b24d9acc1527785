use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liegroup::{log_unipotent, AlgebraBasis, GroupElement};

/// Finite-difference step for directional derivatives.
pub const DERIVATIVE_STEP: f64 = 1e-5;

/// Scalar functionals of a group element. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    /// Matrix entry `X[row, col]`.
    Entry { row: usize, col: usize },
    Trace,
    /// Coordinate of `log X` in the completed basis (unipotent families).
    LogCoordinate(usize),
    Constant(f64),
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::Entry { row, col } => write!(f, "entry({},{})", row + 1, col + 1),
            Functional::Trace => write!(f, "trace"),
            Functional::LogCoordinate(i) => write!(f, "log_coordinate({})", i + 1),
            Functional::Constant(c) => write!(f, "constant({c})"),
        }
    }
}

impl std::str::FromStr for Functional {
    type Err = Error;

    /// Parses `entry:i,j` (1-based), `trace`, `log:i` (1-based) or
    /// `constant:c`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown functional '{s}'"));
        let one_based = |x: &str| match x.trim().parse::<usize>() {
            Ok(v) if v >= 1 => Ok(v - 1),
            _ => Err(bad()),
        };
        match s.split_once(':') {
            None if s == "trace" => Ok(Functional::Trace),
            Some(("entry", rest)) => {
                let (r, c) = rest.split_once(',').ok_or_else(bad)?;
                Ok(Functional::Entry { row: one_based(r)?, col: one_based(c)? })
            }
            Some(("log", i)) => Ok(Functional::LogCoordinate(one_based(i)?)),
            Some(("constant", c)) => c.trim().parse().map(Functional::Constant).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

impl Functional {
    pub fn evaluate(&self, basis: &AlgebraBasis, g: &GroupElement) -> Result<f64> {
        let m = g.matrix();
        match *self {
            Functional::Entry { row, col } => {
                if row >= m.nrows() || col >= m.ncols() {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({},{}) outside a {}×{} matrix",
                        row + 1,
                        col + 1,
                        m.nrows(),
                        m.ncols()
                    )));
                }
                Ok(m[(row, col)])
            }
            Functional::Trace => Ok(m.trace()),
            Functional::LogCoordinate(i) => {
                if !basis.is_unipotent() {
                    return Err(Error::InvalidArgument(
                        "log coordinates need a unipotent family".into(),
                    ));
                }
                let coords = basis.coordinates(&log_unipotent(g)?)?;
                coords.get(i).copied().ok_or_else(|| {
                    Error::InvalidArgument(format!("no coordinate {} in a {}-dim algebra", i + 1, coords.len()))
                })
            }
            Functional::Constant(c) => Ok(c),
        }
    }

    /// `(V_i f)(g)` by central differences along `g exp(±ε V_i)`.
    pub fn derivative(&self, basis: &AlgebraBasis, g: &GroupElement, i: usize, eps: f64) -> Result<f64> {
        let mut coeffs = vec![0.0; basis.len()];
        coeffs[i] = eps;
        let plus = g * &basis.exp_combination(&coeffs)?;
        coeffs[i] = -eps;
        let minus = g * &basis.exp_combination(&coeffs)?;
        Ok((self.evaluate(basis, &plus)? - self.evaluate(basis, &minus)?) / (2.0 * eps))
    }

    /// `((V_1 f)(g), ..., (V_d f)(g))`.
    pub fn gradient(&self, basis: &AlgebraBasis, g: &GroupElement, eps: f64) -> Result<Vec<f64>> {
        (0..basis.len()).map(|i| self.derivative(basis, g, i, eps)).collect()
    }

    /// `a = sqrt(Σ_i (V_i f)(1)²)`, the local scaling constant.
    pub fn scaling_constant(&self, basis: &AlgebraBasis) -> Result<f64> {
        let grad = self.gradient(basis, &basis.identity(), DERIVATIVE_STEP)?;
        Ok(grad.iter().map(|x| x * x).sum::<f64>().sqrt())
    }
}
