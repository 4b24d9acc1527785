use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::AlgebraBasis;
use crate::error::{Error, Result};

/// JSON form of a basis: either a built-in family (with its size
/// parameter) or `custom` with row-major generators.
///
/// ```json
/// {"family": "custom", "generators": [[0,1,0, 0,0,0, 0,0,0], [0,0,0, 0,0,1, 0,0,0]],
///  "grading": [1, 1, 2]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisDocument {
    pub family: String,
    /// Size parameter of `abelian`, `heisenberg_n` and `free_step2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<Vec<f64>>>,
    /// Layer of each element of the completed basis (generators first,
    /// then brackets in order of discovery).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grading: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    #[serde(default)]
    pub orthonormal: bool,
}

impl BasisDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("basis document serializes")
    }

    pub fn build(&self) -> Result<AlgebraBasis> {
        if self.family != "custom" {
            if self.generators.is_some() || self.grading.is_some() {
                return Err(Error::Parse(format!(
                    "built-in family '{}' takes no generators or grading",
                    self.family
                )));
            }
            let name = match self.size {
                Some(k) => format!("{}:{k}", self.family),
                None => self.family.clone(),
            };
            return AlgebraBasis::by_name(&name);
        }
        let rows = self
            .generators
            .as_ref()
            .ok_or_else(|| Error::Parse("custom basis needs generators".into()))?;
        let generators = rows
            .iter()
            .map(|flat| {
                let n = (flat.len() as f64).sqrt().round() as usize;
                if n * n != flat.len() || n == 0 {
                    return Err(Error::Parse(format!(
                        "generator with {} entries is not a square matrix",
                        flat.len()
                    )));
                }
                Ok(DMatrix::from_row_slice(n, n, flat))
            })
            .collect::<Result<Vec<_>>>()?;
        AlgebraBasis::custom(generators, self.grading.clone(), self.step, self.orthonormal)
    }
}
