use crate::error::{Error, Result};

use super::word::{Word, HARD_MAX_WORD_LENGTH};

/// Element of the tensor algebra over `ℝ^dim`, truncated after `depth`.
/// Level `k` holds `dim^k` coefficients indexed lexicographically by word.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedTensor {
    dim: usize,
    depth: usize,
    levels: Vec<Vec<f64>>,
}

impl TruncatedTensor {
    /// The unit `1 ∈ T(ℝ^dim)`.
    pub fn unit(dim: usize, depth: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("tensor over an empty alphabet".into()));
        }
        if depth > HARD_MAX_WORD_LENGTH {
            return Err(Error::WordTooLong { len: depth, max: HARD_MAX_WORD_LENGTH });
        }
        let levels = (0..=depth)
            .map(|k| {
                let mut v = vec![0.0; dim.pow(k as u32)];
                if k == 0 {
                    v[0] = 1.0;
                }
                v
            })
            .collect();
        Ok(Self { dim, depth, levels })
    }

    /// Signature of a straight segment with displacement `delta`:
    /// level `k` is `delta^{⊗k} / k!`.
    pub fn segment(delta: &[f64], depth: usize) -> Result<Self> {
        let mut out = Self::unit(delta.len(), depth)?;
        for k in 1..=depth {
            let (lower, upper) = out.levels.split_at_mut(k);
            let prev = &lower[k - 1];
            let cur = &mut upper[0];
            let inv_k = 1.0 / k as f64;
            for (p, &a) in prev.iter().enumerate() {
                for (l, &x) in delta.iter().enumerate() {
                    cur[p * delta.len() + l] = a * x * inv_k;
                }
            }
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }

    /// Coefficient of `word`.
    pub fn get(&self, word: &Word) -> Result<f64> {
        word.check_alphabet(self.dim)?;
        if word.len() > self.depth {
            return Err(Error::WordTooLong { len: word.len(), max: self.depth });
        }
        Ok(self.levels[word.len()][word.tensor_index(self.dim)])
    }

    /// Truncated tensor product. This is Chen's relation when both factors
    /// are signatures of consecutive pieces of a path.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim || self.depth != other.depth {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut out = Self::unit(self.dim, self.depth)?;
        for k in 1..=self.depth {
            let target = &mut out.levels[k];
            for i in 0..=k {
                let a = &self.levels[i];
                let b = &other.levels[k - i];
                let width = b.len();
                for (p, &x) in a.iter().enumerate() {
                    if x == 0.0 {
                        continue;
                    }
                    let row = &mut target[p * width..(p + 1) * width];
                    for (slot, &y) in row.iter_mut().zip(b) {
                        *slot += x * y;
                    }
                }
            }
        }
        Ok(out)
    }
}
