//! Words, iterated integrals of the piecewise-linear driver, the `Λ_I`
//! coefficients of the continuous BCH formula, and the resulting closed-form
//! flow on nilpotent groups.

mod tensor;
mod word;

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::export::{self, io};
use crate::fbm::FbmSample;
use crate::liegroup::{exp_matrix, iterated_commutator, AlgebraBasis, GroupElement};

pub use tensor::TruncatedTensor;
pub use word::{Word, HARD_MAX_WORD_LENGTH};

/// Default bound on word length (24 permutations per word).
pub const DEFAULT_MAX_WORD_LENGTH: usize = 4;

fn check_permutation(sigma: &[usize]) -> Result<()> {
    let mut seen = vec![false; sigma.len()];
    for &s in sigma {
        if s >= sigma.len() || std::mem::replace(&mut seen[s], true) {
            return Err(Error::NotPermutation(sigma.to_vec()));
        }
    }
    Ok(())
}

/// Number of descents `#{j : σ(j) > σ(j+1)}` of a 0-based permutation.
pub fn descent_count(sigma: &[usize]) -> Result<usize> {
    check_permutation(sigma)?;
    Ok(sigma.windows(2).filter(|w| w[0] > w[1]).count())
}

/// Inverse of a 0-based permutation.
pub fn inverse_permutation(sigma: &[usize]) -> Result<Vec<usize>> {
    check_permutation(sigma)?;
    let mut inv = vec![0; sigma.len()];
    for (j, &s) in sigma.iter().enumerate() {
        inv[s] = j;
    }
    Ok(inv)
}

/// All permutations of `0..k` in lexicographic order.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (0..k).collect();
    let mut out = vec![current.clone()];
    loop {
        let Some(i) = (1..k).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..k).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
        out.push(current.clone());
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Weight `(−1)^e / (k² C(k−1, e))` of a permutation with `e` descents.
fn lambda_weight(k: usize, e: usize) -> f64 {
    let sign = if e % 2 == 0 { 1.0 } else { -1.0 };
    sign / ((k * k) as f64 * binomial(k - 1, e))
}

/// Running signatures of the interpolated driver at every grid point.
pub fn signature_path(sample: &FbmSample, depth: usize) -> Result<Vec<TruncatedTensor>> {
    let mut current = TruncatedTensor::unit(sample.dim(), depth)?;
    let mut out = Vec::with_capacity(sample.grid().len());
    out.push(current.clone());
    for k in 0..sample.grid().intervals() {
        current = current.mul(&TruncatedTensor::segment(&sample.increment(k), depth)?)?;
        out.push(current.clone());
    }
    Ok(out)
}

/// Iterated integrals `∫_{Δ^k[0,t]} dB^I` of the interpolated driver, for all
/// words up to `depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureTable {
    horizon: f64,
    tensor: TruncatedTensor,
}

impl SignatureTable {
    pub fn new(sample: &FbmSample, t: f64, depth: usize) -> Result<Self> {
        let last = sample.grid().index_of(t)?;
        let mut tensor = TruncatedTensor::unit(sample.dim(), depth)?;
        for k in 0..last {
            tensor = tensor.mul(&TruncatedTensor::segment(&sample.increment(k), depth)?)?;
        }
        Ok(Self { horizon: sample.grid().points()[last], tensor })
    }

    pub fn from_tensor(horizon: f64, tensor: TruncatedTensor) -> Self {
        Self { horizon, tensor }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn depth(&self) -> usize {
        self.tensor.depth()
    }

    pub fn dim(&self) -> usize {
        self.tensor.dim()
    }

    pub fn tensor(&self) -> &TruncatedTensor {
        &self.tensor
    }

    pub fn value(&self, word: &Word) -> Result<f64> {
        self.tensor.get(word)
    }

    /// `Λ_I = Σ_σ (−1)^{e(σ)} / (k² C(k−1, e(σ))) ∫ dB^{σ⁻¹·I}`.
    pub fn lambda(&self, word: &Word) -> Result<f64> {
        let k = word.len();
        if k > self.depth() {
            return Err(Error::WordTooLong { len: k, max: self.depth() });
        }
        word.check_alphabet(self.dim())?;
        permutations(k).iter().try_fold(0.0, |acc, sigma| {
            let e = descent_count(sigma)?;
            let permuted = word.permuted(&inverse_permutation(sigma)?);
            Ok(acc + lambda_weight(k, e) * self.tensor.get(&permuted)?)
        })
    }

    /// `½ (∫ B^i dB^j − B^j dB^i)` for 0-based letters.
    pub fn levy_area(&self, i: usize, j: usize) -> Result<f64> {
        if i == j {
            return Err(Error::InvalidArgument(format!(
                "Lévy area needs two distinct letters, got {} twice",
                i + 1
            )));
        }
        let ij = self.value(&Word::new(vec![i, j])?)?;
        let ji = self.value(&Word::new(vec![j, i])?)?;
        Ok(0.5 * (ij - ji))
    }

    /// Writes `word,value` rows for every word, by length then
    /// lexicographically.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = export::writer(out);
        w.write_record(["word", "value"]).map_err(io)?;
        for k in 1..=self.depth() {
            for word in Word::all(self.dim(), k) {
                let v = self.tensor.get(&word)?;
                w.write_record([word.to_string(), export::real(v)]).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }
}

fn check_length(word: &Word) -> Result<()> {
    if word.len() > DEFAULT_MAX_WORD_LENGTH {
        return Err(Error::WordTooLong { len: word.len(), max: DEFAULT_MAX_WORD_LENGTH });
    }
    Ok(())
}

/// `∫_{Δ^k[0,t]} dB^I` along the interpolated driver, for words up to the
/// default maximum length.
pub fn iterated_integral(word: &Word, sample: &FbmSample, t: f64) -> Result<f64> {
    check_length(word)?;
    SignatureTable::new(sample, t, word.len())?.value(word)
}

/// `Λ_I(B)_t`.
pub fn lambda_coefficient(word: &Word, sample: &FbmSample, t: f64) -> Result<f64> {
    check_length(word)?;
    SignatureTable::new(sample, t, word.len())?.lambda(word)
}

/// Lévy area of components `i`, `j` (0-based) at time `t`.
pub fn levy_area(sample: &FbmSample, i: usize, j: usize, t: f64) -> Result<f64> {
    SignatureTable::new(sample, t, 2)?.levy_area(i, j)
}

/// Precomputed data for `exp(Σ_{|I|≤N} Λ_I V_I)` on a nilpotent basis.
#[derive(Debug, Clone)]
pub struct NilpotentFlow {
    depth: usize,
    /// Nonzero `V_I` with, for each, the terms `(weight, index of σ⁻¹·I)`.
    terms: Vec<(usize, DMatrix<f64>, Vec<(f64, usize)>)>,
}

impl NilpotentFlow {
    /// The depth is the declared step of the basis, or `n − 1` for an
    /// undeclared unipotent `n × n` family.
    pub fn new(basis: &AlgebraBasis, max_word_length: usize) -> Result<Self> {
        if !basis.is_unipotent() {
            return Err(Error::NotNilpotent);
        }
        let depth = basis.step().unwrap_or(basis.dim_matrix() - 1);
        if depth > max_word_length.min(HARD_MAX_WORD_LENGTH) {
            return Err(Error::WordTooLong { len: depth, max: max_word_length });
        }
        let d = basis.len();
        let mut terms = Vec::new();
        for k in 1..=depth {
            let perms: Vec<(f64, Vec<usize>)> = permutations(k)
                .into_iter()
                .map(|s| {
                    let w = lambda_weight(k, descent_count(&s)?);
                    Ok((w, inverse_permutation(&s)?))
                })
                .collect::<Result<_>>()?;
            for word in Word::all(d, k) {
                let v = iterated_commutator(&word, basis)?;
                if v.iter().all(|&x| x == 0.0) {
                    continue;
                }
                let coeffs =
                    perms.iter().map(|(w, inv)| (*w, word.permuted(inv).tensor_index(d))).collect();
                terms.push((k, v, coeffs));
            }
        }
        Ok(Self { depth, terms })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `Σ Λ_I V_I` from a signature of sufficient depth.
    pub fn logarithm(&self, sig: &TruncatedTensor) -> Result<DMatrix<f64>> {
        if sig.depth() < self.depth {
            return Err(Error::WordTooLong { len: self.depth, max: sig.depth() });
        }
        let n = self.terms.first().map_or(0, |t| t.1.nrows());
        let mut out = DMatrix::zeros(n, n);
        for (k, v, coeffs) in &self.terms {
            let level = sig.level(*k);
            let lambda: f64 = coeffs.iter().map(|&(w, idx)| w * level[idx]).sum();
            out += v * lambda;
        }
        Ok(out)
    }

    pub fn element(&self, sig: &TruncatedTensor) -> Result<GroupElement> {
        exp_matrix(&self.logarithm(sig)?)
    }

    /// Closed-form flow at every grid point of the sample.
    pub fn along(&self, sample: &FbmSample) -> Result<Vec<GroupElement>> {
        signature_path(sample, self.depth)?.iter().map(|s| self.element(s)).collect()
    }
}

/// `exp(Σ_{k≤N} Σ_{|I|=k} Λ_I(B)_t V_I)` with `N` the step of the basis.
pub fn nilpotent_flow(
    sample: &FbmSample,
    basis: &AlgebraBasis,
    t: f64,
    max_word_length: usize,
) -> Result<GroupElement> {
    if sample.dim() != basis.len() {
        return Err(Error::DimensionMismatch { expected: basis.len(), got: sample.dim() });
    }
    let flow = NilpotentFlow::new(basis, max_word_length)?;
    let table = SignatureTable::new(sample, t, flow.depth())?;
    flow.element(table.tensor())
}
