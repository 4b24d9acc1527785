//! Matrix Lie algebra and group primitives.
//!
//! Algebra elements are plain `DMatrix<f64>`; group elements wrap one in
//! [`GroupElement`]. Everything here is immutable once built.

mod basis;
mod dilation;
mod document;

use std::ops::Mul;

use nalgebra::DMatrix;

pub use basis::{AlgebraBasis, Family};
pub use dilation::DilationSpec;
pub use document::BasisDocument;

use crate::error::{Error, Result};
use crate::signature::Word;

/// An element of a matrix Lie group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement(DMatrix<f64>);

impl GroupElement {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        Self(matrix)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn inverse(&self) -> Result<GroupElement> {
        self.0.clone().try_inverse().map(GroupElement).ok_or(Error::Singular)
    }

    /// Frobenius distance to `other`.
    pub fn distance(&self, other: &GroupElement) -> f64 {
        (&self.0 - &other.0).norm()
    }
}

impl Mul for &GroupElement {
    type Output = GroupElement;

    fn mul(self, rhs: &GroupElement) -> GroupElement {
        GroupElement(&self.0 * &rhs.0)
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;

    fn mul(self, rhs: GroupElement) -> GroupElement {
        GroupElement(self.0 * rhs.0)
    }
}

fn check_square_pair(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.nrows() });
    }
    Ok(())
}

/// `[a, b] = ab − ba`.
pub fn bracket(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square_pair(a, b)?;
    Ok(a * b - b * a)
}

/// Right-nested commutator `V_I = [V_{i_1}, [V_{i_2}, ..., [V_{i_{k-1}}, V_{i_k}]...]]`.
pub fn iterated_commutator(word: &Word, basis: &AlgebraBasis) -> Result<DMatrix<f64>> {
    word.check_alphabet(basis.len())?;
    let letters = word.letters();
    let (&last, rest) = letters.split_last().ok_or(Error::EmptyWord)?;
    rest.iter().rev().try_fold(basis.generator(last).clone(), |acc, &l| {
        bracket(basis.generator(l), &acc)
    })
}

/// Powers `a, a², ...` up to order `n`; `Some(k)` when `a^k` is exactly 0.
fn nilpotency_index(a: &DMatrix<f64>) -> Option<usize> {
    let n = a.nrows();
    if a.iter().all(|&x| x == 0.0) {
        return Some(1);
    }
    // Strictly triangular matrices are nilpotent of index at most n.
    let strictly_upper = (0..n).all(|i| (0..=i).all(|j| a[(i, j)] == 0.0));
    let strictly_lower = (0..n).all(|i| (i..n).all(|j| a[(i, j)] == 0.0));
    if strictly_upper || strictly_lower {
        return Some(n);
    }
    None
}

/// Matrix exponential.
///
/// Strictly triangular (hence nilpotent) inputs use the exact finite series
/// `Σ_{k<n} a^k/k!`; other inputs go through scaling and squaring with a
/// Padé approximant.
pub fn exp_matrix(a: &DMatrix<f64>) -> Result<GroupElement> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = a.nrows();
    match nilpotency_index(a) {
        Some(order) => {
            let mut out = DMatrix::identity(n, n);
            let mut term = DMatrix::identity(n, n);
            for k in 1..=order {
                term = &term * a / k as f64;
                if term.iter().all(|&x| x == 0.0) {
                    break;
                }
                out += &term;
            }
            Ok(GroupElement(out))
        }
        None => Ok(GroupElement(a.exp())),
    }
}

/// Logarithm of a unipotent matrix by the terminating series
/// `Σ_{k<n} (−1)^{k+1} (g − I)^k / k`.
pub fn log_unipotent(g: &GroupElement) -> Result<DMatrix<f64>> {
    let m = g.matrix();
    let n = m.nrows();
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let nil = m - DMatrix::<f64>::identity(n, n);
    let scale = 1.0 + nil.norm();
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut out = DMatrix::zeros(n, n);
    for k in 1..=n {
        power = &power * &nil;
        if k < n {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            out += &power * (sign / k as f64);
        }
    }
    // (g - I)^n vanishes exactly when g - I is nilpotent.
    if power.norm() > 1e-12 * scale.powi(n as i32) {
        return Err(Error::NotUnipotent);
    }
    Ok(out)
}

/// `Ad_g x = g x g^{-1}`.
pub fn adjoint(g: &GroupElement, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square_pair(g.matrix(), x)?;
    let inv = g.inverse()?;
    Ok(g.matrix() * x * inv.matrix())
}

/// See [`AlgebraBasis::membership_defect`].
pub fn membership_defect(basis: &AlgebraBasis, g: &GroupElement) -> f64 {
    basis.membership_defect(g)
}

#[cfg(test)]
mod tests;
