use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{bracket, exp_matrix, log_unipotent, GroupElement};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Built-in families plus user-supplied bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Abelian,
    So3,
    Heisenberg1,
    HeisenbergN,
    FreeStep2,
    Custom,
}

/// Which membership test applies to the group generated by a basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GroupKind {
    Orthogonal,
    Unipotent,
    Unchecked,
}

/// Generators `V_1..V_d` of a matrix Lie algebra, completed to a basis of
/// the Lie algebra they generate.
///
/// The completed basis starts with the generators; further elements are
/// commutators. Coordinates always refer to the completed basis.
#[derive(Debug, Clone)]
pub struct AlgebraBasis {
    family: Family,
    name: String,
    dim_matrix: usize,
    generators: Vec<DMatrix<f64>>,
    completed: Vec<DMatrix<f64>>,
    layers: Option<Vec<usize>>,
    step: Option<usize>,
    orthonormal: bool,
    kind: GroupKind,
    /// Least-squares map from `vec(x)` to completed-basis coordinates.
    coord_map: DMatrix<f64>,
    tol: Tolerances,
}

fn unit(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = 1.0;
    m
}

fn vectorize(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

impl AlgebraBasis {
    /// `(R^d, +)` in the unipotent model `V_i = E_{0,i}` on `R^{d+1}`.
    pub fn abelian(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("abelian family needs d >= 1".into()));
        }
        let n = d + 1;
        let gens: Vec<_> = (1..=d).map(|i| unit(n, 0, i)).collect();
        Self::build(Family::Abelian, format!("abelian:{d}"), gens.clone(), gens, Some(vec![1; d]), true)
    }

    /// `so(3)` with `V_1 = E_12 - E_21`, `V_2 = E_23 - E_32`, `V_3 = E_13 - E_31`.
    pub fn so3() -> Self {
        let skew = |i, j| unit(3, i, j) - unit(3, j, i);
        let gens = vec![skew(0, 1), skew(1, 2), skew(0, 2)];
        Self::build(Family::So3, "so3".into(), gens.clone(), gens, None, true)
            .expect("so(3) basis is valid")
    }

    /// Heisenberg algebra with `D_1 = E_12`, `D_2 = E_23`; `D_3 = [D_1, D_2] = E_13`.
    pub fn heisenberg1() -> Self {
        let gens = vec![unit(3, 0, 1), unit(3, 1, 2)];
        let completed = vec![gens[0].clone(), gens[1].clone(), unit(3, 0, 2)];
        Self::build(Family::Heisenberg1, "heisenberg1".into(), gens, completed, Some(vec![1, 1, 2]), false)
            .expect("Heisenberg basis is valid")
    }

    /// `h_n` on `R^{n+2}`: `X_i = E_{0,i}`, `Y_i = E_{i,n+1}`, `Z = E_{0,n+1}`,
    /// with `[X_i, Y_j] = δ_ij Z`.
    pub fn heisenberg_n(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("heisenberg_n needs n >= 1".into()));
        }
        let size = n + 2;
        let mut gens: Vec<_> = (1..=n).map(|i| unit(size, 0, i)).collect();
        gens.extend((1..=n).map(|i| unit(size, i, n + 1)));
        let mut completed = gens.clone();
        completed.push(unit(size, 0, n + 1));
        let mut layers = vec![1; 2 * n];
        layers.push(2);
        Self::build(Family::HeisenbergN, format!("heisenberg_n:{n}"), gens, completed, Some(layers), false)
    }

    /// Free step-2 nilpotent algebra on `d` generators, embedded faithfully
    /// as one 3×3 Heisenberg block per pair `i < j`.
    pub fn free_step2(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument("free_step2 needs d >= 2".into()));
        }
        let pairs: Vec<(usize, usize)> =
            (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
        let size = 3 * pairs.len();
        let block = |b: usize, i: usize, j: usize| unit(size, 3 * b + i, 3 * b + j);
        let gens: Vec<DMatrix<f64>> = (0..d)
            .map(|k| {
                pairs.iter().enumerate().fold(DMatrix::zeros(size, size), |acc, (b, &(i, j))| {
                    if k == i {
                        acc + block(b, 0, 1)
                    } else if k == j {
                        acc + block(b, 1, 2)
                    } else {
                        acc
                    }
                })
            })
            .collect();
        let mut completed = gens.clone();
        completed.extend((0..pairs.len()).map(|b| block(b, 0, 2)));
        let mut layers = vec![1; d];
        layers.extend(std::iter::repeat_n(2, pairs.len()));
        Self::build(Family::FreeStep2, format!("free_step2:{d}"), gens, completed, Some(layers), false)
    }

    /// A user basis. The Lie algebra generated by `generators` is completed
    /// by right-nested brackets. `grading`, when given, assigns a layer to
    /// each element of the completed basis and is verified.
    pub fn custom(
        generators: Vec<DMatrix<f64>>,
        grading: Option<Vec<usize>>,
        step: Option<usize>,
        orthonormal: bool,
    ) -> Result<Self> {
        let n = generators.first().map(|g| g.nrows()).ok_or_else(|| {
            Error::InvalidArgument("basis needs at least one generator".into())
        })?;
        for g in &generators {
            if g.nrows() != n || g.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: g.nrows().max(g.ncols()) });
            }
        }
        let completed = complete(&generators)?;
        let mut basis = Self::build(Family::Custom, "custom".into(), generators, completed, grading, orthonormal)?;
        if step.is_some() {
            basis.step = step;
        }
        Ok(basis)
    }

    /// Built-in basis by name: `abelian[:d]`, `so3`, `heisenberg1`,
    /// `heisenberg_n[:n]`, `free_step2[:d]`.
    pub fn by_name(name: &str) -> Result<Self> {
        let (family, arg) = match name.split_once(':') {
            Some((f, a)) => {
                let v = a.trim().parse::<usize>().map_err(|_| {
                    Error::InvalidArgument(format!("bad parameter in basis name '{name}'"))
                })?;
                (f.trim(), Some(v))
            }
            None => (name.trim(), None),
        };
        match family {
            "abelian" => Self::abelian(arg.unwrap_or(2)),
            "so3" => Ok(Self::so3()),
            "heisenberg1" => Ok(Self::heisenberg1()),
            "heisenberg_n" => Self::heisenberg_n(arg.unwrap_or(1)),
            "free_step2" => Self::free_step2(arg.unwrap_or(3)),
            other => Err(Error::InvalidArgument(format!("unknown basis '{other}'"))),
        }
    }

    fn build(
        family: Family,
        name: String,
        generators: Vec<DMatrix<f64>>,
        completed: Vec<DMatrix<f64>>,
        layers: Option<Vec<usize>>,
        orthonormal: bool,
    ) -> Result<Self> {
        let n = generators[0].nrows();
        if generators.iter().chain(&completed).any(|m| m.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite);
        }
        let columns: Vec<DVector<f64>> = completed.iter().map(vectorize).collect();
        let a = DMatrix::from_columns(&columns);
        let svd = a.clone().svd(false, false);
        let max_sv = svd.singular_values.max();
        let min_sv = svd.singular_values.min();
        if !(min_sv > 1e-10 * max_sv) {
            return Err(Error::InvalidArgument("generators are linearly dependent".into()));
        }
        let gram = a.transpose() * &a;
        let coord_map = gram
            .try_inverse()
            .ok_or(Error::Singular)?
            * a.transpose();
        let kind = if completed.iter().all(|m| (m + m.transpose()).iter().all(|&x| x == 0.0)) {
            GroupKind::Orthogonal
        } else if completed
            .iter()
            .all(|m| (0..n).all(|i| (0..=i).all(|j| m[(i, j)] == 0.0)))
        {
            GroupKind::Unipotent
        } else {
            GroupKind::Unchecked
        };
        if let Some(l) = &layers {
            if l.len() != completed.len() {
                return Err(Error::InvalidArgument(format!(
                    "grading has {} entries but the completed basis has {}",
                    l.len(),
                    completed.len()
                )));
            }
            if l.contains(&0) {
                return Err(Error::InvalidArgument("layers are numbered from 1".into()));
            }
        }
        let step = layers.as_ref().and_then(|l| l.iter().copied().max());
        let basis = Self {
            family,
            name,
            dim_matrix: n,
            generators,
            completed,
            layers,
            step,
            orthonormal,
            kind,
            coord_map,
            tol: Tolerances::default(),
        };
        if basis.layers.is_some() {
            basis.check_grading()?;
        }
        Ok(basis)
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim_matrix(&self) -> usize {
        self.dim_matrix
    }

    /// Number of generators `d`.
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generators(&self) -> &[DMatrix<f64>] {
        &self.generators
    }

    pub fn generator(&self, i: usize) -> &DMatrix<f64> {
        &self.generators[i]
    }

    /// Basis of the generated Lie algebra, generators first.
    pub fn completed(&self) -> &[DMatrix<f64>] {
        &self.completed
    }

    /// Layer of each completed-basis element, when graded.
    pub fn layers(&self) -> Option<&[usize]> {
        self.layers.as_deref()
    }

    pub fn is_graded(&self) -> bool {
        self.layers.is_some()
    }

    /// Nilpotency step, when declared.
    pub fn step(&self) -> Option<usize> {
        self.step
    }

    /// Whether the coordinate dot product is an `Ad`-invariant inner product.
    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    /// Whether the generators span the whole Lie algebra.
    pub fn spans_algebra(&self) -> bool {
        self.generators.len() == self.completed.len()
    }

    pub fn is_unipotent(&self) -> bool {
        self.kind == GroupKind::Unipotent
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::identity(self.dim_matrix)
    }

    /// `Σ_i x_i V_i` over the generators.
    pub fn combine(&self, coeffs: &[f64]) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(self.dim_matrix, self.dim_matrix);
        for (c, v) in coeffs.iter().zip(&self.generators) {
            if *c != 0.0 {
                acc += v * *c;
            }
        }
        acc
    }

    /// Element with the given completed-basis coordinates.
    pub fn element(&self, coords: &[f64]) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(self.dim_matrix, self.dim_matrix);
        for (c, v) in coords.iter().zip(&self.completed) {
            acc += v * *c;
        }
        acc
    }

    /// Least-squares coordinates of `x` in the completed basis.
    pub fn coordinates(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        if x.nrows() != self.dim_matrix || x.ncols() != self.dim_matrix {
            return Err(Error::DimensionMismatch { expected: self.dim_matrix, got: x.nrows() });
        }
        Ok(&self.coord_map * vectorize(x))
    }

    /// Frobenius distance from `x` to the span of the completed basis.
    pub fn span_residual(&self, x: &DMatrix<f64>) -> Result<f64> {
        let c = self.coordinates(x)?;
        Ok((x - self.element(c.as_slice())).norm())
    }

    /// Checks `[𝒱_i, 𝒱_j] ⊆ 𝒱_{i+j}` on all completed-basis pairs.
    fn check_grading(&self) -> Result<()> {
        let layers = self.layers.as_ref().ok_or(Error::Ungraded)?;
        for (a, ea) in self.completed.iter().enumerate() {
            for (b, eb) in self.completed.iter().enumerate() {
                let br = bracket(ea, eb)?;
                let scale = 1.0 + ea.norm() * eb.norm();
                let target = layers[a] + layers[b];
                let coords = self.coordinates(&br)?;
                let residual = (&br - self.element(coords.as_slice())).norm();
                let stray = coords
                    .iter()
                    .zip(layers)
                    .filter(|(_, &l)| l != target)
                    .map(|(c, _)| c.abs())
                    .fold(0.0, f64::max);
                if residual > self.tol.algebra * scale || stray > self.tol.algebra * scale {
                    return Err(Error::InvalidArgument(format!(
                        "grading violated by the bracket of basis elements {} and {}",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Distance of `g` from the group generated by this basis.
    ///
    /// Orthogonal groups: `‖gᵀg − I‖_F + |det g − 1|`. Unipotent groups: size
    /// of the strictly lower part, diagonal deviation from 1, and the part of
    /// `log g` outside the Lie algebra. Other custom bases are unchecked.
    pub fn membership_defect(&self, g: &GroupElement) -> f64 {
        let m = g.matrix();
        let n = self.dim_matrix;
        if m.nrows() != n || m.ncols() != n || m.iter().any(|x| !x.is_finite()) {
            return f64::INFINITY;
        }
        match self.kind {
            GroupKind::Orthogonal => {
                let id = DMatrix::<f64>::identity(n, n);
                (m.transpose() * m - id).norm() + (m.determinant() - 1.0).abs()
            }
            GroupKind::Unipotent => {
                let mut lower = 0.0;
                let mut diag = 0.0;
                let mut upper = DMatrix::<f64>::identity(n, n);
                for i in 0..n {
                    for j in 0..n {
                        let x = m[(i, j)];
                        match i.cmp(&j) {
                            std::cmp::Ordering::Greater => lower += x * x,
                            std::cmp::Ordering::Equal => diag += (x - 1.0).powi(2),
                            std::cmp::Ordering::Less => upper[(i, j)] = x,
                        }
                    }
                }
                let off_algebra = log_unipotent(&GroupElement::new(upper))
                    .and_then(|x| self.span_residual(&x))
                    .unwrap_or(f64::INFINITY);
                lower.sqrt() + diag.sqrt() + off_algebra
            }
            GroupKind::Unchecked => 0.0,
        }
    }

    /// Matrix of `Ad_g` in completed-basis coordinates: column `k` holds the
    /// coordinates of `g E_k g^{-1}`.
    pub fn adjoint_matrix(&self, g: &GroupElement) -> Result<DMatrix<f64>> {
        let inv = g.inverse()?;
        let m = self.completed.len();
        let mut out = DMatrix::zeros(m, m);
        for (k, e) in self.completed.iter().enumerate() {
            let conj = g.matrix() * e * inv.matrix();
            out.set_column(k, &self.coordinates(&conj)?);
        }
        Ok(out)
    }

    /// `exp(Σ x_i V_i)` for generator coefficients `x`.
    pub fn exp_combination(&self, coeffs: &[f64]) -> Result<GroupElement> {
        exp_matrix(&self.combine(coeffs))
    }
}

/// Closure of `generators` under right-nested brackets `[V_i, ·]`.
fn complete(generators: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
    let n = generators[0].nrows();
    let mut basis: Vec<DMatrix<f64>> = Vec::new();
    let mut ortho: Vec<DVector<f64>> = Vec::new();
    let mut try_add = |m: DMatrix<f64>, basis: &mut Vec<DMatrix<f64>>| -> bool {
        let mut v = vectorize(&m);
        let scale = v.norm();
        if scale == 0.0 {
            return false;
        }
        for q in &ortho {
            let c = q.dot(&v);
            v -= q * c;
        }
        let r = v.norm();
        if r <= 1e-10 * scale {
            return false;
        }
        ortho.push(v / r);
        basis.push(m);
        true
    };
    for g in generators {
        if !try_add(g.clone(), &mut basis) {
            return Err(Error::InvalidArgument("generators are linearly dependent".into()));
        }
    }
    let mut frontier: Vec<DMatrix<f64>> = generators.to_vec();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for g in generators {
            for f in &frontier {
                let br = bracket(g, f)?;
                if try_add(br.clone(), &mut basis) {
                    next.push(br);
                }
            }
        }
        if basis.len() > n * n {
            break;
        }
        frontier = next;
    }
    Ok(basis)
}
