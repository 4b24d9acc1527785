//! Monte Carlo law comparisons: stationary increments, isometry invariance,
//! local self-similarity and global Carnot scaling of the group-valued flow.
//!
//! "Equal in law" is checked through the means and variances of a fixed
//! family of scalar functionals, each with a bootstrap standard error. Two
//! batches agree when every standardized difference stays below 4.

mod functional;
mod moments;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::{FbmSample, FbmSampler, HurstParam, TimeGrid};
use crate::integrator::{integrate, shifted_flow, Side};
use crate::liegroup::{bracket, log_unipotent, AlgebraBasis, DilationSpec, GroupElement};
use crate::rng::derive_seed;
use crate::signature::signature_path;

pub use functional::{Functional, DERIVATIVE_STEP};
pub use moments::{
    compare_laws, ComponentMoments, LawComparison, MomentReport, MIN_COMPARISON_SAMPLES, SIGMA_THRESHOLD,
};

/// Default scales for the local (small-time) test.
pub const LOCAL_SCALES: [f64; 4] = [1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0];
/// Default scales for the global (Carnot) test.
pub const GLOBAL_SCALES: [f64; 3] = [0.25, 1.0, 4.0];

/// Monte Carlo batch settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    /// Paths per batch.
    pub paths: usize,
    pub seed: u64,
    /// Dyadic level of the simulation grid.
    pub level: u32,
    /// Bootstrap resamples per report.
    pub resamples: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { paths: 20_000, seed: 0, level: 6, resamples: 200 }
    }
}

/// Runs `f` on `paths` exact fBm samples drawn from the stream `seed`.
/// Results are in path order whatever the thread schedule.
pub fn run_batch<T, F>(
    h: HurstParam,
    grid: &TimeGrid,
    dim: usize,
    paths: usize,
    seed: u64,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&FbmSample) -> Result<T> + Sync,
{
    let sampler = FbmSampler::new(h, grid.clone())?;
    (0..paths)
        .into_par_iter()
        .map(|p| f(&sampler.sample_path(dim, seed, p as u64)))
        .collect()
}

fn entries(g: &GroupElement) -> Vec<f64> {
    let m = g.matrix();
    (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect()
}

fn entry_labels(n: usize) -> Vec<String> {
    (1..=n).flat_map(|i| (1..=n).map(move |j| format!("x{i}{j}"))).collect()
}

/// Two batches of one functional, their reports and the comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawTest {
    pub name: String,
    pub left: MomentReport,
    pub right: MomentReport,
    pub comparison: LawComparison,
}

impl LawTest {
    fn new(name: &str, labels: &[String], left: &[Vec<f64>], right: &[Vec<f64>], mc: &McConfig) -> Result<Self> {
        let left = MomentReport::from_rows(name, labels, left, mc.resamples, derive_seed(mc.seed, 0xb0))?;
        let right = MomentReport::from_rows(name, labels, right, mc.resamples, derive_seed(mc.seed, 0xb1))?;
        let comparison = compare_laws(&left, &right)?;
        Ok(Self { name: name.to_string(), left, right, comparison })
    }

    pub fn passed(&self) -> bool {
        self.comparison.pass
    }
}

/// Which quantity the stationarity test compares with `X_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMode {
    /// `X_s^{-1} X_{s+t}`.
    LeftTranslated,
    /// `X_{s+t}` itself; a negative control.
    Untranslated,
}

/// Compares matrix entries of `X_s^{-1} X_{s+t}` with those of `X_t`, on a
/// dyadic grid over `[0, s + t]` with independent batches.
pub fn stationary_increments_test(
    basis: &AlgebraBasis,
    h: HurstParam,
    s: f64,
    t: f64,
    mc: &McConfig,
    mode: ShiftMode,
) -> Result<LawTest> {
    let grid = TimeGrid::dyadic(mc.level, s + t)?;
    let si = grid.index_of(s)?;
    let ti = grid.index_of(t)?;
    let d = basis.len();
    let shifted = run_batch(h, &grid, d, mc.paths, derive_seed(mc.seed, 1), |b| match mode {
        ShiftMode::LeftTranslated => Ok(entries(shifted_flow(b, basis, si)?.at(ti))),
        ShiftMode::Untranslated => Ok(entries(integrate(b, basis, Side::Left)?.at(si + ti))),
    })?;
    let direct = run_batch(h, &grid, d, mc.paths, derive_seed(mc.seed, 2), |b| {
        Ok(entries(integrate(b, basis, Side::Left)?.at(ti)))
    })?;
    LawTest::new("stationary increments", &entry_labels(basis.dim_matrix()), &shifted, &direct, mc)
}

/// A group morphism `Ψ` whose differential should be an isometry.
#[derive(Debug, Clone, PartialEq)]
pub enum Isometry {
    Identity,
    /// `X ↦ g X g^{-1}`.
    Conjugation(GroupElement),
    /// The morphism whose differential maps `V_j ↦ Σ_i L_{ij} V_i`; only for
    /// bases whose generators span the algebra.
    LinearMap(DMatrix<f64>),
}

fn orthogonality_defect(l: &DMatrix<f64>) -> f64 {
    (l.transpose() * l - DMatrix::identity(l.ncols(), l.ncols())).norm()
}

impl Isometry {
    /// Checks that the differential is orthogonal in the generator
    /// coordinates (to 1e-10) and, for linear maps, a Lie algebra morphism.
    pub fn validate(&self, basis: &AlgebraBasis) -> Result<()> {
        let tol = basis.tolerances().isometry;
        match self {
            Isometry::Identity => Ok(()),
            Isometry::Conjugation(g) => {
                let defect = basis.membership_defect(g);
                if defect > basis.tolerances().membership {
                    return Err(Error::InvalidArgument(format!(
                        "conjugating element is off the group (defect {defect:.3e})"
                    )));
                }
                let ad = basis.adjoint_matrix(g)?;
                let defect = orthogonality_defect(&ad);
                if defect > tol || !basis.is_orthonormal() {
                    return Err(Error::NotIsometry(defect));
                }
                Ok(())
            }
            Isometry::LinearMap(l) => {
                let d = basis.len();
                if l.nrows() != d || l.ncols() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: l.nrows() });
                }
                let defect = orthogonality_defect(l);
                if defect > tol {
                    return Err(Error::NotIsometry(defect));
                }
                if !basis.spans_algebra() {
                    return Err(Error::InvalidArgument(
                        "linear maps need generators that span the algebra".into(),
                    ));
                }
                let image = self.image_generators(basis);
                for i in 0..d {
                    for j in 0..d {
                        let lhs = bracket(&image[i], &image[j])?;
                        let rhs = basis.combine(
                            (l * basis.coordinates(&bracket(basis.generator(i), basis.generator(j))?)?).as_slice(),
                        );
                        if (lhs - rhs).norm() > basis.tolerances().algebra.max(tol) {
                            return Err(Error::InvalidArgument(
                                "linear map is not a Lie algebra morphism".into(),
                            ));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    fn image_generators(&self, basis: &AlgebraBasis) -> Vec<DMatrix<f64>> {
        match self {
            Isometry::LinearMap(l) => {
                (0..basis.len()).map(|j| basis.combine(l.column(j).as_slice())).collect()
            }
            _ => basis.generators().to_vec(),
        }
    }

    /// `Ψ` applied along the flow driven by `sample`, at grid index `k`.
    fn apply(&self, basis: &AlgebraBasis, image: &AlgebraBasis, sample: &FbmSample, k: usize) -> Result<GroupElement> {
        match self {
            Isometry::Identity => Ok(integrate(sample, basis, Side::Left)?.at(k).clone()),
            Isometry::Conjugation(g) => {
                let x = integrate(sample, basis, Side::Left)?;
                Ok(&(g * x.at(k)) * &g.inverse()?)
            }
            Isometry::LinearMap(_) => Ok(integrate(sample, image, Side::Left)?.at(k).clone()),
        }
    }
}

/// Compares entries of `Ψ(X_t)` with those of `X_t`.
pub fn isometry_invariance_test(
    basis: &AlgebraBasis,
    psi: &Isometry,
    h: HurstParam,
    t: f64,
    mc: &McConfig,
) -> Result<LawTest> {
    psi.validate(basis)?;
    let image = AlgebraBasis::custom(psi.image_generators(basis), None, basis.step(), basis.is_orthonormal())?;
    let grid = TimeGrid::dyadic(mc.level, t)?;
    let last = grid.intervals();
    let d = basis.len();
    let mapped = run_batch(h, &grid, d, mc.paths, derive_seed(mc.seed, 3), |b| {
        Ok(entries(&psi.apply(basis, &image, b, last)?))
    })?;
    let direct = run_batch(h, &grid, d, mc.paths, derive_seed(mc.seed, 4), |b| {
        Ok(entries(integrate(b, basis, Side::Left)?.at(last)))
    })?;
    LawTest::new("isometry invariance", &entry_labels(basis.dim_matrix()), &mapped, &direct, mc)
}

/// Log–log regression of a per-scale statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub scales: Vec<f64>,
    pub statistic: Vec<f64>,
    pub statistic_se: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Euclidean norm of the regression residuals in log space.
    pub residual: f64,
    /// Scaling constant estimated at the smallest scale, when relevant.
    pub a_estimate: Option<f64>,
    /// Scaling constant from finite differences at the identity.
    pub a_oracle: Option<f64>,
}

fn check_scales(scales: &[f64]) -> Result<()> {
    if scales.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 scales, got {}", scales.len())));
    }
    if scales.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
        return Err(Error::InvalidArgument("scales must be positive".into()));
    }
    let mut sorted = scales.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("scales must be distinct".into()));
    }
    Ok(())
}

impl ScalingFit {
    fn fit(scales: Vec<f64>, statistic: Vec<f64>, statistic_se: Vec<f64>) -> Result<Self> {
        check_scales(&scales)?;
        if statistic.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::NonFinite);
        }
        let xs: Vec<f64> = scales.iter().map(|c| c.ln()).collect();
        let ys: Vec<f64> = statistic.iter().map(|v| v.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let residual =
            xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>().sqrt();
        Ok(Self { scales, statistic, statistic_se, slope, intercept, residual, a_estimate: None, a_oracle: None })
    }
}

/// Estimates `Var[f(X_{ct}) − f(1)]` for each scale `c`, fits its exponent
/// in `c` (expected `2h`) and estimates `a` from
/// `Var[c^{−h}(f(X_{ct}) − f(1))] ≈ a² t^{2h}` at the smallest scale.
pub fn local_selfsimilarity_test(
    basis: &AlgebraBasis,
    f: &Functional,
    h: HurstParam,
    scales: &[f64],
    t: f64,
    mc: &McConfig,
) -> Result<ScalingFit> {
    check_scales(scales)?;
    let a_oracle = f.scaling_constant(basis)?;
    if a_oracle < 1e-8 {
        return Err(Error::DegenerateFunctional);
    }
    let f0 = f.evaluate(basis, &basis.identity())?;
    let mut stat = Vec::new();
    let mut se = Vec::new();
    for (ci, &c) in scales.iter().enumerate() {
        let grid = TimeGrid::dyadic(mc.level, c * t)?;
        let last = grid.intervals();
        let rows = run_batch(h, &grid, basis.len(), mc.paths, derive_seed(mc.seed, 100 + ci as u64), |b| {
            Ok(vec![f.evaluate(basis, integrate(b, basis, Side::Left)?.at(last))? - f0])
        })?;
        let report = MomentReport::from_rows(&f.to_string(), &["df".into()], &rows, mc.resamples, derive_seed(mc.seed, 150 + ci as u64))?;
        stat.push(report.components[0].variance);
        se.push(report.components[0].variance_se);
    }
    let (imin, cmin) = scales
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least three scales");
    let hv = h.value();
    let a_estimate = (stat[imin] * cmin.powf(-2.0 * hv)).sqrt() / t.powf(hv);
    let mut fit = ScalingFit::fit(scales.to_vec(), stat, se)?;
    fit.a_estimate = Some(a_estimate);
    fit.a_oracle = Some(a_oracle);
    Ok(fit)
}

/// Per-scale outcome of [`global_scaling_test`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleOutcome {
    pub c: f64,
    pub test: LawTest,
}

/// Compares coordinates of `log X_{ct}` with those of `δ_{c^h}(log X_t)`
/// for each `c`.
pub fn global_scaling_test(
    basis: &AlgebraBasis,
    h: HurstParam,
    cs: &[f64],
    t: f64,
    mc: &McConfig,
) -> Result<Vec<ScaleOutcome>> {
    let dil = DilationSpec::new(basis)?;
    let labels: Vec<String> = (1..=basis.completed().len()).map(|i| format!("y{i}")).collect();
    let coords = |g: &GroupElement| -> Result<Vec<f64>> {
        Ok(basis.coordinates(&log_unipotent(g)?)?.as_slice().to_vec())
    };
    let hv = h.value();
    cs.iter()
        .enumerate()
        .map(|(ci, &c)| {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidArgument(format!("scale {c} must be positive")));
            }
            let fine = TimeGrid::dyadic(mc.level, c * t)?;
            let base = TimeGrid::dyadic(mc.level, t)?;
            let last = base.intervals();
            let d = basis.len();
            let scaled = run_batch(h, &fine, d, mc.paths, derive_seed(mc.seed, 200 + 2 * ci as u64), |b| {
                coords(integrate(b, basis, Side::Left)?.at(last))
            })?;
            let dilated = run_batch(h, &base, d, mc.paths, derive_seed(mc.seed, 201 + 2 * ci as u64), |b| {
                dil.dilate_coordinates(c.powf(hv), &coords(integrate(b, basis, Side::Left)?.at(last))?)
            })?;
            let mc_c = McConfig { seed: derive_seed(mc.seed, 300 + ci as u64), ..*mc };
            Ok(ScaleOutcome { c, test: LawTest::new("global scaling", &labels, &scaled, &dilated, &mc_c)? })
        })
        .collect()
}

/// Fits the exponent of `Var(levy_area(t))` in `t` over the given grid
/// times of a 2-dimensional fBm on `[0, max t]`; expected `4h`.
pub fn levy_area_scaling(h: HurstParam, times: &[f64], mc: &McConfig) -> Result<ScalingFit> {
    check_scales(times)?;
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let grid = TimeGrid::dyadic(mc.level, horizon)?;
    let idx = times.iter().map(|&t| grid.index_of(t)).collect::<Result<Vec<_>>>()?;
    let rows = run_batch(h, &grid, 2, mc.paths, derive_seed(mc.seed, 5), |b| {
        let sig = signature_path(b, 2)?;
        // word (1,2) sits at index 1 and (2,1) at index 2 of level 2
        Ok(idx.iter().map(|&k| 0.5 * (sig[k].level(2)[1] - sig[k].level(2)[2])).collect())
    })?;
    let labels: Vec<String> = times.iter().map(|t| format!("t={t}")).collect();
    let report = MomentReport::from_rows("levy area", &labels, &rows, mc.resamples, derive_seed(mc.seed, 6))?;
    ScalingFit::fit(
        times.to_vec(),
        report.components.iter().map(|c| c.variance).collect(),
        report.components.iter().map(|c| c.variance_se).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(paths: usize) -> McConfig {
        McConfig { paths, seed: 11, level: 4, resamples: 50 }
    }

    #[test]
    fn abelian_stationarity_passes() {
        let ab = AlgebraBasis::abelian(2).unwrap();
        let r = stationary_increments_test(&ab, HurstParam::new(0.3).unwrap(), 0.5, 0.5, &small(2000), ShiftMode::LeftTranslated)
            .unwrap();
        assert!(r.passed(), "{:?}", r.comparison);
    }

    #[test]
    fn isometry_preconditions() {
        let so3 = AlgebraBasis::so3();
        let h = HurstParam::new(0.6).unwrap();
        let stretch = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0, 1.0]));
        assert!(matches!(
            isometry_invariance_test(&so3, &Isometry::LinearMap(stretch), h, 1.0, &small(1000)),
            Err(Error::NotIsometry(_))
        ));
        let reflect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0, 1.0]));
        assert!(Isometry::LinearMap(reflect).validate(&so3).is_err());
        let g = so3.exp_combination(&[0.3, -1.1, 0.4]).unwrap();
        assert!(Isometry::LinearMap(so3.adjoint_matrix(&g).unwrap()).validate(&so3).is_ok());
        assert!(Isometry::Conjugation(g).validate(&so3).is_ok());
        let h1 = AlgebraBasis::heisenberg1();
        let g = h1.exp_combination(&[0.3, 1.0]).unwrap();
        assert!(Isometry::Conjugation(g).validate(&h1).is_err());
    }

    #[test]
    fn degenerate_functional_rejected() {
        let so3 = AlgebraBasis::so3();
        let r = local_selfsimilarity_test(&so3, &Functional::Trace, HurstParam::new(0.75).unwrap(), &LOCAL_SCALES, 1.0, &small(100));
        assert_eq!(r, Err(Error::DegenerateFunctional));
    }

    #[test]
    fn scale_validation() {
        assert!(check_scales(&[0.5, 1.0]).is_err());
        assert!(check_scales(&[0.5, 1.0, 1.0]).is_err());
        assert!(check_scales(&[0.5, -1.0, 2.0]).is_err());
        assert!(check_scales(&[0.5, 1.0, 2.0]).is_ok());
    }

    #[test]
    fn global_test_needs_grading() {
        let r = global_scaling_test(&AlgebraBasis::so3(), HurstParam::new(0.75).unwrap(), &[1.0], 1.0, &small(1000));
        assert_eq!(r.unwrap_err(), Error::Ungraded);
    }

    #[test]
    fn exact_power_law_fit() {
        let fit = ScalingFit::fit(vec![0.25, 0.5, 1.0], vec![0.25f64.powf(1.5) * 3.0, 0.5f64.powf(1.5) * 3.0, 3.0], vec![0.0; 3])
            .unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }
}
