use nalgebra::DMatrix;
use proptest::prelude::*;

use super::*;

fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    (a - b).norm() <= tol
}

fn builtins() -> Vec<AlgebraBasis> {
    vec![
        AlgebraBasis::abelian(3).unwrap(),
        AlgebraBasis::so3(),
        AlgebraBasis::heisenberg1(),
        AlgebraBasis::heisenberg_n(2).unwrap(),
        AlgebraBasis::free_step2(3).unwrap(),
        AlgebraBasis::free_step2(4).unwrap(),
    ]
}

#[test]
fn heisenberg_relations() {
    let b = AlgebraBasis::heisenberg1();
    let d = b.completed();
    assert_eq!(bracket(&d[0], &d[1]).unwrap(), d[2]);
    assert!(bracket(&d[0], &d[2]).unwrap().iter().all(|&x| x == 0.0));
    assert!(bracket(&d[1], &d[2]).unwrap().iter().all(|&x| x == 0.0));
}

#[test]
fn bracket_is_antisymmetric_and_checks_shapes() {
    let a = DMatrix::from_fn(4, 4, |i, j| (i * 4 + j) as f64 * 0.3 - 1.0);
    assert!(bracket(&a, &a).unwrap().iter().all(|&x| x == 0.0));
    assert!(bracket(&a, &DMatrix::zeros(3, 3)).is_err());
}

#[test]
fn so3_bracket_against_hand_multiplication() {
    let b = AlgebraBasis::so3();
    let v = b.generators();
    // oracle: explicit triple loop for ab − ba
    let mul = |x: &DMatrix<f64>, y: &DMatrix<f64>| {
        let mut out = DMatrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    out[(i, j)] += x[(i, k)] * y[(k, j)];
                }
            }
        }
        out
    };
    let oracle = mul(&v[0], &v[1]) - mul(&v[1], &v[0]);
    assert_eq!(oracle, v[2]);
    assert_eq!(bracket(&v[0], &v[1]).unwrap(), oracle);
    // the bracket closes in the span for every pair
    for x in v {
        for y in v {
            assert!(b.span_residual(&bracket(x, y).unwrap()).unwrap() < 1e-14);
        }
    }
}

#[test]
fn jacobi_identity_on_generators() {
    for b in builtins() {
        let v = b.completed();
        for x in v {
            for y in v {
                for z in v {
                    let j = bracket(x, &bracket(y, z).unwrap()).unwrap()
                        + bracket(y, &bracket(z, x).unwrap()).unwrap()
                        + bracket(z, &bracket(x, y).unwrap()).unwrap();
                    assert!(j.norm() < 1e-12, "{}", b.name());
                }
            }
        }
    }
}

#[test]
fn iterated_commutator_examples() {
    let b = AlgebraBasis::heisenberg1();
    let w = |l: &[usize]| Word::from_one_based(l).unwrap();
    assert_eq!(iterated_commutator(&w(&[1]), &b).unwrap(), b.generator(0).clone());
    assert_eq!(iterated_commutator(&w(&[1, 2]), &b).unwrap(), b.completed()[2]);
    assert!(iterated_commutator(&w(&[1, 1, 2]), &b).unwrap().iter().all(|&x| x == 0.0));
    assert!(matches!(
        iterated_commutator(&w(&[1, 3]), &b),
        Err(Error::LetterOutOfRange { letter: 3, size: 2 })
    ));
    // right nesting: [V1, [V2, V3]] on so(3)
    let s = AlgebraBasis::so3();
    let v = s.generators();
    let expected = bracket(&v[0], &bracket(&v[1], &v[2]).unwrap()).unwrap();
    assert_eq!(iterated_commutator(&w(&[1, 2, 3]), &s).unwrap(), expected);
}

#[test]
fn exp_examples() {
    assert_eq!(exp_matrix(&DMatrix::zeros(3, 3)).unwrap(), GroupElement::identity(3));
    let s = AlgebraBasis::so3();
    for &theta in &[0.3, 1.7, -2.9, 6.0] {
        let g = exp_matrix(&(s.generator(0) * theta)).unwrap();
        let (c, sn) = (f64::cos(theta), f64::sin(theta));
        let rot = DMatrix::from_row_slice(3, 3, &[c, sn, 0.0, -sn, c, 0.0, 0.0, 0.0, 1.0]);
        assert!(close(g.matrix(), &rot, 1e-12 * (1.0 + theta.abs())));
    }
    let h = AlgebraBasis::heisenberg1();
    let (x, y, z) = (0.7, -1.3, 0.4);
    let g = exp_matrix(&h.element(&[x, y, z])).unwrap();
    let expected =
        DMatrix::from_row_slice(3, 3, &[1.0, x, z + x * y / 2.0, 0.0, 1.0, y, 0.0, 0.0, 1.0]);
    assert!(close(g.matrix(), &expected, 1e-15));
    let mut bad = DMatrix::zeros(2, 2);
    bad[(0, 1)] = f64::NAN;
    assert_eq!(exp_matrix(&bad), Err(Error::NonFinite));
}

#[test]
fn exp_matches_truncated_series_for_general_matrices() {
    let a = DMatrix::from_row_slice(3, 3, &[0.1, 0.5, -0.3, 0.2, -0.4, 0.6, 0.0, 0.3, 0.2]);
    let mut series = DMatrix::identity(3, 3);
    let mut term = DMatrix::identity(3, 3);
    for k in 1..40 {
        term = &term * &a / k as f64;
        series += &term;
    }
    let e = exp_matrix(&a).unwrap();
    assert!((e.matrix() - &series).norm() / series.norm() < 1e-12);
}

#[test]
fn log_examples() {
    assert!(log_unipotent(&GroupElement::identity(4)).unwrap().iter().all(|&x| x == 0.0));
    let h = AlgebraBasis::heisenberg1();
    let g = GroupElement::new(DMatrix::from_row_slice(
        3,
        3,
        &[1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0],
    ));
    let coords = h.coordinates(&log_unipotent(&g).unwrap()).unwrap();
    assert!((coords[0] - 1.0).abs() < 1e-15);
    assert!((coords[1] - 1.0).abs() < 1e-15);
    assert!((coords[2] - 0.5).abs() < 1e-15);
    let rot = exp_matrix(&AlgebraBasis::so3().generator(0).clone()).unwrap();
    assert_eq!(log_unipotent(&rot), Err(Error::NotUnipotent));
}

#[test]
fn adjoint_examples() {
    let s = AlgebraBasis::so3();
    let x = s.generator(1).clone();
    assert_eq!(adjoint(&GroupElement::identity(3), &x).unwrap(), x);
    let g = s.exp_combination(&[0.4, -1.1, 2.3]).unwrap();
    let m = s.adjoint_matrix(&g).unwrap();
    assert!(close(&(m.transpose() * &m), &DMatrix::identity(3, 3), 1e-10));
    let a = AlgebraBasis::abelian(2).unwrap();
    let g = a.exp_combination(&[0.3, -0.8]).unwrap();
    let y = a.combine(&[1.5, 2.0]);
    assert!(close(&adjoint(&g, &y).unwrap(), &y, 1e-15));
    assert!(adjoint(&GroupElement::new(DMatrix::zeros(3, 3)), &x).is_err());
}

#[test]
fn membership_examples() {
    for b in builtins() {
        assert_eq!(b.membership_defect(&b.identity()), 0.0);
    }
    let s = AlgebraBasis::so3();
    let g = s.exp_combination(&[1.2, -0.4, 2.2]).unwrap();
    assert!(s.membership_defect(&g) < 1e-12);
    let mut perturbed = g.matrix().clone();
    perturbed[(0, 0)] += 1e-3;
    assert!(s.membership_defect(&GroupElement::new(perturbed)) >= 1e-3);
    // inconsistent blocks in the free step-2 embedding are rejected
    let f = AlgebraBasis::free_step2(3).unwrap();
    let mut m = f.exp_combination(&[0.3, 0.2, 0.1]).unwrap().into_matrix();
    m[(0, 1)] += 0.5;
    assert!(f.membership_defect(&GroupElement::new(m)) > 0.1);
}

#[test]
fn dilation_examples() {
    let h = AlgebraBasis::heisenberg1();
    let spec = DilationSpec::new(&h).unwrap();
    let d = h.completed();
    let x = h.element(&[0.3, -0.2, 0.9]);
    assert!(close(&spec.dilate_algebra(1.0, &x).unwrap(), &x, 1e-15));
    assert!(close(&spec.dilate_algebra(2.0, &d[0]).unwrap(), &(&d[0] * 2.0), 1e-15));
    assert!(close(&spec.dilate_algebra(2.0, &d[2]).unwrap(), &(&d[2] * 4.0), 1e-15));
    assert!(spec.automorphism_defect(3.0).unwrap() < 1e-12);
    assert!(spec.dilate_algebra(0.0, &x).is_err());

    let hurst: f64 = 0.75;
    let c: f64 = 3.0;
    let (px, py, pz) = (0.4, -1.2, 0.7);
    let g = GroupElement::new(DMatrix::from_row_slice(
        3,
        3,
        &[1.0, px, pz, 0.0, 1.0, py, 0.0, 0.0, 1.0],
    ));
    let out = spec.dilate_group(c.powf(hurst), &g).unwrap();
    let m = out.matrix();
    assert!((m[(0, 1)] - c.powf(hurst) * px).abs() < 1e-14);
    assert!((m[(1, 2)] - c.powf(hurst) * py).abs() < 1e-14);
    assert!((m[(0, 2)] - c.powf(2.0 * hurst) * pz).abs() < 1e-13);
    assert!(DilationSpec::new(&AlgebraBasis::so3()).is_err());
}

fn unipotent_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(-2.0f64..2.0, 6), prop::collection::vec(-2.0f64..2.0, 6))
}

proptest! {
    #[test]
    fn exp_log_roundtrip_on_step_two(coords in prop::collection::vec(-3.0f64..3.0, 6)) {
        let b = AlgebraBasis::free_step2(3).unwrap();
        let x = b.element(&coords);
        let g = exp_matrix(&x).unwrap();
        let back = log_unipotent(&g).unwrap();
        prop_assert!((back - &x).norm() < 1e-12 * (1.0 + x.norm()));
        prop_assert!(b.membership_defect(&g) < 1e-12);
    }

    #[test]
    fn dilations_are_group_morphisms((a, b) in unipotent_pair(), c in 0.1f64..4.0, c2 in 0.1f64..4.0) {
        let basis = AlgebraBasis::free_step2(3).unwrap();
        let spec = DilationSpec::new(&basis).unwrap();
        let g = exp_matrix(&basis.element(&a)).unwrap();
        let h = exp_matrix(&basis.element(&b)).unwrap();
        let lhs = spec.dilate_group(c, &(&g * &h)).unwrap();
        let rhs = &spec.dilate_group(c, &g).unwrap() * &spec.dilate_group(c, &h).unwrap();
        prop_assert!(lhs.distance(&rhs) < 1e-10 * (1.0 + lhs.matrix().norm()));
        // Δ_{c c2} = Δ_c ∘ Δ_{c2}
        let both = spec.dilate_group(c * c2, &g).unwrap();
        let nested = spec.dilate_group(c, &spec.dilate_group(c2, &g).unwrap()).unwrap();
        prop_assert!(both.distance(&nested) < 1e-10 * (1.0 + both.matrix().norm()));
    }

    #[test]
    fn so3_adjoint_is_orthogonal(coords in prop::collection::vec(-4.0f64..4.0, 3)) {
        let s = AlgebraBasis::so3();
        let g = s.exp_combination(&coords).unwrap();
        let m = s.adjoint_matrix(&g).unwrap();
        prop_assert!((m.transpose() * &m - DMatrix::identity(3, 3)).norm() < 1e-10);
    }
}
