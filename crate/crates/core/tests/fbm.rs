mod common;

use common::{beta_oracle, frozen, increment_covariance_z, kernel_oracle, tanh_sinh};
use liefbm_core::fbm::*;
use liefbm_core::stats::{compare_laws, MomentReport};
use proptest::prelude::*;

fn hp(h: f64) -> HurstParam {
    HurstParam::new(h).unwrap()
}

fn ker(h: f64) -> KernelEval {
    KernelEval::new(hp(h)).unwrap()
}

#[test]
fn covariance_examples() {
    assert_eq!(covariance(1.0, 1.0, hp(0.3)), 1.0);
    assert!((covariance(1.0, 2.0, hp(0.5)) - 1.0).abs() < 1e-15);
    assert!((covariance(0.5, 0.5, hp(0.75)) - 0.353_553_390_593_273_8).abs() < 1e-15);
}

#[test]
fn normalization_constant() {
    for (h, c) in frozen::C_H {
        let k = ker(h);
        assert!((k.c_h() / c - 1.0).abs() < 1e-12, "h={h}");
        let from_quadrature = (h * (2.0 * h - 1.0) / beta_oracle(2.0 - 2.0 * h, h - 0.5)).sqrt();
        assert!((k.c_h() / from_quadrature - 1.0).abs() < 1e-10, "h={h}");
    }
}

#[test]
fn kernel_values() {
    for (t, s, h, v) in frozen::KERNEL {
        let k = ker(h);
        let got = k.volterra_kernel(t, s).unwrap();
        assert!((got / v - 1.0).abs() < 1e-8, "{got} vs {v}");
        let oracle = kernel_oracle(t, s, h, k.c_h());
        assert!((oracle / v - 1.0).abs() < 1e-8, "oracle {oracle}");
    }
    let (u, s, h, v) = frozen::KERNEL_DERIVATIVE;
    let got = ker(h).kernel_time_derivative(u, s).unwrap();
    assert!((got / v - 1.0).abs() < 1e-12);
}

#[test]
fn kernel_matches_oracle_across_parameters() {
    for h in [0.55, 0.6, 0.75, 0.9, 0.95] {
        let k = ker(h);
        for &(t, s) in &[(1.0, 0.01), (1.0, 0.3), (1.0, 0.99), (2.5, 1.0), (0.1, 0.05)] {
            let got = k.volterra_kernel(t, s).unwrap();
            let oracle = kernel_oracle(t, s, h, k.c_h());
            assert!((got / oracle - 1.0).abs() < 1e-8, "h={h} t={t} s={s}: {got} vs {oracle}");
        }
    }
}

#[test]
fn derivative_integrates_to_kernel() {
    let k = ker(0.75);
    let (s, t) = (0.25, 1.0);
    // the library formula, written with the exact distance u − s
    let c = k.c_h();
    let integral = tanh_sinh(s, t, |u, du, _| c * s.powf(-0.25) * du.powf(-0.75) * u.powf(0.25));
    let u = 0.6;
    let direct = c * s.powf(-0.25) * (u - s).powf(-0.75) * u.powf(0.25);
    assert!((k.kernel_time_derivative(u, s).unwrap() / direct - 1.0).abs() < 1e-14);
    assert!((integral / k.volterra_kernel(t, s).unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn kernel_mass_and_square() {
    for (h, mass) in frozen::KERNEL_MASS {
        let k = ker(h);
        let got = k.cell_integral(1.0, 0.0, 1.0).unwrap();
        assert!((got / mass - 1.0).abs() < 1e-8, "h={h}: {got}");
        for t in [1.0, 0.5, 3.0] {
            let sq = k.square_integral(t).unwrap();
            assert!((sq / t.powf(2.0 * h) - 1.0).abs() < 1e-6, "h={h} t={t}: {sq}");
        }
    }
}

fn batch(h: f64, grid: &TimeGrid, paths: usize, seed: u64) -> Vec<FbmSample> {
    let sampler = FbmSampler::new(hp(h), grid.clone()).unwrap();
    (0..paths).map(|p| sampler.sample_path(1, seed, p as u64)).collect()
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn exact_sampler_moments() {
    let grid = TimeGrid::uniform(64, 1.0).unwrap();
    let paths = batch(0.75, &grid, 20_000, 1);
    let sq: Vec<f64> = paths.iter().map(|s| s.component(0)[64].powi(2)).collect();
    let (m, se) = mean_se(&sq);
    assert!((m - 1.0).abs() < 3.0 * se, "{m} ± {se}");

    let paths = batch(0.3, &grid, 20_000, 2);
    let prod: Vec<f64> = paths.iter().map(|s| s.component(0)[32] * s.component(0)[64]).collect();
    let (m, se) = mean_se(&prod);
    assert!((m - covariance(0.5, 1.0, hp(0.3))).abs() < 3.0 * se, "{m} ± {se}");
}

#[test]
fn brownian_increments_are_white() {
    let grid = TimeGrid::uniform(8, 1.0).unwrap();
    let paths = batch(0.5, &grid, 5_000, 3);
    assert!(increment_covariance_z(&paths, &grid, hp(0.5)) < 4.5);
}

#[test]
fn synthesized_covariance() {
    let grid = TimeGrid::uniform(128, 1.0).unwrap();
    let plan = SynthesisPlan::new(grid, ker(0.75)).unwrap();
    let prod: Vec<f64> = (0..20_000)
        .map(|p| {
            let s = plan.sample_path(1, 5, p);
            s.component(0)[64] * s.component(0)[128]
        })
        .collect();
    let (m, _) = mean_se(&prod);
    let exact = covariance(0.5, 1.0, hp(0.75));
    assert!((m / exact - 1.0).abs() < 0.05, "{m} vs {exact}");
}

#[test]
fn synthesized_increments_on_a_coarse_grid() {
    // synthesize at level 8, observe at level 3
    let fine = TimeGrid::dyadic(8, 1.0).unwrap();
    for h in [0.6, 0.75] {
        let plan = SynthesisPlan::new(fine.clone(), ker(h)).unwrap();
        let paths: Vec<FbmSample> = (0..20_000).map(|p| plan.sample_path(1, 6, p).coarsen(3).unwrap()).collect();
        let z = increment_covariance_z(&paths, paths[0].grid(), hp(h));
        assert!(z < 4.0, "h={h}: z={z}");
    }
}

#[test]
fn synthesis_is_the_cell_projection() {
    // On its own grid the synthesis is E[B | cell increments of W], so the
    // first increment has variance (∫_0^Δ K)^2 / Δ, strictly below Δ^{2H}.
    for (h, mass) in frozen::KERNEL_MASS {
        let grid = TimeGrid::uniform(8, 1.0).unwrap();
        let plan = SynthesisPlan::new(grid, ker(h)).unwrap();
        let delta: f64 = 0.125;
        let w = plan.weight(1, 0);
        let expected = mass * delta.powf(h + 0.5) / delta;
        assert!((w / expected - 1.0).abs() < 1e-8, "h={h}: {w} vs {expected}");
        assert!(w * w * delta < delta.powf(2.0 * h));
    }
}

#[test]
fn synthesis_roundtrip_from_stored_noise() {
    let grid = TimeGrid::dyadic(5, 1.0).unwrap();
    let k = ker(0.7);
    let plan = SynthesisPlan::new(grid.clone(), k.clone()).unwrap();
    let s = plan.sample_path(2, 9, 0);
    let again = synthesize_from_wiener(s.wiener().unwrap().to_vec(), &grid, &k).unwrap();
    for (a, b) in again.values().iter().flatten().zip(s.values().iter().flatten()) {
        assert!((a - b).abs() < 1e-14);
    }
}

fn report(rows: Vec<Vec<f64>>, seed: u64) -> MomentReport {
    MomentReport::from_rows("B", &["B".into()], &rows, 200, seed).unwrap()
}

#[test]
fn stationary_increments() {
    let grid = TimeGrid::dyadic(6, 1.0).unwrap();
    let a = batch(0.3, &grid, 20_000, 11);
    let b = batch(0.3, &grid, 20_000, 12);
    let inc = report(a.iter().map(|s| vec![s.component(0)[64] - s.component(0)[32]]).collect(), 1);
    let direct = report(b.iter().map(|s| vec![s.component(0)[32]]).collect(), 2);
    assert!(compare_laws(&inc, &direct).unwrap().pass);
}

#[test]
fn scaling_of_variance() {
    let grid = TimeGrid::dyadic(5, 2.0).unwrap();
    let h = 0.75;
    let paths = batch(h, &grid, 20_000, 13);
    let stats: Vec<(f64, f64)> = [0.25, 0.5, 1.0, 2.0]
        .iter()
        .map(|&c| {
            let k = grid.index_of(c).unwrap();
            let scale = c.powf(2.0 * h);
            let xs: Vec<f64> = paths.iter().map(|s| s.component(0)[k].powi(2) / scale).collect();
            mean_se(&xs)
        })
        .collect();
    for (m, se) in &stats {
        assert!((m - 1.0).abs() < 4.0 * se, "{m} ± {se}");
    }
}

#[test]
fn singular_grids_rejected() {
    let grid = TimeGrid::from_points(vec![0.0, 1.0, 1.0 + 1e-14]);
    assert!(grid.is_err() || FbmSampler::new(hp(0.75), grid.unwrap()).is_err());
    assert!(TimeGrid::from_points(vec![0.0]).is_err());
    assert!(FbmSampler::new(hp(0.75), TimeGrid::uniform(1, 1.0).unwrap()).is_ok());
}

proptest! {
    #[test]
    fn covariance_is_symmetric_with_variance_diagonal(s in 0.0f64..5.0, t in 0.0f64..5.0, h in 0.01f64..0.99) {
        let h = hp(h);
        prop_assert!((covariance(s, t, h) - covariance(t, s, h)).abs() < 1e-14);
        prop_assert!((covariance(t, t, h) - t.powf(2.0 * h.value())).abs() < 1e-12);
        prop_assert_eq!(covariance(0.0, t, h), 0.0);
        prop_assert!(covariance(s, t, h).abs() <= (covariance(s, s, h) * covariance(t, t, h)).sqrt() + 1e-12);
    }

    #[test]
    fn samples_start_at_zero_and_are_deterministic(h in 0.05f64..0.95, seed in any::<u64>(), level in 1u32..6) {
        let grid = TimeGrid::dyadic(level, 1.0).unwrap();
        let a = sample_fbm(hp(h), &grid, 2, seed).unwrap();
        let b = sample_fbm(hp(h), &grid, 2, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.values().iter().all(|c| c[0] == 0.0));
    }

    #[test]
    fn dyadic_points_are_exact(level in 0u32..12, horizon in 0.1f64..10.0) {
        let grid = TimeGrid::dyadic(level, horizon).unwrap();
        let n = 1usize << level;
        prop_assert_eq!(grid.len(), n + 1);
        for (i, &t) in grid.points().iter().enumerate() {
            prop_assert_eq!(t, i as f64 / n as f64 * horizon);
        }
    }
}
