use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use liefbm_core::fbm::{FbmSampler, HurstParam, KernelEval, SynthesisPlan, TimeGrid};
use liefbm_core::integrator::{integrate, Side};
use liefbm_core::liegroup::AlgebraBasis;
use liefbm_core::malliavin::{AdRule, MalliavinPlan};
use liefbm_core::signature::SignatureTable;

fn hurst(h: f64) -> HurstParam {
    HurstParam::new(h).unwrap()
}

fn kernel(c: &mut Criterion) {
    let mut g = c.benchmark_group("kernel");
    for h in [0.6, 0.9] {
        let k = KernelEval::new(hurst(h)).unwrap();
        g.bench_with_input(BenchmarkId::new("volterra", h), &k, |b, k| {
            b.iter(|| k.volterra_kernel(black_box(0.8), black_box(0.3)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("cell_integral", h), &k, |b, k| {
            b.iter(|| k.cell_integral(black_box(1.0), black_box(0.0), black_box(1.0 / 64.0)).unwrap())
        });
    }
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("sample");
    for level in [6, 8] {
        let grid = TimeGrid::dyadic(level, 1.0).unwrap();
        let exact = FbmSampler::new(hurst(0.75), grid.clone()).unwrap();
        g.bench_with_input(BenchmarkId::new("cholesky", level), &exact, |b, s| {
            let mut path = 0;
            b.iter(|| {
                path += 1;
                s.sample_path(3, 1, path)
            })
        });
        let plan = SynthesisPlan::new(grid, KernelEval::new(hurst(0.75)).unwrap()).unwrap();
        g.bench_with_input(BenchmarkId::new("synthesis", level), &plan, |b, s| {
            let mut path = 0;
            b.iter(|| {
                path += 1;
                s.sample_path(3, 1, path)
            })
        });
    }
    g.finish();
}

fn flows(c: &mut Criterion) {
    let grid = TimeGrid::dyadic(8, 1.0).unwrap();
    let sample = FbmSampler::new(hurst(0.75), grid.clone()).unwrap().sample_path(3, 2, 0);
    let so3 = AlgebraBasis::so3();
    c.bench_function("integrate/so3/256", |b| b.iter(|| integrate(black_box(&sample), &so3, Side::Left).unwrap()));
    for depth in [2, 4] {
        c.bench_function(&format!("signature/d3/depth{depth}/256"), |b| {
            b.iter(|| SignatureTable::new(black_box(&sample), 1.0, depth).unwrap())
        });
    }

    let coarse = TimeGrid::dyadic(5, 1.0).unwrap();
    let path = integrate(&FbmSampler::new(hurst(0.75), coarse.clone()).unwrap().sample_path(3, 3, 0), &so3, Side::Left)
        .unwrap();
    let plan = MalliavinPlan::new(&coarse, &KernelEval::new(hurst(0.75)).unwrap(), 1.0).unwrap();
    c.bench_function("malliavin_gamma/so3/32", |b| {
        b.iter(|| plan.gamma(black_box(&path), &so3, AdRule::LeftEndpoint).unwrap())
    });
}

criterion_group!(benches, kernel, sampling, flows);
criterion_main!(benches);
