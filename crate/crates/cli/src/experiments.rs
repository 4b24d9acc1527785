use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use liefbm_core::export::{write_path_csv, write_sample_csv, write_table_csv};
use liefbm_core::fbm::{FbmSampler, HurstParam, KernelEval, TimeGrid};
use liefbm_core::integrator::{integrate, Side};
use liefbm_core::liegroup::AlgebraBasis;
use liefbm_core::malliavin::{IbpPlan, IbpReport, MalliavinPlan, VariationField};
use liefbm_core::signature::{SignatureTable, Word};
use liefbm_core::stats::{
    global_scaling_test, isometry_invariance_test, local_selfsimilarity_test, run_batch, stationary_increments_test,
    Functional, Isometry, LawTest, McConfig, ShiftMode, SIGMA_THRESHOLD,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, Kind};
use crate::Failure;

/// One pass/fail verdict: `value` is compared with `threshold`.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), pass: value < threshold, value, threshold }
    }

    fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), pass: value > threshold, value, threshold }
    }
}

/// Everything an experiment reports besides its CSV files.
pub struct Outcome {
    pub checks: Vec<Check>,
    pub details: serde_json::Value,
}

/// Output directory that remembers the files written to it.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn file(&mut self, name: &str) -> Result<BufWriter<File>, Failure> {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| Failure::Io(format!("cannot create {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), Failure> {
        let mut f = self.file(name)?;
        let text = serde_json::to_string_pretty(value).expect("report serializes");
        writeln!(f, "{text}").and_then(|_| f.flush()).map_err(|e| Failure::Io(e.to_string()))
    }

    /// Writes a file that is not listed among the outputs.
    pub fn write_unlisted(&self, name: &str, text: &str) -> Result<(), Failure> {
        std::fs::write(self.dir.join(name), text).map_err(|e| Failure::Io(e.to_string()))
    }
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    basis: AlgebraBasis,
    h: HurstParam,
    out: &'a mut OutputDir,
}

impl Context<'_> {
    fn grid(&self) -> Result<TimeGrid, Failure> {
        Ok(TimeGrid::dyadic(self.cfg.level, self.cfg.horizon)?)
    }

    fn mc(&self) -> McConfig {
        McConfig { paths: self.cfg.paths, seed: self.cfg.seed, level: self.cfg.level, resamples: self.cfg.resamples }
    }

    fn functional(&self) -> Result<Functional, Failure> {
        Ok(self.cfg.functional.parse()?)
    }

    fn law_reports(&mut self, prefix: &str, test: &LawTest, sides: [&str; 2]) -> Result<(), Failure> {
        test.left.write_csv(self.out.file(&format!("{prefix}_{}.csv", sides[0]))?)?;
        test.right.write_csv(self.out.file(&format!("{prefix}_{}.csv", sides[1]))?)?;
        Ok(())
    }
}

pub fn run(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Outcome, Failure> {
    let mut ctx = Context { cfg, basis: cfg.basis.build()?, h: HurstParam::new(cfg.hurst)?, out };
    match cfg.kind {
        Kind::Sample => sample(&mut ctx),
        Kind::Integrate => flow(&mut ctx),
        Kind::Signature => signature(&mut ctx),
        Kind::ScalingLocal => scaling_local(&mut ctx),
        Kind::ScalingGlobal => scaling_global(&mut ctx),
        Kind::Stationarity => stationarity(&mut ctx),
        Kind::Isometry => isometry(&mut ctx),
        Kind::Malliavin => malliavin(&mut ctx),
        Kind::Ibp => ibp(&mut ctx),
    }
}

fn sample(ctx: &mut Context) -> Result<Outcome, Failure> {
    let sampler = FbmSampler::new(ctx.h, ctx.grid()?)?;
    for p in 0..ctx.cfg.paths {
        let s = sampler.sample_path(ctx.cfg.dim, ctx.cfg.seed, p as u64);
        write_sample_csv(&s, ctx.out.file(&format!("sample_{p}.csv"))?)?;
    }
    Ok(Outcome { checks: Vec::new(), details: json!({ "grid_points": sampler.grid().len() }) })
}

fn flow(ctx: &mut Context) -> Result<Outcome, Failure> {
    let sampler = FbmSampler::new(ctx.h, ctx.grid()?)?;
    let mut worst: f64 = 0.0;
    for p in 0..ctx.cfg.paths {
        let s = sampler.sample_path(ctx.basis.len(), ctx.cfg.seed, p as u64);
        let path = integrate(&s, &ctx.basis, Side::Left)?;
        worst = worst.max(path.max_membership_defect(&ctx.basis));
        write_path_csv(&path, ctx.out.file(&format!("path_{p}.csv"))?)?;
    }
    let tol = ctx.basis.tolerances().membership;
    Ok(Outcome { checks: vec![Check::below("membership defect", worst, tol)], details: json!({}) })
}

fn signature(ctx: &mut Context) -> Result<Outcome, Failure> {
    let sampler = FbmSampler::new(ctx.h, ctx.grid()?)?;
    let d = ctx.cfg.dim;
    let mut worst: f64 = 0.0;
    for p in 0..ctx.cfg.paths {
        let s = sampler.sample_path(d, ctx.cfg.seed, p as u64);
        let table = SignatureTable::new(&s, ctx.cfg.horizon, ctx.cfg.depth.max(2))?;
        for i in 0..d {
            for j in 0..d {
                let v = |l: &[usize]| table.value(&Word::new(l.to_vec())?);
                worst = worst.max((v(&[i])? * v(&[j])? - v(&[i, j])? - v(&[j, i])?).abs());
            }
        }
        let table = SignatureTable::new(&s, ctx.cfg.horizon, ctx.cfg.depth)?;
        table.write_csv(ctx.out.file(&format!("signature_{p}.csv"))?)?;
    }
    Ok(Outcome { checks: vec![Check::below("shuffle identity defect", worst, 1e-10)], details: json!({}) })
}

fn scaling_local(ctx: &mut Context) -> Result<Outcome, Failure> {
    let f = ctx.functional()?;
    let fit = local_selfsimilarity_test(&ctx.basis, &f, ctx.h, &ctx.cfg.scales, ctx.cfg.horizon, &ctx.mc())?;
    let rows: Vec<Vec<f64>> = fit
        .scales
        .iter()
        .zip(&fit.statistic)
        .zip(&fit.statistic_se)
        .map(|((c, v), se)| vec![*c, *v, *se])
        .collect();
    write_table_csv(&["c", "variance", "variance_se"], &rows, ctx.out.file("scaling_local.csv")?)?;
    let a = fit.a_estimate.unwrap_or(f64::NAN);
    let oracle = fit.a_oracle.unwrap_or(f64::NAN);
    let checks = vec![
        Check::below("relative error of a", (a / oracle - 1.0).abs(), 0.1),
        Check::below("variance exponent error", (fit.slope - 2.0 * ctx.cfg.hurst).abs(), 0.1),
    ];
    Ok(Outcome { checks, details: serde_json::to_value(&fit).expect("fit serializes") })
}

fn scaling_global(ctx: &mut Context) -> Result<Outcome, Failure> {
    let outcomes = global_scaling_test(&ctx.basis, ctx.h, &ctx.cfg.scales, ctx.cfg.horizon, &ctx.mc())?;
    let mut checks = Vec::new();
    for o in &outcomes {
        ctx.law_reports(&format!("scaling_global_c{}", o.c), &o.test, ["scaled", "dilated"])?;
        checks.push(Check::below(format!("c={} max z", o.c), o.test.comparison.max_z, SIGMA_THRESHOLD));
    }
    let details = outcomes.iter().map(|o| json!({ "c": o.c, "comparison": o.test.comparison })).collect();
    Ok(Outcome { checks, details: serde_json::Value::Array(details) })
}

fn stationarity(ctx: &mut Context) -> Result<Outcome, Failure> {
    let (s, t, mc) = (ctx.cfg.shift, ctx.cfg.horizon, ctx.mc());
    let test = stationary_increments_test(&ctx.basis, ctx.h, s, t, &mc, ShiftMode::LeftTranslated)?;
    ctx.law_reports("stationarity", &test, ["shifted", "direct"])?;
    let mut checks = vec![Check::below("max z", test.comparison.max_z, SIGMA_THRESHOLD)];
    let mut details = json!({ "test": test.comparison });
    if ctx.cfg.control {
        let control = stationary_increments_test(&ctx.basis, ctx.h, s, t, &mc, ShiftMode::Untranslated)?;
        ctx.law_reports("stationarity_control", &control, ["untranslated", "direct"])?;
        checks.push(Check::above("untranslated control max z", control.comparison.max_z, SIGMA_THRESHOLD));
        details["control"] = json!(control.comparison);
    }
    Ok(Outcome { checks, details })
}

fn isometry(ctx: &mut Context) -> Result<Outcome, Failure> {
    let psi = if ctx.cfg.conjugator.iter().all(|&x| x == 0.0) {
        Isometry::Identity
    } else {
        Isometry::Conjugation(ctx.basis.exp_combination(&ctx.cfg.conjugator)?)
    };
    let test = isometry_invariance_test(&ctx.basis, &psi, ctx.h, ctx.cfg.horizon, &ctx.mc())?;
    ctx.law_reports("isometry", &test, ["mapped", "direct"])?;
    Ok(Outcome {
        checks: vec![Check::below("max z", test.comparison.max_z, SIGMA_THRESHOLD)],
        details: json!({ "test": test.comparison }),
    })
}

fn malliavin(ctx: &mut Context) -> Result<Outcome, Failure> {
    let grid = ctx.grid()?;
    let ker = KernelEval::new(ctx.h)?;
    let plan = MalliavinPlan::new(&grid, &ker, ctx.cfg.horizon)?;
    let basis = &ctx.basis;
    let gammas = run_batch(ctx.h, &grid, basis.len(), ctx.cfg.paths, ctx.cfg.seed, |b| {
        plan.gamma(&integrate(b, basis, Side::Left)?, basis, ctx.cfg.ad_rule)
    })?;
    let d = basis.len();
    let mut header = vec!["path".to_string(), "min_eigenvalue".to_string(), "asymmetry".to_string()];
    header.extend((1..=d).map(|i| format!("eigenvalue_{i}")));
    let rows: Vec<Vec<f64>> = gammas
        .iter()
        .enumerate()
        .map(|(p, g)| {
            let mut row = vec![p as f64, g.min_eigenvalue, g.asymmetry()];
            row.extend(&g.eigenvalues);
            row
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table_csv(&header, &rows, ctx.out.file("malliavin.csv")?)?;
    let min = gammas.iter().map(|g| g.min_eigenvalue).fold(f64::INFINITY, f64::min);
    let asym = gammas.iter().map(|g| g.asymmetry()).fold(0.0, f64::max);
    Ok(Outcome {
        checks: vec![Check::above("min eigenvalue", min, 0.0), Check::below("asymmetry", asym, 1e-12)],
        details: json!({}),
    })
}

fn ibp(ctx: &mut Context) -> Result<Outcome, Failure> {
    let grid = ctx.grid()?;
    let field = VariationField::constant(&grid, ctx.cfg.horizon, &ctx.cfg.variation)?;
    let plan = IbpPlan::new(&ctx.basis, ctx.functional()?, field, ctx.h, ctx.cfg.level, ctx.cfg.ad_rule)?;
    let terms = plan.batch(&ctx.mc())?;
    let rows: Vec<Vec<f64>> = terms.iter().enumerate().map(|(p, (l, r))| vec![p as f64, *l, *r]).collect();
    write_table_csv(&["path", "lhs", "rhs"], &rows, ctx.out.file("ibp.csv")?)?;
    let report = IbpReport::from_terms(&terms);
    Ok(Outcome {
        checks: vec![Check::below("paired z", report.z, SIGMA_THRESHOLD)],
        details: serde_json::to_value(&report).expect("report serializes"),
    })
}
