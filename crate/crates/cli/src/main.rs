//! `liefbm`: batch experiments for fractional Brownian motion on Lie groups.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 for an
//! invalid configuration, 3 for a numerical or I/O failure.

mod config;
mod experiments;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use liefbm_core::malliavin::AdRule;
use serde_json::json;

use config::{BasisSpec, ExperimentConfig, Kind, Manifest, Settings};
use experiments::OutputDir;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl From<liefbm_core::Error> for Failure {
    fn from(e: liefbm_core::Error) -> Self {
        use liefbm_core::Error as E;
        match e {
            E::NotPositiveDefinite { .. } | E::NonFinite | E::Singular | E::NotUnipotent => {
                Failure::Numerical(e.to_string())
            }
            E::Io(msg) => Failure::Io(msg),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) | Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Config(m) => format!("invalid configuration: {m}"),
            Failure::Numerical(m) => format!("numerical failure: {m}"),
            Failure::Io(m) => format!("i/o failure: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "liefbm", version, about = "Fractional Brownian motion on matrix Lie groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact fBm sample paths, one CSV per path.
    Sample(Flags),
    /// Product-of-exponentials flows driven by fBm, one CSV per path.
    Integrate(Flags),
    /// Signature tables (iterated integrals) of fBm paths.
    Signature(Flags),
    /// Local self-similarity of a functional near the identity.
    ScalingLocal(Flags),
    /// Carnot dilation scaling on a graded basis.
    ScalingGlobal(Flags),
    /// Stationarity of the increments X_s^{-1} X_{s+t}.
    Stationarity(Flags),
    /// Invariance of the law under conjugation.
    Isometry(Flags),
    /// Malliavin matrices and their smallest eigenvalues.
    Malliavin(Flags),
    /// Monte Carlo check of the integration by parts formula.
    Ibp(Flags),
    /// Runs the experiment named by `kind` in a config file or manifest.
    Run(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// JSON or TOML config file, or the manifest.json of an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo paths (or sample paths written).
    #[arg(long)]
    paths: Option<usize>,
    /// Dyadic level m: the grid has 2^m cells.
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    hurst: Option<f64>,
    /// so3, heisenberg1, abelian:d, heisenberg_n:n, free_step2:d, or a JSON basis file.
    #[arg(long)]
    basis: Option<String>,
    /// Output directory [default: $LIEFBM_OUT, else ./liefbm-out].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Driver dimension for sample and signature.
    #[arg(long)]
    dim: Option<usize>,
    /// Time horizon t.
    #[arg(long)]
    horizon: Option<f64>,
    /// Bootstrap resamples per moment report.
    #[arg(long)]
    resamples: Option<usize>,
    /// Comma-separated scales c.
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<f64>>,
    /// entry:i,j | trace | log:i | constant:c.
    #[arg(long)]
    functional: Option<String>,
    /// Shift s of the stationarity test.
    #[arg(long)]
    shift: Option<f64>,
    /// Signature depth.
    #[arg(long)]
    depth: Option<usize>,
    /// Coordinates of the conjugating element exp(Σ c_i V_i).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    conjugator: Option<Vec<f64>>,
    /// Constant Cameron–Martin derivative h′, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    variation: Option<Vec<f64>>,
    /// left_endpoint or midpoint.
    #[arg(long, value_parser = parse_ad_rule)]
    ad_rule: Option<AdRule>,
    /// Run the negative control of the stationarity test.
    #[arg(long)]
    control: Option<bool>,
}

fn parse_ad_rule(s: &str) -> Result<AdRule, String> {
    serde_json::from_value(json!(s)).map_err(|_| format!("unknown rule '{s}' (left_endpoint or midpoint)"))
}

impl Flags {
    fn settings(self, kind: Option<Kind>) -> Settings {
        Settings {
            kind,
            basis: self.basis.map(BasisSpec::Name),
            hurst: self.hurst,
            level: self.level,
            horizon: self.horizon,
            paths: self.paths,
            dim: self.dim,
            seed: self.seed,
            resamples: self.resamples,
            scales: self.scales,
            functional: self.functional,
            shift: self.shift,
            depth: self.depth,
            conjugator: self.conjugator,
            variation: self.variation,
            ad_rule: self.ad_rule,
            control: self.control,
            out: self.out,
        }
    }
}

fn resolve(command: Command) -> Result<ExperimentConfig, Failure> {
    let (kind, flags) = match command {
        Command::Sample(f) => (Some(Kind::Sample), f),
        Command::Integrate(f) => (Some(Kind::Integrate), f),
        Command::Signature(f) => (Some(Kind::Signature), f),
        Command::ScalingLocal(f) => (Some(Kind::ScalingLocal), f),
        Command::ScalingGlobal(f) => (Some(Kind::ScalingGlobal), f),
        Command::Stationarity(f) => (Some(Kind::Stationarity), f),
        Command::Isometry(f) => (Some(Kind::Isometry), f),
        Command::Malliavin(f) => (Some(Kind::Malliavin), f),
        Command::Ibp(f) => (Some(Kind::Ibp), f),
        Command::Run(f) => (None, f),
    };
    let file = match &flags.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    if let (Some(a), Some(b)) = (kind, file.kind) {
        if a != b {
            return Err(Failure::Config(format!("config file is for '{}', not '{}'", b.name(), a.name())));
        }
    }
    ExperimentConfig::resolve(file.overlay(flags.settings(kind)))
}

fn execute(cfg: &ExperimentConfig) -> Result<bool, Failure> {
    let mut out = OutputDir::create(&cfg.out)?;
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    out.write_unlisted("timestamp", &format!("{stamp}\n"))?;
    out.write_json("manifest.json", &Manifest { tool: "liefbm".into(), version: VERSION.into(), config: cfg.clone() })?;

    let outcome = experiments::run(cfg, &mut out)?;
    let pass = outcome.checks.iter().all(|c| c.pass);
    let mut files = out.files().to_vec();
    files.push("summary.json".into());
    let summary = json!({
        "kind": cfg.kind.name(),
        "pass": pass,
        "checks": outcome.checks,
        "details": outcome.details,
        "files": files,
    });
    out.write_json("summary.json", &summary)?;

    for c in &outcome.checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        let relation = if c.value < c.threshold { "<" } else { ">=" };
        println!("{verdict} {}: {:.4e} {relation} {:.4e}", c.name, c.value, c.threshold);
    }
    println!(
        "liefbm {}: {} ({} files in {})",
        cfg.kind.name(),
        if pass { "pass" } else { "FAIL" },
        files.len(),
        out.dir().display()
    );
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match resolve(cli.command).and_then(|cfg| execute(&cfg)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("liefbm: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
