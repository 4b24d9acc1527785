use std::path::{Path, PathBuf};

use liefbm_core::liegroup::{AlgebraBasis, BasisDocument};
use liefbm_core::malliavin::AdRule;
use liefbm_core::stats::{GLOBAL_SCALES, LOCAL_SCALES, MIN_COMPARISON_SAMPLES};
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Environment variable holding the default output directory.
pub const OUT_ENV: &str = "LIEFBM_OUT";
const DEFAULT_OUT: &str = "liefbm-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Sample,
    Integrate,
    Signature,
    ScalingLocal,
    ScalingGlobal,
    Stationarity,
    Isometry,
    Malliavin,
    Ibp,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Sample => "sample",
            Kind::Integrate => "integrate",
            Kind::Signature => "signature",
            Kind::ScalingLocal => "scaling-local",
            Kind::ScalingGlobal => "scaling-global",
            Kind::Stationarity => "stationarity",
            Kind::Isometry => "isometry",
            Kind::Malliavin => "malliavin",
            Kind::Ibp => "ibp",
        }
    }

    fn is_monte_carlo(self) -> bool {
        matches!(
            self,
            Kind::ScalingLocal | Kind::ScalingGlobal | Kind::Stationarity | Kind::Isometry | Kind::Ibp
        )
    }
}

/// A basis by built-in name, by path to a JSON document, or inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BasisSpec {
    Name(String),
    Document(BasisDocument),
}

impl BasisSpec {
    /// Replaces a path by the document it points to, so that manifests do
    /// not depend on files outside the output directory.
    fn inline(self) -> Result<Self, Failure> {
        match self {
            BasisSpec::Name(name) if name.ends_with(".json") || Path::new(&name).is_file() => {
                let text = std::fs::read_to_string(&name)
                    .map_err(|e| Failure::Config(format!("cannot read basis file {name}: {e}")))?;
                Ok(BasisSpec::Document(BasisDocument::from_json(&text)?))
            }
            other => Ok(other),
        }
    }

    pub fn build(&self) -> Result<AlgebraBasis, Failure> {
        Ok(match self {
            BasisSpec::Name(name) => AlgebraBasis::by_name(name)?,
            BasisSpec::Document(doc) => doc.build()?,
        })
    }
}

/// One layer of settings, from a config file or the command line. Missing
/// keys fall through to the layer below.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub kind: Option<Kind>,
    pub basis: Option<BasisSpec>,
    pub hurst: Option<f64>,
    pub level: Option<u32>,
    pub horizon: Option<f64>,
    pub paths: Option<usize>,
    pub dim: Option<usize>,
    pub seed: Option<u64>,
    pub resamples: Option<usize>,
    pub scales: Option<Vec<f64>>,
    pub functional: Option<String>,
    pub shift: Option<f64>,
    pub depth: Option<usize>,
    pub conjugator: Option<Vec<f64>>,
    pub variation: Option<Vec<f64>>,
    pub ad_rule: Option<AdRule>,
    pub control: Option<bool>,
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($top:expr, $base:expr, $($field:ident),+) => {
        Settings { $($field: $top.$field.or($base.$field)),+ }
    };
}

impl Settings {
    /// Fields of `top` win over those of `self`.
    pub fn overlay(self, top: Settings) -> Settings {
        overlay!(
            top, self, kind, basis, hurst, level, horizon, paths, dim, seed, resamples, scales, functional,
            shift, depth, conjugator, variation, ad_rule, control, out
        )
    }

    /// Reads a JSON or TOML document, or the manifest of an earlier run.
    pub fn from_file(path: &Path) -> Result<Settings, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
        let is_toml = path.extension().is_some_and(|e| e == "toml");
        let value: serde_json::Value = if is_toml {
            toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        } else {
            serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        };
        let value = match Manifest::deserialize(&value) {
            Ok(manifest) => {
                if manifest.version != crate::VERSION {
                    eprintln!("warning: manifest written by liefbm {}, running {}", manifest.version, crate::VERSION);
                }
                serde_json::to_value(manifest.config).expect("config serializes")
            }
            Err(_) => value,
        };
        Settings::deserialize(&value).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub basis: BasisSpec,
    pub hurst: f64,
    pub level: u32,
    pub horizon: f64,
    pub paths: usize,
    pub dim: usize,
    pub seed: u64,
    pub resamples: usize,
    pub scales: Vec<f64>,
    pub functional: String,
    pub shift: f64,
    pub depth: usize,
    pub conjugator: Vec<f64>,
    pub variation: Vec<f64>,
    pub ad_rule: AdRule,
    pub control: bool,
    pub out: PathBuf,
}

/// What a run writes next to its outputs; loadable with `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

impl ExperimentConfig {
    /// Fills the gaps of `s` with the defaults of its kind and validates.
    pub fn resolve(s: Settings) -> Result<Self, Failure> {
        let kind = s.kind.ok_or_else(|| invalid("no experiment kind given"))?;
        let default_basis = match kind {
            Kind::ScalingGlobal => "heisenberg1",
            _ => "so3",
        };
        let basis_given = s.basis.is_some();
        let basis = s.basis.unwrap_or_else(|| BasisSpec::Name(default_basis.into())).inline()?;
        let algebra = basis.build()?;
        let dim = match kind {
            Kind::Sample | Kind::Signature => {
                s.dim.unwrap_or(if basis_given { algebra.len() } else if kind == Kind::Sample { 1 } else { 2 })
            }
            _ => {
                if let Some(d) = s.dim.filter(|&d| d != algebra.len()) {
                    return Err(invalid(format!("dim {d} does not match the {} generators of the basis", algebra.len())));
                }
                algebra.len()
            }
        };
        let paths = s.paths.unwrap_or(match kind {
            Kind::Sample | Kind::Integrate | Kind::Signature => 1,
            Kind::Malliavin => 1000,
            _ => 20_000,
        });
        let horizon = s.horizon.unwrap_or(match kind {
            // the local limit is c -> 0; curvature matters at t = 1 on so3
            Kind::ScalingLocal => 1.0 / 16.0,
            Kind::Stationarity => 0.5,
            _ => 1.0,
        });
        let scales = s.scales.unwrap_or_else(|| match kind {
            Kind::ScalingLocal => LOCAL_SCALES.to_vec(),
            Kind::ScalingGlobal => GLOBAL_SCALES.to_vec(),
            _ => Vec::new(),
        });
        let out = s
            .out
            .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        let config = ExperimentConfig {
            kind,
            basis,
            hurst: s.hurst.unwrap_or(0.75),
            level: s.level.unwrap_or(6),
            horizon,
            paths,
            dim,
            seed: s.seed.unwrap_or(0),
            resamples: s.resamples.unwrap_or(200),
            scales,
            functional: s.functional.unwrap_or_else(|| "entry:1,2".into()),
            shift: s.shift.unwrap_or(0.5),
            depth: s.depth.unwrap_or(2),
            conjugator: s.conjugator.unwrap_or_else(|| vec![0.9, -0.2, 1.7]),
            variation: s.variation.unwrap_or_else(|| vec![1.0; algebra.len()]),
            ad_rule: s.ad_rule.unwrap_or_default(),
            control: s.control.unwrap_or(true),
            out,
        };
        config.validate(&algebra)?;
        Ok(config)
    }

    fn validate(&self, algebra: &AlgebraBasis) -> Result<(), Failure> {
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(invalid(format!("hurst must lie in (0, 1), got {}", self.hurst)));
        }
        if matches!(self.kind, Kind::Malliavin | Kind::Ibp) && self.hurst <= 0.5 {
            return Err(invalid(format!(
                "{} needs the Volterra representation, which requires H > 1/2; got H = {}",
                self.kind.name(),
                self.hurst
            )));
        }
        if !(1..=12).contains(&self.level) {
            return Err(invalid(format!("level must lie in 1..=12, got {}", self.level)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.paths == 0 || self.dim == 0 {
            return Err(invalid("paths and dim must be positive"));
        }
        if self.kind.is_monte_carlo() && self.paths < MIN_COMPARISON_SAMPLES {
            return Err(invalid(format!(
                "{} needs at least {MIN_COMPARISON_SAMPLES} paths, got {}",
                self.kind.name(),
                self.paths
            )));
        }
        if self.resamples < 2 {
            return Err(invalid("resamples must be at least 2"));
        }
        if !(self.shift > 0.0 && self.shift.is_finite()) {
            return Err(invalid(format!("shift must be positive, got {}", self.shift)));
        }
        if self.kind == Kind::Isometry && self.conjugator.len() != algebra.len() {
            return Err(invalid(format!(
                "conjugator needs {} coordinates, got {}",
                algebra.len(),
                self.conjugator.len()
            )));
        }
        if self.kind == Kind::Ibp && self.variation.len() != algebra.len() {
            return Err(invalid(format!(
                "variation needs {} components, got {}",
                algebra.len(),
                self.variation.len()
            )));
        }
        Ok(())
    }
}
