//! Experiment configuration.
//!
//! A TOML file with flat sections. Unknown keys are rejected.
//!
//! ```toml
//! [model]
//! type = "heston"
//! sigma0 = 20.0
//! kappa = 2.0
//! theta = 400.0
//! nu = 20.0
//! rho = 0.0
//!
//! [market]
//! x0 = 100.0
//! maturities = [0.8, 1.0, 1.2]
//! strikes = "70:140:2"
//!
//! [sim]
//! n_paths = 100000
//! steps_per_year = 252
//! seed = 42
//! antithetic = true
//!
//! [series]
//! n_terms = 30
//! n_star_tol = 0.01
//!
//! [output]
//! directory = "out"
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::models::{HestonParams, SabrParams, VolModel};
use crate::paths::SimConfig;
use crate::series::{DEFAULT_NSTAR_TOL, DEFAULT_TERMS};

pub const OUTPUT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Heston,
    Sabr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(rename = "type")]
    pub kind: ModelKind,
    pub sigma0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub nu: f64,
    #[serde(default)]
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSection {
    pub x0: f64,
    pub maturities: Vec<f64>,
    /// `lo:hi:step`, inclusive of both ends.
    pub strikes: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub n_paths: usize,
    pub steps_per_year: usize,
    pub seed: u64,
    pub antithetic: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            n_paths: d.n_paths,
            steps_per_year: d.steps_per_year,
            seed: d.seed,
            antithetic: d.antithetic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesSection {
    pub n_terms: usize,
    /// Highest moment order estimated; defaults to `n_terms`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    pub n_star_tol: f64,
}

impl Default for SeriesSection {
    fn default() -> Self {
        Self {
            n_terms: DEFAULT_TERMS,
            n_max: None,
            n_star_tol: DEFAULT_NSTAR_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub format_version: u32,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            format_version: OUTPUT_FORMAT_VERSION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub market: MarketSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub series: SeriesSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Parses `lo:hi:step` into an inclusive grid.
pub fn parse_strike_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let bad = || Error::Config(format!("strike grid `{spec}` is not of the form lo:hi:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || hi < lo {
        return Err(Error::Config(format!(
            "strike grid `{spec}` needs finite lo <= hi and step > 0"
        )));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| lo + i as f64 * step).collect())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.vol_model()?;
        self.sim_config().validate()?;
        if self.market.maturities.is_empty() {
            return Err(Error::Config("market.maturities must not be empty".into()));
        }
        if let Some(t) = self
            .market
            .maturities
            .iter()
            .find(|t| !(t.is_finite() && **t > 0.0))
        {
            return Err(Error::Config(format!("maturity {t} must be positive")));
        }
        if !self.market.x0.is_finite() {
            return Err(Error::Config("market.x0 must be finite".into()));
        }
        self.strikes()?;
        if self.series.n_terms < 1 || self.n_max() < self.series.n_terms {
            return Err(Error::Config(format!(
                "series.n_terms = {} must be in 1..=n_max ({})",
                self.series.n_terms,
                self.n_max()
            )));
        }
        if !(self.series.n_star_tol.is_finite() && self.series.n_star_tol > 0.0) {
            return Err(Error::Config("series.n_star_tol must be positive".into()));
        }
        if self.output.format_version != OUTPUT_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported output.format_version {}",
                self.output.format_version
            )));
        }
        Ok(())
    }

    pub fn vol_model(&self) -> Result<VolModel> {
        let m = &self.model;
        let model = match m.kind {
            ModelKind::Heston => {
                let (Some(kappa), Some(theta)) = (m.kappa, m.theta) else {
                    return Err(Error::Config("heston model needs kappa and theta".into()));
                };
                VolModel::Heston(HestonParams {
                    sigma0: m.sigma0,
                    kappa,
                    theta,
                    nu: m.nu,
                    rho: m.rho,
                })
            }
            ModelKind::Sabr => {
                if m.kappa.is_some() || m.theta.is_some() {
                    return Err(Error::Config("sabr model takes no kappa or theta".into()));
                }
                VolModel::Sabr(SabrParams {
                    sigma0: m.sigma0,
                    nu: m.nu,
                    rho: m.rho,
                })
            }
        };
        model.validate()?;
        Ok(model)
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            n_paths: self.sim.n_paths,
            steps_per_year: self.sim.steps_per_year,
            seed: self.sim.seed,
            antithetic: self.sim.antithetic,
        }
    }

    pub fn strikes(&self) -> Result<Vec<f64>> {
        parse_strike_grid(&self.market.strikes)
    }

    pub fn n_max(&self) -> usize {
        self.series.n_max.unwrap_or(self.series.n_terms)
    }

    /// Short content hash of the effective configuration. The output
    /// directory does not affect any number and is left out.
    pub fn hash(&self) -> String {
        let mut cfg = self.clone();
        cfg.output.directory = PathBuf::new();
        let canonical = toml::to_string(&cfg).unwrap_or_default();
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}
