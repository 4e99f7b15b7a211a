//! Negative fractional moments of the average realised variance.
//!
//! A [`MomentTable`] stores `E[M_T^{1/2-n}]` for `n = 0..=n_max`, where
//! `M_T = (1/T)∫₀ᵀ σ_s² ds`, along with Monte Carlo standard errors and the
//! closed-form variance-swap level `M₀`. The `n = 0` entry is the volatility
//! swap `v̂`. Tables are keyed by a fingerprint of everything that produced
//! them and persist to a versioned text format that round-trips bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::models::{HestonParams, SabrParams, VolModel};
use crate::paths::{PathBatch, SimConfig};
use crate::stats::McEstimate;

pub const FORMAT_VERSION: u32 = 1;

/// Integrated variances below `FLOOR_RATIO · M₀` are floored.
pub const FLOOR_RATIO: f64 = 1e-12;

/// Largest tolerated fraction of floored paths (0.01%).
pub const MAX_FLOORED_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub fingerprint: String,
    pub model: VolModel,
    pub maturity: f64,
    pub sim: SimConfig,
    /// Closed-form `M₀ = v²`.
    pub m0: f64,
    pub v: f64,
    pub v_hat: f64,
    pub moments: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub floored_paths: usize,
}

/// Content hash of the inputs that determine a table.
pub fn fingerprint(model: &VolModel, maturity: f64, sim: &SimConfig) -> String {
    let canonical = format!(
        "v{FORMAT_VERSION}|{model:?}|T={maturity:?}|paths={}|steps={}|seed={}|anti={}",
        sim.n_paths, sim.steps_per_year, sim.seed, sim.antithetic
    );
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().take(12).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl MomentTable {
    pub fn n_max(&self) -> usize {
        self.moments.len() - 1
    }

    /// `D_n = E[M_T^{1/2-n}] - M₀^{1/2-n}`; `D_0 = v̂ - v`.
    pub fn gap(&self, n: usize) -> f64 {
        self.moments[n] - self.m0.powf(0.5 - n as f64)
    }

    pub fn gaps(&self) -> Vec<f64> {
        (0..=self.n_max()).map(|n| self.gap(n)).collect()
    }

    /// The `n`-th moment as an estimate with its confidence interval.
    pub fn moment_estimate(&self, n: usize) -> McEstimate {
        McEstimate::new(self.moments[n], self.std_errors[n], self.sim.n_paths)
    }

    /// Checks the Jensen ordering `D_0 ≤ 0`, `D_n ≥ 0 (n ≥ 1)`.
    pub fn jensen_violations(&self) -> Vec<usize> {
        (0..=self.n_max())
            .filter(|&n| {
                let d = self.gap(n);
                if n == 0 {
                    d > 0.0
                } else {
                    d < 0.0
                }
            })
            .collect()
    }

    /// Checks that the table was built for the given inputs.
    pub fn ensure_matches(&self, model: &VolModel, maturity: f64, sim: &SimConfig) -> Result<()> {
        let requested = fingerprint(model, maturity, sim);
        if requested != self.fingerprint {
            return Err(Error::StaleCache {
                stored: self.fingerprint.clone(),
                requested,
            });
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.moments.len() < 2 || self.moments.len() != self.std_errors.len() {
            return Err(Error::Validation(format!(
                "expected matching moment and std-error arrays with n_max >= 1 (got {} and {})",
                self.moments.len(),
                self.std_errors.len()
            )));
        }
        if let Some((n, m)) = self
            .moments
            .iter()
            .enumerate()
            .find(|(_, m)| !(m.is_finite() && **m > 0.0))
        {
            return Err(Error::Validation(format!("moment {n} = {m} is not positive")));
        }
        if let Some((n, s)) = self
            .std_errors
            .iter()
            .enumerate()
            .find(|(_, s)| !(s.is_finite() && **s >= 0.0))
        {
            return Err(Error::Validation(format!("std error {n} = {s} is negative")));
        }
        if !(self.m0.is_finite() && self.m0 > 0.0) {
            return Err(Error::Validation(format!("m0 = {} is not positive", self.m0)));
        }
        if self.v_hat != self.moments[0] {
            return Err(Error::Validation(format!(
                "v_hat {} differs from moment 0 {}",
                self.v_hat, self.moments[0]
            )));
        }
        Ok(())
    }
}

/// Estimates `E[M_T^{1/2-n}]` for `n = 0..=n_max` from a batch's integrated
/// variances, computing every power from the log of `M_T`.
///
/// `model` may differ from the batch's model only in its correlation, which
/// does not affect the volatility paths. The table's fingerprint is taken
/// from `model`.
pub fn estimate_moments(batch: &PathBatch, model: &VolModel, n_max: usize) -> Result<MomentTable> {
    if n_max < 1 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    if batch.integrated_variance.is_empty() {
        return Err(Error::MissingData("integrated variances"));
    }
    if model.with_rho(0.0) != batch.model.with_rho(0.0) {
        return Err(Error::Domain(
            "model volatility dynamics differ from the simulated batch".into(),
        ));
    }
    let maturity = batch.maturity;
    let m0 = model.m0(maturity)?;
    let floor = FLOOR_RATIO * m0;
    let total = batch.n_paths();
    let below = batch
        .integrated_variance
        .iter()
        .filter(|&&iv| !(iv >= floor))
        .count();
    if below as f64 > MAX_FLOORED_FRACTION * total as f64 {
        return Err(Error::PositivityFloor { below, total, floor });
    }
    // Each power starts from the log: M^{1/2} = exp(l/2), and each further
    // order multiplies by M^{-1} = exp(-l). The range behaviour is that of
    // exp((1/2 - n) l) at a fraction of the cost.
    let (mut column, inv): (Vec<f64>, Vec<f64>) = batch
        .integrated_variance
        .par_iter()
        .map(|&iv| {
            let l = iv.max(floor).ln();
            ((0.5 * l).exp(), (-l).exp())
        })
        .unzip();

    let antithetic = batch.config.antithetic;
    let mut estimates = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            column.par_iter_mut().zip(inv.par_iter()).for_each(|(c, r)| *c *= r);
        }
        estimates.push(McEstimate::from_samples(&column, antithetic));
    }

    let moments: Vec<f64> = estimates.iter().map(|e| e.value).collect();
    let std_errors: Vec<f64> = estimates.iter().map(|e| e.std_error).collect();
    let table = MomentTable {
        fingerprint: fingerprint(model, maturity, &batch.config),
        model: *model,
        maturity,
        sim: batch.config,
        m0,
        v: m0.sqrt(),
        v_hat: moments[0],
        moments,
        std_errors,
        floored_paths: below,
    };
    table.validate()?;
    Ok(table)
}

/// `v - v̂`, the variance-swap/volatility-swap convexity gap.
pub fn convexity_gap(table: &MomentTable) -> f64 {
    table.v - table.v_hat
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serialises a table to its text format.
pub fn table_to_string(table: &MomentTable) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# normvol moment table");
    let _ = writeln!(s, "format_version = {FORMAT_VERSION}");
    let _ = writeln!(s, "fingerprint = {}", table.fingerprint);
    let _ = writeln!(s, "model = {}", table.model.name());
    match table.model {
        VolModel::Heston(p) => {
            let _ = writeln!(s, "sigma0 = {}", fmt_f64(p.sigma0));
            let _ = writeln!(s, "kappa = {}", fmt_f64(p.kappa));
            let _ = writeln!(s, "theta = {}", fmt_f64(p.theta));
            let _ = writeln!(s, "nu = {}", fmt_f64(p.nu));
            let _ = writeln!(s, "rho = {}", fmt_f64(p.rho));
        }
        VolModel::Sabr(p) => {
            let _ = writeln!(s, "sigma0 = {}", fmt_f64(p.sigma0));
            let _ = writeln!(s, "nu = {}", fmt_f64(p.nu));
            let _ = writeln!(s, "rho = {}", fmt_f64(p.rho));
        }
    }
    let _ = writeln!(s, "maturity = {}", fmt_f64(table.maturity));
    let _ = writeln!(s, "seed = {}", table.sim.seed);
    let _ = writeln!(s, "n_paths = {}", table.sim.n_paths);
    let _ = writeln!(s, "steps_per_year = {}", table.sim.steps_per_year);
    let _ = writeln!(s, "antithetic = {}", table.sim.antithetic);
    let _ = writeln!(s, "floored_paths = {}", table.floored_paths);
    let _ = writeln!(s, "n_max = {}", table.n_max());
    let _ = writeln!(s, "m0 = {}", fmt_f64(table.m0));
    let _ = writeln!(s, "v = {}", fmt_f64(table.v));
    let _ = writeln!(s, "v_hat = {}", fmt_f64(table.v_hat));
    let _ = writeln!(s, "records = n, moment, std_error");
    for (n, (m, e)) in table.moments.iter().zip(&table.std_errors).enumerate() {
        let _ = writeln!(s, "{n}, {}, {}", fmt_f64(*m), fmt_f64(*e));
    }
    s
}

pub fn save_table(table: &MomentTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, table_to_string(table)).map_err(|e| Error::io(path, e))
}

/// Loads a table and checks its internal consistency: the stored fingerprint
/// must match the stored inputs, and every moment must be positive.
pub fn load_table(path: impl AsRef<Path>) -> Result<MomentTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    table_from_str(&text)
}

/// Loads a table and additionally rejects it unless it was built for
/// exactly `(model, maturity, sim)`.
pub fn load_table_for(
    path: impl AsRef<Path>,
    model: &VolModel,
    maturity: f64,
    sim: &SimConfig,
) -> Result<MomentTable> {
    let table = load_table(path)?;
    table.ensure_matches(model, maturity, sim)?;
    Ok(table)
}

struct Header<'a> {
    entries: Vec<(usize, &'a str, &'a str)>,
}

impl<'a> Header<'a> {
    fn raw(&self, key: &str) -> Result<(usize, &'a str)> {
        self.entries
            .iter()
            .find(|(_, k, _)| *k == key)
            .map(|(line, _, v)| (*line, *v))
            .ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("missing header key `{key}`"),
            })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let (line, v) = self.raw(key)?;
        v.parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid value `{v}` for `{key}`"),
        })
    }
}

pub fn table_from_str(text: &str) -> Result<MomentTable> {
    let mut entries = Vec::new();
    let mut records = Vec::new();
    let mut in_records = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if in_records {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            if fields.len() != 3 {
                return Err(parse_err(format!("expected 3 fields, found {}", fields.len())));
            }
            let n: usize = fields[0]
                .parse()
                .map_err(|_| parse_err(format!("bad index `{}`", fields[0])))?;
            let m: f64 = fields[1]
                .parse()
                .map_err(|_| parse_err(format!("bad moment `{}`", fields[1])))?;
            let e: f64 = fields[2]
                .parse()
                .map_err(|_| parse_err(format!("bad std error `{}`", fields[2])))?;
            if n != records.len() {
                return Err(parse_err(format!("expected record {}, found {n}", records.len())));
            }
            records.push((m, e));
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("expected `key = value`, found `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key == "records" {
            in_records = true;
        } else {
            entries.push((line_no, key, value));
        }
    }
    if !in_records {
        return Err(Error::Parse {
            line: 0,
            message: "missing `records` section".into(),
        });
    }
    let h = Header { entries };
    let version: u32 = h.get("format_version")?;
    if version != FORMAT_VERSION {
        return Err(Error::Parse {
            line: h.raw("format_version")?.0,
            message: format!("unsupported format version {version}"),
        });
    }
    let rho = h.get("rho")?;
    let model = match h.raw("model")?.1 {
        "heston" => VolModel::Heston(HestonParams {
            sigma0: h.get("sigma0")?,
            kappa: h.get("kappa")?,
            theta: h.get("theta")?,
            nu: h.get("nu")?,
            rho,
        }),
        "sabr" => VolModel::Sabr(SabrParams {
            sigma0: h.get("sigma0")?,
            nu: h.get("nu")?,
            rho,
        }),
        other => {
            return Err(Error::Parse {
                line: h.raw("model")?.0,
                message: format!("unknown model `{other}`"),
            })
        }
    };
    let sim = SimConfig {
        n_paths: h.get("n_paths")?,
        steps_per_year: h.get("steps_per_year")?,
        seed: h.get("seed")?,
        antithetic: h.get("antithetic")?,
    };
    let maturity: f64 = h.get("maturity")?;
    let n_max: usize = h.get("n_max")?;
    if records.len() != n_max + 1 {
        return Err(Error::Validation(format!(
            "header declares n_max = {n_max} but {} records follow",
            records.len()
        )));
    }
    let (moments, std_errors): (Vec<f64>, Vec<f64>) = records.into_iter().unzip();
    let table = MomentTable {
        fingerprint: h.raw("fingerprint")?.1.to_string(),
        model,
        maturity,
        sim,
        m0: h.get("m0")?,
        v: h.get("v")?,
        v_hat: h.get("v_hat")?,
        moments,
        std_errors,
        floored_paths: h.get("floored_paths")?,
    };
    model.validate()?;
    table.validate()?;
    let expected = fingerprint(&model, maturity, &sim);
    if expected != table.fingerprint {
        return Err(Error::Validation(format!(
            "fingerprint {} does not match header inputs ({expected})",
            table.fingerprint
        )));
    }
    let m0 = model.m0(maturity)?;
    if (m0 / table.m0 - 1.0).abs() > 1e-12 || (table.v / table.m0.sqrt() - 1.0).abs() > 1e-12 {
        return Err(Error::Validation(format!(
            "m0 = {} / v = {} inconsistent with the model (m0 = {m0})",
            table.m0, table.v
        )));
    }
    Ok(table)
}
