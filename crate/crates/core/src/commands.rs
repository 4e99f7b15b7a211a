//! The reports behind the `normvol` binary.
//!
//! Each command turns an [`ExperimentConfig`] into a set of output files.
//! Every CSV starts with a `#` line carrying the command, the config hash and
//! the seed, followed by a header row. Floating-point values are printed with
//! 17 significant digits, so a rerun with the same configuration reproduces
//! the files byte for byte. The only exception is `greeks_timing.csv`, whose
//! wall-clock column is flagged as nondeterministic.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::bachelier::{implied_vol_bachelier, MarketSpec};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::mc::{
    conditional_prices, greek_benchmark, BetaMode, ControlVariateStudy, CvKind,
    GreekBenchOptions, GreekKind,
};
use crate::models::VolModel;
use crate::moments::{
    convexity_gap, estimate_moments, load_table_for, table_to_string, MomentTable,
};
use crate::paths::{simulate_vol_paths, PathBatch};
use crate::series::{optimal_terms, series_price};

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Price {
        strike: Option<f64>,
        maturity: Option<f64>,
        benchmark: bool,
    },
    Smile,
    Nstar,
    Greeks,
    Cv,
    Moments,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Price { .. } => "price",
            Command::Smile => "smile",
            Command::Nstar => "nstar",
            Command::Greeks => "greeks",
            Command::Cv => "cv",
            Command::Moments => "moments",
        }
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub terms: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &ExperimentConfig) -> Result<ExperimentConfig> {
        let mut cfg = cfg.clone();
        if let Some(seed) = self.seed {
            cfg.sim.seed = seed;
        }
        if let Some(paths) = self.paths {
            cfg.sim.n_paths = paths;
        }
        if let Some(terms) = self.terms {
            cfg.series.n_terms = terms;
            if cfg.series.n_max.is_some_and(|n| n < terms) {
                cfg.series.n_max = Some(terms);
            }
        }
        if let Some(out) = &self.out {
            cfg.output.directory = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
    /// False when the file contains wall-clock measurements.
    pub deterministic: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub files: Vec<OutputFile>,
    /// Short human-readable report for stdout.
    pub summary: String,
}

impl RunOutput {
    fn push(&mut self, name: impl Into<String>, contents: String) {
        self.files.push(OutputFile {
            name: name.into(),
            contents,
            deterministic: true,
        });
    }

    pub fn file(&self, name: &str) -> Option<&OutputFile> {
        self.files.iter().find(|f| f.name == name)
    }

    /// Writes every file into `dir`, creating it if needed.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.files
            .iter()
            .map(|f| {
                let path = dir.join(&f.name);
                std::fs::write(&path, &f.contents).map_err(|e| Error::io(&path, e))?;
                Ok(path)
            })
            .collect()
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_preamble(cfg: &ExperimentConfig, command: &str, header: &str) -> String {
    format!(
        "# normvol {command} config_hash={} seed={} n_paths={}\n{header}\n",
        cfg.hash(),
        cfg.sim.seed,
        cfg.sim.n_paths
    )
}

pub fn moment_file_name(maturity: f64) -> String {
    format!("moments_T{maturity}.txt")
}

fn uncorrelated_model(cfg: &ExperimentConfig, command: &str) -> Result<VolModel> {
    let model = cfg.vol_model()?;
    if model.rho() != 0.0 {
        return Err(Error::Config(format!(
            "`{command}` prices the uncorrelated model; set model.rho = 0"
        )));
    }
    Ok(model)
}

/// Loads `moments_T{T}.txt` from the output directory when it was built for
/// the same model, maturity and simulation settings with enough moments;
/// otherwise simulates and returns a fresh table plus its file contents.
fn cached_or_fresh_table(
    cfg: &ExperimentConfig,
    model: &VolModel,
    maturity: f64,
) -> Result<(MomentTable, Option<String>)> {
    let path = cfg.output.directory.join(moment_file_name(maturity));
    let sim = cfg.sim_config();
    if path.exists() {
        match load_table_for(&path, model, maturity, &sim) {
            Ok(table) if table.n_max() >= cfg.n_max() => return Ok((table, None)),
            Ok(_) | Err(Error::StaleCache { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let batch = simulate_vol_paths(model, maturity, &sim)?;
    let table = estimate_moments(&batch, model, cfg.n_max())?;
    let text = table_to_string(&table);
    Ok((table, Some(text)))
}

fn fresh_table(
    cfg: &ExperimentConfig,
    model: &VolModel,
    maturity: f64,
) -> Result<(PathBatch, MomentTable)> {
    let batch = simulate_vol_paths(model, maturity, &cfg.sim_config())?;
    let table = estimate_moments(&batch, model, cfg.n_max())?;
    Ok((batch, table))
}

pub fn run(cfg: &ExperimentConfig, command: &Command) -> Result<RunOutput> {
    match command {
        Command::Price {
            strike,
            maturity,
            benchmark,
        } => cmd_price(cfg, *strike, *maturity, *benchmark),
        Command::Smile => cmd_smile(cfg),
        Command::Nstar => cmd_nstar(cfg),
        Command::Greeks => cmd_greeks(cfg),
        Command::Cv => cmd_cv(cfg),
        Command::Moments => cmd_moments(cfg),
    }
}

/// Series prices on the strike grid (or a single strike / maturity).
/// With `benchmark`, adds a conditional Monte Carlo price and its 95% CI.
pub fn cmd_price(
    cfg: &ExperimentConfig,
    strike: Option<f64>,
    maturity: Option<f64>,
    benchmark: bool,
) -> Result<RunOutput> {
    let model = uncorrelated_model(cfg, "price")?;
    let strikes = match strike {
        Some(k) => vec![k],
        None => cfg.strikes()?,
    };
    let maturities = match maturity {
        Some(t) => vec![t],
        None => cfg.market.maturities.clone(),
    };
    let n_terms = cfg.series.n_terms;
    let mut header = String::from("maturity,strike,leading,series,n_used,wing_divergence");
    if benchmark {
        header.push_str(",mc_price,mc_std_error,mc_ci_low,mc_ci_high,mc_covers_series");
    }
    let mut csv = csv_preamble(cfg, "price", &header);
    let mut out = RunOutput::default();

    for &t in &maturities {
        let (table, mc) = if benchmark {
            let (batch, table) = fresh_table(cfg, &model, t)?;
            let mc = conditional_prices(cfg.market.x0, &strikes, t, &batch)?;
            (table, Some(mc))
        } else {
            let (table, text) = cached_or_fresh_table(cfg, &model, t)?;
            if let Some(text) = text {
                out.push(moment_file_name(t), text);
            }
            (table, None)
        };
        for (i, &k) in strikes.iter().enumerate() {
            let m = MarketSpec::new(cfg.market.x0, k, t)?;
            let s = series_price(&m, &table, n_terms)?;
            let _ = write!(
                csv,
                "{},{},{},{},{},{}",
                num(t),
                num(k),
                num(s.leading),
                num(s.price),
                s.n_used,
                s.wing_divergence
            );
            if let Some(mc) = &mc {
                let e = mc[i];
                let _ = write!(
                    csv,
                    ",{},{},{},{},{}",
                    num(e.value),
                    num(e.std_error),
                    num(e.ci95.0),
                    num(e.ci95.1),
                    e.contains(s.price)
                );
            }
            csv.push('\n');
        }
    }
    out.summary = csv.clone();
    out.push("price.csv", csv);
    Ok(out)
}

/// Implied-vol smile of the series against conditional Monte Carlo on the
/// same volatility paths. Inversion failures are reported per row.
pub fn cmd_smile(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let model = uncorrelated_model(cfg, "smile")?;
    let strikes = cfg.strikes()?;
    let mut csv = csv_preamble(
        cfg,
        "smile",
        "maturity,strike,iv_series,iv_benchmark,rel_error,status",
    );
    let mut failures = 0usize;
    let mut worst = (f64::NAN, 0.0f64, 0.0f64);
    for &t in &cfg.market.maturities {
        let (batch, table) = fresh_table(cfg, &model, t)?;
        let bench = conditional_prices(cfg.market.x0, &strikes, t, &batch)?;
        for (i, &k) in strikes.iter().enumerate() {
            let m = MarketSpec::new(cfg.market.x0, k, t)?;
            let row = series_price(&m, &table, cfg.series.n_terms).and_then(|s| {
                let iv_s = implied_vol_bachelier(&m, s.price)?;
                let iv_b = implied_vol_bachelier(&m, bench[i].value)?;
                Ok((iv_s, iv_b))
            });
            match row {
                Ok((iv_s, iv_b)) => {
                    let rel = (iv_s - iv_b).abs() / iv_b;
                    if !(rel <= worst.0) {
                        worst = (rel, t, k);
                    }
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},ok",
                        num(t),
                        num(k),
                        num(iv_s),
                        num(iv_b),
                        num(rel)
                    );
                }
                Err(e) => {
                    failures += 1;
                    let status = e.to_string().replace([',', '\n'], ";");
                    let _ = writeln!(csv, "{},{},,,,{status}", num(t), num(k));
                }
            }
        }
    }
    let mut out = RunOutput {
        summary: format!(
            "smile: largest relative IV error {:.3e} at T={} k={}; {failures} rows without an implied vol\n",
            worst.0, worst.1, worst.2
        ),
        ..Default::default()
    };
    out.push("smile.csv", csv);
    Ok(out)
}

/// Optimal truncation order per strike and maturity.
pub fn cmd_nstar(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let model = uncorrelated_model(cfg, "nstar")?;
    let strikes = cfg.strikes()?;
    let mut csv = csv_preamble(cfg, "nstar", "maturity,strike,n_star,err_next,status");
    let mut out = RunOutput::default();
    let mut failures = 0usize;
    for &t in &cfg.market.maturities {
        let (table, text) = cached_or_fresh_table(cfg, &model, t)?;
        if let Some(text) = text {
            out.push(moment_file_name(t), text);
        }
        for &k in &strikes {
            let m = MarketSpec::new(cfg.market.x0, k, t)?;
            match optimal_terms(&m, &table, cfg.series.n_star_tol) {
                Ok(c) => {
                    let _ = writeln!(csv, "{},{},{},{},ok", num(t), num(k), c.n_star, num(c.error));
                }
                Err(Error::NonConvergence { last_error, .. }) => {
                    failures += 1;
                    let _ = writeln!(
                        csv,
                        "{},{},,{},non_convergence",
                        num(t),
                        num(k),
                        num(last_error)
                    );
                }
                Err(e) => return Err(e),
            }
        }
    }
    out.summary = format!(
        "nstar: {} rows, {failures} without convergence below {}\n",
        strikes.len() * cfg.market.maturities.len(),
        cfg.series.n_star_tol
    );
    out.push("nstar.csv", csv);
    Ok(out)
}

/// Delta and Gamma by series, conditional MC and FD-on-MC, with timings.
pub fn cmd_greeks(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let model = uncorrelated_model(cfg, "greeks")?;
    let strikes = cfg.strikes()?;
    let opts = GreekBenchOptions {
        n_terms: cfg.series.n_terms,
        ..Default::default()
    };
    let mut csv = csv_preamble(
        cfg,
        "greeks",
        "greek,maturity,strike,series,conditional_mc,conditional_mc_std_error,fd_mc,fd_mc_std_error",
    );
    let mut timing = format!(
        "# normvol greeks config_hash={} seed={} n_paths={} nondeterministic=seconds\nmethod,seconds,greek,maturity\n",
        cfg.hash(),
        cfg.sim.seed,
        cfg.sim.n_paths
    );
    let mut summary = String::new();
    for kind in [GreekKind::Delta, GreekKind::Gamma] {
        for &t in &cfg.market.maturities {
            let b = greek_benchmark(
                cfg.market.x0,
                &strikes,
                t,
                &model,
                &cfg.sim_config(),
                kind,
                opts,
            )?;
            for r in &b.rows {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{}",
                    kind.name(),
                    num(t),
                    num(r.strike),
                    num(r.series),
                    num(r.conditional_mc.value),
                    num(r.conditional_mc.std_error),
                    num(r.fd_mc.value),
                    num(r.fd_mc.std_error)
                );
            }
            for (method, secs) in &b.timings {
                let _ = writeln!(timing, "{method},{secs:.6},{},{}", kind.name(), num(t));
                let _ = writeln!(summary, "{} T={t}: {method} {secs:.3}s", kind.name());
            }
        }
    }
    let mut out = RunOutput {
        summary,
        ..Default::default()
    };
    out.push("greeks.csv", csv);
    out.files.push(OutputFile {
        name: "greeks_timing.csv".into(),
        contents: timing,
        deterministic: false,
    });
    Ok(out)
}

/// Plain and control-variate payoff variances for CV1 to CV4 over the grid.
pub fn cmd_cv(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let model = cfg.vol_model()?;
    let strikes = cfg.strikes()?;
    let mut header = String::from("maturity,strike,var_plain");
    for prefix in ["var", "factor", "beta"] {
        for kind in CvKind::ALL {
            let _ = write!(header, ",{prefix}_{}", kind.name());
        }
    }
    let mut csv = csv_preamble(cfg, "cv", &header);
    for &t in &cfg.market.maturities {
        let study = ControlVariateStudy::new(
            &model,
            cfg.market.x0,
            t,
            &cfg.sim_config(),
            cfg.series.n_terms,
        )?;
        for &k in &strikes {
            let results = CvKind::ALL
                .iter()
                .map(|&kind| study.evaluate(k, kind, BetaMode::InSample))
                .collect::<Result<Vec<_>>>()?;
            let _ = write!(csv, "{},{},{}", num(t), num(k), num(results[0].var_plain));
            for r in &results {
                let _ = write!(csv, ",{}", num(r.var_cv));
            }
            for r in &results {
                let _ = write!(csv, ",{}", num(r.reduction_factor));
            }
            for r in &results {
                let _ = write!(csv, ",{}", num(r.beta_star));
            }
            csv.push('\n');
        }
    }
    let mut out = RunOutput {
        summary: format!(
            "cv: {} strikes x {} maturities for {}\n",
            strikes.len(),
            cfg.market.maturities.len(),
            model.name()
        ),
        ..Default::default()
    };
    out.push("cv.csv", csv);
    Ok(out)
}

/// Moment tables per maturity plus a CSV listing of their contents.
/// Tables are built for the uncorrelated model; the correlation does not
/// affect the volatility paths.
pub fn cmd_moments(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let model = cfg.vol_model()?.with_rho(0.0);
    let mut csv = csv_preamble(
        cfg,
        "moments",
        "maturity,n,moment,std_error,gap,fingerprint",
    );
    let mut out = RunOutput::default();
    let mut summary = String::new();
    for &t in &cfg.market.maturities {
        let (_, table) = fresh_table(cfg, &model, t)?;
        let gaps = table.gaps();
        for n in 0..=table.n_max() {
            let _ = writeln!(
                csv,
                "{},{n},{},{},{},{}",
                num(t),
                num(table.moments[n]),
                num(table.std_errors[n]),
                num(gaps[n]),
                table.fingerprint
            );
        }
        let _ = writeln!(
            summary,
            "T={t}: v={:.6} v_hat={:.6} convexity gap={:.3e} floored={}",
            table.v,
            table.v_hat,
            convexity_gap(&table),
            table.floored_paths
        );
        out.push(moment_file_name(t), table_to_string(&table));
    }
    out.summary = summary;
    out.push("moments.csv", csv);
    Ok(out)
}
