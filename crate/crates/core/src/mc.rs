//! Monte Carlo benchmarks and the control-variate study.
//!
//! Conditional Monte Carlo averages `Bac(T, x, k, √M_T)` over volatility
//! paths and is exact in law for the uncorrelated model. Full Monte Carlo
//! averages the payoff over simulated terminals and handles any correlation.

use std::time::Instant;

use rayon::prelude::*;

use crate::bachelier::{call_price, MarketSpec};
use crate::error::{Error, Result};
use crate::models::VolModel;
use crate::moments::{estimate_moments, MomentTable};
use crate::normal::{norm_cdf, norm_pdf};
use crate::paths::{simulate_asset_terminal, simulate_vol_paths, PathBatch, SimConfig};
use crate::series::{series_delta, series_gamma, series_price, DEFAULT_TERMS};
use crate::stats::{mean, sample_covariance, sample_variance, McEstimate};

/// Spot bump used by the finite-difference Greeks.
pub const FD_STEP: f64 = 1e-3;

fn check_batch_maturity(m: &MarketSpec, batch: &PathBatch) -> Result<()> {
    m.validate()?;
    if (m.maturity - batch.maturity).abs() > 1e-12 * batch.maturity {
        return Err(Error::MaturityMismatch {
            market: m.maturity,
            table: batch.maturity,
        });
    }
    if batch.integrated_variance.is_empty() {
        return Err(Error::MissingData("paths"));
    }
    Ok(())
}

/// `E[Bac(T, x, k, √M_T)]` over the batch's volatility paths (uncorrelated model).
pub fn conditional_price(m: &MarketSpec, batch: &PathBatch) -> Result<McEstimate> {
    Ok(conditional_prices(m.spot, &[m.strike], m.maturity, batch)?[0])
}

pub fn conditional_prices(
    spot: f64,
    strikes: &[f64],
    maturity: f64,
    batch: &PathBatch,
) -> Result<Vec<McEstimate>> {
    conditional_statistic(spot, strikes, maturity, batch, |a, s| call_price(a, s))
}

/// Pathwise derivative of the conditional Monte Carlo price in the spot.
pub fn conditional_greek(
    m: &MarketSpec,
    batch: &PathBatch,
    kind: GreekKind,
) -> Result<McEstimate> {
    Ok(conditional_greeks(m.spot, &[m.strike], m.maturity, batch, kind)?[0])
}

pub fn conditional_greeks(
    spot: f64,
    strikes: &[f64],
    maturity: f64,
    batch: &PathBatch,
    kind: GreekKind,
) -> Result<Vec<McEstimate>> {
    match kind {
        GreekKind::Delta => {
            conditional_statistic(spot, strikes, maturity, batch, |a, s| norm_cdf(a / s))
        }
        GreekKind::Gamma => {
            conditional_statistic(spot, strikes, maturity, batch, |a, s| norm_pdf(a / s) / s)
        }
    }
}

fn conditional_statistic(
    spot: f64,
    strikes: &[f64],
    maturity: f64,
    batch: &PathBatch,
    f: impl Fn(f64, f64) -> f64 + Sync,
) -> Result<Vec<McEstimate>> {
    for &k in strikes {
        check_batch_maturity(&MarketSpec::new(spot, k, maturity)?, batch)?;
    }
    let sqrt_t = maturity.sqrt();
    let devs: Vec<f64> = batch
        .integrated_variance
        .par_iter()
        .map(|iv| iv.max(0.0).sqrt() * sqrt_t)
        .collect();
    let antithetic = batch.config.antithetic;
    Ok(strikes
        .iter()
        .map(|&k| {
            let a = spot - k;
            let samples: Vec<f64> = devs
                .par_iter()
                .map(|&s| if s > 0.0 { f(a, s) } else { f(a, f64::MIN_POSITIVE) })
                .collect();
            McEstimate::from_samples(&samples, antithetic)
        })
        .collect())
}

fn terminals(batch: &PathBatch) -> Result<(&[f64], f64)> {
    let xs = batch
        .terminal_x
        .as_deref()
        .ok_or(Error::MissingData("terminal asset values"))?;
    let x0 = batch.x0.ok_or(Error::MissingData("initial spot"))?;
    Ok((xs, x0))
}

/// Mean of `(X_T - k)⁺` over simulated terminals. The model is additive in
/// the spot, so terminals simulated from `x₀` are shifted to `m.spot`.
pub fn full_mc_price(m: &MarketSpec, batch: &PathBatch) -> Result<McEstimate> {
    check_batch_maturity(m, batch)?;
    let (xs, x0) = terminals(batch)?;
    let shift = m.spot - x0;
    let samples: Vec<f64> = xs
        .par_iter()
        .map(|x| (x + shift - m.strike).max(0.0))
        .collect();
    Ok(McEstimate::from_samples(&samples, batch.config.antithetic))
}

/// Central finite-difference Greek of [`full_mc_price`] with common random
/// numbers: the same terminals are shifted by `±h`.
pub fn fd_mc_greek(m: &MarketSpec, batch: &PathBatch, kind: GreekKind, h: f64) -> Result<McEstimate> {
    check_batch_maturity(m, batch)?;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Domain(format!("finite-difference step must be positive, got {h}")));
    }
    let (xs, x0) = terminals(batch)?;
    let shift = m.spot - x0 - m.strike;
    let samples: Vec<f64> = xs
        .par_iter()
        .map(|x| {
            let base = x + shift;
            let up = (base + h).max(0.0);
            let down = (base - h).max(0.0);
            match kind {
                GreekKind::Delta => (up - down) / (2.0 * h),
                GreekKind::Gamma => (up - 2.0 * base.max(0.0) + down) / (h * h),
            }
        })
        .collect();
    Ok(McEstimate::from_samples(&samples, batch.config.antithetic))
}

/// Central finite-difference Greeks by bump and reprice: the full Monte
/// Carlo pricer is rerun from `x₀ ± h` (and `x₀` for Gamma) with the same
/// seed, so all runs share their random numbers.
pub fn fd_mc_greeks_resimulated(
    x0: f64,
    strikes: &[f64],
    maturity: f64,
    model: &VolModel,
    cfg: &SimConfig,
    kind: GreekKind,
    h: f64,
) -> Result<Vec<McEstimate>> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Domain(format!("finite-difference step must be positive, got {h}")));
    }
    let up = simulate_asset_terminal(model, x0 + h, maturity, cfg, false)?;
    let down = simulate_asset_terminal(model, x0 - h, maturity, cfg, false)?;
    let mid = match kind {
        GreekKind::Delta => None,
        GreekKind::Gamma => Some(simulate_asset_terminal(model, x0, maturity, cfg, false)?),
    };
    let (xu, _) = terminals(&up)?;
    let (xd, _) = terminals(&down)?;
    let xm = match &mid {
        Some(b) => Some(terminals(b)?.0),
        None => None,
    };
    strikes
        .iter()
        .map(|&k| {
            MarketSpec::new(x0, k, maturity)?;
            let samples: Vec<f64> = (0..xu.len())
                .into_par_iter()
                .map(|i| {
                    let cu = (xu[i] - k).max(0.0);
                    let cd = (xd[i] - k).max(0.0);
                    match xm {
                        None => (cu - cd) / (2.0 * h),
                        Some(xm) => (cu - 2.0 * (xm[i] - k).max(0.0) + cd) / (h * h),
                    }
                })
                .collect();
            Ok(McEstimate::from_samples(&samples, cfg.antithetic))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CvKind {
    /// `X_T - X₀`.
    Cv1,
    /// Variance swap: `M_T - M₀`.
    Cv2,
    /// Volatility swap: `√M_T - v̂`.
    Cv3,
    /// `(X_T⁰ - K)⁺ - V`, with `V` the series price of the uncorrelated twin.
    Cv4,
}

impl CvKind {
    pub const ALL: [CvKind; 4] = [CvKind::Cv1, CvKind::Cv2, CvKind::Cv3, CvKind::Cv4];

    pub fn name(self) -> &'static str {
        match self {
            CvKind::Cv1 => "cv1",
            CvKind::Cv2 => "cv2",
            CvKind::Cv3 => "cv3",
            CvKind::Cv4 => "cv4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaMode {
    /// β* fitted on the same paths it is applied to.
    InSample,
    /// β* fitted on the first half of the sampling units and applied to the
    /// second half.
    OutOfSample,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvResult {
    pub kind: CvKind,
    pub beta_star: f64,
    /// `Var((X_T - K)⁺)`.
    pub var_plain: f64,
    /// `Var((X_T - K)⁺ - β* Z)`.
    pub var_cv: f64,
    pub reduction_factor: f64,
    /// Control-variate price estimate `mean(Y - β* Z)`.
    pub estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvFit {
    pub beta_star: f64,
    pub var_plain: f64,
    pub var_cv: f64,
    pub reduction_factor: f64,
}

/// β*, the residual variance and the reduction factor for payoff samples `y`
/// and control samples `z` (which should have zero expectation). The control
/// is treated as degenerate when its standard deviation is below `1e-10`
/// times `z_scale`, the typical magnitude of the uncentered control.
///
/// In-sample, the residual variance is the OLS identity
/// `Var(Y) - Cov(Y,Z)²/Var(Z)`, so it never exceeds `Var(Y)`.
pub fn control_variate_fit(y: &[f64], z: &[f64], z_scale: f64, mode: BetaMode) -> Result<CvFit> {
    if y.len() != z.len() || y.len() < 4 {
        return Err(Error::Domain("control variate needs at least 4 paired samples".into()));
    }
    let (fit_y, fit_z, eval_y, eval_z) = match mode {
        BetaMode::InSample => (y, z, y, z),
        BetaMode::OutOfSample => {
            // split on an even index so antithetic pairs stay together
            let half = (y.len() / 4) * 2;
            (&y[..half], &z[..half], &y[half..], &z[half..])
        }
    };
    let var_z = sample_variance(fit_z);
    if !(var_z > 0.0) || var_z.sqrt() <= 1e-10 * z_scale.abs() {
        return Err(Error::DegenerateControlVariate("zero-variance control"));
    }
    let beta = sample_covariance(fit_y, fit_z) / var_z;
    let var_plain = sample_variance(eval_y);
    let var_cv = match mode {
        BetaMode::InSample => {
            let cov = sample_covariance(y, z);
            (var_plain - cov * cov / var_z).max(0.0)
        }
        BetaMode::OutOfSample => {
            let resid: Vec<f64> = eval_y.iter().zip(eval_z).map(|(a, b)| a - beta * b).collect();
            sample_variance(&resid)
        }
    };
    let factor = if var_plain == 0.0 {
        1.0
    } else if var_cv == 0.0 {
        f64::INFINITY
    } else {
        var_plain / var_cv
    };
    Ok(CvFit {
        beta_star: beta,
        var_plain,
        var_cv,
        reduction_factor: factor,
    })
}

/// Coupled paths `(X_T, X_T⁰, M_T)` for one model and maturity, plus the
/// uncorrelated moment table estimated on the same volatility paths.
#[derive(Debug, Clone)]
pub struct ControlVariateStudy {
    pub batch: PathBatch,
    pub table: MomentTable,
    pub n_terms: usize,
}

impl ControlVariateStudy {
    pub fn new(
        model: &VolModel,
        x0: f64,
        maturity: f64,
        cfg: &SimConfig,
        n_terms: usize,
    ) -> Result<Self> {
        let batch = simulate_asset_terminal(model, x0, maturity, cfg, true)?;
        let table = estimate_moments(&batch, &model.with_rho(0.0), n_terms.max(1))?;
        Ok(Self {
            batch,
            table,
            n_terms,
        })
    }

    pub fn x0(&self) -> f64 {
        self.batch.x0.unwrap_or_default()
    }

    /// Series price of the uncorrelated twin at `strike`.
    pub fn reference_price(&self, strike: f64) -> Result<f64> {
        let m = MarketSpec::new(self.x0(), strike, self.batch.maturity)?;
        Ok(series_price(&m, &self.table, self.n_terms)?.price)
    }

    pub fn evaluate(&self, strike: f64, kind: CvKind, mode: BetaMode) -> Result<CvResult> {
        let reference = if kind == CvKind::Cv4 {
            self.reference_price(strike)?
        } else {
            0.0
        };
        self.evaluate_with_reference(strike, kind, reference, mode)
    }

    pub fn evaluate_with_reference(
        &self,
        strike: f64,
        kind: CvKind,
        series_ref: f64,
        mode: BetaMode,
    ) -> Result<CvResult> {
        let m = MarketSpec::new(self.x0(), strike, self.batch.maturity)?;
        let (xs, x0) = terminals(&self.batch)?;
        let y: Vec<f64> = xs.par_iter().map(|x| (x - m.strike).max(0.0)).collect();
        let iv = &self.batch.integrated_variance;
        let z: Vec<f64> = match kind {
            CvKind::Cv1 => xs.par_iter().map(|x| x - x0).collect(),
            CvKind::Cv2 => iv.par_iter().map(|v| v - self.table.m0).collect(),
            CvKind::Cv3 => iv.par_iter().map(|v| v.sqrt() - self.table.v_hat).collect(),
            CvKind::Cv4 => self
                .batch
                .terminal_x_rho0
                .as_deref()
                .ok_or(Error::MissingData("uncorrelated twin terminals"))?
                .par_iter()
                .map(|x| (x - m.strike).max(0.0) - series_ref)
                .collect(),
        };
        let z_scale = match kind {
            CvKind::Cv1 => x0.abs().max(self.table.v * m.maturity.sqrt()),
            CvKind::Cv2 => self.table.m0,
            CvKind::Cv3 => self.table.v,
            CvKind::Cv4 => series_ref.abs().max(self.table.v * m.maturity.sqrt()),
        };
        let fit = control_variate_fit(&y, &z, z_scale, mode).map_err(|e| match e {
            Error::DegenerateControlVariate(_) => Error::DegenerateControlVariate(kind.name()),
            other => other,
        })?;
        Ok(CvResult {
            kind,
            beta_star: fit.beta_star,
            var_plain: fit.var_plain,
            var_cv: fit.var_cv,
            reduction_factor: fit.reduction_factor,
            estimate: mean(&y) - fit.beta_star * mean(&z),
        })
    }
}

/// One control-variate evaluation on freshly simulated coupled paths.
/// `series_ref` is the uncorrelated series price at the same contract.
pub fn control_variate_study(
    m: &MarketSpec,
    model: &VolModel,
    cfg: &SimConfig,
    kind: CvKind,
    series_ref: f64,
) -> Result<CvResult> {
    m.validate()?;
    let study = ControlVariateStudy::new(model, m.spot, m.maturity, cfg, DEFAULT_TERMS)?;
    study.evaluate_with_reference(m.strike, kind, series_ref, BetaMode::InSample)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreekKind {
    Delta,
    Gamma,
}

impl GreekKind {
    pub fn name(self) -> &'static str {
        match self {
            GreekKind::Delta => "delta",
            GreekKind::Gamma => "gamma",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreekRow {
    pub strike: f64,
    pub series: f64,
    pub fd_mc: McEstimate,
    pub conditional_mc: McEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreekBenchmark {
    pub kind: GreekKind,
    pub maturity: f64,
    pub rows: Vec<GreekRow>,
    /// `(method, seconds)` wall-clock, each the fastest of the configured repeats.
    pub timings: Vec<(&'static str, f64)>,
}

impl GreekBenchmark {
    pub fn seconds(&self, method: &str) -> Option<f64> {
        self.timings.iter().find(|(m, _)| *m == method).map(|(_, s)| *s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreekBenchOptions {
    pub n_terms: usize,
    pub fd_step: f64,
    pub repeats: usize,
}

impl Default for GreekBenchOptions {
    fn default() -> Self {
        Self {
            n_terms: DEFAULT_TERMS,
            fd_step: FD_STEP,
            repeats: 1,
        }
    }
}

pub const METHOD_SERIES: &str = "series";
pub const METHOD_CONDITIONAL: &str = "conditional_mc";
pub const METHOD_FD: &str = "finite_difference_mc";
/// Volatility-path simulation shared by the series and conditional methods.
pub const METHOD_SHARED: &str = "shared_vol_paths";

fn timed<T>(repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, f64)> {
    let mut best = f64::INFINITY;
    let mut out = None;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let value = f()?;
        best = best.min(start.elapsed().as_secs_f64());
        out = Some(value);
    }
    Ok((out.expect("at least one repeat"), best))
}

/// Delta or Gamma across a strike grid by three methods: the analytical
/// series Greek, the pathwise-differentiated conditional Monte Carlo price,
/// and central finite differences of the full Monte Carlo price with common
/// random numbers.
///
/// The series and conditional methods both start from the same volatility
/// paths. Their simulation is timed once under [`METHOD_SHARED`] and each
/// method is charged for what it does on top: estimating the moment table and
/// evaluating the series, or averaging the pathwise Greek. The finite
/// difference method is charged for its bumped asset simulations.
pub fn greek_benchmark(
    x0: f64,
    strikes: &[f64],
    maturity: f64,
    model: &VolModel,
    cfg: &SimConfig,
    kind: GreekKind,
    opts: GreekBenchOptions,
) -> Result<GreekBenchmark> {
    if model.rho() != 0.0 {
        return Err(Error::Domain(
            "the Greek benchmark compares uncorrelated pricers (rho = 0)".into(),
        ));
    }
    if strikes.is_empty() {
        return Err(Error::Domain("empty strike grid".into()));
    }
    let specs: Vec<MarketSpec> = strikes
        .iter()
        .map(|&k| MarketSpec::new(x0, k, maturity))
        .collect::<Result<_>>()?;

    let (batch, t_shared) = timed(opts.repeats, || simulate_vol_paths(model, maturity, cfg))?;

    let (series, t_series) = timed(opts.repeats, || {
        let table = estimate_moments(&batch, model, opts.n_terms.max(1))?;
        specs
            .iter()
            .map(|m| match kind {
                GreekKind::Delta => series_delta(m, &table, opts.n_terms),
                GreekKind::Gamma => series_gamma(m, &table, opts.n_terms),
            })
            .collect::<Result<Vec<f64>>>()
    })?;

    let (conditional, t_conditional) = timed(opts.repeats, || {
        conditional_greeks(x0, strikes, maturity, &batch, kind)
    })?;

    let (fd, t_fd) = timed(opts.repeats, || {
        fd_mc_greeks_resimulated(x0, strikes, maturity, model, cfg, kind, opts.fd_step)
    })?;

    let rows = strikes
        .iter()
        .enumerate()
        .map(|(i, &strike)| GreekRow {
            strike,
            series: series[i],
            fd_mc: fd[i],
            conditional_mc: conditional[i],
        })
        .collect();
    Ok(GreekBenchmark {
        kind,
        maturity,
        rows,
        timings: vec![
            (METHOD_SHARED, t_shared),
            (METHOD_SERIES, t_series),
            (METHOD_CONDITIONAL, t_conditional),
            (METHOD_FD, t_fd),
        ],
    })
}
