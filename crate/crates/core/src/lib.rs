//! Bachelier (normal-model) option pricing under stochastic volatility.
//!
//! When the asset and its volatility are uncorrelated, a European call in the
//! Bachelier model is a mixture of Bachelier prices over the realised root mean
//! square volatility. Expanding that mixture in powers of the squared moneyness
//! gives an exact series whose coefficients are negative fractional moments of
//! the average future variance `M_T = (1/T)∫σ²ds`. Once those moments are
//! estimated and stored, every strike is priced in closed form.
//!
//! The crate is organised bottom-up:
//!
//! - [`bachelier`]: closed-form prices, sensitivities, the fourth-derivative
//!   kernel, implied-volatility inversion and the ATM Black–Scholes conversion.
//! - [`models`]: Heston and SABR parameter sets with their closed-form
//!   variance-swap levels and quadratic-variation densities.
//! - [`paths`]: deterministic, parallel path simulation with antithetic pairs.
//! - [`moments`]: estimation, persistence and validation of moment tables.
//! - [`series`]: the moneyness series, its Greeks, truncation selection, and
//!   the path-integral decomposition pricer.
//! - [`mc`]: conditional and full Monte Carlo benchmarks, control variates,
//!   and the Greek benchmark harness.
//! - [`config`] and [`commands`]: experiment configuration and the CSV reports
//!   behind the `normvol` binary.
//!
//! All prices are undiscounted (zero rates) and quoted in absolute currency
//! units; volatilities are absolute (normal) volatilities.

pub mod bachelier;
pub mod commands;
pub mod config;
pub mod error;
pub mod mc;
pub mod models;
pub mod moments;
pub mod normal;
pub mod paths;
pub mod series;
pub mod stats;

pub use bachelier::{
    atm_bachelier_from_bs, bachelier_delta, bachelier_gamma, bachelier_kernel, bachelier_price,
    bachelier_quote, bachelier_vega, implied_vol_bachelier, BachelierQuote, MarketSpec,
};
pub use error::{Error, Result};
pub use mc::{
    conditional_price, control_variate_study, full_mc_price, greek_benchmark, CvKind, CvResult,
    GreekBenchmark, GreekKind,
};
pub use models::{HestonParams, SabrParams, VolModel};
pub use moments::{convexity_gap, estimate_moments, load_table, save_table, MomentTable};
pub use paths::{simulate_asset_terminal, simulate_vol_paths, PathBatch, SimConfig};
pub use series::{
    optimal_terms, price_via_decomposition, series_delta, series_gamma, series_price, SeriesPrice,
};
pub use stats::McEstimate;
