//! The moneyness series for uncorrelated Bachelier prices.
//!
//! With `A = -(x-k)²/(2T)`, `v = √M₀` and `D_n = E[M_T^{1/2-n}] - M₀^{1/2-n}`,
//!
//! ```text
//! V = Bac(T,x,k,v) + √(T/2π)·(v̂ - v) - √(T/2π)·Σ_{n≥1} Aⁿ/(n!(2n-1))·D_n
//! ```
//!
//! which is the term-by-term expectation of
//! `Bac(σ) - Bac(v) = √T ∫_v^σ N'((x-k)/(s√T)) ds` expanded in `A`. The
//! series is entire in `A`, so it converges at every strike, but far in the
//! wings the terms grow before they decay and the truncation must be long
//! enough to get past the peak.
//!
//! This module also hosts the path-integral decomposition pricer, an
//! independent route to the same price through `∫ K_Bac(v_s) d⟨M,M⟩_s`.

use rayon::prelude::*;

use crate::bachelier::{call_price, implied_vol_bachelier, kernel, MarketSpec};
use crate::error::{Error, Result};
use crate::moments::MomentTable;
use crate::normal::{norm_cdf, norm_pdf, INV_SQRT_2PI};
use crate::paths::PathBatch;
use crate::stats::McEstimate;

/// Default truncation order.
pub const DEFAULT_TERMS: usize = 30;

/// Default tolerance (absolute Bachelier vol units) for [`optimal_terms`].
pub const DEFAULT_NSTAR_TOL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPrice {
    pub price: f64,
    /// `Bac(T, x, k, v)`.
    pub leading: f64,
    /// `terms[0]` is the `√(T/2π)(v̂ - v)` correction, `terms[n]` the n-th
    /// moneyness term.
    pub terms: Vec<f64>,
    pub n_used: usize,
    /// Index (≥ 1) of the largest moneyness term in absolute value, 0 if none.
    pub largest_term_index: usize,
    pub last_term_magnitude: f64,
    /// The terms were still growing at the truncation point, so the partial
    /// sum has not started to converge.
    pub wing_divergence: bool,
}

fn check_inputs(m: &MarketSpec, table: &MomentTable, n_terms: usize) -> Result<()> {
    m.validate()?;
    if (m.maturity - table.maturity).abs() > 1e-12 * table.maturity {
        return Err(Error::MaturityMismatch {
            market: m.maturity,
            table: table.maturity,
        });
    }
    if n_terms > table.n_max() {
        return Err(Error::InsufficientMoments {
            requested: n_terms,
            available: table.n_max(),
        });
    }
    Ok(())
}

pub fn series_price(m: &MarketSpec, table: &MomentTable, n_terms: usize) -> Result<SeriesPrice> {
    check_inputs(m, table, n_terms)?;
    let t = m.maturity;
    let a = m.moneyness();
    let scale = t.sqrt() * INV_SQRT_2PI;
    let leading = call_price(a, table.v * t.sqrt());
    let big_a = -a * a / (2.0 * t);

    let mut terms = Vec::with_capacity(n_terms + 1);
    terms.push(scale * (table.v_hat - table.v));
    // Aⁿ/n! by recurrence
    let mut power = 1.0;
    for n in 1..=n_terms {
        power *= big_a / n as f64;
        terms.push(-scale * power / (2 * n - 1) as f64 * table.gap(n));
    }
    let price = leading + terms.iter().sum::<f64>();

    let (largest_term_index, _) = terms
        .iter()
        .enumerate()
        .skip(1)
        .fold((0, 0.0), |(bi, bv), (i, t)| {
            if t.abs() > bv {
                (i, t.abs())
            } else {
                (bi, bv)
            }
        });
    let last_term_magnitude = if n_terms > 0 { terms[n_terms].abs() } else { 0.0 };
    Ok(SeriesPrice {
        price,
        leading,
        terms,
        n_used: n_terms,
        largest_term_index,
        last_term_magnitude,
        wing_divergence: n_terms >= 2 && largest_term_index == n_terms,
    })
}

/// Spot derivative of [`series_price`]:
/// `N(d(v)) + (x-k)/√(2πT) · Σ A^{n-1}/((n-1)!(2n-1)) · D_n`.
pub fn series_delta(m: &MarketSpec, table: &MomentTable, n_terms: usize) -> Result<f64> {
    check_inputs(m, table, n_terms)?;
    let t = m.maturity;
    let a = m.moneyness();
    let big_a = -a * a / (2.0 * t);
    let mut power = 1.0;
    let mut sum = 0.0;
    for n in 1..=n_terms {
        if n > 1 {
            power *= big_a / (n - 1) as f64;
        }
        sum += power / (2 * n - 1) as f64 * table.gap(n);
    }
    let d = a / (table.v * t.sqrt());
    Ok(norm_cdf(d) + a * INV_SQRT_2PI / t.sqrt() * sum)
}

/// Second spot derivative of [`series_price`]:
/// `N'(d(v))/(v√T) + 1/√(2πT) · Σ A^{n-1}/(n-1)! · D_n`.
pub fn series_gamma(m: &MarketSpec, table: &MomentTable, n_terms: usize) -> Result<f64> {
    check_inputs(m, table, n_terms)?;
    let t = m.maturity;
    let a = m.moneyness();
    let big_a = -a * a / (2.0 * t);
    let mut power = 1.0;
    let mut sum = 0.0;
    for n in 1..=n_terms {
        if n > 1 {
            power *= big_a / (n - 1) as f64;
        }
        sum += power * table.gap(n);
    }
    let s = table.v * t.sqrt();
    Ok(norm_pdf(a / s) / s + INV_SQRT_2PI / t.sqrt() * sum)
}

/// Result of [`optimal_terms`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationChoice {
    pub n_star: usize,
    /// `|IV(N*) - IV(N* + 1)|` in absolute vol units.
    pub error: f64,
}

/// Smallest `N ≥ 1` such that the implied volatilities of the `N`- and
/// `N+1`-term prices differ by less than `tol`.
///
/// Truncations whose price falls outside the no-arbitrage range have no
/// implied volatility and never satisfy the criterion.
pub fn optimal_terms(m: &MarketSpec, table: &MomentTable, tol: f64) -> Result<TruncationChoice> {
    check_inputs(m, table, 1)?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let n_max = table.n_max();
    let iv = |n: usize| -> Option<f64> {
        let p = series_price(m, table, n).ok()?.price;
        implied_vol_bachelier(m, p).ok()
    };
    let mut last_error = f64::NAN;
    let mut current = iv(1);
    for n in 1..n_max {
        let next = iv(n + 1);
        if let (Some(a), Some(b)) = (current, next) {
            let err = (a - b).abs();
            if err < tol {
                return Ok(TruncationChoice { n_star: n, error: err });
            }
            last_error = err;
        }
        current = next;
    }
    Err(Error::NonConvergence { n_max, last_error })
}

/// Decomposition-formula price of one strike, see [`prices_via_decomposition`].
pub fn price_via_decomposition(m: &MarketSpec, batch: &PathBatch) -> Result<McEstimate> {
    m.validate()?;
    Ok(prices_via_decomposition(m.spot, &[m.strike], m.maturity, batch)?[0])
}

/// Uncorrelated call prices from
/// `V = Bac(T,x,k,v) + (T²/8)·E∫₀ᵀ K_Bac(T,x,k,v_s) d⟨M,M⟩_s`,
/// estimated on the batch's retained variance grid.
///
/// Along each path, `v_s² = M_s = (1/T)[∫₀ˢσ²du + E_s∫ₛᵀσ²du]` with the past
/// integrated by the same trapezoidal rule as the path engine and the future
/// by the model's closed conditional mean.
pub fn prices_via_decomposition(
    spot: f64,
    strikes: &[f64],
    maturity: f64,
    batch: &PathBatch,
) -> Result<Vec<McEstimate>> {
    for &k in strikes {
        MarketSpec::new(spot, k, maturity)?;
    }
    if (maturity - batch.maturity).abs() > 1e-12 * batch.maturity {
        return Err(Error::MaturityMismatch {
            market: maturity,
            table: batch.maturity,
        });
    }
    let grid = batch
        .variance_grid
        .as_ref()
        .ok_or(Error::MissingData("variance grid"))?;
    let model = batch.model;
    if model.rho() != 0.0 {
        return Err(Error::Domain(
            "the decomposition formula prices the uncorrelated model (rho = 0)".into(),
        ));
    }
    let t = maturity;
    let m0 = model.m0(t)?;
    let v = m0.sqrt();
    let n_steps = batch.n_steps;
    let stride = n_steps + 1;
    let dt = batch.dt();
    let leading: Vec<f64> = strikes
        .iter()
        .map(|k| call_price(spot - k, v * t.sqrt()))
        .collect();

    let per_path: Vec<Vec<f64>> = grid
        .par_chunks_exact(stride)
        .map(|row| {
            let mut acc = vec![0.0; strikes.len()];
            let mut past = 0.0;
            for (i, &var) in row.iter().enumerate() {
                if i > 0 {
                    past += 0.5 * (row[i - 1] + var) * dt;
                }
                let tau = t - i as f64 * dt;
                let q = model.qv_density_unchecked(var, tau.max(0.0), t);
                if q == 0.0 {
                    continue;
                }
                let m_s = (past + model.expected_variance_integral(var, tau.max(0.0))) / t;
                let sigma_s = m_s.sqrt();
                let w = if i == 0 || i == n_steps { 0.5 * dt } else { dt };
                for (slot, &k) in acc.iter_mut().zip(strikes) {
                    *slot += w * q * kernel(spot - k, t, sigma_s);
                }
            }
            acc.iter_mut()
                .zip(&leading)
                .for_each(|(slot, lead)| *slot = lead + t * t / 8.0 * *slot);
            acc
        })
        .collect();

    let antithetic = batch.config.antithetic;
    Ok((0..strikes.len())
        .map(|j| {
            let samples: Vec<f64> = per_path.iter().map(|p| p[j]).collect();
            McEstimate::from_samples(&samples, antithetic)
        })
        .collect())
}
