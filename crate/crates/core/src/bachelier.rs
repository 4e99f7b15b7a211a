//! Closed-form Bachelier pricing.
//!
//! The underlying is driftless arithmetic Brownian motion, so a call with
//! total standard deviation `s = σ√T` and moneyness `a = x - k` is worth
//!
//! ```text
//! Bac = a·N(a/s) + s·N'(a/s)
//! ```
//!
//! Prices are undiscounted. Spot and strike may be negative.

use crate::error::{Error, Result};
use crate::normal::{norm_cdf, norm_cdf_centered, norm_pdf, sqrt_2pi};

/// The option contract under valuation: spot `x`, strike `k`, maturity `T` in years.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketSpec {
    pub spot: f64,
    pub strike: f64,
    pub maturity: f64,
}

impl MarketSpec {
    pub fn new(spot: f64, strike: f64, maturity: f64) -> Result<Self> {
        let m = Self {
            spot,
            strike,
            maturity,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.spot.is_finite() || !self.strike.is_finite() {
            return Err(Error::Domain(format!(
                "spot and strike must be finite (spot = {}, strike = {})",
                self.spot, self.strike
            )));
        }
        if !(self.maturity.is_finite() && self.maturity > 0.0) {
            return Err(Error::Domain(format!(
                "maturity must be positive and finite, got {}",
                self.maturity
            )));
        }
        Ok(())
    }

    /// `x - k`.
    pub fn moneyness(&self) -> f64 {
        self.spot - self.strike
    }

    pub fn intrinsic(&self) -> f64 {
        self.moneyness().max(0.0)
    }

    pub fn with_spot(&self, spot: f64) -> Self {
        Self { spot, ..*self }
    }

    pub fn with_strike(&self, strike: f64) -> Self {
        Self { strike, ..*self }
    }
}

/// Price and first/second order sensitivities at one volatility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BachelierQuote {
    pub price: f64,
    /// `d_Bac = (x - k)/(σ√T)`.
    pub d: f64,
    pub vega: f64,
    pub delta: f64,
    pub gamma: f64,
}

fn check_sigma(sigma: f64, strictly_positive: bool) -> Result<()> {
    let ok = sigma.is_finite() && if strictly_positive { sigma > 0.0 } else { sigma >= 0.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "volatility must be {} and finite, got {sigma}",
            if strictly_positive { "positive" } else { "non-negative" }
        )))
    }
}

/// Call price from moneyness `a = x - k` and total deviation `s = σ√T > 0`.
#[inline]
pub(crate) fn call_price(a: f64, s: f64) -> f64 {
    // intrinsic plus the out-of-the-money time value, which keeps the
    // rounded price monotone in s deep in the money
    let b = -a.abs();
    let d = b / s;
    a.max(0.0) + (b * norm_cdf(d) + s * norm_pdf(d))
}

pub fn bachelier_price(m: &MarketSpec, sigma: f64) -> Result<f64> {
    m.validate()?;
    check_sigma(sigma, false)?;
    if sigma == 0.0 {
        return Ok(m.intrinsic());
    }
    Ok(call_price(m.moneyness(), sigma * m.maturity.sqrt()))
}

/// Fourth derivative of the price in the spot,
/// `((x-k)² - Tσ²)/(T^{5/2}σ⁵) · N'(d)`.
pub fn bachelier_kernel(m: &MarketSpec, sigma: f64) -> Result<f64> {
    m.validate()?;
    check_sigma(sigma, true)?;
    Ok(kernel(m.moneyness(), m.maturity, sigma))
}

#[inline]
pub(crate) fn kernel(a: f64, t: f64, sigma: f64) -> f64 {
    let var = t * sigma * sigma;
    let d = a / var.sqrt();
    (a * a - var) / (var * var * var.sqrt()) * norm_pdf(d)
}

/// `N(d)`; at `σ = 0` the limit `1{x>k}` (one half at the money).
pub fn bachelier_delta(m: &MarketSpec, sigma: f64) -> Result<f64> {
    m.validate()?;
    check_sigma(sigma, false)?;
    if sigma == 0.0 {
        let a = m.moneyness();
        return Ok(if a > 0.0 {
            1.0
        } else if a < 0.0 {
            0.0
        } else {
            0.5
        });
    }
    Ok(norm_cdf(m.moneyness() / (sigma * m.maturity.sqrt())))
}

pub fn bachelier_gamma(m: &MarketSpec, sigma: f64) -> Result<f64> {
    m.validate()?;
    check_sigma(sigma, true)?;
    let s = sigma * m.maturity.sqrt();
    Ok(norm_pdf(m.moneyness() / s) / s)
}

pub fn bachelier_vega(m: &MarketSpec, sigma: f64) -> Result<f64> {
    m.validate()?;
    check_sigma(sigma, true)?;
    let sqrt_t = m.maturity.sqrt();
    Ok(norm_pdf(m.moneyness() / (sigma * sqrt_t)) * sqrt_t)
}

pub fn bachelier_quote(m: &MarketSpec, sigma: f64) -> Result<BachelierQuote> {
    m.validate()?;
    check_sigma(sigma, true)?;
    let sqrt_t = m.maturity.sqrt();
    let s = sigma * sqrt_t;
    let a = m.moneyness();
    let d = a / s;
    let pdf = norm_pdf(d);
    Ok(BachelierQuote {
        price: a * norm_cdf(d) + s * pdf,
        d,
        vega: pdf * sqrt_t,
        delta: norm_cdf(d),
        gamma: pdf / s,
    })
}

/// Bachelier implied volatility of an undiscounted call price.
///
/// The solve runs on the out-of-the-money time value (put–call parity makes
/// the ITM call and the OTM put share one volatility), in the variable
/// `s = σ√T`, with Newton steps on `ln Bac` kept inside a bisection bracket.
/// Returns 0 when the price equals intrinsic value.
pub fn implied_vol_bachelier(m: &MarketSpec, price: f64) -> Result<f64> {
    m.validate()?;
    if !price.is_finite() {
        return Err(Error::Domain(format!("price must be finite, got {price}")));
    }
    let a = m.moneyness();
    let intrinsic = a.max(0.0);
    if price < intrinsic {
        return Err(Error::Arbitrage { price, intrinsic });
    }
    if price == intrinsic {
        return Ok(0.0);
    }
    let sqrt_t = m.maturity.sqrt();
    if a == 0.0 {
        return Ok(price * sqrt_2pi() / sqrt_t);
    }
    let b = -a.abs();
    let time_value = price - intrinsic;
    Ok(solve_otm(b, time_value) / sqrt_t)
}

// Solves call_price(b, s) = target for s, with b < 0 and target > 0.
fn solve_otm(b: f64, target: f64) -> f64 {
    let ln_target = target.ln();
    let mut lo = 0.0_f64;
    let mut hi = (target * sqrt_2pi()).max(-b);
    while call_price(b, hi) < target {
        lo = hi;
        hi *= 2.0;
    }
    // Initial guess: upper bracket; ln f is concave in s so Newton from the
    // right lands left of the root and then climbs monotonically.
    let mut s = hi;
    for _ in 0..200 {
        let f = call_price(b, s);
        if f > target {
            hi = hi.min(s);
        } else {
            lo = lo.max(s);
        }
        if f == target || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let next = if f > 0.0 {
            let dlnf = norm_pdf(b / s) / f;
            s - (f.ln() - ln_target) / dlnf
        } else {
            f64::NAN
        };
        let next = if next.is_finite() && next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if (next - s).abs() <= 2.0 * f64::EPSILON * s {
            s = next;
            break;
        }
        s = next;
    }
    s
}

/// ATM Black–Scholes to Bachelier implied-volatility conversion,
/// `√(2π/T) · x · (2N(I_bs√T/2) - 1)`.
pub fn atm_bachelier_from_bs(x: f64, maturity: f64, implied_bs: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!("spot must be positive and finite, got {x}")));
    }
    if !(maturity.is_finite() && maturity > 0.0) {
        return Err(Error::Domain(format!("maturity must be positive, got {maturity}")));
    }
    if !(implied_bs.is_finite() && implied_bs >= 0.0) {
        return Err(Error::Domain(format!(
            "Black-Scholes volatility must be non-negative, got {implied_bs}"
        )));
    }
    let sqrt_t = maturity.sqrt();
    Ok(sqrt_2pi() / sqrt_t * x * norm_cdf_centered(0.5 * implied_bs * sqrt_t))
}
