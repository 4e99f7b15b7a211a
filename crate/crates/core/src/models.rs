//! Heston and SABR volatility dynamics and their closed-form moments.
//!
//! Heston: `dσ² = -κ(σ² - θ)dt + ν σ dW`.
//! SABR (lognormal vol, zero drift in the asset): `σ_t = σ₀ exp(-ν²t/2 + ν W_t)`.
//!
//! Both admit an explicit conditional expected-variance curve, so the
//! variance-swap martingale `M_s = (1/T) E_s ∫₀ᵀ σ² du` and its quadratic
//! variation density are available in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent arguments below this use a third-order Taylor branch.
const TAYLOR_SWITCH: f64 = 1e-6;

/// `(1 - e^{-x})/x`.
pub(crate) fn one_minus_exp_neg_over_x(x: f64) -> f64 {
    if x.abs() < TAYLOR_SWITCH {
        1.0 - x / 2.0 + x * x / 6.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// `(e^x - 1)/x`.
pub(crate) fn exp_m1_over_x(x: f64) -> f64 {
    if x.abs() < TAYLOR_SWITCH {
        1.0 + x / 2.0 + x * x / 6.0
    } else {
        x.exp_m1() / x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    /// Initial volatility σ₀ (the initial variance is σ₀²).
    pub sigma0: f64,
    pub kappa: f64,
    pub theta: f64,
    pub nu: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SabrParams {
    pub sigma0: f64,
    pub nu: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum VolModel {
    Heston(HestonParams),
    Sabr(SabrParams),
}

fn require(ok: bool, name: &'static str, value: f64, constraint: &'static str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            constraint,
        })
    }
}

fn check_rho(rho: f64) -> Result<()> {
    require(rho.abs() <= 1.0, "rho", rho, "must lie in [-1, 1]")
}

impl HestonParams {
    pub fn validate(&self) -> Result<()> {
        require(self.sigma0 > 0.0, "sigma0", self.sigma0, "must be positive")?;
        require(self.kappa > 0.0, "kappa", self.kappa, "must be positive")?;
        require(self.theta > 0.0, "theta", self.theta, "must be positive")?;
        require(self.nu >= 0.0, "nu", self.nu, "must be non-negative")?;
        check_rho(self.rho)
    }
}

impl SabrParams {
    pub fn validate(&self) -> Result<()> {
        require(self.sigma0 > 0.0, "sigma0", self.sigma0, "must be positive")?;
        require(self.nu >= 0.0, "nu", self.nu, "must be non-negative")?;
        check_rho(self.rho)
    }
}

fn check_maturity(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("maturity must be positive, got {t}")))
    }
}

impl VolModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            VolModel::Heston(p) => p.validate(),
            VolModel::Sabr(p) => p.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            VolModel::Heston(_) => "heston",
            VolModel::Sabr(_) => "sabr",
        }
    }

    pub fn rho(&self) -> f64 {
        match self {
            VolModel::Heston(p) => p.rho,
            VolModel::Sabr(p) => p.rho,
        }
    }

    pub fn sigma0(&self) -> f64 {
        match self {
            VolModel::Heston(p) => p.sigma0,
            VolModel::Sabr(p) => p.sigma0,
        }
    }

    pub fn nu(&self) -> f64 {
        match self {
            VolModel::Heston(p) => p.nu,
            VolModel::Sabr(p) => p.nu,
        }
    }

    pub fn with_rho(&self, rho: f64) -> Self {
        match *self {
            VolModel::Heston(p) => VolModel::Heston(HestonParams { rho, ..p }),
            VolModel::Sabr(p) => VolModel::Sabr(SabrParams { rho, ..p }),
        }
    }

    pub fn with_nu(&self, nu: f64) -> Self {
        match *self {
            VolModel::Heston(p) => VolModel::Heston(HestonParams { nu, ..p }),
            VolModel::Sabr(p) => VolModel::Sabr(SabrParams { nu, ..p }),
        }
    }

    /// `M₀ = (1/T) E∫₀ᵀ σ_s² ds`, the variance-swap level.
    pub fn m0(&self, maturity: f64) -> Result<f64> {
        self.validate()?;
        check_maturity(maturity)?;
        let v0 = self.sigma0() * self.sigma0();
        Ok(self.expected_variance_integral(v0, maturity) / maturity)
    }

    /// `E σ_t²` given the model's initial state.
    pub fn expected_variance_curve(&self, t: f64) -> Result<f64> {
        self.validate()?;
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::Domain(format!("time must be non-negative, got {t}")));
        }
        let v0 = self.sigma0() * self.sigma0();
        Ok(match self {
            VolModel::Heston(p) => p.theta + (v0 - p.theta) * (-p.kappa * t).exp(),
            VolModel::Sabr(p) => v0 * (p.nu * p.nu * t).exp(),
        })
    }

    /// `∫₀^τ E[σ²_{s+u} | σ_s² = var_s] du`.
    #[inline]
    pub(crate) fn expected_variance_integral(&self, var_s: f64, tau: f64) -> f64 {
        match self {
            VolModel::Heston(p) => {
                p.theta * tau + (var_s - p.theta) * tau * one_minus_exp_neg_over_x(p.kappa * tau)
            }
            VolModel::Sabr(p) => var_s * tau * exp_m1_over_x(p.nu * p.nu * tau),
        }
    }

    /// Density `d⟨M,M⟩_s/ds` of the variance-swap martingale's quadratic
    /// variation, given `σ_s²`.
    ///
    /// Heston: `ν² σ_s² ((1 - e^{-κ(T-s)})/κ)² / T²`.
    /// SABR: `4 ν² σ_s⁴ ((e^{ν²(T-s)} - 1)/ν²)² / T²`.
    pub fn qv_density_of_m(&self, var_s: f64, s: f64, maturity: f64) -> Result<f64> {
        self.validate()?;
        check_maturity(maturity)?;
        if !(0.0..=maturity).contains(&s) {
            return Err(Error::Domain(format!("s = {s} outside [0, {maturity}]")));
        }
        if !(var_s.is_finite() && var_s >= 0.0) {
            return Err(Error::Domain(format!("variance must be non-negative, got {var_s}")));
        }
        Ok(self.qv_density_unchecked(var_s, maturity - s, maturity))
    }

    #[inline]
    pub(crate) fn qv_density_unchecked(&self, var_s: f64, tau: f64, maturity: f64) -> f64 {
        match self {
            VolModel::Heston(p) => {
                let w = tau * one_minus_exp_neg_over_x(p.kappa * tau);
                p.nu * p.nu * var_s * w * w / (maturity * maturity)
            }
            VolModel::Sabr(p) => {
                let w = tau * exp_m1_over_x(p.nu * p.nu * tau);
                4.0 * p.nu * p.nu * var_s * var_s * w * w / (maturity * maturity)
            }
        }
    }
}
