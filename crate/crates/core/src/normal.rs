//! Standard normal distribution helpers.
//!
//! The CDF goes through `erfc`, which keeps full relative precision in the
//! lower tail where `1 - N(-x)` style formulas lose every digit.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `1/√(2π)`.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `2N(x) - 1`, evaluated without cancellation near zero.
pub fn norm_cdf_centered(x: f64) -> f64 {
    libm::erf(x * FRAC_1_SQRT_2)
}

pub fn sqrt_2pi() -> f64 {
    (2.0 * PI).sqrt()
}
