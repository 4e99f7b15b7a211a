#![allow(dead_code)]

use normvol::{HestonParams, SabrParams, SimConfig, VolModel};

pub const X0: f64 = 100.0;
pub const MATURITIES: [f64; 3] = [0.8, 1.0, 1.2];

pub fn heston() -> VolModel {
    VolModel::Heston(HestonParams {
        sigma0: 20.0,
        kappa: 2.0,
        theta: 400.0,
        nu: 20.0,
        rho: 0.0,
    })
}

pub fn sabr() -> VolModel {
    VolModel::Sabr(SabrParams {
        sigma0: 20.0,
        nu: 0.5,
        rho: 0.0,
    })
}

/// Low-level SABR with `X₀ = 2`.
pub fn sabr_ir() -> VolModel {
    VolModel::Sabr(SabrParams {
        sigma0: 0.7,
        nu: 0.3,
        rho: 0.0,
    })
}

pub fn model_i() -> VolModel {
    heston().with_rho(-0.3)
}

pub fn model_ii() -> VolModel {
    sabr().with_rho(-0.5)
}

pub fn model_iii() -> VolModel {
    sabr_ir().with_rho(-0.3)
}

pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

pub fn desk_strikes() -> Vec<f64> {
    grid(70.0, 140.0, 2.0)
}

pub fn ir_strikes() -> Vec<f64> {
    grid(0.9, 3.5, 0.1)
}

pub fn desk_sim(seed: u64) -> SimConfig {
    SimConfig {
        n_paths: 100_000,
        steps_per_year: 252,
        seed,
        antithetic: true,
    }
}

pub fn small_sim(n_paths: usize, seed: u64) -> SimConfig {
    SimConfig {
        n_paths,
        steps_per_year: 52,
        seed,
        antithetic: true,
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre quadrature of `f` on `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(20);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        for (xi, wi) in x.iter().zip(&w) {
            total += wi * 0.5 * h * f(mid + 0.5 * h * xi);
        }
    }
    total
}

/// `E[(x - k + σ√T Z)⁺]` by quadrature over the Gaussian density.
pub fn bachelier_by_quadrature(x: f64, k: f64, t: f64, sigma: f64) -> f64 {
    let s = sigma * t.sqrt();
    let pdf = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let lo = (-(x - k) / s).max(-40.0);
    if lo >= 40.0 {
        return 0.0;
    }
    integrate(|z| (x - k + s * z) * pdf(z), lo, 40.0, 400)
}

/// `M_s = (1/T)[∫₀ˢ σ² du + E_s ∫ₛᵀ σ² du]` along one grid row, with the past
/// by the trapezoid rule, written out independently of the library.
pub fn m_path(model: &VolModel, row: &[f64], t: f64) -> Vec<f64> {
    let n = row.len() - 1;
    let dt = t / n as f64;
    let mut past = 0.0;
    (0..=n)
        .map(|i| {
            if i > 0 {
                past += 0.5 * (row[i - 1] + row[i]) * dt;
            }
            let tau = t - i as f64 * dt;
            let future = match model {
                VolModel::Heston(p) => {
                    if tau == 0.0 {
                        0.0
                    } else {
                        p.theta * tau
                            + (row[i] - p.theta) * (1.0 - (-p.kappa * tau).exp()) / p.kappa
                    }
                }
                VolModel::Sabr(p) => {
                    let a = p.nu * p.nu;
                    if a == 0.0 {
                        row[i] * tau
                    } else {
                        row[i] * ((a * tau).exp() - 1.0) / a
                    }
                }
            };
            (past + future) / t
        })
        .collect()
}

/// `d⟨M,M⟩_s/ds` from Itô's formula applied to `E_s ∫ₛᵀ σ²`.
pub fn qv_density(model: &VolModel, var: f64, tau: f64, t: f64) -> f64 {
    match model {
        VolModel::Heston(p) => {
            let b = (1.0 - (-p.kappa * tau).exp()) / p.kappa;
            (p.nu * b).powi(2) * var / (t * t)
        }
        VolModel::Sabr(p) => {
            let a = p.nu * p.nu;
            let b = if a == 0.0 { tau } else { ((a * tau).exp() - 1.0) / a };
            (2.0 * p.nu * var * b).powi(2) / (t * t)
        }
    }
}
