//! Deterministic parallel path simulation.
//!
//! Each simulation unit (one path, or one antithetic pair) owns two ChaCha8
//! streams keyed by `(seed, unit index)`: one for the Gaussians driving the
//! volatility (`W`) and one for the orthogonal asset noise (`B`). Results are
//! written back in unit order, so a batch is a pure function of its inputs
//! regardless of how rayon schedules the work. Because the two noises live on
//! separate streams, volatility paths are identical whether or not asset
//! terminals are requested.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::VolModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub steps_per_year: usize,
    pub seed: u64,
    pub antithetic: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            steps_per_year: 252,
            seed: 20_250_101,
            antithetic: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(Error::InvalidSimConfig(format!(
                "n_paths must be at least 2, got {}",
                self.n_paths
            )));
        }
        if self.antithetic && self.n_paths % 2 != 0 {
            return Err(Error::InvalidSimConfig(format!(
                "n_paths must be even with antithetic pairing, got {}",
                self.n_paths
            )));
        }
        if self.steps_per_year == 0 {
            return Err(Error::InvalidSimConfig("steps_per_year must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of time steps on `[0, T]`: `ceil(steps_per_year · T)`, at least one.
    pub fn n_steps(&self, maturity: f64) -> usize {
        // Shave a few ulps so that e.g. 252 × 1.0 does not round up to 253.
        let raw = self.steps_per_year as f64 * maturity;
        ((raw * (1.0 - 4.0 * f64::EPSILON)).ceil() as usize).max(1)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_paths(self, n_paths: usize) -> Self {
        Self { n_paths, ..self }
    }
}

/// Simulated paths for one `(model, T, SimConfig)`.
///
/// With antithetic pairing, paths `2i` and `2i + 1` share their Gaussians
/// with opposite signs.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    pub model: VolModel,
    pub maturity: f64,
    pub config: SimConfig,
    pub n_steps: usize,
    /// `(1/T)∫₀ᵀ σ_s² ds` per path, trapezoidal on the grid.
    pub integrated_variance: Vec<f64>,
    /// Spot the terminals were simulated from.
    pub x0: Option<f64>,
    pub terminal_x: Option<Vec<f64>>,
    /// Terminal value of the ρ = 0 twin driven by the same σ path and the same `B`.
    pub terminal_x_rho0: Option<Vec<f64>>,
    /// Row-major `n_paths × (n_steps + 1)` grid of `σ²` at the time nodes.
    pub variance_grid: Option<Vec<f64>>,
    /// Heston steps whose Euler update went negative before truncation.
    pub negative_variance_steps: u64,
}

impl PathBatch {
    pub fn n_paths(&self) -> usize {
        self.integrated_variance.len()
    }

    pub fn dt(&self) -> f64 {
        self.maturity / self.n_steps as f64
    }

    /// `σ²` at nodes `0..=n_steps` for one path.
    pub fn variance_row(&self, path: usize) -> Option<&[f64]> {
        let stride = self.n_steps + 1;
        self.variance_grid
            .as_ref()
            .map(|g| &g[path * stride..(path + 1) * stride])
    }

    /// Fraction of Heston Euler steps that needed truncation.
    pub fn negative_variance_fraction(&self) -> f64 {
        self.negative_variance_steps as f64 / (self.n_paths() * self.n_steps) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Outputs {
    terminals: Option<(f64, bool)>,
    grid: bool,
}

/// Volatility paths and integrated variances only.
pub fn simulate_vol_paths(model: &VolModel, maturity: f64, cfg: &SimConfig) -> Result<PathBatch> {
    simulate(
        model,
        maturity,
        cfg,
        Outputs {
            terminals: None,
            grid: false,
        },
    )
}

/// As [`simulate_vol_paths`], also retaining `σ²` at every grid node.
pub fn simulate_vol_paths_with_grid(
    model: &VolModel,
    maturity: f64,
    cfg: &SimConfig,
) -> Result<PathBatch> {
    simulate(
        model,
        maturity,
        cfg,
        Outputs {
            terminals: None,
            grid: true,
        },
    )
}

/// Euler terminal values `X_T = x₀ + Σ σ_{t_i}(ρΔW + √(1-ρ²)ΔB)` together with
/// the volatility paths. With `couple_rho0`, also `X_T⁰ = x₀ + Σ σ_{t_i}ΔB`.
pub fn simulate_asset_terminal(
    model: &VolModel,
    x0: f64,
    maturity: f64,
    cfg: &SimConfig,
    couple_rho0: bool,
) -> Result<PathBatch> {
    if !x0.is_finite() {
        return Err(Error::Domain(format!("spot must be finite, got {x0}")));
    }
    simulate(
        model,
        maturity,
        cfg,
        Outputs {
            terminals: Some((x0, couple_rho0)),
            grid: false,
        },
    )
}

struct Unit {
    iv: [f64; 2],
    x: [f64; 2],
    x0: [f64; 2],
    grid: Vec<f64>,
    negatives: u64,
}

fn simulate(model: &VolModel, maturity: f64, cfg: &SimConfig, out: Outputs) -> Result<PathBatch> {
    model.validate()?;
    cfg.validate()?;
    if !(maturity.is_finite() && maturity > 0.0) {
        return Err(Error::Domain(format!("maturity must be positive, got {maturity}")));
    }
    let n_steps = cfg.n_steps(maturity);
    let width = if cfg.antithetic { 2 } else { 1 };
    let n_units = cfg.n_paths / width;

    let units: Vec<Unit> = (0..n_units)
        .into_par_iter()
        .map(|u| simulate_unit(model, maturity, n_steps, cfg, u as u64, width, out))
        .collect();

    let n = cfg.n_paths;
    let mut integrated_variance = Vec::with_capacity(n);
    let mut terminal_x = out.terminals.map(|_| Vec::with_capacity(n));
    let mut terminal_x_rho0 = out
        .terminals
        .filter(|(_, couple)| *couple)
        .map(|_| Vec::with_capacity(n));
    let mut grid = out.grid.then(|| Vec::with_capacity(n * (n_steps + 1)));
    let mut negative_variance_steps = 0;
    for unit in units {
        integrated_variance.extend_from_slice(&unit.iv[..width]);
        if let Some(xs) = terminal_x.as_mut() {
            xs.extend_from_slice(&unit.x[..width]);
        }
        if let Some(xs) = terminal_x_rho0.as_mut() {
            xs.extend_from_slice(&unit.x0[..width]);
        }
        if let Some(g) = grid.as_mut() {
            g.extend_from_slice(&unit.grid);
        }
        negative_variance_steps += unit.negatives;
    }

    Ok(PathBatch {
        model: *model,
        maturity,
        config: *cfg,
        n_steps,
        integrated_variance,
        x0: out.terminals.map(|(x0, _)| x0),
        terminal_x,
        terminal_x_rho0,
        variance_grid: grid,
        negative_variance_steps,
    })
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn simulate_unit(
    model: &VolModel,
    maturity: f64,
    n_steps: usize,
    cfg: &SimConfig,
    unit: u64,
    width: usize,
    out: Outputs,
) -> Unit {
    let mut vol_rng = stream(cfg.seed, 2 * unit);
    let mut asset_rng = out.terminals.map(|_| stream(cfg.seed, 2 * unit + 1));
    let dt = maturity / n_steps as f64;
    let sqrt_dt = dt.sqrt();
    let signs = [1.0, -1.0];

    let v_start = model.sigma0() * model.sigma0();
    // State per path: raw variance (Heston, may be negative before truncation)
    // or volatility (SABR).
    let mut state = [0.0; 2];
    let mut var_node = [v_start; 2];
    let mut trap = [0.0; 2];
    let spot = out.terminals.map_or(0.0, |(x0, _)| x0);
    let mut x = [spot; 2];
    let mut x_twin = [spot; 2];
    let mut negatives = 0;
    let mut grid = if out.grid {
        Vec::with_capacity(width * (n_steps + 1))
    } else {
        Vec::new()
    };
    let mut rows: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    if out.grid {
        for row in rows.iter_mut().take(width) {
            row.reserve(n_steps + 1);
            row.push(v_start);
        }
    }
    for j in 0..width {
        state[j] = match model {
            VolModel::Heston(_) => v_start,
            VolModel::Sabr(p) => p.sigma0,
        };
    }

    let rho = model.rho();
    let rho_bar = (1.0 - rho * rho).max(0.0).sqrt();
    for _ in 0..n_steps {
        let z_w: f64 = StandardNormal.sample(&mut vol_rng);
        let z_b: f64 = match asset_rng.as_mut() {
            Some(rng) => StandardNormal.sample(rng),
            None => 0.0,
        };
        for j in 0..width {
            let dw = signs[j] * z_w * sqrt_dt;
            let vol_left = var_node[j].sqrt();
            if out.terminals.is_some() {
                let db = signs[j] * z_b * sqrt_dt;
                x[j] += vol_left * (rho * dw + rho_bar * db);
                x_twin[j] += vol_left * db;
            }
            let next_var = match model {
                VolModel::Heston(p) => {
                    let vp = state[j].max(0.0);
                    let raw = state[j] + p.kappa * (p.theta - vp) * dt + p.nu * vp.sqrt() * dw;
                    if raw < 0.0 {
                        negatives += 1;
                    }
                    state[j] = raw;
                    raw.max(0.0)
                }
                VolModel::Sabr(p) => {
                    state[j] *= (-0.5 * p.nu * p.nu * dt + p.nu * dw).exp();
                    state[j] * state[j]
                }
            };
            trap[j] += 0.5 * (var_node[j] + next_var);
            var_node[j] = next_var;
            if out.grid {
                rows[j].push(next_var);
            }
        }
    }

    let mut iv = [0.0; 2];
    for j in 0..width {
        iv[j] = trap[j] * dt / maturity;
    }
    if out.grid {
        for row in rows.iter().take(width) {
            grid.extend_from_slice(row);
        }
    }
    Unit {
        iv,
        x,
        x0: x_twin,
        grid,
        negatives,
    }
}
