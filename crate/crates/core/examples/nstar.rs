//! Number of series terms needed for a 1% implied-vol error across strikes.

use normvol::*;

fn main() -> Result<()> {
    let model = VolModel::Heston(HestonParams {
        sigma0: 20.0,
        kappa: 2.0,
        theta: 400.0,
        nu: 20.0,
        rho: 0.0,
    });
    let cfg = SimConfig {
        n_paths: 50_000,
        steps_per_year: 252,
        seed: 3,
        antithetic: true,
    };
    for t in [0.8, 1.2] {
        let batch = simulate_vol_paths(&model, t, &cfg)?;
        let table = estimate_moments(&batch, &model, 35)?;
        print!("T = {t}:");
        for k in [70.0, 80.0, 90.0, 100.0, 110.0, 120.0, 130.0, 140.0] {
            let m = MarketSpec::new(100.0, k, t)?;
            match optimal_terms(&m, &table, 0.01) {
                Ok(c) => print!(" {k}:{}", c.n_star),
                Err(_) => print!(" {k}:-"),
            }
        }
        println!();
    }
    Ok(())
}
