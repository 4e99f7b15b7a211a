//! Price as the vol-swap Bachelier price plus the path-integral correction,
//! next to the series and conditional Monte Carlo.

use normvol::mc::conditional_prices;
use normvol::series::prices_via_decomposition;
use normvol::*;

fn main() -> Result<()> {
    let model = VolModel::Heston(HestonParams {
        sigma0: 20.0,
        kappa: 2.0,
        theta: 400.0,
        nu: 20.0,
        rho: 0.0,
    });
    let t = 1.0;
    let cfg = SimConfig {
        n_paths: 20_000,
        steps_per_year: 252,
        seed: 11,
        antithetic: true,
    };
    let batch = normvol::paths::simulate_vol_paths_with_grid(&model, t, &cfg)?;
    let table = estimate_moments(&batch, &model, 30)?;
    let strikes = [80.0, 90.0, 100.0, 110.0, 120.0];
    let dec = prices_via_decomposition(100.0, &strikes, t, &batch)?;
    let cmc = conditional_prices(100.0, &strikes, t, &batch)?;
    println!("strike  decomposition (se)      series      conditional (se)");
    for ((k, d), c) in strikes.iter().zip(&dec).zip(&cmc) {
        let s = series_price(&MarketSpec::new(100.0, *k, t)?, &table, 30)?.price;
        println!(
            "{k:6.1} {:12.7} ({:.1e}) {:12.7} {:12.7} ({:.1e})",
            d.value, d.std_error, s, c.value, c.std_error
        );
    }
    Ok(())
}
