//! Heston smile from the moment series, checked against conditional Monte Carlo
//! on the same volatility paths.

use normvol::mc::conditional_prices;
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
        n_paths: 50_000,
        steps_per_year: 252,
        seed: 1,
        antithetic: true,
    };
    let batch = simulate_vol_paths(&model, t, &cfg)?;
    let table = estimate_moments(&batch, &model, 30)?;
    println!("v = {:.6}, v_hat = {:.6}", table.v, table.v_hat);

    let strikes: Vec<f64> = (0..=14).map(|i| 70.0 + 5.0 * i as f64).collect();
    let mc = conditional_prices(100.0, &strikes, t, &batch)?;
    println!("strike   iv_series   iv_mc       rel_err");
    for (k, e) in strikes.iter().zip(&mc) {
        let m = MarketSpec::new(100.0, *k, t)?;
        let s = series_price(&m, &table, 30)?;
        let iv_s = implied_vol_bachelier(&m, s.price)?;
        let iv_mc = implied_vol_bachelier(&m, e.value)?;
        println!("{k:6.1} {iv_s:11.6} {iv_mc:11.6} {:10.2e}", (iv_s - iv_mc).abs() / iv_mc);
    }
    Ok(())
}
