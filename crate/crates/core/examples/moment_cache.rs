//! Estimate a moment table once, store it, and price from the stored copy.

use normvol::*;

fn main() -> Result<()> {
    let model = VolModel::Sabr(SabrParams {
        sigma0: 0.7,
        nu: 0.3,
        rho: 0.0,
    });
    let t = 1.0;
    let cfg = SimConfig {
        n_paths: 20_000,
        steps_per_year: 252,
        seed: 9,
        antithetic: true,
    };
    let batch = simulate_vol_paths(&model, t, &cfg)?;
    let table = estimate_moments(&batch, &model, 30)?;

    let path = std::env::temp_dir().join("normvol_moments_example.txt");
    save_table(&table, &path)?;
    let loaded = load_table(&path)?;
    loaded.ensure_matches(&model, t, &cfg)?;
    println!("stored {} moments at {}", loaded.n_max() + 1, path.display());
    println!("convexity gap v - v_hat = {:.3e}", convexity_gap(&loaded));

    // a table built for other parameters is refused
    let other = model.with_nu(0.4);
    if let Err(e) = loaded.ensure_matches(&other, t, &cfg) {
        println!("reuse for nu = 0.4 refused: {e}");
    }

    for k in [1.0, 2.0, 3.0] {
        let m = MarketSpec::new(2.0, k, t)?;
        println!("k = {k}: {:.10}", series_price(&m, &loaded, 30)?.price);
    }
    let _ = std::fs::remove_file(&path);
    Ok(())
}
