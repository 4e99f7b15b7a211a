//! Delta across strikes by the series, pathwise conditional Monte Carlo and
//! bump-and-reprice finite differences, with the time each method took.

use normvol::mc::GreekBenchOptions;
use normvol::*;

fn main() -> Result<()> {
    let model = VolModel::Sabr(SabrParams {
        sigma0: 20.0,
        nu: 0.5,
        rho: 0.0,
    });
    let cfg = SimConfig {
        n_paths: 50_000,
        steps_per_year: 252,
        seed: 5,
        antithetic: true,
    };
    let strikes: Vec<f64> = (0..=8).map(|i| 80.0 + 5.0 * i as f64).collect();
    let bench = greek_benchmark(
        100.0,
        &strikes,
        1.0,
        &model,
        &cfg,
        GreekKind::Delta,
        GreekBenchOptions::default(),
    )?;
    println!("strike    series     cond_mc (se)          fd_mc (se)");
    for r in &bench.rows {
        println!(
            "{:6.1} {:9.6} {:9.6} ({:.1e}) {:9.6} ({:.1e})",
            r.strike,
            r.series,
            r.conditional_mc.value,
            r.conditional_mc.std_error,
            r.fd_mc.value,
            r.fd_mc.std_error
        );
    }
    for (method, secs) in &bench.timings {
        println!("{method}: {secs:.3}s");
    }
    Ok(())
}
