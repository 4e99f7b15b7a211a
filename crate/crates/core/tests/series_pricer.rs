mod common;

use common::*;
use normvol::mc::conditional_prices;
use normvol::normal::{norm_cdf, norm_pdf};
use normvol::paths::simulate_vol_paths_with_grid;
use normvol::series::prices_via_decomposition;
use normvol::*;
use proptest::prelude::*;
use std::sync::OnceLock;

const SEED: u64 = 20_250_101;

fn heston_table(t: f64) -> &'static [MomentTable; 3] {
    static TABLES: OnceLock<[MomentTable; 3]> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        MATURITIES.map(|t| {
            let batch = simulate_vol_paths(&heston(), t, &desk_sim(SEED)).unwrap();
            estimate_moments(&batch, &heston(), 35).unwrap()
        })
    });
    assert!(MATURITIES.contains(&t));
    tables
}

fn table_at(t: f64) -> &'static MomentTable {
    let i = MATURITIES.iter().position(|&m| m == t).unwrap();
    &heston_table(t)[i]
}

#[test]
fn heston_series_inside_conditional_mc_interval() {
    let t = 1.0;
    let batch = simulate_vol_paths(&heston(), t, &desk_sim(SEED)).unwrap();
    let table = estimate_moments(&batch, &heston(), 30).unwrap();
    let strikes = desk_strikes();
    let cmc = conditional_prices(X0, &strikes, t, &batch).unwrap();
    for (k, c) in strikes.iter().zip(&cmc) {
        let s = series_price(&MarketSpec::new(X0, *k, t).unwrap(), &table, 30).unwrap();
        assert!(c.contains(s.price), "k={k}: {} outside [{}, {}]", s.price, c.ci95.0, c.ci95.1);
        assert!(!s.wing_divergence);
    }
}

#[test]
fn reference_truncation_counts() {
    let n_star = |t: f64, k: f64| optimal_terms(&MarketSpec::new(X0, k, t).unwrap(), table_at(t), 0.01).unwrap().n_star;
    assert_eq!(n_star(1.0, 102.0), 1);
    assert!(n_star(0.8, 70.0).abs_diff(9) <= 2, "{}", n_star(0.8, 70.0));
    for t in MATURITIES {
        assert_eq!(n_star(t, 100.0), 1);
    }
}

#[test]
fn truncation_converges_on_desk_grids() {
    let mut cases: Vec<(VolModel, f64, f64, Vec<f64>)> = Vec::new();
    for t in MATURITIES {
        cases.push((heston(), X0, t, desk_strikes()));
        cases.push((sabr(), X0, t, desk_strikes()));
    }
    cases.push((sabr_ir(), 2.0, 1.0, ir_strikes()));
    let mut slow = Vec::new();
    for (model, x0, t, strikes) in cases {
        let batch = simulate_vol_paths(&model, t, &small_sim(20_000, 61)).unwrap();
        let table = estimate_moments(&batch, &model, 35).unwrap();
        for k in strikes {
            let m = MarketSpec::new(x0, k, t).unwrap();
            let vega = bachelier_vega(&m, table.v).unwrap();
            let a = series_price(&m, &table, 30).unwrap().price;
            let b = series_price(&m, &table, 35).unwrap().price;
            if (a - b).abs() >= 1e-6 * vega {
                slow.push((model.name(), t, k));
            }
        }
    }
    // Lognormal volatility has negative moments growing like e^{cn²}, so the
    // far SABR wing has not settled by 30 terms. Everything else has.
    assert!(
        slow.iter().all(|&(name, _, k)| name == "sabr" && k >= 136.0),
        "{slow:?}"
    );
    assert!(slow.contains(&("sabr", 0.8, 140.0)));
}

#[test]
fn terms_alternate_in_sign() {
    let table = table_at(0.8);
    for k in [70.0, 84.0, 118.0, 140.0] {
        let s = series_price(&MarketSpec::new(X0, k, 0.8).unwrap(), table, 30).unwrap();
        assert!(s.terms[0] <= 0.0);
        for n in 1..=30 {
            let expected = if n % 2 == 1 { 1.0 } else { -1.0 };
            assert!(s.terms[n] * expected >= 0.0, "k={k} n={n}: {}", s.terms[n]);
        }
    }
}

#[test]
fn greeks_at_special_points() {
    let table = table_at(1.0);
    let atm = MarketSpec::new(X0, X0, 1.0).unwrap();
    assert_eq!(series_delta(&atm, table, 30).unwrap(), 0.5);

    let model = sabr().with_nu(0.0);
    let batch = simulate_vol_paths(&model, 1.0, &small_sim(100, 62)).unwrap();
    let flat = estimate_moments(&batch, &model, 30).unwrap();
    for k in [70.0, 100.0, 131.0] {
        let m = MarketSpec::new(X0, k, 1.0).unwrap();
        let d = (X0 - k) / 20.0;
        let delta = series_delta(&m, &flat, 30).unwrap();
        let gamma = series_gamma(&m, &flat, 30).unwrap();
        assert!((delta - norm_cdf(d)).abs() < 1e-12);
        assert!((gamma - norm_pdf(d) / 20.0).abs() < 1e-12 * gamma);
    }
}

/// Decomposition against the series, pooled over independent replications
/// so that the comparison is not one correlated draw across all strikes.
#[test]
fn decomposition_agrees_with_series() {
    let t = 1.0;
    let strikes = desk_strikes();
    let reps = 10;
    let diffs: Vec<Vec<f64>> = (0..reps)
        .map(|r| {
            let cfg = SimConfig { n_paths: 20_000, ..desk_sim(700 + r) };
            let batch = simulate_vol_paths_with_grid(&heston(), t, &cfg).unwrap();
            let table = estimate_moments(&batch, &heston(), 30).unwrap();
            let dec = prices_via_decomposition(X0, &strikes, t, &batch).unwrap();
            strikes
                .iter()
                .zip(&dec)
                .map(|(&k, d)| d.value - series_price(&MarketSpec::new(X0, k, t).unwrap(), &table, 30).unwrap().price)
                .collect()
        })
        .collect();
    for (i, k) in strikes.iter().enumerate() {
        let xs: Vec<f64> = diffs.iter().map(|d| d[i]).collect();
        let mean = xs.iter().sum::<f64>() / reps as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
        let se = sd / (reps as f64).sqrt();
        assert!(mean.abs() <= 3.0 * se, "k={k}: {mean} ± {se}");
    }
}

#[test]
fn decomposition_at_the_money_is_bachelier_at_vol_swap() {
    let t = 1.0;
    let batch = simulate_vol_paths_with_grid(&sabr(), t, &small_sim(20_000, 63)).unwrap();
    let table = estimate_moments(&batch, &sabr(), 1).unwrap();
    let m = MarketSpec::new(X0, X0, t).unwrap();
    let dec = price_via_decomposition(&m, &batch).unwrap();
    let target = bachelier_price(&m, table.v_hat).unwrap();
    // v̂ carries the sampling error of the batch; the decomposition does not
    let se = table.std_errors[0] * (t / (2.0 * std::f64::consts::PI)).sqrt();
    assert!((dec.value - target).abs() <= 3.0 * se.hypot(dec.std_error), "{} vs {target}", dec.value);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn greeks_match_richardson_differences(k in 70.0f64..140.0, ti in 0usize..3) {
        let t = MATURITIES[ti];
        let table = table_at(t);
        let h = 1e-3 * table.v * t.sqrt();
        let price = |x: f64| series_price(&MarketSpec::new(x, k, t).unwrap(), table, 30).unwrap().price;
        let c1 = |h: f64| (price(X0 + h) - price(X0 - h)) / (2.0 * h);
        let c2 = |h: f64| (price(X0 + h) - 2.0 * price(X0) + price(X0 - h)) / (h * h);
        let m = MarketSpec::new(X0, k, t).unwrap();
        let delta = series_delta(&m, table, 30).unwrap();
        let gamma = series_gamma(&m, table, 30).unwrap();
        let fd_delta = (4.0 * c1(0.5 * h) - c1(h)) / 3.0;
        let fd_gamma = (4.0 * c2(0.5 * h) - c2(h)) / 3.0;
        prop_assert!((delta - fd_delta).abs() <= 1e-6 * delta.abs(), "{} vs {}", delta, fd_delta);
        prop_assert!((gamma - fd_gamma).abs() <= 1e-6 * gamma.abs(), "{} vs {}", gamma, fd_gamma);
    }

    #[test]
    fn atm_price_ignores_truncation(n in 0usize..=35, ti in 0usize..3) {
        let t = MATURITIES[ti];
        let table = table_at(t);
        let m = MarketSpec::new(X0, X0, t).unwrap();
        let p = series_price(&m, table, n).unwrap().price;
        let target = table.v_hat * (t / (2.0 * std::f64::consts::PI)).sqrt();
        prop_assert!((p - target).abs() <= 1e-12 * target);
    }
}
