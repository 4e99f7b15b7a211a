mod common;

use common::*;
use normvol::moments::table_to_string;
use normvol::paths::simulate_vol_paths_with_grid;
use normvol::stats::fold_pairs;
use normvol::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn folded_mean(samples: &[f64]) -> (f64, f64) {
    let u = fold_pairs(samples);
    let n = u.len() as f64;
    let mean = u.iter().sum::<f64>() / n;
    let var = u.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn heston_vol_swap_below_variance_swap() {
    for t in MATURITIES {
        let batch = simulate_vol_paths(&heston(), t, &desk_sim(51)).unwrap();
        let table = estimate_moments(&batch, &heston(), 30).unwrap();
        assert!(table.v_hat <= table.v && table.v == 20.0, "{} vs {}", table.v_hat, table.v);
        assert!(table.moments[0] == table.v_hat);
        assert!(table.jensen_violations().is_empty());
    }
}

/// `E[M_T^{-1/2}]` for SABR by a direct simulation written here: exact
/// lognormal volatility on a fine grid, trapezoidal time average.
#[test]
fn first_negative_moment_against_brute_force() {
    let (sigma0, nu, t) = (20.0f64, 0.5f64, 1.0f64);
    let steps = 200;
    let dt = t / steps as f64;
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    let samples: Vec<f64> = (0..n)
        .map(|_| {
            let mut log_sigma = sigma0.ln();
            let mut prev = sigma0 * sigma0;
            let mut sum = 0.0;
            for _ in 0..steps {
                let z: f64 = StandardNormal.sample(&mut rng);
                log_sigma += -0.5 * nu * nu * dt + nu * dt.sqrt() * z;
                let var = (2.0 * log_sigma).exp();
                sum += 0.5 * (prev + var) * dt;
                prev = var;
            }
            (sum / t).powf(-0.5)
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let se = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0) / n as f64).sqrt();

    let batch = simulate_vol_paths(&sabr(), t, &desk_sim(53)).unwrap();
    let table = estimate_moments(&batch, &sabr(), 5).unwrap();
    let joint = se.hypot(table.std_errors[1]);
    assert!(
        (table.moments[1] - mean).abs() <= 3.0 * joint,
        "{} ± {} vs {mean} ± {se}",
        table.moments[1],
        table.std_errors[1]
    );
}

/// `v - v̂ = (1/8)E∫₀ᵀ M_s^{-3/2} d⟨M,M⟩_s`, checked path by path.
#[test]
fn convexity_gap_matches_path_integral() {
    let model = heston();
    let t = 1.0;
    let cfg = SimConfig { n_paths: 40_000, ..desk_sim(54) };
    let batch = simulate_vol_paths_with_grid(&model, t, &cfg).unwrap();
    let table = estimate_moments(&batch, &model, 1).unwrap();
    let dt = batch.dt();
    let n_steps = batch.n_steps;
    let v = model.m0(t).unwrap().sqrt();
    let per_path: Vec<f64> = (0..batch.n_paths())
        .map(|j| {
            let row = batch.variance_row(j).unwrap();
            let ms = m_path(&model, row, t);
            let integral: f64 = (0..=n_steps)
                .map(|i| {
                    let w = if i == 0 || i == n_steps { 0.5 * dt } else { dt };
                    w * ms[i].powf(-1.5) * qv_density(&model, row[i], t - i as f64 * dt, t)
                })
                .sum();
            (v - ms[n_steps].sqrt()) - integral / 8.0
        })
        .collect();
    let (mean, se) = folded_mean(&per_path);
    let gap = convexity_gap(&table);
    assert!(gap > 0.0);
    assert!(mean.abs() <= 3.0 * se, "gap {gap}: residual {mean} ± {se}");
}

#[test]
fn convexity_gap_is_second_order_in_vol_of_vol() {
    let gap = |nu: f64| {
        let model = sabr().with_nu(nu);
        let batch = simulate_vol_paths(&model, 1.0, &desk_sim(55)).unwrap();
        convexity_gap(&estimate_moments(&batch, &model, 1).unwrap())
    };
    let (g1, g2, g4) = (gap(0.05), gap(0.1), gap(0.2));
    for (lo, hi) in [(g1, g2), (g2, g4)] {
        let ratio = hi / lo;
        assert!((3.5..=4.5).contains(&ratio), "{ratio} ({g1}, {g2}, {g4})");
    }
    assert!(gap(0.0).abs() <= 1e-13);
}

#[test]
fn standard_errors_shrink_with_the_square_root_of_paths() {
    let model = heston();
    let se = |n: usize| {
        let batch = simulate_vol_paths(&model, 1.0, &SimConfig { n_paths: n, ..desk_sim(56) }).unwrap();
        estimate_moments(&batch, &model, 10).unwrap().std_errors
    };
    let (small, large) = (se(25_000), se(100_000));
    // Higher orders are driven by rare low-variance paths that a small batch
    // undersamples, so their sample errors only settle at larger sizes.
    for n in 0..=4 {
        let ratio = small[n] / large[n];
        assert!((1.8..=2.2).contains(&ratio), "n={n}: {ratio}");
    }
}

#[test]
fn tables_persist_and_guard_against_reuse() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("moments.txt");
    let cfg = small_sim(2000, 57);
    let batch = simulate_vol_paths(&sabr_ir(), 1.0, &cfg).unwrap();
    let table = estimate_moments(&batch, &sabr_ir(), 30).unwrap();
    save_table(&table, &path).unwrap();
    let loaded = load_table(&path).unwrap();
    assert_eq!(loaded, table);
    assert_eq!(table_to_string(&loaded), std::fs::read_to_string(&path).unwrap());

    assert!(loaded.ensure_matches(&sabr_ir(), 1.0, &cfg).is_ok());
    assert!(matches!(
        loaded.ensure_matches(&sabr_ir().with_nu(0.31), 1.0, &cfg),
        Err(Error::StaleCache { .. })
    ));
    assert!(loaded.ensure_matches(&sabr_ir(), 1.0, &cfg.with_seed(58)).is_err());

    let text = std::fs::read_to_string(&path).unwrap();
    let first = format!("{:.16e}", table.moments[3]);
    std::fs::write(&path, text.replacen(&first, &format!("-{first}"), 1)).unwrap();
    assert!(load_table(&path).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn powers_agree_with_direct_computation(
        sigma0 in 0.5f64..40.0,
        nu in 0.0f64..1.0,
        t in 0.2f64..2.0,
        seed in 0u64..1000,
    ) {
        let model = sabr().with_nu(nu);
        let model = match model {
            VolModel::Sabr(p) => VolModel::Sabr(SabrParams { sigma0, ..p }),
            other => other,
        };
        let batch = simulate_vol_paths(&model, t, &small_sim(200, seed)).unwrap();
        let table = estimate_moments(&batch, &model, 12).unwrap();
        for n in 0..=12 {
            let p = 0.5 - n as f64;
            let direct = batch.integrated_variance.iter().map(|m| m.powf(p)).sum::<f64>()
                / batch.n_paths() as f64;
            prop_assert!((table.moments[n] - direct).abs() <= 1e-12 * direct, "n={}", n);
        }
    }
}
