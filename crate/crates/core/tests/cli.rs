use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use normvol::mc::{METHOD_CONDITIONAL, METHOD_FD, METHOD_SERIES, METHOD_SHARED};
use normvol::*;

const BIN: &str = env!("CARGO_BIN_EXE_normvol");

fn write_config(dir: &Path, name: &str, model: &str, market: &str) -> PathBuf {
    let text = format!(
        "{model}\n[market]\n{market}\n\n[sim]\nn_paths = 4000\nsteps_per_year = 52\nseed = 7\n\n[series]\nn_terms = 20\n\n[output]\ndirectory = \"{}\"\n",
        dir.join("out").display()
    );
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const HESTON: &str = "[model]\ntype = \"heston\"\nsigma0 = 20.0\nkappa = 2.0\ntheta = 400.0\nnu = 20.0\nrho = 0.0\n";
const GRID: &str = "x0 = 100.0\nmaturities = [1.0]\nstrikes = \"80:120:10\"";

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn run_with(config: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--config", config.to_str().unwrap()]);
    run(&all)
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(2)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["price"]).status.code(), Some(2));
    assert_eq!(run(&["price", "--config", "/nonexistent/normvol.toml"]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));

    let bad_key = write_config(dir.path(), "bad.toml", &format!("{HESTON}volatility = 3.0\n"), GRID);
    let out = run_with(&bad_key, &["price"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let correlated = write_config(dir.path(), "rho.toml", &HESTON.replace("rho = 0.0", "rho = -0.3"), GRID);
    assert_eq!(run_with(&correlated, &["price"]).status.code(), Some(2));

    let ok = write_config(dir.path(), "ok.toml", HESTON, GRID);
    assert_eq!(run_with(&ok, &["price", "--paths", "0"]).status.code(), Some(2));
}

#[test]
fn corrupt_moment_cache_is_a_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "heston.toml", HESTON, GRID);
    assert!(run_with(&cfg, &["price"]).status.success());
    let cache = dir.path().join("out/moments_T1.txt");
    let text = std::fs::read_to_string(&cache).unwrap();
    std::fs::write(&cache, text.replace('e', "x")).unwrap();
    assert_eq!(run_with(&cfg, &["price"]).status.code(), Some(1));
}

#[test]
fn moments_are_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "heston.toml", HESTON, GRID);
    let mut outputs = Vec::new();
    for sub in ["a", "b"] {
        let out_dir = dir.path().join(sub);
        let out = run_with(&cfg, &["moments", "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push((
            std::fs::read(out_dir.join("moments.csv")).unwrap(),
            std::fs::read(out_dir.join("moments_T1.txt")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);

    let other = dir.path().join("c");
    run_with(&cfg, &["moments", "--seed", "8", "--out", other.to_str().unwrap()]);
    assert_ne!(std::fs::read(other.join("moments.csv")).unwrap(), outputs[0].0);
}

#[test]
fn price_csv_layout_and_atm_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "heston.toml", HESTON, GRID);
    let out = run_with(&cfg, &["price", "--benchmark", "--seed", "11"]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("out/price.csv")).unwrap();
    let mut lines = csv.lines();
    let preamble = lines.next().unwrap();
    assert!(preamble.starts_with("# normvol price config_hash="), "{preamble}");
    assert!(preamble.contains(" seed=11 ") && preamble.contains("n_paths=4000"));
    assert!(lines.next().unwrap().starts_with("maturity,strike,leading,series"));

    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 5);
    for r in &rows {
        // 17 significant digits
        let mantissa = r[3].split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{}", r[3]);
    }
    let atm = rows.iter().find(|r| r[1].parse::<f64>().unwrap() == 100.0).unwrap();
    let series: f64 = atm[3].parse().unwrap();

    // the same simulation through the library
    let model = VolModel::Heston(HestonParams { sigma0: 20.0, kappa: 2.0, theta: 400.0, nu: 20.0, rho: 0.0 });
    let sim = SimConfig { n_paths: 4000, steps_per_year: 52, seed: 11, antithetic: true };
    let batch = simulate_vol_paths(&model, 1.0, &sim).unwrap();
    let table = estimate_moments(&batch, &model, 20).unwrap();
    let expected = bachelier_price(&MarketSpec::new(100.0, 100.0, 1.0).unwrap(), table.v_hat).unwrap();
    assert!((series - expected).abs() <= 1e-13 * expected, "{series} vs {expected}");
}

#[test]
fn flat_volatility_smile_has_no_error() {
    let dir = tempfile::tempdir().unwrap();
    let model = "[model]\ntype = \"sabr\"\nsigma0 = 20.0\nnu = 0.0\nrho = 0.0\n";
    let cfg = write_config(dir.path(), "flat.toml", model, GRID);
    let out = run_with(&cfg, &["smile"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/smile.csv")).unwrap();
    for r in data_rows(&csv) {
        assert_eq!(r[5], "ok");
        let rel: f64 = r[4].parse().unwrap();
        assert!(rel <= 1e-12, "{r:?}");
    }
}

#[test]
fn control_variates_report_all_four() {
    let dir = tempfile::tempdir().unwrap();
    let model = "[model]\ntype = \"sabr\"\nsigma0 = 0.7\nnu = 0.3\nrho = -0.3\n";
    let market = "x0 = 2.0\nmaturities = [1.0]\nstrikes = \"1.5:2.5:0.5\"";
    let cfg = write_config(dir.path(), "iii.toml", model, market);
    let out = run_with(&cfg, &["cv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/cv.csv")).unwrap();
    let header = csv.lines().nth(1).unwrap();
    for prefix in ["var", "factor", "beta"] {
        let n = header.split(',').filter(|c| c.starts_with(&format!("{prefix}_cv"))).count();
        assert_eq!(n, 4, "{header}");
    }
    for r in data_rows(&csv) {
        assert_eq!(r.len(), 15);
        let plain: f64 = r[2].parse().unwrap();
        assert!(r[3..7].iter().all(|v| v.parse::<f64>().unwrap() <= plain));
    }
}

#[test]
fn greeks_time_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "heston.toml", HESTON, GRID);
    let out = run_with(&cfg, &["greeks", "--paths", "2000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let timing = std::fs::read_to_string(dir.path().join("out/greeks_timing.csv")).unwrap();
    for method in [METHOD_SERIES, METHOD_CONDITIONAL, METHOD_FD, METHOD_SHARED] {
        let rows = timing.lines().filter(|l| l.starts_with(&format!("{method},"))).count();
        assert_eq!(rows, 2, "{method}: {timing}");
    }
    let csv = std::fs::read_to_string(dir.path().join("out/greeks.csv")).unwrap();
    assert_eq!(data_rows(&csv).len(), 10);
}

#[test]
fn nstar_writes_one_row_per_contract() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "heston.toml", HESTON, GRID);
    let out = run_with(&cfg, &["nstar", "--terms", "25"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/nstar.csv")).unwrap();
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 5);
    let atm = rows.iter().find(|r| r[1].parse::<f64>().unwrap() == 100.0).unwrap();
    assert_eq!(atm[2], "1");
}
