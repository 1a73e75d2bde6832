use std::path::Path;
use std::process::Command;

use qisolab_core::report::Report;

fn qisolab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qisolab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_report(dir: &Path, experiment: &str) -> Report {
    let text = std::fs::read_to_string(dir.join(format!("{experiment}_report.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn harmonic_spectrum_lists_odd_integers() {
    let dir = tempfile::tempdir().unwrap();
    let out = qisolab(&["spectrum", "--t", "0", "--eps", "0", "--h", "1", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let mut rd = csv::Reader::from_path(dir.path().join("spectrum.csv")).unwrap();
    let lambdas: Vec<f64> = rd
        .records()
        .map(|r| r.unwrap()[2].parse().unwrap())
        .collect();
    assert_eq!(lambdas.len(), 10);
    for (j, l) in lambdas.iter().enumerate() {
        assert!((l - (2 * j + 1) as f64).abs() < 1e-9, "{j} {l}");
    }
    let report = read_report(dir.path(), "spectrum");
    assert!(report.passed());
    assert_eq!(report.config.potential.t, 0.0);
    assert!(report.tables.iter().any(|t| t.file == "spectrum.csv" && t.columns.len() == 4));
}

#[test]
fn isospectral_sweep_flags_the_noise_floor() {
    let dir = tempfile::tempdir().unwrap();
    let out = qisolab(&["gap-sweep", "--t", "0", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let report = read_report(dir.path(), "gap-sweep");
    assert!(report.notes.iter().any(|n| n == "all gaps below noise floor"));
    assert!(dir.path().join("plot_gap_curve.py").exists());
    let text = std::fs::read_to_string(dir.path().join("gap_curve.csv")).unwrap();
    assert_eq!(text.lines().count(), 13);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",false")));
}

#[test]
fn identical_configs_give_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = qisolab(&["gap-sweep", "--out", d.path().to_str().unwrap()]);
        assert!(out.status.success());
    }
    for f in ["gap_curve.csv", "rayleigh.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn failed_assertion_sets_exit_status() {
    // Steps this small sit below eigenvalue rounding, so the observed order
    // is not two and the order assertion fails.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"experiment": "hadamard-check", "hadamard": {"order_eps": [1e-5, 5e-6, 2.5e-6]}}"#,
    )
    .unwrap();
    let out = qisolab(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report = read_report(dir.path(), "hadamard-check");
    assert!(!report.passed());
    assert!(report.failures().all(|a| a.invariant == "central-difference order"));
}

#[test]
fn invalid_config_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let out = qisolab(&["spectrum", "--h", "-1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("spectrum.csv").exists());
    let out = qisolab(&["spectrum", "--t", "1e6", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config"));
}

#[test]
fn print_defaults_round_trips() {
    let out = qisolab(&["--print-defaults", "--grid-n", "7999"]);
    assert!(out.status.success());
    let cfg = qisolab_core::config::ExperimentConfig::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg.grid.n, 7999);
    cfg.validate().unwrap();
}

#[test]
fn weber_experiment_writes_figure_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = qisolab(&["weber", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report = read_report(dir.path(), "weber");
    let c = report.values["c"].as_f64().unwrap();
    assert!(c > 1.0);
    for f in ["weber.csv", "ground_state.csv", "plot_weber.py"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}
