//! End-to-end tests of the `spue` binary: exit-code contract, flag
//! plumbing, determinism, and artifact round trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn spue() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spue"))
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    spue().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn equilibrium_canonical_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "equilibrium",
        "--config",
        repo_config("canonical.conf").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = stdout(&out);
    assert!(text.contains("kappa    = 2.0"), "{text}");
    assert!(text.contains("L*       = 1.0"), "{text}");
    assert!(text.contains("verdict: PASS"), "{text}");
    for artifact in [
        "equilibrium_summary.csv",
        "spue_density.csv",
        "equilibrium_arrivals.csv",
        "spue_lp_density.csv",
        "atue_lp_arrivals.csv",
    ] {
        assert!(dir.path().join(artifact).exists(), "missing {artifact}");
    }
    // Emitted density CSV parses back into a field at jam density 2.
    let csv = std::fs::read_to_string(dir.path().join("spue_density.csv")).unwrap();
    let field = spue::io::density_from_csv(&csv).unwrap();
    assert!((field.mass() - 2.0).abs() < 1e-9);
}

#[test]
fn equilibrium_arnott_reports_jam_density() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "equilibrium",
        "--config",
        repo_config("arnott.conf").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(stdout(&out).contains("kappa    = 0.322156"), "{}", stdout(&out));
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = run(&["equilibrium", "--config", "/nonexistent/nowhere.conf"]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("cannot read config"), "{err}");
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let out = run(&["equilibrium"]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
}

#[test]
fn corrupted_fundamental_diagram_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "[fd]\nu = -1.0\n").unwrap();
    let out = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("u"), "{err}");
}

#[test]
fn simulate_writes_plots_and_reports_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--config",
        repo_config("canonical.conf").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--dx",
        "0.02",
        "--days",
        "80",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = stdout(&out);
    assert!(text.contains("converged: true"), "{text}");
    assert!(text.contains("Lyapunov monotone: true"), "{text}");
    for artifact in [
        "trajectory.csv",
        "descent.csv",
        "density_final.csv",
        "arrivals_final.csv",
        "density_snapshots.svg",
        "phi_descent.svg",
    ] {
        assert!(dir.path().join(artifact).exists(), "missing {artifact}");
    }
    let svg = std::fs::read_to_string(dir.path().join("phi_descent.svg")).unwrap();
    assert!(svg.contains("<polyline"));
    // Descent CSV is monotone in phi.
    let descent = std::fs::read_to_string(dir.path().join("descent.csv")).unwrap();
    let phis: Vec<f64> = descent
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(phis.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs() + 1e-12));
}

#[test]
fn simulate_outputs_are_bit_identical_across_runs() {
    let mut hashes = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&[
            "simulate",
            "--config",
            repo_config("canonical.conf").to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "--preset",
            "random",
            "--seed",
            "77",
            "--dx",
            "0.05",
            "--no-svg",
        ]);
        assert_eq!(out.status.code(), Some(0), "{out:?}");
        let mut bundle = Vec::new();
        for name in ["trajectory.csv", "descent.csv", "density_final.csv"] {
            bundle.extend(std::fs::read(dir.path().join(name)).unwrap());
        }
        hashes.push(bundle);
    }
    assert_eq!(hashes[0], hashes[1], "same seed must give identical bytes");
}

#[test]
fn verify_passes_at_default_tolerance_and_fails_tightened() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(&[
        "verify",
        "--config",
        repo_config("canonical.conf").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--dx",
        "0.04",
    ]);
    assert_eq!(ok.status.code(), Some(0), "{ok:?}");
    let text = stdout(&ok);
    assert!(text.contains("PASS transform_identity"), "{text}");
    assert!(text.contains("PASS vacancy_property"), "{text}");
    assert!(text.contains("PASS oracle_agreement"), "{text}");
    assert!(text.contains("PASS lyapunov_descent"), "{text}");
    assert!(dir.path().join("verify_report.txt").exists());

    // Negative control: a vanishing tolerance scale must fail and name
    // the offending quantity.
    let tightened = run(&[
        "verify",
        "--config",
        repo_config("canonical.conf").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--dx",
        "0.04",
        "--tol-scale",
        "1e-14",
    ]);
    assert_eq!(tightened.status.code(), Some(2), "{tightened:?}");
    let text = stdout(&tightened);
    assert!(text.contains("FAIL"), "{text}");
    assert!(text.contains('>'), "failure should carry the quantity: {text}");
}

#[test]
fn spue_out_env_sets_default_output_dir() {
    // Precedence is flag > config > SPUE_OUT > builtin, so the config
    // must stay silent about the output dir for the env var to apply.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("minimal.conf");
    std::fs::write(&cfg, "[cost]\nalpha = 2.0\n").unwrap();
    let out = spue()
        .args(["equilibrium", "--config", cfg.to_str().unwrap()])
        .env("SPUE_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(dir.path().join("equilibrium_summary.csv").exists());
}
