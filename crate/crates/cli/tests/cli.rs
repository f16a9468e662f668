use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eprlab_core::criteria::{THETA_P, THETA_X};
use eprlab_core::states::tmsv;
use eprlab_core::{DensityMatrix, FockSpace};
use serde_json::Value;
use tempfile::TempDir;

fn eprlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eprlab")).current_dir(dir).args(args).output().unwrap()
}

#[track_caller]
fn ok(out: &Output) {
    assert!(out.status.success(), "status {:?}\n{}", out.status, String::from_utf8_lossy(&out.stderr));
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn rows(path: impl AsRef<Path>) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

fn write_rho(dir: &Path, name: &str, rho: &DensityMatrix) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, rho.to_json().unwrap()).unwrap();
    path
}

fn conjugate_phases() -> String {
    format!("{THETA_X},{THETA_P}")
}

#[test]
fn simulate_preset_row_counts() {
    let tmp = TempDir::new().unwrap();
    ok(&eprlab(tmp.path(), &["simulate", "--preset", "fig_s3", "--seed", "7", "--out", "s"]));
    assert_eq!(rows(tmp.path().join("s/samples.csv")), 29 * 100);
    assert_eq!(rows(tmp.path().join("s/shots.csv")), 29 * 100);
    let m = json(tmp.path().join("s/manifest.json"));
    assert_eq!(m["preset"], "fig_s3");
    assert_eq!(m["seed"], 7);
}

#[test]
fn simulate_vacuum_and_default_run_dir() {
    let tmp = TempDir::new().unwrap();
    ok(&eprlab(tmp.path(), &["simulate", "--xi", "0", "--p", "10", "--thetas", "0"]));
    let dir = tmp.path().join("runs/simulate-seed1");
    assert_eq!(rows(dir.join("samples.csv")), 10);
    let text = fs::read_to_string(dir.join("samples.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| l.starts_with("0,")), "{text}");
}

#[test]
fn simulate_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    for out in ["a", "b"] {
        ok(&eprlab(tmp.path(), &["--workers", "1", "simulate", "--xi", "0.5", "--p", "50", "--seed", "3", "--out", out]));
    }
    for f in ["samples.csv", "shots.csv", "calibration.json", "manifest.json"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn flags_override_config_over_preset() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("c.json"), r#"{"p_per_theta": 3, "noise": {"sigma_phase": 0.1}}"#).unwrap();
    ok(&eprlab(tmp.path(), &["simulate", "--preset", "fig_s3", "--config", "c.json", "--n-theta", "2", "--out", "o"]));
    assert_eq!(rows(tmp.path().join("o/samples.csv")), 6);
    let m = json(tmp.path().join("o/manifest.json"));
    assert_eq!(m["parameters"]["noise"]["sigma_phase"], 0.1);
    assert_eq!(m["parameters"]["noise"]["sum_variance_shift"], 0.12);

    fs::write(tmp.path().join("bad.json"), r#"{"p_per_thetaa": 3}"#).unwrap();
    let out = eprlab(tmp.path(), &["simulate", "--xi", "0.3", "--config", "bad.json"]);
    assert_eq!(code(&out), 64);
}

#[test]
fn tomo_recovers_the_vacuum() {
    let tmp = TempDir::new().unwrap();
    ok(&eprlab(tmp.path(), &["simulate", "--xi", "0", "--p", "2000", "--n-theta", "29", "--out", "s"]));
    ok(&eprlab(tmp.path(), &["tomo", "s/samples.csv", "--dx", "0.1", "--max-iter", "10000", "--out", "t"]));
    let rho = DensityMatrix::from_json(&fs::read_to_string(tmp.path().join("t/rho.json")).unwrap()).unwrap();
    assert!(rho.population(0, 0) >= 0.99, "{}", rho.population(0, 0));
    assert_eq!(json(tmp.path().join("t/diagnostics.json"))["converged"], true);
}

#[test]
fn tomo_input_errors() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("empty.csv"), "").unwrap();
    let out = eprlab(tmp.path(), &["tomo", "empty.csv"]);
    assert_eq!(code(&out), 64);

    fs::write(tmp.path().join("bad.csv"), "theta_rad,x_a,x_b\n0,0.1,0.2\n0.5,oops,1\n").unwrap();
    let out = eprlab(tmp.path(), &["tomo", "bad.csv", "--out", "never"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!tmp.path().join("never").exists());

    let out = eprlab(tmp.path(), &["tomo", "missing.csv"]);
    assert_eq!(code(&out), 64);
}

#[test]
fn tomo_non_convergence_exit_code() {
    let tmp = TempDir::new().unwrap();
    ok(&eprlab(tmp.path(), &["simulate", "--xi", "0.4", "--p", "20", "--n-theta", "5", "--out", "s"]));
    let out = eprlab(tmp.path(), &["tomo", "s/samples.csv", "--max-iter", "1", "--out", "t"]);
    assert_eq!(code(&out), 2);
    let d = json(tmp.path().join("t/diagnostics.json"));
    assert_eq!(d["converged"], false);
    assert_eq!(d["iterations"], 1);
    assert!(tmp.path().join("t/rho.json").exists());
}

#[test]
fn criteria_on_ideal_and_vacuum_data() {
    let tmp = TempDir::new().unwrap();
    let phases = conjugate_phases();
    ok(&eprlab(tmp.path(), &["simulate", "--xi", "0.63", "--p", "100000", "--thetas", &phases, "--out", "sq"]));
    ok(&eprlab(tmp.path(), &["criteria", "sq/samples.csv", "--bootstrap", "0", "--out", "c"]));
    let r = json(tmp.path().join("c/report.json"));
    let product = r["epr_product"].as_f64().unwrap();
    assert!((product - 0.080).abs() < 0.005, "{product}");
    assert_eq!(r["epr_satisfied"], true);

    ok(&eprlab(tmp.path(), &["simulate", "--xi", "0", "--p", "20000", "--thetas", &phases, "--out", "vac"]));
    ok(&eprlab(tmp.path(), &["criteria", "vac/samples.csv", "--out", "v"]));
    let r = json(tmp.path().join("v/report.json"));
    assert!((r["epr_product"].as_f64().unwrap() - 1.0).abs() < 0.05);
    assert_eq!(r["epr_satisfied"], false);
    assert!(r["errors"]["epr_product"].as_f64().unwrap() > 0.0);
    assert!(rows(tmp.path().join("v/variance_sweep.csv")) == 2);

    ok(&eprlab(tmp.path(), &["simulate", "--xi", "0.5", "--p", "50", "--thetas", "0.3", "--out", "one"]));
    let out = eprlab(tmp.path(), &["criteria", "one/samples.csv"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("conjugate"));
    assert_eq!(code(&eprlab(tmp.path(), &["criteria", "vac/samples.csv", "--bootstrap", "10"])), 64);
}

#[test]
fn metrics_on_reference_states() {
    let tmp = TempDir::new().unwrap();
    let sq = write_rho(tmp.path(), "sq.json", &tmsv(0.63, FockSpace::new(30)).unwrap().value.projector());
    ok(&eprlab(tmp.path(), &["metrics", sq.to_str().unwrap(), "--target-xi", "0.63", "--out", "m"]));
    let m = json(tmp.path().join("m/metrics.json"));
    assert!((m["log_negativity"].as_f64().unwrap() - 1.818).abs() < 1e-3, "{m}");
    assert!((m["qfi"].as_f64().unwrap() - 2.627).abs() < 2e-3, "{m}");
    assert!((m["fidelity_to_target"].as_f64().unwrap() - 1.0).abs() < 1e-9);

    let vac = write_rho(tmp.path(), "vac.json", &DensityMatrix::vacuum(FockSpace::new(4)));
    ok(&eprlab(tmp.path(), &["metrics", vac.to_str().unwrap(), "--out", "v"]));
    let m = json(tmp.path().join("v/metrics.json"));
    assert_eq!(m["log_negativity"].as_f64().unwrap().abs(), 0.0);
    assert_eq!(m["qfi"], 0.0);
    assert_eq!(m["qfi_per_particle_defined"], false);

    let mut scaled = json(&vac);
    let first = &mut scaled["re"][0][0];
    *first = Value::from(0.9);
    fs::write(tmp.path().join("low.json"), scaled.to_string()).unwrap();
    let out = eprlab(tmp.path(), &["metrics", "low.json"]);
    assert_ne!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("trace"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn reproduce_usage_errors() {
    let tmp = TempDir::new().unwrap();
    let out = eprlab(tmp.path(), &["reproduce", "fig9"]);
    assert_eq!(code(&out), 64);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("fig_s2") && err.contains("fig3"), "{err}");
    assert_eq!(code(&eprlab(tmp.path(), &["reproduce"])), 64);
    assert_eq!(code(&eprlab(tmp.path(), &["--preset", "fig3", "reproduce", "fig_s2"])), 64);
    assert_eq!(code(&eprlab(tmp.path(), &["--bogus"])), 64);
    assert_eq!(code(&eprlab(tmp.path(), &["--help"])), 0);
}

#[test]
fn reproduce_reduced_figures() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("f3.json"), r#"{"times": [0.0, 0.026], "p_per_point": 2000}"#).unwrap();
    ok(&eprlab(tmp.path(), &["reproduce", "fig3", "--config", "f3.json", "--out", "f3"]));
    assert_eq!(rows(tmp.path().join("f3/variance_sweep.csv")), 2);

    fs::write(
        tmp.path().join("s2.json"),
        r#"{"ps": [20, 40], "dxs": [0.25], "seeds": 2, "n_theta": 9, "n_cut": 4}"#,
    )
    .unwrap();
    ok(&eprlab(tmp.path(), &["reproduce", "fig_s2", "--seed", "1", "--config", "s2.json", "--out", "s2"]));
    let table = fs::read_to_string(tmp.path().join("s2/fidelity.csv")).unwrap();
    assert!(table.lines().next().unwrap().contains("fidelity"), "{table}");
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn presets_round_trip() {
    let tmp = TempDir::new().unwrap();
    for name in ["fig_s2", "fig_s3", "fig3"] {
        let (s, t, m) = (format!("{name}-s"), format!("{name}-t"), format!("{name}-m"));
        ok(&eprlab(tmp.path(), &["--preset", name, "simulate", "--out", &s]));
        ok(&eprlab(tmp.path(), &["--preset", name, "tomo", &format!("{s}/samples.csv"), "--out", &t]));
        ok(&eprlab(tmp.path(), &["--preset", name, "metrics", &format!("{t}/rho.json"), "--out", &m]));
        let r = json(tmp.path().join(&m).join("metrics.json"));
        assert!(r["fidelity_to_target"].as_f64().unwrap() > 0.5, "{name}: {r}");
    }
}
