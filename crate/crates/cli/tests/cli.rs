use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sta_cli::output::read_table;

fn sta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sta")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn dir_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn two_level_defaults_pass() {
    let d = tempfile::tempdir().unwrap();
    let out = sta(&["design", "two-level", "--out-dir", dir_arg(d.path())]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!(v["report"]["fidelity_min"].as_f64().unwrap() >= 1.0 - 1e-8);
    assert!(v["report"]["boundary_ok"].as_bool().unwrap());
    let t = read_table(&d.path().join("two_level.csv")).unwrap();
    assert_eq!(t.header, ["t", "theta", "e_x", "e_y", "e_z", "n_x", "n_y", "n_z", "h"]);
    for name in ["fig1a_h0.csv", "fig1a_2h0.csv", "fig1b_y_axis.csv", "hamiltonian.csv", "invariant.csv"] {
        assert!(d.path().join(name).exists(), "{name}");
    }
}

#[test]
fn below_threshold_names_the_node() {
    let out = sta(&["design", "two-level", "--h-over-h0", "0.5"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    // 20000 steps: the midpoint is node 10000; the message gives the required field.
    assert!(err.contains("node 10000") && err.contains("need h >="), "{err}");
}

#[test]
fn y_axis_peak_is_the_threshold() {
    let out = sta(&["design", "two-level", "--mode", "y-axis", "--t-f", "2"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let peak = v["peak"]["h"].as_f64().unwrap();
    assert!((peak - 3.0 * PI / 8.0).abs() <= 1e-12, "{peak}");
    assert!((v["peak"]["t"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn oscillator_flags_negative_excursion() {
    let out = sta(&["design", "oscillator", "--omega0-tf", "0.5", "--omegaf", "0.1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["negative"], Value::Bool(true));
    assert!(v["min_omega_sq"].as_f64().unwrap() < 0.0);
    // Smooth regime in every ω0 t_f = 2 panel.
    for p in v["panels"].as_array().unwrap() {
        if p["omega0_tf"].as_f64() == Some(2.0) {
            assert_eq!(p["negative"], Value::Bool(false));
        }
    }
}

#[test]
fn oscillator_without_ramp_is_constant() {
    let d = tempfile::tempdir().unwrap();
    let out = sta(&["design", "oscillator", "--omega0", "1.5", "--omegaf", "1.5", "--out-dir", dir_arg(d.path())]);
    assert_eq!(code(&out), 0);
    let t = read_table(&d.path().join("oscillator.csv")).unwrap();
    assert_eq!(t.header, ["t", "b", "bdot", "omega_sq"]);
    assert!(t.rows.iter().all(|r| r[1] == 1.0 && r[3] == 2.25));
}

fn designed_pair() -> tempfile::TempDir {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&sta(&["design", "two-level", "--out-dir", dir_arg(d.path())])), 0);
    d
}

#[test]
fn verify_accepts_designed_pair() {
    let d = designed_pair();
    let (h, i) = (d.path().join("hamiltonian.csv"), d.path().join("invariant.csv"));
    let out = sta(&["verify", "--hamiltonian", dir_arg(&h), "--invariant", dir_arg(&i)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&out)["passed"], Value::Bool(true));
}

#[test]
fn verify_rejects_corrupted_invariant() {
    let d = designed_pair();
    let path = d.path().join("invariant.csv");
    let mut t = read_table(&path).unwrap();
    for row in &mut t.rows {
        row[1] += 1e-3 * row[0] * row[0];
    }
    t.write(d.path(), "corrupt.csv").unwrap();
    let h = d.path().join("hamiltonian.csv");
    let bad = d.path().join("corrupt.csv");
    let out = sta(&["verify", "--hamiltonian", dir_arg(&h), "--invariant", dir_arg(&bad)]);
    assert_eq!(code(&out), 1);
    assert!(json(&out)["report"]["residual_max"].as_f64().unwrap() > 1e-4);
}

#[test]
fn verify_rejects_mismatched_grids() {
    let d = designed_pair();
    let e = tempfile::tempdir().unwrap();
    sta(&["design", "two-level", "--steps", "1000", "--out-dir", dir_arg(e.path())]);
    let h = d.path().join("hamiltonian.csv");
    let i = e.path().join("invariant.csv");
    let out = sta(&["verify", "--hamiltonian", dir_arg(&h), "--invariant", dir_arg(&i)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("time columns"));
}

#[test]
fn wegner_seed_one() {
    let d = tempfile::tempdir().unwrap();
    let out = sta(&["flow", "wegner", "--seed", "1", "--n", "8", "--out-dir", dir_arg(d.path())]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!(v["drift"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["monotone"], Value::Bool(true));
    let t = read_table(&d.path().join("wegner.csv")).unwrap();
    assert_eq!(t.header.len(), 10);
    let off: Vec<f64> = t.rows.iter().map(|r| r[1]).collect();
    assert!(off.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn toda_and_kdv() {
    let out = sta(&["flow", "toda", "--n", "8"]);
    assert_eq!(code(&out), 0);
    assert!(json(&out)["drift"].as_f64().unwrap() < 1e-8);

    let out = sta(&["flow", "toda", "--n", "3", "--seed", "5", "--t-f", "4", "--steps", "4000"]);
    assert_eq!(code(&out), 0);
    assert!(json(&out)["spin_residual"].as_f64().unwrap() < 1e-6);

    let d = tempfile::tempdir().unwrap();
    let out = sta(&["flow", "kdv", "--out-dir", dir_arg(d.path())]);
    assert_eq!(code(&out), 0);
    let t = read_table(&d.path().join("kdv.csv")).unwrap();
    assert_eq!(t.rows.len(), 101);
    assert!(t.rows.iter().all(|r| (r[1] + 1.0).abs() < 1e-3));
}

#[test]
fn counterdiabatic_commands() {
    assert_eq!(code(&sta(&["cd-term", "--field", "2.5"])), 0);
    assert_eq!(code(&sta(&["cd-variational", "--ansatz", "y"])), 0);
    // σz alone cannot produce the σy term.
    assert_eq!(code(&sta(&["cd-variational", "--ansatz", "z"])), 1);
    assert_eq!(code(&sta(&["cd-variational", "--ansatz", "q"])), 2);
    assert_eq!(code(&sta(&["cd-variational", "--objective", "other"])), 2);
}

#[test]
fn flags_override_config_file() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    std::fs::write(&cfg, "# seeded chain\nseed = 3\nn = 4\nt-f = 2\n").unwrap();
    let out = sta(&["flow", "toda", "--config", dir_arg(&cfg), "--n", "5"]);
    let v = json(&out);
    assert_eq!(v["seed"], 3);
    assert_eq!(v["n"], 5);
    assert_eq!(v["t_f"], 2.0);

    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(code(&sta(&["flow", "toda", "--config", dir_arg(&cfg)])), 2);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&sta(&["design", "two-level", "--steps", "50"])), 2);
    assert_eq!(code(&sta(&["design", "two-level", "--t-f", "-1"])), 2);
    assert_eq!(code(&sta(&["flow", "wegner", "--bogus"])), 2);
}

#[test]
fn sweep_fails_if_any_run_fails() {
    let d = tempfile::tempdir().unwrap();
    let out = sta(&["sweep", "--kind", "two-level", "--values", "0.5,2", "--out-dir", dir_arg(d.path())]);
    assert_eq!(code(&out), 1);
    let v = json(&out);
    let runs = v["runs"].as_array().unwrap();
    assert!(runs[0]["error"].as_str().unwrap().contains("threshold"));
    assert_eq!(runs[1]["passed"], Value::Bool(true));
    assert!(d.path().join("run_001/two_level.csv").exists());

    let out = sta(&["sweep", "--kind", "oscillator", "--values", "2,1,0.5"]);
    assert_eq!(code(&out), 0);
    let negative: Vec<bool> = json(&out)["runs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["summary"]["negative"].as_bool().unwrap())
        .collect();
    assert_eq!(negative, [true, true, true]);
}

#[test]
fn identical_runs_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        sta(&["design", "two-level", "--mode", "y-axis", "--out-dir", dir_arg(d.path())]);
        sta(&["flow", "toda", "--seed", "9", "--out-dir", dir_arg(d.path())]);
    }
    for name in ["two_level.csv", "hamiltonian.csv", "fig1b_y_axis.csv", "toda.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}
