use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fpa(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpa"))
        .args(args)
        .current_dir(dir)
        .env_remove("FPA_THREADS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let k = lines.next().unwrap().split(',').position(|c| c == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn equilibrium_solve_stays_at_zero_entropy() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(
        d,
        "eq.json",
        r#"{"grid": {"Nx": 16, "Nv": 48}, "solver": {"dt": 0.01, "T": 0.5, "snapshot_every": 25}, "io": {"preset": "equilibrium"}}"#,
    );
    let out = fpa(&["solve", "--config", "eq.json", "--out", "run"], d);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run = d.join("run");
    for name in ["config.json", "final.fpa", "series.csv", "assumptions.json", "fit.json", "monitors.json"] {
        assert!(run.join(name).exists(), "{name} missing");
    }
    assert!(column(&run.join("series.csv"), "H").iter().all(|h| h.abs() <= 1e-10));
    assert!(run.join("snapshots").read_dir().unwrap().count() >= 2);
    // No decay to fit, so fit.json records why.
    assert!(json(&run.join("fit.json"))["error"].is_string());
}

#[test]
fn two_bump_solve_decays_exponentially() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(
        d,
        "tb.json",
        r#"{"grid": {"Nx": 16, "Nv": 48}, "averaging": {"kernel": "global"}, "solver": {"dt": 0.01, "T": 15}, "io": {"out_dir": "tb"}}"#,
    );
    let out = fpa(&["solve", "--config", "tb.json"], d);
    assert_eq!(out.status.code(), Some(0));
    let fit = json(&d.join("tb/fit.json"));
    assert!(fit["delta_fit"].as_f64().unwrap() > 0.0);
    assert!(fit["r_squared"].as_f64().unwrap() >= 0.99);
    let h = column(&d.join("tb/series.csv"), "H");
    assert!(h.windows(2).all(|w| w[1] <= w[0] + 1e-15));

    // Refitting the written series gives the same window result.
    let refit = fpa(&["fit", "tb/series.csv", "--t0", "7.5", "--t1", "15", "--out", "refit"], d);
    assert_eq!(refit.status.code(), Some(0));
    let again = json(&d.join("refit/fit.json"));
    let (a, b) = (again["delta_fit"].as_f64().unwrap(), fit["delta_fit"].as_f64().unwrap());
    assert!((a - b).abs() < 1e-12 * b);
}

#[test]
fn malformed_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for (text, key) in [
        (r#"{"solver": {"dtt": 0.1}}"#, "solver.dtt"),
        (r#"{"grid": {"Nx": -4}}"#, "grid.Nx"),
        (r#"{"force": {"sigma": 2.0}}"#, "force.sigma"),
    ] {
        write(d, "bad.json", text);
        let out = fpa(&["solve", "--config", "bad.json", "--out", "bad"], d);
        assert_eq!(out.status.code(), Some(1));
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
        assert!(err.contains(key), "{err}");
    }
    let out = fpa(&["solve", "--config", "missing.json"], d);
    assert_eq!(out.status.code(), Some(1));
    let out = fpa(&["solve"], d);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn hard_gate_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let gated = r#"{"grid": {"Nx": 16, "Nv": 48}, "averaging": {"variant": "identity"},
        "diagnostics": {"hard_gate_assumptions": true}, "solver": {"dt": 0.01, "T": 0.5}}"#;
    write(d, "gate.json", gated);
    let out = fpa(&["solve", "--config", "gate.json", "--out", "s"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(!json(&d.join("s/assumptions.json"))["pass_iii"].as_bool().unwrap());
    assert!(d.join("s/final.fpa").exists());

    let out = fpa(&["check", "--config", "gate.json", "--out", "c"], d);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("assumption iii: FAIL")), "{text}");

    // Without the gate the same audit only reports.
    write(d, "warn.json", &gated.replace("true", "false"));
    let out = fpa(&["check", "--config", "warn.json", "--out", "w"], d);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn check_on_uniform_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(
        d,
        "eq.json",
        r#"{"grid": {"Nx": 16, "Nv": 48}, "averaging": {"kernel": "global"}, "solver": {"dt": 0.01, "T": 0.1}, "io": {"preset": "equilibrium"}}"#,
    );
    let out = fpa(&["check", "--config", "eq.json", "--out", "c"], d);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&d.join("c/assumptions.json"));
    assert!(r["pass_i"].as_bool().unwrap());
    assert_eq!(r["op_norm_ii"].as_f64().unwrap(), 0.0);
    assert!(r["gap_sup_mean_zero"].as_f64().unwrap() < 1e-12);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 4);

    // Auditing a written snapshot goes through the same path.
    assert_eq!(fpa(&["solve", "--config", "eq.json", "--out", "s"], d).status.code(), Some(0));
    let out = fpa(&["check", "--config", "eq.json", "--snapshot", "s/final.fpa", "--out", "c2"], d);
    assert_eq!(out.status.code(), Some(0));
    let r2 = json(&d.join("c2/assumptions.json"));
    assert!((r2["c0"].as_f64().unwrap() - r["c0"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn check_without_force_has_zero_force_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(
        d,
        "ou.json",
        r#"{"grid": {"Nx": 16, "Nv": 64, "Vmax": 8.0}, "force": {"sigma": 0.0}, "averaging": {"kernel": "global"}}"#,
    );
    let out = fpa(&["check", "--config", "ou.json", "--out", "c"], d);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&d.join("c/assumptions.json"))["force_ratio"].as_f64().unwrap(), 0.0);
}

#[test]
fn lone_agent_keeps_its_momentum() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(
        d,
        "one.json",
        r#"{"force": {"sigma": 0.0}, "grid": {"Vmax": 8.0}, "particles": {"N": 1, "dt": 0.01, "noise_on": false},
            "solver": {"T": 1.0, "record_every": 10}}"#,
    );
    let out = fpa(&["particles", "--config", "one.json", "--out", "p"], d);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let p = column(&d.join("p/moments.csv"), "momentum");
    assert_eq!(p.len(), 11);
    assert!(p.iter().all(|m| *m == p[0]));
    assert!(d.join("p/final.fpp").exists() && d.join("p/final_hist.fpa").exists());
}

#[test]
fn particle_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(
        d,
        "p.json",
        r#"{"grid": {"Nx": 16, "Nv": 48}, "particles": {"N": 500, "dt": 0.01, "seed": 7},
            "solver": {"T": 0.5, "record_every": 10, "snapshot_every": 25}}"#,
    );
    let a = Command::new(env!("CARGO_BIN_EXE_fpa"))
        .args(["particles", "--config", "p.json", "--out", "a"])
        .current_dir(d)
        .env("FPA_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.status.code(), Some(0));
    let b = fpa(&["--threads", "2", "particles", "--config", "p.json", "--out", "b"], d);
    assert_eq!(b.status.code(), Some(0));
    assert_eq!(fs::read(d.join("a/moments.csv")).unwrap(), fs::read(d.join("b/moments.csv")).unwrap());
    assert_eq!(fs::read(d.join("a/final.fpp")).unwrap(), fs::read(d.join("b/final.fpp")).unwrap());
    assert_eq!(d.join("a/ensembles").read_dir().unwrap().count(), 6);

    write(d, "dc.json", r#"{"averaging": {"variant": "double_conv"}}"#);
    let out = fpa(&["particles", "--config", "dc.json", "--out", "dc"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("averaging.variant"));
}

#[test]
fn fit_recovers_an_exact_exponential() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut csv = String::from("t,H\n");
    for k in 0..200 {
        let t = 0.1 * k as f64;
        csv.push_str(&format!("{t:e},{:e}\n", 0.8 * (-0.35 * t).exp()));
    }
    write(d, "series.csv", &csv);
    let out = fpa(&["fit", "series.csv", "--t0", "2", "--t1", "18"], d);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let fit = json(&d.join("fit.json"));
    assert!((fit["delta_fit"].as_f64().unwrap() - 0.35).abs() < 1e-10);
    assert!((fit["C_fit"].as_f64().unwrap() - 0.8).abs() < 1e-10);
    let printed: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(printed, fit);

    let empty = fpa(&["fit", "series.csv", "--t0", "50", "--t1", "60"], d);
    assert_eq!(empty.status.code(), Some(1));
    let zero = fpa(&["--threads", "0", "fit", "series.csv", "--t0", "2", "--t1", "18"], d);
    assert_eq!(zero.status.code(), Some(1));
}
