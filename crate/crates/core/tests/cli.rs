use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use eventrd::harness::{load_model, parse_model};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn eventrd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eventrd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scalar_model() -> String {
    configs().join("scalar.cfg").display().to_string()
}

fn phugoid_model() -> String {
    configs().join("phugoid.cfg").display().to_string()
}

type Record = std::collections::HashMap<String, String>;

fn read_csv(text: &str) -> Vec<Record> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| row.unwrap()).collect()
}

fn field(r: &Record, key: &str) -> Option<f64> {
    let v = &r[key];
    (!v.is_empty()).then(|| v.parse().unwrap())
}

#[test]
fn ic_prints_the_scalar_closed_form() {
    let out = eventrd(&["ic", "--model", &scalar_model(), "--dc", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v: f64 = stdout(&out).trim().parse().unwrap();
    // (b²/D − 2|a|)/(2 ln 2) for a = −0.1, b = 1
    let closed = (1.0 - 0.2) / (2.0 * std::f64::consts::LN_2);
    assert!((v - closed).abs() < 1e-6, "{v}");
}

#[test]
fn exit_codes() {
    assert_eq!(eventrd(&["--help"]).status.code(), Some(0));
    assert_eq!(eventrd(&["ic", "--bogus"]).status.code(), Some(2));
    let missing = eventrd(&["ic", "--model", "/nonexistent.cfg", "--dc", "1"]);
    assert_eq!(missing.status.code(), Some(2));
    let neg = eventrd(&["ic", "--model", &scalar_model(), "--dc", "-1"]);
    assert_eq!(neg.status.code(), Some(2));
    // Dc below the critical distortion of τ = 1
    let infeasible = eventrd(&["bound-dt", "--model", &scalar_model(), "--tau", "1", "--dc", "0.1"]);
    assert_eq!(infeasible.status.code(), Some(3));
    assert!(!infeasible.stderr.is_empty());
}

#[test]
fn ab_sweep_is_complete_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ab.csv");
    let cfg = configs().join("ab_sweep.cfg").display().to_string();
    let run = |path: &PathBuf| {
        let o = eventrd(&["sweep", "--config", &cfg, "--out", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read_to_string(path).unwrap()
    };
    let first = run(&out);
    let again = run(&dir.path().join("ab2.csv"));
    assert_eq!(first, again);
    let rows = read_csv(&first);
    assert_eq!(rows.len(), 15);
    for r in &rows {
        assert_eq!(r["scheme"], "ab");
        let rate = field(r, "rate_emp").unwrap();
        let ct = field(r, "rate_lb_ct").unwrap();
        assert!(rate >= ct, "{r:?}");
        if let Some(dt) = field(r, "rate_lb_dt") {
            // no standard error in the file; the scheme sits far above at these τ
            assert!(rate >= dt, "{r:?}");
        }
    }
}

#[test]
fn bounds_only_rows_leave_empirical_fields_empty() {
    let o = eventrd(&[
        "sweep", "--model", &phugoid_model(), "--scheme", "bounds-only", "--tau", "0.5,1,2", "--dc", "0.03,0.5,2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows = read_csv(&stdout(&o));
    assert_eq!(rows.len(), 9);
    let mut infeasible = 0;
    for r in &rows {
        assert!(r["rate_emp"].is_empty() && r["mse_emp"].is_empty());
        assert!(field(r, "rate_lb_ct").is_some());
        if r["flags"].contains("dt_infeasible") {
            infeasible += 1;
            assert!(r["rate_lb_dt"].is_empty());
            assert!(field(r, "dc").unwrap() <= field(r, "critical_dc").unwrap());
        } else {
            assert!(field(r, "rate_lb_dt").unwrap() >= field(r, "rate_lb_ct").unwrap() - 1e-9);
        }
    }
    // Dc = 0.03 lies below the critical value at τ = 1 and τ = 2
    assert_eq!(infeasible, 2);
}

#[test]
fn diq_sweep_dominates_the_bounds() {
    let o = eventrd(&[
        "sweep", "--model", &phugoid_model(), "--scheme", "diq", "--tau", "1", "--dc", "0.03,0.5", "--steps", "4000",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&stdout(&o));
    assert_eq!(rows.len(), 2);
    let below = &rows[0];
    assert!(below["flags"].contains("dt_infeasible"));
    assert!(below["rate_emp"].is_empty() && below["rate_lb_dt"].is_empty());
    let run = &rows[1];
    assert!(field(run, "rate_emp").unwrap() >= field(run, "rate_lb_dt").unwrap());
}

#[test]
fn sim_diq_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.txt");
    let o = eventrd(&[
        "sim-diq", "--model", &phugoid_model(), "--tau", "1", "--dc", "0.5", "--horizon", "200", "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with('#'));
    assert_eq!(lines.count(), 200);
}

#[test]
fn model_files() {
    let m = load_model(&configs().join("phugoid.cfg")).unwrap();
    assert_eq!(m.dim(), 2);
    let err = parse_model("dim = 2\nA = [0.1, 0.0, 0.0, -1.0]\nB = [1.0, 0.0, 0.0, 1.0]\nSigma0 = [1.0, 0.0, 0.0, 1.0]")
        .unwrap_err();
    assert!(err.to_string().contains("A:"), "{err}");
}
