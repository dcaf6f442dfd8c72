use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn nefkit(args: &[&str]) -> Output {
    nefkit_env(args, None)
}

fn nefkit_env(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nefkit"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("NEF_TOOLKIT_THREADS", t),
        None => cmd.env_remove("NEF_TOOLKIT_THREADS"),
    };
    cmd.output().expect("spawn nefkit")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn rows(o: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let header = r.headers().unwrap().iter().map(str::to_owned).collect();
    let body = r.records().map(|rec| rec.unwrap().iter().map(str::to_owned).collect()).collect();
    (header, body)
}

fn column(o: &Output, name: &str) -> Vec<f64> {
    let (header, body) = rows(o);
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    body.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn poisson_phi_is_identity() {
    let o = nefkit(&["rf-table", "--family", "poisson", "--n-max", "10"]);
    assert_eq!(code(&o), 0);
    let expected: Vec<f64> = (0..=10).map(f64::from).collect();
    assert_eq!(column(&o, "phi"), expected);
    assert_eq!(column(&o, "x"), expected);
}

#[test]
fn abel_beta_column() {
    let o = nefkit(&["rf-table", "--family", "abel", "--n-max", "10"]);
    assert_eq!(code(&o), 0);
    let beta = column(&o, "beta");
    let mut fact = 1.0;
    for (n, b) in beta.iter().enumerate() {
        if n > 0 {
            fact *= n as f64;
        }
        let want = (n as f64 + 1.0).powi(n as i32 - 1) / fact;
        assert!((b - want).abs() <= 1e-13 * want, "beta_{n} = {b}, want {want}");
    }
}

#[test]
fn binomial_table_stops_at_support() {
    let o = nefkit(&["rf-table", "--family", "binomial(3)", "--n-max", "9"]);
    assert_eq!(code(&o), 0);
    // (3x - x²)/2
    let phi = column(&o, "phi");
    assert_eq!(phi.len(), 4);
    for (got, want) in phi.iter().zip([0.0, 1.0, 1.0, 0.0]) {
        assert!((got - want).abs() < 1e-15, "{got} vs {want}");
    }
}

#[test]
fn continuous_table_json() {
    let o = nefkit(&["rf-table", "--family", "gamma(2)", "--x-grid", "0:3:4", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let phi: Vec<f64> = v.as_array().unwrap().iter().map(|r| r["phi"].as_f64().unwrap()).collect();
    assert_eq!(phi, vec![0.0, 1.0 / 3.0, 4.0 / 3.0, 3.0]);
}

#[test]
fn exit_code_contract() {
    assert_eq!(code(&nefkit(&["rf-table", "--family", "unknown"])), 2);
    assert_eq!(code(&nefkit(&["rf-table", "--family", "poisson", "--bogus"])), 2);
    assert_eq!(code(&nefkit(&["rf-table", "--family", "gamma(2)", "--n-max", "4"])), 2);
    assert_eq!(code(&nefkit(&["conjecture", "--n-max", "0"])), 2);
    assert_eq!(code(&nefkit(&["simulate", "--config", "/definitely/not/here.cfg"])), 2);
    assert_eq!(code(&nefkit(&["rf-table", "--family", "inverse-gaussian", "--formula", "printed"])), 3);
    assert_eq!(code(&nefkit(&["--help"])), 0);
    assert_eq!(code(&nefkit(&["validate", "--help"])), 0);
    assert_eq!(code(&nefkit_env(&["conjecture", "--n-max", "1"], Some("zero"))), 2);
}

#[test]
fn coeffs_two_paths_agree() {
    let o = nefkit(&["coeffs", "--family", "takacs", "--order", "30"]);
    assert_eq!(code(&o), 0);
    let rho = column(&o, "rho");
    let via_g = column(&o, "rho_generator");
    for (a, b) in rho.iter().zip(&via_g) {
        assert!((a - b).abs() <= 1e-8 * b.abs().max(1e-300), "{a} vs {b}");
    }
    // not infinitely divisible
    assert_eq!(code(&nefkit(&["coeffs", "--family", "binomial(2)"])), 1);
}

#[test]
fn validate_strict_arcsine_passes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = nefkit(&["validate", "--family", "strict-arcsine", "-o", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["passed"], Value::Bool(true));
    assert!(v["families"][0]["master"]["max_rel_err"].as_f64().unwrap() < 1e-6);
}

#[test]
fn forced_failure_reports_diagnostics() {
    let o = nefkit(&["validate", "--family", "poisson", "--tol", "1e-30"]);
    assert_eq!(code(&o), 1);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], Value::Bool(false));
    assert_eq!(v["tolerance_override"].as_f64(), Some(1e-30));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL poisson"));
}

#[test]
fn conjecture_small_n_has_no_violations() {
    let o = nefkit(&["conjecture", "--n-max", "3"]);
    assert_eq!(code(&o), 0);
    let (header, body) = rows(&o);
    assert_eq!(body.len(), 3 * 15);
    let verdict = header.iter().position(|h| h == "verdict").unwrap();
    assert!(body.iter().all(|r| r[verdict] == "ok"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0 violations"));
}

#[test]
fn conjecture_custom_grid_and_threads_are_deterministic() {
    let args = ["conjecture", "--n-max", "4", "--grid", "-2:0.5,0:1,0.3:3"];
    let one = nefkit_env(&args, Some("1"));
    let three = nefkit_env(&args, Some("3"));
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, three.stdout);
    assert_eq!(rows(&one).1.len(), 12);
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

#[test]
fn simulate_from_config_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.cfg");
    write(&cfg, "# small ladder\nfamily = poisson\nks = 60, 600\nn = 6\nr = 2\nseeds = 1-3\n");
    let run = |threads: &str, tag: &str| {
        let out = dir.path().join(format!("{tag}.csv"));
        let summary = dir.path().join(format!("{tag}.json"));
        let o = nefkit_env(
            &["simulate", "--config", cfg.to_str().unwrap(), "-o", out.to_str().unwrap(), "--summary", summary.to_str().unwrap()],
            Some(threads),
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        (fs::read_to_string(out).unwrap(), fs::read_to_string(summary).unwrap())
    };
    let (csv1, sum1) = run("1", "a");
    let (csv2, sum2) = run("2", "b");
    assert_eq!(csv1, csv2);
    assert_eq!(sum1, sum2);
    let lines: Vec<&str> = csv1.lines().collect();
    assert_eq!(lines[0], "replicate,k,distance,distance_unadjusted,max_sigma_error");
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(lines[1].starts_with("1,60,"));
    let s: Value = serde_json::from_str(&sum1).unwrap();
    assert_eq!(s["ladder"].as_array().unwrap().len(), 2);
    assert!(s.get("note").is_none());
}

#[test]
fn simulate_flags_override_config_and_normal_gets_note() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.cfg");
    write(&cfg, "family = poisson\nks = 40\nn = 5\nr = 1\nseeds = 1,2\n");
    let o = nefkit(&["simulate", "--config", cfg.to_str().unwrap(), "--family", "normal"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(s["family"], "normal");
    assert!(s["note"].as_str().unwrap().contains("identity"));
    // identical subspaces with and without the adjustment
    let (h, body) = rows(&o);
    let (d, u) = (h.iter().position(|c| c == "distance").unwrap(), h.iter().position(|c| c == "distance_unadjusted").unwrap());
    for r in &body {
        let (a, b): (f64, f64) = (r[d].parse().unwrap(), r[u].parse().unwrap());
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn simulate_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    write(&cfg, "colour = blue\n");
    assert_eq!(code(&nefkit(&["simulate", "--config", cfg.to_str().unwrap()])), 2);
    write(&cfg, "n = 3\nr = 5\n");
    assert_eq!(code(&nefkit(&["simulate", "--config", cfg.to_str().unwrap()])), 2);
}
