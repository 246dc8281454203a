use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn alp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alp"))
        .args(args)
        .env_remove("ALP_PRECISION")
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).to_string_lossy().into_owned()
}

fn golden(name: &str) -> Vec<u8> {
    std::fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Writes a modified copy of a fixture and returns its path.
fn variant(dir: &tempfile::TempDir, base: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(fixture(base)).unwrap()).unwrap();
    edit(&mut v);
    let path = dir.path().join("scenario.json");
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

#[test]
fn goldens_are_byte_identical() {
    let ltp = fixture("ltp.json");
    let htp = fixture("htp.json");
    let cases: [(&[&str], &str, i32); 7] = [
        (&["solve", &ltp], "solve_ltp.json", 0),
        (&["solve", &htp], "solve_htp.json", 0),
        (&["solve", &fixture("escape.json")], "solve_escape.json", 2),
        (&["sweep", &ltp], "sweep_ltp.csv", 0),
        (&["sensitivity", &ltp], "sensitivity_ltp.json", 0),
        (&["enforcement", &ltp], "enforcement_ltp.json", 0),
        (&["sweep", &htp, "--param", "gamma_dot", "--from", "0.1", "--to", "1", "--steps", "10"], "sweep_htp_gamma_dot.csv", 0),
    ];
    for (args, name, code) in cases {
        let first = alp(args);
        assert_eq!(first.status.code(), Some(code), "{name}: {}", stderr(&first));
        assert_eq!(first.stdout, golden(name), "{name}");
        assert_eq!(alp(args).stdout, first.stdout, "{name} is not reproducible");
    }
}

#[test]
fn solve_reports_fixture_optimum() {
    let v = json(&alp(&["solve", &fixture("ltp.json")]));
    assert!((v["p_star"].as_f64().unwrap() - 92.24).abs() <= 1e-2);
    assert_eq!(v["regime"], "interior");
    assert!((v["lambda_min"].as_f64().unwrap() - 0.1001).abs() < 1e-4);
}

#[test]
fn equal_taxes_fail_validation_naming_rates() {
    let dir = tempfile::tempdir().unwrap();
    let path = variant(&dir, "ltp.json", |v| v["tau2"] = Value::from(0.35));
    let out = alp(&["solve", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let msg = stderr(&out);
    assert!(msg.contains("tau1") && msg.contains("tau2"), "{msg}");
}

#[test]
fn sub_threshold_escapes_with_slope() {
    let out = alp(&["solve", &fixture("escape.json")]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["regime"], "escaped");
    assert!(v["p_star"].is_null());
    assert!(v["crisp_slope"].as_f64().unwrap() < 0.0);
}

#[test]
fn validation_errors_carry_field_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = variant(&dir, "ltp.json", |v| v["division1"]["sales"] = Value::from(-3.0));
    let out = alp(&["solve", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let msg = stderr(&out);
    assert!(msg.contains("division1.sales") && msg.contains("line"), "{msg}");

    let path = variant(&dir, "ltp.json", |v| v["quantity"] = Value::from(25.0));
    let out = alp(&["solve", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("division2.sales"));
}

#[test]
fn bad_flags_exit_with_validation_code() {
    assert_eq!(alp(&["solve"]).status.code(), Some(1));
    assert_eq!(alp(&["--precision", "lots", "solve", &fixture("ltp.json")]).status.code(), Some(1));
    assert_eq!(alp(&["--help"]).status.code(), Some(0));
}

#[test]
fn precision_flag_and_env() {
    let full = json(&alp(&["--precision", "full", "solve", &fixture("ltp.json")]));
    assert!((full["p_star"].as_f64().unwrap() - 92.23689628374657).abs() <= 1e-12);
    let out = Command::new(env!("CARGO_BIN_EXE_alp"))
        .args(["solve", &fixture("ltp.json")])
        .env("ALP_PRECISION", "2")
        .output()
        .unwrap();
    assert_eq!(json(&out)["p_star"].as_f64().unwrap(), 92.24);
}

fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn lambda_sweep_flips_once_at_threshold() {
    let out = alp(&["sweep", &fixture("ltp.json"), "--param", "lambda", "--from", "0.05", "--to", "2.0", "--steps", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 100);
    let flips: Vec<usize> = (1..rows.len()).filter(|&k| rows[k][5] != rows[k - 1][5]).collect();
    assert_eq!(flips.len(), 1);
    let k = flips[0];
    let before: f64 = rows[k - 1][0].parse().unwrap();
    let after: f64 = rows[k][0].parse().unwrap();
    assert!(before < 0.1001 && 0.1001 < after);
    assert_eq!(rows[k - 1][5], "escaped");
    assert_eq!(rows[k - 1][1], "");
}

#[test]
fn tau_sweep_is_monotone() {
    let out = alp(&["sweep", &fixture("ltp.json"), "--param", "tau1", "--from", "0.21", "--to", "0.6", "--steps", "40"]);
    let prices: Vec<f64> = csv_rows(&out).iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(prices.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn single_step_sweep_matches_solve() {
    let out = alp(&["sweep", &fixture("ltp.json"), "--param", "lambda", "--from", "1", "--to", "1", "--steps", "1"]);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 1);
    let v = json(&alp(&["solve", &fixture("ltp.json")]));
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), v["p_star"].as_f64().unwrap());
    assert_eq!(rows[0][5], "interior");
}

#[test]
fn sweep_rejects_unknown_parameter_and_writes_files() {
    let out = alp(&["sweep", &fixture("ltp.json"), "--param", "rho"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("tau1, tau2, z, lambda, gamma, m, gamma_dot"));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = alp(&["sweep", &fixture("ltp.json"), "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read(path).unwrap(), golden("sweep_ltp.csv"));
}

#[test]
fn sensitivity_cross_checks() {
    let v = json(&alp(&["sensitivity", &fixture("ltp.json")]));
    assert_eq!(v["cross_check"], "pass");
    for row in v["derivatives"].as_array().unwrap() {
        assert!(row["rel_error"].as_f64().unwrap() <= 1e-5, "{row}");
    }

    let dir = tempfile::tempdir().unwrap();
    let path = variant(&dir, "ltp.json", |v| v["tau2"] = Value::from(0.0));
    let v = json(&alp(&["sensitivity", path.to_str().unwrap()]));
    assert_eq!(v["derivatives"][0]["name"], "dp_dtau");
    assert_eq!(v["derivatives"][0]["analytic"].as_f64().unwrap(), 0.0);

    let path = variant(&dir, "ltp.json", |v| v["tau2"] = Value::from(0.35));
    let out = alp(&["sensitivity", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("singular locus"));
}

#[test]
fn enforcement_verdicts() {
    let v = json(&alp(&["enforcement", &fixture("ltp.json")]));
    assert_eq!(v["sufficient"]["satisfied"], true);
    assert_eq!(v["sufficient"]["escapes"], 0);

    let dir = tempfile::tempdir().unwrap();
    let path = variant(&dir, "ltp.json", |v| {
        v["enforcement_profile"]["f"] = serde_json::json!({"name": "power", "params": [3]})
    });
    let v = json(&alp(&["enforcement", path.to_str().unwrap()]));
    assert_eq!(v["necessary"]["satisfied"], false);
    let run = &v["necessary"]["violations"][0];
    assert!((run[1].as_f64().unwrap() - 0.7548).abs() < 2e-3, "{run}");

    let v = json(&alp(&["enforcement", &fixture("ltp.json"), "--grid-steps", "2"]));
    assert_eq!(v["boundaries"]["p_star_full_enforcement"].as_f64().unwrap(), 97.142857);
    assert!((v["boundaries"]["p_star_min_enforcement"].as_f64().unwrap() - 80.0).abs() <= 0.02);

    let csv = dir.path().join("scan.csv");
    let out = alp(&["enforcement", &fixture("ltp.json"), "--grid-steps", "5", "--csv", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("gamma_dot,p_star,delta_p,alpha,regime,dp_ddotgamma\n"));
    assert_eq!(text.lines().count(), 6);
}
