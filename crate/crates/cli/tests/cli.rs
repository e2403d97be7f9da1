use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn mmop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn report(dir: &Path) -> Value {
    let text = std::fs::read_to_string(dir.join("report.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

const LEGENDRE: &str = r#"{
    "q": 1, "p": 1, "interval": [-1, 1],
    "weights": [{"kind": "named_classical", "name": "lebesgue"}],
    "perturbation": {"side": "right", "coefficients": COEFFS},
    "n_max": 12
}"#;

fn f2_identity() -> String {
    let mut c = mmop_fixture_config();
    c["perturbation"]["coefficients"] = serde_json::json!([[1, 0, 0, 0, 1, 0, 0, 0, 1]]);
    c.to_string()
}

fn mmop_fixture_config() -> Value {
    serde_json::json!({
        "q": 1, "p": 3, "interval": [-1, 1],
        "weights": [
            {"kind": "polynomial_density", "coeffs": [1], "support": [-1, -0.3333333333333333]},
            {"kind": "polynomial_density", "coeffs": [1], "support": [-0.3333333333333333, 0.3333333333333333]},
            {"kind": "polynomial_density", "coeffs": [1], "support": [0.3333333333333333, 1]}
        ],
        "perturbation": {"coefficients": [[1, 0, 0, 0, 1, 0, 1, 2, 1], [0, 1, 0, 0, 0, 1, 0, 0, 0]]},
        "n_max": 15
    })
}

#[test]
fn demo_f2_reports_double_root() {
    let out = TempDir::new().unwrap();
    let o = mmop(&["demo", "--fixture", "f2", "--b", "2", "--out", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(out.path());
    assert_eq!(r["pass"], true);
    let roots = r["roots"].as_array().unwrap();
    assert_eq!(roots.len(), 1);
    assert!((roots[0]["re"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert_eq!(roots[0]["multiplicity"], 2);
    assert_eq!(roots[0]["partial_multiplicities"], serde_json::json!([2]));
    // leading chain vector parallel to (-1, -1, 1)
    let v0 = &r["chains"][0]["chains"][0][0];
    let re = |i: usize| v0[i][0].as_f64().unwrap();
    assert!((re(0) - re(1)).abs() < 1e-10 && (re(0) + re(2)).abs() < 1e-10);
    for f in ["report.txt", "omega.csv", "a_hat.csv", "b_hat.csv"] {
        assert!(out.path().join(f).exists(), "{f}");
    }
}

#[test]
fn identity_perturbation_is_trivial() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "id.json", &f2_identity());
    let out = dir.path().join("out");
    let o = mmop(&["perturb", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["m_total"], 0);
    for col in r["omega"].as_array().unwrap() {
        assert!(col.as_array().unwrap().is_empty());
    }
    for c in r["checks"].as_array().unwrap() {
        assert_eq!(c["value"].as_f64(), Some(0.0), "{c}");
    }
    assert!(r["tau"].as_array().unwrap().iter().all(|t| t["value"].as_f64() == Some(1.0)));
}

#[test]
fn vanishing_tau_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let root = -1.0 / 3f64.sqrt();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        &LEGENDRE.replace("COEFFS", &format!("[[{root:e}], [1]]")),
    );
    let out = dir.path().join("out");
    let o = mmop(&["perturb", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["existence_failure"], 2);
    assert_eq!(r["oracle"]["status"], "pivot_failure");
    assert_eq!(r["oracle"]["failed_pivot"], 2);
    assert_eq!(r["pass"], false);
}

#[test]
fn reports_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "f2.json", &mmop_fixture_config().to_string());
    let runs: Vec<String> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("run{i}"));
            let o = mmop(&["verify", "--config", &cfg, "--out", out.to_str().unwrap()]);
            assert_eq!(o.status.code(), Some(0));
            std::fs::read_to_string(out.join("report.json")).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert!(runs[0].contains("e0") || runs[0].contains("e-"));
}

#[test]
fn invalid_config_exits_with_one_and_pointer() {
    let dir = TempDir::new().unwrap();
    let mut c = mmop_fixture_config();
    c["weights"][1]["support"] = serde_json::json!([0.5, 0.2]);
    let cfg = write_config(dir.path(), "bad.json", &c.to_string());
    let o = mmop(&["perturb", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/weights/1"));

    let cfg = write_config(dir.path(), "typo.json", r#"{"q": "one"}"#);
    let o = mmop(&["moments", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/q"));

    let o = mmop(&["perturb"]);
    assert_eq!(o.status.code(), Some(1));
    let o = mmop(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn moments_and_ortho_write_tables() {
    let out = TempDir::new().unwrap();
    let dir = out.path().to_str().unwrap();
    let o = mmop(&["moments", "--fixture", "f1", "--nmax", "6", "--out", dir]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.path().join("moments.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.starts_with("2.0000000000000000e0,0.0000000000000000e0,"), "{csv}");

    let o = mmop(&["ortho", "--fixture", "f2", "--out", dir, "--extended-precision"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out.path().join("ortho.json")).unwrap()).unwrap();
    assert_eq!(r["pass"], true);
    assert!(out.path().join("S.csv").exists());
}

#[test]
fn left_fixture_verifies() {
    let o = mmop(&["verify", "--fixture", "f3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("Left perturbation"));
}
