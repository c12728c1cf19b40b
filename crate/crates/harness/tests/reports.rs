use std::process::Command;

use aktorus_harness::report::checks_from_csv;
use aktorus_harness::{run_suite, ScenarioConfig, Suite};

fn small() -> ScenarioConfig {
    let mut cfg = ScenarioConfig { n: 8, forms: 1, ..Default::default() };
    cfg.structure.epsilon = 0.05;
    cfg.potentials.count = 2;
    cfg.potentials.detailed = 1;
    cfg.suites = vec![Suite::Structure, Suite::Splitting, Suite::Sigma, Suite::Inequalities];
    cfg
}

#[test]
fn same_seed_gives_identical_reports() {
    let cfg = small();
    let a = run_suite(&cfg).unwrap();
    let b = run_suite(&cfg).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.to_csv(), b.to_csv());
    assert!(a.checks.iter().all(|c| c.seconds == 0.0));
}

#[test]
fn different_seed_changes_the_potentials() {
    let cfg = small();
    let mut other = cfg.clone();
    other.seed += 1;
    let a = run_suite(&cfg).unwrap();
    let b = run_suite(&other).unwrap();
    assert_ne!(a.functionals.potentials[0].report.aubin_i, b.functionals.potentials[0].report.aubin_i);
}

#[test]
fn json_and_csv_carry_identical_checks() {
    let report = run_suite(&small()).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    let json_checks = parsed["checks"].as_array().unwrap();
    let csv_checks = checks_from_csv(&report.to_csv()).unwrap();
    assert_eq!(json_checks.len(), csv_checks.len());
    for (j, (name, residual, tolerance, pass)) in json_checks.iter().zip(&csv_checks) {
        assert_eq!(j["name"].as_str().unwrap(), name);
        assert_eq!(j["pass"].as_bool().unwrap(), *pass);
        assert_eq!(j["tolerance"].as_f64().unwrap(), *tolerance);
        match j["residual"].as_f64() {
            Some(r) => assert_eq!(r, *residual),
            None => assert!(!residual.is_finite()),
        }
    }
}

#[test]
fn empty_selection_gives_header_only() {
    let mut cfg = small();
    cfg.suites.clear();
    let report = run_suite(&cfg).unwrap();
    assert!(report.checks.is_empty());
    assert_eq!(report.to_csv().lines().count(), 1);
    let parsed: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(parsed["checks"].as_array().unwrap().len(), 0);
    assert_eq!(parsed["meta"]["m"], 2);
}

#[test]
fn every_tolerance_comes_from_the_config() {
    let mut cfg = small();
    cfg.tolerances.structure = 3.5e-13;
    cfg.tolerances.sigma = 2.5e-10;
    let report = run_suite(&cfg).unwrap();
    assert_eq!(report.check("structure.j_squared").unwrap().tolerance, 3.5e-13);
    assert_eq!(report.check("sigma.constraint").unwrap().tolerance, 2.5e-10);
}

fn aktorus() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aktorus"))
}

#[test]
fn cli_writes_report_and_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let status = aktorus()
        .args(["verify", "--quiet", "--n", "8", "--suites", "structure", "--format", "csv", "--output"])
        .arg(&out)
        .status()
        .unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    let checks = checks_from_csv(&text).unwrap();
    assert!(checks.iter().any(|c| c.0 == "structure.j_squared"));
    assert!(status.success());
}

#[test]
fn cli_reads_config_file_and_overrides_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("s.toml");
    std::fs::write(&cfg_path, "n = 8\nsuites = [\"structure\"]\n[structure]\nepsilon = 0.02\n").unwrap();
    let out = aktorus().args(["verify", "--quiet", "--config"]).arg(&cfg_path).args(["--epsilon", "0.03"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["meta"]["n"], 8);
    assert_eq!(v["meta"]["epsilon"], 0.03);
}

#[test]
fn cli_rejects_unknown_keys() {
    let out = aktorus().args(["verify", "--quiet", "--no-such-key", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));
}

#[test]
fn cli_exit_code_reflects_failures() {
    // an impossible structure tolerance must fail the run
    let out = aktorus().args(["verify", "--quiet", "--n", "8", "--suites", "structure", "--epsilon", "0.1", "--tolerances.structure", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
