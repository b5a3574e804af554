use std::fs;

use capdeep_cli::{run, EXIT_INPUT, EXIT_OK, EXIT_RUNTIME};

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["capdeep"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn simulate_writes_trajectory_from_horizon_start() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let (code, _, _) = call(&[
        "simulate",
        "--scenario",
        "baseline",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("t,P,U,O,K,MFP,price_level,income_pc,consumption_index")
    );
    assert!(lines.next().unwrap().starts_with("2023.5,"));
    assert!(text.lines().last().unwrap().starts_with("2050.5,"));
    assert!(text.ends_with('\n') && !text.contains('\r'));
}

#[test]
fn unknown_flag_is_input_error_with_usage() {
    let (code, out, err) = call(&["simulate", "--frobnicate"]);
    assert_eq!(code, EXIT_INPUT);
    assert!(out.is_empty());
    assert!(err.contains("Usage"));
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("threshold"));
}

#[test]
fn bad_inputs_exit_one() {
    for args in [
        vec!["simulate", "--scenario", "nope"],
        vec!["simulate", "--dt", "0.7"],
        vec!["threshold", "--window", "2025-2045"],
        vec!["threshold", "--window", "2010:2045"],
        vec!["sensitivity", "--draws", "3"],
        vec!["sweep", "--alpha-steps", "1"],
        vec!["calibrate", "--target", "b:bogus:10"],
        vec![
            "calibrate",
            "--target",
            "b:income_pc:10",
            "--beta-min",
            "0.1",
            "--beta-max",
            "0.01",
        ],
        vec!["--config", "/nonexistent/model.cfg", "simulate"],
    ] {
        let (code, _, err) = call(&args);
        assert_eq!(code, EXIT_INPUT, "{args:?}: {err}");
        assert!(!err.is_empty());
    }
}

#[test]
fn config_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("m.cfg");
    fs::write(&cfg, "[converter:eta]\n1 1\n0.5 0.2\n").unwrap();
    let (code, _, err) = call(&["--config", cfg.to_str().unwrap(), "simulate"]);
    assert_eq!(code, EXIT_INPUT);
    assert!(
        err.contains("line 3") && err.contains("converter:eta"),
        "{err}"
    );
}

#[test]
fn domain_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("m.cfg");
    // onset growth this fast pushes U past the labour force
    fs::write(&cfg, "[parameters]\nbeta = 0.5\n").unwrap();
    let (code, _, err) = call(&[
        "--config",
        cfg.to_str().unwrap(),
        "simulate",
        "--scenario",
        "c",
    ]);
    assert_eq!(code, EXIT_RUNTIME, "{err}");
    assert!(err.contains("domain error at t="));
}

#[test]
fn threshold_emits_json() {
    let (code, out, err) = call(&["threshold", "--alpha", "0.11", "--window", "2025:2045"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("{\"alpha\":0.11,\"window\":[2025.0,2045.0],\"fold\":"));
    assert!(out.contains("\"found\":") && out.contains("\"criterion\":\"all_times\""));
    assert!(err.contains("published 10.8"));
}

#[test]
fn calibrate_output_round_trips_as_config() {
    let dir = tempfile::tempdir().unwrap();
    let fitted = dir.path().join("fitted.cfg");
    let (code, _, err) = call(&["calibrate", "--out", fitted.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    let text = fs::read_to_string(&fitted).unwrap();
    let parsed = capdeep_core::parse_config(&text).unwrap();
    assert!(parsed.model.params.beta > 0.0015);
    assert_eq!(capdeep_core::render_config(&parsed), text);
}

#[test]
fn scenarios_and_sweep_run() {
    let (code, out, _) = call(&["scenarios", "--scenario", "a,b"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 1 + 2 * 3);
    let (code, out, _) = call(&[
        "sweep",
        "--alpha-steps",
        "3",
        "--fold-steps",
        "2",
        "--dt",
        "0.25",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(
        out.lines().next(),
        Some("alpha,fold,pct_change_consumption")
    );
    assert_eq!(out.lines().count(), 7);
}

#[test]
fn sensitivity_writes_all_files() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = call(&[
        "sensitivity",
        "--draws",
        "8",
        "--seed",
        "3",
        "--dt",
        "0.25",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    for f in [
        "summary.csv",
        "bands.csv",
        "bands_baseline.csv",
        "anchors.csv",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(
        summary.lines().next(),
        Some("scenario,metric,mean_reduction,mean_pct,median_pct,lo95,hi95")
    );
}
