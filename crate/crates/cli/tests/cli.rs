//! End-to-end checks of the command-line contract: exit codes, artifact
//! layout, and reproducibility of report scalars.

use std::path::Path;
use std::process::Command;

fn malab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_malab"))
}

fn run(args: &[&str]) -> (i32, String) {
    let out = malab().args(args).output().expect("spawn malab");
    let stderr = String::from_utf8_lossy(&out.stderr).to_string();
    (out.status.code().unwrap_or(-1), stderr)
}

#[test]
fn unknown_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let (code, msg) = run(&[
        "radial",
        "--config",
        "no-such-preset",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "{msg}");
}

#[test]
fn verify_assumptions_passes_on_preset() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let (code, msg) = run(&[
        "verify-assumptions",
        "--config",
        "thm1-n3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{msg}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("assumption_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["pass"], serde_json::Value::Bool(true));
    assert!(out.join("resolved_config.toml").exists());
}

#[test]
fn flat_radial_deviations_are_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let (code, msg) = run(&["radial", "--config", "flat", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{msg}");
    let csv = std::fs::read_to_string(out.join("radial_n3.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let dev: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(dev.abs() < 1e-12, "line {line}");
    }
}

#[test]
fn separable_cell_matches_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let (code, msg) = run(&[
        "cell",
        "--config",
        "separable-cell",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{msg}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("cell_report.json")).unwrap())
            .unwrap();
    assert!(report["residual"].as_f64().unwrap() <= 1e-8);
    assert!(report["mean"].as_f64().unwrap().abs() <= 1e-12);
    assert!(report["oracle_delta"].as_f64().unwrap() < 1e-6);
    assert!(out.join("xi.raw").exists() && out.join("xi.json").exists());
}

#[test]
fn incompatible_average_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        r#"
[density]
dim = 2
periods = [1.0, 1.0]
coeffs = [{ k = [0, 0], cos = 1.0 }, { k = [1, 0], cos = 0.05 }]
beta = 3.0
d0 = 2.0
d1 = 2.0

[cell]
nodes_per_axis = 32
normalize = false
"#,
    )
    .unwrap();
    let out = dir.path().join("o");
    let (code, msg) = run(&[
        "cell",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 3, "{msg}");
}

#[test]
fn stagnating_solve_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        r#"
[manufactured]
amplitude = 0.01
nodes = [33]
half_width = 0.5

[solver]
max_newton = 0
"#,
    )
    .unwrap();
    let out = dir.path().join("o");
    let (code, msg) = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 4, "{msg}");
}

#[test]
fn degenerate_fit_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let out_solve = dir.path().join("s");
    let (code, msg) = run(&[
        "solve",
        "--config",
        "flat",
        "--out",
        out_solve.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{msg}");
    // more basis functions than samples on the fitting annulus
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        r#"
[density]
dim = 2
periods = [1.0, 1.0]
coeffs = [{ k = [0, 0], cos = 1.0 }]
beta = 3.0
d0 = 2.0
d1 = 2.0

[analysis]
fourier_order = 16
"#,
    )
    .unwrap();
    let out = dir.path().join("a");
    let field = out_solve.join("u_L8.raw");
    let (code, msg) = run(&[
        "analyze",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        field.to_str().unwrap(),
    ]);
    assert_eq!(code, 5, "{msg}");
}

#[test]
fn experiment_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let (code, msg) = run(&[
            "experiment",
            "--config",
            "flat",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{msg}");
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("run_report.json")).unwrap())
                .unwrap();
        assert_eq!(report["pass"], serde_json::Value::Bool(true));
        reports.push(report);
    }
    assert_eq!(reports[0]["config_hash"], reports[1]["config_hash"]);
    assert_eq!(
        reports[0]["scalars"], reports[1]["scalars"],
        "report scalars must reproduce bit-exactly"
    );
    // stage marker ends at done
    assert_eq!(
        std::fs::read_to_string(dir.path().join("a").join("stage.txt")).unwrap(),
        "done"
    );
}

#[test]
fn solve_then_analyze_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out_solve = dir.path().join("s");
    let (code, msg) = run(&[
        "solve",
        "--config",
        "flat",
        "--out",
        out_solve.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{msg}");
    assert!(Path::new(&out_solve.join("u_L8.raw")).exists());
    let out = dir.path().join("a");
    let (code, msg) = run(&[
        "analyze",
        "--config",
        "flat",
        "--out",
        out.to_str().unwrap(),
        out_solve.join("u_L8").to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{msg}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("analyze_report.json")).unwrap())
            .unwrap();
    let field = &report["fields"][0];
    // exact parabola input: A = I, residuals at solver-noise level
    let a = &field["fit"]["a"];
    assert!((a["e"][0].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(field["inner_residual"].as_f64().unwrap() < 1e-6);
    assert!(out.join("u_L8_annuli.csv").exists());
    assert!(out.join("u_L8_quotients.csv").exists());
    assert!(out.join("u_L8_levelsets.csv").exists());
}
