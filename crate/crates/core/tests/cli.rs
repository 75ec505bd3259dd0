use std::process::{Command, Output};

fn cslwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cslwalk"))
        .args(args)
        .env_clear()
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value(csv: &str, quantity: &str) -> f64 {
    csv.lines()
        .find_map(|l| l.strip_prefix(&format!("{quantity},")))
        .and_then(|rest| rest.split(',').next())
        .unwrap_or_else(|| panic!("{quantity} missing in\n{csv}"))
        .parse()
        .unwrap()
}

#[test]
fn variances_prints_design_spreads() {
    let o = cslwalk(&[
        "variances",
        "--lambda-alpha",
        "1",
        "--mass-amu",
        "1e9",
        "--sigma-nm",
        "10",
        "--time-s",
        "0.25",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(format!("{:.3e}", value(&out, "sigma2_x")), "6.082e-17");
    assert_eq!(format!("{:.3e}", value(&out, "sigma2_rel")), "5.032e-17");
    let summary = String::from_utf8(o.stderr).unwrap();
    assert!(summary.contains("sigma_X^2 = 6.0818e-17"), "{summary}");
}

#[test]
fn scan_emits_one_row_per_grid_point() {
    let o = cslwalk(&["scan", "--grid", "1e-2:1e2:25log", "--format", "csv"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "lambda_alpha,n_min,t_i_max_K,p_max_torr");
    assert_eq!(lines.len(), 26);
    assert!(lines[1].starts_with("1e-2,200400201,"));
    assert!(lines[13].starts_with("1e0,24201,7.3e1,"));
}

#[test]
fn exit_codes_follow_error_categories() {
    let o = cslwalk(&["simulate", "--n", "0"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8(o.stderr)
        .unwrap()
        .contains("insufficient-data"));

    assert_eq!(cslwalk(&["nonsense"]).status.code(), Some(2));
    assert_eq!(cslwalk(&["scan", "--grid", "1:2"]).status.code(), Some(2));
    assert_eq!(
        cslwalk(&["variances", "--sigma-nm=-1"]).status.code(),
        Some(3)
    );
    assert_eq!(
        cslwalk(&["variances", "--lambda", "1", "--lambda-alpha", "1"])
            .status
            .code(),
        Some(2)
    );
    // Localization length below the trap separation.
    assert_eq!(
        cslwalk(&["variances", "--alpha", "1e10"]).status.code(),
        Some(3)
    );

    let o = cslwalk(&[
        "residual-check",
        "--fd-step-m",
        "5e-9",
        "--mass-amu",
        "1e9",
        "--lambda",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(4));

    let o = cslwalk(&["simulate", "--n", "0", "--format", "json"]);
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["category"], "insufficient-data");
}

#[test]
fn json_output_follows_schema() {
    let o = cslwalk(&["feasibility", "--format", "json"]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["command"], "feasibility");
    assert_eq!(doc["params"]["lambda_alpha"], 1.0);
    assert!(doc["results"]
        .as_array()
        .unwrap()
        .iter()
        .any(|r| r["quantity"] == "n_min" && r["value"] == 24201.0));
    assert!(doc["provenance"]["formula_refs"]["t_i_max"]
        .as_str()
        .unwrap()
        .contains("73"));
}

#[test]
fn explain_lists_formulas() {
    let o = cslwalk(&["scan", "--grid", "1:10:2", "--explain"]);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(
        err.contains("n_min: n > 2 (100/(lambda alpha) + 10)^2 + 1"),
        "{err}"
    );
}

#[test]
fn param_file_and_environment_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.params");
    std::fs::write(&path, "# heavier\nmass = 2e9 amu\nsigma = 20 nm\n").unwrap();
    let p = path.to_str().unwrap();

    let base = stdout(&cslwalk(&["variances", "--params", p]));
    let flag = stdout(&cslwalk(&[
        "variances",
        "--params",
        p,
        "--sigma-nm",
        "10",
        "--mass-amu",
        "1e9",
    ]));
    let def = stdout(&cslwalk(&["variances"]));
    assert_ne!(base, def);
    assert_eq!(flag, def);

    let env = Command::new(env!("CARGO_BIN_EXE_cslwalk"))
        .arg("variances")
        .env_clear()
        .env("CSLWALK_SIGMA_NM", "20")
        .env("CSLWALK_MASS_AMU", "2e9")
        .output()
        .unwrap();
    assert_eq!(stdout(&env), base);

    std::fs::write(&path, "sigma = 20 furlong\n").unwrap();
    assert_eq!(
        cslwalk(&["variances", "--params", p]).status.code(),
        Some(2)
    );
    std::fs::write(&path, "colour = 3\n").unwrap();
    assert_eq!(
        cslwalk(&["variances", "--params", p]).status.code(),
        Some(2)
    );
}

#[test]
fn outputs_are_written_atomically_and_idempotently() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trials.csv");
    let o = out.to_str().unwrap();
    for _ in 0..2 {
        assert!(cslwalk(&["simulate", "--n", "1000", "--output", o])
            .status
            .success());
    }
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("trial,component,x1_m,x2_m,X_m,xi_m\n"));
    assert_eq!(text.lines().count(), 1001);
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), 1, "temporary files left behind");

    let other = stdout(&cslwalk(&["simulate", "--n", "1000", "--seed", "7"]));
    assert_ne!(other, text);
}

#[test]
fn region_reports_grw_outside() {
    let o = cslwalk(&[
        "region",
        "--lambda",
        "1e-16",
        "--alpha",
        "1e14",
        "--per-axis",
        "5",
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("is outside"));
    assert_eq!(stdout(&o).lines().count(), 26);

    let dir = tempfile::tempdir().unwrap();
    let poly = dir.path().join("excl.csv");
    std::fs::write(
        &poly,
        "log10_lambda,log10_alpha\n-30,-30\n30,-30\n30,30\n-30,30\n",
    )
    .unwrap();
    let o = cslwalk(&[
        "region",
        "--per-axis",
        "5",
        "--exclusion",
        poly.to_str().unwrap(),
    ]);
    assert!(!stdout(&o).contains("true"));
}

#[test]
fn checks_run_from_the_command_line() {
    let o = cslwalk(&["residual-check"]);
    assert!(o.status.success());
    assert!(String::from_utf8(o.stderr).unwrap().contains("order 2.0"));

    let o = cslwalk(&[
        "propagate-check",
        "--mu-nm",
        "100",
        "--points-per-peak",
        "2",
        "--order",
        "16",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 5);

    let o = cslwalk(&["power", "--n", "100", "--repetitions", "20"]);
    assert!(o.status.success());
    assert!(value(&stdout(&o), "power") < 0.5);
}
