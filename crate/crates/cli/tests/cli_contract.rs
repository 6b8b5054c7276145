//! Black-box contract tests: run the `krigelab` binary as a subprocess and
//! hold it to the documented output schema, exit codes, and determinism
//! guarantees. Nothing here reaches into the library; if it isn't visible
//! to a shell user it isn't checked here.

use std::path::{Path, PathBuf};
use std::process::Command;

fn krigelab() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_krigelab"));
    // Isolate from the ambient environment; one test sets it explicitly.
    cmd.env_remove("KRIGE_PRECISION");
    cmd
}

fn run(args: &[&str]) -> (i32, String, String) {
    let output = krigelab().args(args).output().expect("binary runs");
    (
        output.status.code().expect("exit code"),
        String::from_utf8(output.stdout).expect("utf-8 stdout"),
        String::from_utf8(output.stderr).expect("utf-8 stderr"),
    )
}

/// A scratch path unique to this test process.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("krigelab-contract-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("scratch dir");
    dir.join(name)
}

fn catalog_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/catalog.json")
}

/// Non-comment lines after the header row.
fn body_rows(csv: &str) -> Vec<&str> {
    csv.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .skip(1)
        .collect()
}

fn footer_value<'a>(csv: &'a str, key: &str) -> &'a str {
    let prefix = format!("# {key},");
    csv.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("footer key {key} in:\n{csv}"))
}

#[test]
fn sweep_csv_has_the_documented_schema_and_footer() {
    let (code, stdout, stderr) = run(&["sweep", "--scenario", "fig1-triangular", "--no-timestamp"]);
    assert_eq!(code, 0, "stderr: {stderr}");
    let mut lines = stdout.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario,epsilon,mse_near,mse_full,ratio,condition,precision"
    );
    let rows = body_rows(&stdout);
    assert_eq!(rows.len(), 11, "default dyadic grid 2^-2..2^-12");
    for row in &rows {
        assert!(row.starts_with("fig1-triangular,"), "row: {row}");
        assert_eq!(row.split(',').count(), 7, "row: {row}");
    }
    // The four footer keys, in order, plus the catalog reference.
    let footer: Vec<&str> = stdout.lines().filter(|l| l.starts_with('#')).collect();
    assert_eq!(footer.len(), 4, "footer: {footer:?}");
    assert!(footer[0].starts_with("# extrapolated_limit,"));
    assert!(footer[1].starts_with("# uncertainty,"));
    assert_eq!(footer[2], "# reference_limit,7.50000000000e-1");
    assert_eq!(footer[3], "# verdict,pass");
    let limit: f64 = footer_value(&stdout, "extrapolated_limit").parse().unwrap();
    assert!((limit - 0.75).abs() <= 0.01, "limit {limit}");
}

#[test]
fn explicit_scale_grids_drive_the_row_count() {
    let (code, stdout, _) = run(&[
        "sweep",
        "--scenario",
        "fig1-exponential",
        "--eps-grid",
        "0.25,0.125",
        "--no-timestamp",
    ]);
    assert_eq!(code, 0);
    assert_eq!(body_rows(&stdout).len(), 2);
}

#[test]
fn reruns_are_bit_identical_modulo_the_timestamp_header() {
    let args = ["sweep", "--scenario", "fig2a-matern32", "--no-timestamp"];
    let (c1, first, _) = run(&args);
    let (c2, second, _) = run(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(first, second, "untimestamped runs must match byte for byte");
    assert!(!first.contains("# generated,"));

    // With timestamps on (the default), the header is the only varying line.
    let (code, stamped, _) = run(&["sweep", "--scenario", "fig2a-matern32"]);
    assert_eq!(code, 0);
    let mut lines = stamped.lines();
    let head = lines.next().unwrap();
    assert!(head.starts_with("# generated,"), "head: {head}");
    let rest: Vec<&str> = lines.collect();
    let plain: Vec<&str> = first.lines().collect();
    assert_eq!(rest, plain);
}

#[test]
fn markov_rows_are_unit_to_solver_precision() {
    let (code, stdout, _) = run(&["sweep", "--scenario", "fig1-exponential", "--no-timestamp"]);
    assert_eq!(code, 0);
    for row in body_rows(&stdout) {
        let ratio: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
        assert!((ratio - 1.0).abs() <= 1e-10, "row: {row}");
    }
    assert_eq!(footer_value(&stdout, "verdict"), "pass");
}

#[test]
fn a_config_with_an_unknown_key_is_rejected_before_any_output() {
    let config = scratch("unknown-key.json");
    let out = scratch("unknown-key.csv");
    std::fs::write(
        &config,
        r#"{"command":"sweep","scenario":"fig1-triangular","bogus":1}"#,
    )
    .unwrap();
    let (code, _, stderr) = run(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "stderr: {stderr}");
    assert!(stderr.contains("bogus"), "stderr: {stderr}");
    assert!(!out.exists(), "no output file may be written on exit 2");
}

#[test]
fn non_json_configs_and_unknown_scenarios_are_config_errors() {
    let config = scratch("not-json.json");
    std::fs::write(&config, "kmax: 12\n").unwrap();
    let (code, _, _) = run(&["sweep", "--config", config.to_str().unwrap()]);
    assert_eq!(code, 2);

    let (code, _, stderr) = run(&["sweep", "--scenario", "no-such-scenario"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("no-such-scenario"), "stderr: {stderr}");
}

#[test]
fn a_malformed_precision_env_is_a_config_error() {
    let out = scratch("bad-env.csv");
    let output = krigelab()
        .args([
            "sweep",
            "--scenario",
            "fig1-triangular",
            "--out",
            out.to_str().unwrap(),
        ])
        .env("KRIGE_PRECISION", "turbo")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn the_precision_env_var_is_reflected_in_the_rows() {
    for policy in ["native", "extended"] {
        let output = krigelab()
            .args(["sweep", "--scenario", "fig1-triangular", "--kmax", "6", "--no-timestamp"])
            .env("KRIGE_PRECISION", policy)
            .output()
            .unwrap();
        assert_eq!(output.status.code(), Some(0));
        let stdout = String::from_utf8(output.stdout).unwrap();
        for row in body_rows(&stdout) {
            assert!(row.ends_with(&format!(",{policy}")), "row: {row}");
        }
    }
}

#[test]
fn a_missed_reference_exits_one_but_still_writes_the_report() {
    // Borrow a real model and geometry from the shipped catalog, then claim
    // a wrong limit: the run itself succeeds, the verdict does not.
    let catalog: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(catalog_path()).unwrap()).unwrap();
    let entry = catalog
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["id"] == "fig1-triangular")
        .unwrap();
    let config = scratch("missed-reference.json");
    let out = scratch("missed-reference.csv");
    std::fs::write(
        &config,
        serde_json::json!({
            "command": "sweep",
            "model": entry["model"],
            "sites": entry["config"],
            "reference": 0.25,
        })
        .to_string(),
    )
    .unwrap();
    let (code, _, stderr) = run(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--no-timestamp",
    ]);
    assert_eq!(code, 1, "stderr: {stderr}");
    let report = std::fs::read_to_string(&out).expect("report written despite the miss");
    assert_eq!(footer_value(&report, "verdict"), "fail");
    assert_eq!(footer_value(&report, "reference_limit"), "2.50000000000e-1");
}

#[test]
fn band_share_at_unit_radius_matches_the_arctangent_form() {
    let (code, stdout, stderr) = run(&[
        "spectral",
        "band",
        "--scenario",
        "fig2a-matern32",
        "--omega0",
        "1",
        "--no-timestamp",
    ]);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert!(stdout.contains("omega0,value,error_estimate,verdict"));
    let rows = body_rows(&stdout);
    assert_eq!(rows.len(), 1);
    let fields: Vec<&str> = rows[0].split(',').collect();
    let value: f64 = fields[1].parse().unwrap();
    let closed_form = 2.0 / std::f64::consts::PI * (std::f64::consts::FRAC_PI_4 - 0.5);
    assert!((value - closed_form).abs() <= 1e-3, "value {value}");
    assert_eq!(fields[3], "ok");
}

#[test]
fn fcond_verdicts_and_expectation_mismatches() {
    let (code, stdout, _) = run(&["spectral", "fcond", "--model", "triangular", "--no-timestamp"]);
    assert_eq!(code, 0);
    assert_eq!(footer_value(&stdout, "verdict"), "violated");
    assert!(stdout.contains("omega,value,error_estimate,verdict"));

    let (code, stdout, _) = run(&[
        "spectral", "fcond", "--model", "matern", "--nu", "1.5", "--no-timestamp",
    ]);
    assert_eq!(code, 0);
    assert_eq!(footer_value(&stdout, "verdict"), "consistent");

    // Expecting the wrong verdict is a CI failure, not an error.
    let (code, stdout, stderr) = run(&[
        "spectral", "fcond", "--model", "triangular", "--expect", "consistent", "--no-timestamp",
    ]);
    assert_eq!(code, 1, "stderr: {stderr}");
    assert_eq!(footer_value(&stdout, "verdict"), "violated");
}

#[test]
fn lemma_instances_run_by_name_and_unknowns_are_rejected() {
    let (code, stdout, _) = run(&["lemma1", "--instance", "fig3a-matern32", "--no-timestamp"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("epsilon,max_abs_deviation,verdict"));
    assert_eq!(footer_value(&stdout, "verdict"), "converged");

    let (code, _, stderr) = run(&["lemma1", "--instance", "bogus"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("fig3a-matern32"), "stderr lists instances: {stderr}");

    let (code, stdout, _) = run(&["lemma1", "--list"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("fig3a-matern32 ("), "listing: {stdout}");
}

#[test]
fn the_shipped_catalog_is_current() {
    let shipped = std::fs::read_to_string(catalog_path()).expect("data/catalog.json ships");
    let (code, stdout, _) = run(&["catalog"]);
    assert_eq!(code, 0);
    assert_eq!(stdout, shipped, "regenerate with `krigelab catalog --out data/catalog.json`");

    let (code, stdout, _) = run(&["catalog", "--check", catalog_path().to_str().unwrap()]);
    assert_eq!(code, 0, "check output: {stdout}");

    let (code, stdout, _) = run(&["catalog", "--summary"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("fig1-exponential"));
    assert!(stdout.contains("spectral only"));
}

#[test]
fn svg_plots_are_written_and_deterministic() {
    let out = scratch("plot.csv");
    let svg_a = scratch("plot-a.svg");
    let svg_b = scratch("plot-b.svg");
    for svg in [&svg_a, &svg_b] {
        let (code, _, stderr) = run(&[
            "sweep",
            "--scenario",
            "fig1-triangular",
            "--no-timestamp",
            "--out",
            out.to_str().unwrap(),
            "--svg",
            svg.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "stderr: {stderr}");
    }
    let a = std::fs::read_to_string(&svg_a).unwrap();
    let b = std::fs::read_to_string(&svg_b).unwrap();
    assert!(a.starts_with("<svg"), "head: {}", &a[..40.min(a.len())]);
    assert!(a.contains("</svg>"));
    assert_eq!(a, b, "plots must be deterministic");
}

#[test]
fn every_catalog_scenario_runs_by_name_with_zero_configuration() {
    let catalog: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(catalog_path()).unwrap()).unwrap();
    for entry in catalog.as_array().unwrap() {
        let id = entry["id"].as_str().unwrap();
        let args: Vec<&str> = if entry["config"].is_null() {
            vec!["spectral", "fcond", "--scenario", id, "--no-timestamp"]
        } else {
            vec!["sweep", "--scenario", id, "--no-timestamp"]
        };
        let (code, _, stderr) = run(&args);
        assert_eq!(code, 0, "scenario {id} failed: {stderr}");
    }
}
