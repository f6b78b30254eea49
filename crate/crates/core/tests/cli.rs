use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;

use scents::cli::{ingest_csv, run, ColumnMapping, Report};
use scents::{generate, DgpConfig, Error};
use serde_json::Value;

fn write_file(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::File::create(&path).unwrap().write_all(body.as_bytes()).unwrap();
    path
}

fn synthetic_csv(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let d = generate(&DgpConfig::reference(n, seed)).unwrap();
    let mut body = String::from("y,q,x_1,x_2,z_1,z_2\n");
    for i in 0..n {
        body.push_str(&format!(
            "{},{},{},{},{},{}\n",
            d.y[i], d.q[i], d.x[(i, 0)], d.x[(i, 1)], d.z[(i, 0)], d.z[(i, 1)]
        ));
    }
    write_file(dir, "data.csv", &body)
}

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("scents").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn three_row_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_file(dir.path(), "d.csv", "y,q,x_1,z_1\n1.0,0.5,2.0,3.0\n2.0,-0.5,1.0,0.0\n0.5,1.5,-1.0,2.5\n");
    let ing = ingest_csv(&p, None).unwrap();
    assert_eq!((ing.data.n(), ing.data.p1(), ing.data.p2()), (3, 1, 1));
    assert_eq!(ing.dropped, 0);
    assert_eq!(ing.data.q[1], -0.5);
    assert_eq!(ing.data.x[(2, 0)], -1.0);
}

#[test]
fn non_numeric_cell_names_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_file(dir.path(), "d.csv", "y,q,x_1,z_1\n1.0,0.5,abc,3.0\n2.0,-0.5,1.0,0.0\n");
    match ingest_csv(&p, None) {
        Err(Error::Parse { row, column, .. }) => {
            assert_eq!(row, 2);
            assert_eq!(column, "x_1");
        }
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn identical_x_and_z_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_file(dir.path(), "d.csv", "y,q,x_1,z_1\n1,0.5,2,2\n2,-0.5,1,1\n0.5,1.5,-1,-1\n");
    let ing = ingest_csv(&p, None).unwrap();
    assert_eq!(ing.data.x, ing.data.z);
}

#[test]
fn missing_cells_dropped_and_columns_required() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_file(dir.path(), "d.csv", "y,q,x_1,z_1,extra\n1,0.5,2,2,\n2,NA,1,1,7\n0.5,1.5,,-1,1\n3,1,1,1,1\n");
    let ing = ingest_csv(&p, None).unwrap();
    assert_eq!(ing.data.n(), 2);
    assert_eq!(ing.dropped, 2);

    let p = write_file(dir.path(), "noz.csv", "y,q,x_1\n1,2,3\n");
    assert!(matches!(ingest_csv(&p, None), Err(Error::MissingColumn(_))));
    let p = write_file(dir.path(), "noy.csv", "q,x_1,z_1\n1,2,3\n");
    assert!(matches!(ingest_csv(&p, None), Err(Error::MissingColumn(c)) if c == "y"));
}

#[test]
fn mapping_file_overrides_prefixes() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_file(dir.path(), "d.csv", "wage,score,age,exam\n1,0.5,30,2\n2,-0.5,40,1\n");
    let m = write_file(dir.path(), "m.json", r#"{"y":"wage","q":"score","x":["age"],"z":["age","exam"]}"#);
    let mapping = ColumnMapping::from_file(&m).unwrap();
    let ing = ingest_csv(&p, Some(&mapping)).unwrap();
    assert_eq!((ing.data.p1(), ing.data.p2()), (1, 2));
    assert_eq!(ing.data.z[(1, 0)], 40.0);
    assert_eq!(ing.data.y[0], 1.0);
}

#[test]
fn fit_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = synthetic_csv(dir.path(), 300, 5);
    let p = p.to_str().unwrap();
    let (c1, o1, _) = call(&["fit", "--input", p, "--seed", "7"]);
    let (c2, o2, _) = call(&["fit", "--input", p, "--seed", "7"]);
    let (c3, o3, _) = call(&["--threads", "1", "fit", "--input", p, "--seed", "7"]);
    assert_eq!((c1, c2, c3), (0, 0, 0));
    assert_eq!(o1, o2);
    assert_eq!(o1, o3);
    let (_, o4, _) = call(&["fit", "--input", p, "--seed", "8"]);
    assert_ne!(o1, o4);

    let report: Report = serde_json::from_str(&o1).unwrap();
    assert_eq!(report.schema_version, 1);
    assert_eq!(report.command, "fit");
    assert_eq!(serde_json::to_string_pretty(&report).unwrap(), o1.trim_end());
    let v: Value = serde_json::from_str(&o1).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["schema_version", "command", "config", "estimates", "diagnostics"]);
    assert!(v["estimates"]["alpha_bar"].is_f64());
    assert_eq!(v["estimates"]["alpha_per_rotation"].as_array().unwrap().len(), 3);
    assert!(v["diagnostics"]["masked_fraction"].as_f64().unwrap() > 0.5);
    assert_eq!(v["diagnostics"]["condition_numbers"].as_array().unwrap().len(), 3);
    assert_eq!(v["config"]["seed"], 7);
}

#[test]
fn wls_and_hd_commands() {
    let dir = tempfile::tempdir().unwrap();
    let p = synthetic_csv(dir.path(), 300, 6);
    let p = p.to_str().unwrap();
    let (code, out, _) = call(&["fit", "--input", p, "--wls", "--tau", "1.5", "--K", "5"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["config"]["wls"], true);
    assert_eq!(v["config"]["K"], 5);

    let (code, out, _) = call(&["fit-hd", "--input", p, "--seed", "2"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let ci = v["estimates"]["ci95"].as_array().unwrap();
    let a = v["estimates"]["alpha_hat"].as_f64().unwrap();
    assert!(ci[0].as_f64().unwrap() <= a && a <= ci[1].as_f64().unwrap());
    for key in ["lambda_gamma", "lambda_beta", "lambda_0", "lambda_1"] {
        assert!(v["diagnostics"]["lambdas"][key].is_f64(), "{key}");
    }
    assert_eq!(v["config"]["lambda_mode"], "theory");
}

#[test]
fn bootstrap_report_has_table_fields() {
    let dir = tempfile::tempdir().unwrap();
    let p = synthetic_csv(dir.path(), 240, 9);
    let p = p.to_str().unwrap();
    let args = ["bootstrap", "--input", p, "--B", "60", "--level", "0.95", "--seed", "3"];
    let (code, out, _) = call(&args);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let keys: Vec<&String> = v["estimates"].as_object().unwrap().keys().collect();
    assert_eq!(keys, ["Point Estimate", "Bootstrap mean.", "Bootstrap s.e.", "Bootstrap 95% C.I."]);
    let ci = v["estimates"]["Bootstrap 95% C.I."].as_array().unwrap();
    assert!(ci[0].as_f64().unwrap() <= ci[1].as_f64().unwrap());
    assert_eq!(call(&args).1, out);
}

#[test]
fn spline_check_report() {
    let (code, out, _) = call(&["spline-check", "--tau", "1", "--K", "8"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["estimates"]["all_passed"], true);
    let checks = v["diagnostics"]["checks"].as_array().unwrap();
    assert!(checks.len() >= 8);
    assert!(checks.iter().all(|c| c["passed"] == true));
}

#[test]
fn simulate_report() {
    let (code, out, err) = call(&["simulate", "--dgp", "preset=exogenous,n=300", "--R", "20", "--seed", "1"]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    for key in ["bias", "sd", "rmse", "ks_stat", "naive_bias"] {
        assert!(v["estimates"][key].is_f64(), "{key}");
    }
    assert_eq!(v["config"]["dgp"]["n"], 300);
}

#[test]
fn exit_codes() {
    assert_eq!(call(&["frobnicate"]).0, 2);
    assert_eq!(call(&["fit"]).0, 2);
    assert_eq!(call(&["bootstrap", "--input", "x.csv", "--B", "many"]).0, 2);
    assert_eq!(call(&["--help"]).0, 0);

    let (code, _, err) = call(&["fit", "--input", "/nonexistent/data.csv"]);
    assert_eq!(code, 1);
    let v: Value = serde_json::from_str(&err).unwrap();
    assert_eq!(v["error"]["kind"], "io_error");

    let dir = tempfile::tempdir().unwrap();
    let p = write_file(dir.path(), "bad.csv", "y,q,x_1,z_1\n1.0,0.5,abc,3.0\n");
    let (code, _, err) = call(&["fit", "--input", p.to_str().unwrap()]);
    assert_eq!(code, 1);
    let v: Value = serde_json::from_str(&err).unwrap();
    assert_eq!(v["error"]["kind"], "parse_error");
    assert_eq!(v["error"]["row"], 2);
    assert_eq!(v["error"]["column"], "x_1");
}

#[test]
fn binary_exit_status() {
    let bin = env!("CARGO_BIN_EXE_scents");
    let out = Command::new(bin).args(["spline-check", "--K", "6"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["command"], "spline-check");
    let out = Command::new(bin).arg("nope").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(bin).args(["fit", "--input", "/nonexistent.csv"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

