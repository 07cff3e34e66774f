use std::path::{Path, PathBuf};
use std::process::Command;

use hot_cli::report::without_timestamp;
use hot_cli::{run, OUT_DIR_ENV};
use itertools::Itertools;
use serde_json::{json, Value};
use tempfile::TempDir;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/circle32_bumps.json")
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn write_config(dir: &TempDir, value: &Value) -> PathBuf {
    let path = dir.path().join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn run_cmd(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> i32 {
    let mut args = vec![
        "hot".to_string(),
        cmd.to_string(),
        "--config".to_string(),
        config.display().to_string(),
        "--out".to_string(),
        out.display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    run(args)
}

fn read_report(dir: &Path, cmd: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(format!("{cmd}_report.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn near_bumps() -> (Value, Value) {
    (
        json!({"kind": "bumps", "atoms": [{"center": [0.3, 0.0, 0.0], "kappa": 4.0}]}),
        json!({"kind": "bumps", "atoms": [{"center": [0.45, 0.0, 0.0], "kappa": 4.0}]}),
    )
}

fn circle16(source: Value, target: Value) -> Value {
    json!({
        "seed": 1,
        "manifold": {"kind": "circle", "n": 16},
        "source": source,
        "target": target,
    })
}

/// Structural equality with numbers compared to `tol`.
fn assert_close(a: &Value, b: &Value, tol: f64, path: &str) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            assert!((x - y).abs() <= tol, "{path}: {x} vs {y}");
        }
        (Value::Array(x), Value::Array(y)) => {
            assert_eq!(x.len(), y.len(), "{path}: length");
            for (k, (u, v)) in x.iter().zip(y).enumerate() {
                assert_close(u, v, tol, &format!("{path}[{k}]"));
            }
        }
        (Value::Object(x), Value::Object(y)) => {
            assert_eq!(
                x.keys().collect::<Vec<_>>(),
                y.keys().collect::<Vec<_>>(),
                "{path}"
            );
            for (k, u) in x {
                assert_close(u, &y[k], tol, &format!("{path}.{k}"));
            }
        }
        _ => assert_eq!(a, b, "{path}"),
    }
}

#[test]
fn fixture_report_matches_the_golden_report() {
    let out = TempDir::new().unwrap();
    assert_eq!(run_cmd("inner", &fixture(), out.path(), &[]), 0);
    let mut got = read_report(out.path(), "inner");
    let text = std::fs::read_to_string(golden("circle32_bumps_inner_report.json")).unwrap();
    let mut want: Value = serde_json::from_str(&text).unwrap();
    got.as_object_mut().unwrap().remove("timestamp");
    want.as_object_mut().unwrap().remove("timestamp");
    assert_close(&got, &want, 1e-9, "report");
}

#[test]
fn golden_plotdata_is_byte_identical() {
    let out = TempDir::new().unwrap();
    let code = run([
        "hot",
        "plotdata",
        golden("circle32_bumps_inner_report.json").to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let got = std::fs::read(out.path().join("circle32_bumps_inner_plotdata.csv")).unwrap();
    let want = std::fs::read(golden("circle32_bumps_inner_plotdata.csv")).unwrap();
    assert_eq!(got, want);
}

#[test]
fn identical_ensembles_cost_nothing() {
    let dir = TempDir::new().unwrap();
    let e = json!({"kind": "generated", "family": "mixtures", "n_atoms": 2, "seed": 4});
    let config = write_config(&dir, &circle16(e.clone(), e));
    assert_eq!(run_cmd("inner", &config, dir.path(), &[]), 0);
    let report = read_report(dir.path(), "inner");
    for pair in report["results"]["pairs"].as_array().unwrap() {
        assert_eq!(pair["cost"].as_f64().unwrap(), 0.0);
    }
    assert!(report["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .all(|v| v["pass"] == true));
}

#[test]
fn diracs_a_quarter_apart() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        &dir,
        &circle16(
            json!({"kind": "diracs", "nodes": [0]}),
            json!({"kind": "diracs", "nodes": [4]}),
        ),
    );
    assert_eq!(run_cmd("inner", &config, dir.path(), &[]), 0);
    let report = read_report(dir.path(), "inner");
    assert_eq!(
        report["results"]["pairs"][0]["cost"].as_f64().unwrap(),
        0.0625
    );
    let plan = std::fs::read_to_string(dir.path().join("plan_0.csv")).unwrap();
    assert_eq!(plan, "source,target,mass\n0,4,1\n");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bumps = json!({"kind": "generated", "family": "bumps", "n_atoms": 2});
    let out = dir.path();

    let ok = write_config(&dir, &circle16(bumps.clone(), bumps.clone()));
    assert_eq!(run_cmd("inner", &ok, out, &[]), 0);

    let mut strict = circle16(bumps.clone(), bumps.clone());
    strict["tolerances"] = json!({"norm_identity_factor": 0.0});
    let strict = write_config(&dir, &strict);
    assert_eq!(run_cmd("inner", &strict, out, &[]), 1);

    assert_eq!(run_cmd("inner", &out.join("missing.json"), out, &[]), 2);
    std::fs::write(out.join("broken.json"), "{ not json").unwrap();
    assert_eq!(run_cmd("inner", &out.join("broken.json"), out, &[]), 2);
    let mut unseeded = circle16(bumps.clone(), bumps.clone());
    unseeded.as_object_mut().unwrap().remove("seed");
    assert_eq!(
        run_cmd("inner", &write_config(&dir, &unseeded), out, &[]),
        2
    );
    let mut unknown_h = circle16(bumps.clone(), bumps.clone());
    unknown_h["cost"] = json!({"kind": "h_of_w2", "h": "cube"});
    assert_eq!(
        run_cmd("outer", &write_config(&dir, &unknown_h), out, &[]),
        2
    );
    let mut concave = circle16(bumps.clone(), bumps.clone());
    concave["cost"] = json!({"kind": "h_of_w2", "h": {"s": [0.0, 0.5, 1.0], "h": [0.0, 0.4, 0.5]}});
    assert_eq!(run_cmd("outer", &write_config(&dir, &concave), out, &[]), 2);
    assert_eq!(run(["hot", "inner"]), 2);
    assert_eq!(run(["hot", "transport"]), 2);
    assert_eq!(run_cmd("inner", &ok, out, &["--jobs", "0"]), 2);
    assert_eq!(
        run(["hot", "plotdata", out.join("nope.json").to_str().unwrap()]),
        2
    );

    let mut starved = circle16(bumps.clone(), bumps);
    starved["solver"] = json!({"epsilon_schedule": [1e-4], "entropic_max_iterations": 3});
    assert_eq!(run_cmd("inner", &write_config(&dir, &starved), out, &[]), 3);
}

#[test]
fn binary_reports_exit_codes() {
    let dir = TempDir::new().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_hot"))
        .args(["inner", "--config"])
        .arg(fixture())
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&status.stdout).contains("PASS pair0.duality_gap"));
    let missing = Command::new(env!("CARGO_BIN_EXE_hot"))
        .args(["outer", "--config", "/nonexistent/config.json"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn zero_field_gives_zero_residuals() {
    let dir = TempDir::new().unwrap();
    let mut cfg = circle16(
        json!({"kind": "generated", "family": "bumps", "n_atoms": 2}),
        json!({"kind": "generated", "family": "bumps", "n_atoms": 2}),
    );
    cfg["calculus"] = json!({"field": {"kind": "zero"}});
    assert_eq!(
        run_cmd("calculus", &write_config(&dir, &cfg), dir.path(), &[]),
        0
    );
    let r = &read_report(dir.path(), "calculus")["results"];
    for d in r["w2_derivative"].as_array().unwrap() {
        assert_eq!(d["residual"].as_f64().unwrap().abs(), 0.0);
    }
    assert_eq!(r["continuity"]["max_residual"].as_f64().unwrap(), 0.0);
    assert_eq!(
        r["directional_derivative"]["formula"]
            .as_f64()
            .unwrap()
            .abs(),
        0.0
    );
    assert_eq!(
        r["directional_derivative"]["finite_difference"]
            .as_f64()
            .unwrap(),
        0.0
    );
}

#[test]
fn derivative_at_the_target_vanishes() {
    let dir = TempDir::new().unwrap();
    let e = json!({"kind": "bumps", "atoms": [{"center": [0.3, 0.0, 0.0], "kappa": 4.0}]});
    let config = write_config(&dir, &circle16(e.clone(), e));
    assert_eq!(run_cmd("calculus", &config, dir.path(), &[]), 0);
    let d = &read_report(dir.path(), "calculus")["results"]["w2_derivative"][0];
    assert!(d["formula_value"].as_f64().unwrap().abs() <= 1e-12);
    assert!(d["fd_value"].as_f64().unwrap().abs() <= 1e-2);
}

#[test]
fn single_atom_outer_run_passes() {
    let dir = TempDir::new().unwrap();
    let (src, dst) = near_bumps();
    let mut cfg = circle16(src, dst);
    cfg["manifold"]["n"] = json!(32);
    let config = write_config(&dir, &cfg);
    assert_eq!(run_cmd("outer", &config, dir.path(), &[]), 0);
    let r = &read_report(dir.path(), "outer")["results"];
    assert_eq!(r["plan"], json!([[1.0]]));
    assert_eq!(r["assignment"], json!([0]));
}

#[test]
fn outer_assignment_matches_enumeration() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        &dir,
        &circle16(
            json!({"kind": "generated", "family": "mixtures", "n_atoms": 3, "seed": 21}),
            json!({"kind": "generated", "family": "mixtures", "n_atoms": 3, "seed": 22}),
        ),
    );
    run_cmd("outer", &config, dir.path(), &[]);
    let r = &read_report(dir.path(), "outer")["results"];
    let c: Vec<f64> = serde_json::from_value(r["cost_matrix"].clone()).unwrap();
    let best = (0..3)
        .permutations(3)
        .min_by(|p, q| {
            let cost = |p: &Vec<usize>| {
                p.iter()
                    .enumerate()
                    .map(|(i, &j)| c[i * 3 + j])
                    .sum::<f64>()
            };
            cost(p).total_cmp(&cost(q))
        })
        .unwrap();
    let assignment: Vec<usize> = serde_json::from_value(r["assignment"].clone()).unwrap();
    assert_eq!(assignment, best);
    let csv = std::fs::read_to_string(dir.path().join("cost_matrix.csv")).unwrap();
    assert_eq!(hot_core::io::parse_triples_csv(&csv).unwrap().len(), 9);
}

#[test]
fn square_h_and_squared_cost_agree() {
    let dir = TempDir::new().unwrap();
    let mut cfg = circle16(
        json!({"kind": "generated", "family": "bumps", "n_atoms": 3}),
        json!({"kind": "generated", "family": "bumps", "n_atoms": 3}),
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_cmd("outer", &write_config(&dir, &cfg), &a, &[]);
    cfg["cost"] = json!({"kind": "h_of_w2", "h": "square"});
    run_cmd("outer", &write_config(&dir, &cfg), &b, &[]);
    let (ra, rb) = (read_report(&a, "outer"), read_report(&b, "outer"));
    assert_eq!(ra["results"]["assignment"], rb["results"]["assignment"]);
    assert_eq!(ra["results"]["cost_matrix"], rb["results"]["cost_matrix"]);
    assert!(
        rb["results"]["h_identities"]["chain_rule_residual"]
            .as_f64()
            .unwrap()
            <= 1e-12
    );
}

#[test]
fn outer_reports_are_reproducible() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert_eq!(run_cmd("outer", &fixture(), a.path(), &[]), 0);
    assert_eq!(run_cmd("outer", &fixture(), b.path(), &["--jobs", "2"]), 0);
    let read = |d: &Path| std::fs::read_to_string(d.join("outer_report.json")).unwrap();
    assert_eq!(
        without_timestamp(&read(a.path())).unwrap(),
        without_timestamp(&read(b.path())).unwrap()
    );
    for f in ["cost_matrix.csv", "outer_plan.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap()
        );
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    run_cmd("inner", &fixture(), a.path(), &[]);
    run_cmd("inner", &fixture(), b.path(), &["--seed", "8"]);
    let (ra, rb) = (
        read_report(a.path(), "inner"),
        read_report(b.path(), "inner"),
    );
    assert_eq!(rb["config"]["seed"], json!(8));
    assert_ne!(ra["results"]["pairs"], rb["results"]["pairs"]);
}

#[test]
fn output_directory_precedence() {
    let dir = TempDir::new().unwrap();
    let mut cfg = circle16(
        json!({"kind": "diracs", "nodes": [0]}),
        json!({"kind": "diracs", "nodes": [1]}),
    );
    cfg["output_dir"] = json!("from_config");
    let config = write_config(&dir, &cfg);
    let env_dir = dir.path().join("from_env");
    let flag_dir = dir.path().join("from_flag");
    std::env::set_var(OUT_DIR_ENV, &env_dir);
    assert_eq!(run_cmd("inner", &config, &flag_dir, &[]), 0);
    assert!(flag_dir.join("inner_report.json").exists());
    assert_eq!(
        run(["hot", "inner", "--config", config.to_str().unwrap()]),
        0
    );
    assert!(env_dir.join("inner_report.json").exists());
    std::env::remove_var(OUT_DIR_ENV);
    assert_eq!(
        run(["hot", "inner", "--config", config.to_str().unwrap()]),
        0
    );
    assert!(dir.path().join("from_config/inner_report.json").exists());
}

#[test]
fn plotdata_series_and_empty_sections() {
    let dir = TempDir::new().unwrap();
    let (src, dst) = near_bumps();
    let mut cfg = circle16(src, dst);
    cfg["manifold"]["n"] = json!(32);
    cfg["calculus"] = json!({"refinement": [16, 32]});
    let config = write_config(&dir, &cfg);
    run_cmd("calculus", &config, dir.path(), &[]);
    run_cmd("outer", &config, dir.path(), &[]);
    for (cmd, rows) in [("calculus", 2), ("outer", 0)] {
        let report = dir.path().join(format!("{cmd}_report.json"));
        assert_eq!(run(["hot", "plotdata", report.to_str().unwrap()]), 0);
        let csv = std::fs::read_to_string(dir.path().join(format!("{cmd}_plotdata.csv"))).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "series,x,y");
        assert_eq!(lines.len(), 1 + rows, "{csv}");
        assert!(lines[1..]
            .iter()
            .all(|l| l.starts_with("w2_derivative_residual_vs_n,")));
    }
}
