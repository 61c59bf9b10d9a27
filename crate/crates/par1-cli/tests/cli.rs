//! End-to-end tests of the `par1` binary: round trips, exit codes,
//! determinism across worker counts, and report schemas.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use par1_core::{estimate_series, generate, ks_two_sample, simulate_path, ExperimentConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_par1"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

const FAM1: &str = r#"{
    "model": {"period": 6, "coeffs": [0.8, 1.2, 1, 1.5, 1.1, 0.9]},
    "innovation": {"law": "gaussian", "sd": 1.0, "m": 0, "modulated": true},
    "x0": 1.0,
    "n_cycles": 20,
    "replications": 60,
    "master_seed": 42
}"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn simulate_then_estimate_matches_in_process_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "fam1.json", FAM1);
    let csv = dir.path().join("path.csv");
    let out = run(&[
        "simulate",
        "--config",
        &config,
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let header = stdout(&out);
    assert!(header.contains("regime=explosive"), "{header}");
    assert!(header.contains("phi=1.4256"), "{header}");

    let report_path = dir.path().join("report.json");
    let out = run(&[
        "estimate",
        "--input",
        csv.to_str().unwrap(),
        "--period",
        "6",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    // same computation without touching disk
    let cfg: ExperimentConfig = serde_json::from_str(FAM1).unwrap();
    let stream = generate(&cfg.innovation, cfg.n_cycles * 6, cfg.seed()).unwrap();
    let path = simulate_path(&cfg.model, &stream, cfg.x0, cfg.n_cycles).unwrap();
    let expected = estimate_series(path.x(), 6, None).unwrap();
    let mut expected_json = serde_json::to_vec_pretty(&expected).unwrap();
    expected_json.push(b'\n');
    let emitted = fs::read(&report_path).unwrap();
    assert_eq!(emitted, expected_json, "CSV round trip changed the report");
}

#[test]
fn simulate_inline_flags_and_unstable_regime() {
    let out = run(&["simulate", "--coeffs", "1,1,1", "--n", "3", "--law", "zero"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("regime=unstable"));
}

#[test]
fn malformed_config_exits_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "bad.json",
        r#"{"model": {"period": 6}, "n_cycles": 5}"#,
    );
    let out = run(&["mc", "--config", &config]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("line"), "no location in: {err}");
}

#[test]
fn overflow_exits_3_with_step() {
    let out = run(&[
        "simulate", "--coeffs", "1e200", "--n", "2", "--law", "zero", "--x0", "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("step 2"), "{}", stderr(&out));
}

#[test]
fn mc_zero_variance_rows_and_stable_digest() {
    let dir = tempfile::tempdir().unwrap();
    let base = r#"{
        "model": {"period": 2, "coeffs": [2.0, 3.0]},
        "innovation": {"law": "zero"},
        "x0": 1.0,
        "n_cycles": 4,
        "replications": 8,
        "master_seed": 5
    }"#;
    let reordered = r#"{"replications": 8, "master_seed": 5,
        "n_cycles": 4, "x0": 1.0,
        "innovation": {"law": "zero"},
        "model": {"coeffs": [2.0, 3.0], "period": 2}}"#;
    let c1 = write(dir.path(), "a.json", base);
    let c2 = write(dir.path(), "b.json", reordered);
    let s1 = dir.path().join("s1.json");
    let m1 = dir.path().join("m1.json");
    let s2 = dir.path().join("s2.json");
    let m2 = dir.path().join("m2.json");
    let out = run(&[
        "mc",
        "--config",
        &c1,
        "--out",
        s1.to_str().unwrap(),
        "--manifest",
        m1.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = run(&[
        "mc",
        "--config",
        &c2,
        "--out",
        s2.to_str().unwrap(),
        "--manifest",
        m2.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let digest = |p: &Path| {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
        v["config_digest"].as_str().unwrap().to_string()
    };
    assert_eq!(digest(&m1), digest(&m2), "digest not canonical");

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&s1).unwrap()).unwrap();
    for est in summary["estimators"].as_array().unwrap() {
        assert_eq!(est["error_mean"].as_f64().unwrap(), 0.0);
        assert_eq!(est["error_sigma"].as_f64().unwrap(), 0.0);
        assert_eq!(est["abs_p95"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn summaries_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "fam1.json", FAM1);
    let s1 = dir.path().join("t1.json");
    let s8 = dir.path().join("t8.json");
    let out = bin()
        .args(["mc", "--config", &config, "--out", s1.to_str().unwrap()])
        .env("PAR1_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let out = bin()
        .args(["mc", "--config", &config, "--out", s8.to_str().unwrap()])
        .env("PAR1_THREADS", "8")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        fs::read(&s1).unwrap(),
        fs::read(&s8).unwrap(),
        "summary depends on PAR1_THREADS"
    );
}

fn read_draws(path: &Path) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("value"));
    lines.map(|l| l.parse().unwrap()).collect()
}

#[test]
fn limit_kinds_collapse_for_period_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "p1.json",
        r#"{
            "model": {"period": 1, "coeffs": [2.0]},
            "innovation": {"law": "gaussian", "sd": 1.0, "m": 0, "modulated": false},
            "x0": 1.0,
            "n_cycles": 10,
            "master_seed": 9
        }"#,
    );
    let a_csv = dir.path().join("a.csv");
    let t_csv = dir.path().join("t.csv");
    let meta = dir.path().join("meta.json");
    let out = run(&[
        "limit",
        "--config",
        &config,
        "--kind",
        "a_r",
        "--r",
        "1",
        "--draws",
        "3000",
        "--out",
        a_csv.to_str().unwrap(),
        "--meta",
        meta.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let header: serde_json::Value =
        serde_json::from_str(stdout(&out).lines().next().unwrap()).unwrap();
    assert_eq!(header["kind"], "a_1");
    assert_eq!(header["rejection_count"], 0);
    assert!(header["truncation_depth"].as_u64().unwrap() >= 1);
    let meta_value: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&meta).unwrap()).unwrap();
    assert_eq!(meta_value["kind"], "a_1");

    let out = run(&[
        "limit",
        "--config",
        &config,
        "--kind",
        "tilde",
        "--draws",
        "3000",
        "--out",
        t_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let a = read_draws(&a_csv);
    let t = read_draws(&t_csv);
    assert_eq!(a.len(), 3000);
    let ks = ks_two_sample(&a, &t).unwrap();
    assert!(ks.passes(), "P=1 collapse: KS {:?}", ks);

    // a-r without --r is a usage error
    let out = run(&["limit", "--config", &config, "--kind", "a_r"]);
    assert_eq!(out.status.code(), Some(2));
}

/// Collect every key path of a JSON value, with array items collapsed.
fn key_paths(value: &serde_json::Value, prefix: &str, out: &mut Vec<String>) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let path = format!("{prefix}/{k}");
                out.push(path.clone());
                key_paths(v, &path, out);
            }
        }
        serde_json::Value::Array(items) => {
            if let Some(first) = items.first() {
                key_paths(first, &format!("{prefix}[]"), out);
            }
        }
        _ => {}
    }
}

#[test]
fn report_merges_summaries_with_identical_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let fam2 = FAM1.replace(
        "[0.8, 1.2, 1, 1.5, 1.1, 0.9]",
        "[0.8, 1.1, 1, 1.5, 1.1, 0.7]",
    );
    let c1 = write(dir.path(), "f1.json", FAM1);
    let c2 = write(dir.path(), "f2.json", &fam2);
    let s1 = dir.path().join("s1.json");
    let s2 = dir.path().join("s2.json");
    for (c, s) in [(&c1, &s1), (&c2, &s2)] {
        let out = run(&["mc", "--config", c, "--out", s.to_str().unwrap()]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let merged_path = dir.path().join("merged.json");
    let out = run(&[
        "report",
        "--inputs",
        s1.to_str().unwrap(),
        s2.to_str().unwrap(),
        "--out",
        merged_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = stdout(&out);
    assert!(table.contains("u. whisker"));
    assert!(table.contains("abs 0.95"));

    let merged: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&merged_path).unwrap()).unwrap();
    let blocks = merged["blocks"].as_array().unwrap();
    assert_eq!(blocks.len(), 2);
    let mut schema_a = Vec::new();
    let mut schema_b = Vec::new();
    key_paths(&blocks[0]["summary"], "", &mut schema_a);
    key_paths(&blocks[1]["summary"], "", &mut schema_b);
    assert_eq!(schema_a, schema_b, "summary blocks diverge in schema");
}

#[test]
fn check_theory_seed_requirement_and_failure_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // no master_seed anywhere: --check-theory must refuse
    let unseeded = write(
        dir.path(),
        "unseeded.json",
        r#"{
            "model": {"period": 6, "coeffs": [0.8, 1.1, 1, 1.5, 1.1, 0.7]},
            "innovation": {"law": "gaussian", "sd": 1.0, "m": 0, "modulated": true},
            "n_cycles": 5,
            "replications": 300
        }"#,
    );
    let out = run(&["mc", "--config", &unseeded, "--check-theory"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    // far from the asymptotic regime: the KS gate must trip with exit 4
    let out = run(&[
        "mc",
        "--config",
        &unseeded,
        "--check-theory",
        "--seed",
        "3",
        "--draws",
        "300",
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    let report = stdout(&out);
    assert!(report.contains("\"all_pass\": false"), "{report}");

    // the same gate passes in the regime the theory describes; n = 40 keeps
    // the finite-n offset of the phi laws well under the critical value
    let seeded = write(
        dir.path(),
        "seeded.json",
        &FAM1
            .replace("\"replications\": 60", "\"replications\": 1500")
            .replace("\"n_cycles\": 20", "\"n_cycles\": 40"),
    );
    let out = run(&[
        "mc",
        "--config",
        &seeded,
        "--check-theory",
        "--draws",
        "1500",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn estimate_diagnostics_requires_innovation_column() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(
        dir.path(),
        "bare.csv",
        "k,x,u\n0,1.0,\n1,2.0,\n2,6.0,\n3,12.0,\n4,36.0,\n",
    );
    let out = run(&[
        "estimate",
        "--input",
        &csv,
        "--period",
        "2",
        "--diagnostics",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // without diagnostics the same file estimates fine
    let out = run(&["estimate", "--input", &csv, "--period", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["a_hat"][0].as_f64().unwrap(), 2.0);
    assert_eq!(report["a_hat"][1].as_f64().unwrap(), 3.0);
    assert!(report.get("c_r").is_none() || report["c_r"].is_null());
}
