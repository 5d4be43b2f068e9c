use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn preset(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../presets")
        .join(format!("{name}.json"))
}

fn preset_doc(name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(preset(name)).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, doc: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(doc).unwrap()).unwrap();
    path
}

/// Runs the binary inside `cwd` with its own cache directory.
fn run(cwd: &Path, cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bjj-sim"))
        .args(args)
        .current_dir(cwd)
        .env("BJJ_CACHE_DIR", cache)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_rabi() -> Value {
    let mut doc = preset_doc("fig1");
    doc["run"]["z0"] = json!([0.2, 0.45]);
    doc["run"]["periods"] = json!(3);
    doc
}

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn manifest(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{name}_manifest.json"))).unwrap()).unwrap()
}

#[test]
fn validate_prints_and_writes_nothing() {
    let tmp = TempDir::new().unwrap();
    let cache = tmp.path().join("cache");
    let o = run(tmp.path(), &cache, &["validate", "--config", preset("fig1").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let resolved: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(resolved["trap"]["primary_depth"].as_f64().unwrap() > 0.0);
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);

    let o = run(tmp.path(), &cache, &["validate", "--print-schema"]);
    assert_eq!(code(&o), 0);
    let schema: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(schema.get("trap").is_some() || schema.to_string().contains("scattering_length"));
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn usage_and_config_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    let cache = tmp.path().join("cache");
    let fig1 = preset("fig1");
    let fig1 = fig1.to_str().unwrap();
    for args in [
        vec!["frobnicate"],
        vec!["rabi", "--config", fig1, "--bogus"],
        vec!["validate"],
        vec!["rabi"],
    ] {
        let o = run(tmp.path(), &cache, &args);
        assert_eq!(code(&o), 1, "{args:?}: {}", stderr(&o));
    }

    let mut doc = preset_doc("fig1");
    doc["trap"]["scattering_length"] = json!({"value": 1, "unit": "meter"});
    let bad = write_config(tmp.path(), "bad_unit.json", &doc);
    let o = run(tmp.path(), &cache, &["validate", "--config", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("meter"), "{}", stderr(&o));

    let mut doc = preset_doc("fig1");
    doc["run"]["bogus_key"] = json!(3);
    let bad = write_config(tmp.path(), "bad_key.json", &doc);
    let o = run(tmp.path(), &cache, &["rabi", "--config", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("bogus_key"), "{}", stderr(&o));

    // preset for a different scenario
    let o = run(tmp.path(), &cache, &["rabi", "--config", preset("fig3").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("mqst"), "{}", stderr(&o));
}

#[test]
fn numerical_failure_exits_two() {
    let tmp = TempDir::new().unwrap();
    let mut doc = small_rabi();
    doc["run"].as_object_mut().unwrap().remove("scenario");
    doc["run"].as_object_mut().unwrap().remove("target_rabi_frequency");
    doc["trap"]["scattering_length"] = json!({"value": -300, "unit": "a0"});
    let cfg = write_config(tmp.path(), "collapse.json", &doc);
    let out = tmp.path().join("out");
    let o = run(
        tmp.path(),
        &tmp.path().join("cache"),
        &["stationary", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()],
    );
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn failed_point_is_tagged_not_dropped() {
    let tmp = TempDir::new().unwrap();
    let mut doc = small_rabi();
    doc["run"].as_object_mut().unwrap().remove("scenario");
    doc["run"]["gpe_time_step"] = json!({"value": 0.2, "unit": "ms"});
    let cfg = write_config(tmp.path(), "coarse.json", &doc);
    let out = tmp.path().join("out");
    let o = run(
        tmp.path(),
        &tmp.path().join("cache"),
        &["evolve-gpe", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(out.join("evolve_gpe.csv")).unwrap();
    let col = reader.headers().unwrap().iter().position(|h| h == "error").unwrap();
    let rows: Vec<_> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| !r[col].is_empty()));
}

#[test]
fn sweep_lambda_preset_end_to_end() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = run(
        tmp.path(),
        &tmp.path().join("cache"),
        &["sweep-lambda", "--config", preset("fig2a").to_str().unwrap(), "--out-dir", out.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = manifest(&out, "sweep_lambda");
    assert_eq!(m["preset"], "fig2a");
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    for f in m["outputs"].as_array().unwrap() {
        assert!(out.join(f.as_str().unwrap()).exists());
    }
    let mut reader = csv::Reader::from_path(out.join("sweep_lambda.csv")).unwrap();
    let n = reader.records().count();
    // every (Λ, model) pair has a row
    assert_eq!(n, 9 * 4);
}

#[test]
fn thread_count_does_not_change_output() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "rabi.json", &small_rabi());
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let out = tmp.path().join(format!("out{threads}"));
        let o = run(
            tmp.path(),
            &tmp.path().join("cache"),
            &[
                "rabi", "--threads", threads, "--no-cache",
                "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap(),
            ],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert_eq!(manifest(&out, "rabi")["threads"], threads.parse::<u64>().unwrap());
        outputs.push(csvs(&out));
    }
    assert!(!outputs[0].is_empty());
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn cache_replays_and_recovers() {
    let tmp = TempDir::new().unwrap();
    let cache = tmp.path().join("cache");
    let cfg = write_config(tmp.path(), "rabi.json", &small_rabi());
    let go = |tag: &str, extra: &[&str]| {
        let out = tmp.path().join(tag);
        let mut args = vec!["rabi", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        let o = run(tmp.path(), &cache, &args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        (csvs(&out), manifest(&out, "rabi"), stderr(&o))
    };

    let (first, m1, _) = go("first", &[]);
    assert!(m1["cache"]["misses"].as_u64().unwrap() > 0);
    let (second, m2, _) = go("second", &[]);
    assert_eq!(m2["cache"]["misses"], 0);
    assert!(m2["cache"]["hits"].as_u64().unwrap() > 0);
    let (t1, t2) = (m1["timings_s"]["stationary"].as_f64().unwrap(), m2["timings_s"]["stationary"].as_f64().unwrap());
    assert!(t2 < 0.05 * t1.max(1e-3), "{t2} vs {t1}");
    assert_eq!(first, second);

    for e in fs::read_dir(&cache).unwrap() {
        let p = e.unwrap().path();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() / 2]).unwrap();
    }
    let (third, m3, err) = go("third", &[]);
    assert!(m3["cache"]["misses"].as_u64().unwrap() > 0);
    assert!(!m3["warnings"].as_array().unwrap().is_empty());
    assert!(err.contains("warning"), "{err}");
    assert_eq!(first, third);

    let (fourth, m4, _) = go("fourth", &["--no-cache"]);
    assert!(m4["cache"].is_null());
    assert_eq!(first, fourth);
}
