use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use slotprice_core::solver::PricingPolicy;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_slotprice"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

/// Writes `config` to `dir/config.json` and runs `command` with it.
fn run_config(dir: &Path, command: &str, config: &Value, extra: &[&str]) -> Output {
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    let out = dir.join("out");
    let mut args = vec![command, "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn report(path: &Path) -> Vec<(String, String)> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config_digest="));
    assert_eq!(lines.next(), Some("key,value"));
    lines
        .map(|l| {
            let (k, v) = l.split_once(',').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn field(rows: &[(String, String)], key: &str) -> String {
    rows.iter()
        .find(|(k, _)| k == key)
        .unwrap_or_else(|| panic!("no `{key}` in report"))
        .1
        .clone()
}

fn read_policy(path: &Path) -> PricingPolicy {
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert!(doc["meta"]["config_digest"].is_string());
    doc.as_object_mut().unwrap().remove("meta");
    PricingPolicy::from_json(&doc.to_string()).unwrap()
}

fn two_values() -> Value {
    json!({"atoms": [[1, 1.0, 0, 0.5], [1, 2.0, 0, 0.5]]})
}

#[test]
fn solve_single_step() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({"distribution": two_values(), "mode": "finite", "horizon": 1});
    let o = run_config(dir.path(), "solve", &config, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    let p = read_policy(&out.join("policy.json"));
    assert_eq!(p.price(0, 0, 0), 2.0);
    let u = fs::read_to_string(out.join("values_u.csv")).unwrap();
    assert!(u.lines().nth(1) == Some("t,s,U"), "{u}");
    assert!(u.contains("\n0,0,1\n"), "{u}");
    let rows = report(&out.join("report.csv"));
    assert_eq!(field(&rows, "monotone"), "true");
    assert_eq!(field(&rows, "value_0_0"), "1");
}

#[test]
fn coarsest_grid_offers_zero_or_the_cap() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "distribution": fixtures().join("uniform.json"),
        "mode": "grid", "horizon": 3, "eta": 1.0
    });
    let o = run_config(dir.path(), "solve", &config, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let p = read_policy(&dir.path().join("out/policy.json"));
    assert_eq!(p.price_set(), &[0.0, 1.0]);
    assert!(p.prices().iter().all(|&x| x == 0.0 || x == 1.0 || x.is_infinite()));
}

#[test]
fn infinite_mode_reports_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "distribution": two_values(), "mode": "infinite", "discount": 0.9, "epsilon": 0.01
    });
    let o = run_config(dir.path(), "solve", &config, &[]);
    assert_eq!(o.status.code(), Some(0));
    let rows = report(&dir.path().join("out/report.csv"));
    // 0.9^T <= 0.01 * 0.1 / 2.
    let expected = (0.0005f64.ln() / 0.9f64.ln()).ceil();
    assert_eq!(field(&rows, "truncation_horizon"), expected.to_string());
    let p = read_policy(&dir.path().join("out/policy.json"));
    assert!(p.is_stationary());
}

#[test]
fn simulate_without_traces() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({"distribution": two_values(), "mode": "finite", "horizon": 4});
    let o = run_config(dir.path(), "simulate", &config, &["--traces", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let out = dir.path().join("out");
    assert!(!out.join("traces").exists());
    let rows = report(&out.join("report.csv"));
    assert_eq!(field(&rows, "coverage"), "1");
    assert_eq!(field(&rows, "traces"), "0");
}

#[test]
fn simulate_deterministic_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "distribution": {"atoms": [[1, 1.0, 0, 1.0]]},
        "mode": "finite", "horizon": 10, "traces": 20
    });
    let o = run_config(dir.path(), "simulate", &config, &[]);
    assert_eq!(o.status.code(), Some(0));
    let out = dir.path().join("out");
    let rows = report(&out.join("report.csv"));
    assert_eq!(field(&rows, "coverage"), "1");
    assert_eq!(field(&rows, "expectation"), "10");
    let trace = fs::read_to_string(out.join("traces/trace_00019.csv")).unwrap();
    assert_eq!(trace.lines().count(), 12);
    assert!(!out.join("traces/trace_00020.csv").exists());
}

fn non_monotone() -> Value {
    json!({"atoms": [
        [1, 1.0, 0, 0.142857142857],
        [1, 2.0, 0, 0.571428571429],
        [2, 1.0, 0, 0.142857142857],
        [2, 1.0, 2, 0.142857142857]
    ]})
}

#[test]
fn non_monotone_optimum_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({"distribution": non_monotone(), "mode": "finite", "horizon": 2});
    let o = run_config(dir.path(), "check", &config, &[]);
    assert_eq!(o.status.code(), Some(2));
    let rows = report(&dir.path().join("out/report.csv"));
    assert_eq!(field(&rows, "assumption1"), "fails");
    assert_eq!(field(&rows, "monotone"), "false");
    let o = run_config(dir.path(), "solve", &config, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(dir.path().join("out/policy.json").exists());
}

#[test]
fn simulate_refuses_non_monotone_policy() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({"distribution": non_monotone(), "mode": "finite", "horizon": 2, "traces": 10});
    run_config(dir.path(), "solve", &config, &[]);
    let policy = dir.path().join("policy.json");
    fs::rename(dir.path().join("out/policy.json"), &policy).unwrap();
    let o = run_config(dir.path(), "simulate", &config, &["--policy", policy.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--project"));
    let o = run_config(
        dir.path(),
        "simulate",
        &config,
        &["--policy", policy.to_str().unwrap(), "--project"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = report(&dir.path().join("out/report.csv"));
    assert_eq!(field(&rows, "projected"), "true");
}

#[test]
fn zero_noise_pipeline_has_no_gap() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "distribution": fixtures().join("two_lengths.json"),
        "mode": "finite", "horizon": 5, "traces": 30
    });
    let o = run_config(dir.path(), "pipeline", &config, &["--zero-noise"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let gaps = fs::read_to_string(dir.path().join("out/gaps.csv")).unwrap();
    let rows: Vec<&str> = gaps.lines().skip(2).collect();
    assert_eq!(rows.len(), 30);
    assert!(rows.iter().all(|r| r.split(',').nth(3) == Some("0")), "{gaps}");
}

#[test]
fn pipeline_states_required_samples() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "distribution": fixtures().join("two_lengths.json"),
        "mode": "finite", "horizon": 5, "learn_epsilon": 0.01
    });
    let o = run_config(dir.path(), "pipeline", &config, &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    // 24 * 5 * 4^4 * ln(8 * 4 / 0.05) / 0.01^2
    let n = (24.0 * 5.0 * 256.0 * (640.0f64).ln() / 1e-4).ceil();
    assert!(err.contains(&format!("{n} probes per pair")), "{err}");

    let o = run_config(dir.path(), "pipeline", &config, &["--samples", "200", "--traces", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = report(&dir.path().join("out/report.csv"));
    assert_eq!(field(&rows, "samples_per_pair"), "200");
    let implied: f64 = field(&rows, "implied_epsilon").parse().unwrap();
    let expected = (24.0 * 5.0 * 256.0 * 640.0f64.ln() / 200.0).sqrt();
    assert!((implied - expected).abs() < 1e-9 * expected);
}

#[test]
fn learn_reports_error_bound() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "distribution": fixtures().join("two_lengths.json"),
        "mode": "finite", "horizon": 1, "delta": 0.1, "learn_epsilon": 0.1
    });
    let o = run_config(dir.path(), "learn", &config, &[]);
    assert_eq!(o.status.code(), Some(0));
    let rows = report(&dir.path().join("out/report.csv"));
    // 1.5 ln(2 * 4 / 0.1) / 0.1^2
    let n = (1.5 * 80.0f64.ln() / 0.01).ceil();
    assert_eq!(field(&rows, "samples_per_pair"), n.to_string());
    assert_eq!(field(&rows, "within"), "true");
}

#[test]
fn config_errors_exit_one_with_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\"distribution\": \"q.json\",\n \"mode\": \"finite\",\n \"horizon\": -3}").unwrap();
    let o = run(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("`horizon`") && err.contains("line 3"), "{err}");

    let config = json!({"distribution": two_values(), "mode": "finite", "horizon": 2, "eta": 0.1});
    let o = run_config(dir.path(), "solve", &config, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`eta`"));

    let o = run(&["solve", "--config", path.to_str().unwrap(), "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "distribution": two_values(), "mode": "finite", "horizon": 3, "traces": 4, "seed": 1
    });
    run_config(dir.path(), "simulate", &config, &["--traces", "2", "--seed", "9", "--delta", "0.2"]);
    let rows = report(&dir.path().join("out/report.csv"));
    assert_eq!(field(&rows, "traces"), "2");
    assert_eq!(field(&rows, "delta"), "0.2");
    let text = fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    assert!(text.lines().next().unwrap().ends_with("seed=9"));
}

fn collect(dir: &Path, root: &Path, files: &mut Vec<(PathBuf, Vec<u8>)>) {
    let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect(&p, root, files);
        } else {
            files.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let fx = fixtures();
    let cases = [
        ("solve", "finite.json", vec![]),
        ("solve", "infinite.json", vec![]),
        ("solve", "grid.json", vec![]),
        ("check", "geometric_check.json", vec![]),
        ("simulate", "finite.json", vec!["--traces", "20"]),
        ("simulate", "grid.json", vec!["--traces", "20"]),
        ("learn", "pipeline.json", vec![]),
        ("pipeline", "pipeline.json", vec!["--samples", "500", "--traces", "20"]),
    ];
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("geometric_check.json"),
        json!({"distribution": fx.join("geometric.json"), "mode": "finite", "horizon": 4})
            .to_string(),
    )
    .unwrap();
    for (i, (command, config, extra)) in cases.iter().enumerate() {
        let config = if fx.join(config).exists() { fx.join(config) } else { dir.path().join(config) };
        let mut outputs = Vec::new();
        for attempt in 0..2 {
            let out = dir.path().join(format!("{i}-{attempt}"));
            let mut args = vec![*command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
            args.extend(extra.iter().copied());
            let o = run(&args);
            assert_eq!(o.status.code(), Some(0), "{command}: {}", String::from_utf8_lossy(&o.stderr));
            let mut files = Vec::new();
            collect(&out, &out, &mut files);
            assert!(!files.is_empty());
            outputs.push(files);
        }
        assert_eq!(outputs[0], outputs[1], "{command} {config:?}");
    }
}
