use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fairtoss::client::{MockEndpoint, MockReply};
use tempfile::TempDir;

const KEY_VAR: &str = "FAIRTOSS_CLI_TEST_KEY";

fn fairtoss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairtoss"))
        .args(args)
        .env(KEY_VAR, "test-key")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn live_config(dir: &TempDir, base_url: &str, extra: &str) -> PathBuf {
    let path = dir.path().join("config.json");
    let json = format!(
        r#"{{
  "experiment_id": "cli",
  "source": {{
    "kind": "live",
    "base_url": "{base_url}",
    "model_id": "mock-model",
    "api_key_env_var": "{KEY_VAR}",
    "max_retries": 1,
    "retry_backoff_base_ms": 1
  }},
  "inter_call_delay_ms": 0{extra}
}}"#
    );
    fs::write(&path, json).unwrap();
    path
}

fn boltzmann_config(dir: &TempDir) -> PathBuf {
    let path = dir.path().join("boltzmann.json");
    fs::write(
        &path,
        r#"{"experiment_id": "synthetic", "source": {"kind": "boltzmann", "logits": [1.0, 0.0], "temperature": 1.0, "seed": 11}, "inter_call_delay_ms": 0, "samples_per_prompt": 50}"#,
    )
    .unwrap();
    path
}

#[test]
fn dry_run_prints_schedule_without_calls() {
    let dir = TempDir::new().unwrap();
    let mock = MockEndpoint::with_contents(["yes"]).unwrap();
    let cfg = dir.path().join("defaults.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"experiment_id": "d", "source": {{"kind": "live", "base_url": "{}", "model_id": "m", "api_key_env_var": "{KEY_VAR}"}}}}"#,
            mock.base_url()
        ),
    )
    .unwrap();
    let out = fairtoss(&["collect", "--config", p(&cfg), "--dry-run"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("200 calls, alternating Q1/Q2, 1000ms delay"));

    let out = fairtoss(&["collect", "--config", p(&cfg), "--dry-run", "--mode", "few-shot"]);
    assert!(stdout(&out).contains("20 calls, alternating Q1/Q2, 1000ms delay, 100 decisions per call"));
    assert_eq!(mock.request_count(), 0);
}

#[test]
fn collect_then_analyze() {
    let dir = TempDir::new().unwrap();
    // Q1 always "Yes", Q2 43 yes / 57 no.
    let replies: Vec<String> = (0..200)
        .map(|i| {
            if i % 2 == 0 {
                "Yes".to_string()
            } else if (i / 2) < 43 {
                "yes".into()
            } else {
                "No.".into()
            }
        })
        .collect();
    let mock = MockEndpoint::with_contents(replies).unwrap();
    let cfg = live_config(&dir, mock.base_url(), "");
    let transcript = dir.path().join("run.jsonl");
    let out = fairtoss(&["collect", "--config", p(&cfg), "--out", p(&transcript)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(mock.request_count(), 200);
    assert_eq!(fs::read_to_string(&transcript).unwrap().lines().count(), 200);

    let report = dir.path().join("report.csv");
    let out = fairtoss(&["analyze", "--in", p(&transcript), "--out", p(&report), "--windows", "3"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("| Q2 | one-shot | 43 | 57 | 0 | 1.96"), "{text}");
    assert!(text.contains("NotReject"));
    assert!(text.contains("Degenerate"));
    let csv = fs::read_to_string(&report).unwrap();
    assert!(csv.contains("# recency"));
    let recency_rows: Vec<&str> = csv
        .split("# recency")
        .nth(1)
        .unwrap()
        .lines()
        .take_while(|l| !l.starts_with('#'))
        .filter(|l| l.starts_with("cli,Q1,"))
        .collect();
    assert_eq!(recency_rows.len(), 3, "{csv}");

    let strict = fairtoss(&["analyze", "--in", p(&transcript), "--out", p(&report), "--strict"]);
    assert_eq!(code(&strict), 1);
}

#[test]
fn transport_failure_exits_3_and_keeps_partial_transcript() {
    let dir = TempDir::new().unwrap();
    let mut script: Vec<MockReply> = (0..5).map(|_| MockReply::content("no")).collect();
    script.extend(vec![MockReply::status(500); 2]);
    let mock = MockEndpoint::start(script).unwrap();
    let cfg = live_config(&dir, mock.base_url(), "");
    let transcript = dir.path().join("partial.jsonl");
    let out = fairtoss(&["collect", "--config", p(&cfg), "--out", p(&transcript)]);
    assert_eq!(code(&out), 3);
    assert_eq!(fs::read_to_string(&transcript).unwrap().lines().count(), 5);
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(code(&fairtoss(&["collect", "--config", p(&missing), "--dry-run"])), 2);
    assert_eq!(code(&fairtoss(&["collect"])), 2);
    assert_eq!(code(&fairtoss(&["frobnicate"])), 2);

    let mock = MockEndpoint::with_contents(["yes"]).unwrap();
    let cfg = live_config(&dir, mock.base_url(), "");
    let out = fairtoss(&["collect", "--config", p(&cfg), "--dry-run", "--temperature", "2.5"]);
    assert_eq!(code(&out), 2);
    assert_eq!(mock.request_count(), 0);

    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let out = fairtoss(&["analyze", "--in", p(&empty), "--out", p(&dir.path().join("r"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn flags_override_config() {
    let dir = TempDir::new().unwrap();
    let mock = MockEndpoint::with_contents(["yes"]).unwrap();
    let cfg = live_config(&dir, mock.base_url(), r#", "samples_per_prompt": 30"#);
    let out = fairtoss(&["collect", "--config", p(&cfg), "--dry-run"]);
    assert!(stdout(&out).contains("60 calls"));
    let out = fairtoss(&["collect", "--config", p(&cfg), "--dry-run", "--samples", "7", "--delay-ms", "5"]);
    assert!(stdout(&out).contains("14 calls, alternating Q1/Q2, 5ms delay"));
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for path in [&a, &b] {
        let out = fairtoss(&[
            "simulate", "--source", "boltzmann", "--z-yes", "0", "--z-no", "0", "--temperature", "1",
            "--n", "1000", "--seed", "7", "--out", p(path),
        ]);
        assert_eq!(code(&out), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let tokens: Vec<String> = fs::read_to_string(&a)
        .unwrap()
        .split_whitespace()
        .map(str::to_string)
        .collect();
    assert_eq!(tokens.len(), 1000);

    let report = dir.path().join("markov.csv");
    let out = fairtoss(&[
        "simulate", "--source", "markov", "--p-yy", "0.9", "--p-yn", "0.1", "--n", "1000", "--seed", "3",
        "--out", p(&dir.path().join("m.txt")), "--report", p(&report),
    ]);
    assert_eq!(code(&out), 0);
    let independence = stdout(&out)
        .split("### Independence (HP2)")
        .nth(1)
        .unwrap()
        .split("###")
        .next()
        .unwrap()
        .to_string();
    assert!(independence.contains("| Reject |"), "{independence}");

    let zero = fairtoss(&["simulate", "--source", "boltzmann", "--n", "0", "--out", p(&a)]);
    assert_eq!(code(&zero), 2);
    let bad = fairtoss(&["simulate", "--source", "markov", "--p-yy", "1.5", "--n", "10", "--out", p(&a)]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn compare_sequences() {
    let dir = TempDir::new().unwrap();
    let fair = dir.path().join("fair.txt");
    fairtoss(&["simulate", "--source", "boltzmann", "--n", "1000", "--seed", "1", "--out", p(&fair)]);
    let alt = dir.path().join("alt.txt");
    fs::write(&alt, "1 0 ".repeat(500)).unwrap();
    let report = dir.path().join("cmp.csv");

    let out = fairtoss(&["compare", "--a", p(&fair), "--b", p(&fair), "--out", p(&report)]);
    assert_eq!(code(&out), 0);
    assert!(!stdout(&out).contains("| Reject |"));

    let out = fairtoss(&["compare", "--a", p(&alt), "--b", p(&fair), "--out", p(&report)]);
    assert_eq!(code(&out), 0);
    let w1 = stdout(&out).lines().find(|l| l.starts_with("| 1 |")).unwrap().to_string();
    assert!(w1.contains("Reject") && !w1.contains("NotReject"), "{w1}");

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "1 0 1\n0 x 1\n").unwrap();
    let out = fairtoss(&["compare", "--a", p(&fair), "--b", p(&bad), "--out", p(&report)]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("\"x\""), "{err}");

    let short = dir.path().join("short.txt");
    fs::write(&short, "1").unwrap();
    let out = fairtoss(&["compare", "--a", p(&short), "--b", p(&fair), "--out", p(&report)]);
    assert_eq!(code(&out), 2);
}

fn wet_fixture(dir: &TempDir) -> PathBuf {
    let mut data = String::new();
    for i in 0..150 {
        let body = format!("page {i} says yes and no and no");
        data.push_str(&format!(
            "WARC/1.0\r\nWARC-Type: conversion\r\nWARC-Record-ID: <urn:uuid:{i}>\r\nContent-Length: {}\r\n\r\n{body}\r\n\r\n",
            body.len()
        ));
    }
    let path = dir.path().join("pages.warc.wet");
    fs::write(&path, data).unwrap();
    path
}

#[test]
fn crawl_modes_and_sampling() {
    let dir = TempDir::new().unwrap();
    let wet = wet_fixture(&dir);
    let pages = dir.path().join("pages.csv");
    let summary = dir.path().join("summary.csv");
    let out = fairtoss(&[
        "crawl", "--wet", p(&wet), "--truncate", "1000", "--sample", "100", "--out", p(&pages),
        "--summary", p(&summary),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(&pages).unwrap().lines().count(), 101);
    assert!(stdout(&out).contains("first 1000 characters"));
    assert!(fs::read_to_string(&summary).unwrap().contains("# crawl"));

    let out = fairtoss(&["crawl", "--wet", p(&wet), "--out", p(&pages)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("full pages"));
    assert!(stdout(&out).contains("| 150 | 150 | 300 |"), "{}", stdout(&out));

    let missing = dir.path().join("missing.wet.gz");
    assert_eq!(code(&fairtoss(&["crawl", "--wet", p(&missing), "--out", p(&pages)])), 3);
}

#[test]
fn sweep_and_report() {
    let dir = TempDir::new().unwrap();
    let cfg = boltzmann_config(&dir);
    let transcript = dir.path().join("sweep.jsonl");
    let table = dir.path().join("sweep.csv");
    let plot = dir.path().join("plot.csv");
    let args = [
        "sweep", "--config", p(&cfg), "--temperatures", "0.5,1,2", "--out", p(&transcript),
        "--report", p(&table), "--plot", p(&plot),
    ];
    let out = fairtoss(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("## Temperature sweep"));
    assert_eq!(fs::read_to_string(&transcript).unwrap().lines().count(), 300);
    let series = fs::read_to_string(dir.path().join("plot-Q1.csv")).unwrap();
    assert_eq!(series.lines().count(), 4);
    assert!(series.starts_with("temperature,p_yes"));

    let first = fs::read_to_string(&table).unwrap();
    fairtoss(&args);
    assert_eq!(fs::read_to_string(&table).unwrap(), first);

    let out = fairtoss(&["sweep", "--config", p(&cfg), "--temperatures", "1,2.5", "--out", p(&transcript)]);
    assert_eq!(code(&out), 2);

    let single = dir.path().join("single.jsonl");
    assert_eq!(code(&fairtoss(&["collect", "--config", p(&cfg), "--out", p(&single)])), 0);
    let md = dir.path().join("all.md");
    let out = fairtoss(&["report", "--in", p(&single), p(&transcript), "--out", p(&md)]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&md).unwrap();
    assert_eq!(text.matches("## Experiment").count(), 2);
}
