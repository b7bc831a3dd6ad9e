use std::fs::File;
use std::io::BufReader;

use fairtoss::client::{EndpointConfig, LlmClient, MockEndpoint, MockReply};
use fairtoss::experiment::{
    build_responder, run_few_shot, run_one_shot, ExperimentConfig, ExperimentError, LiveResponder,
};
use fairtoss::sources::{SourceKind, SourceSpec};
use fairtoss::transcript::read_transcript;
use fairtoss::{PromptId, SamplingMode};

fn live(mock: &MockEndpoint) -> (SourceSpec, LiveResponder) {
    let mut cfg = EndpointConfig::new(mock.base_url(), "mock-gpt");
    cfg.retry_backoff_base_ms = 1;
    cfg.max_retries = 1;
    let responder = LiveResponder::new(LlmClient::with_api_key(cfg.clone(), "k").unwrap());
    (SourceSpec::new(SourceKind::Live(cfg)), responder)
}

fn config(spec: SourceSpec, mode: SamplingMode) -> ExperimentConfig {
    let mut c = ExperimentConfig::new("pipeline", spec);
    c.mode = mode;
    c.inter_call_delay_ms = 0;
    c
}

/// Interleaves two per-prompt reply lists into call order.
fn interleave(q1: &[String], q2: &[String]) -> Vec<String> {
    q1.iter().zip(q2).flat_map(|(a, b)| [a.clone(), b.clone()]).collect()
}

fn one_shot_replies(yes: usize, no: usize, invalid: usize) -> Vec<String> {
    let mut v = Vec::new();
    v.extend(std::iter::repeat_n("Yes.".to_string(), yes));
    v.extend(std::iter::repeat_n("no".to_string(), no));
    v.extend(std::iter::repeat_n("I cannot choose.".to_string(), invalid));
    // Spread them so the sequence is not one block per label.
    let n = v.len();
    (0..n).map(|i| v[(i * 37) % n].clone()).collect()
}

#[test]
fn one_shot_counts_from_scripted_endpoint() {
    let q1 = one_shot_replies(87, 0, 13);
    let q2 = one_shot_replies(43, 57, 0);
    let mock = MockEndpoint::with_contents(interleave(&q1, &q2)).unwrap();
    let (spec, mut responder) = live(&mock);
    let cfg = config(spec, SamplingMode::OneShot);
    let mut transcript = Vec::new();
    let res = run_one_shot(&cfg, &mut responder, &mut transcript).unwrap();
    assert_eq!(mock.request_count(), 200);
    assert!(!mock.overrun());

    let a = res.prompt(&PromptId::Q1).unwrap();
    assert_eq!((a.yes_count, a.no_count, a.invalid_count), (87, 0, 13));
    assert_eq!(a.uniformity.unwrap().statistic, 87.0);
    let m = a.markov.as_ref().unwrap();
    assert!(m.degenerate);
    assert_eq!(m.counts.n_yy, 86);

    let b = res.prompt(&PromptId::Q2).unwrap();
    let u = b.uniformity.unwrap();
    assert!((u.statistic - 1.96).abs() < 1e-12);
    assert!(!u.reject_null);

    let records = read_transcript(transcript.as_slice()).unwrap();
    assert_eq!(records.len(), 200);
    assert!(records.iter().all(|r| r.model_id == "mock-gpt"));
    let bodies = mock.requests();
    assert_eq!(bodies[0].json()["messages"][0]["content"], "yes or no");
    assert_eq!(bodies[1].json()["messages"][0]["content"], "Answer randomly, yes or no");
}

fn batch(yes: usize, len: usize) -> String {
    (0..len)
        .map(|i| if i < yes { "yes" } else { "no" })
        .collect::<Vec<_>>()
        .join(", ")
}

#[test]
fn few_shot_pools_and_flags() {
    let yes_per_batch = [53, 53, 53, 53, 53, 53, 53, 52, 52, 52];
    let q1: Vec<String> = yes_per_batch.iter().map(|&y| batch(y, 100)).collect();
    let mut q2: Vec<String> = (0..10).map(|_| batch(50, 100)).collect();
    q2[3] = batch(50, 97);
    let mock = MockEndpoint::with_contents(interleave(&q1, &q2)).unwrap();
    let (spec, mut responder) = live(&mock);
    let cfg = config(spec, SamplingMode::FewShot);
    let mut transcript = Vec::new();
    let res = run_few_shot(&cfg, &mut responder, &mut transcript).unwrap();
    assert_eq!(mock.request_count(), 20);

    let a = res.prompt(&PromptId::Q1).unwrap();
    assert_eq!((a.yes_count, a.no_count), (527, 473));
    let u = a.uniformity.unwrap();
    assert!((u.statistic - 2.916).abs() < 1e-9);
    assert!(!u.reject_null);
    assert_eq!(a.batches.len(), 10);

    let b = res.prompt(&PromptId::Q2).unwrap();
    assert!(b.batches[3].length_mismatch);
    assert_eq!(b.batches[3].len(), 97);
    assert_eq!(b.batches.iter().filter(|x| x.length_mismatch).count(), 1);
    assert_eq!(res.warnings.len(), 1);

    let prompt = mock.requests()[0].json()["messages"][0]["content"].clone();
    assert_eq!(
        prompt,
        "Respond with exactly 100 comma-separated answers, each either yes or no. yes or no"
    );
    let records = read_transcript(transcript.as_slice()).unwrap();
    assert_eq!(records.len(), 1997);
    assert_eq!(records[0].prompt_text, prompt.as_str().unwrap());
}

#[test]
fn transport_failure_aborts_with_partial_transcript() {
    let mut script: Vec<MockReply> = (0..7).map(|_| MockReply::content("yes")).collect();
    script.extend(vec![MockReply::status(503); 2]);
    let mock = MockEndpoint::start(script).unwrap();
    let (spec, mut responder) = live(&mock);
    let cfg = config(spec, SamplingMode::OneShot);
    let mut transcript = Vec::new();
    match run_one_shot(&cfg, &mut responder, &mut transcript) {
        Err(ExperimentError::Aborted { completed_calls, .. }) => assert_eq!(completed_calls, 7),
        other => panic!("{other:?}"),
    }
    assert_eq!(read_transcript(transcript.as_slice()).unwrap().len(), 7);
}

#[test]
fn replaying_a_transcript_reproduces_the_analysis() {
    let q1 = one_shot_replies(40, 55, 5);
    let q2 = one_shot_replies(61, 39, 0);
    let mock = MockEndpoint::with_contents(interleave(&q1, &q2)).unwrap();
    let (spec, mut responder) = live(&mock);
    let cfg = config(spec, SamplingMode::OneShot);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.jsonl");
    let first = run_one_shot(&cfg, &mut responder, &mut File::create(&path).unwrap()).unwrap();

    let replay_spec = SourceSpec::new(SourceKind::Replay {
        transcript: path.clone(),
        prompt_id: None,
        mode: None,
    });
    let mut replay = build_responder(&replay_spec, None).unwrap();
    let cfg2 = config(replay_spec, SamplingMode::OneShot);
    let second = run_one_shot(&cfg2, replay.as_mut(), &mut std::io::sink()).unwrap();
    assert_eq!(first.prompts, second.prompts);

    let records = read_transcript(BufReader::new(File::open(&path).unwrap())).unwrap();
    for r in &records {
        let expect = if r.call_index % 2 == 0 { PromptId::Q1 } else { PromptId::Q2 };
        assert_eq!(r.prompt_id, expect);
    }
}

#[test]
fn missing_api_key_fails_before_any_call() {
    let mock = MockEndpoint::with_contents(["yes"]).unwrap();
    let mut cfg = EndpointConfig::new(mock.base_url(), "m");
    cfg.api_key_env_var = "FAIRTOSS_TEST_KEY_THAT_IS_NOT_SET".into();
    let spec = SourceSpec::new(SourceKind::Live(cfg));
    assert!(matches!(
        build_responder(&spec, None),
        Err(ExperimentError::Client(_))
    ));
    assert_eq!(mock.request_count(), 0);
}
