use std::time::Duration;

use fairtoss::client::{
    ClientError, CompletionRequest, EndpointConfig, LlmClient, MockEndpoint, MockReply,
};

fn client(endpoint: &MockEndpoint, retries: u32, backoff_ms: u64) -> LlmClient {
    let mut cfg = EndpointConfig::new(endpoint.base_url(), "mock-model");
    cfg.max_retries = retries;
    cfg.retry_backoff_base_ms = backoff_ms;
    cfg.timeout_ms = 5_000;
    LlmClient::with_api_key(cfg, "sk-test").unwrap()
}

#[test]
fn request_shape() {
    let mock = MockEndpoint::with_contents(["Yes."]).unwrap();
    let c = client(&mock, 0, 1);
    let out = c
        .complete(&CompletionRequest::new("yes or no", 0.7, 16))
        .unwrap();
    assert_eq!(out.raw_text, "Yes.");
    assert_eq!(out.retries, 0);

    let reqs = mock.requests();
    assert_eq!(reqs.len(), 1);
    assert_eq!(reqs[0].path, "/v1/chat/completions");
    assert_eq!(reqs[0].authorization.as_deref(), Some("Bearer sk-test"));
    let body = reqs[0].json();
    assert_eq!(body["model"], "mock-model");
    assert_eq!(body["temperature"], 0.7);
    assert_eq!(body["max_tokens"], 16);
    assert_eq!(body["messages"][0]["role"], "user");
    assert_eq!(body["messages"][0]["content"], "yes or no");
}

#[test]
fn rate_limits_back_off_exponentially() {
    let mock = MockEndpoint::start(vec![
        MockReply::status(429),
        MockReply::status(429),
        MockReply::status(503),
        MockReply::content("no"),
    ])
    .unwrap();
    let c = client(&mock, 3, 40);
    let out = c.complete(&CompletionRequest::new("q", 1.0, 16)).unwrap();
    assert_eq!(out.raw_text, "no");
    assert_eq!(out.retries, 3);

    let times: Vec<_> = mock.requests().iter().map(|r| r.received_at).collect();
    assert_eq!(times.len(), 4);
    for (k, pair) in times.windows(2).enumerate() {
        let gap = pair[1] - pair[0];
        let expected = Duration::from_millis(40 << k);
        assert!(gap >= expected, "gap {k}: {gap:?} < {expected:?}");
    }
}

#[test]
fn retries_exhausted() {
    let mock = MockEndpoint::start(vec![MockReply::status(500); 3]).unwrap();
    let c = client(&mock, 2, 1);
    match c.complete(&CompletionRequest::new("q", 1.0, 16)) {
        Err(ClientError::RetriesExhausted {
            attempts,
            last_status,
            ..
        }) => {
            assert_eq!(attempts, 3);
            assert_eq!(last_status, Some(500));
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(mock.request_count(), 3);
    assert!(!mock.overrun());
}

#[test]
fn client_errors_are_not_retried() {
    let mock = MockEndpoint::start(vec![MockReply::status(401), MockReply::content("yes")]).unwrap();
    let c = client(&mock, 3, 1);
    assert!(matches!(
        c.complete(&CompletionRequest::new("q", 1.0, 16)),
        Err(ClientError::Http { status: 401, .. })
    ));
    assert_eq!(mock.request_count(), 1);
}

#[test]
fn malformed_payload() {
    let mock = MockEndpoint::start(vec![MockReply::raw(200, "{\"choices\": []}")]).unwrap();
    let c = client(&mock, 0, 1);
    assert!(matches!(
        c.complete(&CompletionRequest::new("q", 1.0, 16)),
        Err(ClientError::BadPayload(_))
    ));
}

#[test]
fn hot_temperature_never_reaches_the_network() {
    let mock = MockEndpoint::with_contents(["yes"]).unwrap();
    let c = client(&mock, 0, 1);
    for t in [2.0001, 2.5, 10.0, -0.5] {
        assert!(matches!(
            c.complete(&CompletionRequest::new("q", t, 16)),
            Err(ClientError::InvalidTemperature(_))
        ));
    }
    assert_eq!(mock.request_count(), 0);
}

#[test]
fn timeout_counts_as_retryable() {
    let mock = MockEndpoint::start(vec![
        MockReply::content("yes").delayed(Duration::from_millis(600)),
        MockReply::content("no"),
    ])
    .unwrap();
    let mut cfg = EndpointConfig::new(mock.base_url(), "m");
    // The mock serves requests one at a time, so the retry waits out the
    // stalled reply before being answered; the timeout leaves room for that.
    cfg.timeout_ms = 400;
    cfg.max_retries = 1;
    cfg.retry_backoff_base_ms = 1;
    let c = LlmClient::with_api_key(cfg, "k").unwrap();
    let out = c.complete(&CompletionRequest::new("q", 1.0, 16)).unwrap();
    assert_eq!(out.raw_text, "no");
    assert_eq!(out.retries, 1);
}
