//! The chat-completions client against a local fake endpoint.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use huh_core::provider::{
    retrying, Provider, ProviderError, ProviderRequest, RemoteConfig, RemoteProvider, RetryPolicy, TokenUsage,
};
use serde_json::{json, Value};

#[derive(Clone)]
enum Reply {
    Ok(&'static str, u64, u64),
    Status(u16, &'static str),
    RateLimited(&'static str),
    NoUsage,
    Slow(Duration),
}

#[derive(Default)]
struct Fake {
    script: Mutex<VecDeque<Reply>>,
    requests: Mutex<Vec<(Option<String>, Value)>>,
    in_flight: AtomicUsize,
    peak: AtomicUsize,
}

async fn handler(State(fake): State<Arc<Fake>>, headers: HeaderMap, Json(body): Json<Value>) -> Response {
    let auth = headers.get("authorization").map(|v| v.to_str().unwrap().to_string());
    fake.requests.lock().unwrap().push((auth, body));
    let now = fake.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    fake.peak.fetch_max(now, Ordering::SeqCst);
    let reply = fake.script.lock().unwrap().pop_front().unwrap_or(Reply::Ok("default", 1, 1));
    let ok = |text: &str, p: u64, c: u64| {
        Json(json!({
            "id": "x",
            "choices": [{ "index": 0, "message": { "role": "assistant", "content": text } }],
            "usage": { "prompt_tokens": p, "completion_tokens": c, "total_tokens": p + c },
        }))
        .into_response()
    };
    let res = match reply {
        Reply::Ok(text, p, c) => {
            tokio::time::sleep(Duration::from_millis(20)).await;
            ok(text, p, c)
        }
        Reply::Status(code, body) => (StatusCode::from_u16(code).unwrap(), body).into_response(),
        Reply::RateLimited(after) => (StatusCode::TOO_MANY_REQUESTS, [("retry-after", after)], "slow down").into_response(),
        Reply::NoUsage => Json(json!({ "choices": [{ "message": { "content": "hi" } }] })).into_response(),
        Reply::Slow(d) => {
            tokio::time::sleep(d).await;
            ok("late", 1, 1)
        }
    };
    fake.in_flight.fetch_sub(1, Ordering::SeqCst);
    res
}

async fn start(script: Vec<Reply>) -> (Arc<Fake>, String) {
    let fake = Arc::new(Fake {
        script: Mutex::new(script.into()),
        ..Fake::default()
    });
    let app = Router::new().route("/v1/chat/completions", post(handler)).with_state(fake.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (fake, format!("http://{addr}/v1"))
}

fn provider(base_url: String) -> RemoteProvider {
    RemoteProvider::new(RemoteConfig {
        base_url,
        model: "test-model".into(),
        api_key: Some("sk-test".into()),
        timeout: Duration::from_millis(500),
        in_flight: 2,
    })
    .unwrap()
}

fn fast_retry() -> RetryPolicy {
    RetryPolicy {
        max_attempts: 3,
        base_delay: Duration::from_millis(1),
        max_delay: Duration::from_millis(5),
        jitter: false,
    }
}

#[tokio::test]
async fn wire_format_and_usage() {
    let (fake, url) = start(vec![Reply::Ok("  An explanation.  ", 120, 34)]).await;
    let p = provider(url);
    let req = ProviderRequest::new("Explain: it.", "v/0/1").with_max_output_tokens(64).with_temperature(0.2);
    let res = p.complete(&req).await.unwrap();
    assert_eq!(res.text, "An explanation.");
    assert_eq!(res.usage, TokenUsage::new(120, 34));
    assert_eq!(p.model_name(), "test-model");

    let (auth, body) = fake.requests.lock().unwrap()[0].clone();
    assert_eq!(auth.as_deref(), Some("Bearer sk-test"));
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["messages"], json!([{ "role": "user", "content": "Explain: it." }]));
    assert_eq!(body["max_tokens"], 64);
    assert!((body["temperature"].as_f64().unwrap() - 0.2).abs() < 1e-6);
}

#[tokio::test]
async fn rate_limit_is_retried_after_hint() {
    let (fake, url) = start(vec![Reply::RateLimited("0.05"), Reply::Ok("fine", 5, 6)]).await;
    let p = provider(url);
    let req = ProviderRequest::new("Explain: it.", "v/1/1");
    let started = std::time::Instant::now();
    let done = retrying(&p, &req, &fast_retry()).await.unwrap();
    assert_eq!(done.attempts, 2);
    assert_eq!(done.response.text, "fine");
    assert!(started.elapsed() >= Duration::from_millis(50), "Retry-After honoured");
    assert_eq!(fake.requests.lock().unwrap().len(), 2);
}

#[tokio::test]
async fn bad_request_is_terminal() {
    let (fake, url) = start(vec![Reply::Status(400, "{\"error\":\"context too long\"}")]).await;
    let err = retrying(&provider(url), &ProviderRequest::new("Explain: it.", "t"), &fast_retry())
        .await
        .unwrap_err();
    match err {
        ProviderError::BackendError { status, body } => {
            assert_eq!(status, 400);
            assert!(body.contains("context too long"));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(fake.requests.lock().unwrap().len(), 1);
}

#[tokio::test]
async fn server_errors_are_not_retried() {
    let (fake, url) = start(vec![Reply::Status(503, "overloaded")]).await;
    let err = retrying(&provider(url), &ProviderRequest::new("Explain: it.", "t"), &fast_retry())
        .await
        .unwrap_err();
    assert!(matches!(err, ProviderError::BackendError { status: 503, .. }));
    assert_eq!(fake.requests.lock().unwrap().len(), 1);
}

#[tokio::test]
async fn missing_usage_is_an_error() {
    let (_fake, url) = start(vec![Reply::NoUsage]).await;
    let err = provider(url).complete(&ProviderRequest::new("Explain: it.", "t")).await.unwrap_err();
    assert!(matches!(err, ProviderError::UsageMissing));
}

#[tokio::test]
async fn gateway_timeouts_exhaust_retries() {
    let (fake, url) = start(vec![Reply::Status(504, ""), Reply::Status(408, ""), Reply::Status(504, "")]).await;
    let err = retrying(&provider(url), &ProviderRequest::new("Explain: it.", "t"), &fast_retry())
        .await
        .unwrap_err();
    match err {
        ProviderError::Exhausted { attempts, last } => {
            assert_eq!(attempts, 3);
            assert!(matches!(*last, ProviderError::Timeout));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(fake.requests.lock().unwrap().len(), 3);
}

#[tokio::test]
async fn client_timeout() {
    let (_fake, url) = start(vec![Reply::Slow(Duration::from_secs(3))]).await;
    let err = provider(url).complete(&ProviderRequest::new("Explain: it.", "t")).await.unwrap_err();
    assert!(matches!(err, ProviderError::Timeout), "{err:?}");
}

#[tokio::test]
async fn in_flight_cap() {
    let (fake, url) = start(Vec::new()).await;
    let p = Arc::new(provider(url));
    let calls = (0..8).map(|i| {
        let p = p.clone();
        tokio::spawn(async move { p.complete(&ProviderRequest::new("Explain: it.", format!("t/{i}"))).await })
    });
    for c in futures::future::join_all(calls).await {
        c.unwrap().unwrap();
    }
    assert!(fake.peak.load(Ordering::SeqCst) <= 2);
}

#[tokio::test]
async fn invalid_request_never_sent() {
    let (fake, url) = start(Vec::new()).await;
    let err = provider(url).complete(&ProviderRequest::new("", "t")).await.unwrap_err();
    assert!(matches!(err, ProviderError::InvalidRequest(_)));
    assert!(fake.requests.lock().unwrap().is_empty());
}
