mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use fmbench_core::error::Error;
use fmbench_core::llm::{
    build_prompt, default_shot, parse_waypoints, plan, render_waypoints, ChatBackend, ChatRequest, HttpBackend,
    ModelEndpoint, PromptSpec,
};
use fmbench_core::perception::DetectionSummary;
use fmbench_core::Point3;
use proptest::prelude::*;

fn check_golden(name: &str, actual: &str) {
    let path = common::repo_root().join("prompts").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "prompt drifted from {}", path.display());
}

#[test]
fn few_shot_prompt_matches_golden() {
    let spec = PromptSpec::few_shot(common::scenario("s1.json"), vec![default_shot()]).unwrap();
    check_golden("s1_few_shot.txt", &build_prompt(&spec).unwrap());
}

#[test]
fn instruction_prompt_matches_golden() {
    let spec = PromptSpec::instruction(common::scenario("s2.json"));
    check_golden("s2_instruction.txt", &build_prompt(&spec).unwrap());
}

#[test]
fn vision_prompt_matches_golden() {
    let detections = vec![
        DetectionSummary {
            class_label: "box".into(),
            position: Point3::new(0.0, -1.5, 0.5),
        },
        DetectionSummary {
            class_label: "box".into(),
            position: Point3::new(0.0, -5.5, 0.5),
        },
    ];
    let spec = PromptSpec::zero_shot_vision(common::scenario("s1.json"), detections);
    check_golden("s1_zero_shot_vision.txt", &build_prompt(&spec).unwrap());
}

fn hundredths() -> impl Strategy<Value = f64> {
    (-1_000_000i64..1_000_000).prop_map(|v| v as f64 / 100.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn render_parse_round_trip(pts in prop::collection::vec((hundredths(), hundredths(), hundredths()), 2..20)) {
        let pts: Vec<Point3> = pts.into_iter().map(|(x, y, z)| Point3::new(x, y, z)).collect();
        let parsed = parse_waypoints(&render_waypoints(&pts)).unwrap();
        prop_assert_eq!(parsed.len(), pts.len());
        for (a, b) in parsed.iter().zip(&pts) {
            prop_assert!(a.distance(b) < 1e-9, "{} vs {}", a, b);
        }
    }
}

/// Minimal HTTP/1.1 responder: answers connection `k` with `replies[k]`
/// (the last entry repeats) and counts connections.
fn serve(replies: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let k = counter.fetch_add(1, Ordering::SeqCst);
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap_or(0);
                }
            }
            let mut body = vec![0u8; len];
            let _ = reader.read_exact(&mut body);
            let (status, text) = &replies[k.min(replies.len() - 1)];
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                text.len()
            );
        }
    });
    (url, hits)
}

fn endpoint(url: String) -> ModelEndpoint {
    ModelEndpoint {
        base_url: url,
        model: "test-model".into(),
        timeout_s: 5.0,
        backoff_s: 0.001,
        ..Default::default()
    }
}

fn request() -> ChatRequest {
    ChatRequest {
        scenario: "S1".into(),
        trial: 0,
        prompt: "hello".into(),
    }
}

fn completion(content: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": content}}],
        "usage": {"prompt_tokens": 12, "completion_tokens": 34}
    })
    .to_string()
}

#[test]
fn server_errors_are_retried_then_succeed() {
    let ok = completion("(0, 6, 0.5)\n(2, 0, 0.5)\n(0, -7, 0.5)");
    let (url, hits) = serve(vec![(500, "{}".into()), (429, "{}".into()), (200, ok)]);
    let backend = HttpBackend::new(endpoint(url)).unwrap();
    let r = backend.complete(&request()).unwrap();
    assert_eq!(hits.load(Ordering::SeqCst), 3);
    assert_eq!(r.prompt_tokens, Some(12));
    assert_eq!(r.completion_tokens, Some(34));
    assert_eq!(parse_waypoints(&r.text).unwrap().len(), 3);
}

#[test]
fn persistent_server_errors_exhaust_retries() {
    let (url, hits) = serve(vec![(503, "{}".into())]);
    let backend = HttpBackend::new(endpoint(url)).unwrap();
    match backend.complete(&request()).unwrap_err() {
        Error::EndpointUnavailable { attempts, last_error } => {
            assert_eq!(attempts, 4);
            assert!(last_error.contains("503"), "{last_error}");
        }
        other => panic!("unexpected {other}"),
    }
    assert_eq!(hits.load(Ordering::SeqCst), 4);
}

#[test]
fn client_errors_are_not_retried() {
    let (url, hits) = serve(vec![(401, "{\"error\":\"bad token\"}".into())]);
    let backend = HttpBackend::new(endpoint(url)).unwrap();
    match backend.complete(&request()).unwrap_err() {
        Error::EndpointUnavailable { attempts, .. } => assert_eq!(attempts, 1),
        other => panic!("unexpected {other}"),
    }
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[test]
fn unreachable_endpoint_reports_attempts() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let backend = HttpBackend::new(endpoint(format!("http://127.0.0.1:{port}"))).unwrap();
    assert!(matches!(
        backend.complete(&request()).unwrap_err(),
        Error::EndpointUnavailable { attempts: 4, .. }
    ));
}

/// Runs only when FM_ENDPOINT_URL and FM_MODEL_ID are set.
#[test]
fn live_endpoint_smoke() {
    let Some(ep) = ModelEndpoint::from_env() else {
        eprintln!("live endpoint not configured; skipping");
        return;
    };
    let s = common::scenario("s1.json");
    let spec = PromptSpec::few_shot(s.clone(), vec![default_shot()]).unwrap();
    let backend = HttpBackend::new(ep).unwrap();
    match plan(&s, &backend, &spec, 0) {
        Ok(p) => {
            assert_eq!(p.plan.start(), s.start);
            assert_eq!(p.plan.end(), s.goal);
        }
        // A reply without waypoints is a model failure, not a transport one.
        Err(Error::UnparseablePlan { .. } | Error::ImplausiblePlan { .. }) => {}
        Err(e) => panic!("{e}"),
    }
}
