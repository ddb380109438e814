use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread::JoinHandle;
use std::time::Duration;

use persistbench::degrade::DegradationSchedule;
use persistbench::harness::{
    query_model, request_body, run_episode, score_record, ContextTurn, MockBehavior, MockScript,
    ModelEndpoint, ModelSpec, RunConfig, RunRecord,
};
use persistbench::imaging::Image;
use persistbench::uir::Perturbation;
use persistbench::Error;

enum Reply {
    Status(u16, &'static str),
    Stall(Duration),
}

struct Captured {
    head: String,
    body: String,
}

/// Serves one scripted reply per connection and returns what it received.
fn serve(replies: Vec<Reply>) -> (String, JoinHandle<Vec<Captured>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let mut seen = Vec::new();
        for reply in replies {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                head.push_str(&line);
            }
            let length = head
                .lines()
                .find_map(|l| {
                    let (k, v) = l.split_once(':')?;
                    k.eq_ignore_ascii_case("content-length")
                        .then(|| v.trim().parse::<usize>().unwrap())
                })
                .unwrap_or(0);
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            seen.push(Captured {
                head,
                body: String::from_utf8(body).unwrap(),
            });
            match reply {
                Reply::Status(code, text) => {
                    let response = format!(
                        "HTTP/1.1 {code} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                        text.len()
                    );
                    stream.write_all(response.as_bytes()).unwrap();
                }
                Reply::Stall(d) => std::thread::sleep(d),
            }
        }
        seen
    });
    (url, handle)
}

const OK: &str = r#"{"choices":[{"message":{"role":"assistant","content":"a red car"}}]}"#;

fn endpoint(url: &str) -> ModelEndpoint {
    let mut e = ModelEndpoint::new(url, "vlm-test");
    e.backoff_ms = 1;
    e
}

fn frame() -> Image {
    Image::from_fn(2, 2, 3, |x, y, c| ((x + 2 * y + c) % 4) as f64 / 3.0).unwrap()
}

#[test]
fn request_body_matches_golden_fixture() {
    let context = [ContextTurn {
        query: "Is there a car in the current frame?".into(),
        answer: "yes".into(),
    }];
    let body = request_body(
        &ModelEndpoint::new("http://unused", "vlm-test"),
        &frame(),
        "What color is the car?",
        &context,
        Some(17),
        None,
    )
    .unwrap();
    let golden = include_str!("fixtures/request_golden.json");
    assert_eq!(String::from_utf8(body).unwrap(), golden.trim_end());
}

#[test]
fn perturbation_fields_are_appended() {
    let p = Perturbation {
        noise_level: 0.05,
        dropout_rate: 0.3,
        seed: 9,
    };
    let body = request_body(
        &ModelEndpoint::new("http://unused", "m"),
        &frame(),
        "q",
        &[],
        None,
        Some(&p),
    )
    .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["noise_level"], 0.05);
    assert_eq!(v["dropout_rate"], 0.3);
    assert_eq!(v["ensemble_seed"], 9);
    assert!(v.get("seed").is_none());
}

#[test]
fn fixed_reply_is_returned() {
    let (url, server) = serve(vec![Reply::Status(200, OK)]);
    let answer = query_model(&endpoint(&url), &frame(), "What is it?", &[], None).unwrap();
    assert_eq!(answer, "a red car");
    let seen = server.join().unwrap();
    assert!(seen[0].head.starts_with("POST /v1/chat/completions "));
    assert!(seen[0].body.contains("\"What is it?\""));
}

#[test]
fn two_server_errors_then_success() {
    let (url, server) = serve(vec![
        Reply::Status(500, "{}"),
        Reply::Status(500, "{}"),
        Reply::Status(200, OK),
    ]);
    let mut e = endpoint(&url);
    e.max_retries = 3;
    assert_eq!(
        query_model(&e, &frame(), "q", &[], None).unwrap(),
        "a red car"
    );
    assert_eq!(server.join().unwrap().len(), 3);
}

#[test]
fn client_error_fails_fast_with_body() {
    let (url, server) = serve(vec![Reply::Status(400, r#"{"error":"bad image"}"#)]);
    let mut e = endpoint(&url);
    e.max_retries = 3;
    match query_model(&e, &frame(), "q", &[], None) {
        Err(Error::Endpoint(msg)) => {
            assert!(msg.contains("400"), "{msg}");
            assert!(msg.contains("bad image"), "{msg}");
        }
        other => panic!("expected an endpoint error, got {other:?}"),
    }
    assert_eq!(server.join().unwrap().len(), 1);
}

#[test]
fn timeouts_retry_then_abort() {
    let (url, server) = serve(vec![
        Reply::Stall(Duration::from_millis(600)),
        Reply::Stall(Duration::from_millis(600)),
    ]);
    let mut e = endpoint(&url);
    e.timeout_secs = 0.2;
    e.max_retries = 1;
    let err = query_model(&e, &frame(), "q", &[], None).unwrap_err();
    assert!(err.to_string().contains("2 attempts"), "{err}");
    server.join().unwrap();
}

#[test]
fn auth_token_goes_in_header_only() {
    std::env::set_var("PERSISTBENCH_TEST_TOKEN", "s3cret-token");
    let (url, server) = serve(vec![Reply::Status(200, OK)]);
    let mut e = endpoint(&url);
    e.auth_env = Some("PERSISTBENCH_TEST_TOKEN".into());
    query_model(&e, &frame(), "q", &[], None).unwrap();
    let seen = server.join().unwrap();
    assert!(seen[0]
        .head
        .lines()
        .any(|l| l.eq_ignore_ascii_case("authorization: Bearer s3cret-token")));
    assert!(!seen[0].body.contains("s3cret"));
}

#[test]
fn missing_token_variable_is_an_error() {
    let mut e = endpoint("http://127.0.0.1:9");
    e.auth_env = Some("PERSISTBENCH_TEST_TOKEN_UNSET".into());
    assert!(query_model(&e, &frame(), "q", &[], None).is_err());
}

#[test]
fn endpoint_failure_leaves_incomplete_record() {
    let (url, server) = serve(vec![
        Reply::Status(200, OK),
        Reply::Status(403, "forbidden"),
    ]);
    let schedule = DegradationSchedule::early(4, 1).unwrap();
    let mut config = RunConfig::synthetic(3, schedule, MockScript::new(MockBehavior::Echo));
    config.model = ModelSpec::Endpoint(endpoint(&url));
    let episode = run_episode(&config, 0).unwrap();
    server.join().unwrap();
    assert!(!episode.summary.complete);
    assert!(episode.summary.error.as_deref().unwrap().contains("403"));
    assert_eq!(episode.turns.len(), 2);
    assert!(episode.turns[1].answer.is_none());
    assert_eq!(episode.summary.metrics.turns, 1);

    let record = RunRecord {
        config,
        aggregate: episode.summary.metrics.clone(),
        episodes: vec![episode],
    };
    let scored = score_record(&RunRecord::parse(&record.render().unwrap()).unwrap()).unwrap();
    assert!(scored.matches_summary && scored.lambda_replays);
    assert!(!record.render().unwrap().contains("Authorization"));
}
