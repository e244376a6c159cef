use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use peril::llm::{Backend, BackendConfig, BackendKind, HttpBackend, LlmError, Request, TemplateId};

#[derive(Debug, Clone)]
struct Seen {
    path: String,
    auth: Option<String>,
    body: serde_json::Value,
}

/// Serves one scripted status per request; the last one repeats.
fn serve(script: Vec<u16>) -> (String, Arc<Mutex<Vec<Seen>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    thread::spawn(move || {
        for (i, stream) in listener.incoming().enumerate() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            let (mut len, mut auth) = (0usize, None);
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                let (name, value) = line.split_once(':').unwrap();
                match name.to_ascii_lowercase().as_str() {
                    "content-length" => len = value.trim().parse().unwrap(),
                    "authorization" => auth = Some(value.trim().to_string()),
                    _ => {}
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            log.lock().unwrap().push(Seen {
                path: request_line.split_whitespace().nth(1).unwrap().to_string(),
                auth,
                body: serde_json::from_slice(&body).unwrap(),
            });
            let status = script[i.min(script.len() - 1)];
            let payload = if status == 200 {
                serde_json::json!({"choices": [{"message": {"role": "assistant", "content": "hello back"}}]}).to_string()
            } else {
                "{\"error\":\"nope\"}".to_string()
            };
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            );
        }
    });
    (format!("http://{addr}/v1"), seen)
}

fn backend(endpoint: &str, retries: u32, key: Option<&str>) -> HttpBackend {
    let cfg = BackendConfig {
        kind: BackendKind::Http,
        endpoint: Some(endpoint.into()),
        model: Some("test-model".into()),
        max_retries: retries,
        backoff_ms: 1,
        timeout_secs: 5,
        ..BackendConfig::default()
    };
    HttpBackend::from_config(&cfg, key.map(str::to_string)).unwrap()
}

fn request() -> Request {
    Request {
        template_id: TemplateId::Assessment,
        persona_id: "p1".into(),
        item_id: None,
        prompt: "Say hello.".into(),
    }
}

#[test]
fn transient_errors_are_retried() {
    let (url, seen) = serve(vec![500, 503, 200]);
    let reply = backend(&url, 3, Some("sk-test")).complete(&request()).unwrap();
    assert_eq!(reply, "hello back");
    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 3);
    let first = &seen[0];
    assert_eq!(first.path, "/v1/chat/completions");
    assert_eq!(first.auth.as_deref(), Some("Bearer sk-test"));
    assert_eq!(first.body["model"], "test-model");
    assert_eq!(first.body["messages"][0]["content"], "Say hello.");
    assert_eq!(first.body["temperature"], 0.0);
}

#[test]
fn rejected_credentials_are_not_retried() {
    let (url, seen) = serve(vec![401, 200]);
    let err = backend(&url, 3, Some("bad")).complete(&request()).unwrap_err();
    assert!(matches!(err, LlmError::Auth { status: 401, .. }), "{err:?}");
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn missing_key_sends_nothing() {
    let (url, seen) = serve(vec![200]);
    let err = backend(&url, 3, None).complete(&request()).unwrap_err();
    assert!(matches!(err, LlmError::MissingKey { .. }));
    assert!(err.to_string().contains("PERIL_LLM_KEY"));
    assert!(seen.lock().unwrap().is_empty());
}

#[test]
fn retries_run_out() {
    let (url, seen) = serve(vec![500]);
    let err = backend(&url, 2, Some("k")).complete(&request()).unwrap_err();
    assert!(matches!(err, LlmError::Network { attempts: 3, .. }), "{err:?}");
    assert_eq!(seen.lock().unwrap().len(), 3);
}

#[test]
fn client_errors_and_bad_bodies_fail_fast() {
    let (url, seen) = serve(vec![404]);
    let err = backend(&url, 3, Some("k")).complete(&request()).unwrap_err();
    assert!(matches!(err, LlmError::Http { status: 404, .. }), "{err:?}");
    assert_eq!(seen.lock().unwrap().len(), 1);
}
