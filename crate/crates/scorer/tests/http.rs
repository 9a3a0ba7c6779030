use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use revutil_core::rubric::{build_multi_aspect_prompt, RubricSet, ScoreMode};
use revutil_core::ReviewComment;
use revutil_scorer::{ApiStyle, Backend, BackendConfig, BackendError, HttpBackend, RetryPolicy};
use serde_json::Value;
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};

/// What the scripted server does for the n-th request (0-based).
#[derive(Clone, Copy)]
enum Reply {
    Hang,
    Status(u16, &'static str),
}

struct Seen {
    bodies: Vec<Value>,
    auth: Vec<Option<String>>,
}

async fn read_request(sock: &mut TcpStream) -> (String, Vec<u8>) {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 4096];
    loop {
        let n = sock.read(&mut chunk).await.unwrap();
        if n == 0 {
            break;
        }
        buf.extend_from_slice(&chunk[..n]);
        if let Some(end) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
            let head = String::from_utf8_lossy(&buf[..end]).to_string();
            let len: usize = head
                .lines()
                .find_map(|l| {
                    let (k, v) = l.split_once(':')?;
                    k.eq_ignore_ascii_case("content-length")
                        .then(|| v.trim().parse().ok())?
                })
                .unwrap_or(0);
            while buf.len() < end + 4 + len {
                let n = sock.read(&mut chunk).await.unwrap();
                buf.extend_from_slice(&chunk[..n]);
            }
            return (head, buf[end + 4..end + 4 + len].to_vec());
        }
    }
    (String::new(), Vec::new())
}

async fn serve(script: Vec<Reply>) -> (String, Arc<AtomicUsize>, Arc<Mutex<Seen>>) {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let url = format!("http://{}/v1/completions", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let seen = Arc::new(Mutex::new(Seen {
        bodies: Vec::new(),
        auth: Vec::new(),
    }));
    let (h, s) = (hits.clone(), seen.clone());
    tokio::spawn(async move {
        loop {
            let (mut sock, _) = listener.accept().await.unwrap();
            let i = h.fetch_add(1, Ordering::SeqCst);
            let reply = script
                .get(i)
                .copied()
                .unwrap_or(Reply::Status(500, "script exhausted"));
            let s = s.clone();
            tokio::spawn(async move {
                let (head, body) = read_request(&mut sock).await;
                {
                    let mut seen = s.lock().unwrap();
                    seen.bodies
                        .push(serde_json::from_slice(&body).unwrap_or(Value::Null));
                    seen.auth.push(head.lines().find_map(|l| {
                        let (k, v) = l.split_once(':')?;
                        k.eq_ignore_ascii_case("authorization")
                            .then(|| v.trim().to_string())
                    }));
                }
                match reply {
                    Reply::Hang => tokio::time::sleep(Duration::from_secs(5)).await,
                    Reply::Status(code, body) => {
                        let resp = format!(
                            "HTTP/1.1 {code} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                            body.len()
                        );
                        let _ = sock.write_all(resp.as_bytes()).await;
                    }
                }
            });
        }
    });
    (url, hits, seen)
}

fn cfg(url: String) -> BackendConfig {
    BackendConfig {
        base_url: url,
        model_name: "judge".into(),
        request_timeout_ms: 300,
        retry_policy: RetryPolicy {
            max_attempts: 3,
            backoff_ms: 10,
        },
        ..Default::default()
    }
}

fn prompt() -> revutil_core::rubric::PromptBundle {
    build_multi_aspect_prompt(
        &RubricSet::bundled(),
        &ReviewComment::standalone("c", "Add an ablation."),
        ScoreMode::ScoreOnly,
    )
    .unwrap()
}

const OK: &str = r#"{"choices": [{"text": "{\"actionability_label\": \"3\"}"}]}"#;

#[tokio::test]
async fn retries_timeouts_then_succeeds() {
    let (url, hits, seen) = serve(vec![Reply::Hang, Reply::Hang, Reply::Status(200, OK)]).await;
    let backend = HttpBackend::new(cfg(url)).unwrap();
    let text = backend.complete(&prompt()).await.unwrap();
    assert_eq!(text, r#"{"actionability_label": "3"}"#);
    assert_eq!(hits.load(Ordering::SeqCst), 3);
    let seen = seen.lock().unwrap();
    let body = &seen.bodies[2];
    assert_eq!(body["model"], "judge");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["max_tokens"], 1024);
    assert_eq!(body["prompt"], prompt().rendered_text.as_str());
    assert_eq!(seen.auth[2], None);
}

#[tokio::test]
async fn gives_up_after_max_attempts() {
    let (url, hits, _) = serve(vec![Reply::Hang; 3]).await;
    let backend = HttpBackend::new(cfg(url)).unwrap();
    let err = backend.complete(&prompt()).await.unwrap_err();
    assert!(matches!(err, BackendError::Transport(_)), "{err:?}");
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[tokio::test]
async fn unauthorized_is_auth_error_without_retry() {
    let (url, hits, _) = serve(vec![Reply::Status(401, r#"{"error": "bad key"}"#)]).await;
    let err = HttpBackend::new(cfg(url))
        .unwrap()
        .complete(&prompt())
        .await
        .unwrap_err();
    assert_eq!(
        err,
        BackendError::Auth {
            status: 401,
            body: r#"{"error": "bad key"}"#.into()
        }
    );
    assert!(err.is_fatal());
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn client_error_is_refusal_with_body() {
    let (url, hits, _) = serve(vec![Reply::Status(400, "prompt too long")]).await;
    let err = HttpBackend::new(cfg(url))
        .unwrap()
        .complete(&prompt())
        .await
        .unwrap_err();
    assert_eq!(
        err,
        BackendError::Refusal {
            status: 400,
            body: "prompt too long".into()
        }
    );
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn server_errors_are_retried() {
    let (url, hits, _) = serve(vec![Reply::Status(503, "busy"), Reply::Status(200, OK)]).await;
    assert!(HttpBackend::new(cfg(url))
        .unwrap()
        .complete(&prompt())
        .await
        .is_ok());
    assert_eq!(hits.load(Ordering::SeqCst), 2);
}

#[tokio::test]
async fn chat_style_with_token_from_env() {
    let chat_ok = r#"{"choices": [{"message": {"role": "assistant", "content": "4"}}]}"#;
    let (url, _, seen) = serve(vec![Reply::Status(200, chat_ok)]).await;
    std::env::set_var("REVUTIL_TEST_TOKEN_A", "s3cret");
    let backend = HttpBackend::new(BackendConfig {
        api_style: ApiStyle::Chat,
        auth_token_env: Some("REVUTIL_TEST_TOKEN_A".into()),
        ..cfg(url)
    })
    .unwrap();
    assert_eq!(backend.complete(&prompt()).await.unwrap(), "4");
    let seen = seen.lock().unwrap();
    assert_eq!(seen.auth[0].as_deref(), Some("Bearer s3cret"));
    assert_eq!(seen.bodies[0]["messages"][0]["role"], "user");
    assert!(seen.bodies[0].get("prompt").is_none());
}

#[tokio::test]
async fn missing_token_env_fails_before_sending() {
    let (url, hits, _) = serve(vec![Reply::Status(200, OK)]).await;
    let backend = HttpBackend::new(BackendConfig {
        auth_token_env: Some("REVUTIL_TEST_TOKEN_UNSET".into()),
        ..cfg(url)
    })
    .unwrap();
    let err = backend.complete(&prompt()).await.unwrap_err();
    assert_eq!(
        err,
        BackendError::MissingToken("REVUTIL_TEST_TOKEN_UNSET".into())
    );
    assert_eq!(hits.load(Ordering::SeqCst), 0);
}

#[tokio::test]
async fn wrong_response_path_is_reported() {
    let (url, _, _) = serve(vec![Reply::Status(200, r#"{"output": "x"}"#)]).await;
    let err = HttpBackend::new(cfg(url))
        .unwrap()
        .complete(&prompt())
        .await
        .unwrap_err();
    assert!(matches!(err, BackendError::BadResponse { .. }), "{err:?}");

    let (url, _, _) = serve(vec![Reply::Status(200, r#"{"output": "x"}"#)]).await;
    let backend = HttpBackend::new(BackendConfig {
        response_path: Some("output".into()),
        ..cfg(url)
    })
    .unwrap();
    assert_eq!(backend.complete(&prompt()).await.unwrap(), "x");
}
