use std::sync::{Arc, Mutex};

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use captchapass_core::expected_codes;
use captchapass_server::http::{router, SharedService};
use captchapass_server::service::AuthService;
use captchapass_server::ServerConfig;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

struct Harness {
    _dir: TempDir,
    svc: SharedService,
    app: Router,
    wire: Vec<u8>,
}

impl Harness {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        let config = ServerConfig {
            store_path: dir.path().join("store.jsonl"),
            admin_token: Some("s3cret".into()),
            ..ServerConfig::default()
        };
        let svc = Arc::new(Mutex::new(AuthService::open_seeded(config, 99).unwrap()));
        let app = router(svc.clone());
        Harness { _dir: dir, svc, app, wire: Vec::new() }
    }

    async fn send(&mut self, req: Request<Body>) -> (StatusCode, Option<String>, Vec<u8>) {
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let ctype = resp
            .headers()
            .get(header::CONTENT_TYPE)
            .map(|v| v.to_str().unwrap().to_owned());
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        self.wire.extend_from_slice(&bytes);
        (status, ctype, bytes)
    }

    async fn get(&mut self, uri: &str) -> (StatusCode, Option<String>, Vec<u8>) {
        self.send(Request::get(uri).body(Body::empty()).unwrap()).await
    }

    async fn post(&mut self, uri: &str, body: Value) -> (StatusCode, Value) {
        let req = Request::post(uri)
            .header(header::CONTENT_TYPE, "application/json")
            .body(Body::from(body.to_string()))
            .unwrap();
        let (status, _, bytes) = self.send(req).await;
        (status, serde_json::from_slice(&bytes).unwrap())
    }

    async fn challenge(&mut self, user: &str) -> Value {
        let (status, _, bytes) = self.get(&format!("/api/challenge?user={user}")).await;
        assert_eq!(status, StatusCode::OK);
        serde_json::from_slice(&bytes).unwrap()
    }

    fn answer(&self, user: &str, challenge_id: &str) -> String {
        let svc = self.svc.lock().unwrap();
        let profile = svc.user(user).unwrap().profile.clone();
        let ch = svc.peek_challenge(challenge_id).unwrap();
        expected_codes(&profile, ch).unwrap().concat()
    }

    fn strings_of(&self, challenge_id: &str) -> Vec<String> {
        let svc = self.svc.lock().unwrap();
        let ch = svc.peek_challenge(challenge_id).unwrap();
        ch.cells.iter().map(|c| c.text.clone()).collect()
    }
}

fn contains(hay: &[u8], needle: &[u8]) -> bool {
    hay.windows(needle.len()).any(|w| w == needle)
}

fn alice() -> Value {
    json!({
        "user_id": "alice",
        "pass_images": ["img005", "img011", "img030"],
        "positions": [[1, 3], [2], [5, 6, 8]],
    })
}

#[tokio::test]
async fn full_login_leaks_no_captcha_text() {
    let mut h = Harness::new();
    let (status, body) = h.post("/api/register", alice()).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["user_id"], "alice");

    let mut seen_strings = Vec::new();
    for _ in 0..3 {
        let c = h.challenge("alice").await;
        let cid = c["challenge_id"].as_str().unwrap().to_owned();
        let cells = c["cells"].as_array().unwrap().clone();
        assert_eq!(cells.len(), 50);
        seen_strings.extend(h.strings_of(&cid));
        for cell in cells.iter().take(5) {
            let (s, ctype, png) = h.get(cell["captcha_url"].as_str().unwrap()).await;
            assert_eq!(s, StatusCode::OK);
            assert_eq!(ctype.as_deref(), Some("image/png"));
            assert_eq!(&png[1..4], b"PNG");
            let (s, _, _) = h.get(cell["image_url"].as_str().unwrap()).await;
            assert_eq!(s, StatusCode::OK);
        }
        let typed = h.answer("alice", &cid);
        let (status, body) = h
            .post(
                "/api/submit",
                json!({"user_id": "alice", "challenge_id": cid, "typed": typed, "keystrokes_ms": [0, 90, 200]}),
            )
            .await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body["result"], "accept");
    }
    let (s, _, _) = h.get("/api/pool").await;
    assert_eq!(s, StatusCode::OK);
    for text in &seen_strings {
        assert!(!contains(&h.wire, text.as_bytes()), "captcha text {text} on the wire");
    }
}

#[tokio::test]
async fn error_statuses() {
    let mut h = Harness::new();
    h.post("/api/register", alice()).await;
    let (status, body) = h.post("/api/register", alice()).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "UserExists");

    let (status, body) = h
        .post(
            "/api/register",
            json!({"user_id": "bob", "pass_images": ["img000", "img001"], "positions": [[1], [1]]}),
        )
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "TooFewPassImages");

    let (status, _, _) = h.get("/api/challenge?user=nobody").await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let c = h.challenge("alice").await;
    let cid = c["challenge_id"].as_str().unwrap().to_owned();
    let (status, body) = h
        .post("/api/submit", json!({"user_id": "alice", "challenge_id": cid, "typed": "nope"}))
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["result"], "reject");
    let (status, body) = h
        .post("/api/submit", json!({"user_id": "alice", "challenge_id": cid, "typed": "nope"}))
        .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "ChallengeConsumed");

    for _ in 0..2 {
        let c = h.challenge("alice").await;
        let cid = c["challenge_id"].as_str().unwrap().to_owned();
        h.post("/api/submit", json!({"user_id": "alice", "challenge_id": cid, "typed": "x"}))
            .await;
    }
    let (status, _, bytes) = h.get("/api/challenge?user=alice").await;
    assert_eq!(status, StatusCode::LOCKED);
    let body: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(body["error"], "AttemptsExhausted");

    let (status, _, _) = h.get("/captcha/deadbeef/0.png").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _, _) = h.get("/image/nothere.png").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn attempts_endpoint_needs_token() {
    let mut h = Harness::new();
    h.post("/api/register", alice()).await;
    let c = h.challenge("alice").await;
    let cid = c["challenge_id"].as_str().unwrap().to_owned();
    let typed = h.answer("alice", &cid);
    h.post("/api/submit", json!({"user_id": "alice", "challenge_id": cid, "typed": typed}))
        .await;

    let (status, _, _) = h.get("/api/attempts").await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    let req = Request::get("/api/attempts?user=alice")
        .header(header::AUTHORIZATION, "Bearer wrong")
        .body(Body::empty())
        .unwrap();
    assert_eq!(h.send(req).await.0, StatusCode::UNAUTHORIZED);
    let req = Request::get("/api/attempts?user=alice")
        .header(header::AUTHORIZATION, "Bearer s3cret")
        .body(Body::empty())
        .unwrap();
    let (status, _, bytes) = h.send(req).await;
    assert_eq!(status, StatusCode::OK);
    let dump: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(dump["rows"].as_array().unwrap().len(), 1);
    assert_eq!(dump["rows"][0]["outcome"], "accept");
    assert_eq!(dump["summary"]["count"], 1);
}
