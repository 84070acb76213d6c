use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use captchapass_core::{ImageId, SchemeError};
use serde::Deserialize;
use serde_json::json;

use crate::service::{AuthService, ServiceError};

pub type SharedService = Arc<Mutex<AuthService>>;

/// Milliseconds since the Unix epoch.
pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::UserExists => StatusCode::CONFLICT,
            ServiceError::UnknownUser
            | ServiceError::UnknownChallenge
            | ServiceError::UnknownImage => StatusCode::NOT_FOUND,
            ServiceError::RateLimited => StatusCode::TOO_MANY_REQUESTS,
            ServiceError::AttemptsExhausted => StatusCode::LOCKED,
            ServiceError::Unauthorized => StatusCode::UNAUTHORIZED,
            ServiceError::Scheme(SchemeError::ChallengeConsumed) => StatusCode::CONFLICT,
            ServiceError::Scheme(SchemeError::ChallengeExpired) => StatusCode::GONE,
            ServiceError::Scheme(_) => StatusCode::BAD_REQUEST,
            ServiceError::Storage(_) | ServiceError::Config(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            log::error!("{self}");
        }
        (status, Json(json!({ "error": self.code(), "message": self.to_string() }))).into_response()
    }
}

#[derive(Deserialize)]
struct RegisterBody {
    user_id: String,
    pass_images: Vec<ImageId>,
    positions: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct ChallengeQuery {
    user: String,
}

#[derive(Deserialize)]
struct SubmitBody {
    user_id: String,
    challenge_id: String,
    typed: String,
    #[serde(default)]
    keystrokes_ms: Vec<u64>,
}

#[derive(Deserialize)]
struct AttemptsQuery {
    user: Option<String>,
}

fn lock(svc: &SharedService) -> std::sync::MutexGuard<'_, AuthService> {
    // A panic mid-request leaves no partial state worth refusing service for.
    svc.lock().unwrap_or_else(|e| e.into_inner())
}

async fn register(
    State(svc): State<SharedService>,
    Json(body): Json<RegisterBody>,
) -> Result<impl IntoResponse, ServiceError> {
    lock(&svc).register(&body.user_id, &body.pass_images, &body.positions, now_ms())?;
    Ok((
        StatusCode::CREATED,
        Json(json!({ "status": "registered", "user_id": body.user_id })),
    ))
}

async fn challenge(
    State(svc): State<SharedService>,
    Query(q): Query<ChallengeQuery>,
) -> Result<impl IntoResponse, ServiceError> {
    let payload = lock(&svc).issue_challenge(&q.user, now_ms())?;
    Ok(Json(payload))
}

async fn submit(
    State(svc): State<SharedService>,
    Json(body): Json<SubmitBody>,
) -> Result<impl IntoResponse, ServiceError> {
    let resp = lock(&svc).submit(
        &body.user_id,
        &body.challenge_id,
        &body.typed,
        body.keystrokes_ms,
        now_ms(),
    )?;
    Ok(Json(resp))
}

async fn attempts(
    State(svc): State<SharedService>,
    headers: HeaderMap,
    Query(q): Query<AttemptsQuery>,
) -> Result<impl IntoResponse, ServiceError> {
    let token = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    let dump = lock(&svc).export_attempts(q.user.as_deref(), token)?;
    Ok(Json(dump))
}

fn png(bytes: Vec<u8>) -> Response {
    (
        [
            (header::CONTENT_TYPE, "image/png"),
            (header::CACHE_CONTROL, "no-store"),
        ],
        bytes,
    )
        .into_response()
}

async fn captcha(
    State(svc): State<SharedService>,
    Path((challenge_id, file)): Path<(String, String)>,
) -> Result<Response, ServiceError> {
    let slot: usize = file
        .strip_suffix(".png")
        .and_then(|s| s.parse().ok())
        .ok_or(ServiceError::UnknownChallenge)?;
    let bytes = lock(&svc).captcha_png(&challenge_id, slot, now_ms())?;
    Ok(png(bytes))
}

async fn image(
    State(svc): State<SharedService>,
    Path(file): Path<String>,
) -> Result<Response, ServiceError> {
    let id = file.strip_suffix(".png").ok_or(ServiceError::UnknownImage)?;
    let bytes = lock(&svc).image_png(&ImageId::new(id))?;
    Ok(png(bytes))
}

async fn pool(State(svc): State<SharedService>) -> impl IntoResponse {
    let svc = lock(&svc);
    let p = svc.params();
    Json(json!({
        "images": p.image_pool,
        "grid_size": p.grid_size,
        "string_len": p.string_len,
        "min_pass_images": p.min_pass_images,
        "rounds": p.rounds,
    }))
}

pub fn router(svc: SharedService) -> Router {
    Router::new()
        .route("/api/register", post(register))
        .route("/api/challenge", get(challenge))
        .route("/api/submit", post(submit))
        .route("/api/attempts", get(attempts))
        .route("/api/pool", get(pool))
        .route("/captcha/{challenge_id}/{file}", get(captcha))
        .route("/image/{file}", get(image))
        .with_state(svc)
}
