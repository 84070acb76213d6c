//! Registration, challenge issuance and verification, independent of HTTP.
//!
//! Profiles are kept in recoverable form: every login recomputes the
//! expected codes from fresh random strings, so a one-way hash of the
//! secret cannot work. The store file is created owner-only.

use std::collections::{HashMap, VecDeque};
use std::path::PathBuf;

use captchapass_core::captcha::{render, RenderParams};
use captchapass_core::rng::derive_seed;
use captchapass_core::{
    create_profile, generate_challenge, verify, Challenge, ImageId, PasswordProfile,
    SchemeError, SchemeParams,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ServerConfig;
use crate::images;
use crate::store::{Record, Store};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("user already registered")]
    UserExists,
    #[error("unknown user")]
    UnknownUser,
    #[error("unknown challenge")]
    UnknownChallenge,
    #[error("too many challenges requested")]
    RateLimited,
    #[error("login attempts exhausted")]
    AttemptsExhausted,
    #[error("unauthorized")]
    Unauthorized,
    #[error("unknown image")]
    UnknownImage,
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("storage failure: {0}")]
    Storage(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UserExists => "UserExists",
            ServiceError::UnknownUser => "UnknownUser",
            ServiceError::UnknownChallenge => "UnknownChallenge",
            ServiceError::RateLimited => "RateLimited",
            ServiceError::AttemptsExhausted => "AttemptsExhausted",
            ServiceError::Unauthorized => "Unauthorized",
            ServiceError::UnknownImage => "UnknownImage",
            ServiceError::Scheme(e) => e.code(),
            ServiceError::Storage(_) => "Storage",
            ServiceError::Config(_) => "Config",
        }
    }
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        ServiceError::Storage(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: String,
    pub profile: PasswordProfile,
    pub created_at: u64,
    pub params: SchemeParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoginAttempt {
    pub user_id: String,
    pub challenge_id: String,
    pub outcome: Outcome,
    pub round: usize,
    /// Submission time minus challenge issue time.
    pub duration_ms: u64,
    pub keystrokes_ms: Vec<u64>,
    /// 1-based position within the current run of failures.
    pub attempt: u32,
    pub timestamp: u64,
}

impl LoginAttempt {
    /// Gaps between consecutive keystrokes. Empty if fewer than two.
    pub fn keystroke_gaps_ms(&self) -> Vec<u64> {
        self.keystrokes_ms
            .windows(2)
            .map(|w| w[1].saturating_sub(w[0]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttemptRow {
    #[serde(flatten)]
    pub attempt: LoginAttempt,
    pub keystroke_gaps_ms: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttemptSummary {
    pub count: usize,
    pub accepted: usize,
    pub mean_duration_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttemptDump {
    pub rows: Vec<AttemptRow>,
    pub summary: AttemptSummary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellPayload {
    pub slot: usize,
    pub image_url: String,
    pub captcha_url: String,
}

/// What the client sees of a challenge. Strings travel only as pixels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengePayload {
    pub challenge_id: String,
    pub round: usize,
    pub rounds: usize,
    pub cells: Vec<CellPayload>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub result: Outcome,
    pub attempts_left: u32,
    /// Further rounds to pass before the login completes.
    pub rounds_remaining: usize,
}

#[derive(Debug)]
struct Pending {
    user_id: String,
    round: usize,
    challenge: Challenge,
}

#[derive(Debug, Default, Clone)]
struct LoginSession {
    failures: u32,
    locked_until: Option<u64>,
    next_round: usize,
    issued: VecDeque<u64>,
    in_flight: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct RegisterPayload {
    user_id: String,
    pass_images: Vec<ImageId>,
    positions: Vec<Vec<usize>>,
    created_at: u64,
    params: SchemeParams,
}

pub struct AuthService {
    config: ServerConfig,
    params: SchemeParams,
    image_files: HashMap<ImageId, PathBuf>,
    users: HashMap<String, UserRecord>,
    sessions: HashMap<String, LoginSession>,
    challenges: HashMap<String, Pending>,
    attempts: Vec<LoginAttempt>,
    store: Store,
    rng: StdRng,
}

impl AuthService {
    /// Builds the service and replays the store at `config.store_path`.
    pub fn open(config: ServerConfig) -> Result<Self, ServiceError> {
        Self::with_rng(config, StdRng::from_os_rng())
    }

    /// Same as [`open`](Self::open) with challenge seeds drawn from `seed`.
    pub fn open_seeded(config: ServerConfig, seed: u64) -> Result<Self, ServiceError> {
        Self::with_rng(config, StdRng::seed_from_u64(seed))
    }

    fn with_rng(config: ServerConfig, rng: StdRng) -> Result<Self, ServiceError> {
        let mut image_files = HashMap::new();
        let pool = match &config.image_dir {
            Some(dir) => {
                let found = images::scan_dir(dir)?;
                let ids = found.iter().map(|(id, _)| id.clone()).collect();
                image_files.extend(found);
                ids
            }
            None => images::placeholder_pool(config.image_pool_size),
        };
        let mut params = SchemeParams::new(config.grid_size, config.string_len)
            .with_rounds(config.rounds)
            .with_pool(pool);
        params.challenge_ttl_secs = config.challenge_ttl_seconds;
        params
            .validate()
            .map_err(|e| ServiceError::Config(e.to_string()))?;
        if config.max_attempts == 0 {
            return Err(ServiceError::Config("max_attempts must be positive".into()));
        }

        let (store, records) = Store::open(config.store_path.clone())?;
        let mut svc = AuthService {
            config,
            params,
            image_files,
            users: HashMap::new(),
            sessions: HashMap::new(),
            challenges: HashMap::new(),
            attempts: Vec::new(),
            store,
            rng,
        };
        for rec in records {
            svc.replay(rec)?;
        }
        Ok(svc)
    }

    fn replay(&mut self, rec: Record) -> Result<(), ServiceError> {
        let bad = |e: serde_json::Error| ServiceError::Storage(format!("corrupt record: {e}"));
        match rec.record_type.as_str() {
            "register" => {
                let p: RegisterPayload = serde_json::from_value(rec.payload).map_err(bad)?;
                let profile = create_profile(&p.user_id, &p.pass_images, &p.positions, &p.params)?;
                self.users.insert(
                    p.user_id.clone(),
                    UserRecord {
                        user_id: p.user_id,
                        profile,
                        created_at: p.created_at,
                        params: p.params,
                    },
                );
            }
            "attempt" => {
                let a: LoginAttempt = serde_json::from_value(rec.payload).map_err(bad)?;
                self.apply_attempt(&a);
                self.attempts.push(a);
            }
            other => {
                return Err(ServiceError::Storage(format!("unknown record type {other:?}")));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn config(&self) -> &ServerConfig {
        &self.config
    }

    pub fn user(&self, user_id: &str) -> Option<&UserRecord> {
        self.users.get(user_id)
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn image_pool(&self) -> &[ImageId] {
        &self.params.image_pool
    }

    /// Registers a profile; the record is on disk before this returns.
    pub fn register(
        &mut self,
        user_id: &str,
        pass_images: &[ImageId],
        positions: &[Vec<usize>],
        now_ms: u64,
    ) -> Result<(), ServiceError> {
        if user_id.is_empty() {
            return Err(SchemeError::InvalidParams("empty user id".into()).into());
        }
        if self.users.contains_key(user_id) {
            return Err(ServiceError::UserExists);
        }
        let profile = create_profile(user_id, pass_images, positions, &self.params)?;
        let payload = RegisterPayload {
            user_id: user_id.to_owned(),
            pass_images: pass_images.to_vec(),
            positions: positions.to_vec(),
            created_at: now_ms,
            params: self.params.clone(),
        };
        self.store.append(&Record {
            record_type: "register".into(),
            payload: serde_json::to_value(&payload).expect("payload serializes"),
            timestamp: now_ms,
        })?;
        self.users.insert(
            user_id.to_owned(),
            UserRecord {
                user_id: user_id.to_owned(),
                profile,
                created_at: now_ms,
                params: self.params.clone(),
            },
        );
        Ok(())
    }

    fn purge_expired(&mut self, now_ms: u64) {
        self.challenges.retain(|_, p| !p.challenge.is_expired(now_ms));
    }

    fn check_lock(&mut self, user_id: &str, now_ms: u64) -> Result<(), ServiceError> {
        let s = self.sessions.entry(user_id.to_owned()).or_default();
        match s.locked_until {
            Some(until) if now_ms < until => Err(ServiceError::AttemptsExhausted),
            Some(_) => {
                s.locked_until = None;
                s.failures = 0;
                s.next_round = 0;
                Ok(())
            }
            None => Ok(()),
        }
    }

    /// Issues the next round for `user_id`, replacing any challenge the user
    /// still has in flight.
    pub fn issue_challenge(
        &mut self,
        user_id: &str,
        now_ms: u64,
    ) -> Result<ChallengePayload, ServiceError> {
        let record = self.users.get(user_id).ok_or(ServiceError::UnknownUser)?;
        let profile = record.profile.clone();
        let params = record.params.clone();
        self.purge_expired(now_ms);
        self.check_lock(user_id, now_ms)?;

        let limit = self.config.max_issues_per_minute;
        let session = self.sessions.get_mut(user_id).expect("created by check_lock");
        while session.issued.front().is_some_and(|&t| now_ms.saturating_sub(t) >= 60_000) {
            session.issued.pop_front();
        }
        if session.issued.len() >= limit {
            return Err(ServiceError::RateLimited);
        }
        session.issued.push_back(now_ms);
        let round = session.next_round;
        let previous = session.in_flight.take();

        let seed: u64 = self.rng.random();
        let challenge = generate_challenge(&profile, &params, seed)?.stamped(now_ms);
        let id = challenge.id.clone();
        if let Some(prev) = previous {
            self.challenges.remove(&prev);
        }
        self.sessions.get_mut(user_id).unwrap().in_flight = Some(id.clone());

        let cells = challenge
            .cells
            .iter()
            .map(|c| CellPayload {
                slot: c.slot,
                image_url: format!("/image/{}.png", c.image),
                captcha_url: format!("/captcha/{id}/{}.png", c.slot),
            })
            .collect();
        self.challenges.insert(
            id.clone(),
            Pending {
                user_id: user_id.to_owned(),
                round,
                challenge,
            },
        );
        Ok(ChallengePayload {
            challenge_id: id,
            round,
            rounds: params.rounds,
            cells,
        })
    }

    /// Checks a typed answer. The reply carries no reason for a rejection.
    pub fn submit(
        &mut self,
        user_id: &str,
        challenge_id: &str,
        typed: &str,
        keystrokes_ms: Vec<u64>,
        now_ms: u64,
    ) -> Result<SubmitResponse, ServiceError> {
        let profile = self
            .users
            .get(user_id)
            .ok_or(ServiceError::UnknownUser)?
            .profile
            .clone();
        let rounds = self.users[user_id].params.rounds;
        self.check_lock(user_id, now_ms)?;

        let pending = match self.challenges.get_mut(challenge_id) {
            Some(p) if p.user_id == user_id => p,
            _ => return Err(ServiceError::UnknownChallenge),
        };
        let round = pending.round;
        let issued_at = pending.challenge.created_at_ms;
        let verdict = match verify(&profile, &mut pending.challenge, typed, now_ms) {
            Ok(v) => v,
            Err(SchemeError::ChallengeExpired) => {
                self.challenges.remove(challenge_id);
                return Err(SchemeError::ChallengeExpired.into());
            }
            Err(e) => return Err(e.into()),
        };
        if verdict.is_accept() {
            log::debug!("user {user_id} passed round {round}");
        }

        let session = self.sessions.get_mut(user_id).expect("created by check_lock");
        if session.in_flight.as_deref() == Some(challenge_id) {
            session.in_flight = None;
        }
        let attempt = LoginAttempt {
            user_id: user_id.to_owned(),
            challenge_id: challenge_id.to_owned(),
            outcome: if verdict.is_accept() {
                Outcome::Accept
            } else {
                Outcome::Reject
            },
            round,
            duration_ms: now_ms.saturating_sub(issued_at),
            keystrokes_ms,
            attempt: session.failures + 1,
            timestamp: now_ms,
        };
        self.store.append(&Record {
            record_type: "attempt".into(),
            payload: serde_json::to_value(&attempt).expect("attempt serializes"),
            timestamp: now_ms,
        })?;
        self.apply_attempt_with_rounds(&attempt, rounds);
        self.attempts.push(attempt.clone());

        let session = &self.sessions[user_id];
        Ok(SubmitResponse {
            result: attempt.outcome,
            attempts_left: self.config.max_attempts.saturating_sub(session.failures),
            rounds_remaining: match attempt.outcome {
                Outcome::Accept => rounds - round - 1,
                Outcome::Reject => rounds,
            },
        })
    }

    fn apply_attempt(&mut self, a: &LoginAttempt) {
        let rounds = self
            .users
            .get(&a.user_id)
            .map(|u| u.params.rounds)
            .unwrap_or(1);
        self.apply_attempt_with_rounds(a, rounds);
    }

    fn apply_attempt_with_rounds(&mut self, a: &LoginAttempt, rounds: usize) {
        let max = self.config.max_attempts;
        let lockout_ms = self.config.lockout_seconds.saturating_mul(1000);
        let s = self.sessions.entry(a.user_id.clone()).or_default();
        if s.locked_until.is_some_and(|until| a.timestamp >= until) {
            s.locked_until = None;
            s.failures = 0;
        }
        match a.outcome {
            Outcome::Reject => {
                s.failures += 1;
                s.next_round = 0;
                if s.failures >= max {
                    s.locked_until = Some(a.timestamp.saturating_add(lockout_ms));
                }
            }
            Outcome::Accept => {
                if a.round + 1 >= rounds {
                    s.failures = 0;
                    s.next_round = 0;
                } else {
                    s.next_round = a.round + 1;
                }
            }
        }
    }

    /// Renders the CAPTCHA of one cell of a live challenge.
    pub fn captcha_png(
        &self,
        challenge_id: &str,
        slot: usize,
        now_ms: u64,
    ) -> Result<Vec<u8>, ServiceError> {
        let pending = self
            .challenges
            .get(challenge_id)
            .filter(|p| !p.challenge.is_consumed() && !p.challenge.is_expired(now_ms))
            .ok_or(ServiceError::UnknownChallenge)?;
        let cell = pending
            .challenge
            .cell(slot)
            .ok_or(ServiceError::UnknownChallenge)?;
        let params = RenderParams::default().with_seed(derive_seed(pending.challenge.seed, slot as u64));
        let img = render(&cell.text, &params)
            .map_err(|e| ServiceError::Config(format!("cannot render alphabet: {e}")))?;
        img.to_png()
            .map_err(|e| ServiceError::Storage(e.to_string()))
    }

    pub fn image_png(&self, image: &ImageId) -> Result<Vec<u8>, ServiceError> {
        if !self.params.image_pool.contains(image) {
            return Err(ServiceError::UnknownImage);
        }
        match self.image_files.get(image) {
            Some(path) => Ok(std::fs::read(path)?),
            None => Ok(images::placeholder_png(image)),
        }
    }

    pub fn export_attempts(
        &self,
        user_id: Option<&str>,
        token: Option<&str>,
    ) -> Result<AttemptDump, ServiceError> {
        match (&self.config.admin_token, token) {
            (Some(expected), Some(given)) if constant_time_eq(expected.as_bytes(), given.as_bytes()) => {}
            _ => return Err(ServiceError::Unauthorized),
        }
        let rows: Vec<AttemptRow> = self
            .attempts
            .iter()
            .filter(|a| user_id.is_none_or(|u| a.user_id == u))
            .map(|a| AttemptRow {
                keystroke_gaps_ms: a.keystroke_gaps_ms(),
                attempt: a.clone(),
            })
            .collect();
        let summary = summarize(&rows);
        Ok(AttemptDump { rows, summary })
    }

    pub fn flush(&mut self) -> Result<(), ServiceError> {
        Ok(self.store.flush()?)
    }

    /// Plaintext strings of a live challenge. Server-side only; used by the
    /// demo and tests to play the honest user.
    #[doc(hidden)]
    pub fn peek_challenge(&self, challenge_id: &str) -> Option<&Challenge> {
        self.challenges.get(challenge_id).map(|p| &p.challenge)
    }
}

pub fn summarize(rows: &[AttemptRow]) -> AttemptSummary {
    let count = rows.len();
    let accepted = rows
        .iter()
        .filter(|r| r.attempt.outcome == Outcome::Accept)
        .count();
    let mean_duration_ms = (count > 0).then(|| {
        rows.iter().map(|r| r.attempt.duration_ms as f64).sum::<f64>() / count as f64
    });
    AttemptSummary {
        count,
        accepted,
        mean_duration_ms,
    }
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}
