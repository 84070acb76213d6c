use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Service settings, read from a `key = value` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerConfig {
    pub bind: String,
    pub port: u16,
    pub grid_size: usize,
    pub string_len: usize,
    pub rounds: usize,
    pub challenge_ttl_seconds: u64,
    pub image_dir: Option<PathBuf>,
    /// Size of the generated placeholder pool when `image_dir` is unset.
    pub image_pool_size: usize,
    pub admin_token: Option<String>,
    pub store_path: PathBuf,
    pub max_attempts: u32,
    pub lockout_seconds: u64,
    pub max_issues_per_minute: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: "127.0.0.1".into(),
            port: 8080,
            grid_size: 50,
            string_len: 8,
            rounds: 1,
            challenge_ttl_seconds: 300,
            image_dir: None,
            image_pool_size: 50,
            admin_token: None,
            store_path: PathBuf::from("captchapass-store.jsonl"),
            max_attempts: 3,
            lockout_seconds: 900,
            max_issues_per_minute: 20,
        }
    }
}

impl ServerConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Blank lines and `#` comments are ignored; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ServerConfig::default();
        let mut pool_size_set = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
                line,
                msg: format!("expected `key = value`, got {content:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let err = |msg: String| ConfigError::Parse { line, msg };
            let num = |v: &str| -> Result<u64, ConfigError> {
                v.parse::<u64>()
                    .map_err(|_| err(format!("{key}: {v:?} is not a nonnegative integer")))
            };
            match key {
                "bind" => cfg.bind = value.to_owned(),
                "port" => {
                    cfg.port = value
                        .parse()
                        .map_err(|_| err(format!("port: {value:?} is not a port number")))?
                }
                "grid_size" => cfg.grid_size = num(value)? as usize,
                "string_len" => cfg.string_len = num(value)? as usize,
                "rounds" => cfg.rounds = num(value)? as usize,
                "challenge_ttl_seconds" => cfg.challenge_ttl_seconds = num(value)?,
                "image_dir" => {
                    cfg.image_dir = (!value.is_empty()).then(|| PathBuf::from(value));
                }
                "image_pool_size" => {
                    cfg.image_pool_size = num(value)? as usize;
                    pool_size_set = true;
                }
                "admin_token" => cfg.admin_token = (!value.is_empty()).then(|| value.to_owned()),
                "store_path" => cfg.store_path = PathBuf::from(value),
                "max_attempts" => cfg.max_attempts = num(value)? as u32,
                "lockout_seconds" => cfg.lockout_seconds = num(value)?,
                "max_issues_per_minute" => cfg.max_issues_per_minute = num(value)? as usize,
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        if !pool_size_set {
            cfg.image_pool_size = cfg.grid_size;
        }
        Ok(cfg)
    }
}
