use thiserror::Error;

use crate::params::ImageId;

/// Failures raised by profile construction, challenge generation and verification.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error("invalid scheme parameters: {0}")]
    InvalidParams(String),
    #[error("profile has {got} pass-images, at least {min} are required")]
    TooFewPassImages { got: usize, min: usize },
    #[error("pass-position {position} is outside 1..={max}")]
    PositionOutOfRange { position: usize, max: usize },
    #[error("pass-image {0} has an empty position set")]
    EmptyPositionSet(ImageId),
    #[error("pass-image {0} is listed more than once")]
    DuplicatePassImage(ImageId),
    #[error("image {0} is not in the image pool")]
    UnknownImageId(ImageId),
    #[error("{images} pass-images but {position_sets} position sets")]
    PositionCountMismatch { images: usize, position_sets: usize },
    #[error("image pool has {pool} images but the grid needs {needed}")]
    PoolTooSmall { pool: usize, needed: usize },
    #[error("pass-image {0} does not appear in the challenge")]
    PassImageMissing(ImageId),
    #[error("{0} pass-images exceed the permutation enumeration cap")]
    PermutationCapExceeded(usize),
    #[error("challenge has already been used")]
    ChallengeConsumed,
    #[error("challenge has expired")]
    ChallengeExpired,
    #[error("expected {expected} rounds, got {got}")]
    RoundCountMismatch { expected: usize, got: usize },
}

impl SchemeError {
    /// Stable machine-readable code, used on the wire by the auth service.
    pub fn code(&self) -> &'static str {
        match self {
            SchemeError::InvalidParams(_) => "InvalidParams",
            SchemeError::TooFewPassImages { .. } => "TooFewPassImages",
            SchemeError::PositionOutOfRange { .. } => "PositionOutOfRange",
            SchemeError::EmptyPositionSet(_) => "EmptyPositionSet",
            SchemeError::DuplicatePassImage(_) => "DuplicatePassImage",
            SchemeError::UnknownImageId(_) => "UnknownImageId",
            SchemeError::PositionCountMismatch { .. } => "PositionCountMismatch",
            SchemeError::PoolTooSmall { .. } => "PoolTooSmall",
            SchemeError::PassImageMissing(_) => "PassImageMissing",
            SchemeError::PermutationCapExceeded(_) => "PermutationCapExceeded",
            SchemeError::ChallengeConsumed => "ChallengeConsumed",
            SchemeError::ChallengeExpired => "ChallengeExpired",
            SchemeError::RoundCountMismatch { .. } => "RoundCountMismatch",
        }
    }
}
