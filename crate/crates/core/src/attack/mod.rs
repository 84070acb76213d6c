//! Spyware adversaries: replay, segmentation of the basic scheme, and the
//! human-assisted intersection attack on the positional scheme.

mod intersect;
mod simulate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::challenge::Challenge;
use crate::combinatorics::compositions;
use crate::error::SchemeError;
use crate::params::ImageId;
use crate::profile::PasswordProfile;
use crate::verify::{expected_codes, matches_some_order};

pub use intersect::{intersect, Candidate, PoolState, SegmentCandidates, AttackerState};
pub use simulate::{
    random_profile, run_trials, simulate_attack, AttackReport, SessionStats, SimLimits,
    TrialSummary,
};

/// Longest typed string the unknown-segmentation attacker will split.
pub const SEGMENTATION_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttackError {
    #[error("segment {segment:?} matches no cell")]
    SegmentNotFound { segment: String },
    #[error("observation is inconsistent with earlier ones: {0}")]
    InconsistentObservation(String),
    #[error("typed length {0} exceeds the segmentation cap")]
    CapExceeded(usize),
    #[error("malformed observation: {0}")]
    Malformed(String),
    #[error("attacker cannot read CAPTCHA text")]
    SolverUnavailable,
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedCell {
    pub image: ImageId,
    pub text: String,
}

/// Boundary and owner of one typed block. `owner` is a stable label for the
/// pass-image that produced the block, consistent across sessions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockHint {
    pub owner: usize,
    pub len: usize,
}

/// One recorded successful login: the screen and what was typed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    /// Cells in displayed slot order.
    pub cells: Vec<ObservedCell>,
    pub typed: String,
    pub keystrokes_ms: Option<Vec<u64>>,
    /// Victim's blocks in typed order, available only to an attacker that
    /// is assumed to know the segmentation.
    pub blocks: Option<Vec<BlockHint>>,
}

impl Observation {
    pub fn from_challenge(challenge: &Challenge, typed: impl Into<String>) -> Self {
        Observation {
            cells: challenge
                .cells
                .iter()
                .map(|c| ObservedCell {
                    image: c.image.clone(),
                    text: c.text.clone(),
                })
                .collect(),
            typed: typed.into(),
            keystrokes_ms: None,
            blocks: None,
        }
    }

    pub fn with_blocks(mut self, blocks: Vec<BlockHint>) -> Self {
        self.blocks = Some(blocks);
        self
    }

    pub fn text_of(&self, image: &ImageId) -> Option<&str> {
        self.cells
            .iter()
            .find(|c| &c.image == image)
            .map(|c| c.text.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// CAPTCHAs are unreadable to the attacker.
    None,
    /// A human worker or perfect OCR reads every string, at a counted cost.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackerModel {
    pub solver: Solver,
    /// Maximum CAPTCHAs the attacker will pay to read; `None` is unlimited.
    pub solver_budget: Option<u64>,
    pub knows_segmentation: bool,
}

impl AttackerModel {
    pub fn oracle() -> Self {
        AttackerModel {
            solver: Solver::Oracle,
            solver_budget: None,
            knows_segmentation: true,
        }
    }

    pub fn blind() -> Self {
        AttackerModel {
            solver: Solver::None,
            solver_budget: None,
            knows_segmentation: true,
        }
    }

    pub fn unsegmented() -> Self {
        AttackerModel {
            knows_segmentation: false,
            ..Self::oracle()
        }
    }
}

/// Replays a recorded answer against a new challenge.
pub fn replay_attack(obs: &Observation, fresh: &Challenge, profile: &PasswordProfile) -> bool {
    match expected_codes(profile, fresh) {
        Ok(codes) => matches_some_order(&codes, &obs.typed),
        Err(_) => false,
    }
}

/// Recovers the pass-images of a basic-scheme login from one observation by
/// cutting the typed string into `M`-letter pieces and looking each up on
/// the recorded screen.
pub fn crack_basic_scheme(obs: &Observation, string_len: usize) -> Result<Vec<ImageId>, AttackError> {
    let chars: Vec<char> = obs.typed.chars().collect();
    if string_len == 0 || chars.is_empty() || !chars.len().is_multiple_of(string_len) {
        return Err(AttackError::Malformed(format!(
            "typed length {} is not a multiple of {string_len}",
            chars.len()
        )));
    }
    chars
        .chunks(string_len)
        .map(|seg| {
            let seg: String = seg.iter().collect();
            obs.cells
                .iter()
                .find(|c| c.text == seg)
                .map(|c| c.image.clone())
                .ok_or(AttackError::SegmentNotFound { segment: seg })
        })
        .collect()
}

/// Block-length hypotheses for a typed string of length `typed_len`: every
/// composition into `K` parts of size at most `M`, for each `K` in range.
pub fn enumerate_segmentations(
    typed_len: usize,
    pass_image_counts: std::ops::RangeInclusive<usize>,
    string_len: usize,
) -> Result<Vec<Vec<usize>>, AttackError> {
    if typed_len > SEGMENTATION_CAP {
        return Err(AttackError::CapExceeded(typed_len));
    }
    Ok(pass_image_counts
        .flat_map(|k| compositions(typed_len, k, string_len))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::challenge::GridCell;

    fn cells(texts: &[(&str, &str)]) -> Challenge {
        Challenge::from_cells(
            "c",
            texts
                .iter()
                .enumerate()
                .map(|(slot, (img, t))| GridCell {
                    slot,
                    image: ImageId::from(*img),
                    text: (*t).into(),
                })
                .collect(),
        )
    }

    #[test]
    fn basic_scheme_worked_example() {
        let ch = cells(&[
            ("a", "qwer"),
            ("b", "mewo"),
            ("c", "tyui"),
            ("d", "xnco"),
            ("e", "nvso"),
            ("f", "zzzz"),
        ]);
        let obs = Observation::from_challenge(&ch, "mewoxnconvso");
        assert_eq!(
            crack_basic_scheme(&obs, 4).unwrap(),
            vec![ImageId::from("b"), ImageId::from("d"), ImageId::from("e")]
        );
        let one = Observation::from_challenge(&ch, "tyui");
        assert_eq!(crack_basic_scheme(&one, 4).unwrap(), vec![ImageId::from("c")]);

        let bad = Observation::from_challenge(&ch, "mewoxnc");
        assert!(matches!(crack_basic_scheme(&bad, 4), Err(AttackError::Malformed(_))));
        let corrupt = Observation::from_challenge(&ch, "aaaa");
        assert!(matches!(
            crack_basic_scheme(&corrupt, 4),
            Err(AttackError::SegmentNotFound { .. })
        ));
    }

    #[test]
    fn segmentations() {
        assert_eq!(enumerate_segmentations(3, 3..=3, 8).unwrap(), vec![vec![1, 1, 1]]);
        assert_eq!(enumerate_segmentations(8, 3..=3, 8).unwrap().len(), 21);
        let mut four = enumerate_segmentations(4, 3..=4, 8).unwrap();
        four.sort();
        assert_eq!(
            four,
            vec![vec![1, 1, 1, 1], vec![1, 1, 2], vec![1, 2, 1], vec![2, 1, 1]]
        );
        assert_eq!(enumerate_segmentations(13, 3..=3, 8), Err(AttackError::CapExceeded(13)));
    }
}
