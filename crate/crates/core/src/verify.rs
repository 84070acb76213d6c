use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::challenge::Challenge;
use crate::error::SchemeError;
use crate::profile::PasswordProfile;

/// `accepted_strings` refuses to enumerate more than `MAX_ENUMERATED!` orders.
pub const MAX_ENUMERATED: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    WrongLength,
    WrongContent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

impl Verdict {
    pub fn is_accept(self) -> bool {
        matches!(self, Verdict::Accept)
    }
}

/// Characters at the pass-positions of each pass-image, in ascending position
/// order, one code per pass-image in profile order.
pub fn expected_codes(
    profile: &PasswordProfile,
    challenge: &Challenge,
) -> Result<Vec<String>, SchemeError> {
    profile
        .pass_images()
        .iter()
        .map(|pi| {
            let text = challenge
                .text_of(&pi.image)
                .ok_or_else(|| SchemeError::PassImageMissing(pi.image.clone()))?;
            Ok(code_at(text, &pi.positions))
        })
        .collect()
}

/// Selects 1-based `positions` out of `text`. Positions past the end are skipped.
pub fn code_at(text: &str, positions: &[usize]) -> String {
    let chars: Vec<char> = text.chars().collect();
    positions
        .iter()
        .filter_map(|&p| p.checked_sub(1).and_then(|i| chars.get(i)))
        .collect()
}

/// Every concatenation of the codes over all orderings of the pass-images.
pub fn accepted_strings(
    profile: &PasswordProfile,
    challenge: &Challenge,
) -> Result<BTreeSet<String>, SchemeError> {
    let codes = expected_codes(profile, challenge)?;
    if codes.len() > MAX_ENUMERATED {
        return Err(SchemeError::PermutationCapExceeded(codes.len()));
    }
    let mut out = BTreeSet::new();
    let mut used = vec![false; codes.len()];
    let mut buf = String::new();
    permute(&codes, &mut used, &mut buf, &mut out);
    Ok(out)
}

fn permute(codes: &[String], used: &mut [bool], buf: &mut String, out: &mut BTreeSet<String>) {
    if used.iter().all(|&u| u) {
        out.insert(buf.clone());
        return;
    }
    for i in 0..codes.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let len = buf.len();
        buf.push_str(&codes[i]);
        permute(codes, used, buf, out);
        buf.truncate(len);
        used[i] = false;
    }
}

/// True iff `typed` is some ordering of `codes` concatenated.
///
/// Depth-first over the set of blocks already consumed, memoising dead
/// states, so identical blocks do not blow up to `K!`.
pub fn matches_some_order(codes: &[String], typed: &str) -> bool {
    let total: usize = codes.iter().map(String::len).sum();
    if typed.len() != total {
        return false;
    }
    if codes.len() > 64 {
        // Fall back to a linear-memory search; only reachable with huge grids.
        return matches_unmemoised(codes, typed.as_bytes(), &mut vec![false; codes.len()]);
    }
    let mut dead = HashSet::new();
    matches_from(codes, typed.as_bytes(), 0, 0, &mut dead)
}

fn matches_from(
    codes: &[String],
    typed: &[u8],
    offset: usize,
    used: u64,
    dead: &mut HashSet<u64>,
) -> bool {
    if offset == typed.len() {
        return true;
    }
    if dead.contains(&used) {
        return false;
    }
    for (i, code) in codes.iter().enumerate() {
        if used & (1 << i) != 0 {
            continue;
        }
        let end = offset + code.len();
        if typed[offset..end] == *code.as_bytes()
            && matches_from(codes, typed, end, used | (1 << i), dead)
        {
            return true;
        }
    }
    dead.insert(used);
    false
}

fn matches_unmemoised(codes: &[String], typed: &[u8], used: &mut [bool]) -> bool {
    if typed.is_empty() {
        return true;
    }
    for i in 0..codes.len() {
        if !used[i] && typed.starts_with(codes[i].as_bytes()) {
            used[i] = true;
            if matches_unmemoised(codes, &typed[codes[i].len()..], used) {
                return true;
            }
            used[i] = false;
        }
    }
    false
}

/// Checks a typed answer for one round and consumes the challenge whatever
/// the outcome.
pub fn verify(
    profile: &PasswordProfile,
    challenge: &mut Challenge,
    typed: &str,
    now_ms: u64,
) -> Result<Verdict, SchemeError> {
    challenge.consume()?;
    if challenge.is_expired(now_ms) {
        return Err(SchemeError::ChallengeExpired);
    }
    let codes = expected_codes(profile, challenge)?;
    if typed.chars().count() != profile.entered_len() {
        return Ok(Verdict::Reject(RejectReason::WrongLength));
    }
    if matches_some_order(&codes, typed) {
        Ok(Verdict::Accept)
    } else {
        Ok(Verdict::Reject(RejectReason::WrongContent))
    }
}

/// A login of `S` rounds accepts only if every round does. All rounds are
/// evaluated, and therefore consumed, even after a rejection.
pub fn verify_multi_round(
    profile: &PasswordProfile,
    challenges: &mut [Challenge],
    typed: &[&str],
    now_ms: u64,
) -> Result<Verdict, SchemeError> {
    if challenges.len() != typed.len() {
        return Err(SchemeError::RoundCountMismatch {
            expected: challenges.len(),
            got: typed.len(),
        });
    }
    let mut verdict = Verdict::Accept;
    for (ch, t) in challenges.iter_mut().zip(typed) {
        let v = verify(profile, ch, t, now_ms)?;
        if verdict.is_accept() && !v.is_accept() {
            verdict = v;
        }
    }
    Ok(verdict)
}
