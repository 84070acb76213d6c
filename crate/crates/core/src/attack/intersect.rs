use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{enumerate_segmentations, AttackError, AttackerModel, Observation, Solver};
use crate::params::ImageId;
use crate::verify::{code_at, matches_some_order};

/// An image together with a guess at its pass-positions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Candidate {
    pub image: ImageId,
    pub positions: Vec<usize>,
}

/// What the attacker still considers possible for one pass-image.
///
/// `pairs` is exact: image and positions must reproduce the block.
/// `images` is the coarse view: every image whose string contains the
/// block's letters in order somewhere.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentCandidates {
    pub len: usize,
    pub pairs: BTreeSet<Candidate>,
    pub images: BTreeSet<ImageId>,
}

impl SegmentCandidates {
    pub fn is_unique(&self) -> bool {
        self.pairs.len() == 1
    }
}

/// Candidate sets per pass-image, indexed by block owner.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackerState {
    pub segments: Vec<SegmentCandidates>,
    pub observations: usize,
    pub captchas_solved: u64,
}

impl AttackerState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn all_unique(&self) -> bool {
        !self.segments.is_empty() && self.segments.iter().all(SegmentCandidates::is_unique)
    }

    /// The surviving assignment when every segment is down to one pair.
    pub fn recovered(&self) -> Option<Vec<Candidate>> {
        if !self.all_unique() {
            return None;
        }
        Some(
            self.segments
                .iter()
                .map(|s| s.pairs.iter().next().cloned().unwrap())
                .collect(),
        )
    }
}

/// Sorted `k`-subsets of `1..=m`.
pub(crate) fn position_sets(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for p in start..=m {
            if m - p + 1 < k - cur.len() {
                break;
            }
            cur.push(p);
            go(p + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= m {
        go(1, m, k, &mut Vec::new(), &mut out);
    }
    out
}

fn is_subsequence(needle: &str, hay: &str) -> bool {
    let mut it = hay.chars();
    needle.chars().all(|c| it.any(|h| h == c))
}

/// Every (image, positions) pair on the screen whose code equals `block`.
fn matching_pairs(obs: &Observation, block: &str, len: usize) -> BTreeSet<Candidate> {
    let mut out = BTreeSet::new();
    let mut sets_by_m: BTreeMap<usize, Vec<Vec<usize>>> = BTreeMap::new();
    for cell in &obs.cells {
        let m = cell.text.chars().count();
        let sets = sets_by_m.entry(m).or_insert_with(|| position_sets(m, len));
        for ps in sets.iter() {
            if code_at(&cell.text, ps) == block {
                out.insert(Candidate {
                    image: cell.image.clone(),
                    positions: ps.clone(),
                });
            }
        }
    }
    out
}

fn split_blocks(obs: &Observation) -> Result<Vec<(usize, &str)>, AttackError> {
    let hints = obs
        .blocks
        .as_ref()
        .ok_or_else(|| AttackError::Malformed("observation carries no block boundaries".into()))?;
    let mut out = Vec::with_capacity(hints.len());
    let mut offset = 0;
    for h in hints {
        let end = offset + h.len;
        let block = obs
            .typed
            .get(offset..end)
            .ok_or_else(|| AttackError::Malformed("block boundaries exceed typed string".into()))?;
        out.push((h.owner, block));
        offset = end;
    }
    if offset != obs.typed.len() {
        return Err(AttackError::Malformed("block lengths do not cover typed string".into()));
    }
    Ok(out)
}

/// Folds one observation into the attacker's candidate sets.
///
/// Requires a CAPTCHA-reading attacker that knows which typed block belongs
/// to which pass-image. A pair survives iff its image is on screen and its
/// positions spell that pass-image's block; an image survives the coarse
/// filter iff its string contains the block as a subsequence. Reading the
/// screen costs one solve per cell.
pub fn intersect(
    mut state: AttackerState,
    obs: &Observation,
    model: &AttackerModel,
) -> Result<AttackerState, AttackError> {
    if model.solver == Solver::None {
        return Err(AttackError::SolverUnavailable);
    }
    let blocks = split_blocks(obs)?;
    let k = blocks.len();

    if state.segments.is_empty() {
        let mut segs: Vec<Option<SegmentCandidates>> = vec![None; k];
        for (owner, block) in &blocks {
            let slot = segs
                .get_mut(*owner)
                .ok_or_else(|| AttackError::Malformed(format!("block owner {owner} out of range")))?;
            let len = block.chars().count();
            *slot = Some(SegmentCandidates {
                len,
                pairs: matching_pairs(obs, block, len),
                images: obs
                    .cells
                    .iter()
                    .filter(|c| is_subsequence(block, &c.text))
                    .map(|c| c.image.clone())
                    .collect(),
            });
        }
        state.segments = segs
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| AttackError::Malformed("duplicate block owner".into()))?;
    } else {
        if k != state.segments.len() {
            return Err(AttackError::InconsistentObservation(format!(
                "{k} blocks, expected {}",
                state.segments.len()
            )));
        }
        let screen: BTreeMap<&ImageId, &str> =
            obs.cells.iter().map(|c| (&c.image, c.text.as_str())).collect();
        for (owner, block) in &blocks {
            let seg = state
                .segments
                .get_mut(*owner)
                .ok_or_else(|| AttackError::Malformed(format!("block owner {owner} out of range")))?;
            if block.chars().count() != seg.len {
                return Err(AttackError::InconsistentObservation(format!(
                    "block {owner} changed length"
                )));
            }
            seg.pairs.retain(|c| {
                screen
                    .get(&c.image)
                    .is_some_and(|t| code_at(t, &c.positions) == *block)
            });
            seg.images
                .retain(|img| screen.get(img).is_some_and(|t| is_subsequence(block, t)));
        }
    }

    if let Some(i) = state.segments.iter().position(|s| s.pairs.is_empty()) {
        return Err(AttackError::InconsistentObservation(format!(
            "segment {i} has no surviving candidate"
        )));
    }
    state.observations += 1;
    state.captchas_solved += obs.cells.len() as u64;
    Ok(state)
}

/// Attacker state when neither block boundaries nor block owners are known.
///
/// Keeps one pool of pairs whose code equals some block of some admissible
/// segmentation in every observation, and the observations themselves for
/// the final consistency search.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PoolState {
    pub pairs: BTreeSet<Candidate>,
    pub observations: Vec<Observation>,
    pub captchas_solved: u64,
}

/// Above this many surviving pairs the recovery search is not attempted.
const POOL_SEARCH_LIMIT: usize = 48;
const SEARCH_NODE_LIMIT: usize = 500_000;

impl PoolState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an observation, narrowing the pool. `min_pass_images` bounds the
    /// block count from below.
    pub fn observe(
        &mut self,
        obs: &Observation,
        model: &AttackerModel,
        min_pass_images: usize,
    ) -> Result<(), AttackError> {
        if model.solver == Solver::None {
            return Err(AttackError::SolverUnavailable);
        }
        let typed: Vec<char> = obs.typed.chars().collect();
        let m = obs
            .cells
            .iter()
            .map(|c| c.text.chars().count())
            .max()
            .unwrap_or(0);
        let segs = enumerate_segmentations(typed.len(), min_pass_images.max(1)..=typed.len(), m)?;
        let mut spans = BTreeSet::new();
        for seg in &segs {
            let mut off = 0;
            for &len in seg {
                spans.insert((off, len));
                off += len;
            }
        }
        let blocks: BTreeSet<String> = spans
            .iter()
            .map(|&(off, len)| typed[off..off + len].iter().collect())
            .collect();

        if self.observations.is_empty() {
            for block in &blocks {
                self.pairs
                    .extend(matching_pairs(obs, block, block.chars().count()));
            }
        } else {
            let screen: BTreeMap<&ImageId, &str> =
                obs.cells.iter().map(|c| (&c.image, c.text.as_str())).collect();
            self.pairs.retain(|c| {
                screen
                    .get(&c.image)
                    .is_some_and(|t| blocks.contains(&code_at(t, &c.positions)))
            });
        }
        if self.pairs.is_empty() {
            return Err(AttackError::InconsistentObservation(
                "no pair survives".into(),
            ));
        }
        self.captchas_solved += obs.cells.len() as u64;
        self.observations.push(obs.clone());
        Ok(())
    }

    /// Searches the pool for profiles (distinct images, one position set
    /// each, total length `L`) that reproduce every observed login. Returns
    /// the profile if exactly one exists, `None` if zero, several, or the
    /// pool is still too large to search.
    pub fn unique_profile(&self, min_pass_images: usize) -> Option<Vec<Candidate>> {
        if self.pairs.len() > POOL_SEARCH_LIMIT || self.observations.is_empty() {
            return None;
        }
        let total = self.observations[0].typed.chars().count();
        let pairs: Vec<&Candidate> = self.pairs.iter().collect();
        let mut found: Vec<Vec<Candidate>> = Vec::new();
        let mut nodes = 0usize;
        let mut cur: Vec<&Candidate> = Vec::new();
        let complete = self.search(&pairs, 0, 0, total, min_pass_images, &mut cur, &mut found, &mut nodes);
        if complete && found.len() == 1 {
            found.pop()
        } else {
            None
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn search<'a>(
        &self,
        pairs: &[&'a Candidate],
        start: usize,
        len: usize,
        total: usize,
        min_k: usize,
        cur: &mut Vec<&'a Candidate>,
        found: &mut Vec<Vec<Candidate>>,
        nodes: &mut usize,
    ) -> bool {
        *nodes += 1;
        if *nodes > SEARCH_NODE_LIMIT || found.len() > 1 {
            return false;
        }
        if len == total {
            if cur.len() >= min_k && self.consistent(cur) {
                found.push(cur.iter().map(|&c| c.clone()).collect());
            }
            return true;
        }
        for i in start..pairs.len() {
            let p = pairs[i];
            if len + p.positions.len() > total || cur.iter().any(|c| c.image == p.image) {
                continue;
            }
            cur.push(p);
            let ok = self.search(pairs, i + 1, len + p.positions.len(), total, min_k, cur, found, nodes);
            cur.pop();
            if !ok {
                return false;
            }
        }
        true
    }

    fn consistent(&self, profile: &[&Candidate]) -> bool {
        self.observations.iter().all(|obs| {
            let codes: Option<Vec<String>> = profile
                .iter()
                .map(|c| obs.text_of(&c.image).map(|t| code_at(t, &c.positions)))
                .collect();
            codes.is_some_and(|codes| matches_some_order(&codes, &obs.typed))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{BlockHint, ObservedCell};

    #[test]
    fn position_subsets() {
        assert_eq!(position_sets(8, 1).len(), 8);
        assert_eq!(position_sets(8, 3).len(), 56);
        assert_eq!(position_sets(4, 4), vec![vec![1, 2, 3, 4]]);
        assert!(position_sets(3, 4).is_empty());
    }

    #[test]
    fn subsequence() {
        assert!(is_subsequence("qaw", "qarwrxex"));
        assert!(!is_subsequence("waq", "qarwrxex"));
        assert!(is_subsequence("", "abc"));
    }

    fn obs(cells: &[(&str, &str)], typed: &str, blocks: &[(usize, usize)]) -> Observation {
        Observation {
            cells: cells
                .iter()
                .map(|(i, t)| ObservedCell {
                    image: ImageId::from(*i),
                    text: (*t).into(),
                })
                .collect(),
            typed: typed.into(),
            keystrokes_ms: None,
            blocks: Some(
                blocks
                    .iter()
                    .map(|&(owner, len)| BlockHint { owner, len })
                    .collect(),
            ),
        }
    }

    #[test]
    fn narrows_and_stays_sound() {
        let model = AttackerModel::oracle();
        // Pass-images a@{1}, b@{2}; decoy c.
        let o1 = obs(&[("a", "xy"), ("b", "zx"), ("c", "xx")], "xx", &[(0, 1), (1, 1)]);
        let s1 = intersect(AttackerState::new(), &o1, &model).unwrap();
        assert_eq!(s1.segments[0].images.len(), 3);
        assert_eq!(s1.segments[0].pairs.len(), 4);
        assert_eq!(s1.captchas_solved, 3);

        // Owners typed in the other order this time.
        let o2 = obs(&[("a", "pq"), ("b", "rs"), ("c", "qq")], "sp", &[(1, 1), (0, 1)]);
        let s2 = intersect(s1.clone(), &o2, &model).unwrap();
        assert!(s2.segments[0].pairs.is_subset(&s1.segments[0].pairs));
        assert_eq!(
            s2.segments[0].pairs.iter().collect::<Vec<_>>(),
            vec![&Candidate { image: "a".into(), positions: vec![1] }]
        );
        assert_eq!(
            s2.segments[1].pairs.iter().collect::<Vec<_>>(),
            vec![&Candidate { image: "b".into(), positions: vec![2] }]
        );
        assert!(s2.all_unique());
        assert_eq!(s2.observations, 2);
        assert_eq!(s2.captchas_solved, 6);
    }

    #[test]
    fn blind_attacker_cannot_intersect() {
        let o = obs(&[("a", "xy")], "x", &[(0, 1)]);
        assert_eq!(
            intersect(AttackerState::new(), &o, &AttackerModel::blind()),
            Err(AttackError::SolverUnavailable)
        );
    }

    #[test]
    fn inconsistent_observation_detected() {
        let model = AttackerModel::oracle();
        let o1 = obs(&[("a", "xy"), ("b", "zz")], "x", &[(0, 1)]);
        let s = intersect(AttackerState::new(), &o1, &model).unwrap();
        let o2 = obs(&[("a", "yy"), ("b", "zz")], "x", &[(0, 1)]);
        assert!(matches!(
            intersect(s, &o2, &model),
            Err(AttackError::InconsistentObservation(_))
        ));
    }

    #[test]
    fn whole_string_block_is_unique_at_once() {
        let model = AttackerModel::oracle();
        let o = obs(&[("a", "mewo"), ("b", "xnco"), ("c", "nvso")], "xnco", &[(0, 4)]);
        let s = intersect(AttackerState::new(), &o, &model).unwrap();
        assert!(s.all_unique());
        assert_eq!(s.segments[0].images.iter().next().unwrap(), &ImageId::from("b"));
    }
}
