use std::collections::{BTreeSet, HashSet};

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::captcha::gen_string_with;
use crate::error::SchemeError;
use crate::params::{ImageId, SchemeParams};
use crate::profile::PasswordProfile;
use crate::rng::rng_from_seed;

/// One image of the login grid and the random string shown under it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCell {
    pub slot: usize,
    pub image: ImageId,
    pub text: String,
}

/// A single login round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Challenge {
    pub id: String,
    pub cells: Vec<GridCell>,
    pub seed: u64,
    pub created_at_ms: u64,
    pub ttl_ms: u64,
    consumed: bool,
}

impl Challenge {
    /// Builds a challenge from explicit cells. Used by tests and replays of
    /// recorded screens; `generate_challenge` is the normal constructor.
    pub fn from_cells(id: impl Into<String>, cells: Vec<GridCell>) -> Self {
        Challenge {
            id: id.into(),
            cells,
            seed: 0,
            created_at_ms: 0,
            ttl_ms: u64::MAX,
            consumed: false,
        }
    }

    pub fn stamped(mut self, created_at_ms: u64) -> Self {
        self.created_at_ms = created_at_ms;
        self
    }

    pub fn with_ttl_ms(mut self, ttl_ms: u64) -> Self {
        self.ttl_ms = ttl_ms;
        self
    }

    pub fn is_consumed(&self) -> bool {
        self.consumed
    }

    pub fn is_expired(&self, now_ms: u64) -> bool {
        now_ms.saturating_sub(self.created_at_ms) > self.ttl_ms
    }

    /// Flips the single-use flag. Fails if it was already set.
    pub fn consume(&mut self) -> Result<(), SchemeError> {
        if self.consumed {
            return Err(SchemeError::ChallengeConsumed);
        }
        self.consumed = true;
        Ok(())
    }

    pub fn text_of(&self, image: &ImageId) -> Option<&str> {
        self.cells
            .iter()
            .find(|c| &c.image == image)
            .map(|c| c.text.as_str())
    }

    pub fn cell(&self, slot: usize) -> Option<&GridCell> {
        self.cells.get(slot)
    }
}

/// Lays out one login round for `profile`.
///
/// The grid holds every pass-image plus `N - K` decoys sampled without
/// replacement from the rest of the pool, in a uniformly shuffled order.
/// Each cell gets an independent uniform string of length `M`; strings are
/// redrawn until all `N` are distinct. The result is a pure function of
/// `(profile, params, seed)`.
pub fn generate_challenge(
    profile: &PasswordProfile,
    params: &SchemeParams,
    seed: u64,
) -> Result<Challenge, SchemeError> {
    params.validate()?;
    let distinct_strings = (params.alphabet_size() as f64).powi(params.string_len as i32);
    if distinct_strings < params.grid_size as f64 {
        return Err(SchemeError::InvalidParams(format!(
            "only {distinct_strings} distinct strings for {} cells",
            params.grid_size
        )));
    }
    let pass: BTreeSet<&ImageId> = profile.pass_images().iter().map(|p| &p.image).collect();
    if pass.len() > params.grid_size {
        return Err(SchemeError::InvalidParams(format!(
            "{} pass-images exceed grid size {}",
            pass.len(),
            params.grid_size
        )));
    }
    if let Some(missing) = pass.iter().find(|id| !params.image_pool.contains(id)) {
        return Err(SchemeError::UnknownImageId((*missing).clone()));
    }

    let mut rng = rng_from_seed(seed);
    let id = format!("{:032x}", rng.random::<u128>());

    let decoy_pool: Vec<&ImageId> = params
        .image_pool
        .iter()
        .filter(|id| !pass.contains(id))
        .collect();
    let decoys = params.grid_size - pass.len();
    let mut images: Vec<ImageId> = pass.iter().map(|&id| id.clone()).collect();
    images.extend(
        index::sample(&mut rng, decoy_pool.len(), decoys)
            .into_iter()
            .map(|i| decoy_pool[i].clone()),
    );
    images.shuffle(&mut rng);

    let mut used = HashSet::with_capacity(images.len());
    let mut cells = Vec::with_capacity(images.len());
    for (slot, image) in images.into_iter().enumerate() {
        let text = loop {
            let s = gen_string_with(&params.alphabet, params.string_len, &mut rng)
                .expect("alphabet validated nonempty");
            if used.insert(s.clone()) {
                break s;
            }
        };
        cells.push(GridCell { slot, image, text });
    }

    Ok(Challenge {
        id,
        cells,
        seed,
        created_at_ms: 0,
        ttl_ms: params.challenge_ttl_secs.saturating_mul(1000),
        consumed: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::numbered_pool;
    use crate::profile::create_profile;

    fn profile(params: &SchemeParams) -> PasswordProfile {
        create_profile(
            "ghc",
            &params.image_pool[..3],
            &[vec![1, 2, 4], vec![4, 6, 8], vec![3, 5]],
            params,
        )
        .unwrap()
    }

    #[test]
    fn fifty_cells_with_pass_images() {
        let params = SchemeParams::experimental();
        let pr = profile(&params);
        let ch = generate_challenge(&pr, &params, 42).unwrap();
        assert_eq!(ch.cells.len(), 50);
        let texts: HashSet<&str> = ch.cells.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(texts.len(), 50);
        let imgs: HashSet<&ImageId> = ch.cells.iter().map(|c| &c.image).collect();
        assert_eq!(imgs.len(), 50);
        for p in pr.pass_images() {
            assert_eq!(ch.cells.iter().filter(|c| c.image == p.image).count(), 1);
        }
        for (i, c) in ch.cells.iter().enumerate() {
            assert_eq!(c.slot, i);
            assert_eq!(c.text.len(), 8);
            assert!(c.text.chars().all(|ch| params.alphabet.contains(&ch)));
        }
    }

    #[test]
    fn same_seed_same_challenge() {
        let params = SchemeParams::experimental();
        let pr = profile(&params);
        let a = generate_challenge(&pr, &params, 42).unwrap();
        let b = generate_challenge(&pr, &params, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_challenge(&pr, &params, 43).unwrap();
        assert_ne!(a.id, c.id);
        assert_ne!(a.cells, c.cells);
    }

    #[test]
    fn no_decoys_when_grid_equals_profile() {
        let params = SchemeParams::new(3, 8);
        let pr = profile(&params);
        let ch = generate_challenge(&pr, &params, 1).unwrap();
        let imgs: BTreeSet<&ImageId> = ch.cells.iter().map(|c| &c.image).collect();
        let pass: BTreeSet<&ImageId> = pr.pass_images().iter().map(|p| &p.image).collect();
        assert_eq!(imgs, pass);
    }

    #[test]
    fn pool_too_small() {
        let params = SchemeParams::new(50, 8);
        let pr = profile(&params);
        let small = params.clone().with_pool(numbered_pool(49));
        assert_eq!(
            generate_challenge(&pr, &small, 0),
            Err(SchemeError::PoolTooSmall { pool: 49, needed: 50 })
        );
    }

    #[test]
    fn larger_pool_samples_decoys() {
        let params = SchemeParams::new(10, 8).with_pool(numbered_pool(40));
        let pr = profile(&params);
        let ch = generate_challenge(&pr, &params, 5).unwrap();
        assert_eq!(ch.cells.len(), 10);
        let imgs: HashSet<&ImageId> = ch.cells.iter().map(|c| &c.image).collect();
        assert_eq!(imgs.len(), 10);
    }

    #[test]
    fn consume_once() {
        let params = SchemeParams::new(3, 8);
        let mut ch = generate_challenge(&profile(&params), &params, 1).unwrap();
        assert!(!ch.is_consumed());
        ch.consume().unwrap();
        assert_eq!(ch.consume(), Err(SchemeError::ChallengeConsumed));
    }

    #[test]
    fn expiry_window() {
        let params = SchemeParams::new(3, 8);
        let ch = generate_challenge(&profile(&params), &params, 1)
            .unwrap()
            .stamped(1_000);
        assert!(!ch.is_expired(1_000 + 300_000));
        assert!(ch.is_expired(1_000 + 300_001));
    }
}
