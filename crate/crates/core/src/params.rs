use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::SchemeError;

/// Opaque identifier of an image in the pool.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImageId(pub String);

impl ImageId {
    pub fn new(id: impl Into<String>) -> Self {
        ImageId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ImageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ImageId {
    fn from(s: &str) -> Self {
        ImageId(s.to_owned())
    }
}

pub const LOWERCASE: &str = "abcdefghijklmnopqrstuvwxyz";

/// Tunable constants of the scheme.
///
/// `grid_size` is the number of images shown per round, `string_len` the
/// length of the random string under each image, and `rounds` the number of
/// challenges a login consists of.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub grid_size: usize,
    pub string_len: usize,
    pub alphabet: Vec<char>,
    pub min_pass_images: usize,
    pub rounds: usize,
    pub image_pool: Vec<ImageId>,
    pub challenge_ttl_secs: u64,
}

impl SchemeParams {
    /// Parameters with a generated pool `img000..` of exactly `grid_size` images.
    pub fn new(grid_size: usize, string_len: usize) -> Self {
        SchemeParams {
            grid_size,
            string_len,
            alphabet: LOWERCASE.chars().collect(),
            min_pass_images: 3,
            rounds: 1,
            image_pool: numbered_pool(grid_size),
            challenge_ttl_secs: 300,
        }
    }

    /// Experimental layout: fifty images, eight-character strings.
    pub fn experimental() -> Self {
        Self::new(50, 8)
    }

    /// Layout used by the spyware cost analysis: a hundred images on screen.
    pub fn analytical() -> Self {
        Self::new(100, 8)
    }

    /// Four-character strings with every position typed.
    pub fn basic() -> Self {
        Self::new(50, 4)
    }

    pub fn with_pool(mut self, pool: Vec<ImageId>) -> Self {
        self.image_pool = pool;
        self
    }

    pub fn with_alphabet(mut self, alphabet: &str) -> Self {
        self.alphabet = alphabet.chars().collect();
        self
    }

    pub fn with_min_pass_images(mut self, k: usize) -> Self {
        self.min_pass_images = k;
        self
    }

    pub fn with_rounds(mut self, rounds: usize) -> Self {
        self.rounds = rounds;
        self
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        let bad = |msg: String| Err(SchemeError::InvalidParams(msg));
        if self.grid_size == 0 {
            return bad("grid_size must be positive".into());
        }
        if self.grid_size < self.min_pass_images {
            return bad(format!(
                "grid_size {} is smaller than min_pass_images {}",
                self.grid_size, self.min_pass_images
            ));
        }
        if self.string_len == 0 {
            return bad("string_len must be positive".into());
        }
        if self.rounds == 0 {
            return bad("rounds must be positive".into());
        }
        if self.alphabet.len() < 2 {
            return bad("alphabet needs at least two characters".into());
        }
        let distinct: BTreeSet<char> = self.alphabet.iter().copied().collect();
        if distinct.len() != self.alphabet.len() {
            return bad("alphabet characters must be distinct".into());
        }
        let pool: BTreeSet<&ImageId> = self.image_pool.iter().collect();
        if pool.len() != self.image_pool.len() {
            return bad("image pool contains duplicate identifiers".into());
        }
        if self.image_pool.len() < self.grid_size {
            return Err(SchemeError::PoolTooSmall {
                pool: self.image_pool.len(),
                needed: self.grid_size,
            });
        }
        Ok(())
    }
}

impl Default for SchemeParams {
    fn default() -> Self {
        Self::experimental()
    }
}

/// `img000`, `img001`, ... zero padded to three digits.
pub fn numbered_pool(n: usize) -> Vec<ImageId> {
    (0..n).map(|i| ImageId(format!("img{i:03}"))).collect()
}
