//! Random adjunctive strings and their distorted raster rendering.

pub mod font;
mod render;

use rand::Rng;
use thiserror::Error;

use crate::rng::rng_from_seed;

pub use render::{encode_gray_png, render, GlyphBox, RenderParams, RenderedCaptcha};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CaptchaError {
    #[error("alphabet is empty")]
    EmptyAlphabet,
    #[error("text is empty")]
    EmptyText,
    #[error("unsupported glyph {0:?}")]
    UnsupportedGlyph(char),
    #[error("invalid render parameters: {0}")]
    InvalidParams(String),
    #[error("png encoding failed: {0}")]
    Png(String),
}

/// Length-`len` string with characters drawn i.i.d. uniformly from `alphabet`.
pub fn gen_string(alphabet: &[char], len: usize, seed: u64) -> Result<String, CaptchaError> {
    let mut rng = rng_from_seed(seed);
    gen_string_with(alphabet, len, &mut rng)
}

pub fn gen_string_with<R: Rng + ?Sized>(
    alphabet: &[char],
    len: usize,
    rng: &mut R,
) -> Result<String, CaptchaError> {
    if alphabet.is_empty() {
        return Err(CaptchaError::EmptyAlphabet);
    }
    Ok((0..len)
        .map(|_| alphabet[rng.random_range(0..alphabet.len())])
        .collect())
}
