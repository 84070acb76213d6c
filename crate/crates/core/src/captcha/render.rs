use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::font::{self, GLYPH_H, GLYPH_W};
use super::CaptchaError;
use crate::rng::{derive_seed, rng_from_seed};

pub const INK: u8 = 0;
pub const BLANK: u8 = 255;

/// Distortion knobs. Lengths are in pixels, `rotation_jitter` in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderParams {
    pub glyph_height: u32,
    pub rotation_jitter: f64,
    pub wave_amplitude: f64,
    pub wave_period: f64,
    pub overlap: u32,
    pub noise_density: f64,
    pub seed: u64,
}

impl Default for RenderParams {
    /// Sized so an eight-letter string fits under a 60 px wide image cell.
    fn default() -> Self {
        RenderParams {
            glyph_height: 14,
            rotation_jitter: 10.0,
            wave_amplitude: 1.5,
            wave_period: 20.0,
            overlap: 4,
            noise_density: 0.03,
            seed: 0,
        }
    }
}

impl RenderParams {
    /// No rotation, wave, overlap or noise.
    pub fn plain(glyph_height: u32) -> Self {
        RenderParams {
            glyph_height,
            rotation_jitter: 0.0,
            wave_amplitude: 0.0,
            wave_period: 0.0,
            overlap: 0,
            noise_density: 0.0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn glyph_width(&self) -> usize {
        (((self.glyph_height as usize) * GLYPH_W + GLYPH_H / 2) / GLYPH_H).max(1)
    }

    fn validate(&self) -> Result<(), CaptchaError> {
        let bad = |m: &str| Err(CaptchaError::InvalidParams(m.to_owned()));
        if self.glyph_height == 0 {
            return bad("glyph_height must be positive");
        }
        if self.glyph_height > 512 {
            return bad("glyph_height above 512");
        }
        if !(0.0..=90.0).contains(&self.rotation_jitter) {
            return bad("rotation_jitter must lie in [0, 90]");
        }
        if !(self.wave_amplitude.is_finite() && self.wave_amplitude >= 0.0) {
            return bad("wave_amplitude must be a nonnegative number");
        }
        if self.wave_amplitude > 4.0 * self.glyph_height as f64 {
            return bad("wave_amplitude above four glyph heights");
        }
        if !(self.wave_period.is_finite() && self.wave_period >= 0.0) {
            return bad("wave_period must be a nonnegative number");
        }
        if self.overlap as usize >= self.glyph_width() {
            return bad("overlap must be smaller than the glyph width");
        }
        if !(0.0..=0.25).contains(&self.noise_density) {
            return bad("noise_density must lie in [0, 0.25]");
        }
        Ok(())
    }
}

/// Canvas region reserved for one glyph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlyphBox {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

/// 8-bit grayscale raster, row-major, dark ink on white.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedCaptcha {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
    pub text: String,
    pub glyph_boxes: Vec<GlyphBox>,
}

impl RenderedCaptcha {
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Non-interlaced 8-bit grayscale PNG.
    pub fn to_png(&self) -> Result<Vec<u8>, CaptchaError> {
        encode_gray_png(self.width, self.height, &self.pixels)
    }
}

/// Encodes a row-major 8-bit grayscale buffer as a non-interlaced PNG.
pub fn encode_gray_png(width: usize, height: usize, pixels: &[u8]) -> Result<Vec<u8>, CaptchaError> {
    if width * height != pixels.len() {
        return Err(CaptchaError::Png(format!(
            "{width}x{height} does not match {} pixels",
            pixels.len()
        )));
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| CaptchaError::Png(e.to_string()))?;
        writer
            .write_image_data(pixels)
            .map_err(|e| CaptchaError::Png(e.to_string()))?;
    }
    Ok(out)
}

/// Nearest-neighbour scale of the 5x7 font to `w` x `h`.
fn scaled_glyph(c: char, w: usize, h: usize) -> Result<Vec<bool>, CaptchaError> {
    let g = font::glyph(c).ok_or(CaptchaError::UnsupportedGlyph(c))?;
    let mut out = vec![false; w * h];
    for y in 0..h {
        let sy = y * GLYPH_H / h;
        for x in 0..w {
            let sx = x * GLYPH_W / w;
            out[y * w + x] = g[sy][sx];
        }
    }
    Ok(out)
}

/// Extent of a `w` x `h` box rotated by any angle in `[0, max_deg]`.
fn rotated_extent(w: usize, h: usize, max_deg: f64) -> (usize, usize) {
    if max_deg == 0.0 {
        return (w, h);
    }
    let (wf, hf) = (w as f64, h as f64);
    let max = max_deg.to_radians();
    let tw = max.min(hf.atan2(wf));
    let th = max.min(wf.atan2(hf));
    let bw = wf * tw.cos() + hf * tw.sin();
    let bh = wf * th.sin() + hf * th.cos();
    (bw.ceil() as usize + 2, bh.ceil() as usize + 2)
}

/// Rotates the glyph by `angle` radians about its centre into a `bw` x `bh` box.
fn rotate_into(src: &[bool], w: usize, h: usize, angle: f64, bw: usize, bh: usize) -> Vec<bool> {
    let mut out = vec![false; bw * bh];
    let (sin, cos) = angle.sin_cos();
    let (cx, cy) = (bw as f64 / 2.0, bh as f64 / 2.0);
    let (gx, gy) = (w as f64 / 2.0, h as f64 / 2.0);
    for y in 0..bh {
        let dy = y as f64 + 0.5 - cy;
        for x in 0..bw {
            let dx = x as f64 + 0.5 - cx;
            let sx = dx * cos + dy * sin + gx;
            let sy = -dx * sin + dy * cos + gy;
            if sx >= 0.0 && sy >= 0.0 && sx < w as f64 && sy < h as f64 {
                out[y * bw + x] = src[sy as usize * w + sx as usize];
            }
        }
    }
    out
}

/// Renders `text` as a distorted CAPTCHA.
///
/// Pipeline: scale the bitmap font to `glyph_height`, rotate each glyph by a
/// random angle in `[-rotation_jitter, rotation_jitter]`, pack the glyphs with
/// `overlap` pixels of horizontal overlap, displace every column vertically
/// along a sine wave, then flip each pixel independently with probability
/// `noise_density`. Geometry and noise use separate sub-streams of `seed`, so
/// changing only the noise density leaves the glyph layout untouched.
pub fn render(text: &str, params: &RenderParams) -> Result<RenderedCaptcha, CaptchaError> {
    params.validate()?;
    if text.is_empty() {
        return Err(CaptchaError::EmptyText);
    }
    if let Some(c) = text.chars().find(|&c| !font::is_supported(c)) {
        return Err(CaptchaError::UnsupportedGlyph(c));
    }

    let gh = params.glyph_height as usize;
    let gw = params.glyph_width();
    let (bw, bh) = rotated_extent(gw, gh, params.rotation_jitter);
    let advance = gw - params.overlap as usize;
    let n = text.chars().count();
    let slack = params.wave_amplitude.ceil() as usize;

    let width = advance * (n - 1) + bw;
    let height = bh + 2 * slack;
    let mut pixels = vec![BLANK; width * height];

    let mut geom = rng_from_seed(derive_seed(params.seed, 1));
    let mut boxes = Vec::with_capacity(n);
    // Ink layer before the wave; boxes may overlap horizontally.
    let mut layer = vec![false; width * bh];
    for (i, c) in text.chars().enumerate() {
        let glyph = scaled_glyph(c, gw, gh)?;
        let angle = if params.rotation_jitter > 0.0 {
            geom.random_range(-params.rotation_jitter..=params.rotation_jitter)
                .to_radians()
        } else {
            0.0
        };
        let rotated = rotate_into(&glyph, gw, gh, angle, bw, bh);
        let x0 = i * advance;
        for y in 0..bh {
            for x in 0..bw {
                if rotated[y * bw + x] {
                    layer[y * width + x0 + x] = true;
                }
            }
        }
        boxes.push(GlyphBox {
            x: x0,
            y: 0,
            width: bw,
            height,
        });
    }

    let wave = params.wave_amplitude > 0.0 && params.wave_period > 0.0;
    for x in 0..width {
        let shift = if wave {
            (params.wave_amplitude * (2.0 * PI * x as f64 / params.wave_period).sin()).round()
                as isize
        } else {
            0
        };
        let base = slack as isize + shift;
        for y in 0..bh {
            if layer[y * width + x] {
                let ty = (y as isize + base) as usize;
                pixels[ty * width + x] = INK;
            }
        }
    }

    if params.noise_density > 0.0 {
        let mut noise = rng_from_seed(derive_seed(params.seed, 2));
        for p in pixels.iter_mut() {
            if noise.random::<f64>() < params.noise_density {
                *p = 255 - *p;
            }
        }
    }

    Ok(RenderedCaptcha {
        width,
        height,
        pixels,
        text: text.to_owned(),
        glyph_boxes: boxes,
    })
}
