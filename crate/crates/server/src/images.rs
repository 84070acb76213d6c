//! Pass-image pool: a directory of PNG files, or generated placeholder tiles.

use std::path::{Path, PathBuf};

use captchapass_core::captcha::encode_gray_png;
use captchapass_core::params::numbered_pool;
use captchapass_core::ImageId;

pub const TILE: usize = 60;

/// Lists `*.png` files in `dir`, sorted; the file stem is the image id.
pub fn scan_dir(dir: &Path) -> std::io::Result<Vec<(ImageId, PathBuf)>> {
    let mut ids = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                ids.push((ImageId::new(stem), path.clone()));
            }
        }
    }
    ids.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(ids)
}

pub fn placeholder_pool(n: usize) -> Vec<ImageId> {
    numbered_pool(n)
}

fn fnv1a(data: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in data {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// 60x60 grayscale tile: a horizontally mirrored 5x5 block pattern on a
/// background shade, both keyed by a hash of the id.
pub fn placeholder_tile(id: &ImageId) -> Vec<u8> {
    let h = fnv1a(id.as_str().as_bytes());
    let background = 170 + (h >> 56) as u8 % 80;
    let ink = (h >> 48) as u8 % 90;
    let block = TILE / 6;
    let margin = (TILE - 5 * block) / 2;
    let mut px = vec![background; TILE * TILE];
    for row in 0..5 {
        for col in 0..3 {
            if (h >> (row * 3 + col)) & 1 == 0 {
                continue;
            }
            for mirrored in [col, 4 - col] {
                for y in 0..block {
                    for x in 0..block {
                        let py = margin + row * block + y;
                        let px_x = margin + mirrored * block + x;
                        px[py * TILE + px_x] = ink;
                    }
                }
            }
        }
    }
    px
}

pub fn placeholder_png(id: &ImageId) -> Vec<u8> {
    encode_gray_png(TILE, TILE, &placeholder_tile(id)).expect("tile dimensions are fixed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiles_are_deterministic_and_differ() {
        let a = placeholder_tile(&"img000".into());
        assert_eq!(a, placeholder_tile(&"img000".into()));
        assert_ne!(a, placeholder_tile(&"img001".into()));
        assert_eq!(a.len(), TILE * TILE);
    }

    #[test]
    fn scans_png_files_only() {
        let dir = std::env::temp_dir().join(format!("cpimg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("b.png"), placeholder_png(&"b".into())).unwrap();
        std::fs::write(dir.join("a.PNG"), placeholder_png(&"a".into())).unwrap();
        std::fs::write(dir.join("notes.txt"), "x").unwrap();
        let ids: Vec<ImageId> = scan_dir(&dir).unwrap().into_iter().map(|(id, _)| id).collect();
        assert_eq!(ids, vec![ImageId::from("a"), ImageId::from("b")]);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
