//! 5x7 lowercase bitmap font. `#` is ink.

pub const GLYPH_W: usize = 5;
pub const GLYPH_H: usize = 7;

const GLYPHS: [[&str; GLYPH_H]; 26] = [
    [".....", ".....", ".###.", "....#", ".####", "#...#", ".####"], // a
    ["#....", "#....", "#.##.", "##..#", "#...#", "#...#", "####."], // b
    [".....", ".....", ".###.", "#....", "#....", "#...#", ".###."], // c
    ["....#", "....#", ".##.#", "#..##", "#...#", "#...#", ".####"], // d
    [".....", ".....", ".###.", "#...#", "#####", "#....", ".###."], // e
    ["..##.", ".#..#", ".#...", "###..", ".#...", ".#...", ".#..."], // f
    [".....", ".####", "#...#", "#...#", ".####", "....#", ".###."], // g
    ["#....", "#....", "#.##.", "##..#", "#...#", "#...#", "#...#"], // h
    ["..#..", ".....", ".##..", "..#..", "..#..", "..#..", ".###."], // i
    ["...#.", ".....", "..##.", "...#.", "...#.", "#..#.", ".##.."], // j
    ["#....", "#....", "#..#.", "#.#..", "##...", "#.#..", "#..#."], // k
    [".##..", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."], // l
    [".....", ".....", "##.#.", "#.#.#", "#.#.#", "#...#", "#...#"], // m
    [".....", ".....", "#.##.", "##..#", "#...#", "#...#", "#...#"], // n
    [".....", ".....", ".###.", "#...#", "#...#", "#...#", ".###."], // o
    [".....", "####.", "#...#", "#...#", "####.", "#....", "#...."], // p
    [".....", ".####", "#...#", "#...#", ".####", "....#", "....#"], // q
    [".....", ".....", "#.##.", "##..#", "#....", "#....", "#...."], // r
    [".....", ".....", ".####", "#....", ".###.", "....#", "####."], // s
    [".#...", ".#...", "###..", ".#...", ".#...", ".#..#", "..##."], // t
    [".....", ".....", "#...#", "#...#", "#...#", "#..##", ".##.#"], // u
    [".....", ".....", "#...#", "#...#", "#...#", ".#.#.", "..#.."], // v
    [".....", ".....", "#...#", "#...#", "#.#.#", "#.#.#", ".#.#."], // w
    [".....", ".....", "#...#", ".#.#.", "..#..", ".#.#.", "#...#"], // x
    [".....", "#...#", "#...#", "#...#", ".####", "....#", ".###."], // y
    [".....", ".....", "#####", "...#.", "..#..", ".#...", "#####"], // z
];

/// Row-major ink mask of a glyph, or `None` for characters outside `a..=z`.
pub fn glyph(c: char) -> Option<[[bool; GLYPH_W]; GLYPH_H]> {
    if !c.is_ascii_lowercase() {
        return None;
    }
    let rows = &GLYPHS[(c as u8 - b'a') as usize];
    let mut out = [[false; GLYPH_W]; GLYPH_H];
    for (y, row) in rows.iter().enumerate() {
        for (x, b) in row.bytes().enumerate() {
            out[y][x] = b == b'#';
        }
    }
    Some(out)
}

pub fn is_supported(c: char) -> bool {
    c.is_ascii_lowercase()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_letter_defined_and_distinct() {
        let mut seen = std::collections::HashSet::new();
        for c in 'a'..='z' {
            let g = glyph(c).unwrap();
            assert!(g.iter().flatten().any(|&b| b), "{c} has no ink");
            assert!(seen.insert(g), "{c} duplicates another glyph");
        }
        for rows in GLYPHS.iter() {
            assert!(rows.iter().all(|r| r.len() == GLYPH_W));
        }
        assert!(glyph('A').is_none());
        assert!(glyph('1').is_none());
    }
}
