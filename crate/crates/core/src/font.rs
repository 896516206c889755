//! A 5×5 bitmap font shared by the screenshot renderer, the toy surrogate's
//! template bank and the plotting code.

pub const GLYPH_SIZE: usize = 5;

/// Characters with a glyph, in template-bank order (after the end marker).
pub const GLYPH_CHARS: &str = "abcdefghijklmnopqrstuvwxyz0123456789@.- ";

/// Drawn after every rendered value so a reader knows where it stops.
pub const END_MARKER: [&str; 5] = ["#.#.#", ".....", "#.#.#", ".....", "#.#.#"];

pub type Bitmap = [&'static str; 5];

pub fn glyph(c: char) -> Option<Bitmap> {
    let g: Bitmap = match c.to_ascii_lowercase() {
        'a' => [".###.", "#...#", "#####", "#...#", "#...#"],
        'b' => ["####.", "#...#", "####.", "#...#", "####."],
        'c' => [".####", "#....", "#....", "#....", ".####"],
        'd' => ["####.", "#...#", "#...#", "#...#", "####."],
        'e' => ["#####", "#....", "####.", "#....", "#####"],
        'f' => ["#####", "#....", "####.", "#....", "#...."],
        'g' => [".####", "#....", "#..##", "#...#", ".###."],
        'h' => ["#...#", "#...#", "#####", "#...#", "#...#"],
        'i' => ["#####", "..#..", "..#..", "..#..", "#####"],
        'j' => ["..###", "...#.", "...#.", "#..#.", ".##.."],
        'k' => ["#..#.", "#.#..", "##...", "#.#..", "#..#."],
        'l' => ["#....", "#....", "#....", "#....", "#####"],
        'm' => ["#...#", "##.##", "#.#.#", "#...#", "#...#"],
        'n' => ["#...#", "##..#", "#.#.#", "#..##", "#...#"],
        'o' => [".###.", "#...#", "#...#", "#...#", ".###."],
        'p' => ["####.", "#...#", "####.", "#....", "#...."],
        'q' => [".###.", "#...#", "#.#.#", "#..#.", ".##.#"],
        'r' => ["####.", "#...#", "####.", "#..#.", "#...#"],
        's' => [".####", "#....", ".###.", "....#", "####."],
        't' => ["#####", "..#..", "..#..", "..#..", "..#.."],
        'u' => ["#...#", "#...#", "#...#", "#...#", ".###."],
        'v' => ["#...#", "#...#", "#...#", ".#.#.", "..#.."],
        'w' => ["#...#", "#...#", "#.#.#", "##.##", "#...#"],
        'x' => ["#...#", ".#.#.", "..#..", ".#.#.", "#...#"],
        'y' => ["#...#", ".#.#.", "..#..", "..#..", "..#.."],
        'z' => ["#####", "...#.", "..#..", ".#...", "#####"],
        '0' => [".###.", "#..##", "#.#.#", "##..#", ".###."],
        '1' => ["..#..", ".##..", "..#..", "..#..", ".###."],
        '2' => [".###.", "#...#", "..##.", ".#...", "#####"],
        '3' => ["####.", "....#", "..##.", "....#", "####."],
        '4' => ["#..#.", "#..#.", "#####", "...#.", "...#."],
        '5' => ["#####", "#....", "####.", "....#", "####."],
        '6' => [".###.", "#....", "####.", "#...#", ".###."],
        '7' => ["#####", "....#", "...#.", "..#..", "..#.."],
        '8' => [".###.", "#...#", ".###.", "#...#", ".###."],
        '9' => [".###.", "#...#", ".####", "....#", ".###."],
        '@' => [".###.", "#.###", "#.#.#", "#.###", ".##.."],
        '.' => [".....", ".....", ".....", ".....", "..#.."],
        '-' => [".....", ".....", ".###.", ".....", "....."],
        ' ' => [".....", ".....", ".....", ".....", "#...#"],
        ':' => [".....", "..#..", ".....", "..#..", "....."],
        ',' => [".....", ".....", ".....", "..#..", ".#..."],
        '/' => ["....#", "...#.", "..#..", ".#...", "#...."],
        '=' => [".....", "#####", ".....", "#####", "....."],
        '+' => [".....", "..#..", ".###.", "..#..", "....."],
        '(' => ["...#.", "..#..", "..#..", "..#..", "...#."],
        ')' => [".#...", "..#..", "..#..", "..#..", ".#..."],
        _ => return None,
    };
    Some(g)
}

/// Row-major 0/1 pixels of a bitmap.
pub fn pixels(b: &Bitmap) -> [f64; GLYPH_SIZE * GLYPH_SIZE] {
    let mut out = [0.0; GLYPH_SIZE * GLYPH_SIZE];
    for (r, row) in b.iter().enumerate() {
        for (c, ch) in row.bytes().enumerate() {
            out[r * GLYPH_SIZE + c] = if ch == b'#' { 1.0 } else { 0.0 };
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_reader_glyph_is_present_and_distinct() {
        let mut seen: Vec<[f64; 25]> = vec![pixels(&END_MARKER)];
        for c in GLYPH_CHARS.chars() {
            let p = pixels(&glyph(c).unwrap());
            assert!(p.iter().any(|v| *v > 0.0), "{c:?} is blank");
            assert!(!seen.contains(&p), "{c:?} duplicates another glyph");
            seen.push(p);
        }
    }

    #[test]
    fn rows_are_five_wide() {
        for c in GLYPH_CHARS.chars().chain(":,/=+()".chars()) {
            for row in glyph(c).unwrap() {
                assert_eq!(row.len(), 5, "{c:?}");
            }
        }
    }
}
