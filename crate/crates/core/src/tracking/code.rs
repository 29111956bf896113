//! 6×6 binary marker code.
//!
//! The outer ring of cells is always black. The 4×4 interior holds 16 bits,
//! row-major from the top-left interior cell, 1 = white. Bits 0..14 carry
//! data; bit 14 is the even parity of data bits 0, 2, .., 12 and bit 15 the
//! even parity of data bits 1, 3, .., 13. The dictionary keeps, in
//! ascending data order, every word that
//! - has between 4 and 12 white bits,
//! - differs from each of its own non-trivial rotations in at least 3 bits,
//! - differs from every rotation of every earlier word in at least 3 bits.
//!
//! Marker ids are positions in that list, so any two rotated readings are
//! at least 3 bits apart and one flipped bit is still decoded uniquely.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub const GRID: usize = 6;
pub const INTERIOR: usize = 4;
pub const MIN_DISTANCE: u32 = 3;

/// Row-major 6×6 cells, `true` = white.
pub type BitGrid = [[bool; GRID]; GRID];

pub fn with_parity(data: u16) -> u16 {
    let data = data & 0x3fff;
    let mut even = 0;
    let mut odd = 0;
    for b in 0..14 {
        let bit = (data >> b) & 1;
        if b % 2 == 0 {
            even ^= bit;
        } else {
            odd ^= bit;
        }
    }
    data | (even << 14) | (odd << 15)
}

pub fn parity_ok(word: u16) -> bool {
    with_parity(word) == word
}

/// Rotates the 4×4 interior a quarter turn clockwise.
pub fn rotate_word(word: u16) -> u16 {
    let mut out = 0u16;
    for r in 0..INTERIOR {
        for c in 0..INTERIOR {
            if (word >> (r * INTERIOR + c)) & 1 == 1 {
                // (r, c) moves to (c, n-1-r).
                let (nr, nc) = (c, INTERIOR - 1 - r);
                out |= 1 << (nr * INTERIOR + nc);
            }
        }
    }
    out
}

pub fn rotations(word: u16) -> [u16; 4] {
    let r1 = rotate_word(word);
    let r2 = rotate_word(r1);
    [word, r1, r2, rotate_word(r2)]
}

pub fn hamming(a: u16, b: u16) -> u32 {
    (a ^ b).count_ones()
}

/// First `n` words of the greedy dictionary (fewer if the code space runs
/// out).
pub fn greedy_words(n: usize) -> Vec<u16> {
    let mut words: Vec<u16> = Vec::new();
    for data in 0u16..(1 << 14) {
        if words.len() == n {
            break;
        }
        let w = with_parity(data);
        let ones = w.count_ones();
        if !(4..=12).contains(&ones) {
            continue;
        }
        let rots = rotations(w);
        if rots[1..].iter().any(|&r| hamming(w, r) < MIN_DISTANCE) {
            continue;
        }
        let clash = words
            .iter()
            .any(|&prev| rots.iter().any(|&r| hamming(prev, r) < MIN_DISTANCE));
        if !clash {
            words.push(w);
        }
    }
    words
}

pub fn word_to_grid(word: u16) -> BitGrid {
    let mut g = [[false; GRID]; GRID];
    for r in 0..INTERIOR {
        for c in 0..INTERIOR {
            g[r + 1][c + 1] = (word >> (r * INTERIOR + c)) & 1 == 1;
        }
    }
    g
}

/// Interior word of a grid, or `None` if a border cell is white.
pub fn grid_to_word(g: &BitGrid) -> Option<u16> {
    for i in 0..GRID {
        if g[0][i] || g[GRID - 1][i] || g[i][0] || g[i][GRID - 1] {
            return None;
        }
    }
    let mut w = 0u16;
    for r in 0..INTERIOR {
        for c in 0..INTERIOR {
            if g[r + 1][c + 1] {
                w |= 1 << (r * INTERIOR + c);
            }
        }
    }
    Some(w)
}

/// Rotates a full grid a quarter turn clockwise.
pub fn rotate_grid(g: &BitGrid) -> BitGrid {
    let mut out = [[false; GRID]; GRID];
    for (r, row) in g.iter().enumerate() {
        for (c, &b) in row.iter().enumerate() {
            out[c][GRID - 1 - r] = b;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkerDescriptor {
    pub id: u32,
    pub bits: BitGrid,
    pub side_mm: f64,
}

impl MarkerDescriptor {
    pub fn word(&self) -> Option<u16> {
        grid_to_word(&self.bits)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DictionaryError {
    #[error("marker {0}: border cells must be black")]
    Border(u32),
    #[error("marker {0}: interior fails the parity check")]
    Parity(u32),
    #[error("duplicate marker id {0}")]
    DuplicateId(u32),
    #[error("markers {0} and {1} are closer than {MIN_DISTANCE} bits under rotation")]
    TooClose(u32, u32),
    #[error("marker {0}: side length must be positive")]
    BadSide(u32),
}

/// Decoded reading of one sampled grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decoded {
    pub id: u32,
    /// Quarter turns (clockwise) that map the observed interior onto the
    /// stored one.
    pub rotation: u8,
    pub distance: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dictionary {
    pub markers: Vec<MarkerDescriptor>,
}

impl Dictionary {
    /// The first `n` greedy words as ids `0..n`, all with the same side.
    pub fn standard(n: usize, side_mm: f64) -> Self {
        let markers = greedy_words(n)
            .into_iter()
            .enumerate()
            .map(|(id, w)| MarkerDescriptor {
                id: id as u32,
                bits: word_to_grid(w),
                side_mm,
            })
            .collect();
        Dictionary { markers }
    }

    pub fn new(markers: Vec<MarkerDescriptor>) -> Result<Self, DictionaryError> {
        let d = Dictionary { markers };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), DictionaryError> {
        let mut words: Vec<(u32, u16)> = Vec::with_capacity(self.markers.len());
        for m in &self.markers {
            if !(m.side_mm.is_finite() && m.side_mm > 0.0) {
                return Err(DictionaryError::BadSide(m.id));
            }
            let w = m.word().ok_or(DictionaryError::Border(m.id))?;
            if !parity_ok(w) {
                return Err(DictionaryError::Parity(m.id));
            }
            for &(id, prev) in &words {
                if id == m.id {
                    return Err(DictionaryError::DuplicateId(m.id));
                }
                if rotations(w).iter().any(|&r| hamming(prev, r) < MIN_DISTANCE) {
                    return Err(DictionaryError::TooClose(id, m.id));
                }
            }
            words.push((m.id, w));
        }
        Ok(())
    }

    pub fn get(&self, id: u32) -> Option<&MarkerDescriptor> {
        self.markers.iter().find(|m| m.id == id)
    }

    /// Best match for an observed interior word over the 4 rotations,
    /// accepting at most one flipped bit.
    pub fn decode(&self, observed: u16) -> Option<Decoded> {
        let rots = rotations(observed);
        let mut best: Option<Decoded> = None;
        for m in &self.markers {
            let Some(w) = m.word() else { continue };
            for (k, &r) in rots.iter().enumerate() {
                let d = hamming(w, r);
                if d <= 1 && best.is_none_or(|b| d < b.distance) {
                    best = Some(Decoded {
                        id: m.id,
                        rotation: k as u8,
                        distance: d,
                    });
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parity_round_trip() {
        for d in [0u16, 1, 0x1555, 0x2aaa, 0x3fff] {
            let w = with_parity(d);
            assert!(parity_ok(w));
            assert!(!parity_ok(w ^ 1));
            assert!(!parity_ok(w ^ (1 << 15)));
        }
    }

    #[test]
    fn rotation_has_order_four() {
        for w in [1u16, 0x8001, 0x1234, 0xbeef] {
            let r = rotations(w);
            assert_eq!(rotate_word(r[3]), w);
            assert_eq!(r[1].count_ones(), w.count_ones());
        }
        // Top-left interior cell goes to top-right under a clockwise turn.
        assert_eq!(rotate_word(1), 1 << 3);
    }

    #[test]
    fn grid_and_word_rotations_agree() {
        let w = with_parity(0x1a2b);
        let g = rotate_grid(&word_to_grid(w));
        assert_eq!(grid_to_word(&g), Some(rotate_word(w)));
    }

    #[test]
    fn dictionary_is_well_separated() {
        let d = Dictionary::standard(100, 50.0);
        assert_eq!(d.markers.len(), 100);
        d.validate().unwrap();
        let words: Vec<u16> = d.markers.iter().map(|m| m.word().unwrap()).collect();
        for (i, &a) in words.iter().enumerate() {
            for &b in &words[i + 1..] {
                for r in rotations(b) {
                    assert!(hamming(a, r) >= MIN_DISTANCE);
                }
            }
        }
    }

    #[test]
    fn decode_all_rotations_and_single_flips() {
        let d = Dictionary::standard(50, 50.0);
        for m in &d.markers {
            let w = m.word().unwrap();
            for (k, r) in rotations(w).into_iter().enumerate() {
                let hit = d.decode(r).unwrap();
                assert_eq!(hit.id, m.id);
                assert_eq!(hit.distance, 0);
                assert_eq!(rotate_word_n(r, hit.rotation), w, "rotation {k}");
                for b in 0..16 {
                    let hit = d.decode(r ^ (1 << b)).unwrap();
                    assert_eq!((hit.id, hit.distance), (m.id, 1));
                }
            }
        }
    }

    fn rotate_word_n(w: u16, n: u8) -> u16 {
        (0..n).fold(w, |w, _| rotate_word(w))
    }

    #[test]
    fn validation_rejects_bad_markers() {
        let good = Dictionary::standard(2, 40.0);
        let mut m = good.markers.clone();
        m[1].bits[0][2] = true;
        assert_eq!(Dictionary::new(m), Err(DictionaryError::Border(1)));
        let mut m = good.markers.clone();
        m[1].id = 0;
        assert_eq!(Dictionary::new(m), Err(DictionaryError::DuplicateId(0)));
        let mut m = good.markers.clone();
        m[1].bits = rotate_grid(&m[0].bits);
        assert_eq!(Dictionary::new(m), Err(DictionaryError::TooClose(0, 1)));
        let mut m = good.markers.clone();
        m[0].bits[1][1] = !m[0].bits[1][1];
        assert_eq!(Dictionary::new(m), Err(DictionaryError::Parity(0)));
    }
}
