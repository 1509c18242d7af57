//! Binary input planes for the policy network.
//!
//! | planes  | meaning                                                  |
//! |---------|----------------------------------------------------------|
//! | 0..3    | black / white / empty                                    |
//! | 3..7    | chain liberties 1, 2, 3, ≥4                              |
//! | 7..13   | liberties after playing here 1..5, ≥6                    |
//! | 13      | legal for the side to move                               |
//! | 14..19  | stone of the k-th most recent move (k = 1..5)           |
//! | 19..26  | opponent stones captured by playing here 1..6, ≥7        |
//! | 26      | playing here wins a ladder                               |
//! | 27..36  | rank 1d..9d, each plane constant                         |

mod ladder;

use thiserror::Error;

use crate::board::{transform_plane, Color, Point, PointSet, Position, Symmetry, RECENT_MOVES};
use crate::data::Rank;

pub use ladder::MAX_LADDER_PLIES;

pub const NUM_PLANES: usize = 36;

pub mod plane {
    pub const BLACK: usize = 0;
    pub const WHITE: usize = 1;
    pub const EMPTY: usize = 2;
    pub const LIBERTIES: usize = 3;
    pub const LIBERTIES_AFTER: usize = 7;
    pub const LEGAL: usize = 13;
    pub const TURNS_SINCE: usize = 14;
    pub const CAPTURE_SIZE: usize = 19;
    pub const LADDER: usize = 26;
    pub const RANK: usize = 27;
}

const LIBERTY_BUCKETS: usize = 4;
const LIBERTY_AFTER_BUCKETS: usize = 6;
const CAPTURE_BUCKETS: usize = 7;
const RANK_PLANES: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("{0} is not a legal point for the side to move")]
    IllegalPoint(Point),
}

/// `planes × size × size` bytes, each 0 or 1, plane-major then row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureTensor {
    size: usize,
    planes: usize,
    data: Vec<u8>,
}

impl FeatureTensor {
    pub fn zeros(size: usize, planes: usize) -> FeatureTensor {
        FeatureTensor { size, planes, data: vec![0; planes * size * size] }
    }

    pub fn from_raw(size: usize, planes: usize, data: Vec<u8>) -> Option<FeatureTensor> {
        (data.len() == planes * size * size).then_some(FeatureTensor { size, planes, data })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn num_planes(&self) -> usize {
        self.planes
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn plane(&self, k: usize) -> &[u8] {
        let n = self.size * self.size;
        &self.data[k * n..(k + 1) * n]
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize) -> u8 {
        self.data[k * self.size * self.size + i]
    }

    #[inline]
    fn set(&mut self, k: usize, i: usize) {
        let n = self.size * self.size;
        self.data[k * n + i] = 1;
    }

    /// Maps every plane through `g`.
    pub fn transform(&self, g: Symmetry) -> FeatureTensor {
        let n = self.size * self.size;
        let mut out = FeatureTensor::zeros(self.size, self.planes);
        for k in 0..self.planes {
            transform_plane(&self.data[k * n..(k + 1) * n], self.size, g, &mut out.data[k * n..(k + 1) * n]);
        }
        out
    }

    /// Writes the planes as numbers into `out` (length `planes × size²`).
    pub fn write_values<T: num_traits::Float>(&self, out: &mut [T]) {
        for (o, &b) in out.iter_mut().zip(&self.data) {
            *o = if b != 0 { T::one() } else { T::zero() };
        }
    }
}

/// Index of the rank plane that is set, relative to [`plane::RANK`].
/// Kyu and unknown ranks set none; professional ranks share the 9d plane.
pub fn rank_plane(rank: Rank) -> Option<usize> {
    match rank {
        Rank::Dan(d) if (1..=9).contains(&d) => Some(d as usize - 1),
        Rank::Pro(_) => Some(RANK_PLANES - 1),
        _ => None,
    }
}

/// The nine rank planes as per-plane constants.
pub fn rank_planes(rank: Rank) -> [bool; RANK_PLANES] {
    let mut out = [false; RANK_PLANES];
    if let Some(k) = rank_plane(rank) {
        out[k] = true;
    }
    out
}

/// What playing at an empty point would do, without playing it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct MoveEffect {
    pub captured: usize,
    pub liberties: usize,
}

pub(crate) fn move_effect(p: &Position, i: usize, color: Color) -> MoveEffect {
    let geom = p.geometry();
    let mut own = [u16::MAX; 4];
    let mut doomed = [u16::MAX; 4];
    let mut libs = PointSet::default();
    for (k, &n) in geom.neighbors(i).iter().enumerate() {
        let n = n as usize;
        match p.stone_at_index(n) {
            None => libs.insert(n),
            Some(c) => {
                let h = p.chain_head(n);
                if c == color {
                    if !own.contains(&(h as u16)) {
                        own[k] = h as u16;
                        libs.union_with(p.chain_libs(h));
                    }
                } else if p.chain_libs(h).len() == 1 && !doomed.contains(&(h as u16)) {
                    doomed[k] = h as u16;
                }
            }
        }
    }
    libs.remove(i);
    let mut captured = 0;
    for &h in doomed.iter().filter(|&&h| h != u16::MAX) {
        for s in p.chain_stones(h as usize) {
            captured += 1;
            let touches = geom.neighbors(s).iter().any(|&n| {
                let n = n as usize;
                n == i || (p.stone_at_index(n) == Some(color) && own.contains(&(p.chain_head(n) as u16)))
            });
            if touches {
                libs.insert(s);
            }
        }
    }
    MoveEffect { captured, liberties: libs.len() }
}

fn legal_index(p: &Position, pt: Point) -> Result<usize, FeatureError> {
    if p.is_legal_point(pt) {
        Ok(pt.index(p.size()))
    } else {
        Err(FeatureError::IllegalPoint(pt))
    }
}

/// Liberties of the chain containing `pt` after the side to move plays there.
pub fn liberties_after(p: &Position, pt: Point) -> Result<usize, FeatureError> {
    let i = legal_index(p, pt)?;
    Ok(move_effect(p, i, p.to_play()).liberties)
}

/// Opponent stones removed by playing `pt`.
pub fn capture_size(p: &Position, pt: Point) -> Result<usize, FeatureError> {
    let i = legal_index(p, pt)?;
    Ok(move_effect(p, i, p.to_play()).captured)
}

pub fn is_ladder_capture(p: &Position, pt: Point) -> Result<bool, FeatureError> {
    let i = legal_index(p, pt)?;
    Ok(ladder::captures_by_ladder(p, i))
}

pub(crate) fn ladder_capture_index(p: &Position, i: usize) -> bool {
    ladder::captures_by_ladder(p, i)
}

pub fn extract(p: &Position, rank: Rank) -> FeatureTensor {
    let size = p.size();
    let mut t = FeatureTensor::zeros(size, NUM_PLANES);
    let me = p.to_play();
    for i in 0..size * size {
        match p.stone_at_index(i) {
            Some(c) => {
                t.set(if c == Color::Black { plane::BLACK } else { plane::WHITE }, i);
                let libs = p.chain_libs(p.chain_head(i)).len();
                t.set(plane::LIBERTIES + libs.clamp(1, LIBERTY_BUCKETS) - 1, i);
            }
            None => {
                t.set(plane::EMPTY, i);
                if !p.is_legal_index(i) {
                    continue;
                }
                t.set(plane::LEGAL, i);
                let effect = move_effect(p, i, me);
                t.set(plane::LIBERTIES_AFTER + effect.liberties.clamp(1, LIBERTY_AFTER_BUCKETS) - 1, i);
                if effect.captured > 0 {
                    t.set(plane::CAPTURE_SIZE + effect.captured.min(CAPTURE_BUCKETS) - 1, i);
                }
                if ladder::captures_by_ladder(p, i) {
                    t.set(plane::LADDER, i);
                }
            }
        }
    }
    let recent = p.recent_moves();
    for (k, pt) in recent.iter().enumerate().take(RECENT_MOVES) {
        if let Some(pt) = pt {
            t.set(plane::TURNS_SINCE + k, pt.index(size));
        }
    }
    if let Some(k) = rank_plane(rank) {
        for i in 0..size * size {
            t.set(plane::RANK + k, i);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::Move;

    #[test]
    fn plane_count_matches_table() {
        assert_eq!(3 + 4 + 6 + 1 + 5 + 7 + 1 + 9, NUM_PLANES);
        assert_eq!(plane::RANK + RANK_PLANES, NUM_PLANES);
    }

    #[test]
    fn empty_board_nine_dan() {
        let t = extract(&Position::new(19).unwrap(), Rank::Dan(9));
        for k in 0..NUM_PLANES {
            let expect_full = matches!(k, plane::EMPTY | plane::LEGAL | 35) || k == plane::LIBERTIES_AFTER + 3;
            let ones = t.plane(k).iter().filter(|&&b| b == 1).count();
            if k == plane::LIBERTIES_AFTER + 1 || k == plane::LIBERTIES_AFTER + 2 {
                // edges (3 liberties) and corners (2 liberties)
                continue;
            }
            if k == plane::LIBERTIES_AFTER + 3 {
                assert_eq!(ones, 17 * 17);
            } else if expect_full {
                assert_eq!(ones, 361, "plane {k}");
            } else {
                assert_eq!(ones, 0, "plane {k}");
            }
        }
    }

    #[test]
    fn rank_encoding() {
        assert_eq!(rank_plane(Rank::Dan(1)), Some(0));
        assert_eq!(rank_plane(Rank::Dan(9)), Some(8));
        assert_eq!(rank_plane(Rank::Kyu(5)), None);
        assert_eq!(rank_plane(Rank::Unknown), None);
        assert_eq!(rank_plane(Rank::Pro(3)), Some(8));
        let t = extract(&Position::new(5).unwrap(), Rank::Dan(1));
        assert!(t.plane(27).iter().all(|&b| b == 1));
    }

    #[test]
    fn first_move_at_center_has_four_liberties() {
        let p = Position::new(19).unwrap();
        assert_eq!(liberties_after(&p, Point::new(9, 9)), Ok(4));
        assert_eq!(capture_size(&p, Point::new(9, 9)), Ok(0));
        let p = p.play(Move::play(Color::Black, Point::new(9, 9))).unwrap();
        assert_eq!(liberties_after(&p, Point::new(9, 9)), Err(FeatureError::IllegalPoint(Point::new(9, 9))));
    }
}
