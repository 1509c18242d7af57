//! Area scoring: stones on the board plus empty regions that touch only one
//! color. Regions touching both colors, or none, are neutral.

use std::fmt;

use super::point::Color;
use super::position::Position;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Winner {
    Black,
    White,
    Draw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreResult {
    pub black_area: u32,
    pub white_area: u32,
    pub komi: f32,
    pub winner: Winner,
    /// Absolute difference between Black's area and White's area plus komi.
    pub margin: f32,
}

impl ScoreResult {
    pub fn from_areas(black_area: u32, white_area: u32, komi: f32) -> ScoreResult {
        let diff = black_area as f32 - (white_area as f32 + komi);
        let winner = if diff > 0.0 {
            Winner::Black
        } else if diff < 0.0 {
            Winner::White
        } else {
            Winner::Draw
        };
        ScoreResult { black_area, white_area, komi, winner, margin: diff.abs() }
    }

    pub fn winner_color(&self) -> Option<Color> {
        match self.winner {
            Winner::Black => Some(Color::Black),
            Winner::White => Some(Color::White),
            Winner::Draw => None,
        }
    }
}

/// GTP/SGF style result string: `B+3.5`, `W+7.5`, or `0`.
impl fmt::Display for ScoreResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.winner {
            Winner::Black => write!(f, "B+{}", self.margin),
            Winner::White => write!(f, "W+{}", self.margin),
            Winner::Draw => f.write_str("0"),
        }
    }
}

impl Position {
    pub fn score(&self, komi: f32) -> ScoreResult {
        let (black, white) = self.area();
        ScoreResult::from_areas(black, white, komi)
    }

    /// `(black_area, white_area)`.
    pub fn area(&self) -> (u32, u32) {
        let geom = self.geometry();
        let mut area = [0u32; 2];
        let mut seen = vec![false; geom.points];
        let mut stack = Vec::new();
        let mut region = Vec::new();
        for start in 0..geom.points {
            if let Some(c) = self.stone_at_index(start) {
                area[c.index()] += 1;
                continue;
            }
            if seen[start] {
                continue;
            }
            let mut touches = [false; 2];
            region.clear();
            seen[start] = true;
            stack.push(start);
            while let Some(i) = stack.pop() {
                region.push(i);
                for &n in geom.neighbors(i) {
                    let n = n as usize;
                    match self.stone_at_index(n) {
                        Some(c) => touches[c.index()] = true,
                        None if !seen[n] => {
                            seen[n] = true;
                            stack.push(n);
                        }
                        None => {}
                    }
                }
            }
            match touches {
                [true, false] => area[0] += region.len() as u32,
                [false, true] => area[1] += region.len() as u32,
                _ => {}
            }
        }
        (area[0], area[1])
    }
}
