//! 3×3 neighborhood patterns for playouts.
//!
//! A pattern line is `<code> <weight>` where the code lists the eight
//! neighbors of the candidate point in reading order (NW, N, NE, W, E, SW, S,
//! SE) using `X` for the mover's stones, `O` for the opponent's, `.` for
//! empty, `#` for off-board and `?` for anything. Each pattern is expanded to
//! all eight orientations; later lines override earlier ones.

use thiserror::Error;

use crate::board::{Color, Point, Position, Symmetry};

pub const TABLE_SIZE: usize = 1 << 16;

const EMPTY: u16 = 0;
const OWN: u16 = 1;
const FOE: u16 = 2;
const EDGE: u16 = 3;

/// Reading-order offsets of the eight neighbors.
const OFFSETS: [(i8, i8); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

pub const DEFAULT_PATTERNS: &str = include_str!("default_patterns.txt");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

#[derive(Clone, PartialEq)]
pub struct PatternTable {
    weights: Vec<f32>,
    patterns: usize,
}

impl std::fmt::Debug for PatternTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PatternTable({} patterns)", self.patterns)
    }
}

impl Default for PatternTable {
    fn default() -> Self {
        PatternTable::parse(DEFAULT_PATTERNS).expect("built-in pattern table parses")
    }
}

impl PatternTable {
    /// A table that matches nothing, so playouts are uniformly random.
    pub fn empty() -> PatternTable {
        PatternTable { weights: vec![0.0; TABLE_SIZE], patterns: 0 }
    }

    pub fn parse(text: &str) -> Result<PatternTable, PatternError> {
        let mut table = PatternTable::empty();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('%').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| PatternError::Malformed { line: n + 1, reason };
            let mut parts = line.split_whitespace();
            let code = parts.next().unwrap_or("");
            let weight: f32 = parts.next().ok_or_else(|| bad("missing weight".into()))?.parse().map_err(|_| bad("weight is not a number".into()))?;
            if parts.next().is_some() {
                return Err(bad("trailing text".into()));
            }
            if !weight.is_finite() || weight < 0.0 {
                return Err(bad(format!("weight {weight} must be finite and non-negative")));
            }
            let cells: Vec<Option<u16>> = code
                .chars()
                .map(|c| match c {
                    '.' => Ok(Some(EMPTY)),
                    'X' | 'x' => Ok(Some(OWN)),
                    'O' | 'o' => Ok(Some(FOE)),
                    '#' => Ok(Some(EDGE)),
                    '?' => Ok(None),
                    other => Err(bad(format!("unexpected character {other:?}"))),
                })
                .collect::<Result<_, _>>()?;
            if cells.len() != 8 {
                return Err(bad(format!("code must have 8 cells, found {}", cells.len())));
            }
            for g in Symmetry::all() {
                let mut oriented = [None; 8];
                for (k, cell) in cells.iter().enumerate() {
                    oriented[orient(g, k)] = *cell;
                }
                expand(&oriented, 0, 0, &mut |code| table.weights[code as usize] = weight);
            }
            table.patterns += 1;
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.patterns
    }

    pub fn is_empty(&self) -> bool {
        self.patterns == 0
    }

    #[inline]
    pub fn weight(&self, code: u16) -> f32 {
        self.weights[code as usize]
    }

    /// Encodes a pattern string without wildcards; `None` if it has any.
    pub fn encode(code: &str) -> Option<u16> {
        if code.chars().count() != 8 {
            return None;
        }
        code.chars().enumerate().try_fold(0u16, |acc, (k, c)| {
            let v = match c {
                '.' => EMPTY,
                'X' => OWN,
                'O' => FOE,
                '#' => EDGE,
                _ => return None,
            };
            Some(acc | v << (2 * k))
        })
    }
}

/// Index of neighbor slot `k` after mapping its offset through `g`.
fn orient(g: Symmetry, k: usize) -> usize {
    let (dx, dy) = OFFSETS[k];
    let q = g.apply(Point::new((dx + 1) as u8, (dy + 1) as u8), 3);
    let mapped = (q.col as i8 - 1, q.row as i8 - 1);
    OFFSETS.iter().position(|&o| o == mapped).unwrap()
}

fn expand(cells: &[Option<u16>; 8], k: usize, acc: u16, f: &mut impl FnMut(u16)) {
    if k == 8 {
        f(acc);
        return;
    }
    match cells[k] {
        Some(v) => expand(cells, k + 1, acc | v << (2 * k), f),
        None => {
            for v in [EMPTY, OWN, FOE, EDGE] {
                expand(cells, k + 1, acc | v << (2 * k), f);
            }
        }
    }
}

/// Neighborhood code of point `i` as seen by `me`.
pub fn code_at(p: &Position, i: usize, me: Color) -> u16 {
    let size = p.size() as i32;
    let (x, y) = ((i as i32) % size, (i as i32) / size);
    let mut code = 0u16;
    for (k, &(dx, dy)) in OFFSETS.iter().enumerate() {
        let (nx, ny) = (x + dx as i32, y + dy as i32);
        let v = if nx < 0 || ny < 0 || nx >= size || ny >= size {
            EDGE
        } else {
            match p.stone_at_index((ny * size + nx) as usize) {
                None => EMPTY,
                Some(c) if c == me => OWN,
                Some(_) => FOE,
            }
        };
        code |= v << (2 * k);
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_parses() {
        let t = PatternTable::default();
        assert!(!t.is_empty());
    }

    #[test]
    fn orientations_are_expanded() {
        let t = PatternTable::parse("XO...... 3\n").unwrap();
        // NW own, N foe; rotated a quarter turn: NE own, E foe.
        assert_eq!(t.weight(PatternTable::encode("XO......").unwrap()), 3.0);
        assert_eq!(t.weight(PatternTable::encode("..X.O...").unwrap()), 3.0);
        assert_eq!(t.weight(PatternTable::encode(".OX.....").unwrap()), 3.0);
        assert_eq!(t.weight(PatternTable::encode("X.O.....").unwrap()), 0.0);
    }

    #[test]
    fn wildcards_cover_all_values() {
        let t = PatternTable::parse("?....... 1").unwrap();
        for c in [".", "X", "O", "#"] {
            assert_eq!(t.weight(PatternTable::encode(&format!("{c}.......")).unwrap()), 1.0);
        }
    }

    #[test]
    fn malformed_lines_are_reported() {
        for bad in ["XO..... 1", "XO...... ", "XO...... x", "XO...Z.. 1", "XO...... -1", "XO...... 1 2"] {
            assert!(matches!(PatternTable::parse(bad), Err(PatternError::Malformed { line: 1, .. })), "{bad}");
        }
        assert!(PatternTable::parse("% comment only\n\n").unwrap().is_empty());
    }

    #[test]
    fn codes_on_the_board() {
        let p = Position::from_stones(5, [(Point::new(0, 0), Color::Black), (Point::new(1, 0), Color::White)], Color::Black, [None; 5]).unwrap();
        assert_eq!(code_at(&p, Point::new(0, 1).index(5), Color::Black), PatternTable::encode("#XO#.#..").unwrap());
        assert_eq!(code_at(&p, Point::new(0, 1).index(5), Color::White), PatternTable::encode("#OX#.#..").unwrap());
    }
}
