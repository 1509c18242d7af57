#![allow(dead_code)]

use std::collections::HashSet;

use tengen::board::reference::ReferenceBoard;
use tengen::board::{Color, Point, Position};

/// Rows top to bottom: `X` black, `O` white, anything else empty.
pub fn parse(rows: &[&str], to_play: Color) -> Position {
    let size = rows.len();
    let mut stones = Vec::new();
    for (r, line) in rows.iter().enumerate() {
        assert_eq!(line.len(), size, "row {r} of {rows:?}");
        for (c, ch) in line.chars().enumerate() {
            match ch {
                'X' => stones.push((Point::new(c as u8, r as u8), Color::Black)),
                'O' => stones.push((Point::new(c as u8, r as u8), Color::White)),
                _ => {}
            }
        }
    }
    Position::from_stones(size, stones, to_play, [None; 5]).unwrap()
}

/// The same stones in the flood-fill reference, with no repetition history.
pub fn reference_of(p: &Position) -> ReferenceBoard {
    let size = p.size();
    ReferenceBoard { size, grid: p.grid(), to_play: p.to_play(), seen: HashSet::new(), captured_by: [0; 2] }
}
