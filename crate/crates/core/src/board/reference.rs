//! Slow flood-fill rules engine used as an independent oracle by tests and
//! `tengen selfcheck`. It shares nothing with [`Position`](super::Position)
//! beyond the coordinate types.

use std::collections::HashSet;

use super::point::{Color, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceError {
    Occupied,
    Suicide,
    Repetition,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceBoard {
    pub size: usize,
    pub grid: Vec<Option<Color>>,
    pub to_play: Color,
    /// Every earlier grid, for positional superko.
    pub seen: HashSet<Vec<Option<Color>>>,
    pub captured_by: [u32; 2],
}

impl ReferenceBoard {
    pub fn new(size: usize) -> ReferenceBoard {
        let grid = vec![None; size * size];
        let mut seen = HashSet::new();
        seen.insert(grid.clone());
        ReferenceBoard { size, grid, to_play: Color::Black, seen, captured_by: [0; 2] }
    }

    fn neighbors(&self, i: usize) -> Vec<usize> {
        let (c, r) = (i % self.size, i / self.size);
        let mut out = Vec::with_capacity(4);
        if r > 0 {
            out.push(i - self.size);
        }
        if c > 0 {
            out.push(i - 1);
        }
        if c + 1 < self.size {
            out.push(i + 1);
        }
        if r + 1 < self.size {
            out.push(i + self.size);
        }
        out
    }

    /// Group containing `i` and its liberties, both sorted.
    pub fn group(grid: &[Option<Color>], size: usize, i: usize) -> (Vec<usize>, Vec<usize>) {
        let probe = ReferenceBoard { size, grid: Vec::new(), to_play: Color::Black, seen: HashSet::new(), captured_by: [0; 2] };
        let color = grid[i];
        let mut stones = vec![i];
        let mut libs = Vec::new();
        let mut k = 0;
        while k < stones.len() {
            for n in probe.neighbors(stones[k]) {
                if grid[n] == color && !stones.contains(&n) {
                    stones.push(n);
                } else if grid[n].is_none() && !libs.contains(&n) {
                    libs.push(n);
                }
            }
            k += 1;
        }
        stones.sort_unstable();
        libs.sort_unstable();
        (stones, libs)
    }

    /// Grid after `to_play` plays at `i`, or the reason it is illegal.
    pub fn try_play(&self, i: usize) -> Result<(Vec<Option<Color>>, u32), ReferenceError> {
        if self.grid[i].is_some() {
            return Err(ReferenceError::Occupied);
        }
        let me = self.to_play;
        let mut grid = self.grid.clone();
        grid[i] = Some(me);
        let mut captured = 0;
        for n in self.neighbors(i) {
            if grid[n] == Some(me.opponent()) {
                let (stones, libs) = Self::group(&grid, self.size, n);
                if libs.is_empty() {
                    for s in stones {
                        grid[s] = None;
                        captured += 1;
                    }
                }
            }
        }
        if Self::group(&grid, self.size, i).1.is_empty() {
            return Err(ReferenceError::Suicide);
        }
        if self.seen.contains(&grid) {
            return Err(ReferenceError::Repetition);
        }
        Ok((grid, captured))
    }

    pub fn play(&mut self, i: usize) -> Result<(), ReferenceError> {
        let (grid, captured) = self.try_play(i)?;
        self.captured_by[self.to_play.index()] += captured;
        self.seen.insert(grid.clone());
        self.grid = grid;
        self.to_play = self.to_play.opponent();
        Ok(())
    }

    pub fn pass(&mut self) {
        self.to_play = self.to_play.opponent();
    }

    /// Area score by labelling every empty region.
    pub fn area(&self) -> (u32, u32) {
        let n = self.size * self.size;
        let mut label = vec![usize::MAX; n];
        let mut black = self.grid.iter().filter(|c| **c == Some(Color::Black)).count() as u32;
        let mut white = self.grid.iter().filter(|c| **c == Some(Color::White)).count() as u32;
        let mut next_label = 0;
        for start in 0..n {
            if self.grid[start].is_some() || label[start] != usize::MAX {
                continue;
            }
            let mut region = vec![start];
            label[start] = next_label;
            let mut borders = HashSet::new();
            let mut k = 0;
            while k < region.len() {
                for nb in self.neighbors(region[k]) {
                    match self.grid[nb] {
                        Some(c) => {
                            borders.insert(c);
                        }
                        None if label[nb] == usize::MAX => {
                            label[nb] = next_label;
                            region.push(nb);
                        }
                        None => {}
                    }
                }
                k += 1;
            }
            next_label += 1;
            if borders.len() == 1 {
                if borders.contains(&Color::Black) {
                    black += region.len() as u32;
                } else {
                    white += region.len() as u32;
                }
            }
        }
        (black, white)
    }

    pub fn point(&self, i: usize) -> Point {
        Point::from_index(i, self.size)
    }
}
