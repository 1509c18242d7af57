use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::geometry::{Geometry, PointSet, NONE};
use super::point::{Color, Move, MoveKind, Point};
use super::symmetry::Symmetry;
use super::zobrist::{side_key, stone_key, EMPTY_BOARD_HASH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum IllegalMove {
    #[error("point is occupied")]
    Occupied,
    #[error("suicide")]
    Suicide,
    #[error("move repeats an earlier position")]
    SuperkoRepetition,
    #[error("wrong color to play")]
    WrongColor,
    #[error("point is off the board")]
    OffBoard,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoardError {
    #[error("illegal move: {0}")]
    Illegal(#[from] IllegalMove),
    #[error("no stone at {0}")]
    EmptyPoint(Point),
    #[error("unsupported board size {0}")]
    UnsupportedSize(usize),
    #[error("setup leaves the chain at {0} without liberties")]
    DeadSetup(Point),
    #[error("setup stones must precede all moves")]
    SetupAfterMoves,
}

const EMPTY: u8 = 0;

#[inline]
fn cell_of(c: Color) -> u8 {
    c.index() as u8 + 1
}

#[inline]
fn color_of(cell: u8) -> Option<Color> {
    match cell {
        1 => Some(Color::Black),
        2 => Some(Color::White),
        _ => None,
    }
}

/// Number of recent moves remembered for recency features.
pub const RECENT_MOVES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Initial {
    cells: Vec<u8>,
    to_play: Color,
    recent: [Option<Point>; RECENT_MOVES],
}

/// A maximal group of connected stones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    pub color: Color,
    pub stones: Vec<Point>,
    pub liberties: Vec<Point>,
}

/// Complete game state.
///
/// Chains are tracked with a relabelling union-find: every stone stores the
/// index of its chain head, stones of a chain form a circular linked list, and
/// the head owns the chain's liberty bitset and stone count.
#[derive(Clone)]
pub struct Position {
    geom: &'static Geometry,
    cells: Vec<u8>,
    head: Vec<u16>,
    next: Vec<u16>,
    libs: Vec<PointSet>,
    stones: Vec<u16>,
    // Move number that placed the current stone; 0 for stones present at construction.
    placed_at: Vec<u32>,
    to_play: Color,
    history: Vec<Move>,
    hash_history: Vec<u64>,
    board_hash: u64,
    captures: [u32; 2],
    initial: Arc<Initial>,
    ko: u16,
    passes: u8,
}

impl Position {
    pub fn new(size: usize) -> Result<Position, BoardError> {
        let geom = Geometry::for_size(size).ok_or(BoardError::UnsupportedSize(size))?;
        let points = geom.points;
        Ok(Position {
            geom,
            cells: vec![EMPTY; points],
            head: vec![NONE; points],
            next: vec![NONE; points],
            libs: vec![PointSet::default(); points],
            stones: vec![0; points],
            placed_at: vec![0; points],
            to_play: Color::Black,
            history: Vec::new(),
            hash_history: vec![EMPTY_BOARD_HASH],
            board_hash: EMPTY_BOARD_HASH,
            captures: [0; 2],
            initial: Arc::new(Initial { cells: vec![EMPTY; points], to_play: Color::Black, recent: [None; RECENT_MOVES] }),
            ko: NONE,
            passes: 0,
        })
    }

    /// Builds a position directly from stones, e.g. a stored snapshot.
    /// `recent` lists the points of the most recent moves whose stones are
    /// still on the board, most recent first.
    pub fn from_stones(
        size: usize,
        stones: impl IntoIterator<Item = (Point, Color)>,
        to_play: Color,
        recent: [Option<Point>; RECENT_MOVES],
    ) -> Result<Position, BoardError> {
        let mut p = Position::new(size)?;
        for (pt, color) in stones {
            p.place_setup_stone(pt, color)?;
        }
        p.validate_setup()?;
        p.set_to_play(to_play);
        let mut recent = recent;
        for r in recent.iter_mut() {
            if let Some(pt) = *r {
                if !pt.on_board(size) || p.cells[pt.index(size)] == EMPTY {
                    *r = None;
                }
            }
        }
        let init = Arc::make_mut(&mut p.initial);
        init.recent = recent;
        Ok(p)
    }

    /// Adds handicap or setup stones. Only allowed before any move.
    pub fn add_setup_stones(&mut self, stones: &[(Point, Color)]) -> Result<(), BoardError> {
        if !self.history.is_empty() {
            return Err(BoardError::SetupAfterMoves);
        }
        let saved = self.clone();
        for &(pt, color) in stones {
            if let Err(e) = self.place_setup_stone(pt, color) {
                *self = saved;
                return Err(e);
            }
        }
        if let Err(e) = self.validate_setup() {
            *self = saved;
            return Err(e);
        }
        Ok(())
    }

    fn place_setup_stone(&mut self, pt: Point, color: Color) -> Result<(), BoardError> {
        let size = self.size();
        if !pt.on_board(size) {
            return Err(IllegalMove::OffBoard.into());
        }
        let idx = pt.index(size);
        if self.cells[idx] != EMPTY {
            return Err(IllegalMove::Occupied.into());
        }
        self.put_stone(idx, color, 0);
        for &n in self.geom.neighbors(idx) {
            let n = n as usize;
            if self.cells[n] == cell_of(color.opponent()) {
                let h = self.head[n] as usize;
                self.libs[h].remove(idx);
            }
        }
        Ok(())
    }

    fn validate_setup(&mut self) -> Result<(), BoardError> {
        for i in 0..self.geom.points {
            if self.cells[i] != EMPTY && self.libs[self.head[i] as usize].is_empty() {
                return Err(BoardError::DeadSetup(self.geom.point(i)));
            }
        }
        self.hash_history.clear();
        self.hash_history.push(self.board_hash);
        let init = Arc::make_mut(&mut self.initial);
        init.cells = self.cells.clone();
        Ok(())
    }

    /// Changes the side to move without playing. Only the side-to-move
    /// component of the hash changes.
    pub fn set_to_play(&mut self, color: Color) {
        self.to_play = color;
        if self.history.is_empty() {
            Arc::make_mut(&mut self.initial).to_play = color;
        }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.geom.size
    }

    #[inline]
    pub fn num_points(&self) -> usize {
        self.geom.points
    }

    #[inline]
    pub fn to_play(&self) -> Color {
        self.to_play
    }

    pub fn history(&self) -> &[Move] {
        &self.history
    }

    /// Board hashes (side to move excluded) of the initial position and of
    /// the position after every move.
    pub fn hash_history(&self) -> &[u64] {
        &self.hash_history
    }

    /// Stones of this color captured by the opponent are counted under the
    /// opponent: `captures(Black)` is the number of white stones Black took.
    pub fn captures(&self, by: Color) -> u32 {
        self.captures[by.index()]
    }

    pub fn last_move(&self) -> Option<Move> {
        self.history.last().copied()
    }

    pub fn consecutive_passes(&self) -> u8 {
        self.passes
    }

    /// Zobrist hash of the grid alone.
    pub fn board_hash(&self) -> u64 {
        self.board_hash
    }

    /// Zobrist hash over stones plus side to move.
    pub fn hash(&self) -> u64 {
        self.board_hash ^ side_key(self.to_play)
    }

    #[inline]
    pub fn stone_at(&self, pt: Point) -> Option<Color> {
        color_of(self.cells[pt.index(self.size())])
    }

    #[inline]
    pub(crate) fn stone_at_index(&self, i: usize) -> Option<Color> {
        color_of(self.cells[i])
    }

    #[inline]
    pub(crate) fn geometry(&self) -> &'static Geometry {
        self.geom
    }

    #[inline]
    pub(crate) fn chain_head(&self, i: usize) -> usize {
        self.head[i] as usize
    }

    #[inline]
    pub(crate) fn chain_libs(&self, head: usize) -> &PointSet {
        &self.libs[head]
    }

    #[inline]
    pub(crate) fn chain_size(&self, head: usize) -> usize {
        self.stones[head] as usize
    }

    pub(crate) fn chain_stones(&self, head: usize) -> ChainStones<'_> {
        ChainStones { next: &self.next, start: head, cur: Some(head) }
    }

    /// Liberty count of the chain through `pt`, or 0 for an empty point.
    pub fn liberties(&self, pt: Point) -> usize {
        let i = pt.index(self.size());
        if self.cells[i] == EMPTY {
            0
        } else {
            self.libs[self.head[i] as usize].len()
        }
    }

    pub fn chain_at(&self, pt: Point) -> Result<Chain, BoardError> {
        let size = self.size();
        if !pt.on_board(size) {
            return Err(IllegalMove::OffBoard.into());
        }
        let i = pt.index(size);
        let color = color_of(self.cells[i]).ok_or(BoardError::EmptyPoint(pt))?;
        let h = self.head[i] as usize;
        let mut stones: Vec<Point> = self.chain_stones(h).map(|s| self.geom.point(s)).collect();
        stones.sort_by_key(|p| p.index(size));
        let liberties = self.libs[h].iter().map(|l| self.geom.point(l)).collect();
        Ok(Chain { color, stones, liberties })
    }

    /// Grid as row-major cells: `None` for empty.
    pub fn grid(&self) -> Vec<Option<Color>> {
        self.cells.iter().map(|&c| color_of(c)).collect()
    }

    /// Points of the last five moves whose stones are still on the board,
    /// most recent first. Passes and captured stones leave a `None`.
    pub fn recent_moves(&self) -> [Option<Point>; RECENT_MOVES] {
        let mut out = [None; RECENT_MOVES];
        let len = self.history.len();
        for (k, slot) in out.iter_mut().enumerate() {
            if k < len {
                let number = (len - k) as u32;
                if let MoveKind::Play(pt) = self.history[len - 1 - k].kind {
                    let i = pt.index(self.size());
                    if self.cells[i] != EMPTY && self.placed_at[i] == number {
                        *slot = Some(pt);
                    }
                }
            } else if let Some(pt) = self.initial.recent[k - len] {
                let i = pt.index(self.size());
                if self.cells[i] != EMPTY && self.placed_at[i] == 0 {
                    *slot = Some(pt);
                }
            }
        }
        out
    }

    pub fn is_legal(&self, m: Move) -> bool {
        if m.color != self.to_play {
            return false;
        }
        match m.kind {
            MoveKind::Pass => true,
            MoveKind::Play(pt) => pt.on_board(self.size()) && self.check_play(pt.index(self.size()), m.color, true).is_ok(),
        }
    }

    /// Legality of a play by the side to move.
    #[inline]
    pub fn is_legal_point(&self, pt: Point) -> bool {
        pt.on_board(self.size()) && self.check_play(pt.index(self.size()), self.to_play, true).is_ok()
    }

    #[inline]
    pub(crate) fn is_legal_index(&self, i: usize) -> bool {
        self.check_play(i, self.to_play, true).is_ok()
    }

    pub fn legal_points(&self) -> Vec<Point> {
        (0..self.geom.points).filter(|&i| self.is_legal_index(i)).map(|i| self.geom.point(i)).collect()
    }

    pub fn play(&self, m: Move) -> Result<Position, IllegalMove> {
        let mut next = self.clone();
        next.play_mut(m)?;
        Ok(next)
    }

    /// In-place variant of [`Position::play`]; leaves `self` untouched on error.
    pub fn play_mut(&mut self, m: Move) -> Result<(), IllegalMove> {
        if m.color != self.to_play {
            return Err(IllegalMove::WrongColor);
        }
        match m.kind {
            MoveKind::Pass => {
                self.pass();
                Ok(())
            }
            MoveKind::Play(pt) => {
                if !pt.on_board(self.size()) {
                    return Err(IllegalMove::OffBoard);
                }
                let i = pt.index(self.size());
                self.check_play(i, m.color, true)?;
                self.apply(i, m.color);
                Ok(())
            }
        }
    }

    fn pass(&mut self) {
        self.history.push(Move::pass(self.to_play));
        self.hash_history.push(self.board_hash);
        self.to_play = self.to_play.opponent();
        self.passes = self.passes.saturating_add(1);
        self.ko = NONE;
    }

    /// Plays for the side to move under simple ko only; used by playouts,
    /// where full superko checking is not worth its cost.
    pub(crate) fn play_fast(&mut self, i: usize) -> Result<(), IllegalMove> {
        self.check_play(i, self.to_play, false)?;
        self.apply(i, self.to_play);
        Ok(())
    }

    pub(crate) fn pass_fast(&mut self) {
        self.pass();
    }

    pub(crate) fn is_legal_fast(&self, i: usize) -> bool {
        self.check_play(i, self.to_play, false).is_ok()
    }

    fn check_play(&self, i: usize, color: Color, superko: bool) -> Result<(), IllegalMove> {
        if self.cells[i] != EMPTY {
            return Err(IllegalMove::Occupied);
        }
        let me = cell_of(color);
        let mut has_liberty = false;
        let mut captures = false;
        for &n in self.geom.neighbors(i) {
            let n = n as usize;
            let c = self.cells[n];
            if c == EMPTY {
                has_liberty = true;
            } else {
                let libs = self.libs[self.head[n] as usize].len();
                if c == me {
                    has_liberty |= libs > 1;
                } else if libs == 1 {
                    captures = true;
                }
            }
        }
        if !has_liberty && !captures {
            return Err(IllegalMove::Suicide);
        }
        if superko {
            if self.hash_history.contains(&self.hash_after(i, color)) {
                return Err(IllegalMove::SuperkoRepetition);
            }
        } else if i == self.ko as usize {
            return Err(IllegalMove::SuperkoRepetition);
        }
        Ok(())
    }

    /// Board hash after a (legal) play at `i`, without playing it.
    pub(crate) fn hash_after(&self, i: usize, color: Color) -> u64 {
        let size = self.size();
        let mut h = self.board_hash ^ stone_key(self.geom.point(i), color);
        let opp = cell_of(color.opponent());
        let mut seen = [NONE; 4];
        for (k, &n) in self.geom.neighbors(i).iter().enumerate() {
            let n = n as usize;
            if self.cells[n] != opp {
                continue;
            }
            let head = self.head[n];
            if seen.contains(&head) || self.libs[head as usize].len() != 1 {
                continue;
            }
            seen[k] = head;
            for s in self.chain_stones(head as usize) {
                h ^= stone_key(Point::from_index(s, size), color.opponent());
            }
        }
        h
    }

    fn put_stone(&mut self, i: usize, color: Color, number: u32) {
        self.cells[i] = cell_of(color);
        self.head[i] = i as u16;
        self.next[i] = i as u16;
        self.stones[i] = 1;
        self.placed_at[i] = number;
        let mut libs = PointSet::default();
        for &n in self.geom.neighbors(i) {
            if self.cells[n as usize] == EMPTY {
                libs.insert(n as usize);
            }
        }
        self.libs[i] = libs;
        self.board_hash ^= stone_key(self.geom.point(i), color);
        let me = cell_of(color);
        for k in 0..self.geom.neighbors(i).len() {
            let n = self.geom.neighbors(i)[k] as usize;
            if self.cells[n] == me {
                let h = self.head[n] as usize;
                self.libs[h].remove(i);
                let mine = self.head[i] as usize;
                if h != mine {
                    self.merge(mine, h);
                }
            }
        }
    }

    fn merge(&mut self, a: usize, b: usize) {
        let (big, small) = if self.stones[a] >= self.stones[b] { (a, b) } else { (b, a) };
        let mut s = small;
        loop {
            self.head[s] = big as u16;
            s = self.next[s] as usize;
            if s == small {
                break;
            }
        }
        self.next.swap(big, small);
        let small_libs = self.libs[small];
        self.libs[big].union_with(&small_libs);
        self.stones[big] += self.stones[small];
    }

    fn apply(&mut self, i: usize, color: Color) {
        let number = self.history.len() as u32 + 1;
        self.put_stone(i, color, number);
        let opp = cell_of(color.opponent());
        let mut captured = 0u32;
        let mut single = NONE;
        for k in 0..self.geom.neighbors(i).len() {
            let n = self.geom.neighbors(i)[k] as usize;
            if self.cells[n] != opp {
                continue;
            }
            let h = self.head[n] as usize;
            self.libs[h].remove(i);
            if self.libs[h].is_empty() {
                let removed = self.remove_chain(h, color.opponent());
                captured += removed;
                if removed == 1 {
                    single = n as u16;
                }
            }
        }
        let mine = self.head[i] as usize;
        self.ko = if captured == 1 && self.stones[mine] == 1 && self.libs[mine].len() == 1 { single } else { NONE };
        self.captures[color.index()] += captured;
        self.history.push(Move::play(color, self.geom.point(i)));
        self.hash_history.push(self.board_hash);
        self.to_play = color.opponent();
        self.passes = 0;
    }

    fn remove_chain(&mut self, head: usize, color: Color) -> u32 {
        let members: Vec<usize> = self.chain_stones(head).collect();
        for &s in &members {
            self.cells[s] = EMPTY;
            self.head[s] = NONE;
            self.board_hash ^= stone_key(self.geom.point(s), color);
        }
        for &s in &members {
            for &n in self.geom.neighbors(s) {
                let n = n as usize;
                if self.cells[n] != EMPTY {
                    let h = self.head[n] as usize;
                    self.libs[h].insert(s);
                }
            }
        }
        members.len() as u32
    }

    /// True when `pt` is an empty point every orthogonal neighbour of which
    /// holds a `color` stone, with at most one opponent diagonal (none on
    /// the edge).
    pub fn is_eye(&self, pt: Point, color: Color) -> bool {
        self.is_eye_index(pt.index(self.size()), color)
    }

    pub(crate) fn is_eye_index(&self, i: usize, color: Color) -> bool {
        if self.cells[i] != EMPTY {
            return false;
        }
        let me = cell_of(color);
        if self.geom.neighbors(i).iter().any(|&n| self.cells[n as usize] != me) {
            return false;
        }
        let diags = self.geom.diagonals(i);
        let opp = cell_of(color.opponent());
        let bad = diags.iter().filter(|&&d| self.cells[d as usize] == opp).count();
        if diags.len() < 4 {
            bad == 0
        } else {
            bad <= 1
        }
    }

    /// Maps the position through `g`: the initial grid and every move are
    /// transformed and the history is replayed.
    pub fn transform(&self, g: Symmetry) -> Position {
        let size = self.size();
        let stones = self.initial.cells.iter().enumerate().filter_map(|(i, &c)| color_of(c).map(|col| (g.apply(Point::from_index(i, size), size), col)));
        let recent = self.initial.recent.map(|r| r.map(|p| g.apply(p, size)));
        let mut out = Position::from_stones(size, stones, self.initial.to_play, recent).expect("transformed setup is valid");
        for m in &self.history {
            let mapped = Move {
                color: m.color,
                kind: match m.kind {
                    MoveKind::Play(p) => MoveKind::Play(g.apply(p, size)),
                    MoveKind::Pass => MoveKind::Pass,
                },
            };
            if out.to_play != m.color {
                out.to_play = m.color;
            }
            out.play_mut(mapped).expect("transformed history replays");
        }
        out.to_play = self.to_play;
        out
    }
}

pub(crate) struct ChainStones<'a> {
    next: &'a [u16],
    start: usize,
    cur: Option<usize>,
}

impl Iterator for ChainStones<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        let c = self.cur?;
        let n = self.next[c] as usize;
        self.cur = (n != self.start).then_some(n);
        Some(c)
    }
}

impl PartialEq for Position {
    fn eq(&self, other: &Position) -> bool {
        self.size() == other.size()
            && self.cells == other.cells
            && self.to_play == other.to_play
            && self.history == other.history
            && self.hash_history == other.hash_history
            && self.captures == other.captures
            && self.initial == other.initial
    }
}

impl Eq for Position {}

impl fmt::Debug for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Position {}x{}, {} to play", self.size(), self.size(), self.to_play)?;
        write!(f, "{self}")
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let size = self.size();
        for r in 0..size {
            for c in 0..size {
                let ch = match self.cells[r * size + c] {
                    1 => 'X',
                    2 => 'O',
                    _ => '.',
                };
                write!(f, "{ch}")?;
                if c + 1 < size {
                    f.write_str(" ")?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
