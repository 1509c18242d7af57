use log::warn;
use rand::Rng;

use crate::board::{BoardError, Color, IllegalMove, MoveKind, Point, Position, Symmetry, RECENT_MOVES};

use super::{Rank, SgfGame};

/// Enough of a position to rebuild its features: stones, side to move, and
/// the still-standing stones of the last five moves.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Snapshot {
    pub size: usize,
    /// Row-major cells.
    pub cells: Vec<Option<Color>>,
    pub to_play: Color,
    pub recent: [Option<Point>; RECENT_MOVES],
}

impl Snapshot {
    pub fn from_position(p: &Position) -> Snapshot {
        Snapshot { size: p.size(), cells: p.grid(), to_play: p.to_play(), recent: p.recent_moves() }
    }

    pub fn to_position(&self) -> Result<Position, BoardError> {
        let size = self.size;
        let stones = self.cells.iter().enumerate().filter_map(|(i, c)| c.map(|c| (Point::from_index(i, size), c)));
        Position::from_stones(size, stones, self.to_play, self.recent)
    }

    pub fn transform(&self, g: Symmetry) -> Snapshot {
        let mut cells = vec![None; self.cells.len()];
        for (i, &c) in self.cells.iter().enumerate() {
            cells[g.apply_index(i, self.size)] = c;
        }
        Snapshot { size: self.size, cells, to_play: self.to_play, recent: self.recent.map(|r| r.map(|p| g.apply(p, self.size))) }
    }
}

/// A position, the move the expert played there, and the mover's rank.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TrainingExample {
    pub snapshot: Snapshot,
    pub expert: Point,
    pub rank: Rank,
    pub game_id: u32,
}

impl TrainingExample {
    pub fn transform(&self, g: Symmetry) -> TrainingExample {
        TrainingExample { snapshot: self.snapshot.transform(g), expert: g.apply(self.expert, self.snapshot.size), rank: self.rank, game_id: self.game_id }
    }

    /// Flattened index of the expert move.
    pub fn label(&self) -> usize {
        self.expert.index(self.snapshot.size)
    }

    pub fn mover(&self) -> Color {
        self.snapshot.to_play
    }
}

/// Draws one of the eight board symmetries uniformly and applies it to both
/// the position and the expert move.
pub fn sample_symmetry<R: Rng + ?Sized>(e: &TrainingExample, rng: &mut R) -> TrainingExample {
    let g = Symmetry::new(rng.gen_range(0..8)).unwrap();
    e.transform(g)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GameExamples {
    pub examples: Vec<TrainingExample>,
    /// Index into the move list and reason, when replay stopped early.
    pub truncated: Option<(usize, IllegalMove)>,
}

/// One example per non-pass move, labelled with the mover's own rank.
/// Replay stops at the first illegal recorded move; earlier examples are kept.
pub fn game_to_examples(g: &SgfGame, game_id: u32) -> Result<GameExamples, BoardError> {
    let mut p = Position::new(g.size)?;
    p.add_setup_stones(&g.setup)?;
    p.set_to_play(g.first_to_play());
    let mut out = GameExamples::default();
    for (k, m) in g.moves.iter().enumerate() {
        if let MoveKind::Play(pt) = m.kind {
            if m.color == p.to_play() && p.is_legal(*m) {
                out.examples.push(TrainingExample { snapshot: Snapshot::from_position(&p), expert: pt, rank: g.rank_of(m.color), game_id });
            }
        }
        if let Err(e) = p.play_mut(*m) {
            warn!("game {game_id}: illegal recorded move {} ({e}); truncating", k + 1);
            out.truncated = Some((k, e));
            break;
        }
    }
    Ok(out)
}
