//! Go rules: move execution, captures, positional superko, symmetry
//! transforms and area scoring.

mod geometry;
mod point;
mod position;
pub mod reference;
mod score;
mod symmetry;
mod zobrist;

pub(crate) use geometry::PointSet;
pub use point::{Color, Move, MoveKind, Point, MAX_POINTS, MAX_SIZE};
pub use position::{BoardError, Chain, IllegalMove, Position, RECENT_MOVES};
pub use score::{ScoreResult, Winner};
pub use symmetry::{transform_plane, Symmetry};
pub(crate) use zobrist::side_key;
pub use zobrist::EMPTY_BOARD_HASH;
