//! Convolutional move-prediction network: forward and backward passes,
//! weight tying under board symmetries, SGD training, evaluation and the
//! model file format.

mod conv;
mod eval;
mod io;
mod model;
mod scalar;
mod train;

use thiserror::Error;

use crate::board::{Move, Point, Position};
use crate::data::Rank;
use crate::features::extract;

pub use eval::{evaluate, top_n_rank, EvalReport};
pub use io::{decode_model, encode_model, load_model, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use model::{orbits, Gradient, Init, Label, Layer, LayerSpec, Model, ModelSpec, MoveDistribution};
pub use scalar::Scalar;
pub use train::{prepare, train, EpochMetrics, Prepared, TrainConfig};

#[doc(hidden)]
pub mod testing {
    //! Internals exposed for oracle tests.
    pub use super::conv::{col2im, conv_backward, conv_forward, im2col};
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
    #[error("bad model spec: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("unsupported model format version {found}")]
    VersionMismatch { found: u16 },
    #[error("model checksum mismatch")]
    ChecksumFailure,
}

/// Legality-masked policy for the side to move.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub distribution: MoveDistribution<f32>,
    pub best: Move,
}

/// Runs the mover's head on `p`, zeroes illegal points and renormalizes.
/// Passes when there is no legal play.
pub fn predict_move<T: Scalar>(m: &Model<T>, p: &Position, rank: Rank) -> Result<Prediction, NetworkError> {
    let t = extract(p, rank);
    let heads = m.forward(std::slice::from_ref(&t))?;
    let me = p.to_play();
    let raw = &heads[0][me.index()].probs;
    Ok(mask_legal(p, raw.iter().map(|v| v.as_f64())))
}

/// Masks a raw distribution over points to the legal plays in `p`.
pub fn mask_legal(p: &Position, raw: impl Iterator<Item = f64>) -> Prediction {
    let size = p.size();
    let me = p.to_play();
    let mut probs: Vec<f64> = raw.enumerate().map(|(i, v)| if p.is_legal_point(Point::from_index(i, size)) { v } else { 0.0 }).collect();
    let legal: Vec<usize> = (0..probs.len()).filter(|&i| p.is_legal_point(Point::from_index(i, size))).collect();
    if legal.is_empty() {
        return Prediction { distribution: MoveDistribution { head: me, probs: vec![0.0; probs.len()] }, best: Move::pass(me) };
    }
    let sum: f64 = probs.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        probs.iter_mut().for_each(|v| *v /= sum);
    } else {
        let u = 1.0 / legal.len() as f64;
        legal.iter().for_each(|&i| probs[i] = u);
    }
    let best = model::argmax(&probs);
    Prediction {
        distribution: MoveDistribution { head: me, probs: probs.into_iter().map(|v| v as f32).collect() },
        best: Move::play(me, Point::from_index(best, size)),
    }
}
