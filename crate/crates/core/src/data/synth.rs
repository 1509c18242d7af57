//! Synthetic game records from a heuristic player, for building training
//! corpora on small boards when no human records are at hand.
//!
//! The player scores every legal point on tactics (captures, saving and
//! making ataris, ladders, self-atari) and shape (an influence field,
//! distance to the edge, distance to the last move) and samples from a
//! softmax over the scores. Stronger ranks use a lower temperature, so the
//! rank planes carry real signal.

use rand::Rng;

use crate::board::{Color, Move, Point, Position};
use crate::features::{self, move_effect};

use super::{Rank, SgfGame};

const INFLUENCE_RADIUS: i32 = 5;
const INFLUENCE_DECAY: f64 = 0.6;
/// Moves scoring below this are never considered; with none left the player passes.
const PASS_THRESHOLD: f64 = -0.75;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub size: usize,
    pub komi: f32,
    /// Hard cap on moves per game, passes included.
    pub max_moves: usize,
}

impl SynthConfig {
    pub fn new(size: usize) -> SynthConfig {
        SynthConfig { size, komi: 7.5, max_moves: 2 * size * size }
    }
}

/// Softmax temperature for a rank: lower is stronger.
pub fn temperature(rank: Rank) -> f64 {
    match rank {
        Rank::Dan(d) => 0.5 - 0.035 * d as f64,
        Rank::Pro(_) => 0.15,
        Rank::Kyu(k) => 0.55 + 0.02 * k as f64,
        Rank::Unknown => 0.6,
    }
}

/// Draws a rank: mostly dan players, some kyu.
pub fn random_rank<R: Rng + ?Sized>(rng: &mut R) -> Rank {
    if rng.gen_bool(0.8) {
        Rank::Dan(rng.gen_range(1..=9))
    } else {
        Rank::Kyu(rng.gen_range(1..=10))
    }
}

/// Signed influence from `color`'s point of view at every point.
pub fn influence(p: &Position, color: Color) -> Vec<f64> {
    let size = p.size() as i32;
    let mut field = vec![0.0; (size * size) as usize];
    for i in 0..field.len() {
        let Some(c) = p.stone_at_index(i) else { continue };
        let sign = if c == color { 1.0 } else { -1.0 };
        let (x0, y0) = (i as i32 % size, i as i32 / size);
        for dy in -INFLUENCE_RADIUS..=INFLUENCE_RADIUS {
            for dx in -INFLUENCE_RADIUS..=INFLUENCE_RADIUS {
                let d = dx.abs() + dy.abs();
                let (x, y) = (x0 + dx, y0 + dy);
                if d > INFLUENCE_RADIUS || x < 0 || y < 0 || x >= size || y >= size {
                    continue;
                }
                field[(y * size + x) as usize] += sign * INFLUENCE_DECAY.powi(d);
            }
        }
    }
    field
}

/// Heuristic value of `color` playing the empty, legal point `i`.
pub fn move_score(p: &Position, i: usize, color: Color, field: &[f64]) -> f64 {
    let geom = p.geometry();
    let size = p.size();
    let effect = move_effect(p, i, color);
    let mut score = 0.0;
    if effect.captured > 0 {
        score += 2.5 + (effect.captured as f64).ln_1p();
    }
    let mut saves = 0;
    let mut ataris = 0;
    let mut own_neighbors = 0;
    let mut foe_neighbors = 0;
    for &n in geom.neighbors(i) {
        let n = n as usize;
        let Some(c) = p.stone_at_index(n) else { continue };
        let h = p.chain_head(n);
        let libs = p.chain_libs(h).len();
        if c == color {
            own_neighbors += 1;
            if libs == 1 {
                saves += p.chain_size(h);
            }
        } else {
            foe_neighbors += 1;
            if libs == 2 {
                ataris += 1;
            }
        }
    }
    if saves > 0 && effect.liberties >= 2 {
        score += 1.5 + 0.4 * saves.min(6) as f64 + if effect.liberties >= 3 { 1.0 } else { 0.0 };
    }
    if effect.liberties == 1 && effect.captured == 0 {
        score -= 3.0;
    } else if effect.liberties == 2 && effect.captured == 0 {
        score -= 0.4;
    }
    if ataris > 0 && effect.liberties >= 2 {
        score += 0.6;
        if features::ladder_capture_index(p, i) {
            score += 2.0;
        }
    }
    score += 0.12 * effect.liberties.min(5) as f64;

    let f = field[i];
    // Contested points matter most; deep inside either side's area is wasted.
    score += 1.3 * (-f * f / 1.5).exp();
    let settled = geom.neighbors(i).iter().all(|&n| {
        let n = n as usize;
        p.stone_at_index(n) == Some(color) || (p.stone_at_index(n).is_none() && field[n] > 1.0)
    });
    if settled && f > 1.2 {
        score -= 2.5;
    }
    if f < -1.6 && own_neighbors == 0 && effect.captured == 0 {
        score -= 1.5;
    }
    if foe_neighbors > 0 && own_neighbors > 0 {
        score += 0.3;
    }

    let pt = geom.point(i);
    let line = (pt.col as usize).min(pt.row as usize).min(size - 1 - pt.col as usize).min(size - 1 - pt.row as usize);
    let stones = p.history().len();
    score += match line {
        0 => -1.2,
        1 => {
            if stones < size {
                -0.5
            } else {
                0.0
            }
        }
        2 => 0.35,
        _ => 0.1,
    };
    if let Some(last) = p.last_move().and_then(|m| m.point()) {
        let d = (last.col as i32 - pt.col as i32).abs().max((last.row as i32 - pt.row as i32).abs());
        score += match d {
            1 => 0.7,
            2 => 0.5,
            3 | 4 => 0.2,
            _ => 0.0,
        };
    }
    score
}

/// Samples the next move for the side to move.
pub fn choose_move<R: Rng + ?Sized>(p: &Position, rank: Rank, rng: &mut R) -> Move {
    let me = p.to_play();
    let field = influence(p, me);
    let tau = temperature(rank);
    let mut candidates = Vec::new();
    for i in 0..p.num_points() {
        if p.stone_at_index(i).is_some() || p.is_eye_index(i, me) || !p.is_legal_index(i) {
            continue;
        }
        let s = move_score(p, i, me, &field);
        if s >= PASS_THRESHOLD {
            candidates.push((i, s));
        }
    }
    if candidates.is_empty() {
        return Move::pass(me);
    }
    let max = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = candidates.iter().map(|&(_, s)| ((s - max) / tau).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (&(i, _), w) in candidates.iter().zip(&weights) {
        x -= w;
        if x <= 0.0 {
            return Move::play(me, Point::from_index(i, p.size()));
        }
    }
    Move::play(me, Point::from_index(candidates.last().unwrap().0, p.size()))
}

/// Plays one game to two passes or the move cap.
pub fn generate_game<R: Rng + ?Sized>(config: &SynthConfig, black: Rank, white: Rank, rng: &mut R) -> SgfGame {
    let mut p = Position::new(config.size).expect("supported board size");
    let mut game = SgfGame::new(config.size);
    game.komi = config.komi;
    game.black_rank = Some(black.to_string());
    game.white_rank = Some(white.to_string());
    while game.moves.len() < config.max_moves && p.consecutive_passes() < 2 {
        let rank = if p.to_play() == Color::Black { black } else { white };
        let m = choose_move(&p, rank, rng);
        p.play_mut(m).expect("chosen moves are legal");
        game.moves.push(m);
    }
    game.result = Some(p.score(config.komi).to_string());
    game
}
