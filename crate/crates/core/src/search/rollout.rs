use rand::Rng;

use crate::board::{Color, Position, Winner};

use super::patterns::{code_at, PatternTable};

/// Everything a playout produced, for backup and RAVE.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutResult {
    pub winner: Winner,
    /// Point indices played, with the mover; passes are left out.
    pub moves: Vec<(u16, Color)>,
}

impl RolloutResult {
    /// 1 for a win, 0 for a loss, ½ for a draw, from `color`'s side.
    pub fn reward_for(&self, color: Color) -> f32 {
        reward(self.winner, color)
    }
}

pub(crate) fn reward(winner: Winner, color: Color) -> f32 {
    match (winner, color) {
        (Winner::Draw, _) => 0.5,
        (Winner::Black, Color::Black) | (Winner::White, Color::White) => 1.0,
        _ => 0.0,
    }
}

/// Plays `p` out to two passes or `3·N²` moves. Moves come from the pattern
/// table around the last move when any neighbor matches, and otherwise
/// uniformly from legal points that do not fill the mover's own eye.
pub fn rollout<R: Rng + ?Sized>(p: &Position, komi: f32, patterns: &PatternTable, rng: &mut R) -> RolloutResult {
    let mut pos = p.clone();
    let cap = 3 * pos.num_points();
    let mut moves = Vec::with_capacity(cap);
    let mut empties: Vec<u16> = Vec::with_capacity(pos.num_points());
    let mut plays = 0;
    while pos.consecutive_passes() < 2 && plays < cap {
        plays += 1;
        let me = pos.to_play();
        let choice = pattern_move(&pos, patterns, rng).or_else(|| random_move(&pos, &mut empties, rng));
        match choice {
            Some(i) => {
                pos.play_fast(i).expect("playout moves are legal");
                moves.push((i as u16, me));
            }
            None => pos.pass_fast(),
        }
    }
    RolloutResult { winner: pos.score(komi).winner, moves }
}

fn playable(p: &Position, i: usize, me: Color) -> bool {
    p.stone_at_index(i).is_none() && !p.is_eye_index(i, me) && p.is_legal_fast(i)
}

fn pattern_move<R: Rng + ?Sized>(p: &Position, patterns: &PatternTable, rng: &mut R) -> Option<usize> {
    if patterns.is_empty() {
        return None;
    }
    let last = p.last_move()?.point()?.index(p.size());
    let me = p.to_play();
    let geom = p.geometry();
    let mut cand = [(0usize, 0f32); 8];
    let mut n = 0;
    let mut total = 0.0;
    for &j in geom.neighbors(last).iter().chain(geom.diagonals(last)) {
        let j = j as usize;
        if p.stone_at_index(j).is_some() {
            continue;
        }
        let w = patterns.weight(code_at(p, j, me));
        if w > 0.0 && playable(p, j, me) {
            cand[n] = (j, w);
            n += 1;
            total += w;
        }
    }
    if n == 0 {
        return None;
    }
    let mut x = rng.gen::<f32>() * total;
    for &(j, w) in &cand[..n] {
        x -= w;
        if x <= 0.0 {
            return Some(j);
        }
    }
    Some(cand[n - 1].0)
}

fn random_move<R: Rng + ?Sized>(p: &Position, empties: &mut Vec<u16>, rng: &mut R) -> Option<usize> {
    let me = p.to_play();
    empties.clear();
    empties.extend((0..p.num_points() as u16).filter(|&i| p.stone_at_index(i as usize).is_none()));
    while !empties.is_empty() {
        let k = rng.gen_range(0..empties.len());
        let i = empties[k] as usize;
        if playable(p, i, me) {
            return Some(i);
        }
        empties.swap_remove(k);
    }
    None
}
