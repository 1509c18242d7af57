//! Lightweight ladder reading.
//!
//! The escaper may extend on its single liberty or capture an adjacent
//! attacker chain that is in atari. At most two escape options are read per
//! node: the extension first, then captures ordered by captured size.
//! Captures tied in size at the cut-off are all kept so the answer never
//! depends on board orientation. The attacker answers a two-liberty chain on
//! either liberty. Three or more liberties, or running out of the ply budget,
//! count as an escape.

use crate::board::{Color, Position};

pub const MAX_LADDER_PLIES: usize = 64;
const ESCAPE_BREADTH: usize = 2;

/// True when the side to move at `i` starts a ladder that captures some
/// adjacent opponent chain. `p` must allow the play.
pub(crate) fn captures_by_ladder(p: &Position, i: usize) -> bool {
    let geom = p.geometry();
    let attacker = p.to_play();
    let defender = attacker.opponent();
    let atari_targets: Vec<usize> =
        geom.neighbors(i).iter().map(|&n| n as usize).filter(|&n| p.stone_at_index(n) == Some(defender) && p.chain_libs(p.chain_head(n)).len() == 2).collect();
    if atari_targets.is_empty() {
        return false;
    }
    let mut after = p.clone();
    if after.play_fast(i).is_err() {
        return false;
    }
    atari_targets
        .into_iter()
        .any(|t| after.stone_at_index(t) == Some(defender) && after.chain_libs(after.chain_head(t)).len() == 1 && escape_fails(&after, t, 0))
}

/// `p` has the escaper to move and the chain through `target` in atari.
fn escape_fails(p: &Position, target: usize, depth: usize) -> bool {
    if depth >= MAX_LADDER_PLIES {
        return false;
    }
    let escaper = p.to_play();
    for option in escape_options(p, target, escaper) {
        let mut q = p.clone();
        if q.play_fast(option).is_err() {
            continue;
        }
        let libs = q.chain_libs(q.chain_head(target));
        match libs.len() {
            0 | 1 => continue,
            2 => {
                let replies: Vec<usize> = libs.iter().collect();
                let caught = replies.into_iter().any(|a| {
                    let mut r = q.clone();
                    r.play_fast(a).is_ok()
                        && r.stone_at_index(target) == Some(escaper)
                        && r.chain_libs(r.chain_head(target)).len() == 1
                        && escape_fails(&r, target, depth + 2)
                });
                if !caught {
                    return false;
                }
            }
            _ => return false,
        }
    }
    true
}

fn escape_options(p: &Position, target: usize, escaper: Color) -> Vec<usize> {
    let geom = p.geometry();
    let head = p.chain_head(target);
    let mut options = Vec::with_capacity(4);
    if let Some(lib) = p.chain_libs(head).first() {
        options.push(lib);
    }
    // (captured size, liberty point)
    let mut captures: Vec<(usize, usize)> = Vec::new();
    for s in p.chain_stones(head) {
        for &n in geom.neighbors(s) {
            let n = n as usize;
            if p.stone_at_index(n) != Some(escaper.opponent()) {
                continue;
            }
            let h = p.chain_head(n);
            let libs = p.chain_libs(h);
            if libs.len() == 1 {
                let lib = libs.first().unwrap();
                if !captures.iter().any(|&(_, l)| l == lib) && !options.contains(&lib) {
                    captures.push((p.chain_size(h), lib));
                }
            }
        }
    }
    captures.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let room = ESCAPE_BREADTH.saturating_sub(options.len());
    if room > 0 && !captures.is_empty() {
        let cutoff = captures[(room - 1).min(captures.len() - 1)].0;
        options.extend(captures.iter().filter(|c| c.0 >= cutoff).map(|c| c.1));
    }
    options
}
