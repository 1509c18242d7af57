//! Fixed Zobrist keys. Keys are indexed by the 19×19 coordinate of a point,
//! so a stone's key does not depend on the board size it sits on.

use super::point::{Color, Point, MAX_POINTS, MAX_SIZE};

/// Hash of an empty board with Black to play.
pub const EMPTY_BOARD_HASH: u64 = 0x5a3c_9e1d_74b2_0f68;

const fn splitmix(state: u64) -> (u64, u64) {
    let s = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = s;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    (s, z ^ (z >> 31))
}

const fn build_keys() -> [[u64; 2]; MAX_POINTS] {
    let mut keys = [[0u64; 2]; MAX_POINTS];
    let mut state = 0x2545_f491_4f6c_dd1d_u64;
    let mut i = 0;
    while i < MAX_POINTS {
        let (s, a) = splitmix(state);
        let (s, b) = splitmix(s);
        state = s;
        keys[i] = [a, b];
        i += 1;
    }
    keys
}

static STONE_KEYS: [[u64; 2]; MAX_POINTS] = build_keys();

pub const WHITE_TO_PLAY_KEY: u64 = 0xd1b5_4a32_d192_ed03;

#[inline]
pub fn stone_key(p: Point, color: Color) -> u64 {
    STONE_KEYS[p.row as usize * MAX_SIZE + p.col as usize][color.index()]
}

#[inline]
pub fn side_key(to_play: Color) -> u64 {
    match to_play {
        Color::Black => 0,
        Color::White => WHITE_TO_PLAY_KEY,
    }
}
