//! Exhaustive forced-escape ladder search on the flood-fill reference
//! board, and the handcrafted positions it is checked on.

#![allow(dead_code)]

use super::boards::{parse, reference_of};
use tengen::board::reference::ReferenceBoard;
use tengen::board::{Color, Point};
use tengen::features::MAX_LADDER_PLIES;

type Grid = Vec<Option<Color>>;

/// The grid after `color` plays at `i`, refusing an immediate ko recapture
/// that would restore `prev`, the grid before the last move.
fn play(board: &ReferenceBoard, grid: &Grid, prev: Option<&Grid>, color: Color, i: usize) -> Option<Grid> {
    let probe = ReferenceBoard { grid: grid.clone(), to_play: color, ..board.clone() };
    probe.try_play(i).ok().map(|(g, _)| g).filter(|g| Some(g) != prev)
}

fn libs(grid: &Grid, size: usize, i: usize) -> Vec<usize> {
    ReferenceBoard::group(grid, size, i).1
}

/// Every escape: extend on the last liberty or capture any adjacent
/// attacker chain in atari. The attacker may answer on either liberty.
fn escape_fails(board: &ReferenceBoard, grid: &Grid, prev: &Grid, target: usize, escaper: Color, depth: usize) -> bool {
    if depth >= MAX_LADDER_PLIES {
        return false;
    }
    let size = board.size;
    let (stones, own_libs) = ReferenceBoard::group(grid, size, target);
    let mut options = own_libs.clone();
    for &s in &stones {
        let (c, r) = (s % size, s / size);
        let mut nbrs = Vec::new();
        if c > 0 {
            nbrs.push(s - 1);
        }
        if c + 1 < size {
            nbrs.push(s + 1);
        }
        if r > 0 {
            nbrs.push(s - size);
        }
        if r + 1 < size {
            nbrs.push(s + size);
        }
        for n in nbrs {
            if grid[n] == Some(escaper.opponent()) {
                let l = libs(grid, size, n);
                if l.len() == 1 && !options.contains(&l[0]) {
                    options.push(l[0]);
                }
            }
        }
    }
    for o in options {
        let Some(g) = play(board, grid, Some(prev), escaper, o) else { continue };
        let l = libs(&g, size, target);
        match l.len() {
            0 | 1 => continue,
            2 => {
                let caught = l.iter().any(|&a| match play(board, &g, Some(grid), escaper.opponent(), a) {
                    Some(h) => h[target] == Some(escaper) && libs(&h, size, target).len() == 1 && escape_fails(board, &h, &g, target, escaper, depth + 2),
                    None => false,
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

pub fn oracle(rows: &[&str], at: Point) -> bool {
    let p = parse(rows, Color::Black);
    let board = reference_of(&p);
    let size = board.size;
    let i = at.index(size);
    let Some(after) = play(&board, &board.grid, None, Color::Black, i) else { return false };
    let mut targets = Vec::new();
    let (c, r) = (i % size, i / size);
    for (dc, dr) in [(-1i32, 0i32), (1, 0), (0, -1), (0, 1)] {
        let (nc, nr) = (c as i32 + dc, r as i32 + dr);
        if nc < 0 || nr < 0 || nc >= size as i32 || nr >= size as i32 {
            continue;
        }
        let n = nr as usize * size + nc as usize;
        if board.grid[n] == Some(Color::White) && libs(&board.grid, size, n).len() == 2 {
            targets.push(n);
        }
    }
    targets
        .into_iter()
        .any(|t| after[t] == Some(Color::White) && libs(&after, size, t).len() == 1 && escape_fails(&board, &after, &board.grid, t, Color::White, 0))
}

pub struct Case {
    pub name: &'static str,
    pub rows: Vec<&'static str>,
    pub at: (u8, u8),
    pub expected: bool,
}

pub fn cases() -> Vec<Case> {
    let base = vec![".........", ".........", ".........", ".........", "...XO....", "....XX...", ".........", ".........", "........."];
    let with = |extra: &[(usize, usize, char)]| -> Vec<&'static str> {
        let mut rows: Vec<String> = base.iter().map(|s| s.to_string()).collect();
        for &(c, r, ch) in extra {
            rows[r].replace_range(c..c + 1, &ch.to_string());
        }
        rows.into_iter().map(|s| &*Box::leak(s.into_boxed_str())).collect()
    };
    vec![
        Case { name: "working ladder", rows: base.clone(), at: (4, 3), expected: true },
        Case { name: "atari from the wrong side", rows: base.clone(), at: (5, 4), expected: false },
        Case { name: "breaker on the diagonal", rows: with(&[(7, 1, 'O')]), at: (4, 3), expected: false },
        Case { name: "breaker further out", rows: with(&[(8, 0, 'O')]), at: (4, 3), expected: true },
        Case { name: "breaker next to the path", rows: with(&[(6, 1, 'O')]), at: (4, 3), expected: false },
        Case { name: "attacker stone on the path", rows: with(&[(7, 1, 'X')]), at: (4, 3), expected: true },
        Case { name: "not an atari", rows: base.clone(), at: (2, 2), expected: false },
        Case { name: "extension next to the chain", rows: base.clone(), at: (3, 3), expected: false },
        Case { name: "escape by capturing", rows: with(&[(6, 5, 'O'), (6, 4, 'O'), (5, 6, 'O'), (4, 6, 'O'), (3, 5, 'O')]), at: (4, 3), expected: false },
        Case {
            name: "capture is not enough",
            rows: vec![
                "..........",
                "..........",
                "..........",
                "..........",
                "...XO.....",
                "....XX....",
                "......O...",
                "..........",
                "..........",
                "..........",
            ][..]
                .iter()
                .map(|s| &s[..9])
                .take(9)
                .collect(),
            at: (4, 3),
            expected: true,
        },
        Case {
            name: "first line crawl",
            rows: vec![".........", ".........", ".........", ".........", ".........", ".........", ".........", "..X......", "..O......"],
            at: (1, 8),
            expected: true,
        },
        Case {
            name: "second line into the corner",
            rows: vec![".........", ".........", ".........", ".........", ".........", ".........", "..X......", ".XO......", "........."],
            at: (3, 7),
            expected: true,
        },
        Case {
            name: "two stone ladder",
            rows: vec![".........", ".........", ".........", "...X.....", "..XOO....", "...XXX...", ".........", ".........", "........."],
            at: (4, 3),
            expected: true,
        },
        Case {
            name: "two stone chain with breaker",
            rows: vec![".........", ".........", ".........", "...X.....", "..XOO.O..", "...XXX...", ".........", ".........", "........."],
            at: (4, 3),
            expected: false,
        },
        Case {
            name: "atari stone in atari itself",
            rows: vec![".........", ".........", ".........", "...O.O...", "...XO....", "....X....", ".........", ".........", "........."],
            at: (4, 3),
            expected: false,
        },
        Case {
            name: "two liberties left is not an atari",
            rows: vec![".........", ".........", ".........", ".........", ".........", ".........", "...O.....", "..OXO....", "........."],
            at: (3, 5),
            expected: false,
        },
        Case {
            name: "net not ladder",
            rows: vec![".........", ".........", ".........", "...X.....", "...O.X...", "..X......", ".........", ".........", "........."],
            at: (4, 4),
            expected: false,
        },
        Case {
            name: "three liberties",
            rows: vec![".........", ".........", ".........", ".........", "....O....", ".........", ".........", ".........", "........."],
            at: (4, 3),
            expected: false,
        },
        Case {
            name: "snapback after capturing the atari stone",
            rows: vec!["....X....", ".XO.OX.XO", "O...XXO..", "..OOO...X", ".OX..XX.O", ".O......X", "XOXO.O.O.", "O.....XOO", "XX.X....X"],
            at: (8, 0),
            expected: true,
        },
        Case {
            name: "ladder across a wider board",
            rows: vec![
                ".............",
                ".............",
                ".............",
                ".............",
                ".............",
                ".............",
                "......XO.....",
                ".......XX....",
                ".............",
                ".............",
                ".............",
                ".............",
                ".............",
            ],
            at: (7, 5),
            expected: true,
        },
        Case {
            name: "wider board with a distant breaker",
            rows: vec![
                ".............",
                ".............",
                ".............",
                "..........O..",
                ".............",
                ".............",
                "......XO.....",
                ".......XX....",
                ".............",
                ".............",
                ".............",
                ".............",
                ".............",
            ],
            at: (7, 5),
            expected: false,
        },
        Case { name: "attacker stone in atari on the path", rows: with(&[(5, 2, 'X'), (6, 2, 'O'), (5, 1, 'O'), (4, 2, 'O')]), at: (4, 3), expected: false },
        Case {
            name: "atari on two chains at once",
            rows: vec![".........", ".........", ".........", "..X.X....", ".XO.OX...", "..X.X....", ".........", ".........", "........."],
            at: (3, 4),
            expected: false,
        },
    ]
}
