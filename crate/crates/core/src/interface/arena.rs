//! Refereed matches between two engines.

use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::path::PathBuf;

use log::info;
use thiserror::Error;

use crate::board::{Color, Move, Position};
use crate::data::SgfGame;

use super::engine::{Action, Engine};
use super::gtp::format_vertex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::A => "A",
            Side::B => "B",
        })
    }
}

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("engine {which} failed in game {game}: {message}")]
    EngineCrash { which: Side, game: usize, message: String },
    #[error("engine {which} broke the rules in game {game}: {message}")]
    ProtocolViolation { which: Side, game: usize, message: String },
    #[error("could not write game record: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported board size {0}")]
    BoardSize(usize),
}

#[derive(Debug, Clone)]
pub struct MatchConfig {
    pub games: usize,
    pub size: usize,
    pub komi: f32,
    /// Games still going after this many moves are scored as they stand.
    pub max_moves: usize,
    pub seed: u64,
    pub sgf_dir: Option<PathBuf>,
}

impl MatchConfig {
    pub fn new(games: usize, size: usize) -> MatchConfig {
        MatchConfig { games, size, komi: 7.5, max_moves: 3 * size * size, seed: 0, sgf_dir: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Win(Side),
    Draw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameRecord {
    pub index: usize,
    pub a_color: Color,
    pub moves: Vec<Move>,
    /// `B+3.5`, `W+R`, `0` and so on.
    pub result: String,
    pub outcome: Outcome,
    pub hash: u64,
    pub duplicate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub a_name: String,
    pub b_name: String,
    pub scheduled: usize,
    pub wins: usize,
    pub losses: usize,
    pub draws: usize,
    pub duplicates: usize,
    pub games: Vec<GameRecord>,
}

impl MatchReport {
    /// Games that count: all scheduled games except duplicates.
    pub fn counted(&self) -> usize {
        self.wins + self.losses + self.draws
    }

    /// A's score rate, draws counting half.
    pub fn win_rate(&self) -> f64 {
        let n = self.counted();
        if n == 0 {
            return 0.0;
        }
        (self.wins as f64 + 0.5 * self.draws as f64) / n as f64
    }

    /// Standard error of the win rate, in percentage points.
    pub fn stderr(&self) -> f64 {
        stderr_percent(self.win_rate(), self.counted())
    }

    pub fn to_key_values(&self) -> String {
        format!(
            "engine_a={}\nengine_b={}\nscheduled={}\nwins={}\nlosses={}\ndraws={}\nduplicates={}\nwin_pct={:.2}\nstderr_pct={:.2}\n",
            self.a_name,
            self.b_name,
            self.scheduled,
            self.wins,
            self.losses,
            self.draws,
            self.duplicates,
            100.0 * self.win_rate(),
            self.stderr()
        )
    }
}

impl fmt::Display for MatchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} vs {}: {} games scheduled, {} duplicates excluded", self.a_name, self.b_name, self.scheduled, self.duplicates)?;
        writeln!(f, "A wins {}, losses {}, draws {}", self.wins, self.losses, self.draws)?;
        write!(f, "A win rate {:.1}% ± {:.1}", 100.0 * self.win_rate(), self.stderr())
    }
}

/// `√(p(1 − p)/n)·100`.
pub fn stderr_percent(p: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (p * (1.0 - p) / n as f64).sqrt() * 100.0
}

fn sequence_hash(moves: &[Move], size: usize) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    size.hash(&mut h);
    for m in moves {
        m.point().map(|p| p.index(size)).hash(&mut h);
    }
    h.finish()
}

/// Plays `config.games` games, A taking Black in even-numbered games.
/// Game `g` seeds both engines with `config.seed + g`.
pub fn run_match(a: &mut dyn Engine, b: &mut dyn Engine, config: &MatchConfig) -> Result<MatchReport, MatchError> {
    let start = Position::new(config.size).map_err(|_| MatchError::BoardSize(config.size))?;
    if let Some(dir) = &config.sgf_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut report = MatchReport {
        a_name: a.name(),
        b_name: b.name(),
        scheduled: config.games,
        wins: 0,
        losses: 0,
        draws: 0,
        duplicates: 0,
        games: Vec::with_capacity(config.games),
    };
    let mut seen = HashSet::new();
    for g in 0..config.games {
        let seed = config.seed.wrapping_add(g as u64);
        a.new_game(seed);
        b.new_game(seed);
        let a_color = if g % 2 == 0 { Color::Black } else { Color::White };
        let mut p = start.clone();
        let mut resigned: Option<Color> = None;
        while p.consecutive_passes() < 2 && p.history().len() < config.max_moves {
            let me = p.to_play();
            let (side, engine): (Side, &mut dyn Engine) = if me == a_color { (Side::A, &mut *a) } else { (Side::B, &mut *b) };
            let action = engine.genmove(&p, config.komi).map_err(|e| MatchError::EngineCrash { which: side, game: g, message: e.to_string() })?;
            match action {
                Action::Resign => {
                    resigned = Some(me);
                    break;
                }
                Action::Play(m) => {
                    if m.color != me {
                        return Err(MatchError::ProtocolViolation { which: side, game: g, message: "moved for the wrong color".into() });
                    }
                    p.play_mut(m).map_err(|e| MatchError::ProtocolViolation {
                        which: side,
                        game: g,
                        message: format!("illegal move {}: {e}", format_vertex(m.point(), config.size)),
                    })?;
                }
            }
        }
        let (winner, result) = match resigned {
            Some(c) => {
                let w = c.opponent();
                (Some(w), format!("{}+R", w.letter()))
            }
            None => {
                let s = p.score(config.komi);
                (s.winner_color(), s.to_string())
            }
        };
        let outcome = match winner {
            Some(c) if c == a_color => Outcome::Win(Side::A),
            Some(_) => Outcome::Win(Side::B),
            None => Outcome::Draw,
        };
        let moves = p.history().to_vec();
        let hash = sequence_hash(&moves, config.size);
        let duplicate = !seen.insert(hash);
        if duplicate {
            report.duplicates += 1;
        } else {
            match outcome {
                Outcome::Win(Side::A) => report.wins += 1,
                Outcome::Win(Side::B) => report.losses += 1,
                Outcome::Draw => report.draws += 1,
            }
        }
        if let Some(dir) = &config.sgf_dir {
            let mut sgf = SgfGame::new(config.size);
            sgf.komi = config.komi;
            sgf.moves = moves.clone();
            sgf.result = Some(result.clone());
            std::fs::write(dir.join(format!("game_{g:04}.sgf")), sgf.to_sgf())?;
        }
        info!("game {g}: A as {:?}, {result}, {} moves{}", a_color, moves.len(), if duplicate { " (duplicate)" } else { "" });
        report.games.push(GameRecord { index: g, a_color, moves, result, outcome, hash, duplicate });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interface::engine::RandomEngine;

    /// Always plays the first sensible point, so every game is the same.
    struct FirstPoint;

    impl Engine for FirstPoint {
        fn name(&self) -> String {
            "first".into()
        }

        fn genmove(&mut self, p: &Position, _komi: f32) -> Result<Action, super::super::engine::EngineError> {
            let me = p.to_play();
            Ok(Action::Play(match super::super::engine::sensible_points(p).first() {
                Some(&pt) => Move::play(me, pt),
                None => Move::pass(me),
            }))
        }
    }

    #[test]
    fn identical_games_are_excluded() {
        let cfg = MatchConfig::new(6, 5);
        let r = run_match(&mut FirstPoint, &mut FirstPoint, &cfg).unwrap();
        assert_eq!(r.duplicates, 5);
        assert_eq!(r.counted() + r.duplicates, r.scheduled);
    }

    #[test]
    fn accounting_identity_and_colors_alternate() {
        let cfg = MatchConfig::new(10, 5);
        let r = run_match(&mut RandomEngine::new(0), &mut RandomEngine::new(1), &cfg).unwrap();
        assert_eq!(r.wins + r.losses + r.draws + r.duplicates, 10);
        for g in &r.games {
            assert_eq!(g.a_color, if g.index % 2 == 0 { Color::Black } else { Color::White });
        }
    }

    #[test]
    fn stderr_formula() {
        assert!((stderr_percent(0.5, 100) - 5.0).abs() < 1e-12);
        assert_eq!(stderr_percent(1.0, 10), 0.0);
    }

    #[test]
    fn records_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = MatchConfig::new(2, 5);
        cfg.sgf_dir = Some(dir.path().to_path_buf());
        let r = run_match(&mut RandomEngine::new(0), &mut RandomEngine::new(1), &cfg).unwrap();
        let text = std::fs::read(dir.path().join("game_0001.sgf")).unwrap();
        let g = crate::data::parse_sgf(&text).unwrap();
        assert_eq!(g.moves, r.games[1].moves);
        assert_eq!(g.result.as_deref(), Some(r.games[1].result.as_str()));
    }
}
