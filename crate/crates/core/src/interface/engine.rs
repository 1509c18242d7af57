use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::board::{Color, Move, Point, Position, EMPTY_BOARD_HASH};
use crate::data::Rank;
use crate::features::extract;
use crate::network::{Model, NetworkError};
use crate::search::{CnnEvaluator, PatternTable, SearchParams, Searcher};

use super::gtp::{format_vertex, parse_vertex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Play(Move),
    Resign,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("engine i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("{0}")]
    Unsupported(String),
}

/// A move generator driven by the GTP server and the match harness.
pub trait Engine: Send {
    fn name(&self) -> String;

    /// Starts a new game; engines with randomness reseed from `seed`.
    fn new_game(&mut self, _seed: u64) {}

    fn genmove(&mut self, p: &Position, komi: f32) -> Result<Action, EngineError>;

    /// Returns false when the engine has no rank input.
    fn set_rank(&mut self, _rank: Rank) -> bool {
        false
    }

    /// Returns false when the engine does not search.
    fn set_rollouts(&mut self, _n: usize) -> bool {
        false
    }

    /// The `n` most probable network moves, when the engine has a network.
    fn top_n(&mut self, _p: &Position, _n: usize) -> Result<Vec<(Point, f32)>, EngineError> {
        Err(EngineError::Unsupported(format!("{} has no move distribution", self.name())))
    }
}

/// Which in-process engine to build.
#[derive(Debug, Clone)]
pub enum EngineMode {
    RawPolicy { model: Arc<Model<f32>>, rank: Rank },
    Mcts { params: SearchParams },
    MctsCnn { model: Arc<Model<f32>>, params: SearchParams, rank: Rank },
    Random,
}

impl EngineMode {
    pub fn build(self, patterns: Arc<PatternTable>, resign: Option<f64>) -> Box<dyn Engine> {
        match self {
            EngineMode::RawPolicy { model, rank } => Box::new(PolicyEngine { model, rank }),
            EngineMode::Mcts { params } => Box::new(MctsEngine::new(params, patterns, None, resign)),
            EngineMode::MctsCnn { model, mut params, rank } => {
                params.rank = rank;
                Box::new(MctsEngine::new(params, patterns, Some(model), resign))
            }
            EngineMode::Random => Box::new(RandomEngine::new(0)),
        }
    }
}

/// Pass after the opponent passed if the current area count already wins.
pub fn pass_is_safe(p: &Position, komi: f32) -> bool {
    p.last_move().is_some_and(|m| m.is_pass()) && p.score(komi).winner_color() == Some(p.to_play())
}

/// Legal points that do not fill one of the mover's true eyes.
pub fn sensible_points(p: &Position) -> Vec<Point> {
    let me = p.to_play();
    p.legal_points().into_iter().filter(|&pt| !p.is_eye(pt, me)).collect()
}

/// Plays the network's most probable sensible move with no search.
pub struct PolicyEngine {
    pub model: Arc<Model<f32>>,
    pub rank: Rank,
}

impl PolicyEngine {
    fn probabilities(&self, p: &Position) -> Result<Vec<f32>, EngineError> {
        let t = extract(p, self.rank);
        let mut heads = self.model.forward(std::slice::from_ref(&t))?;
        Ok(std::mem::take(&mut heads[0][p.to_play().index()].probs))
    }
}

impl Engine for PolicyEngine {
    fn name(&self) -> String {
        "policy".into()
    }

    fn genmove(&mut self, p: &Position, komi: f32) -> Result<Action, EngineError> {
        let me = p.to_play();
        let candidates = sensible_points(p);
        if candidates.is_empty() || pass_is_safe(p, komi) {
            return Ok(Action::Play(Move::pass(me)));
        }
        let probs = self.probabilities(p)?;
        let size = p.size();
        let mut best = candidates[0];
        for &pt in &candidates[1..] {
            if probs[pt.index(size)] > probs[best.index(size)] {
                best = pt;
            }
        }
        Ok(Action::Play(Move::play(me, best)))
    }

    fn set_rank(&mut self, rank: Rank) -> bool {
        self.rank = rank;
        true
    }

    fn top_n(&mut self, p: &Position, n: usize) -> Result<Vec<(Point, f32)>, EngineError> {
        let probs = self.probabilities(p)?;
        Ok(top_points(p, &probs, n))
    }
}

fn top_points(p: &Position, probs: &[f32], n: usize) -> Vec<(Point, f32)> {
    let size = p.size();
    let mut legal: Vec<(Point, f32)> = p.legal_points().into_iter().map(|pt| (pt, probs[pt.index(size)])).collect();
    let total: f32 = legal.iter().map(|x| x.1).sum();
    if total > 0.0 {
        legal.iter_mut().for_each(|x| x.1 /= total);
    }
    // Stable sort keeps board order among equal probabilities.
    legal.sort_by(|a, b| b.1.total_cmp(&a.1));
    legal.truncate(n);
    legal
}

/// Tree search, with or without network priors.
pub struct MctsEngine {
    searcher: Searcher,
    model: Option<Arc<Model<f32>>>,
    resign: Option<f64>,
}

impl MctsEngine {
    pub fn new(params: SearchParams, patterns: Arc<PatternTable>, model: Option<Arc<Model<f32>>>, resign: Option<f64>) -> MctsEngine {
        let evaluator = model.clone().map(|m| Box::new(CnnEvaluator { model: m }) as Box<dyn crate::search::Evaluator>);
        MctsEngine { searcher: Searcher::new(params, patterns, evaluator), model, resign }
    }

    pub fn searcher(&self) -> &Searcher {
        &self.searcher
    }
}

impl Engine for MctsEngine {
    fn name(&self) -> String {
        if self.model.is_some() { "mcts-cnn" } else { "mcts" }.into()
    }

    fn new_game(&mut self, seed: u64) {
        self.searcher.reset(seed);
    }

    fn genmove(&mut self, p: &Position, komi: f32) -> Result<Action, EngineError> {
        if let Some(m) = &self.model {
            if m.board_size() != p.size() {
                return Err(NetworkError::ShapeMismatch { expected: format!("{0}x{0} board", m.board_size()), found: format!("{0}x{0}", p.size()) }.into());
            }
        }
        if pass_is_safe(p, komi) {
            return Ok(Action::Play(Move::pass(p.to_play())));
        }
        self.searcher.params_mut().komi = komi;
        let r = self.searcher.search(p);
        match self.resign {
            Some(t) if r.value < t => Ok(Action::Resign),
            _ => Ok(Action::Play(r.best)),
        }
    }

    fn set_rank(&mut self, rank: Rank) -> bool {
        if self.model.is_none() {
            return false;
        }
        self.searcher.params_mut().rank = rank;
        true
    }

    fn set_rollouts(&mut self, n: usize) -> bool {
        self.searcher.params_mut().rollouts = n;
        true
    }

    fn top_n(&mut self, p: &Position, n: usize) -> Result<Vec<(Point, f32)>, EngineError> {
        let Some(model) = self.model.clone() else {
            return Err(EngineError::Unsupported("mcts has no move distribution".into()));
        };
        let engine = PolicyEngine { model, rank: self.searcher.params().rank };
        let probs = engine.probabilities(p)?;
        Ok(top_points(p, &probs, n))
    }
}

/// Uniformly random sensible moves; passes only when none are left.
pub struct RandomEngine {
    rng: ChaCha8Rng,
}

impl RandomEngine {
    pub fn new(seed: u64) -> RandomEngine {
        RandomEngine { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Engine for RandomEngine {
    fn name(&self) -> String {
        "random".into()
    }

    fn new_game(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    fn genmove(&mut self, p: &Position, _komi: f32) -> Result<Action, EngineError> {
        let pts = sensible_points(p);
        let me = p.to_play();
        if pts.is_empty() {
            return Ok(Action::Play(Move::pass(me)));
        }
        Ok(Action::Play(Move::play(me, pts[self.rng.gen_range(0..pts.len())])))
    }
}

/// Another GTP program run as a subprocess. The whole game is replayed
/// before every `genmove`, so the engine never has to track state.
pub struct ExternalEngine {
    label: String,
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl ExternalEngine {
    pub fn spawn(command: &str) -> Result<ExternalEngine, EngineError> {
        let mut parts = command.split_whitespace();
        let program = parts.next().ok_or_else(|| EngineError::Unsupported("empty engine command".into()))?;
        let mut child = Command::new(program).args(parts).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::null()).spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ExternalEngine { label: command.to_string(), child, stdin, stdout })
    }

    pub fn send(&mut self, command: &str) -> Result<String, EngineError> {
        writeln!(self.stdin, "{command}")?;
        self.stdin.flush()?;
        let mut reply = String::new();
        loop {
            let mut line = String::new();
            if self.stdout.read_line(&mut line)? == 0 {
                return Err(EngineError::Protocol(format!("{} closed its output", self.label)));
            }
            let line = line.trim_end_matches(['\r', '\n']);
            if line.is_empty() {
                if reply.is_empty() {
                    continue;
                }
                break;
            }
            if !reply.is_empty() {
                reply.push('\n');
            }
            reply.push_str(line);
        }
        if let Some(rest) = reply.strip_prefix('=') {
            Ok(rest.trim_start_matches(|c: char| c.is_ascii_digit()).trim().to_string())
        } else if let Some(rest) = reply.strip_prefix('?') {
            Err(EngineError::Protocol(format!("{command:?} rejected: {}", rest.trim())))
        } else {
            Err(EngineError::Protocol(format!("malformed reply {reply:?}")))
        }
    }
}

impl Engine for ExternalEngine {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn genmove(&mut self, p: &Position, komi: f32) -> Result<Action, EngineError> {
        if p.hash_history()[0] != EMPTY_BOARD_HASH {
            return Err(EngineError::Unsupported("external engines start from an empty board".into()));
        }
        let size = p.size();
        self.send(&format!("boardsize {size}"))?;
        self.send("clear_board")?;
        self.send(&format!("komi {komi}"))?;
        for m in p.history() {
            self.send(&format!("play {} {}", m.color.letter(), format_vertex(m.point(), size)))?;
        }
        let me = p.to_play();
        let reply = self.send(&format!("genmove {}", me.letter()))?;
        if reply.eq_ignore_ascii_case("resign") {
            return Ok(Action::Resign);
        }
        let vertex = parse_vertex(&reply, size).map_err(|e| EngineError::Protocol(format!("genmove reply {reply:?}: {e}")))?;
        Ok(Action::Play(match vertex {
            Some(pt) => Move::play(me, pt),
            None => Move::pass(me),
        }))
    }
}

impl Drop for ExternalEngine {
    fn drop(&mut self) {
        let _ = writeln!(self.stdin, "quit");
        let _ = self.stdin.flush();
        if self.child.try_wait().ok().flatten().is_none() {
            let _ = self.child.kill();
        }
        let _ = self.child.wait();
    }
}

/// Parses an engine description: `random`, `mcts`, `policy:<model>`,
/// `mcts-cnn:<model>` or `gtp:<command line>`.
pub fn engine_from_spec(spec: &str, params: &SearchParams, rank: Rank, resign: Option<f64>) -> Result<Box<dyn Engine>, EngineError> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let load = |path: &str| -> Result<Arc<Model<f32>>, EngineError> {
        if path.is_empty() {
            return Err(EngineError::Unsupported(format!("{kind} needs a model path")));
        }
        Ok(Arc::new(crate::network::load_model(std::path::Path::new(path))?))
    };
    let patterns = Arc::new(PatternTable::default());
    let mode = match kind {
        "random" => EngineMode::Random,
        "mcts" => EngineMode::Mcts { params: params.clone() },
        "policy" => EngineMode::RawPolicy { model: load(arg)?, rank },
        "mcts-cnn" => EngineMode::MctsCnn { model: load(arg)?, params: params.clone(), rank },
        "gtp" => return Ok(Box::new(ExternalEngine::spawn(arg)?)),
        other => return Err(EngineError::Unsupported(format!("unknown engine kind {other:?}"))),
    };
    Ok(mode.build(patterns, resign))
}

pub(crate) fn color_from_letter(s: &str) -> Option<Color> {
    match s.to_ascii_lowercase().as_str() {
        "b" | "black" => Some(Color::Black),
        "w" | "white" => Some(Color::White),
        _ => None,
    }
}
