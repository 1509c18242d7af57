//! A deliberately plain, pointer-tree reimplementation of the searcher's
//! algorithm. It shares only the playout function and feature extraction
//! with the library, so agreement on visit counts checks the arena layout,
//! the batching queue and the backup bookkeeping.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tengen::board::{Color, Move, Point, Position, Winner};
use tengen::features::{extract, FeatureTensor};
use tengen::search::{rollout, PatternTable, SearchParams};

pub struct TwinNode {
    pub point: u16,
    pub color: Color,
    pub n: u32,
    pub w: f32,
    pub rave_n: u32,
    pub rave_w: f32,
    pub prior: f32,
    pub prior_n: f32,
    pub prior_w: f32,
    pub expanded: bool,
    pub children: Vec<TwinNode>,
}

impl TwinNode {
    fn new(point: u16, color: Color) -> TwinNode {
        TwinNode { point, color, n: 0, w: 0.0, rave_n: 0, rave_w: 0.0, prior: 0.0, prior_n: 0.0, prior_w: 0.0, expanded: false, children: Vec::new() }
    }
}

fn reward(winner: Winner, color: Color) -> f32 {
    match (winner, color) {
        (Winner::Draw, _) => 0.5,
        (Winner::Black, Color::Black) | (Winner::White, Color::White) => 1.0,
        _ => 0.0,
    }
}

fn virtual_value(prior: f32, m: usize) -> f32 {
    let r = prior * m as f32;
    r / (1.0 + r)
}

pub type Policy = fn(&FeatureTensor) -> Vec<f32>;

pub struct Twin {
    pub params: SearchParams,
    pub root: TwinNode,
    root_pos: Position,
    rng: ChaCha8Rng,
    patterns: PatternTable,
    policy: Option<Policy>,
    /// Submitted, not yet batched: node path and its distribution.
    buffered: Vec<(Vec<usize>, Vec<f32>)>,
    /// Batched and waiting to be applied.
    ready: Vec<(Vec<usize>, Vec<f32>)>,
    pub submitted: usize,
    pub applied: usize,
}

impl Twin {
    pub fn new(params: SearchParams, patterns: PatternTable, policy: Option<Policy>, root: &Position) -> Twin {
        let mut t = Twin {
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            params,
            root: TwinNode::new(u16::MAX, root.to_play().opponent()),
            root_pos: root.clone(),
            patterns,
            policy,
            buffered: Vec::new(),
            ready: Vec::new(),
            submitted: 0,
            applied: 0,
        };
        if root.consecutive_passes() < 2 {
            t.expand(&[], &root.clone());
        }
        t
    }

    fn node_mut(&mut self, path: &[usize]) -> &mut TwinNode {
        let mut n = &mut self.root;
        for &k in path {
            n = &mut n.children[k];
        }
        n
    }

    fn expand(&mut self, path: &[usize], pos: &Position) {
        let me = pos.to_play();
        let np = pos.num_points();
        let mut kids = Vec::new();
        for i in 0..np {
            let pt = Point::from_index(i, pos.size());
            if pos.stone_at(pt).is_none() && !pos.is_eye(pt, me) && pos.is_legal_point(pt) {
                kids.push(TwinNode::new(i as u16, me));
            }
        }
        kids.push(TwinNode::new(np as u16, me));
        let m = kids.len();
        let u = 1.0 / m as f32;
        for k in &mut kids {
            k.prior = u;
            k.prior_n = self.params.prior_visits;
            k.prior_w = self.params.prior_visits * virtual_value(u, m);
        }
        let node = self.node_mut(path);
        node.children = kids;
        node.expanded = true;
        if let Some(policy) = self.policy {
            let probs = policy(&extract(pos, self.params.rank));
            self.buffered.push((path.to_vec(), probs));
            self.submitted += 1;
            if self.buffered.len() >= self.params.batch_size {
                let batch = std::mem::take(&mut self.buffered);
                self.ready.extend(batch);
            }
        }
    }

    fn apply(&mut self, entries: Vec<(Vec<usize>, Vec<f32>)>) {
        for (path, probs) in entries {
            self.applied += 1;
            let np = probs.len();
            let node = self.node_mut(&path);
            let m = node.children.len();
            let mut mass = 0.0f32;
            for c in &node.children {
                if (c.point as usize) < np {
                    mass += probs[c.point as usize];
                }
            }
            if !(mass.is_finite() && mass > 0.0) {
                continue;
            }
            let share = 1.0 - 1.0 / m as f32;
            for c in &mut node.children {
                let p = if c.point as usize >= np { 1.0 / m as f32 } else { share * probs[c.point as usize].max(0.0) / mass };
                c.prior = p;
                c.prior_w = c.prior_n * virtual_value(p, m);
            }
        }
    }

    fn score(&self, c: &TwinNode, parent_n: u32) -> f64 {
        let n = c.n as f64;
        let den = c.n as f64 + c.prior_n as f64;
        let q = if den > 0.0 { (c.w as f64 + c.prior_w as f64) / den } else { 0.5 };
        let k = self.params.rave_equivalence;
        let (beta, qr) = if k > 0.0 && c.rave_n > 0 { ((k / (3.0 * n + k)).sqrt(), c.rave_w as f64 / c.rave_n as f64) } else { (0.0, q) };
        (1.0 - beta) * q + beta * qr + self.params.c_uct * c.prior as f64 * (parent_n as f64).sqrt() / (1.0 + n)
    }

    pub fn simulate(&mut self) {
        let ready = std::mem::take(&mut self.ready);
        self.apply(ready);
        let mut pos = self.root_pos.clone();
        let mut path: Vec<usize> = Vec::new();
        let mut moves: Vec<(u16, Color)> = Vec::new();
        let winner;
        loop {
            if pos.consecutive_passes() >= 2 {
                winner = pos.score(self.params.komi).winner;
                break;
            }
            if !path.is_empty() {
                let threshold = self.params.expansion_threshold;
                let node = self.node_mut(&path);
                if !node.expanded && node.n >= threshold {
                    let p = path.clone();
                    self.expand(&p, &pos);
                }
                let node = self.node_mut(&path);
                if node.n == 0 || !node.expanded {
                    let r = rollout(&pos, self.params.komi, &self.patterns, &mut self.rng);
                    moves.extend(r.moves);
                    winner = r.winner;
                    break;
                }
            }
            let node = {
                let mut n = &self.root;
                for &k in &path {
                    n = &n.children[k];
                }
                n
            };
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (k, c) in node.children.iter().enumerate() {
                let s = self.score(c, node.n);
                if s > best_score {
                    best_score = s;
                    best = k;
                }
            }
            let c = &node.children[best];
            let me = pos.to_play();
            let m = if c.point as usize >= pos.num_points() { Move::pass(me) } else { Move::play(me, Point::from_index(c.point as usize, pos.size())) };
            moves.push((c.point, me));
            pos.play_mut(m).unwrap();
            path.push(best);
        }
        let np = self.root_pos.num_points();
        let rave = self.params.rave_equivalence > 0.0;
        for d in 0..=path.len() {
            let node = self.node_mut(&path[..d]);
            node.n += 1;
            node.w += reward(winner, node.color);
            if !rave || !node.expanded {
                continue;
            }
            let mover = node.color.opponent();
            let mut seen = vec![false; np];
            for &(pt, c) in &moves[d..] {
                if c != mover || pt as usize >= np || seen[pt as usize] {
                    continue;
                }
                seen[pt as usize] = true;
                if let Some(child) = node.children.iter_mut().find(|ch| ch.point == pt) {
                    child.rave_n += 1;
                    child.rave_w += reward(winner, c);
                }
            }
        }
    }

    /// Sends the partial batch and applies everything outstanding.
    pub fn finish(&mut self) {
        let mut rest = std::mem::take(&mut self.ready);
        rest.append(&mut self.buffered);
        self.apply(rest);
    }

    pub fn root_visits(&self) -> Vec<u32> {
        self.root.children.iter().map(|c| c.n).collect()
    }
}

/// A deterministic stand-in for a network: a fixed pseudo-random
/// distribution keyed on the stones.
pub fn hashed_policy(f: &FeatureTensor) -> Vec<f32> {
    let n = f.size() * f.size();
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in f.as_bytes() {
        h = (h ^ b as u64).wrapping_mul(0x100_0000_01b3);
    }
    let raw: Vec<f32> = (0..n)
        .map(|i| {
            let x = (h ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            ((x >> 40) as f32 / (1u64 << 24) as f32).powi(3) + 1e-3
        })
        .collect();
    let s: f32 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}
