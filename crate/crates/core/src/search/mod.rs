//! Monte-Carlo tree search with UCT, RAVE, pattern playouts and network
//! priors that arrive asynchronously in batches.

mod evaluator;
mod patterns;
mod rollout;

use std::sync::Arc;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::board::{Color, Move, Point, Position};
use crate::data::Rank;
use crate::features::extract;

pub use evaluator::{CnnEvaluator, EvalMode, EvalQueue, EvalRequest, EvalResult, Evaluator, EvaluatorFailure, QueueStats};
pub use patterns::{code_at, PatternError, PatternTable, DEFAULT_PATTERNS};
pub use rollout::{rollout, RolloutResult};

pub type NodeId = u32;

/// `point` of the root node, which no move leads to.
pub const NO_POINT: u16 = u16::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchParams {
    pub rollouts: usize,
    pub c_uct: f64,
    /// RAVE equivalence parameter `k` in `β = √(k / (3N + k))`; zero disables RAVE.
    pub rave_equivalence: f64,
    /// Virtual visits that carry a child's prior into its value estimate.
    pub prior_visits: f32,
    pub batch_size: usize,
    /// Visits a node receives as a leaf before its children are created.
    pub expansion_threshold: u32,
    pub seed: u64,
    pub komi: f32,
    /// Rank planes used when asking the network for priors.
    pub rank: Rank,
    pub reuse_tree: bool,
    pub eval_mode: EvalMode,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            rollouts: 1000,
            c_uct: 1.0,
            rave_equivalence: 1000.0,
            prior_visits: 10.0,
            batch_size: 128,
            expansion_threshold: 0,
            seed: 0,
            komi: 7.5,
            rank: Rank::Dan(9),
            reuse_tree: false,
            eval_mode: EvalMode::Threaded,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// Point index of the move leading here, `num_points` for a pass.
    pub point: u16,
    /// The player who made that move.
    pub color: Color,
    pub n: u32,
    /// Total reward from `color`'s point of view.
    pub w: f32,
    pub rave_n: u32,
    pub rave_w: f32,
    pub prior: f32,
    pub prior_n: f32,
    pub prior_w: f32,
    pub first_child: u32,
    pub num_children: u16,
    pub expanded: bool,
    pub pending: bool,
    pub hash: u64,
}

impl Node {
    fn new(point: u16, color: Color, hash: u64) -> Node {
        Node {
            point,
            color,
            n: 0,
            w: 0.0,
            rave_n: 0,
            rave_w: 0.0,
            prior: 0.0,
            prior_n: 0.0,
            prior_w: 0.0,
            first_child: 0,
            num_children: 0,
            expanded: false,
            pending: false,
            hash,
        }
    }

    pub fn children(&self) -> std::ops::Range<usize> {
        self.first_child as usize..self.first_child as usize + self.num_children as usize
    }

    /// Mean reward including the prior's virtual visits.
    pub fn value(&self) -> Option<f64> {
        let den = self.n as f64 + self.prior_n as f64;
        (den > 0.0).then(|| (self.w as f64 + self.prior_w as f64) / den)
    }
}

/// `(1 − β)·Q + β·Q_rave + c·P·√N_parent / (1 + N)`.
pub fn selection_score(child: &Node, parent_visits: u32, params: &SearchParams) -> f64 {
    let n = child.n as f64;
    let q = child.value().unwrap_or(0.5);
    let (beta, q_rave) = if params.rave_equivalence > 0.0 && child.rave_n > 0 {
        let k = params.rave_equivalence;
        ((k / (3.0 * n + k)).sqrt(), child.rave_w as f64 / child.rave_n as f64)
    } else {
        (0.0, q)
    };
    (1.0 - beta) * q + beta * q_rave + params.c_uct * child.prior as f64 * (parent_visits as f64).sqrt() / (1.0 + n)
}

/// Highest-scoring child of an expanded node, lowest index on ties.
pub fn select_child(nodes: &[Node], parent: NodeId, params: &SearchParams) -> NodeId {
    let p = &nodes[parent as usize];
    let mut best = p.first_child;
    let mut best_score = f64::NEG_INFINITY;
    for c in p.children() {
        let s = selection_score(&nodes[c], p.n, params);
        if s > best_score {
            best_score = s;
            best = c as NodeId;
        }
    }
    best
}

/// Prior probability of each child, given network probabilities over points.
/// The pass child keeps a `1/M` share; board moves split the rest in
/// proportion to the network. Returns `None` when the network puts no mass
/// on any legal child.
pub fn child_priors(points: &[u16], num_points: usize, probs: &[f32]) -> Option<Vec<f32>> {
    let m = points.len() as f32;
    let mass: f32 = points.iter().filter(|&&p| (p as usize) < num_points).map(|&p| probs.get(p as usize).copied().unwrap_or(0.0)).sum();
    if !(mass.is_finite() && mass > 0.0) {
        return None;
    }
    let board_share = if points.iter().any(|&p| p as usize >= num_points) { 1.0 - 1.0 / m } else { 1.0 };
    Some(points.iter().map(|&p| if p as usize >= num_points { 1.0 / m } else { board_share * probs[p as usize].max(0.0) / mass }).collect())
}

/// Value carried by the virtual visits: `r / (1 + r)` with `r = P·M`, so a
/// uniform prior is worth ½.
pub fn prior_value(prior: f32, siblings: usize) -> f32 {
    let r = prior * siblings as f32;
    r / (1.0 + r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChildStats {
    pub mv: Move,
    pub visits: u32,
    pub value: f64,
    pub prior: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best: Move,
    pub visits: u32,
    /// Estimated win rate of the best move for the side to move.
    pub value: f64,
    pub children: Vec<ChildStats>,
    pub evals_submitted: u64,
    pub evals_applied: u64,
    pub evals_failed: u64,
    pub batch_sizes: Vec<usize>,
}

impl SearchResult {
    pub fn visit_vector(&self) -> Vec<u32> {
        self.children.iter().map(|c| c.visits).collect()
    }
}

pub struct Searcher {
    params: SearchParams,
    patterns: Arc<PatternTable>,
    queue: Option<EvalQueue>,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    root: Option<Position>,
    root_holdback: u32,
    marks: Vec<u32>,
    generation: u32,
    applied: u64,
    failed: u64,
    last_seq: Option<u64>,
    start: (u64, u64, u64, usize),
}

impl Searcher {
    pub fn new(params: SearchParams, patterns: Arc<PatternTable>, evaluator: Option<Box<dyn Evaluator>>) -> Searcher {
        let queue = evaluator.map(|e| EvalQueue::new(e, params.batch_size, params.eval_mode));
        Searcher {
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            params,
            patterns,
            queue,
            nodes: Vec::new(),
            root: None,
            root_holdback: 0,
            marks: Vec::new(),
            generation: 0,
            applied: 0,
            failed: 0,
            last_seq: None,
            start: (0, 0, 0, 0),
        }
    }

    pub fn params(&self) -> &SearchParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut SearchParams {
        &mut self.params
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Drops the tree and reseeds the playout generator.
    pub fn reset(&mut self, seed: u64) {
        self.params.seed = seed;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.nodes.clear();
        self.root = None;
    }

    /// Runs `params.rollouts` simulations from `root`.
    pub fn search(&mut self, root: &Position) -> SearchResult {
        self.begin(root);
        for _ in 0..self.params.rollouts {
            self.simulate();
        }
        self.finish()
    }

    pub fn begin(&mut self, root: &Position) {
        let reused = if self.params.reuse_tree { self.promote(root) } else { None };
        match reused {
            Some(nodes) => {
                self.nodes = nodes;
                let r = &self.nodes[0];
                let below: u32 = r.children().map(|c| self.nodes[c].n).sum();
                self.root_holdback = r.n - below;
            }
            None => {
                self.nodes.clear();
                self.nodes.push(Node::new(NO_POINT, root.to_play().opponent(), root.hash()));
                self.root_holdback = 0;
            }
        }
        self.root = Some(root.clone());
        self.marks = vec![0; root.num_points() + 1];
        let stats = self.queue.as_ref().map(|q| (q.stats().submitted, q.stats().batch_sizes.len())).unwrap_or((0, 0));
        self.start = (stats.0, self.applied, self.failed, stats.1);
        if !self.nodes[0].expanded && root.consecutive_passes() < 2 {
            self.expand(0, root);
        }
    }

    /// One select, expand, playout and backup pass.
    pub fn simulate(&mut self) {
        self.apply_ready();
        let root = self.root.as_ref().expect("begin() not called");
        let mut pos = root.clone();
        let mut path: Vec<NodeId> = vec![0];
        let mut moves: Vec<(u16, Color)> = Vec::new();
        let threshold = self.params.expansion_threshold;
        let mut id: NodeId = 0;
        let winner;
        loop {
            if pos.consecutive_passes() >= 2 {
                winner = pos.score(self.params.komi).winner;
                break;
            }
            let node = &self.nodes[id as usize];
            if id != 0 {
                if !node.expanded && node.n >= threshold {
                    self.expand(id, &pos);
                }
                let node = &self.nodes[id as usize];
                if node.n == 0 || !node.expanded {
                    let r = rollout(&pos, self.params.komi, &self.patterns, &mut self.rng);
                    moves.extend(r.moves);
                    winner = r.winner;
                    break;
                }
            }
            let child = select_child(&self.nodes, id, &self.params);
            let c = &self.nodes[child as usize];
            let me = pos.to_play();
            let m = if c.point as usize >= pos.num_points() { Move::pass(me) } else { Move::play(me, Point::from_index(c.point as usize, pos.size())) };
            pos.play_mut(m).expect("tree moves are legal");
            moves.push((c.point, me));
            path.push(child);
            id = child;
        }
        self.backup(&path, &moves, winner);
    }

    fn backup(&mut self, path: &[NodeId], moves: &[(u16, Color)], winner: crate::board::Winner) {
        let num_points = self.marks.len() - 1;
        let rave = self.params.rave_equivalence > 0.0;
        for (d, &id) in path.iter().enumerate() {
            let node = &mut self.nodes[id as usize];
            node.n += 1;
            node.w += rollout::reward(winner, node.color);
            if !rave || !node.expanded {
                continue;
            }
            let mover = node.color.opponent();
            let children = node.children();
            self.generation = self.generation.wrapping_add(1);
            if self.generation == 0 {
                self.marks.iter_mut().for_each(|m| *m = 0);
                self.generation = 1;
            }
            for &(pt, c) in &moves[d..] {
                if c != mover || pt as usize >= num_points || self.marks[pt as usize] == self.generation {
                    continue;
                }
                self.marks[pt as usize] = self.generation;
                let slice = &self.nodes[children.clone()];
                if let Ok(k) = slice.binary_search_by_key(&pt, |n| n.point) {
                    let child = &mut self.nodes[children.start + k];
                    child.rave_n += 1;
                    child.rave_w += rollout::reward(winner, c);
                }
            }
        }
    }

    fn expand(&mut self, id: NodeId, pos: &Position) {
        let me = pos.to_play();
        let np = pos.num_points();
        let first = self.nodes.len() as u32;
        for i in 0..np {
            if pos.stone_at_index(i).is_none() && !pos.is_eye_index(i, me) && pos.is_legal_index(i) {
                let hash = pos.hash_after(i, me) ^ crate::board::side_key(me.opponent());
                self.nodes.push(Node::new(i as u16, me, hash));
            }
        }
        self.nodes.push(Node::new(np as u16, me, pos.board_hash() ^ crate::board::side_key(me.opponent())));
        let m = self.nodes.len() - first as usize;
        let uniform = 1.0 / m as f32;
        for c in &mut self.nodes[first as usize..] {
            c.prior = uniform;
            c.prior_n = self.params.prior_visits;
            c.prior_w = self.params.prior_visits * prior_value(uniform, m);
        }
        let node = &mut self.nodes[id as usize];
        node.first_child = first;
        node.num_children = m as u16;
        node.expanded = true;
        if let Some(q) = self.queue.as_mut() {
            node.pending = true;
            q.submit(id, extract(pos, self.params.rank), me);
        }
    }

    fn apply_ready(&mut self) {
        if let Some(q) = self.queue.as_mut() {
            let results = q.drain();
            self.apply(results);
        }
    }

    fn apply(&mut self, results: Vec<EvalResult>) {
        for r in results {
            debug_assert!(self.last_seq.is_none_or(|s| r.seq > s), "results out of order");
            self.last_seq = Some(r.seq);
            let Some(node) = self.nodes.get(r.node as usize) else { continue };
            let range = node.children();
            match r.outcome {
                Ok(probs) => {
                    let points: Vec<u16> = self.nodes[range.clone()].iter().map(|c| c.point).collect();
                    let np = self.marks.len() - 1;
                    if let Some(priors) = child_priors(&points, np, &probs) {
                        let m = priors.len();
                        for (c, p) in self.nodes[range].iter_mut().zip(priors) {
                            c.prior = p;
                            c.prior_w = c.prior_n * prior_value(p, m);
                        }
                    }
                    self.applied += 1;
                }
                Err(e) => {
                    if self.failed == 0 {
                        warn!("{e}; keeping uniform priors");
                    }
                    self.failed += 1;
                }
            }
            self.nodes[r.node as usize].pending = false;
        }
    }

    /// Flushes pending evaluations and reports the root statistics.
    pub fn finish(&mut self) -> SearchResult {
        if let Some(q) = self.queue.as_mut() {
            let results = q.flush();
            self.apply(results);
        }
        let root = self.root.as_ref().expect("begin() not called");
        let me = root.to_play();
        let size = root.size();
        let np = root.num_points();
        let r = &self.nodes[0];
        let children: Vec<ChildStats> = r
            .children()
            .map(|c| {
                let n = &self.nodes[c];
                let mv = if n.point as usize >= np { Move::pass(me) } else { Move::play(me, Point::from_index(n.point as usize, size)) };
                ChildStats { mv, visits: n.n, value: if n.n > 0 { n.w as f64 / n.n as f64 } else { 0.5 }, prior: n.prior }
            })
            .collect();
        let best = children
            .iter()
            .enumerate()
            .fold(None::<(usize, u32)>, |acc, (k, c)| match acc {
                Some((_, v)) if v >= c.visits => acc,
                _ => Some((k, c.visits)),
            })
            .map(|(k, _)| k);
        let (best, value) = match best {
            Some(k) => (children[k].mv, children[k].value),
            None => (Move::pass(me), 0.5),
        };
        let stats = self.queue.as_ref().map(|q| q.stats().clone()).unwrap_or_default();
        SearchResult {
            best,
            visits: r.n,
            value,
            children,
            evals_submitted: stats.submitted - self.start.0,
            evals_applied: self.applied - self.start.1,
            evals_failed: self.failed - self.start.2,
            batch_sizes: stats.batch_sizes[self.start.3.min(stats.batch_sizes.len())..].to_vec(),
        }
    }

    /// Checks visit conservation and reward bounds over the whole tree.
    pub fn check_invariants(&self) -> Result<(), String> {
        let hold = self.params.expansion_threshold.max(1);
        for (id, n) in self.nodes.iter().enumerate() {
            if !(n.w >= 0.0 && n.w <= n.n as f32) {
                return Err(format!("node {id}: W = {} outside [0, {}]", n.w, n.n));
            }
            if !(n.rave_w >= 0.0 && n.rave_w <= n.rave_n as f32) {
                return Err(format!("node {id}: RAVE W = {} outside [0, {}]", n.rave_w, n.rave_n));
            }
            if !n.expanded {
                continue;
            }
            let below: u32 = n.children().map(|c| self.nodes[c].n).sum();
            let expected = if id == 0 { n.n - self.root_holdback.min(n.n) } else { n.n - n.n.min(hold) };
            if below != expected {
                return Err(format!("node {id}: children hold {below} visits, expected {expected} of {}", n.n));
            }
            if n.children().any(|c| self.nodes[c].color == n.color) {
                return Err(format!("node {id}: child with the wrong color"));
            }
        }
        Ok(())
    }

    /// Evaluations submitted and applied (or failed) over the searcher's life.
    pub fn eval_counts(&self) -> (u64, u64) {
        let submitted = self.queue.as_ref().map(|q| q.stats().submitted).unwrap_or(0);
        (submitted, self.applied + self.failed)
    }

    /// The subtree for `root` from the previous search, if `root` follows
    /// from the previous root by moves that are all in the tree.
    fn promote(&self, root: &Position) -> Option<Vec<Node>> {
        let old = self.root.as_ref()?;
        let (oh, nh) = (old.hash_history(), root.hash_history());
        if nh.len() < oh.len() || nh[..oh.len()] != *oh || self.nodes.is_empty() || old.size() != root.size() {
            return None;
        }
        let np = root.num_points();
        let mut id = 0usize;
        for m in &root.history()[old.history().len()..] {
            let point = m.point().map(|p| p.index(root.size()) as u16).unwrap_or(np as u16);
            let n = &self.nodes[id];
            if !n.expanded {
                return None;
            }
            id = n.children().find(|&c| self.nodes[c].point == point)?;
        }
        if !self.nodes[id].expanded {
            return None;
        }
        let mut out = vec![self.nodes[id].clone()];
        let mut queue = std::collections::VecDeque::from([(id, 0usize)]);
        while let Some((old_id, new_id)) = queue.pop_front() {
            let range = self.nodes[old_id].children();
            if !self.nodes[old_id].expanded {
                continue;
            }
            let first = out.len();
            out[new_id].first_child = first as u32;
            for c in range {
                let mut copy = self.nodes[c].clone();
                copy.pending = false;
                out.push(copy);
                queue.push_back((c, out.len() - 1));
            }
        }
        out[0].pending = false;
        Some(out)
    }
}
