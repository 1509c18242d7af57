//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test --release --test acceptance` runs everything (about an hour
//! on one core, most of it criteria 7 and 11). Pass criterion numbers to run
//! a subset: `cargo test --release --test acceptance -- 2 9 13`. Failures are
//! reported, not fatal, unless `TENGEN_ACCEPTANCE_STRICT` is set.

mod common {
    pub mod boards;
    pub mod ladder_oracle;
    pub mod twin;
}

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::boards::parse;
use common::ladder_oracle::{cases, oracle};
use common::twin::{hashed_policy, Twin};
use tengen::board::reference::ReferenceBoard;
use tengen::board::{Color, Move, Point, Position, Symmetry};
use tengen::data::synth::{generate_game, random_rank, SynthConfig};
use tengen::data::{game_to_examples, split_by_game, Rank};
use tengen::features::{extract, is_ladder_capture, FeatureTensor};
use tengen::interface::selfcheck::random_position;
use tengen::interface::{run_match, GtpSession, MatchConfig, MctsEngine, PolicyEngine, RandomEngine};
use tengen::network::{evaluate, predict_move, prepare, train, Init, Label, Model, ModelSpec, Prepared, TrainConfig};
use tengen::search::{EvalMode, EvalRequest, EvaluatorFailure, PatternTable, SearchParams, Searcher, DEFAULT_PATTERNS};

/// Games in the depth-trend corpus; about 72 examples each.
const TREND_GAMES: usize = 760;
const TREND_FILTERS: usize = 16;
const TREND_EPOCHS: usize = 12;
const TREND_LR: f64 = 0.05;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict { passed, detail: detail.into() }
}

/// Corpus and models shared between criteria, built on first use.
#[derive(Default)]
struct Shared {
    corpus: Option<(Vec<Prepared>, Vec<Prepared>)>,
    toy_model: Option<Arc<Model>>,
}

fn synthetic_corpus(games: usize, seed: u64) -> (Vec<Prepared>, Vec<Prepared>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = SynthConfig::new(9);
    let all: Vec<_> = (0..games)
        .map(|id| {
            let (b, w) = (random_rank(&mut rng), random_rank(&mut rng));
            let g = generate_game(&cfg, b, w, &mut rng);
            game_to_examples(&g, id as u32).expect("synthetic games replay").examples
        })
        .collect();
    let (train_set, test_set) = split_by_game(all, 0.1, 3);
    (prepare(&train_set.examples), prepare(&test_set.examples))
}

impl Shared {
    fn corpus(&mut self) -> &(Vec<Prepared>, Vec<Prepared>) {
        self.corpus.get_or_insert_with(|| synthetic_corpus(TREND_GAMES, 1))
    }

    fn train_trend(&mut self, depth: usize, seed: u64, symmetric: bool) -> (Model, f64) {
        let (tr, te) = self.corpus().clone();
        let spec = ModelSpec::policy(9, depth, TREND_FILTERS, symmetric);
        let mut m: Model = Model::init_with(spec, Init::FanIn, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let config = TrainConfig { epochs: TREND_EPOCHS, finetune_epochs: 1, learning_rate: TREND_LR, seed, init: Init::FanIn, ..TrainConfig::default() };
        train(&mut m, &tr, None, &config, |_| {}).unwrap();
        let acc = evaluate(&m, &te, 1).unwrap().top1();
        (m, acc)
    }

    /// The 3-layer seed-0 net from the depth trend, trained here if that
    /// criterion was not run.
    fn toy_model(&mut self) -> Arc<Model> {
        if self.toy_model.is_none() {
            let (m, _) = self.train_trend(3, 0, false);
            self.toy_model = Some(Arc::new(m));
        }
        self.toy_model.clone().unwrap()
    }
}

fn rules_oracle(_: &mut Shared) -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut steps = 0;
    for (size, quota, len) in [(5, 4000, 100), (9, 8000, 250)] {
        let target = steps + quota;
        while steps < target {
            let mut p = Position::new(size).unwrap();
            let mut r = ReferenceBoard::new(size);
            for _ in 0..len {
                let legal: Vec<usize> = (0..size * size).filter(|&i| r.try_play(i).is_ok()).collect();
                if (0..size * size).any(|i| p.is_legal_point(Point::from_index(i, size)) != legal.contains(&i)) {
                    return verdict(false, format!("legality differs after {steps} steps"));
                }
                if legal.is_empty() || rng.gen_bool(0.03) {
                    p.play_mut(Move::pass(p.to_play())).unwrap();
                    r.pass();
                } else {
                    let i = legal[rng.gen_range(0..legal.len())];
                    p.play_mut(Move::play(p.to_play(), Point::from_index(i, size))).unwrap();
                    r.play(i).unwrap();
                }
                steps += 1;
                if p.grid() != r.grid || [Color::Black, Color::White].iter().any(|&c| p.captures(c) != r.captured_by[c.index()]) {
                    return verdict(false, format!("board or captures differ after {steps} steps"));
                }
                for i in (0..size * size).filter(|&i| r.grid[i].is_some()) {
                    if p.liberties(Point::from_index(i, size)) != ReferenceBoard::group(&r.grid, size, i).1.len() {
                        return verdict(false, format!("liberties differ after {steps} steps"));
                    }
                }
                let s = p.score(7.5);
                if (s.black_area, s.white_area) != r.area() {
                    return verdict(false, format!("scores differ after {steps} steps"));
                }
                if p.consecutive_passes() >= 2 {
                    break;
                }
            }
        }
    }
    let t = start.elapsed();
    verdict(steps >= 10_000 && t < Duration::from_secs(60), format!("{steps} steps agree on legality, captures, liberties and area in {t:.1?}"))
}

fn ladder_reader(_: &mut Shared) -> Verdict {
    let start = Instant::now();
    let all = cases();
    let mut wrong = Vec::new();
    for case in &all {
        let at = Point::new(case.at.0, case.at.1);
        let p = parse(&case.rows, Color::Black);
        let got = p.is_legal_point(at) && is_ladder_capture(&p, at).unwrap();
        let expected = oracle(&case.rows, at);
        if got != expected || expected != case.expected {
            wrong.push(case.name);
        }
    }
    let t = start.elapsed();
    let detail = format!("{} positions, {} misclassified {wrong:?}, {t:.1?}", all.len(), wrong.len());
    verdict(all.len() >= 20 && wrong.is_empty() && t < Duration::from_secs(10), detail)
}

fn feature_equivariance(_: &mut Shared) -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..1000 {
        let size = [7, 9, 13][k % 3];
        let p = random_position(size, rng.gen_range(0..2 * size * size), &mut rng);
        let f = extract(&p, Rank::Dan(6));
        for g in Symmetry::all() {
            if extract(&p.transform(g), Rank::Dan(6)) != f.transform(g) {
                return verdict(false, format!("position {k} differs under symmetry {}", g.index()));
            }
        }
    }
    let t = start.elapsed();
    verdict(t < Duration::from_secs(60), format!("1000 positions x 8 symmetries equal in {t:.1?}"))
}

fn gradient_check(_: &mut Shared) -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut m: Model<f64> = Model::init_with(ModelSpec::policy(5, 3, 3, false), Init::Uniform(0.3), &mut rng).unwrap();
    for l in &mut m.layers {
        l.bias.iter_mut().for_each(|b| *b = rng.gen_range(-0.2..0.2));
    }
    let (x, y): (Vec<FeatureTensor>, Vec<Label>) = (0..4)
        .map(|k| {
            let p = random_position(5, rng.gen_range(0..20), &mut rng);
            (extract(&p, Rank::Dan(3)), Label { index: rng.gen_range(0..25), mover: if k % 2 == 0 { Color::Black } else { Color::White } })
        })
        .unzip();
    let (_, grad) = m.loss_and_grad(&x, &y).unwrap();
    let eps = 1e-6;
    let last = m.layers.len() - 1;
    // conv weights, position biases, output layer (both heads)
    let mut worst = [0.0f64; 3];
    let mut k = 0;
    for (li, (gw, gb)) in grad.layers.iter().enumerate() {
        for (is_bias, g) in [(false, gw), (true, gb)] {
            for &analytic in g {
                let mut up = m.clone();
                *up.params_mut().nth(k).unwrap() += eps;
                let mut down = m.clone();
                *down.params_mut().nth(k).unwrap() -= eps;
                let numeric = (up.loss_and_grad(&x, &y).unwrap().0 - down.loss_and_grad(&x, &y).unwrap().0) / (2.0 * eps);
                let rel = (numeric - analytic).abs() / (numeric.abs() + analytic.abs()).max(1e-8);
                let class = if li == last {
                    2
                } else if is_bias {
                    1
                } else {
                    0
                };
                worst[class] = worst[class].max(rel);
                k += 1;
            }
        }
    }
    let t = start.elapsed();
    let max = worst.iter().cloned().fold(0.0, f64::max);
    let detail = format!("{k} parameters; max relative error weights {:.1e}, biases {:.1e}, heads {:.1e}; {t:.1?}", worst[0], worst[1], worst[2]);
    verdict(max < 1e-4 && t < Duration::from_secs(60), detail)
}

fn symmetric_equivariance(_: &mut Shared) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m: Model = Model::init_with(ModelSpec::policy(9, 3, 8, true), Init::Uniform(0.2), &mut rng).unwrap();
    let mut worst = 0.0f32;
    let mut ties = 0;
    for k in 0..100 {
        let p = random_position(9, rng.gen_range(0..60), &mut rng);
        let base = predict_move(&m, &p, Rank::Dan(9)).unwrap();
        let top = base.distribution.probs.iter().cloned().fold(0.0f32, f32::max);
        let tied = base.distribution.probs.iter().filter(|&&v| top - v <= 1e-6).count() > 1;
        ties += tied as usize;
        for g in Symmetry::all() {
            let q = predict_move(&m, &p.transform(g), Rank::Dan(9)).unwrap();
            for i in 0..81 {
                worst = worst.max((q.distribution.probs[g.apply_index(i, 9)] - base.distribution.probs[i]).abs());
            }
            let moved = q.best.point() != base.best.point().map(|pt| g.apply(pt, 9));
            // Exactly tied maxima break toward the lowest index, which is not
            // symmetric; there any maximizer is accepted.
            let pre = g.inverse().apply(q.best.point().unwrap(), 9).index(9);
            if moved && (!tied || top - base.distribution.probs[pre] > 1e-6) {
                return verdict(false, format!("argmax moves on position {k} under symmetry {}", g.index()));
            }
        }
    }
    verdict(worst < 1e-5, format!("100 positions, max probability deviation {worst:.1e}, {ties} with exactly tied maxima"))
}

fn memorization(_: &mut Shared) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut data: Vec<Prepared> = Vec::new();
    while data.len() < 128 {
        let p = random_position(9, rng.gen_range(0..81), &mut rng);
        let features = extract(&p, Rank::Dan(rng.gen_range(1..=9)));
        // identical inputs with different labels cannot be memorized
        if data.iter().any(|d| d.features == features) {
            continue;
        }
        let mover = if data.len().is_multiple_of(2) { Color::Black } else { Color::White };
        data.push(Prepared { features, label: Label { index: rng.gen_range(0..81), mover } });
    }
    let mut m: Model = Model::init_with(ModelSpec::policy(9, 3, 16, false), Init::FanIn, &mut rng).unwrap();
    let config = TrainConfig { batch_size: 128, learning_rate: 0.5, epochs: 1, finetune_epochs: 0, augment: false, seed: 1, init: Init::FanIn };
    let mut epochs = 0;
    let mut acc = 0.0;
    while epochs < 500 && acc < 1.0 {
        train(&mut m, &data, None, &config, |_| {}).unwrap();
        epochs += 1;
        acc = evaluate(&m, &data, 1).unwrap().top1();
    }
    let uniform: Model = Model::zeros(ModelSpec::policy(19, 3, 16, false)).unwrap();
    let p = Position::new(19).unwrap();
    let (loss, _) = uniform.loss_and_grad(&[extract(&p, Rank::Dan(1))], &[Label { index: 100, mover: Color::Black }]).unwrap();
    let ln = 361f64.ln();
    let detail = format!("top-1 {:.0}% after {epochs} epochs; uniform loss {loss:.5} vs ln 361 = {ln:.5}", 100.0 * acc);
    verdict(acc == 1.0 && (loss as f64 - ln).abs() < 1e-3, detail)
}

fn depth_trend(shared: &mut Shared) -> Verdict {
    let examples = {
        let (tr, te) = shared.corpus();
        tr.len() + te.len()
    };
    let mut lines = Vec::new();
    let mut ordered = 0;
    for seed in 0..2 {
        let accs: Vec<f64> = [1, 3, 6]
            .iter()
            .map(|&d| {
                let (m, acc) = shared.train_trend(d, seed, false);
                if d == 3 && seed == 0 {
                    shared.toy_model = Some(Arc::new(m));
                }
                acc
            })
            .collect();
        ordered += (accs[0] < accs[1] && accs[1] < accs[2]) as usize;
        lines.push(format!("seed {seed}: {:.2}% < {:.2}% < {:.2}%", 100.0 * accs[0], 100.0 * accs[1], 100.0 * accs[2]));
    }
    verdict(examples >= 50_000 && ordered == 2, format!("{examples} examples; test top-1 for 1/3/6 layers, {}", lines.join("; ")))
}

fn weight_symmetry(_: &mut Shared) -> Verdict {
    let (tr, te) = synthetic_corpus(200, 8);
    let acc = |symmetric: bool| {
        let mut m: Model = Model::init_with(ModelSpec::policy(9, 3, 16, symmetric), Init::FanIn, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let config = TrainConfig { epochs: 6, finetune_epochs: 1, learning_rate: TREND_LR, init: Init::FanIn, ..TrainConfig::default() };
        train(&mut m, &tr, None, &config, |_| {}).unwrap();
        evaluate(&m, &te, 1).unwrap().top1()
    };
    let (sym, plain) = (acc(true), acc(false));
    let detail = format!("{} train examples; symmetric {:.2}% vs unsymmetric {:.2}%", tr.len(), 100.0 * sym, 100.0 * plain);
    verdict(sym >= plain - 0.005, detail)
}

fn hashed_evaluator(batch: &[EvalRequest]) -> Result<Vec<Vec<f32>>, EvaluatorFailure> {
    Ok(batch.iter().map(|r| hashed_policy(&r.features)).collect())
}

fn mcts_sanity(_: &mut Shared) -> Verdict {
    // White's three stones in the middle column have one liberty, at the top.
    let mut stones = Vec::new();
    for row in 1..4 {
        stones.push((Point::new(2, row), Color::White));
        stones.push((Point::new(1, row), Color::Black));
        stones.push((Point::new(3, row), Color::Black));
    }
    stones.push((Point::new(2, 4), Color::Black));
    let puzzle = Position::from_stones(5, stones, Color::Black, [None; 5]).unwrap();
    let answer = Move::play(Color::Black, Point::new(2, 0));
    let patterns = Arc::new(PatternTable::parse(DEFAULT_PATTERNS).unwrap());
    let solved = (0..100)
        .filter(|&seed| {
            let mut s = Searcher::new(SearchParams { rollouts: 5000, seed, ..SearchParams::default() }, patterns.clone(), None);
            s.search(&puzzle).best == answer
        })
        .count();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checks = 0;
    for (k, threshold) in [0, 0, 2, 5].into_iter().enumerate() {
        let pos = random_position(9, 5 + 10 * k, &mut rng);
        let params = SearchParams {
            rollouts: 1000,
            seed: k as u64,
            expansion_threshold: threshold,
            batch_size: 16,
            eval_mode: EvalMode::Threaded,
            ..SearchParams::default()
        };
        let mut s = Searcher::new(params, patterns.clone(), Some(Box::new(hashed_evaluator)));
        s.begin(&pos);
        for _ in 0..1000 {
            s.simulate();
            if let Err(e) = s.check_invariants() {
                return verdict(false, format!("invariant broken: {e}"));
            }
            checks += 1;
        }
        s.finish();
        if let Err(e) = s.check_invariants() {
            return verdict(false, format!("invariant broken after flush: {e}"));
        }
    }
    verdict(solved >= 99, format!("capture found in {solved}/100 runs; conservation and reward bounds held over {checks} instrumented simulations"))
}

fn async_contract(_: &mut Shared) -> Verdict {
    let patterns = Arc::new(PatternTable::default());
    let params = SearchParams { rollouts: 100_000, batch_size: 128, eval_mode: EvalMode::Threaded, ..SearchParams::default() };
    let mut s = Searcher::new(params, patterns.clone(), Some(Box::new(hashed_evaluator)));
    let r = s.search(&Position::new(9).unwrap());
    let drops_ok = r.evals_submitted == r.evals_applied && r.evals_failed == 0;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut identical = 0;
    let configs = [(5, 0, 1), (5, 2, 4), (9, 0, 16), (9, 3, 128), (7, 1, 7)];
    for (k, (size, threshold, batch)) in configs.into_iter().enumerate() {
        let pos = random_position(size, 4 + 2 * k, &mut rng);
        let params = SearchParams {
            rollouts: 500,
            seed: k as u64,
            batch_size: batch,
            expansion_threshold: threshold,
            eval_mode: EvalMode::Synchronous,
            ..SearchParams::default()
        };
        let mut s = Searcher::new(params.clone(), patterns.clone(), Some(Box::new(hashed_evaluator)));
        let mut twin = Twin::new(params.clone(), PatternTable::default(), Some(hashed_policy), &pos);
        s.begin(&pos);
        for _ in 0..params.rollouts {
            s.simulate();
            twin.simulate();
        }
        let got = s.finish();
        twin.finish();
        let priors: Vec<f32> = got.children.iter().map(|c| c.prior).collect();
        let twin_priors: Vec<f32> = twin.root.children.iter().map(|c| c.prior).collect();
        identical += (got.visit_vector() == twin.root_visits() && priors == twin_priors && got.evals_applied as usize == twin.applied) as usize;
    }
    let detail = format!(
        "{} simulations: {} submitted, {} applied, {} failed; synchronous run identical to the serial twin in {identical}/{} configurations",
        r.visits,
        r.evals_submitted,
        r.evals_applied,
        r.evals_failed,
        configs.len()
    );
    verdict(drops_ok && r.visits == 100_000 && identical == configs.len(), detail)
}

fn priors_help(shared: &mut Shared) -> Verdict {
    let model = shared.toy_model();
    let start = Instant::now();
    let patterns = Arc::new(PatternTable::parse(DEFAULT_PATTERNS).unwrap());
    let params = SearchParams { rollouts: 1000, expansion_threshold: 2, eval_mode: EvalMode::Synchronous, batch_size: 16, ..SearchParams::default() };
    let mut with = MctsEngine::new(params.clone(), patterns.clone(), Some(model), Some(0.05));
    let mut without = MctsEngine::new(params, patterns, None, Some(0.05));
    let mut config = MatchConfig::new(200, 9);
    config.max_moves = 200;
    let r = run_match(&mut with, &mut without, &config).unwrap();
    let t = start.elapsed();
    let detail = format!(
        "MCTS+CNN won {:.1}% ± {:.1} of {} counted games ({} duplicates) in {:.1} min",
        100.0 * r.win_rate(),
        r.stderr(),
        r.counted(),
        r.duplicates,
        t.as_secs_f64() / 60.0
    );
    verdict(r.win_rate() >= 0.6 && t < Duration::from_secs(30 * 60), detail)
}

fn policy_beats_random(shared: &mut Shared) -> Verdict {
    let mut policy = PolicyEngine { model: shared.toy_model(), rank: Rank::Dan(9) };
    let mut random = RandomEngine::new(0);
    let r = run_match(&mut policy, &mut random, &MatchConfig::new(100, 9)).unwrap();
    verdict(r.win_rate() >= 0.95, format!("raw policy won {:.0}% of {} counted games ({} duplicates)", 100.0 * r.win_rate(), r.counted(), r.duplicates))
}

fn gtp_conformance(_: &mut Shared) -> Verdict {
    let input = include_str!("data/gtp_session.in");
    let golden = include_str!("data/gtp_session.out");
    let mut s = GtpSession::new(Box::new(RandomEngine::new(0)), 19, 7.5, 42);
    let mut out = Vec::new();
    s.run(input.as_bytes(), &mut out).unwrap();
    let commands = input.lines().filter(|l| l.starts_with(|c: char| c.is_ascii_digit())).count();
    let same = out == golden.as_bytes();
    verdict(same && commands >= 40, format!("{commands} commands, replies {}", if same { "byte-identical" } else { "differ" }))
}

type Criterion = fn(&mut Shared) -> Verdict;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let picked: Vec<usize> = args.iter().filter_map(|a| a.parse().ok()).collect();
    if !args.is_empty() && picked.is_empty() {
        // A name filter meant for the unit-test harnesses.
        return;
    }
    let criteria: [(&str, Criterion); 13] = [
        ("rules oracle equivalence", rules_oracle),
        ("ladder reader", ladder_reader),
        ("feature equivariance", feature_equivariance),
        ("gradient check", gradient_check),
        ("symmetric-model equivariance", symmetric_equivariance),
        ("memorization", memorization),
        ("depth trend", depth_trend),
        ("weight symmetry", weight_symmetry),
        ("MCTS sanity", mcts_sanity),
        ("async contract", async_contract),
        ("priors help", priors_help),
        ("raw policy beats random", policy_beats_random),
        ("GTP conformance", gtp_conformance),
    ];
    let mut shared = Shared::default();
    let mut failed = 0;
    let mut ran = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let n = k + 1;
        if !picked.is_empty() && !picked.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let v = run(&mut shared);
        ran += 1;
        failed += !v.passed as usize;
        println!("{} {n:2}. {name}: {} [{:.1}s]", if v.passed { "PASS" } else { "FAIL" }, v.detail, start.elapsed().as_secs_f64());
    }
    println!("{} of {ran} criteria passed", ran - failed);
    if failed > 0 && std::env::var_os("TENGEN_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
