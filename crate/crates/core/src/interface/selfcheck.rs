//! Quick oracle checks runnable from the command line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::board::reference::ReferenceBoard;
use crate::board::{Move, Point, Position, Symmetry};
use crate::data::Rank;
use crate::features::extract;
use crate::network::{Init, Label, Model, ModelSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Runs every check; `scale` multiplies the amount of random testing.
pub fn run_all(scale: usize, seed: u64) -> Vec<CheckResult> {
    vec![rules(scale, seed), feature_symmetry(scale, seed), gradient(seed)]
}

fn result(name: &'static str, failure: Option<String>, ok: String) -> CheckResult {
    match failure {
        Some(detail) => CheckResult { name, passed: false, detail },
        None => CheckResult { name, passed: true, detail: ok },
    }
}

/// A position after `len` uniformly random legal moves.
pub fn random_position<R: Rng + ?Sized>(size: usize, len: usize, rng: &mut R) -> Position {
    let mut p = Position::new(size).expect("supported board size");
    for _ in 0..len {
        let legal = p.legal_points();
        let m = if legal.is_empty() || rng.gen_bool(0.03) { Move::pass(p.to_play()) } else { Move::play(p.to_play(), legal[rng.gen_range(0..legal.len())]) };
        p.play_mut(m).expect("legal");
    }
    p
}

/// Incremental rules against the flood-fill reference on random games.
pub fn rules(scale: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut steps = 0;
    let check = |rng: &mut ChaCha8Rng, steps: &mut usize| -> Option<String> {
        for size in [5, 9] {
            let mut p = Position::new(size).unwrap();
            let mut r = ReferenceBoard::new(size);
            for _ in 0..3 * size * size {
                for i in 0..size * size {
                    let pt = Point::from_index(i, size);
                    if p.is_legal_point(pt) != r.try_play(i).is_ok() {
                        return Some(format!("legality of {pt:?} differs after {} moves", p.history().len()));
                    }
                }
                let legal: Vec<usize> = (0..size * size).filter(|&i| r.try_play(i).is_ok()).collect();
                if legal.is_empty() || rng.gen_bool(0.02) {
                    p.play_mut(Move::pass(p.to_play())).unwrap();
                    r.pass();
                } else {
                    let i = legal[rng.gen_range(0..legal.len())];
                    p.play_mut(Move::play(p.to_play(), Point::from_index(i, size))).unwrap();
                    r.play(i).unwrap();
                }
                *steps += 1;
                if p.grid() != r.grid {
                    return Some(format!("boards differ after {} moves", p.history().len()));
                }
                let area = p.score(0.0);
                if (area.black_area, area.white_area) != r.area() {
                    return Some("area counts differ".into());
                }
            }
        }
        None
    };
    let mut failure = None;
    for _ in 0..scale.max(1) {
        failure = check(&mut rng, &mut steps);
        if failure.is_some() {
            break;
        }
    }
    result("rules", failure, format!("{steps} steps agree"))
}

/// Features of a transformed position equal the transformed features.
pub fn feature_symmetry(scale: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = 10 * scale.max(1);
    for k in 0..n {
        let len = rng.gen_range(0..60);
        let p = random_position(9, len, &mut rng);
        let f = extract(&p, Rank::Dan(5));
        for g in Symmetry::all() {
            if extract(&p.transform(g), Rank::Dan(5)) != f.transform(g) {
                return result("features", Some(format!("position {k}, symmetry {}", g.index())), String::new());
            }
        }
    }
    result("features", None, format!("{n} positions x 8 symmetries"))
}

/// Analytic gradient of a tiny double-precision net against central differences.
pub fn gradient(seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = ModelSpec::policy(5, 3, 3, false);
    let mut m: Model<f64> = Model::init_with(spec, Init::Uniform(0.3), &mut rng).unwrap();
    // Nonzero biases so every parameter class is exercised.
    for l in &mut m.layers {
        l.bias.iter_mut().for_each(|b| *b = rng.gen_range(-0.1..0.1));
    }
    let batch: Vec<_> = (0..3).map(|_| extract(&random_position(5, 8, &mut rng), Rank::Dan(3))).collect();
    let labels: Vec<Label> = (0..3)
        .map(|k| Label { index: rng.gen_range(0..25), mover: if k % 2 == 0 { crate::board::Color::Black } else { crate::board::Color::White } })
        .collect();
    let (_, grad) = m.loss_and_grad(&batch, &labels).unwrap();
    let analytic: Vec<f64> = grad.layers.iter().flat_map(|(w, b)| w.iter().chain(b).copied()).collect();
    let eps = 1e-5;
    let mut worst = 0.0f64;
    let count = analytic.len();
    for (k, &analytic) in analytic.iter().enumerate() {
        let base = *m.params().nth(k).unwrap();
        *m.params_mut().nth(k).unwrap() = base + eps;
        let up = m.loss_and_grad(&batch, &labels).unwrap().0;
        *m.params_mut().nth(k).unwrap() = base - eps;
        let down = m.loss_and_grad(&batch, &labels).unwrap().0;
        *m.params_mut().nth(k).unwrap() = base;
        let numeric = (up - down) / (2.0 * eps);
        let rel = (numeric - analytic).abs() / (numeric.abs() + analytic.abs()).max(1e-7);
        worst = worst.max(rel);
    }
    let failure = (worst >= 1e-4).then(|| format!("max relative error {worst:.2e}"));
    result("gradient", failure, format!("{count} parameters, max relative error {worst:.2e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for r in run_all(1, 3) {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
