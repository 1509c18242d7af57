use log::info;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::board::Symmetry;
use crate::data::TrainingExample;
use crate::features::{extract, FeatureTensor};

use super::eval::evaluate;
use super::model::{Init, Label, Model};
use super::NetworkError;

/// Optimizer recipe. `learning_rate` applies to the mean gradient of a
/// minibatch, i.e. each example's gradient is scaled by `lr / batch_size`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Epochs at the base learning rate.
    pub epochs: usize,
    /// Further epochs, the first at half the base rate and each one halving again.
    pub finetune_epochs: usize,
    pub init: Init,
    pub seed: u64,
    pub augment: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { batch_size: 128, learning_rate: 0.128, epochs: 25, finetune_epochs: 3, init: Init::Uniform(0.05), seed: 0, augment: true }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.batch_size == 0
            || !(self.learning_rate.is_finite() && self.learning_rate > 0.0)
            || matches!(self.init, Init::Uniform(r) if !(r.is_finite() && r > 0.0))
        {
            return Err(NetworkError::BadSpec(format!("invalid training config {self:?}")));
        }
        Ok(())
    }

    /// Learning rate for a zero-based epoch.
    pub fn rate_for_epoch(&self, epoch: usize) -> f64 {
        if epoch < self.epochs {
            self.learning_rate
        } else {
            self.learning_rate * 0.5f64.powi((epoch - self.epochs + 1) as i32)
        }
    }
}

/// A training example with its features already extracted.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub features: FeatureTensor,
    pub label: Label,
}

impl Prepared {
    pub fn transform(&self, g: Symmetry) -> Prepared {
        let size = self.features.size();
        Prepared { features: self.features.transform(g), label: Label { index: g.apply_index(self.label.index, size), mover: self.label.mover } }
    }
}

/// Extracts features for each example. Examples whose snapshot does not
/// rebuild into a position are skipped.
pub fn prepare(examples: &[TrainingExample]) -> Vec<Prepared> {
    examples
        .iter()
        .filter_map(|e| {
            let p = e.snapshot.to_position().ok()?;
            Some(Prepared { features: extract(&p, e.rank), label: Label { index: e.label(), mover: e.mover() } })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub test_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
}

/// Minibatch SGD over `data` for `epochs + finetune_epochs` epochs. Each
/// epoch visits a fresh shuffle; with augmentation every example is drawn
/// under a uniformly sampled symmetry. Train metrics are the running
/// averages over the epoch's minibatches.
pub fn train(
    model: &mut Model<f32>,
    data: &[Prepared],
    test: Option<&[Prepared]>,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<Vec<EpochMetrics>, NetworkError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut metrics = Vec::new();
    let mut grad = model.zero_gradient();
    for epoch in 0..config.epochs + config.finetune_epochs {
        let lr = config.rate_for_epoch(epoch);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<Prepared> =
                chunk.iter().map(|&i| if config.augment { data[i].transform(Symmetry::new(rng.gen_range(0..8)).unwrap()) } else { data[i].clone() }).collect();
            let (features, labels): (Vec<FeatureTensor>, Vec<Label>) = batch.into_iter().map(|p| (p.features, p.label)).unzip();
            for (w, b) in grad.layers.iter_mut() {
                w.fill(0.0);
                b.fill(0.0);
            }
            let loss = model.accumulate_grad(&features, &labels, &mut grad, Some(&mut correct))?;
            loss_sum += loss as f64 * chunk.len() as f64;
            // A short trailing batch steps in proportion to its size; at the
            // full rate a handful of examples can wreck the position biases.
            model.sgd_step(&grad, lr * chunk.len() as f64 / config.batch_size as f64);
        }
        let n = data.len().max(1) as f64;
        let (test_loss, test_accuracy) = match test {
            Some(t) if !t.is_empty() => {
                let r = evaluate(model, t, 1)?;
                (Some(r.log_loss), Some(r.top1()))
            }
            _ => (None, None),
        };
        let m = EpochMetrics { epoch, learning_rate: lr, train_loss: loss_sum / n, train_accuracy: correct as f64 / n, test_loss, test_accuracy };
        info!(
            "epoch {} lr {:.5} train loss {:.4} acc {:.4}{}",
            epoch,
            lr,
            m.train_loss,
            m.train_accuracy,
            test_accuracy.map(|a| format!(" test acc {a:.4}")).unwrap_or_default()
        );
        on_epoch(&m);
        metrics.push(m);
    }
    Ok(metrics)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_recipe() {
        let c = TrainConfig::default();
        assert_eq!(c.batch_size, 128);
        assert_eq!(c.learning_rate, 0.128);
        assert_eq!(c.init, Init::Uniform(0.05));
        assert_eq!(c.rate_for_epoch(24), 0.128);
        assert_eq!(c.rate_for_epoch(25), 0.064);
        assert_eq!(c.rate_for_epoch(26), 0.032);
        assert_eq!(c.rate_for_epoch(27), 0.016);
    }

    #[test]
    fn short_batches_take_proportional_steps() {
        use crate::board::Position;
        use crate::data::Rank;
        let p = Position::new(5).unwrap();
        let example = Prepared { features: extract(&p, Rank::Dan(1)), label: Label { index: 12, mover: crate::board::Color::Black } };
        let start: Model<f32> =
            Model::init_with(crate::network::ModelSpec::policy(5, 2, 4, false), Init::Uniform(0.1), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let run = |batch_size: usize, learning_rate: f64| {
            let mut m = start.clone();
            let c = TrainConfig { batch_size, learning_rate, epochs: 1, finetune_epochs: 0, augment: false, ..TrainConfig::default() };
            train(&mut m, std::slice::from_ref(&example), None, &c, |_| {}).unwrap();
            m
        };
        let a = run(128, 0.128);
        let b = run(1, 0.001);
        for (x, y) in a.params().zip(b.params()) {
            assert!((x - y).abs() < 1e-7);
        }
    }
}
