use super::model::Model;
use super::train::Prepared;
use super::{NetworkError, Scalar};

const EVAL_BATCH: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub examples: usize,
    /// `top_n[k]` is the fraction of labels ranked within the top `k + 1`.
    pub top_n: Vec<f64>,
    pub log_loss: f64,
}

impl EvalReport {
    pub fn top1(&self) -> f64 {
        self.top_n.first().copied().unwrap_or(0.0)
    }
}

/// Zero-based rank of `label` in `probs`, breaking ties by lower index.
pub fn top_n_rank<T: PartialOrd>(probs: &[T], label: usize) -> usize {
    let p = &probs[label];
    probs.iter().enumerate().filter(|&(i, q)| q > p || (q == p && i < label)).count()
}

/// Top-n accuracy for n = 1..=max_n and mean log-loss on the mover's head.
pub fn evaluate<T: Scalar>(m: &Model<T>, data: &[Prepared], max_n: usize) -> Result<EvalReport, NetworkError> {
    let max_n = max_n.max(1);
    let mut hits = vec![0usize; max_n];
    let mut loss = 0.0;
    for chunk in data.chunks(EVAL_BATCH) {
        let features: Vec<_> = chunk.iter().map(|p| p.features.clone()).collect();
        let heads = m.forward(&features)?;
        for (p, h) in chunk.iter().zip(&heads) {
            let probs = &h[p.label.mover.index()].probs;
            let rank = top_n_rank(probs, p.label.index);
            for hit in hits.iter_mut().skip(rank) {
                *hit += 1;
            }
            loss -= probs[p.label.index].as_f64().max(f64::MIN_POSITIVE).ln();
        }
    }
    let n = data.len().max(1) as f64;
    Ok(EvalReport { examples: data.len(), top_n: hits.iter().map(|&h| h as f64 / n).collect(), log_loss: loss / n })
}
