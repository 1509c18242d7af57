//! Batched, asynchronous move-prior evaluation.
//!
//! Requests are buffered until a full batch is ready, then handed to the
//! evaluator. In threaded mode a worker thread runs the evaluator while the
//! search keeps going; in synchronous mode the batch is evaluated on the spot
//! and its results wait in a queue. Either way results come back in
//! submission order.

use std::collections::VecDeque;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::Arc;
use std::thread::JoinHandle;

use thiserror::Error;

use crate::board::Color;
use crate::features::FeatureTensor;
use crate::network::Model;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("evaluator failed: {0}")]
pub struct EvaluatorFailure(pub String);

#[derive(Debug, Clone)]
pub struct EvalRequest {
    pub seq: u64,
    pub node: u32,
    pub features: FeatureTensor,
    pub to_play: Color,
}

#[derive(Debug, Clone)]
pub struct EvalResult {
    pub seq: u64,
    pub node: u32,
    /// Probabilities over board points for the side to move.
    pub outcome: Result<Vec<f32>, EvaluatorFailure>,
}

/// Produces move probabilities for a batch of positions.
pub trait Evaluator: Send {
    fn evaluate(&mut self, batch: &[EvalRequest]) -> Result<Vec<Vec<f32>>, EvaluatorFailure>;
}

/// The policy network as an evaluator: the head of the side to move.
pub struct CnnEvaluator {
    pub model: Arc<Model<f32>>,
}

impl Evaluator for CnnEvaluator {
    fn evaluate(&mut self, batch: &[EvalRequest]) -> Result<Vec<Vec<f32>>, EvaluatorFailure> {
        let features: Vec<FeatureTensor> = batch.iter().map(|r| r.features.clone()).collect();
        let heads = self.model.forward(&features).map_err(|e| EvaluatorFailure(e.to_string()))?;
        Ok(heads.into_iter().zip(batch).map(|(mut h, r)| std::mem::take(&mut h[r.to_play.index()].probs)).collect())
    }
}

impl<F> Evaluator for F
where
    F: FnMut(&[EvalRequest]) -> Result<Vec<Vec<f32>>, EvaluatorFailure> + Send,
{
    fn evaluate(&mut self, batch: &[EvalRequest]) -> Result<Vec<Vec<f32>>, EvaluatorFailure> {
        self(batch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Synchronous,
    Threaded,
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct QueueStats {
    pub submitted: u64,
    pub returned: u64,
    pub batch_sizes: Vec<usize>,
}

enum Backend {
    Sync {
        evaluator: Box<dyn Evaluator>,
        ready: VecDeque<EvalResult>,
    },
    Threaded {
        tx: Option<Sender<Vec<EvalRequest>>>,
        rx: Receiver<Vec<EvalResult>>,
        worker: Option<JoinHandle<()>>,
        /// `(seq, node)` of every batch sent and not yet answered, oldest first.
        in_flight: VecDeque<Vec<(u64, u32)>>,
    },
}

pub struct EvalQueue {
    batch_size: usize,
    buffer: Vec<EvalRequest>,
    backend: Backend,
    next_seq: u64,
    stats: QueueStats,
}

fn run_batch(evaluator: &mut dyn Evaluator, batch: &[EvalRequest]) -> Vec<EvalResult> {
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| evaluator.evaluate(batch)))
        .unwrap_or_else(|_| Err(EvaluatorFailure("evaluator panicked".into())))
        .and_then(|v| if v.len() == batch.len() { Ok(v) } else { Err(EvaluatorFailure(format!("{} results for {} requests", v.len(), batch.len()))) });
    match outcome {
        Ok(v) => batch.iter().zip(v).map(|(r, p)| EvalResult { seq: r.seq, node: r.node, outcome: Ok(p) }).collect(),
        Err(e) => batch.iter().map(|r| EvalResult { seq: r.seq, node: r.node, outcome: Err(e.clone()) }).collect(),
    }
}

fn failed(ids: &[(u64, u32)]) -> impl Iterator<Item = EvalResult> + '_ {
    ids.iter().map(|&(seq, node)| EvalResult { seq, node, outcome: Err(EvaluatorFailure("evaluator thread stopped".into())) })
}

impl EvalQueue {
    pub fn new(evaluator: Box<dyn Evaluator>, batch_size: usize, mode: EvalMode) -> EvalQueue {
        let backend = match mode {
            EvalMode::Synchronous => Backend::Sync { evaluator, ready: VecDeque::new() },
            EvalMode::Threaded => {
                let (req_tx, req_rx) = channel::<Vec<EvalRequest>>();
                let (res_tx, res_rx) = channel();
                let mut evaluator = evaluator;
                let worker = std::thread::spawn(move || {
                    while let Ok(batch) = req_rx.recv() {
                        if res_tx.send(run_batch(evaluator.as_mut(), &batch)).is_err() {
                            break;
                        }
                    }
                });
                Backend::Threaded { tx: Some(req_tx), rx: res_rx, worker: Some(worker), in_flight: VecDeque::new() }
            }
        };
        EvalQueue { batch_size: batch_size.max(1), buffer: Vec::new(), backend, next_seq: 0, stats: QueueStats::default() }
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn stats(&self) -> &QueueStats {
        &self.stats
    }

    /// Requests submitted but not yet handed back by [`EvalQueue::drain`] or [`EvalQueue::flush`].
    pub fn outstanding(&self) -> u64 {
        self.stats.submitted - self.stats.returned
    }

    pub fn submit(&mut self, node: u32, features: FeatureTensor, to_play: Color) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.stats.submitted += 1;
        self.buffer.push(EvalRequest { seq, node, features, to_play });
        if self.buffer.len() >= self.batch_size {
            self.dispatch();
        }
        seq
    }

    fn dispatch(&mut self) {
        if self.buffer.is_empty() {
            return;
        }
        let batch = std::mem::take(&mut self.buffer);
        self.stats.batch_sizes.push(batch.len());
        match &mut self.backend {
            Backend::Sync { evaluator, ready } => ready.extend(run_batch(evaluator.as_mut(), &batch)),
            Backend::Threaded { tx, in_flight, .. } => {
                in_flight.push_back(batch.iter().map(|r| (r.seq, r.node)).collect());
                if let Some(t) = tx.as_ref() {
                    if t.send(batch).is_err() {
                        tx.take();
                    }
                }
            }
        }
    }

    fn take(&mut self, block: bool) -> Vec<EvalResult> {
        let mut out = Vec::new();
        match &mut self.backend {
            Backend::Sync { ready, .. } => out.extend(ready.drain(..)),
            Backend::Threaded { tx, rx, in_flight, .. } => {
                while !in_flight.is_empty() {
                    let got = if block || tx.is_none() {
                        rx.recv().map_err(|_| true)
                    } else {
                        rx.try_recv().map_err(|e| matches!(e, std::sync::mpsc::TryRecvError::Disconnected))
                    };
                    match got {
                        Ok(batch) => {
                            in_flight.pop_front();
                            out.extend(batch);
                        }
                        Err(false) => break,
                        Err(true) => {
                            // The worker is gone: answer everything still in flight.
                            for ids in in_flight.drain(..) {
                                out.extend(failed(&ids));
                            }
                        }
                    }
                }
            }
        }
        self.stats.returned += out.len() as u64;
        out
    }

    /// Results that are ready now, oldest first. Never blocks.
    pub fn drain(&mut self) -> Vec<EvalResult> {
        self.take(false)
    }

    /// Sends any partial batch and waits for every outstanding result.
    pub fn flush(&mut self) -> Vec<EvalResult> {
        self.dispatch();
        self.take(true)
    }
}

impl Drop for EvalQueue {
    fn drop(&mut self) {
        if let Backend::Threaded { tx, worker, .. } = &mut self.backend {
            tx.take();
            if let Some(w) = worker.take() {
                let _ = w.join();
            }
        }
    }
}
