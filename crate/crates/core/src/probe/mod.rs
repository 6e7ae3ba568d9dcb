//! Linear and attentive probes trained on frozen embeddings.
//!
//! Training draws one clip per video per epoch, so multi-clip records act
//! as temporal augmentation. Evaluation averages the softmax over every
//! stored clip (the exporter's spatial × temporal views).

mod attentive;
mod io;
mod linear;
mod train;

pub use attentive::{AttentiveForward, AttentiveHead};
pub use io::{load_head, save_head, HeadFile};
pub use linear::LinearHead;
pub use train::{train_attentive_probe, train_linear_probe, TrainTrace};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{argmax, in_topk};
use crate::numkit::{softmax, NumError};
use crate::store::EmbeddingSet;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("invalid probe configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("embedding set: {0}")]
    Data(String),
    #[error(transparent)]
    Numeric(#[from] NumError),
    #[error("training diverged at step {step} (loss {loss}); lower the learning rate")]
    Diverged { step: usize, loss: f64 },
    #[error("head file {path}: {msg}")]
    HeadFile { path: String, msg: String },
}

/// A trained classifier over a fixed-length view vector.
pub trait Head {
    fn num_classes(&self) -> usize;
    fn logits(&self, view: &[f64]) -> Result<Vec<f64>, ProbeError>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    /// Heavy-ball SGD; weight decay is an L2 term added to the gradient.
    Sgd { momentum: f64 },
    /// Adam with decoupled weight decay.
    AdamW { beta1: f64, beta2: f64, eps: f64 },
}

/// Hyperparameters of one probe run. Schedules advance per optimizer step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub warmup_epochs: usize,
    pub lr: f64,
    pub final_lr: f64,
    pub weight_decay: f64,
    pub optimizer: Optimizer,
    /// Attention heads; ignored by the linear probe.
    pub heads: usize,
    /// Standard deviation of the attentive probe's weight init.
    pub init_std: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn linear_default() -> Self {
        Self {
            epochs: 20,
            batch_size: 256,
            warmup_epochs: 0,
            lr: 0.1,
            final_lr: 0.0,
            weight_decay: 0.0,
            optimizer: Optimizer::Sgd { momentum: 0.9 },
            heads: 1,
            init_std: 0.02,
            seed: 0,
        }
    }

    pub fn attentive_default() -> Self {
        Self {
            epochs: 20,
            batch_size: 64,
            warmup_epochs: 0,
            lr: 1e-3,
            final_lr: 0.0,
            weight_decay: 1e-5,
            optimizer: Optimizer::AdamW {
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
            },
            heads: 1,
            init_std: 0.02,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ProbeError> {
        let bad = |m: &str| Err(ProbeError::Config(m.into()));
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if self.warmup_epochs > self.epochs {
            return bad("warmup_epochs exceeds epochs");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if !(self.final_lr >= 0.0 && self.final_lr <= self.lr) {
            return bad("final_lr must lie in [0, lr]");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight_decay must be >= 0");
        }
        if self.heads == 0 {
            return bad("heads must be >= 1");
        }
        match self.optimizer {
            Optimizer::Sgd { momentum } if !(0.0..1.0).contains(&momentum) => {
                bad("momentum must lie in [0, 1)")
            }
            Optimizer::AdamW { beta1, beta2, eps }
                if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || !(eps > 0.0) =>
            {
                bad("AdamW betas must lie in [0, 1) and eps > 0")
            }
            _ => Ok(()),
        }
    }
}

/// Either trained head, with the view layout it expects.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProbeHead {
    Linear(LinearHead),
    Attentive(AttentiveHead),
}

impl ProbeHead {
    pub fn dim(&self) -> usize {
        match self {
            Self::Linear(h) => h.dim,
            Self::Attentive(h) => h.dim,
        }
    }

    /// Views of record `i`: pooled clip vectors for the linear head, clip
    /// token matrices for the attentive head.
    pub fn record_views(&self, set: &EmbeddingSet, i: usize) -> Vec<Vec<f64>> {
        let clips = set.records[i].clips;
        match self {
            Self::Linear(_) => set
                .clip_vectors(i)
                .chunks(set.dim)
                .map(<[f64]>::to_vec)
                .collect(),
            Self::Attentive(_) => (0..clips).map(|c| set.clip_tokens(i, c)).collect(),
        }
    }
}

impl Head for ProbeHead {
    fn num_classes(&self) -> usize {
        match self {
            Self::Linear(h) => h.classes,
            Self::Attentive(h) => h.classes,
        }
    }

    fn logits(&self, view: &[f64]) -> Result<Vec<f64>, ProbeError> {
        match self {
            Self::Linear(h) => h.logits(view),
            Self::Attentive(h) => h.logits(view),
        }
    }
}

/// Mean of the per-view softmax distributions.
pub fn infer_multiview<H: Head + ?Sized>(head: &H, views: &[Vec<f64>]) -> Result<Vec<f64>, ProbeError> {
    if views.is_empty() {
        return Err(ProbeError::Data("record has no views".into()));
    }
    let mut acc = vec![0.0; head.num_classes()];
    for v in views {
        for (a, p) in acc.iter_mut().zip(softmax(&head.logits(v)?)?) {
            *a += p;
        }
    }
    let n = views.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeEval {
    pub n: usize,
    pub top1: f64,
    pub top5: f64,
    /// Top-1 per class; `None` for classes absent from the evaluation set.
    pub per_class_top1: Vec<Option<f64>>,
    pub predictions: Vec<usize>,
}

pub fn evaluate_probe(head: &ProbeHead, eval: &EmbeddingSet) -> Result<ProbeEval, ProbeError> {
    use rayon::prelude::*;

    check_compatible(head.dim(), head.num_classes(), eval)?;
    let labels = eval
        .labels()
        .ok_or_else(|| ProbeError::Data("evaluation set has unlabeled records".into()))?;
    let probs = (0..eval.len())
        .into_par_iter()
        .map(|i| infer_multiview(head, &head.record_views(eval, i)))
        .collect::<Result<Vec<_>, _>>()?;
    let c = head.num_classes();
    let mut hits = vec![0usize; c];
    let mut totals = vec![0usize; c];
    let (mut top1, mut top5) = (0usize, 0usize);
    let mut predictions = Vec::with_capacity(probs.len());
    for (p, &y) in probs.iter().zip(&labels) {
        let pred = argmax(p);
        predictions.push(pred);
        totals[y] += 1;
        if pred == y {
            top1 += 1;
            hits[y] += 1;
        }
        if in_topk(p, y, 5) {
            top5 += 1;
        }
    }
    let n = labels.len();
    let pct = |k: usize| if n == 0 { 0.0 } else { 100.0 * k as f64 / n as f64 };
    Ok(ProbeEval {
        n,
        top1: pct(top1),
        top5: pct(top5),
        per_class_top1: hits
            .iter()
            .zip(&totals)
            .map(|(&h, &t)| (t > 0).then(|| 100.0 * h as f64 / t as f64))
            .collect(),
        predictions,
    })
}

pub(crate) fn check_compatible(dim: usize, classes: usize, set: &EmbeddingSet) -> Result<(), ProbeError> {
    if set.dim != dim {
        return Err(ProbeError::DimMismatch {
            expected: dim,
            got: set.dim,
        });
    }
    if set.num_classes() != classes {
        return Err(ProbeError::Data(format!(
            "set has {} classes, head has {classes}",
            set.num_classes()
        )));
    }
    Ok(())
}
