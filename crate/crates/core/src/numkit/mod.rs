//! Dense numeric kernels shared by the probes, analyses and metrics.
//!
//! Everything here works in `f64`. Reductions run left to right over fixed
//! chunks (see [`chunked_sum`]) so results never depend on the number of
//! worker threads.

mod linalg;
mod rng;
mod schedule;

pub use linalg::{solve_spd, top_eigvecs, Matrix};
pub use rng::Rng;
pub use schedule::LrSchedule;

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("non-finite input at position {0}")]
    NonFinite(usize),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("step {step} is outside a schedule of {total} steps")]
    StepOutOfRange { step: usize, total: usize },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error(
        "matrix not positive definite after ridge {ridge:e}: pivot {pivot} = {value:e} \
         (diagonal max/min ratio {diag_ratio:e}); increase the ridge"
    )]
    NotPositiveDefinite {
        pivot: usize,
        value: f64,
        ridge: f64,
        diag_ratio: f64,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("requested {k} eigenvectors from a {d}x{d} matrix")]
    TooManyEigvecs { k: usize, d: usize },
}

/// Number of items folded into one partial sum before partials are combined.
///
/// Fixed so that the association order of every parallel reduction is a
/// function of the input length only.
pub const REDUCE_CHUNK: usize = 64;

/// Sums `f(i)` for `i in 0..n` into a vector of length `len`.
///
/// Items are grouped into chunks of [`REDUCE_CHUNK`]; each chunk is summed
/// in index order (possibly on another thread) and the chunk partials are
/// then added in chunk order.
pub fn chunked_sum<F>(n: usize, len: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let chunks: Vec<Vec<f64>> = (0..n.div_ceil(REDUCE_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; len];
            for i in c * REDUCE_CHUNK..((c + 1) * REDUCE_CHUNK).min(n) {
                f(i, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; len];
    for part in chunks {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    total
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>, NumError> {
    if let Some(i) = logits.iter().position(|v| !v.is_finite()) {
        return Err(NumError::NonFinite(i));
    }
    Ok(softmax_unchecked(logits))
}

pub(crate) fn softmax_unchecked(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    out
}

/// Cross-entropy of `softmax(logits)` against `label`, with its gradient
/// with respect to the logits (`softmax - onehot`).
pub fn ce_loss_grad(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>), NumError> {
    if label >= logits.len() {
        return Err(NumError::LabelOutOfRange {
            label,
            classes: logits.len(),
        });
    }
    if let Some(i) = logits.iter().position(|v| !v.is_finite()) {
        return Err(NumError::NonFinite(i));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    let loss = log_z - logits[label];
    let mut grad: Vec<f64> = logits.iter().map(|v| (v - log_z).exp()).collect();
    grad[label] -= 1.0;
    Ok((loss, grad))
}

/// Learning rate at `step` under `schedule`.
pub fn lr_at(schedule: &LrSchedule, step: usize) -> Result<f64, NumError> {
    schedule.lr_at(step)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Mean of `rows` row vectors of width `dim` stored contiguously.
pub fn mean_rows(data: &[f64], rows: usize, dim: usize) -> Vec<f64> {
    let mut acc = vec![0.0; dim];
    for r in data.chunks_exact(dim).take(rows) {
        for (a, v) in acc.iter_mut().zip(r) {
            *a += v;
        }
    }
    for a in &mut acc {
        *a /= rows as f64;
    }
    acc
}
