//! Scalar evaluation metrics: top-k accuracy, temporal detection mAP and
//! temporal segmentation scores.

mod tal;
mod tas;

pub use tal::{
    detection_ap, detection_map_sweep, segment_iou, DetectionAp, MapSweep, PrPoint,
};
pub use tas::{
    edit_score, segment_sequence, segmental_f1, tas_frame_accuracy, tas_scores, LabelSegment,
    TasOptions, TasScores, TAS_THRESHOLDS,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("k must be >= 1")]
    InvalidK,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("prediction {index} of video '{video}' has no score")]
    MissingScore { video: String, index: usize },
}

/// Percentage of samples whose label is among the `k` most probable
/// classes. Equal probabilities rank the smaller class index first.
pub fn topk_accuracy(probs: &[Vec<f64>], labels: &[usize], k: usize) -> Result<f64, MetricError> {
    if k < 1 {
        return Err(MetricError::InvalidK);
    }
    if probs.len() != labels.len() {
        return Err(MetricError::LengthMismatch(probs.len(), labels.len()));
    }
    if probs.is_empty() {
        return Ok(0.0);
    }
    let hits = probs
        .iter()
        .zip(labels)
        .filter(|(p, &y)| in_topk(p, y, k))
        .count();
    Ok(100.0 * hits as f64 / probs.len() as f64)
}

/// Whether class `label` ranks within the top `k` of `p`.
pub fn in_topk(p: &[f64], label: usize, k: usize) -> bool {
    let Some(&py) = p.get(label) else {
        return false;
    };
    let ahead = p
        .iter()
        .enumerate()
        .filter(|&(j, &pj)| pj > py || (pj == py && j < label))
        .count();
    ahead < k
}

/// Index of the largest entry, smallest index on ties.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = j;
        }
    }
    best
}
