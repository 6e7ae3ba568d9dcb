use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::store::FrameLabelSeq;

/// Overlap thresholds averaged into mF1.
pub const TAS_THRESHOLDS: [f64; 3] = [0.10, 0.25, 0.50];

/// Maximal run of one label over frames `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSegment {
    pub label: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TasOptions {
    /// Label treated as background: excluded from segmental F1 and edit.
    pub background: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TasScores {
    pub mf1: f64,
    pub f1_at: BTreeMap<String, f64>,
    pub edit: f64,
    pub acc: f64,
}

pub fn segment_sequence(labels: &[usize]) -> Vec<LabelSegment> {
    let mut out: Vec<LabelSegment> = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        match out.last_mut() {
            Some(seg) if seg.label == l => seg.end = i + 1,
            _ => out.push(LabelSegment {
                label: l,
                start: i,
                end: i + 1,
            }),
        }
    }
    out
}

fn action_segments(labels: &[usize], opts: &TasOptions) -> Vec<LabelSegment> {
    segment_sequence(labels)
        .into_iter()
        .filter(|s| Some(s.label) != opts.background)
        .collect()
}

fn levenshtein(a: &[usize], b: &[usize]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `100 · (1 − lev(pred, gt) / max(|pred|, |gt|))` over segment label
/// sequences; 100 when both are empty.
pub fn edit_score(pred_segs: &[usize], gt_segs: &[usize]) -> f64 {
    let denom = pred_segs.len().max(gt_segs.len());
    if denom == 0 {
        return 100.0;
    }
    100.0 * (1.0 - levenshtein(pred_segs, gt_segs) as f64 / denom as f64)
}

pub fn tas_frame_accuracy(pred: &FrameLabelSeq, gt: &FrameLabelSeq) -> Result<f64, MetricError> {
    check_len(pred, gt)?;
    let hits = pred
        .labels
        .iter()
        .zip(&gt.labels)
        .filter(|(a, b)| a == b)
        .count();
    Ok(100.0 * hits as f64 / gt.labels.len() as f64)
}

fn check_len(pred: &FrameLabelSeq, gt: &FrameLabelSeq) -> Result<(), MetricError> {
    if pred.labels.len() != gt.labels.len() {
        return Err(MetricError::LengthMismatch(pred.labels.len(), gt.labels.len()));
    }
    Ok(())
}

fn frame_iou(a: &LabelSegment, b: &LabelSegment) -> f64 {
    let inter = a.end.min(b.end).saturating_sub(a.start.max(b.start));
    let union = (a.end - a.start) + (b.end - b.start) - inter;
    inter as f64 / union as f64
}

/// `(tp, fp, fn)` of greedy same-label segment matching at overlap `tau`.
pub(crate) fn segmental_counts(
    pred: &[usize],
    gt: &[usize],
    tau: f64,
    opts: &TasOptions,
) -> (usize, usize, usize) {
    let p_segs = action_segments(pred, opts);
    let g_segs = action_segments(gt, opts);
    let mut used = vec![false; g_segs.len()];
    let (mut tp, mut fp) = (0, 0);
    for p in &p_segs {
        let mut best: Option<(usize, f64)> = None;
        for (j, g) in g_segs.iter().enumerate() {
            if used[j] || g.label != p.label {
                continue;
            }
            let iou = frame_iou(p, g);
            if best.is_none_or(|(_, b)| iou > b) {
                best = Some((j, iou));
            }
        }
        match best {
            Some((j, iou)) if iou >= tau => {
                used[j] = true;
                tp += 1;
            }
            _ => fp += 1,
        }
    }
    let fn_ = used.iter().filter(|u| !**u).count();
    (tp, fp, fn_)
}

fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    if precision + recall == 0.0 {
        0.0
    } else {
        100.0 * 2.0 * precision * recall / (precision + recall)
    }
}

/// Segmental F1 at overlap threshold `tau` (inclusive), in percent.
pub fn segmental_f1(
    pred: &FrameLabelSeq,
    gt: &FrameLabelSeq,
    tau: f64,
    opts: &TasOptions,
) -> Result<f64, MetricError> {
    check_len(pred, gt)?;
    let (tp, fp, fn_) = segmental_counts(&pred.labels, &gt.labels, tau, opts);
    Ok(f1_from_counts(tp, fp, fn_))
}

/// Dataset-level segmentation scores over `(prediction, ground truth)`
/// pairs. F1 counts are pooled over videos, edit is the per-video mean and
/// accuracy is pooled over all frames.
pub fn tas_scores(
    pairs: &[(&FrameLabelSeq, &FrameLabelSeq)],
    opts: &TasOptions,
) -> Result<TasScores, MetricError> {
    let mut counts = [(0usize, 0usize, 0usize); 3];
    let (mut hits, mut frames) = (0usize, 0usize);
    let mut edit_sum = 0.0;
    for (pred, gt) in pairs {
        check_len(pred, gt)?;
        for (c, &tau) in counts.iter_mut().zip(&TAS_THRESHOLDS) {
            let (tp, fp, fn_) = segmental_counts(&pred.labels, &gt.labels, tau, opts);
            c.0 += tp;
            c.1 += fp;
            c.2 += fn_;
        }
        hits += pred
            .labels
            .iter()
            .zip(&gt.labels)
            .filter(|(a, b)| a == b)
            .count();
        frames += gt.labels.len();
        let p: Vec<usize> = action_segments(&pred.labels, opts).iter().map(|s| s.label).collect();
        let g: Vec<usize> = action_segments(&gt.labels, opts).iter().map(|s| s.label).collect();
        edit_sum += edit_score(&p, &g);
    }
    let f1s: Vec<f64> = counts
        .iter()
        .map(|&(tp, fp, fn_)| f1_from_counts(tp, fp, fn_))
        .collect();
    let f1_at = TAS_THRESHOLDS
        .iter()
        .zip(&f1s)
        .map(|(t, f)| (format!("{t:.2}"), *f))
        .collect();
    let n = pairs.len().max(1) as f64;
    Ok(TasScores {
        mf1: f1s.iter().sum::<f64>() / 3.0,
        f1_at,
        edit: if pairs.is_empty() { 0.0 } else { edit_sum / n },
        acc: if frames == 0 {
            0.0
        } else {
            100.0 * hits as f64 / frames as f64
        },
    })
}
