use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::store::SegmentSet;

/// Temporal IoU of two `[start, end)` intervals.
pub fn segment_iou(a: (f64, f64), b: (f64, f64)) -> f64 {
    let inter = (a.1.min(b.1) - a.0.max(b.0)).max(0.0);
    let union = (a.1 - a.0) + (b.1 - b.0) - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub score_threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionAp {
    pub tiou: f64,
    pub per_class: BTreeMap<usize, f64>,
    pub map: f64,
    #[serde(skip)]
    pub curves: BTreeMap<usize, Vec<PrPoint>>,
}

struct Pred<'a> {
    video: &'a str,
    start: f64,
    end: f64,
    score: f64,
}

/// Average precision per class at one tIoU threshold, and their mean over
/// classes that have at least one ground-truth instance.
///
/// Predictions are visited by descending score (ties keep input order).
/// Each takes the unmatched same-class ground truth segment of its video
/// with the highest tIoU; it is a true positive when that tIoU is at least
/// `tiou`. AP integrates the monotone precision envelope over all recall
/// points.
pub fn detection_ap(
    preds: &[SegmentSet],
    gts: &[SegmentSet],
    tiou: f64,
) -> Result<DetectionAp, MetricError> {
    let mut gt_by_class: BTreeMap<usize, HashMap<&str, Vec<(f64, f64)>>> = BTreeMap::new();
    for v in gts {
        for s in &v.segments {
            gt_by_class
                .entry(s.label)
                .or_default()
                .entry(v.video_id.as_str())
                .or_default()
                .push((s.start, s.end));
        }
    }
    let mut pred_by_class: HashMap<usize, Vec<Pred>> = HashMap::new();
    for v in preds {
        for (index, s) in v.segments.iter().enumerate() {
            let score = s.score.ok_or_else(|| MetricError::MissingScore {
                video: v.video_id.clone(),
                index,
            })?;
            pred_by_class.entry(s.label).or_default().push(Pred {
                video: &v.video_id,
                start: s.start,
                end: s.end,
                score,
            });
        }
    }

    let mut per_class = BTreeMap::new();
    let mut curves = BTreeMap::new();
    for (&class, gt) in &gt_by_class {
        let mut cls_preds = pred_by_class.remove(&class).unwrap_or_default();
        let (ap, curve) = class_ap(&mut cls_preds, gt, tiou);
        per_class.insert(class, ap);
        curves.insert(class, curve);
    }
    let map = if per_class.is_empty() {
        0.0
    } else {
        per_class.values().sum::<f64>() / per_class.len() as f64
    };
    Ok(DetectionAp {
        tiou,
        per_class,
        map,
        curves,
    })
}

fn class_ap(
    preds: &mut [Pred],
    gt: &HashMap<&str, Vec<(f64, f64)>>,
    tiou: f64,
) -> (f64, Vec<PrPoint>) {
    let npos: usize = gt.values().map(Vec::len).sum();
    preds.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut used: HashMap<&str, Vec<bool>> =
        gt.iter().map(|(k, v)| (*k, vec![false; v.len()])).collect();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut curve = Vec::with_capacity(preds.len());
    for p in preds.iter() {
        let mut best: Option<(usize, f64)> = None;
        if let (Some(segs), Some(flags)) = (gt.get(p.video), used.get(p.video)) {
            for (j, &g) in segs.iter().enumerate() {
                if flags[j] {
                    continue;
                }
                let iou = segment_iou((p.start, p.end), g);
                if best.is_none_or(|(_, b)| iou > b) {
                    best = Some((j, iou));
                }
            }
        }
        match best {
            Some((j, iou)) if iou >= tiou => {
                used.get_mut(p.video).expect("video present")[j] = true;
                tp += 1;
            }
            _ => fp += 1,
        }
        curve.push(PrPoint {
            score_threshold: p.score,
            precision: tp as f64 / (tp + fp) as f64,
            recall: tp as f64 / npos as f64,
        });
    }
    (envelope_ap(&curve), curve)
}

/// `Σ (r_i − r_{i−1}) · max_{j ≥ i} p_j` with `r_0 = 0`.
pub(crate) fn envelope_ap(curve: &[PrPoint]) -> f64 {
    let mut env = vec![0.0; curve.len()];
    let mut run = 0.0f64;
    for i in (0..curve.len()).rev() {
        run = run.max(curve[i].precision);
        env[i] = run;
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (pt, e) in curve.iter().zip(&env) {
        ap += (pt.recall - prev_recall) * e;
        prev_recall = pt.recall;
    }
    ap
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSweep {
    pub rows: Vec<DetectionAp>,
    /// Mean of the per-threshold mAPs.
    pub average: f64,
}

/// mAP at each threshold plus their average, as in the usual
/// `0.3 … 0.7 / Avg.` table layout.
pub fn detection_map_sweep(
    preds: &[SegmentSet],
    gts: &[SegmentSet],
    tious: &[f64],
) -> Result<MapSweep, MetricError> {
    let rows = tious
        .iter()
        .map(|&t| detection_ap(preds, gts, t))
        .collect::<Result<Vec<_>, _>>()?;
    let average = if rows.is_empty() {
        0.0
    } else {
        rows.iter().map(|r| r.map).sum::<f64>() / rows.len() as f64
    };
    Ok(MapSweep { rows, average })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::Segment;

    fn set(id: &str, segs: &[(f64, f64, usize, Option<f64>)]) -> SegmentSet {
        SegmentSet {
            video_id: id.into(),
            duration_sec: 100.0,
            segments: segs
                .iter()
                .map(|&(start, end, label, score)| Segment {
                    start,
                    end,
                    label,
                    score,
                })
                .collect(),
        }
    }

    #[test]
    fn iou_examples() {
        assert_eq!(segment_iou((0.0, 10.0), (0.0, 10.0)), 1.0);
        assert_eq!(segment_iou((0.0, 1.0), (2.0, 3.0)), 0.0);
        assert!((segment_iou((0.0, 10.0), (5.0, 15.0)) - 5.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_predictions() {
        let gt = vec![set("a", &[(0.0, 10.0, 0, None), (20.0, 30.0, 1, None)])];
        let pred = vec![set("a", &[(0.0, 10.0, 0, Some(1.0)), (20.0, 30.0, 1, Some(1.0))])];
        for t in [0.3, 0.5, 0.7, 0.95] {
            assert_eq!(detection_ap(&pred, &gt, t).unwrap().map, 1.0);
        }
    }

    #[test]
    fn no_predictions() {
        let gt = vec![set("a", &[(0.0, 10.0, 0, None)])];
        assert_eq!(detection_ap(&[], &gt, 0.5).unwrap().map, 0.0);
    }

    #[test]
    fn tp_ranked_first() {
        let gt = vec![set("a", &[(0.0, 10.0, 0, None)])];
        let pred = vec![set("a", &[(0.0, 10.0, 0, Some(0.9)), (20.0, 30.0, 0, Some(0.8))])];
        let r = detection_ap(&pred, &gt, 0.5).unwrap();
        let c = &r.curves[&0];
        assert_eq!((c[0].precision, c[0].recall), (1.0, 1.0));
        assert_eq!((c[1].precision, c[1].recall), (0.5, 1.0));
        assert_eq!(r.map, 1.0);
    }

    #[test]
    fn fp_ranked_first_halves_ap() {
        let gt = vec![set("a", &[(0.0, 10.0, 0, None)])];
        let pred = vec![set("a", &[(0.0, 10.0, 0, Some(0.7)), (20.0, 30.0, 0, Some(0.8))])];
        assert_eq!(detection_ap(&pred, &gt, 0.5).unwrap().map, 0.5);
    }

    #[test]
    fn wrong_video_is_fp() {
        let gt = vec![set("a", &[(0.0, 10.0, 0, None)])];
        let pred = vec![set("b", &[(0.0, 10.0, 0, Some(0.9))])];
        assert_eq!(detection_ap(&pred, &gt, 0.5).unwrap().map, 0.0);
    }

    #[test]
    fn missing_score_is_error() {
        let gt = vec![set("a", &[(0.0, 10.0, 0, None)])];
        let pred = vec![set("a", &[(0.0, 10.0, 0, None)])];
        assert!(matches!(
            detection_ap(&pred, &gt, 0.5),
            Err(MetricError::MissingScore { .. })
        ));
    }

    #[test]
    fn class_without_gt_excluded() {
        let gt = vec![set("a", &[(0.0, 10.0, 0, None)])];
        let pred = vec![set("a", &[(0.0, 10.0, 0, Some(0.9)), (0.0, 10.0, 3, Some(0.9))])];
        let r = detection_ap(&pred, &gt, 0.5).unwrap();
        assert_eq!(r.per_class.len(), 1);
        assert_eq!(r.map, 1.0);
    }

    #[test]
    fn sweep_average() {
        let gt = vec![set("a", &[(0.0, 10.0, 0, None)])];
        let pred = vec![set("a", &[(0.0, 8.0, 0, Some(0.9))])];
        let s = detection_map_sweep(&pred, &gt, &[0.5, 0.75, 0.95]).unwrap();
        let maps: Vec<f64> = s.rows.iter().map(|r| r.map).collect();
        assert_eq!(maps, vec![1.0, 1.0, 0.0]);
        assert!((s.average - 2.0 / 3.0).abs() < 1e-15);
    }
}
