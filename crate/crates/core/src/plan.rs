//! Frame-index and crop schedules for every sampling regime, plus feature
//! sequence post-processing for temporal heads.
//!
//! Linspace positions are rounded half away from zero (`f64::round`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("invalid plan parameter: {0}")]
    Invalid(String),
    #[error("start frame {start} is outside a {frames}-frame video")]
    StartOutOfRange { start: usize, frames: usize },
}

/// One temporal clip: its start time and the source frames it samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipPlan {
    pub clip_index: usize,
    pub start_sec: f64,
    #[serde(rename = "frames")]
    pub frame_indices: Vec<usize>,
}

/// One of the `m × n` spatial-temporal views of a video.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewPlan {
    /// `(spatial index < m, temporal index < n)`
    pub view_id: (usize, usize),
    /// Crop offset in pixels along the long side.
    pub spatial_offset: usize,
    pub temporal_clip: ClipPlan,
}

/// Serialized plan handed to the exporter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoPlan {
    pub video_id: String,
    pub clips: Vec<ClipPlan>,
    #[serde(default)]
    pub views: Vec<ViewPlan>,
}

/// Temporal feature sequence for a localization or segmentation head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSequence {
    pub video_id: String,
    pub stride_sec: f64,
    pub dim: usize,
    /// Row-major `[length][dim]`.
    pub features: Vec<f64>,
}

impl FeatureSequence {
    pub fn len(&self) -> usize {
        self.features.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }
}

fn linspace_round(lo: f64, hi: f64, n: usize) -> Vec<usize> {
    if n == 1 {
        return vec![lo.round() as usize];
    }
    (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).round() as usize)
        .collect()
}

/// `N` frame indices at a uniform stride over a video of `source_frames`
/// frames: `round(linspace(0, L−1, N))`. Repeats indices when `N > L`.
pub fn plan_uniform(source_frames: usize, n_frames: usize) -> Result<Vec<usize>, PlanError> {
    if source_frames == 0 || n_frames == 0 {
        return Err(PlanError::Invalid(format!(
            "need L >= 1 and N >= 1, got L={source_frames} N={n_frames}"
        )));
    }
    Ok(linspace_round(0.0, (source_frames - 1) as f64, n_frames))
}

/// `[start, start+s, …, start+(N−1)s]`, each clamped to `L − 1`.
pub fn plan_strided_clip(
    start_frame: usize,
    n_frames: usize,
    stride: usize,
    source_frames: usize,
) -> Result<Vec<usize>, PlanError> {
    if stride == 0 || n_frames == 0 {
        return Err(PlanError::Invalid(format!(
            "stride and N must be >= 1, got stride={stride} N={n_frames}"
        )));
    }
    if start_frame >= source_frames {
        return Err(PlanError::StartOutOfRange {
            start: start_frame,
            frames: source_frames,
        });
    }
    Ok((0..n_frames)
        .map(|i| (start_frame + i * stride).min(source_frames - 1))
        .collect())
}

/// Frame count of a video, at least one.
pub fn frame_count(duration_sec: f64, fps: f64) -> usize {
    ((duration_sec * fps).round() as usize).max(1)
}

const TIME_EPS: f64 = 1e-9;

/// Splits a video into clips of `clip_sec` seconds every `stride_sec`
/// seconds and samples `n_frames` frames uniformly within each clip.
///
/// Regular clips start at `k · stride_sec` while they fit inside the video.
/// If the last regular clip ends before the video does, one more clip
/// anchored at `max(0, duration − clip_sec)` is appended. Videos shorter
/// than one clip yield a single clip at 0.
pub fn plan_multiclip(
    duration_sec: f64,
    fps: f64,
    clip_sec: f64,
    stride_sec: f64,
    n_frames: usize,
) -> Result<Vec<ClipPlan>, PlanError> {
    if !(fps > 0.0) {
        return Err(PlanError::Invalid(format!("fps must be > 0, got {fps}")));
    }
    if !(clip_sec > 0.0) || !(stride_sec > 0.0) || stride_sec > clip_sec + TIME_EPS {
        return Err(PlanError::Invalid(format!(
            "need 0 < T_s <= T, got T={clip_sec} T_s={stride_sec}"
        )));
    }
    if !(duration_sec >= 0.0) {
        return Err(PlanError::Invalid(format!(
            "duration must be >= 0, got {duration_sec}"
        )));
    }
    let mut starts = Vec::new();
    if duration_sec < clip_sec {
        starts.push(0.0);
    } else {
        let mut k = 0usize;
        loop {
            let s = k as f64 * stride_sec;
            if s + clip_sec > duration_sec + TIME_EPS {
                break;
            }
            starts.push(s);
            k += 1;
        }
        let last_end = starts.last().map_or(0.0, |s| s + clip_sec);
        if last_end < duration_sec - TIME_EPS {
            starts.push((duration_sec - clip_sec).max(0.0));
        }
    }
    let total = frame_count(duration_sec, fps);
    starts
        .into_iter()
        .enumerate()
        .map(|(clip_index, start_sec)| {
            let first = ((start_sec * fps).round() as usize).min(total - 1);
            let end = (((start_sec + clip_sec) * fps).round() as usize).min(total);
            let span = end.saturating_sub(first).max(1);
            let frames = plan_uniform(span, n_frames)?
                .into_iter()
                .map(|f| first + f)
                .collect();
            Ok(ClipPlan {
                clip_index,
                start_sec,
                frame_indices: frames,
            })
        })
        .collect()
}

/// How each temporal view samples frames.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TemporalSampling {
    /// `n_frames` frames `stride` apart.
    Strided { n_frames: usize, stride: usize },
    /// A clip of `clip_sec` seconds with `n_frames` uniform samples.
    Clip { clip_sec: f64, n_frames: usize },
}

/// Multi-view schedule: `m` crops along the long side times `n` temporal
/// clips at equal intervals.
#[allow(clippy::too_many_arguments)]
pub fn plan_views(
    duration_sec: f64,
    fps: f64,
    short_side: usize,
    long_side: usize,
    m: usize,
    n: usize,
    sampling: TemporalSampling,
) -> Result<Vec<ViewPlan>, PlanError> {
    if long_side < short_side {
        return Err(PlanError::Invalid(format!(
            "long side {long_side} shorter than short side {short_side}"
        )));
    }
    if m == 0 || n == 0 {
        return Err(PlanError::Invalid(format!("m and n must be >= 1, got {m}x{n}")));
    }
    if !(fps > 0.0) {
        return Err(PlanError::Invalid(format!("fps must be > 0, got {fps}")));
    }
    let offsets = linspace_round(0.0, (long_side - short_side) as f64, m);
    let total = frame_count(duration_sec, fps);
    let clips: Vec<ClipPlan> = match sampling {
        TemporalSampling::Strided { n_frames, stride } => {
            if n_frames == 0 || stride == 0 {
                return Err(PlanError::Invalid("strided sampling needs N, stride >= 1".into()));
            }
            let span = (n_frames - 1) * stride + 1;
            let max_start = total.saturating_sub(span);
            linspace_round(0.0, max_start as f64, n)
                .into_iter()
                .enumerate()
                .map(|(j, start)| {
                    Ok(ClipPlan {
                        clip_index: j,
                        start_sec: start as f64 / fps,
                        frame_indices: plan_strided_clip(start, n_frames, stride, total)?,
                    })
                })
                .collect::<Result<_, PlanError>>()?
        }
        TemporalSampling::Clip { clip_sec, n_frames } => {
            if !(clip_sec > 0.0) {
                return Err(PlanError::Invalid("clip length must be > 0".into()));
            }
            let span = ((clip_sec * fps).round() as usize).clamp(1, total);
            let max_start = total - span;
            linspace_round(0.0, max_start as f64, n)
                .into_iter()
                .enumerate()
                .map(|(j, start)| {
                    Ok(ClipPlan {
                        clip_index: j,
                        start_sec: start as f64 / fps,
                        frame_indices: plan_uniform(span, n_frames)?
                            .into_iter()
                            .map(|f| start + f)
                            .collect(),
                    })
                })
                .collect::<Result<_, PlanError>>()?
        }
    };
    let mut views = Vec::with_capacity(m * n);
    for (i, &off) in offsets.iter().enumerate() {
        for clip in &clips {
            views.push(ViewPlan {
                view_id: (i, clip.clip_index),
                spatial_offset: off,
                temporal_clip: clip.clone(),
            });
        }
    }
    Ok(views)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateMode {
    Mean,
}

/// Averages `[M][dim]` clip embeddings into one video embedding.
pub fn aggregate_clip_embeddings(clips: &[f64], dim: usize, mode: AggregateMode) -> Vec<f64> {
    let AggregateMode::Mean = mode;
    assert!(dim > 0 && clips.len().is_multiple_of(dim) && !clips.is_empty());
    crate::numkit::mean_rows(clips, clips.len() / dim, dim)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PostProcess {
    Crop,
    Resize,
}

/// Crops a sequence to at most `target_len` rows, or linearly resamples it
/// to exactly `target_len` rows at positions `linspace(0, L−1, target_len)`.
pub fn postprocess_features(
    seq: &FeatureSequence,
    mode: PostProcess,
    target_len: usize,
) -> Result<FeatureSequence, PlanError> {
    let len = seq.len();
    if len == 0 {
        return Err(PlanError::Invalid("empty feature sequence".into()));
    }
    match mode {
        PostProcess::Crop => {
            let keep = len.min(target_len);
            Ok(FeatureSequence {
                features: seq.features[..keep * seq.dim].to_vec(),
                ..seq.clone()
            })
        }
        PostProcess::Resize => {
            if target_len < 2 {
                return Err(PlanError::Invalid(format!(
                    "resize target must be >= 2, got {target_len}"
                )));
            }
            let mut out = Vec::with_capacity(target_len * seq.dim);
            for i in 0..target_len {
                let pos = (len - 1) as f64 * i as f64 / (target_len - 1) as f64;
                let lo = (pos.floor() as usize).min(len - 1);
                let hi = (lo + 1).min(len - 1);
                let w = pos - lo as f64;
                if w == 0.0 {
                    out.extend_from_slice(seq.row(lo));
                } else {
                    out.extend(
                        seq.row(lo)
                            .iter()
                            .zip(seq.row(hi))
                            .map(|(a, b)| a + w * (b - a)),
                    );
                }
            }
            // stride of the resampled sequence covers the same time span
            let stride_sec = if len > 1 {
                seq.stride_sec * (len - 1) as f64 / (target_len - 1) as f64
            } else {
                seq.stride_sec
            };
            Ok(FeatureSequence {
                video_id: seq.video_id.clone(),
                stride_sec,
                dim: seq.dim,
                features: out,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_identity() {
        assert_eq!(plan_uniform(16, 16).unwrap(), (0..16).collect::<Vec<_>>());
    }

    #[test]
    fn uniform_single_frame() {
        assert_eq!(plan_uniform(1, 4).unwrap(), vec![0, 0, 0, 0]);
    }

    #[test]
    fn uniform_enumerated() {
        // linspace(0, 99, 4) = 0, 33, 66, 99 exactly
        assert_eq!(plan_uniform(100, 4).unwrap(), vec![0, 33, 66, 99]);
    }

    #[test]
    fn strided_examples() {
        let f = plan_strided_clip(0, 16, 4, 300).unwrap();
        assert_eq!(*f.last().unwrap(), 60);
        assert_eq!(f.last().unwrap() - f[0] + 1, 61);
        assert_eq!(plan_strided_clip(5, 3, 1, 100).unwrap(), vec![5, 6, 7]);
        assert_eq!(plan_strided_clip(0, 4, 10, 25).unwrap(), vec![0, 10, 20, 24]);
        assert!(matches!(
            plan_strided_clip(25, 4, 10, 25),
            Err(PlanError::StartOutOfRange { .. })
        ));
    }

    #[test]
    fn multiclip_exact_tiling() {
        let c = plan_multiclip(10.0, 30.0, 2.0, 2.0, 8).unwrap();
        let starts: Vec<f64> = c.iter().map(|c| c.start_sec).collect();
        assert_eq!(starts, vec![0.0, 2.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn multiclip_short_video() {
        let c = plan_multiclip(1.0, 30.0, 2.0, 2.0, 16).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].start_sec, 0.0);
        assert!(c[0].frame_indices.iter().all(|&f| f < 30));
    }

    #[test]
    fn multiclip_dense_overlap_count() {
        // enumeration: starts k*0.125 with k*0.125 + 0.5 <= 4.0 → k = 0..=28
        let expected = (0..)
            .take_while(|k| *k as f64 * 0.125 + 0.5 <= 4.0)
            .count();
        assert_eq!(expected, 29);
        assert_eq!(plan_multiclip(4.0, 30.0, 0.5, 0.125, 8).unwrap().len(), 29);
    }

    #[test]
    fn multiclip_anchors_tail() {
        let c = plan_multiclip(5.0, 10.0, 2.0, 2.0, 4).unwrap();
        let starts: Vec<f64> = c.iter().map(|c| c.start_sec).collect();
        assert_eq!(starts, vec![0.0, 2.0, 3.0]);
    }

    #[test]
    fn multiclip_bad_fps() {
        assert!(plan_multiclip(5.0, 0.0, 2.0, 2.0, 4).is_err());
    }

    #[test]
    fn views_count_and_offsets() {
        let s = TemporalSampling::Strided {
            n_frames: 16,
            stride: 4,
        };
        let v = plan_views(10.0, 30.0, 224, 324, 3, 4, s).unwrap();
        assert_eq!(v.len(), 12);
        let mut offs: Vec<usize> = v.iter().map(|v| v.spatial_offset).collect();
        offs.dedup();
        assert_eq!(offs, vec![0, 50, 100]);
        let sq = plan_views(10.0, 30.0, 224, 224, 3, 1, s).unwrap();
        assert!(sq.iter().all(|v| v.spatial_offset == 0));
        assert_eq!(sq.len(), 3);
    }

    #[test]
    fn clip_views_in_range() {
        let s = TemporalSampling::Clip {
            clip_sec: 2.0,
            n_frames: 8,
        };
        let v = plan_views(7.0, 25.0, 128, 170, 2, 5, s).unwrap();
        assert_eq!(v.len(), 10);
        let total = frame_count(7.0, 25.0);
        assert!(v
            .iter()
            .all(|v| v.temporal_clip.frame_indices.iter().all(|&f| f < total)));
    }

    #[test]
    fn aggregate_examples() {
        let v = vec![0.5, -1.0, 3.0];
        assert_eq!(aggregate_clip_embeddings(&v, 3, AggregateMode::Mean), v);
        let vv: Vec<f64> = v.iter().chain(&v).copied().collect();
        assert_eq!(aggregate_clip_embeddings(&vv, 3, AggregateMode::Mean), v);
    }

    #[test]
    fn aggregate_matches_oracle() {
        let mut rng = crate::numkit::Rng::new(8, 0);
        let x: Vec<f64> = (0..5 * 6).map(|_| rng.normal()).collect();
        let got = aggregate_clip_embeddings(&x, 6, AggregateMode::Mean);
        for k in 0..6 {
            let mut col: Vec<f64> = (0..5).map(|m| x[m * 6 + k]).collect();
            col.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let oracle = col.iter().sum::<f64>() / 5.0;
            assert!((got[k] - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
        }
    }

    fn seq(rows: Vec<f64>, dim: usize) -> FeatureSequence {
        FeatureSequence {
            video_id: "v".into(),
            stride_sec: 0.125,
            dim,
            features: rows,
        }
    }

    #[test]
    fn crop_identity_at_max_len() {
        let s = seq((0..2304).map(|v| v as f64).collect(), 1);
        assert_eq!(postprocess_features(&s, PostProcess::Crop, 2304).unwrap(), s);
        let c = postprocess_features(&s, PostProcess::Crop, 100).unwrap();
        assert_eq!(c.len(), 100);
    }

    #[test]
    fn resize_examples() {
        let s = seq(vec![1.0, 10.0, 2.0, 20.0, 3.0, 30.0, 4.0, 40.0], 2);
        let r = postprocess_features(&s, PostProcess::Resize, 2).unwrap();
        assert_eq!(r.features, vec![1.0, 10.0, 4.0, 40.0]);
        let s = seq(vec![0.0, 2.0, 4.0], 1);
        let r = postprocess_features(&s, PostProcess::Resize, 5).unwrap();
        assert_eq!(r.features, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert!(postprocess_features(&s, PostProcess::Resize, 1).is_err());
    }

    #[test]
    fn plan_json_layout() {
        let plan = VideoPlan {
            video_id: "v".into(),
            clips: plan_multiclip(4.0, 2.0, 2.0, 2.0, 2).unwrap(),
            views: vec![],
        };
        let j = serde_json::to_value(&plan).unwrap();
        assert_eq!(j["video_id"], "v");
        assert_eq!(j["clips"][1]["start_sec"], 2.0);
        assert_eq!(j["clips"][1]["frames"], serde_json::json!([4, 7]));
        let back: VideoPlan = serde_json::from_value(j).unwrap();
        assert_eq!(back, plan);
    }

    proptest! {
        #[test]
        fn uniform_strictly_increasing(l in 1usize..500, n in 1usize..500) {
            let f = plan_uniform(l, n).unwrap();
            prop_assert_eq!(f.len(), n);
            prop_assert!(f.iter().all(|&i| i < l));
            if n <= l {
                prop_assert!(f.windows(2).all(|w| w[0] < w[1]));
            } else {
                prop_assert!(f.windows(2).all(|w| w[0] <= w[1]));
            }
        }

        #[test]
        fn multiclip_covers_video(dur in 0.1f64..60.0, t in 0.25f64..4.0) {
            let clips = plan_multiclip(dur, 30.0, t, t, 4).unwrap();
            // union of [s, s+T) must cover [0, duration)
            let mut covered = 0.0f64;
            let mut starts: Vec<f64> = clips.iter().map(|c| c.start_sec).collect();
            starts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for s in starts {
                prop_assert!(s <= covered + 1e-9);
                covered = covered.max(s + t);
            }
            prop_assert!(covered >= dur - 1e-9);
        }

        #[test]
        fn views_cardinality(m in 1usize..6, n in 1usize..6, extra in 0usize..200) {
            let v = plan_views(9.0, 30.0, 200, 200 + extra, m, n,
                TemporalSampling::Strided { n_frames: 16, stride: 2 }).unwrap();
            prop_assert_eq!(v.len(), m * n);
            prop_assert!(v.iter().all(|v| v.spatial_offset <= extra));
        }

        #[test]
        fn resize_preserves_endpoints(len in 2usize..40, target in 2usize..40) {
            let s = seq((0..len * 2).map(|v| (v as f64).sin()).collect(), 2);
            let r = postprocess_features(&s, PostProcess::Resize, target).unwrap();
            prop_assert_eq!(r.row(0), s.row(0));
            prop_assert_eq!(r.row(target - 1), s.row(len - 1));
            let same = postprocess_features(&s, PostProcess::Resize, len).unwrap();
            prop_assert_eq!(same.features, s.features);
        }

        #[test]
        fn aggregate_permutation_invariant(seed in 0u64..1000) {
            let mut rng = crate::numkit::Rng::new(seed, 0);
            let x: Vec<f64> = (0..4 * 3).map(|_| rng.normal()).collect();
            let mut y = x.clone();
            y.rotate_left(3);
            let a = aggregate_clip_embeddings(&x, 3, AggregateMode::Mean);
            let b = aggregate_clip_embeddings(&y, 3, AggregateMode::Mean);
            for (p, q) in a.iter().zip(&b) {
                prop_assert!((p - q).abs() < 1e-12);
            }
        }
    }
}
