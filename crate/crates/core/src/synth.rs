//! Synthetic embedding sets with known ground truth.
//!
//! Every generator is a pure function of its parameters and seed; record
//! `i` of a split draws from its own RNG stream.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use thiserror::Error;

use crate::numkit::Rng;
use crate::store::{EmbeddingSet, Level, StoreError};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    Invalid(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

const EVAL_STREAM_BASE: u64 = 1 << 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_classes: usize,
    pub dim: usize,
    /// Training videos per class.
    pub per_class: usize,
    /// Held-out videos per class.
    pub eval_per_class: usize,
    /// Distance between class means in units of the within-class σ.
    pub separation: f64,
    pub clips_per_video: usize,
    pub tokens: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_classes: 10,
            dim: 64,
            per_class: 200,
            eval_per_class: 50,
            separation: 5.0,
            clips_per_video: 4,
            tokens: 1,
            seed: 0,
        }
    }
}

/// Contents of `truth.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    /// Bayes accuracy of the quantity a video-level classifier sees.
    pub bayes_accuracy: f64,
    pub means_hash: String,
    pub spec: serde_json::Value,
}

#[derive(Clone, Debug)]
pub struct SynthOutput {
    pub train: EmbeddingSet,
    pub eval: EmbeddingSet,
    pub truth: Truth,
}

fn means_hash(means: &[Vec<f64>]) -> String {
    let mut h = Sha256::new();
    for m in means {
        for v in m {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// Class means on a regular simplex with pairwise distance `separation`,
/// centered at the origin. Needs `dim >= n_classes`.
pub fn simplex_means(n_classes: usize, dim: usize, separation: f64) -> Vec<Vec<f64>> {
    let edge = separation / std::f64::consts::SQRT_2;
    let centroid = edge / n_classes as f64;
    (0..n_classes)
        .map(|c| {
            (0..dim)
                .map(|k| {
                    let v = if k == c { edge } else { 0.0 };
                    if k < n_classes {
                        v - centroid
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect()
}

/// Accuracy of the Bayes classifier for `n_classes` equiprobable unit
/// isotropic Gaussians whose means form a regular simplex with pairwise
/// distance `separation`:
/// `∫ φ(t) Φ(t + separation/√2)^(C−1) dt`, by composite Simpson quadrature.
pub fn simplex_bayes_accuracy(n_classes: usize, separation: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    let shift = separation / std::f64::consts::SQRT_2;
    let (lo, hi, steps) = (-12.0f64, 12.0f64, 4000usize);
    let h = (hi - lo) / steps as f64;
    let f = |t: f64| n.pdf(t) * n.cdf(t + shift).powi(n_classes as i32 - 1);
    let mut s = f(lo) + f(hi);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + i as f64 * h);
    }
    (s * h / 3.0).min(1.0)
}

fn class_names(n: usize) -> Vec<String> {
    (0..n).map(|c| format!("class_{c:02}")).collect()
}

/// Isotropic unit-variance class Gaussians around simplex means; every clip
/// and token of a video is an independent draw from its class.
pub fn gen_class_gaussians(spec: &SynthSpec) -> Result<SynthOutput, SynthError> {
    if spec.n_classes < 2 {
        return Err(SynthError::Invalid("need at least 2 classes".into()));
    }
    if spec.dim < spec.n_classes {
        return Err(SynthError::Invalid(format!(
            "dim {} must be >= number of classes {}",
            spec.dim, spec.n_classes
        )));
    }
    if !(spec.separation >= 0.0) || spec.clips_per_video == 0 || spec.tokens == 0 {
        return Err(SynthError::Invalid(
            "separation >= 0, clips >= 1 and tokens >= 1 required".into(),
        ));
    }
    let means = simplex_means(spec.n_classes, spec.dim, spec.separation);
    let level = if spec.tokens > 1 {
        Level::Patch
    } else {
        Level::Clip
    };
    let split = |per_class: usize, stream_base: u64, prefix: &str| {
        let mut blocks = Vec::with_capacity(per_class * spec.n_classes);
        for i in 0..per_class * spec.n_classes {
            let label = i % spec.n_classes;
            let mut rng = Rng::new(spec.seed, stream_base + i as u64);
            let n = spec.clips_per_video * spec.tokens;
            let mut block = Vec::with_capacity(n * spec.dim);
            for _ in 0..n {
                block.extend(means[label].iter().map(|m| (m + rng.normal()) as f32));
            }
            blocks.push((
                format!("{prefix}_{i:06}"),
                Some(label),
                spec.clips_per_video,
                spec.tokens,
                block,
            ));
        }
        EmbeddingSet::from_blocks(
            format!("synth-gaussians-{prefix}"),
            spec.dim,
            level,
            class_names(spec.n_classes),
            blocks,
        )
    };
    let train = split(spec.per_class, 0, "train")?;
    let eval = split(spec.eval_per_class, EVAL_STREAM_BASE, "eval")?;
    // the mean of M independent clips has within-class σ/√M
    let video_sep = spec.separation * (spec.clips_per_video as f64).sqrt();
    Ok(SynthOutput {
        train,
        eval,
        truth: Truth {
            bayes_accuracy: simplex_bayes_accuracy(spec.n_classes, video_sep),
            means_hash: means_hash(&means),
            spec: serde_json::to_value(spec).expect("spec serializes"),
        },
    })
}

#[derive(Clone, Debug)]
pub struct MotionPairs {
    pub forward: EmbeddingSet,
    pub reversed: EmbeddingSet,
    pub truth: Truth,
}

/// Forward/reversed embedding pairs sharing an appearance component
/// `a ~ N(0, I)`; forward adds `+strength·u`, reversed `−strength·u` for a
/// fixed unit direction `u`. Records carry label 0 in the forward set and 1
/// in the reversed set, with identical ids.
pub fn gen_motion_pairs(
    n: usize,
    dim: usize,
    direction_strength: f64,
    seed: u64,
) -> Result<MotionPairs, SynthError> {
    if dim < 2 {
        return Err(SynthError::Invalid("motion pairs need dim >= 2".into()));
    }
    let mut dir_rng = Rng::new(seed, 0);
    let mut u: Vec<f64> = (0..dim).map(|_| dir_rng.normal()).collect();
    let un = crate::numkit::norm(&u);
    for v in &mut u {
        *v /= un;
    }
    let mut fwd = Vec::with_capacity(n);
    let mut rev = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = Rng::new(seed, 1 + i as u64);
        let a: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
        let id = format!("pair_{i:06}");
        let f: Vec<f32> = a
            .iter()
            .zip(&u)
            .map(|(x, d)| (x + direction_strength * d) as f32)
            .collect();
        let r: Vec<f32> = a
            .iter()
            .zip(&u)
            .map(|(x, d)| (x - direction_strength * d) as f32)
            .collect();
        fwd.push((id.clone(), Some(0), 1, 1, f));
        rev.push((id, Some(1), 1, 1, r));
    }
    let names = vec!["forward".to_string(), "reversed".to_string()];
    let forward =
        EmbeddingSet::from_blocks("synth-motion-forward", dim, Level::Clip, names.clone(), fwd)?;
    let reversed =
        EmbeddingSet::from_blocks("synth-motion-reversed", dim, Level::Clip, names, rev)?;
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(MotionPairs {
        forward,
        reversed,
        truth: Truth {
            // projections on u: N(+s, 1) vs N(−s, 1)
            bayes_accuracy: normal.cdf(direction_strength),
            means_hash: means_hash(&[u]),
            spec: serde_json::json!({
                "n": n, "dim": dim, "direction_strength": direction_strength, "seed": seed
            }),
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TokenSignalSpec {
    pub n_per_class: usize,
    pub eval_per_class: usize,
    pub n_classes: usize,
    pub tokens: usize,
    pub dim: usize,
    pub seed: u64,
}

impl Default for TokenSignalSpec {
    fn default() -> Self {
        Self {
            n_per_class: 100,
            eval_per_class: 50,
            n_classes: 4,
            tokens: 8,
            dim: 16,
            seed: 0,
        }
    }
}

/// Mean of the marker coordinate on the signal token.
pub const TOKEN_MARKER: f64 = 12.0;
/// Pairwise distance of class means on the signal token.
pub const TOKEN_SIGNAL_SEPARATION: f64 = 8.0;
/// Standard deviation of the class-independent noise tokens.
pub const TOKEN_NOISE_STD: f64 = 3.0;

#[derive(Clone, Debug)]
pub struct TokenSignalOutput {
    pub train: EmbeddingSet,
    pub eval: EmbeddingSet,
    pub truth: Truth,
    /// Bayes accuracy of a classifier reading only the mean-pooled token.
    pub pooled_bayes_accuracy: f64,
}

/// Patch-level set in which exactly one token per video carries the class.
///
/// The signal token is `marker·e₀ + μ_c + N(0, I)` with simplex class means
/// on coordinates `1..=C`. Every other token is `N(0, σ²I)` with
/// `σ = TOKEN_NOISE_STD`. The signal position is drawn per video.
pub fn gen_token_signal_set(spec: &TokenSignalSpec) -> Result<TokenSignalOutput, SynthError> {
    if spec.tokens < 4 {
        return Err(SynthError::Invalid("token-signal set needs tokens >= 4".into()));
    }
    if spec.n_classes < 2 || spec.dim < spec.n_classes + 1 {
        return Err(SynthError::Invalid(format!(
            "need C >= 2 and dim >= C + 1, got C={} dim={}",
            spec.n_classes, spec.dim
        )));
    }
    let class_means: Vec<Vec<f64>> = simplex_means(spec.n_classes, spec.n_classes, TOKEN_SIGNAL_SEPARATION);
    let split = |per_class: usize, stream_base: u64, prefix: &str| {
        let mut blocks = Vec::new();
        for i in 0..per_class * spec.n_classes {
            let label = i % spec.n_classes;
            let mut rng = Rng::new(spec.seed, stream_base + i as u64);
            let pos = rng.below(spec.tokens);
            let mut block = Vec::with_capacity(spec.tokens * spec.dim);
            for t in 0..spec.tokens {
                for k in 0..spec.dim {
                    let v = if t == pos {
                        let mean = match k {
                            0 => TOKEN_MARKER,
                            k if k <= spec.n_classes => class_means[label][k - 1],
                            _ => 0.0,
                        };
                        mean + rng.normal()
                    } else {
                        TOKEN_NOISE_STD * rng.normal()
                    };
                    block.push(v as f32);
                }
            }
            blocks.push((format!("{prefix}_{i:06}"), Some(label), 1, spec.tokens, block));
        }
        EmbeddingSet::from_blocks(
            format!("synth-token-signal-{prefix}"),
            spec.dim,
            Level::Patch,
            class_names(spec.n_classes),
            blocks,
        )
    };
    let train = split(spec.n_per_class, 0, "train")?;
    let eval = split(spec.eval_per_class, EVAL_STREAM_BASE, "eval")?;
    // pooled: means μ_c / T, isotropic std sqrt(1 + (T−1)σ²) / T
    let t = spec.tokens as f64;
    let pooled_std = (1.0 + (t - 1.0) * TOKEN_NOISE_STD * TOKEN_NOISE_STD).sqrt() / t;
    let pooled_sep = TOKEN_SIGNAL_SEPARATION / t / pooled_std;
    Ok(TokenSignalOutput {
        train,
        eval,
        truth: Truth {
            bayes_accuracy: simplex_bayes_accuracy(spec.n_classes, TOKEN_SIGNAL_SEPARATION),
            means_hash: means_hash(&class_means),
            spec: serde_json::to_value(spec).expect("spec serializes"),
        },
        pooled_bayes_accuracy: simplex_bayes_accuracy(spec.n_classes, pooled_sep),
    })
}
