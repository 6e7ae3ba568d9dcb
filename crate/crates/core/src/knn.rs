//! Brute-force k-nearest-neighbor classification over stored embeddings.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::{dot, norm, sq_dist};
use crate::store::EmbeddingSet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KnnError {
    #[error("invalid knn config: {0}")]
    Config(String),
    #[error("training set is empty")]
    EmptyTrain,
    #[error("{0} set has unlabeled records")]
    Unlabeled(&'static str),
    #[error("class names differ between training and evaluation sets")]
    ClassMismatch,
    #[error("dimension mismatch: train {train}, query {query}")]
    DimMismatch { train: usize, query: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnnMetric {
    Cosine,
    L2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnnMode {
    /// One whole-video vector per record (the exporter stores a single
    /// uniformly sampled clip; several clips are averaged).
    Uniform,
    /// Each query clip votes with its own neighbors among all train clips.
    Clip,
    /// Mean of the clip embeddings.
    Video,
}

pub const KNN_MODES: [KnnMode; 3] = [KnnMode::Uniform, KnnMode::Clip, KnnMode::Video];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    pub metric: KnnMetric,
    pub mode: KnnMode,
    /// Clip duration the embeddings were exported with; recorded only.
    pub clip_length_sec: f64,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            k: 20,
            metric: KnnMetric::Cosine,
            mode: KnnMode::Video,
            clip_length_sec: 2.0,
        }
    }
}

impl KnnConfig {
    pub fn validate(&self) -> Result<(), KnnError> {
        if self.k == 0 {
            return Err(KnnError::Config("k must be >= 1".into()));
        }
        if !(self.clip_length_sec > 0.0) {
            return Err(KnnError::Config("clip_length_sec must be > 0".into()));
        }
        Ok(())
    }
}

/// Labeled reference vectors prepared for one mode and metric.
pub struct KnnIndex {
    dim: usize,
    classes: usize,
    metric: KnnMetric,
    mode: KnnMode,
    vectors: Vec<f64>,
    labels: Vec<usize>,
}

fn prepare(v: &mut [f64], metric: KnnMetric) {
    if metric == KnnMetric::Cosine {
        let n = norm(v);
        if n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
        }
    }
}

fn video_vector(set: &EmbeddingSet, i: usize) -> Vec<f64> {
    let clips = set.records[i].clips;
    let v = set.clip_vectors(i);
    if clips == 1 {
        return v;
    }
    let mut mean = vec![0.0; set.dim];
    for row in v.chunks(set.dim) {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= clips as f64);
    mean
}

/// Query vectors of record `i` under `mode`, before metric preparation.
fn query_vectors(set: &EmbeddingSet, i: usize, mode: KnnMode) -> Vec<Vec<f64>> {
    match mode {
        KnnMode::Uniform | KnnMode::Video => vec![video_vector(set, i)],
        KnnMode::Clip => set
            .clip_vectors(i)
            .chunks(set.dim)
            .map(<[f64]>::to_vec)
            .collect(),
    }
}

impl KnnIndex {
    pub fn build(train: &EmbeddingSet, metric: KnnMetric, mode: KnnMode) -> Result<Self, KnnError> {
        if train.is_empty() {
            return Err(KnnError::EmptyTrain);
        }
        let labels = train.labels().ok_or(KnnError::Unlabeled("training"))?;
        let mut vectors = Vec::new();
        let mut ref_labels = Vec::new();
        for i in 0..train.len() {
            for mut v in query_vectors(train, i, mode) {
                prepare(&mut v, metric);
                vectors.extend_from_slice(&v);
                ref_labels.push(labels[i]);
            }
        }
        Ok(Self {
            dim: train.dim,
            classes: train.num_classes(),
            metric,
            mode,
            vectors,
            labels: ref_labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn distance(&self, q: &[f64], j: usize) -> f64 {
        let r = &self.vectors[j * self.dim..(j + 1) * self.dim];
        match self.metric {
            KnnMetric::Cosine => 1.0 - dot(q, r),
            KnnMetric::L2 => sq_dist(q, r),
        }
    }

    /// Indices of the `k` nearest references, nearest first; equal
    /// distances keep the smaller reference ordinal.
    pub fn neighbors(&self, q: &[f64], k: usize) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = (0..self.len()).map(|j| (self.distance(q, j), j)).collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        let k = k.min(d.len());
        if k < d.len() {
            d.select_nth_unstable_by(k, cmp);
            d.truncate(k);
        }
        d.sort_by(cmp);
        d.into_iter().map(|(_, j)| j).collect()
    }

    /// Adds one vote per neighbor of each query vector into `votes`.
    fn vote(&self, queries: Vec<Vec<f64>>, k: usize, votes: &mut [usize]) {
        for mut q in queries {
            prepare(&mut q, self.metric);
            for j in self.neighbors(&q, k) {
                votes[self.labels[j]] += 1;
            }
        }
    }

    /// Class of record `i` of `query`; vote ties go to the smaller class.
    pub fn classify(&self, query: &EmbeddingSet, i: usize, k: usize) -> Result<usize, KnnError> {
        if query.dim != self.dim {
            return Err(KnnError::DimMismatch {
                train: self.dim,
                query: query.dim,
            });
        }
        let mut votes = vec![0usize; self.classes];
        self.vote(query_vectors(query, i, self.mode), k, &mut votes);
        let mut best = 0;
        for (c, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = c;
            }
        }
        Ok(best)
    }
}

fn clamp_k(k: usize, available: usize) -> usize {
    if k > available {
        log::warn!("k = {k} exceeds the {available} reference vectors; using k = {available}");
        available
    } else {
        k
    }
}

/// One-off classification of record `i` of `query`.
pub fn knn_classify(
    train: &EmbeddingSet,
    query: &EmbeddingSet,
    i: usize,
    cfg: &KnnConfig,
) -> Result<usize, KnnError> {
    cfg.validate()?;
    let index = KnnIndex::build(train, cfg.metric, cfg.mode)?;
    index.classify(query, i, clamp_k(cfg.k, index.len()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnReport {
    pub config: KnnConfig,
    pub k_used: usize,
    pub n: usize,
    pub top1: f64,
    pub predictions: Vec<usize>,
}

pub fn knn_evaluate(
    train: &EmbeddingSet,
    eval: &EmbeddingSet,
    cfg: &KnnConfig,
) -> Result<KnnReport, KnnError> {
    cfg.validate()?;
    if train.class_names != eval.class_names {
        return Err(KnnError::ClassMismatch);
    }
    let labels = eval.labels().ok_or(KnnError::Unlabeled("evaluation"))?;
    let index = KnnIndex::build(train, cfg.metric, cfg.mode)?;
    let k = clamp_k(cfg.k, index.len());
    let predictions = (0..eval.len())
        .into_par_iter()
        .map(|i| index.classify(eval, i, k))
        .collect::<Result<Vec<_>, _>>()?;
    let hits = predictions.iter().zip(&labels).filter(|(p, y)| p == y).count();
    let n = labels.len();
    Ok(KnnReport {
        config: cfg.clone(),
        k_used: k,
        n,
        top1: if n == 0 {
            0.0
        } else {
            100.0 * hits as f64 / n as f64
        },
        predictions,
    })
}
