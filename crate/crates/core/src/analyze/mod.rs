//! Embedding-space analyses: Fisher LDA separability of forward versus
//! reversed clips, and 2-D projections (t-SNE, PCA) with a neighbor-purity
//! score.

mod pca;
mod tsne;

pub use pca::{cluster_purity, pca_project, PcaProjection};
pub use tsne::{conditional_probabilities, tsne, TsneConfig, TsneResult, TSNE_MAX_POINTS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::{dot, norm, solve_spd, Matrix, NumError, Rng};
use crate::store::EmbeddingSet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyzeError {
    #[error("need at least {need} samples per class, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("class means are identical; no discriminant direction exists")]
    IdenticalMeans,
    #[error("forward and reversed sets are not paired: {0}")]
    Unpaired(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Numeric(#[from] NumError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    /// Unit discriminant direction; class 1 projects above `threshold`.
    pub w: Vec<f64>,
    pub threshold: f64,
    pub ridge: f64,
}

impl LdaModel {
    pub fn project(&self, x: &[f64]) -> f64 {
        dot(&self.w, x)
    }

    /// `true` for class 1.
    pub fn predict(&self, x: &[f64]) -> bool {
        self.project(x) > self.threshold
    }
}

fn class_mean(x: &Matrix) -> Vec<f64> {
    let mut m = vec![0.0; x.cols];
    for i in 0..x.rows {
        for (a, v) in m.iter_mut().zip(x.row(i)) {
            *a += v;
        }
    }
    m.iter_mut().for_each(|a| *a /= x.rows as f64);
    m
}

fn add_scatter(s: &mut Matrix, x: &Matrix, mean: &[f64]) {
    let d = x.cols;
    let mut c = vec![0.0; d];
    for i in 0..x.rows {
        for (ck, (v, m)) in c.iter_mut().zip(x.row(i).iter().zip(mean)) {
            *ck = v - m;
        }
        for a in 0..d {
            if c[a] == 0.0 {
                continue;
            }
            let row = s.row_mut(a);
            for b in 0..d {
                row[b] += c[a] * c[b];
            }
        }
    }
}

/// Two-class Fisher discriminant `w ∝ (S_w + εI)⁻¹(μ₁ − μ₂)`.
///
/// `S_w` is the summed within-class scatter. With `ridge = None` the ridge
/// is `1e-6 · trace(S_w) / d`.
pub fn fisher_lda(x1: &Matrix, x2: &Matrix, ridge: Option<f64>) -> Result<LdaModel, AnalyzeError> {
    for x in [x1, x2] {
        if x.rows < 2 {
            return Err(AnalyzeError::TooFewSamples { need: 2, got: x.rows });
        }
    }
    if x1.cols != x2.cols {
        return Err(AnalyzeError::DimMismatch(x1.cols, x2.cols));
    }
    let d = x1.cols;
    let (m1, m2) = (class_mean(x1), class_mean(x2));
    let diff: Vec<f64> = m1.iter().zip(&m2).map(|(a, b)| a - b).collect();
    if diff.iter().all(|v| *v == 0.0) {
        return Err(AnalyzeError::IdenticalMeans);
    }
    let mut sw = Matrix::zeros(d, d);
    add_scatter(&mut sw, x1, &m1);
    add_scatter(&mut sw, x2, &m2);
    let eps = ridge.unwrap_or(1e-6 * sw.trace() / d as f64);
    let mut w = solve_spd(&sw, &diff, eps)?;
    let n = norm(&w);
    w.iter_mut().for_each(|v| *v /= n);
    // μ₁ − μ₂ lies on the positive side for SPD S_w
    let threshold = 0.5 * (dot(&w, &m1) + dot(&w, &m2));
    Ok(LdaModel { w, threshold, ridge: eps })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairProjection {
    pub id: String,
    pub forward: f64,
    pub reversed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReversalReport {
    /// Cross-validated forward-vs-reversed accuracy in percent.
    pub accuracy: f64,
    pub folds: usize,
    pub fold_accuracy: Vec<f64>,
    /// Folds whose training split had identical class means.
    pub degenerate_folds: usize,
    /// 1-D projections under a model fit on every pair.
    pub projections: Vec<PairProjection>,
    pub model: Option<LdaModel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReversalConfig {
    pub ridge: Option<f64>,
    pub folds: usize,
    /// Seed of the pair-to-fold assignment.
    pub seed: u64,
}

impl Default for ReversalConfig {
    fn default() -> Self {
        Self {
            ridge: None,
            folds: 5,
            seed: 0,
        }
    }
}

/// Video-level vectors (mean over clips) of a set, as matrix rows.
pub fn video_matrix(set: &EmbeddingSet) -> Matrix {
    let mut data = Vec::with_capacity(set.len() * set.dim);
    for i in 0..set.len() {
        let clips = set.records[i].clips;
        let v = set.clip_vectors(i);
        let mut m = vec![0.0; set.dim];
        for row in v.chunks(set.dim) {
            for (a, x) in m.iter_mut().zip(row) {
                *a += x;
            }
        }
        if clips > 1 {
            m.iter_mut().for_each(|a| *a /= clips as f64);
        }
        data.extend(m);
    }
    Matrix::from_vec(set.len(), set.dim, data)
}

fn select(x: &Matrix, rows: &[usize]) -> Matrix {
    let mut data = Vec::with_capacity(rows.len() * x.cols);
    for &r in rows {
        data.extend_from_slice(x.row(r));
    }
    Matrix::from_vec(rows.len(), x.cols, data)
}

/// k-fold cross-validated LDA accuracy at telling each video from its
/// reversed counterpart. Folds split by pair, so no video appears on both
/// sides of a split.
pub fn reversal_separability(
    forward: &EmbeddingSet,
    reversed: &EmbeddingSet,
    cfg: &ReversalConfig,
) -> Result<ReversalReport, AnalyzeError> {
    if forward.len() != reversed.len() {
        return Err(AnalyzeError::Unpaired(format!(
            "{} forward vs {} reversed records",
            forward.len(),
            reversed.len()
        )));
    }
    if forward.dim != reversed.dim {
        return Err(AnalyzeError::DimMismatch(forward.dim, reversed.dim));
    }
    let rev_index: std::collections::HashMap<&str, usize> = reversed
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.as_str(), i))
        .collect();
    let order: Vec<usize> = forward
        .records
        .iter()
        .map(|r| {
            rev_index
                .get(r.id.as_str())
                .copied()
                .ok_or_else(|| AnalyzeError::Unpaired(format!("no reversed record for '{}'", r.id)))
        })
        .collect::<Result<_, _>>()?;
    let n = forward.len();
    if cfg.folds < 2 || cfg.folds > n {
        return Err(AnalyzeError::Config(format!(
            "folds must lie in [2, {n}], got {}",
            cfg.folds
        )));
    }
    let xf = video_matrix(forward);
    let xr = select(&video_matrix(reversed), &order);

    let perm = Rng::new(cfg.seed, 0).permutation(n);
    let mut fold_of = vec![0usize; n];
    for (rank, &p) in perm.iter().enumerate() {
        fold_of[p] = rank % cfg.folds;
    }
    let (mut hits, mut total, mut degenerate) = (0usize, 0usize, 0usize);
    let mut fold_accuracy = Vec::with_capacity(cfg.folds);
    for f in 0..cfg.folds {
        let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == f).collect();
        let model = match fisher_lda(&select(&xf, &train), &select(&xr, &train), cfg.ridge) {
            Ok(m) => Some(m),
            Err(AnalyzeError::IdenticalMeans) => {
                degenerate += 1;
                None
            }
            Err(e) => return Err(e),
        };
        // LDA class 1 is the forward set; a degenerate fold calls everything forward
        let mut fold_hits = 0;
        for &i in &test {
            let (pf, pr) = match &model {
                Some(m) => (m.predict(xf.row(i)), m.predict(xr.row(i))),
                None => (true, true),
            };
            fold_hits += usize::from(pf) + usize::from(!pr);
        }
        hits += fold_hits;
        total += 2 * test.len();
        fold_accuracy.push(100.0 * fold_hits as f64 / (2 * test.len()) as f64);
    }

    let model = match fisher_lda(&xf, &xr, cfg.ridge) {
        Ok(m) => Some(m),
        Err(AnalyzeError::IdenticalMeans) => None,
        Err(e) => return Err(e),
    };
    let projections = forward
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| PairProjection {
            id: r.id.clone(),
            forward: model.as_ref().map_or(0.0, |m| m.project(xf.row(i))),
            reversed: model.as_ref().map_or(0.0, |m| m.project(xr.row(i))),
        })
        .collect();
    Ok(ReversalReport {
        accuracy: 100.0 * hits as f64 / total as f64,
        folds: cfg.folds,
        fold_accuracy,
        degenerate_folds: degenerate,
        projections,
        model,
    })
}
