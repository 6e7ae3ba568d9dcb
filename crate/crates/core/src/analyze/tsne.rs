//! Exact t-SNE (O(n²) per iteration).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalyzeError;
use crate::numkit::{sq_dist, Matrix, Rng};

/// Largest input accepted by the exact gradient.
pub const TSNE_MAX_POINTS: usize = 20_000;

const PERPLEXITY_TOL: f64 = 1e-3;
const BANDWIDTH_ITERS: usize = 200;
const MOMENTUM_EARLY: f64 = 0.5;
const MOMENTUM_LATE: f64 = 0.8;
const INIT_STD: f64 = 1e-4;
const KL_EVERY: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_steps: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_steps: 250,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TsneResult {
    pub coords: Vec<[f64; 2]>,
    /// `(iteration, KL(P‖Q))` sampled every 50 iterations; the first entry
    /// is the initialization and the last the final embedding.
    pub kl_trace: Vec<(usize, f64)>,
    /// Achieved perplexity of each conditional row.
    pub row_perplexity: Vec<f64>,
}

impl TsneResult {
    pub fn initial_kl(&self) -> f64 {
        self.kl_trace.first().map_or(f64::NAN, |t| t.1)
    }

    pub fn final_kl(&self) -> f64 {
        self.kl_trace.last().map_or(f64::NAN, |t| t.1)
    }
}

/// Row-conditional Gaussian affinities `p_{j|i}` (row-major `[n][n]`, zero
/// diagonal) with each row's bandwidth bisected until its perplexity
/// `exp(H)` is within 1e-3 of the target. Returns the rows and the
/// achieved perplexities.
pub fn conditional_probabilities(
    x: &Matrix,
    perplexity: f64,
) -> Result<(Vec<f64>, Vec<f64>), AnalyzeError> {
    let n = x.rows;
    if !(perplexity > 1.0 && perplexity < (n as f64) - 1.0) {
        return Err(AnalyzeError::Config(format!(
            "perplexity {perplexity} must lie in (1, n - 1 = {})",
            n.saturating_sub(1)
        )));
    }
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let d: Vec<f64> = (0..n).map(|j| sq_dist(x.row(i), x.row(j))).collect();
            calibrate_row(&d, i, perplexity)
        })
        .collect();
    let mut p = Vec::with_capacity(n * n);
    let mut achieved = Vec::with_capacity(n);
    for (row, perp) in rows {
        p.extend(row);
        achieved.push(perp);
    }
    Ok((p, achieved))
}

/// Row `p_{·|i}` at precision `beta`, plus its perplexity.
fn row_at(d: &[f64], i: usize, dmin: f64, beta: f64) -> (Vec<f64>, f64) {
    let mut p: Vec<f64> = d
        .iter()
        .enumerate()
        .map(|(j, &dj)| if j == i { 0.0 } else { (-(dj - dmin) * beta).exp() })
        .collect();
    let z: f64 = p.iter().sum();
    let mut h = 0.0;
    for pj in &mut p {
        *pj /= z;
        if *pj > 0.0 {
            h -= *pj * pj.ln();
        }
    }
    (p, h.exp())
}

fn calibrate_row(d: &[f64], i: usize, target: f64) -> (Vec<f64>, f64) {
    let dmin = d
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut beta = 1.0;
    let mut best = row_at(d, i, dmin, beta);
    for _ in 0..BANDWIDTH_ITERS {
        let diff = best.1 - target;
        if diff.abs() <= PERPLEXITY_TOL {
            break;
        }
        // perplexity decreases as beta grows
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = 0.5 * (beta + lo);
        }
        best = row_at(d, i, dmin, beta);
    }
    if (best.1 - target).abs() > PERPLEXITY_TOL {
        log::warn!(
            "t-SNE row {i}: perplexity {:.6} after {BANDWIDTH_ITERS} bisection steps (target {target})",
            best.1
        );
    }
    best
}

fn kl(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let (num, z) = student_t(y);
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let pij = p[i * n + j];
            if i != j && pij > 0.0 {
                total += pij * (pij / (num[i * n + j] / z)).ln();
            }
        }
    }
    total
}

/// Unnormalized `(1 + ‖yᵢ − yⱼ‖²)⁻¹` and its off-diagonal sum.
fn student_t(y: &[[f64; 2]]) -> (Vec<f64>, f64) {
    let n = y.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        let dx = y[i][0] - y[j][0];
                        let dy = y[i][1] - y[j][1];
                        1.0 / (1.0 + dx * dx + dy * dy)
                    }
                })
                .collect()
        })
        .collect();
    let z = rows.iter().map(|r| r.iter().sum::<f64>()).sum();
    (rows.concat(), z)
}

/// 2-D t-SNE embedding of the rows of `x`.
pub fn tsne(x: &Matrix, cfg: &TsneConfig) -> Result<TsneResult, AnalyzeError> {
    let n = x.rows;
    if n < 5 {
        return Err(AnalyzeError::Config(format!("t-SNE needs n >= 5, got {n}")));
    }
    if n > TSNE_MAX_POINTS {
        return Err(AnalyzeError::Config(format!(
            "exact t-SNE is limited to {TSNE_MAX_POINTS} points (got {n}); use PCA"
        )));
    }
    if cfg.iterations < cfg.exaggeration_steps {
        return Err(AnalyzeError::Config(
            "iterations must be >= exaggeration_steps".into(),
        ));
    }
    if !(cfg.learning_rate > 0.0) || !(cfg.early_exaggeration >= 1.0) {
        return Err(AnalyzeError::Config(
            "learning_rate > 0 and early_exaggeration >= 1 required".into(),
        ));
    }
    let (cond, row_perplexity) = conditional_probabilities(x, cfg.perplexity)?;
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = (cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64);
        }
    }

    let mut rng = Rng::new(cfg.seed, 0);
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [INIT_STD * rng.normal(), INIT_STD * rng.normal()])
        .collect();
    let mut velocity = vec![[0.0f64; 2]; n];
    let mut kl_trace = vec![(0, kl(&p, &y))];

    for it in 0..cfg.iterations {
        let exaggerate = if it < cfg.exaggeration_steps {
            cfg.early_exaggeration
        } else {
            1.0
        };
        let momentum = if it < cfg.exaggeration_steps {
            MOMENTUM_EARLY
        } else {
            MOMENTUM_LATE
        };
        let (num, z) = student_t(&y);
        let grad: Vec<[f64; 2]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut g = [0.0; 2];
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let w = num[i * n + j];
                    let coef = (exaggerate * p[i * n + j] - w / z) * w;
                    g[0] += coef * (y[i][0] - y[j][0]);
                    g[1] += coef * (y[i][1] - y[j][1]);
                }
                [4.0 * g[0], 4.0 * g[1]]
            })
            .collect();
        for ((yi, vi), gi) in y.iter_mut().zip(&mut velocity).zip(&grad) {
            for k in 0..2 {
                vi[k] = momentum * vi[k] - cfg.learning_rate * gi[k];
                yi[k] += vi[k];
            }
        }
        let mean = y.iter().fold([0.0; 2], |m, v| [m[0] + v[0], m[1] + v[1]]);
        for yi in &mut y {
            yi[0] -= mean[0] / n as f64;
            yi[1] -= mean[1] / n as f64;
        }
        if (it + 1) % KL_EVERY == 0 || it + 1 == cfg.iterations {
            kl_trace.push((it + 1, kl(&p, &y)));
        }
    }
    Ok(TsneResult {
        coords: y,
        kl_trace,
        row_perplexity,
    })
}
