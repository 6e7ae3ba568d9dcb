//! Single cross-attention layer with a learnable query, followed by a
//! linear classifier. No normalization or MLP block.

use serde::{Deserialize, Serialize};

use super::{Head, ProbeError};
use crate::numkit::{ce_loss_grad, softmax_unchecked, Rng};

/// Parameters of the attentive probe. Matrices are row-major `[d][d]`
/// (`Wk`, `Wv`, `Wo`, applied on the right of token rows) and `[C][d]`
/// (`Wc`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentiveHead {
    pub dim: usize,
    pub classes: usize,
    pub heads: usize,
    pub q: Vec<f64>,
    pub wk: Vec<f64>,
    pub wv: Vec<f64>,
    pub wo: Vec<f64>,
    pub wc: Vec<f64>,
    pub bc: Vec<f64>,
}

/// Intermediate values of one forward pass.
#[derive(Clone, Debug)]
pub struct AttentiveForward {
    pub logits: Vec<f64>,
    /// `attn[h][t]`
    pub attn: Vec<Vec<f64>>,
    keys: Vec<f64>,
    values: Vec<f64>,
    pooled: Vec<f64>,
    projected: Vec<f64>,
}

impl AttentiveHead {
    pub fn zeros(dim: usize, classes: usize, heads: usize) -> Result<Self, ProbeError> {
        if heads == 0 || !dim.is_multiple_of(heads) {
            return Err(ProbeError::Config(format!(
                "dim {dim} must be divisible by heads {heads}"
            )));
        }
        Ok(Self {
            dim,
            classes,
            heads,
            q: vec![0.0; dim],
            wk: vec![0.0; dim * dim],
            wv: vec![0.0; dim * dim],
            wo: vec![0.0; dim * dim],
            wc: vec![0.0; classes * dim],
            bc: vec![0.0; classes],
        })
    }

    /// All weights `~ N(0, std²)`, classifier bias zero.
    pub fn init_normal(
        dim: usize,
        classes: usize,
        heads: usize,
        std: f64,
        rng: &mut Rng,
    ) -> Result<Self, ProbeError> {
        let mut h = Self::zeros(dim, classes, heads)?;
        for p in [&mut h.q, &mut h.wk, &mut h.wv, &mut h.wo, &mut h.wc] {
            for v in p.iter_mut() {
                *v = std * rng.normal();
            }
        }
        Ok(h)
    }

    pub fn num_params(&self) -> usize {
        self.dim + 3 * self.dim * self.dim + self.classes * self.dim + self.classes
    }

    /// Parameters in the fixed order `q, Wk, Wv, Wo, Wc, bc`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for p in [&self.q, &self.wk, &self.wv, &self.wo, &self.wc, &self.bc] {
            out.extend_from_slice(p);
        }
        out
    }

    pub fn assign_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params());
        let mut at = 0;
        for p in [
            &mut self.q,
            &mut self.wk,
            &mut self.wv,
            &mut self.wo,
            &mut self.wc,
            &mut self.bc,
        ] {
            let n = p.len();
            p.copy_from_slice(&flat[at..at + n]);
            at += n;
        }
    }

    /// Flat index range holding `bc`, which is excluded from weight decay.
    pub fn bias_range(&self) -> std::ops::Range<usize> {
        let n = self.num_params();
        n - self.classes..n
    }

    pub fn is_finite(&self) -> bool {
        self.flatten().iter().all(|v| v.is_finite())
    }

    /// Forward pass over a `[n_tokens][d]` token matrix.
    pub fn forward(&self, tokens: &[f64]) -> Result<AttentiveForward, ProbeError> {
        let d = self.dim;
        if tokens.is_empty() || !tokens.len().is_multiple_of(d) {
            return Err(ProbeError::DimMismatch {
                expected: d,
                got: tokens.len(),
            });
        }
        let n = tokens.len() / d;
        let dh = d / self.heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let keys = right_mul(tokens, n, &self.wk, d);
        let values = right_mul(tokens, n, &self.wv, d);
        let mut pooled = vec![0.0; d];
        let mut attn = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let cols = h * dh..(h + 1) * dh;
            let scores: Vec<f64> = (0..n)
                .map(|t| {
                    cols.clone()
                        .map(|c| self.q[c] * keys[t * d + c])
                        .sum::<f64>()
                        * scale
                })
                .collect();
            let a = softmax_unchecked(&scores);
            for (t, &w) in a.iter().enumerate() {
                for c in cols.clone() {
                    pooled[c] += w * values[t * d + c];
                }
            }
            attn.push(a);
        }
        let projected = right_mul(&pooled, 1, &self.wo, d);
        let logits: Vec<f64> = (0..self.classes)
            .map(|c| {
                self.bc[c]
                    + self.wc[c * d..(c + 1) * d]
                        .iter()
                        .zip(&projected)
                        .map(|(w, z)| w * z)
                        .sum::<f64>()
            })
            .collect();
        Ok(AttentiveForward {
            logits,
            attn,
            keys,
            values,
            pooled,
            projected,
        })
    }

    /// Cross-entropy loss and its gradient with respect to every parameter,
    /// flattened in [`flatten`](Self::flatten) order.
    pub fn loss_grad(&self, tokens: &[f64], label: usize) -> Result<(f64, Vec<f64>), ProbeError> {
        let mut grad = vec![0.0; self.num_params()];
        let loss = self.accumulate_grad(tokens, label, &mut grad)?;
        Ok((loss, grad))
    }

    /// Adds the gradient for one example into `grad`; returns the loss.
    pub fn accumulate_grad(
        &self,
        tokens: &[f64],
        label: usize,
        grad: &mut [f64],
    ) -> Result<f64, ProbeError> {
        let fwd = self.forward(tokens)?;
        let (loss, dlogits) = ce_loss_grad(&fwd.logits, label)?;
        let d = self.dim;
        let n = tokens.len() / d;
        let dh = d / self.heads;
        let scale = 1.0 / (dh as f64).sqrt();

        let (gq, rest) = grad.split_at_mut(d);
        let (gwk, rest) = rest.split_at_mut(d * d);
        let (gwv, rest) = rest.split_at_mut(d * d);
        let (gwo, rest) = rest.split_at_mut(d * d);
        let (gwc, gbc) = rest.split_at_mut(self.classes * d);

        let mut dz = vec![0.0; d];
        for (c, &g) in dlogits.iter().enumerate() {
            gbc[c] += g;
            let row = &self.wc[c * d..(c + 1) * d];
            for j in 0..d {
                gwc[c * d + j] += g * fwd.projected[j];
                dz[j] += row[j] * g;
            }
        }
        let mut d_pooled = vec![0.0; d];
        for i in 0..d {
            let oi = fwd.pooled[i];
            let mut acc = 0.0;
            for j in 0..d {
                gwo[i * d + j] += oi * dz[j];
                acc += self.wo[i * d + j] * dz[j];
            }
            d_pooled[i] = acc;
        }
        let mut d_keys = vec![0.0; n * d];
        let mut d_values = vec![0.0; n * d];
        for (h, a) in fwd.attn.iter().enumerate() {
            let cols = h * dh..(h + 1) * dh;
            let da: Vec<f64> = (0..n)
                .map(|t| {
                    cols.clone()
                        .map(|c| d_pooled[c] * fwd.values[t * d + c])
                        .sum()
                })
                .collect();
            let mean_da: f64 = a.iter().zip(&da).map(|(w, g)| w * g).sum();
            for t in 0..n {
                let ds = a[t] * (da[t] - mean_da) * scale;
                for c in cols.clone() {
                    d_values[t * d + c] = a[t] * d_pooled[c];
                    gq[c] += ds * fwd.keys[t * d + c];
                    d_keys[t * d + c] = ds * self.q[c];
                }
            }
        }
        for t in 0..n {
            let x = &tokens[t * d..(t + 1) * d];
            for (a, &xa) in x.iter().enumerate() {
                if xa == 0.0 {
                    continue;
                }
                for c in 0..d {
                    gwk[a * d + c] += xa * d_keys[t * d + c];
                    gwv[a * d + c] += xa * d_values[t * d + c];
                }
            }
        }
        Ok(loss)
    }
}

/// `X · W` for `X: [rows][d]`, `W: [d][d]`.
fn right_mul(x: &[f64], rows: usize, w: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * d];
    for r in 0..rows {
        let xr = &x[r * d..(r + 1) * d];
        let or = &mut out[r * d..(r + 1) * d];
        for (a, &xa) in xr.iter().enumerate() {
            if xa == 0.0 {
                continue;
            }
            for (o, wv) in or.iter_mut().zip(&w[a * d..(a + 1) * d]) {
                *o += xa * wv;
            }
        }
    }
    out
}

impl Head for AttentiveHead {
    fn num_classes(&self) -> usize {
        self.classes
    }

    fn logits(&self, view: &[f64]) -> Result<Vec<f64>, ProbeError> {
        Ok(self.forward(view)?.logits)
    }
}
