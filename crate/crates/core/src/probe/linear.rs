use serde::{Deserialize, Serialize};

use super::{Head, ProbeError};
use crate::numkit::ce_loss_grad;

/// `logits = W·x + b` with `W: [C][d]` row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearHead {
    pub dim: usize,
    pub classes: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl LinearHead {
    pub fn zeros(dim: usize, classes: usize) -> Self {
        Self {
            dim,
            classes,
            w: vec![0.0; dim * classes],
            b: vec![0.0; classes],
        }
    }

    pub fn num_params(&self) -> usize {
        self.classes * (self.dim + 1)
    }

    /// `W` followed by `b`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.w.clone();
        out.extend_from_slice(&self.b);
        out
    }

    pub fn assign_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params());
        let (w, b) = flat.split_at(self.w.len());
        self.w.copy_from_slice(w);
        self.b.copy_from_slice(b);
    }

    pub fn bias_range(&self) -> std::ops::Range<usize> {
        self.w.len()..self.num_params()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, ProbeError> {
        if x.len() != self.dim {
            return Err(ProbeError::DimMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok((0..self.classes)
            .map(|c| {
                self.b[c]
                    + self.w[c * self.dim..(c + 1) * self.dim]
                        .iter()
                        .zip(x)
                        .map(|(w, v)| w * v)
                        .sum::<f64>()
            })
            .collect())
    }

    pub fn loss_grad(&self, x: &[f64], label: usize) -> Result<(f64, Vec<f64>), ProbeError> {
        let mut g = vec![0.0; self.num_params()];
        let loss = self.accumulate_grad(x, label, &mut g)?;
        Ok((loss, g))
    }

    /// Adds `∂loss/∂θ` for one example into `grad`; returns the loss.
    pub fn accumulate_grad(
        &self,
        x: &[f64],
        label: usize,
        grad: &mut [f64],
    ) -> Result<f64, ProbeError> {
        let logits = self.forward(x)?;
        let (loss, dl) = ce_loss_grad(&logits, label)?;
        let (gw, gb) = grad.split_at_mut(self.w.len());
        for (c, &g) in dl.iter().enumerate() {
            gb[c] += g;
            for (gwi, xi) in gw[c * self.dim..(c + 1) * self.dim].iter_mut().zip(x) {
                *gwi += g * xi;
            }
        }
        Ok(loss)
    }
}

impl Head for LinearHead {
    fn num_classes(&self) -> usize {
        self.classes
    }

    fn logits(&self, view: &[f64]) -> Result<Vec<f64>, ProbeError> {
        self.forward(view)
    }
}
