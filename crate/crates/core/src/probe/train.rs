use serde::{Deserialize, Serialize};

use super::{check_compatible, AttentiveHead, LinearHead, Optimizer, ProbeError, TrainConfig};
use crate::numkit::{chunked_sum, LrSchedule, Rng};
use crate::store::EmbeddingSet;

// RNG stream layout under the run seed.
const STREAM_SHUFFLE: u64 = 0;
const STREAM_CLIPS: u64 = 1 << 32;
const STREAM_INIT: u64 = 1 << 48;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    /// Mean minibatch loss at the parameters before each step.
    pub step_loss: Vec<f64>,
    pub epoch_loss: Vec<f64>,
    pub steps_per_epoch: usize,
}

/// Parameter vector plus gradient oracle, as seen by the optimizer loop.
trait Trainable: Sync {
    fn flat(&self) -> Vec<f64>;
    fn set_flat(&mut self, p: &[f64]);
    fn bias(&self) -> std::ops::Range<usize>;
    fn add_grad(&self, view: &[f64], label: usize, grad: &mut [f64]) -> Result<f64, ProbeError>;
}

impl Trainable for LinearHead {
    fn flat(&self) -> Vec<f64> {
        self.flatten()
    }
    fn set_flat(&mut self, p: &[f64]) {
        self.assign_flat(p)
    }
    fn bias(&self) -> std::ops::Range<usize> {
        self.bias_range()
    }
    fn add_grad(&self, view: &[f64], label: usize, grad: &mut [f64]) -> Result<f64, ProbeError> {
        self.accumulate_grad(view, label, grad)
    }
}

impl Trainable for AttentiveHead {
    fn flat(&self) -> Vec<f64> {
        self.flatten()
    }
    fn set_flat(&mut self, p: &[f64]) {
        self.assign_flat(p)
    }
    fn bias(&self) -> std::ops::Range<usize> {
        self.bias_range()
    }
    fn add_grad(&self, view: &[f64], label: usize, grad: &mut [f64]) -> Result<f64, ProbeError> {
        self.accumulate_grad(view, label, grad)
    }
}

/// Trains a zero-initialized linear head on (token-pooled) clip vectors.
pub fn train_linear_probe(
    train: &EmbeddingSet,
    cfg: &TrainConfig,
) -> Result<(LinearHead, TrainTrace), ProbeError> {
    let head = LinearHead::zeros(train.dim, train.num_classes());
    let dim = train.dim;
    let pooled: Vec<Vec<f64>> = (0..train.len()).map(|i| train.clip_vectors(i)).collect();
    fit(head, train, cfg, |i, clip| {
        pooled[i][clip * dim..(clip + 1) * dim].to_vec()
    })
}

/// Trains an attentive head on clip token matrices.
pub fn train_attentive_probe(
    train: &EmbeddingSet,
    cfg: &TrainConfig,
) -> Result<(AttentiveHead, TrainTrace), ProbeError> {
    cfg.validate()?;
    let mut rng = Rng::new(cfg.seed, STREAM_INIT);
    let head = AttentiveHead::init_normal(
        train.dim,
        train.num_classes(),
        cfg.heads,
        cfg.init_std,
        &mut rng,
    )?;
    fit(head, train, cfg, |i, clip| train.clip_tokens(i, clip))
}

fn fit<H, V>(
    mut head: H,
    train: &EmbeddingSet,
    cfg: &TrainConfig,
    view: V,
) -> Result<(H, TrainTrace), ProbeError>
where
    H: Trainable,
    V: Fn(usize, usize) -> Vec<f64> + Sync,
{
    cfg.validate()?;
    if train.is_empty() {
        return Err(ProbeError::Data("training set is empty".into()));
    }
    let classes = train.num_classes();
    check_compatible(train.dim, classes, train)?;
    let labels = train
        .labels()
        .ok_or_else(|| ProbeError::Data("training set has unlabeled records".into()))?;
    if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
        return Err(ProbeError::Data(format!("label {bad} out of range")));
    }

    let n = train.len();
    let steps_per_epoch = n.div_ceil(cfg.batch_size);
    let schedule = LrSchedule::new(
        cfg.lr,
        cfg.final_lr,
        cfg.warmup_epochs * steps_per_epoch,
        cfg.epochs * steps_per_epoch,
    )?;
    let mut params = head.flat();
    let p = params.len();
    let bias = head.bias();
    let mut opt = OptState::new(cfg.optimizer, p);
    let mut trace = TrainTrace {
        steps_per_epoch,
        ..Default::default()
    };

    let mut step = 0;
    for epoch in 0..cfg.epochs {
        let order = Rng::new(cfg.seed, STREAM_SHUFFLE + epoch as u64).permutation(n);
        let mut clip_rng = Rng::new(cfg.seed, STREAM_CLIPS + epoch as u64);
        let clips: Vec<usize> = train.records.iter().map(|r| clip_rng.below(r.clips)).collect();
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let b = batch.len();
            let sums = chunked_sum(b, p + 1, |j, acc| {
                let i = batch[j];
                let (grad, loss) = acc.split_at_mut(p);
                loss[0] += head
                    .add_grad(&view(i, clips[i]), labels[i], grad)
                    .unwrap_or(f64::NAN);
            });
            let loss = sums[p] / b as f64;
            if !loss.is_finite() {
                return Err(ProbeError::Diverged { step, loss });
            }
            let mut grad: Vec<f64> = sums[..p].iter().map(|g| g / b as f64).collect();
            let lr = schedule.lr_at(step)?;
            opt.step(&mut params, &mut grad, lr, cfg.weight_decay, &bias);
            if let Some(bad) = params.iter().find(|v| !v.is_finite()) {
                return Err(ProbeError::Diverged { step, loss: *bad });
            }
            head.set_flat(&params);
            trace.step_loss.push(loss);
            epoch_loss += loss * b as f64;
            step += 1;
        }
        trace.epoch_loss.push(epoch_loss / n as f64);
        log::debug!("epoch {epoch}: loss {:.6}", epoch_loss / n as f64);
    }
    Ok((head, trace))
}

struct OptState {
    kind: Optimizer,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl OptState {
    fn new(kind: Optimizer, p: usize) -> Self {
        Self {
            kind,
            m: vec![0.0; p],
            v: vec![0.0; p],
            t: 0,
        }
    }

    fn step(
        &mut self,
        params: &mut [f64],
        grad: &mut [f64],
        lr: f64,
        wd: f64,
        bias: &std::ops::Range<usize>,
    ) {
        self.t += 1;
        match self.kind {
            Optimizer::Sgd { momentum } => {
                for i in 0..params.len() {
                    if !bias.contains(&i) {
                        grad[i] += wd * params[i];
                    }
                    self.m[i] = momentum * self.m[i] + grad[i];
                    params[i] -= lr * self.m[i];
                }
            }
            Optimizer::AdamW { beta1, beta2, eps } => {
                let c1 = 1.0 - beta1.powi(self.t);
                let c2 = 1.0 - beta2.powi(self.t);
                for i in 0..params.len() {
                    if !bias.contains(&i) {
                        params[i] -= lr * wd * params[i];
                    }
                    self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * grad[i];
                    self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * grad[i] * grad[i];
                    params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + eps);
                }
            }
        }
    }
}
