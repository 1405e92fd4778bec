use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Model, Records};
use crate::error::{Error, Result};
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    /// Validation must improve by more than this many bits per record to
    /// reset patience.
    pub min_delta: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, max_epochs: 500, patience: 10, batch_size: 32, min_delta: 1e-3, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::param("learning rate must be positive"));
        }
        if self.patience == 0 || self.batch_size == 0 {
            return Err(Error::param("patience and batch size must be at least 1"));
        }
        if !(self.min_delta.is_finite() && self.min_delta >= 0.0) {
            return Err(Error::param("min_delta must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Validation bits of the untrained model.
    pub initial_val_bits: f64,
    pub best_val_bits: f64,
    /// 0 when the untrained model was never beaten.
    pub best_epoch: usize,
    pub epochs_run: usize,
}

#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: vec![0.0; n], v: vec![0.0; n] }
    }

    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// Minibatch Adam on the mean loss with early stopping on `validation`.
/// Returns the parameters from the best validation epoch.
pub fn train(model: Model, train: &Records, validation: &Records, cfg: &TrainConfig) -> Result<(Model, TrainReport)> {
    cfg.validate()?;
    model.spec().check_records(train)?;
    model.spec().check_records(validation)?;
    if validation.is_empty() {
        return Err(Error::param("validation set is empty"));
    }
    let per_record = |bits: f64| bits / validation.len() as f64;
    let initial = model.nll_bits(validation)?;
    let mut report = TrainReport { initial_val_bits: initial, best_val_bits: initial, best_epoch: 0, epochs_run: 0 };
    if train.is_empty() {
        return Ok((model, report));
    }
    let mut best = model.clone();
    let mut current = model;
    let mut adam = Adam::new(current.params().len(), cfg.learning_rate);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut rng = rng::stream(cfg.seed, &[tag::BATCHES]);
    let mut since_best = 0;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let records = train.select(batch);
            let (_, mut grad) = current.gradients_unchecked(&records)?;
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam.update(current.params_mut(), &grad);
        }
        report.epochs_run = epoch;
        let val = match current.nll_bits(validation) {
            Ok(v) => v,
            Err(Error::NonFinite(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if !val.is_finite() || (initial > 0.0 && val > 10.0 * initial) {
            return Err(Error::TrainingDiverged { stage: format!("epoch {epoch}"), initial, current: val });
        }
        if per_record(report.best_val_bits - val) > cfg.min_delta {
            report.best_val_bits = val;
            report.best_epoch = epoch;
            best = current.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    Ok((best, report))
}
