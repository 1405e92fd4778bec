//! Small feed-forward network used as the prequential learner.
//!
//! Tokens are embedded, concatenated, passed through ReLU layers and mapped
//! either to per-slot logits or to Gaussian means with a learned per-dimension
//! log-std. All parameters live in one flat vector so the optimizer and the
//! checkpoint format do not need to know the architecture.

mod checkpoint;
mod records;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use records::{Records, Targets};
pub use train::{train, Adam, TrainConfig, TrainReport};

use std::f64::consts::{LN_2, PI};

use ndarray::{s, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::codelen::Lattice;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Head {
    Categorical { slots: usize, classes: usize },
    /// Mean per dimension plus a learned per-dimension log-std; code lengths
    /// are taken on the lattice of spacing `lambda_z`.
    Gaussian { dims: usize, lambda_z: f64 },
}

impl Head {
    pub fn outputs(&self) -> usize {
        match *self {
            Head::Categorical { slots, classes } => slots * classes,
            Head::Gaussian { dims, .. } => dims,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    pub vocab: usize,
    pub embedding_dim: usize,
    /// Tokens per input record.
    pub inputs: usize,
    pub hidden: Vec<usize>,
    pub head: Head,
}

impl NetSpec {
    pub fn new(vocab: usize, inputs: usize, head: Head) -> Self {
        Self { vocab, embedding_dim: 64, inputs, hidden: vec![256, 256], head }
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab == 0 || self.embedding_dim == 0 || self.inputs == 0 {
            return Err(Error::param("vocab, embedding size and input length must be positive"));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::param("at least one hidden layer of positive size is required"));
        }
        match self.head {
            Head::Categorical { slots, classes } if slots == 0 || classes == 0 => {
                Err(Error::param("categorical head needs positive slots and classes"))
            }
            Head::Gaussian { dims, lambda_z } if dims == 0 || !(lambda_z.is_finite() && lambda_z > 0.0) => {
                Err(Error::param("gaussian head needs positive dims and lattice spacing"))
            }
            _ => Ok(()),
        }
    }

    /// Checks that `records` has the shape this network expects.
    pub fn check_records(&self, records: &Records) -> Result<()> {
        if records.inputs() != self.inputs {
            return Err(Error::contract(format!(
                "records have {} tokens, network expects {}",
                records.inputs(),
                self.inputs
            )));
        }
        if records.tokens().iter().any(|&t| t as usize >= self.vocab) {
            return Err(Error::contract("token outside the network vocabulary"));
        }
        match (&self.head, records.targets()) {
            (Head::Categorical { slots, classes }, Targets::Classes { slots: s, classes: c, .. })
                if slots == s && c <= classes =>
            {
                Ok(())
            }
            (Head::Gaussian { dims, lambda_z }, Targets::Lattice { dims: d, lattice, .. })
                if dims == d && lattice.spacing() == *lambda_z =>
            {
                Ok(())
            }
            _ => Err(Error::contract("target kind or shape does not match the network head")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Dense {
    w: usize,
    b: usize,
    fan_in: usize,
    fan_out: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Layout {
    embedding: usize,
    layers: Vec<Dense>,
    output: Dense,
    log_std: Option<usize>,
    total: usize,
}

impl Layout {
    fn new(spec: &NetSpec) -> Self {
        let mut off = spec.vocab * spec.embedding_dim;
        let mut dense = |fan_in: usize, fan_out: usize| {
            let d = Dense { w: off, b: off + fan_in * fan_out, fan_in, fan_out };
            off += fan_in * fan_out + fan_out;
            d
        };
        let mut fan_in = spec.inputs * spec.embedding_dim;
        let mut layers = Vec::new();
        for &h in &spec.hidden {
            layers.push(dense(fan_in, h));
            fan_in = h;
        }
        let output = dense(fan_in, spec.head.outputs());
        let log_std = match spec.head {
            Head::Gaussian { dims, .. } => {
                let o = off;
                off += dims;
                Some(o)
            }
            Head::Categorical { .. } => None,
        };
        Self { embedding: 0, layers, output, log_std, total: off }
    }
}

/// Parameter count of `spec`.
pub fn parameter_count(spec: &NetSpec) -> usize {
    Layout::new(spec).total
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: NetSpec,
    layout: Layout,
    params: Vec<f64>,
}

struct Forward {
    /// Input to each dense layer followed by the network output.
    acts: Vec<Array2<f64>>,
}

impl Model {
    /// Embeddings standard normal, weights uniform in `±1/sqrt(fan_in)`,
    /// biases and log-stds zero.
    pub fn init(spec: &NetSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let layout = Layout::new(spec);
        let mut params = vec![0.0; layout.total];
        let mut rng = rng::stream(seed, &[rng::tag::INIT]);
        for p in &mut params[..spec.vocab * spec.embedding_dim] {
            *p = rng.sample(StandardNormal);
        }
        for d in layout.layers.iter().chain(std::iter::once(&layout.output)) {
            let bound = 1.0 / (d.fan_in as f64).sqrt();
            for p in &mut params[d.w..d.b] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Ok(Self { spec: spec.clone(), layout, params })
    }

    pub fn from_params(spec: &NetSpec, params: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        let layout = Layout::new(spec);
        if params.len() != layout.total {
            return Err(Error::contract(format!("expected {} parameters, got {}", layout.total, params.len())));
        }
        Ok(Self { spec: spec.clone(), layout, params })
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Row-major `vocab × embedding_dim` block.
    pub fn embeddings(&self) -> &[f64] {
        &self.params[..self.spec.vocab * self.spec.embedding_dim]
    }

    pub fn embeddings_mut(&mut self) -> &mut [f64] {
        let n = self.spec.vocab * self.spec.embedding_dim;
        &mut self.params[..n]
    }

    /// Output layer weights (`fan_in × outputs`) and biases.
    pub fn output_layer_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        let d = &self.layout.output;
        let (w, rest) = self.params[d.w..].split_at_mut(d.b - d.w);
        (w, &mut rest[..d.fan_out])
    }

    pub fn log_std_mut(&mut self) -> Option<&mut [f64]> {
        let off = self.layout.log_std?;
        let Head::Gaussian { dims, .. } = self.spec.head else { return None };
        Some(&mut self.params[off..off + dims])
    }

    fn weights(&self, d: &Dense) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((d.fan_in, d.fan_out), &self.params[d.w..d.b]).expect("layout")
    }

    fn forward(&self, tokens: &[u32], n: usize) -> Forward {
        let e = self.spec.embedding_dim;
        let m = self.spec.inputs;
        let mut x = Array2::<f64>::zeros((n, m * e));
        let emb = self.embeddings();
        for (i, mut row) in x.axis_iter_mut(Axis(0)).enumerate() {
            let row = row.as_slice_mut().expect("contiguous");
            for j in 0..m {
                let t = tokens[i * m + j] as usize;
                row[j * e..(j + 1) * e].copy_from_slice(&emb[t * e..(t + 1) * e]);
            }
        }
        let mut acts = vec![x];
        for d in &self.layout.layers {
            let mut h = acts.last().unwrap().dot(&self.weights(d));
            let b = &self.params[d.b..d.b + d.fan_out];
            for mut row in h.axis_iter_mut(Axis(0)) {
                for (v, &bb) in row.iter_mut().zip(b) {
                    *v = (*v + bb).max(0.0);
                }
            }
            acts.push(h);
        }
        let d = &self.layout.output;
        let mut out = acts.last().unwrap().dot(&self.weights(d));
        let b = &self.params[d.b..d.b + d.fan_out];
        for mut row in out.axis_iter_mut(Axis(0)) {
            for (v, &bb) in row.iter_mut().zip(b) {
                *v += bb;
            }
        }
        acts.push(out);
        Forward { acts }
    }

    /// Per-record loss in nats and, when `grad` is given, d(total loss)/d(output).
    fn head_loss(&self, out: &Array2<f64>, records: &Records, rows: std::ops::Range<usize>, mut dout: Option<&mut Array2<f64>>) -> Vec<f64> {
        let mut losses = vec![0.0; rows.len()];
        match (self.spec.head, records.targets()) {
            (Head::Categorical { classes, .. }, Targets::Classes { slots, data, .. }) => {
                for (i, r) in rows.enumerate() {
                    let logits = out.row(i);
                    let logits = logits.as_slice().expect("contiguous");
                    let mut loss = 0.0;
                    for s in 0..*slots {
                        let l = &logits[s * classes..(s + 1) * classes];
                        let max = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        let sum: f64 = l.iter().map(|&v| (v - max).exp()).sum();
                        let lse = max + sum.ln();
                        let y = data[r * slots + s] as usize;
                        loss += lse - l[y];
                        if let Some(g) = dout.as_deref_mut() {
                            let mut grow = g.row_mut(i);
                            let grow = grow.as_slice_mut().expect("contiguous");
                            for c in 0..classes {
                                grow[s * classes + c] = (l[c] - lse).exp();
                            }
                            grow[s * classes + y] -= 1.0;
                        }
                    }
                    losses[i] = loss;
                }
            }
            (Head::Gaussian { dims, lambda_z }, Targets::Lattice { data, .. }) => {
                let off = self.layout.log_std.expect("gaussian layout");
                let log_std = &self.params[off..off + dims];
                let c = 0.5 * (2.0 * PI).ln() - lambda_z.ln();
                for (i, r) in rows.enumerate() {
                    let mean = out.row(i);
                    let mut loss = 0.0;
                    for d in 0..dims {
                        let z = data[r * dims + d] as f64 * lambda_z;
                        let inv_var = (-2.0 * log_std[d]).exp();
                        let diff = z - mean[d];
                        loss += c + log_std[d] + 0.5 * diff * diff * inv_var;
                        if let Some(g) = dout.as_deref_mut() {
                            g[[i, d]] = -diff * inv_var;
                        }
                    }
                    losses[i] = loss;
                }
            }
            _ => unreachable!("records checked against the head"),
        }
        losses
    }

    /// ReLU on/off state of every hidden unit for every record, row-major by
    /// layer then record.
    pub fn active_units(&self, records: &Records) -> Result<Vec<bool>> {
        self.spec.check_records(records)?;
        let f = self.forward(records.tokens(), records.len());
        let hidden = &f.acts[1..f.acts.len() - 1];
        Ok(hidden.iter().flat_map(|h| h.iter().map(|&v| v > 0.0)).collect())
    }

    /// Code length of each record in bits.
    pub fn nll_bits_per_record(&self, records: &Records) -> Result<Vec<f64>> {
        self.spec.check_records(records)?;
        const BLOCK: usize = 1024;
        let mut out = Vec::with_capacity(records.len());
        let m = self.spec.inputs;
        let mut start = 0;
        while start < records.len() {
            let end = (start + BLOCK).min(records.len());
            let f = self.forward(&records.tokens()[start * m..end * m], end - start);
            let nats = self.head_loss(f.acts.last().unwrap(), records, start..end, None);
            out.extend(nats.into_iter().map(|v| v / LN_2));
            start = end;
        }
        if let Some(bad) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("record {bad} has non-finite code length")));
        }
        Ok(out)
    }

    /// Total code length in bits of `records`.
    pub fn nll_bits(&self, records: &Records) -> Result<f64> {
        Ok(self.nll_bits_per_record(records)?.iter().sum())
    }

    /// Gradient of the total loss over `records`, in nats. Multiply by
    /// `1/ln 2` for bits.
    pub fn gradients(&self, records: &Records) -> Result<(f64, Vec<f64>)> {
        self.spec.check_records(records)?;
        if records.is_empty() {
            return Err(Error::contract("empty batch"));
        }
        self.gradients_unchecked(records)
    }

    pub(crate) fn gradients_unchecked(&self, records: &Records) -> Result<(f64, Vec<f64>)> {
        let n = records.len();
        let f = self.forward(records.tokens(), n);
        let out = f.acts.last().unwrap();
        let mut dout = Array2::<f64>::zeros(out.raw_dim());
        let losses = self.head_loss(out, records, 0..n, Some(&mut dout));
        let loss: f64 = losses.iter().sum();
        if !loss.is_finite() {
            return Err(Error::NonFinite("loss is not finite in the forward pass".into()));
        }
        let mut grad = vec![0.0; self.params.len()];

        if let (Some(off), Head::Gaussian { dims, lambda_z }, Targets::Lattice { data, .. }) =
            (self.layout.log_std, self.spec.head, records.targets())
        {
            for d in 0..dims {
                let inv_var = (-2.0 * self.params[off + d]).exp();
                let mut g = 0.0;
                for i in 0..n {
                    let diff = data[i * dims + d] as f64 * lambda_z - out[[i, d]];
                    g += 1.0 - diff * diff * inv_var;
                }
                grad[off + d] = g;
            }
        }

        let dense: Vec<&Dense> = self.layout.layers.iter().chain(std::iter::once(&self.layout.output)).collect();
        let mut delta = dout;
        for (li, d) in dense.iter().enumerate().rev() {
            let input = &f.acts[li];
            let gw = input.t().dot(&delta);
            grad[d.w..d.b].copy_from_slice(gw.as_standard_layout().as_slice().expect("contiguous"));
            let gb = delta.sum_axis(Axis(0));
            grad[d.b..d.b + d.fan_out].copy_from_slice(gb.as_slice().expect("contiguous"));
            let mut back = delta.dot(&self.weights(d).t());
            if li > 0 {
                // ReLU mask from the layer's own output
                back.zip_mut_with(input, |g, &a| {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                });
            }
            delta = back;
        }
        let e = self.spec.embedding_dim;
        let m = self.spec.inputs;
        for i in 0..n {
            for j in 0..m {
                let t = records.tokens()[i * m + j] as usize;
                let src = delta.slice(s![i, j * e..(j + 1) * e]);
                for (g, &v) in grad[t * e..(t + 1) * e].iter_mut().zip(src.iter()) {
                    *g += v;
                }
            }
        }
        Ok((loss, grad))
    }
}

/// Bits per record for uniform predictions over `classes` in each of `slots`.
pub fn uniform_bits_per_record(slots: usize, classes: usize) -> f64 {
    slots as f64 * (classes as f64).log2()
}

/// Code length of lattice targets under a standard normal on `lattice`.
pub fn standard_normal_bits(indices: &[i64], lattice: Lattice) -> f64 {
    indices
        .iter()
        .map(|&k| crate::codelen::gaussian_bin_bits(lattice.value(k), 0.0, 1.0, lattice.spacing()))
        .sum()
}
