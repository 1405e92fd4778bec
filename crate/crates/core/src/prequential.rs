//! Prequential code length of `targets | tokens`.
//!
//! Records are shuffled once, a holdout tail is set aside for early stopping,
//! and the remaining records are cut into chunks. The first chunk is charged
//! its raw cost; every later chunk is charged its code length under a model
//! trained on everything before it.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{self, Model, NetSpec, Records, Targets, TrainConfig, TrainReport};
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScheduleKind {
    /// Boundaries every `step` records.
    Linear { step: usize },
    /// `n_boundaries` boundaries spaced evenly in `log10` from `start` to N.
    Log10 { n_boundaries: usize, start: usize },
}

/// Chunk `i` covers records `[boundaries[i-1], boundaries[i])`, with an
/// implicit `0` before the first boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkSchedule {
    pub kind: ScheduleKind,
    pub boundaries: Vec<usize>,
}

impl ChunkSchedule {
    pub fn new(kind: ScheduleKind, n: usize) -> Result<Self> {
        let boundaries = match kind {
            ScheduleKind::Linear { step } => {
                if step == 0 || step >= n {
                    return Err(Error::param(format!("chunk step {step} must be in [1, {n})")));
                }
                let mut b: Vec<usize> = (1..).map(|i| i * step).take_while(|&v| v < n).collect();
                b.push(n);
                b
            }
            ScheduleKind::Log10 { n_boundaries, start } => {
                if n_boundaries < 2 || start == 0 || start >= n {
                    return Err(Error::param(format!(
                        "log schedule needs at least 2 boundaries and 1 <= start ({start}) < N ({n})"
                    )));
                }
                let (lo, hi) = ((start as f64).log10(), (n as f64).log10());
                let mut b: Vec<usize> = (0..n_boundaries)
                    .map(|i| {
                        let t = i as f64 / (n_boundaries - 1) as f64;
                        (10f64.powf(lo + t * (hi - lo)).round() as usize).clamp(1, n)
                    })
                    .collect();
                b.dedup();
                *b.last_mut().unwrap() = n;
                b
            }
        };
        Self::from_boundaries(kind, boundaries)
    }

    pub fn from_boundaries(kind: ScheduleKind, boundaries: Vec<usize>) -> Result<Self> {
        if boundaries.len() < 2 || boundaries[0] == 0 || boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("boundaries must be at least two strictly increasing positive indices"));
        }
        Ok(Self { kind, boundaries })
    }

    pub fn n(&self) -> usize {
        *self.boundaries.last().unwrap()
    }

    /// `(start, end)` of every chunk, the raw-coded first chunk included.
    pub fn chunks(&self) -> Vec<(usize, usize)> {
        std::iter::once(0).chain(self.boundaries.iter().copied()).zip(self.boundaries.iter().copied()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrequentialConfig {
    pub schedule: ScheduleKind,
    /// Records withheld for early stopping and excluded from coding.
    pub holdout: usize,
    pub seed: u64,
    pub train: TrainConfig,
    /// Continue from the previous stage's model instead of re-initializing.
    pub warm_start: bool,
    /// Train independent stages concurrently.
    pub parallel_stages: bool,
    /// Also fit on all coded records and report their code length.
    pub final_fit: bool,
}

impl Default for PrequentialConfig {
    fn default() -> Self {
        Self {
            schedule: ScheduleKind::Linear { step: 50 },
            holdout: 400,
            seed: 0,
            train: TrainConfig::default(),
            warm_start: false,
            parallel_stages: false,
            final_fit: false,
        }
    }
}

/// Holdout for external datasets: 2.5% of N, capped at 10,000.
pub fn external_holdout(n: usize) -> usize {
    ((n as f64 * 0.025).round() as usize).clamp(1, 10_000)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkCost {
    pub start: usize,
    pub end: usize,
    pub bits: f64,
    /// Validation bits per record of the model that coded this chunk; `None`
    /// for the raw-coded first chunk.
    pub val_bits_per_record: Option<f64>,
    pub report: Option<TrainReport>,
}

impl ChunkCost {
    pub fn records(&self) -> usize {
        self.end - self.start
    }

    pub fn bits_per_record(&self) -> f64 {
        self.bits / self.records() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrequentialCurve {
    pub schedule: ChunkSchedule,
    pub chunks: Vec<ChunkCost>,
    pub total_bits: f64,
    /// Code length of all coded records under a model fit to all of them.
    pub final_model_bits: Option<f64>,
    pub n_total: usize,
    pub n_effective: usize,
    pub holdout: usize,
    pub seed: u64,
}

impl PrequentialCurve {
    pub fn first_chunk_bits(&self) -> f64 {
        self.chunks[0].bits
    }

    pub fn trained_chunk_bits(&self) -> f64 {
        self.chunks[1..].iter().map(|c| c.bits).sum()
    }

    /// Curve as CSV with columns
    /// `boundary,n_records_in_chunk,bits_chunk,bits_per_record,val_bits_per_record,seed`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "boundary,n_records_in_chunk,bits_chunk,bits_per_record,val_bits_per_record,seed")?;
        for c in &self.chunks {
            let val = c.val_bits_per_record.map_or(String::new(), |v| v.to_string());
            writeln!(w, "{},{},{},{},{},{}", c.end, c.records(), c.bits, c.bits_per_record(), val, self.seed)?;
        }
        Ok(())
    }
}

/// Raw code length of the first chunk: uniform over classes, or a standard
/// normal on the target lattice.
pub fn raw_bits(records: &Records) -> f64 {
    match records.targets() {
        Targets::Classes { slots, classes, .. } => records.len() as f64 * nn::uniform_bits_per_record(*slots, *classes),
        Targets::Lattice { lattice, data, .. } => nn::standard_normal_bits(data, *lattice),
    }
}

fn relabel(e: Error, stage: usize, before: usize) -> Error {
    match e {
        Error::TrainingDiverged { stage: inner, initial, current } => Error::TrainingDiverged {
            stage: format!("stage {stage} (trained on {before} records, {inner})"),
            initial,
            current,
        },
        e => e,
    }
}

pub fn prequential_code_length(records: &Records, spec: &NetSpec, cfg: &PrequentialConfig) -> Result<PrequentialCurve> {
    spec.check_records(records)?;
    cfg.train.validate()?;
    let n = records.len();
    if cfg.holdout == 0 || cfg.holdout >= n {
        return Err(Error::param(format!("holdout {} must be in [1, {n})", cfg.holdout)));
    }
    let n_eff = n - cfg.holdout;
    let schedule = ChunkSchedule::new(cfg.schedule, n_eff)?;

    let mut order: Vec<usize> = (0..n).collect();
    {
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng::stream(cfg.seed, &[tag::DATA_ORDER]));
    }
    let shuffled = records.select(&order);
    let coded = shuffled.range(0, n_eff);
    let holdout = shuffled.range(n_eff, n);

    let stage_train = |i: usize| TrainConfig { seed: rng::derive_seed(cfg.seed, &[tag::BATCHES, i as u64]), ..cfg.train };
    let stage_init = |i: usize| Model::init(spec, rng::derive_seed(cfg.seed, &[tag::INIT, i as u64]));

    let spans = schedule.chunks();
    let (s0, e0) = spans[0];
    let mut chunks = vec![ChunkCost { start: s0, end: e0, bits: raw_bits(&coded.range(s0, e0)), val_bits_per_record: None, report: None }];

    let run_stage = |i: usize, init: Model| -> Result<(ChunkCost, Model)> {
        let (start, end) = spans[i];
        let (model, report) =
            nn::train(init, &coded.range(0, start), &holdout, &stage_train(i)).map_err(|e| relabel(e, i, start))?;
        let bits = model.nll_bits(&coded.range(start, end)).map_err(|e| relabel(e, i, start))?;
        let cost = ChunkCost {
            start,
            end,
            bits,
            val_bits_per_record: Some(report.best_val_bits / holdout.len() as f64),
            report: Some(report),
        };
        Ok((cost, model))
    };

    if cfg.warm_start {
        let mut prev: Option<Model> = None;
        for i in 1..spans.len() {
            let init = match prev.take() {
                Some(m) => m,
                None => stage_init(i)?,
            };
            let (cost, model) = run_stage(i, init)?;
            chunks.push(cost);
            prev = Some(model);
        }
    } else if cfg.parallel_stages {
        let costs: Vec<ChunkCost> = (1..spans.len())
            .into_par_iter()
            .map(|i| run_stage(i, stage_init(i)?).map(|(c, _)| c))
            .collect::<Result<_>>()?;
        chunks.extend(costs);
    } else {
        for i in 1..spans.len() {
            chunks.push(run_stage(i, stage_init(i)?)?.0);
        }
    }

    let final_model_bits = if cfg.final_fit {
        let i = spans.len();
        let (model, _) = nn::train(stage_init(i)?, &coded, &holdout, &stage_train(i)).map_err(|e| relabel(e, i, n_eff))?;
        Some(model.nll_bits(&coded)?)
    } else {
        None
    };

    let total_bits = chunks.iter().map(|c| c.bits).sum();
    Ok(PrequentialCurve { schedule, chunks, total_bits, final_model_bits, n_total: n, n_effective: n_eff, holdout: cfg.holdout, seed: cfg.seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub k_data_given_model: f64,
    pub k_model: f64,
    /// The curve dipped below its last level, so `K_model` was clamped at 0.
    pub clamped: bool,
}

/// Splits `L_preq` into data cost at the final per-record level and the
/// area above it.
pub fn decompose(curve: &PrequentialCurve) -> Decomposition {
    let last = curve.chunks.last().expect("curve has chunks");
    let k_data_given_model = curve.n_effective as f64 * last.bits_per_record();
    let raw = curve.total_bits - k_data_given_model;
    Decomposition { k_data_given_model, k_model: raw.max(0.0), clamped: raw < 0.0 }
}
