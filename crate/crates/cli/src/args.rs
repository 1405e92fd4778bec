use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "repcomp", version, about = "Measure the compositionality of representations")]
pub struct Cli {
    /// TOML file with one flat section per command; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory all output files are written to.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset and its sidecar metadata.
    Gen {
        #[command(subcommand)]
        generator: GenCommand,
    },
    /// Compute C(Z) or C^L(Z) and topological similarity for a dataset.
    Measure(MeasureArgs),
    /// Run a generator over a parameter grid and several seeds.
    Sweep(SweepArgs),
    /// Prequential code length curve of a dataset.
    Preq(PreqArgs),
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    Lookup {
        #[command(flatten)]
        params: LookupFlags,
        /// Output file name inside --out.
        #[arg(long, default_value = "lookup.jsonl")]
        name: String,
    },
    Grammar {
        #[command(flatten)]
        params: GrammarFlags,
        /// Print the grammar listing to stdout instead of generating data.
        #[arg(long)]
        print_grammar: bool,
        #[arg(long, default_value = "grammar.jsonl")]
        name: String,
    },
    Langsys {
        #[command(flatten)]
        params: LangsysFlags,
        #[arg(long, default_value = "langsys.jsonl")]
        name: String,
    },
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct LookupFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct GrammarFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Terminal parts of speech.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct LangsysFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attributes: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<usize>,
    /// compositional, holistic or noisy
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_swap: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct PreqFlags {
    /// Linear chunk size.
    #[arg(long, conflicts_with = "log_boundaries")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chunk: Option<usize>,
    /// Number of log-spaced chunk boundaries.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_boundaries: Option<usize>,
    /// First log-spaced boundary.
    #[arg(long, requires = "log_boundaries")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_start: Option<usize>,
    /// Records withheld for early stopping.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holdout: Option<usize>,
    #[arg(long = "preq-seed")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preq_seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_delta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding_dim: Option<usize>,
    /// Comma-separated hidden layer sizes.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub warm_start: bool,
    /// Train stages concurrently.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub parallel_stages: bool,
    /// Also fit a model on all coded records.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub final_fit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureMode {
    /// Exact when a generator sidecar is present, prequential otherwise.
    Auto,
    Exact,
    Preq,
}

#[derive(Debug, Clone, Args)]
pub struct MeasureArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value = "measure.json")]
    pub name: String,
    #[command(flatten)]
    pub measure: MeasureFlags,
    #[command(flatten)]
    pub preq: PreqFlags,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct MeasureFlags {
    /// auto uses the exact breakdown when a generator sidecar exists.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<MeasureMode>,
    /// K(Z) in bits for C^L.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kz_bits: Option<f64>,
    /// Symbolic object world `ATTRIBUTES,VALUES` giving K(Z).
    #[arg(long, value_delimiter = ',', num_args = 1)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub world: Option<Vec<usize>>,
    /// hamming or normalized-edit
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sentence_metric: Option<String>,
    /// euclidean, squared-euclidean or cosine-distance
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_metric: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_pairs: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topsim_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Lookup,
    Grammar,
    Langsys,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, default_value = "sweep.csv")]
    pub name: String,
    #[command(flatten)]
    pub sweep: SweepFlags,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct SweepFlags {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorKind>,
    /// Parameter varied along the grid.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<String>>,
    /// Second parameter for a joint grid.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis2: Option<String>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid2: Option<Vec<String>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_seeds: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    /// Fixed parameter `key=value`; repeatable.
    #[arg(long = "set")]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct PreqArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Base name of the curve CSV and decomposition JSON.
    #[arg(long, default_value = "preq")]
    pub name: String,
    #[command(flatten)]
    pub preq: PreqFlags,
}
