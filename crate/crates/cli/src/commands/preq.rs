use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use repcomp::dataset::{self, Dataset};
use repcomp::nn::{Head, NetSpec, Targets};
use repcomp::prequential::{self, decompose, PrequentialCurve};

use super::write_json;
use crate::args::PreqArgs;
use crate::settings::{resolve, PreqSettings};
use crate::{config_hash, out_dir, CliResult, Failure};

/// Network sized to the dataset's tokens and target kind.
pub fn net_spec(ds: &Dataset, s: &PreqSettings) -> NetSpec {
    let records = &ds.records;
    let head = match records.targets() {
        Targets::Classes { slots, classes, .. } => Head::Categorical { slots: *slots, classes: *classes },
        Targets::Lattice { dims, lattice, .. } => Head::Gaussian { dims: *dims, lambda_z: lattice.spacing() },
    };
    NetSpec {
        vocab: ds.meta.vocab,
        embedding_dim: s.embedding_dim,
        inputs: records.inputs(),
        hidden: s.hidden.clone(),
        head,
    }
}

pub fn is_symbolic(ds: &Dataset) -> bool {
    matches!(ds.records.targets(), Targets::Classes { .. })
}

/// Runs the prequential estimator on a loaded dataset.
pub fn curve(ds: &Dataset, s: &PreqSettings) -> CliResult<PrequentialCurve> {
    let cfg = s.config(is_symbolic(ds), ds.records.len())?;
    Ok(prequential::prequential_code_length(&ds.records, &net_spec(ds, s), &cfg)?)
}

pub fn curve_json(curve: &PrequentialCurve) -> Value {
    let d = decompose(curve);
    json!({
        "l_preq": curve.total_bits,
        "k_data_given_model": d.k_data_given_model,
        "k_model": d.k_model,
        "k_model_clamped": d.clamped,
        "first_chunk_bits": curve.first_chunk_bits(),
        "final_model_bits": curve.final_model_bits,
        "n_total": curve.n_total,
        "n_effective": curve.n_effective,
        "holdout": curve.holdout,
        "boundaries": curve.schedule.boundaries,
        "seed": curve.seed,
    })
}

pub fn run(args: &PreqArgs, config: Option<&Path>, out: Option<&Path>) -> CliResult<()> {
    let (s, resolved) = resolve(&PreqSettings::default(), config, "preq", &args.preq)?;
    s.schedule()?;
    let dir = out_dir(out)?;
    let ds = dataset::load_dataset(&args.dataset)?;
    let curve = curve(&ds, &s)?;

    let header = json!({ "dataset": args.dataset, "preq": resolved });
    let csv_path = dir.join(format!("{}.csv", args.name));
    let mut f = std::io::BufWriter::new(std::fs::File::create(&csv_path)?);
    writeln!(f, "# {header}")?;
    curve.write_csv(&mut f)?;
    f.flush().map_err(|e| Failure::format(e.to_string()))?;

    let record = json!({
        "dataset": args.dataset,
        "config": header,
        "config_hash": config_hash(&header),
        "decomposition": curve_json(&curve),
    });
    write_json(&dir.join(format!("{}.json", args.name)), &record)?;
    println!("{}", csv_path.display());
    Ok(())
}
