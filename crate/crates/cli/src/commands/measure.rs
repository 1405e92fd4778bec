use std::path::Path;

use serde_json::{json, Value};

use repcomp::dataset::{self, Dataset};
use repcomp::langsys::{self, ObjectWorld};
use repcomp::metrics::{self, DistanceConfig};
use repcomp::{compositionality, language_compositionality, ComplexityBreakdown};

use super::{preq, read_json, write_json};
use crate::args::{MeasureArgs, MeasureMode};
use crate::settings::{resolve, MeasureSettings, PreqSettings};
use crate::{config_hash, out_dir, CliResult, Failure};

fn sidecar_breakdown(sidecar: &Value) -> Option<CliResult<ComplexityBreakdown>> {
    let b = sidecar.get("breakdown")?;
    Some(
        serde_json::from_value::<ComplexityBreakdown>(b.clone())
            .map_err(|e| Failure::format(format!("bad sidecar breakdown: {e}")))
            .and_then(|b| Ok(ComplexityBreakdown::new(b.k_pw, b.k_w_given_pw, b.k_f, b.k_z_given_wf)?)),
    )
}

/// K(Z) for C^L: explicit bits, a declared world, or the sidecar's value.
fn k_z(m: &MeasureSettings, sidecar: Option<&Value>) -> CliResult<f64> {
    if let Some(bits) = m.kz_bits {
        if !(bits.is_finite() && bits > 0.0) {
            return Err(Failure::usage(format!("kz_bits must be positive, got {bits}")));
        }
        return Ok(bits);
    }
    if let Some(w) = &m.world {
        let [attributes, values] = w[..] else {
            return Err(Failure::usage("world takes ATTRIBUTES,VALUES"));
        };
        return Ok(langsys::k_z_uniform(&ObjectWorld::new(attributes, values)?)?);
    }
    sidecar
        .and_then(|s| s.get("k_z"))
        .and_then(Value::as_f64)
        .ok_or_else(|| Failure::usage("C^L needs --kz-bits or a declared --world"))
}

/// Computes the metrics record for a loaded dataset.
pub fn measure(ds: &Dataset, sidecar: Option<&Value>, m: &MeasureSettings, p: &PreqSettings) -> CliResult<Value> {
    let breakdown = sidecar.and_then(sidecar_breakdown).transpose()?;
    let exact = match m.mode {
        MeasureMode::Exact => {
            if breakdown.is_none() {
                return Err(Failure::format("exact mode requires generator sidecar"));
            }
            true
        }
        MeasureMode::Auto => breakdown.is_some(),
        MeasureMode::Preq => false,
    };

    let distance = DistanceConfig { sentence: m.sentence_metric, representation: m.z_metric };
    let topsim = metrics::topological_similarity(&ds.tokens()?, &ds.target_values(), &distance, m.max_pairs, m.topsim_seed).ok();

    let mut record = json!({
        "mode": if exact { "exact" } else { "preq" },
        "topsim": topsim,
        "seeds": {
            "dataset": ds.meta.seed,
            "preq": p.preq_seed,
            "topsim": m.topsim_seed,
        },
    });
    if exact {
        let b = breakdown.expect("checked above");
        record["C"] = json!(compositionality(&b)?);
        record["breakdown"] = json!(b);
        record["k_z"] = json!(b.total());
        record["k_z_given_w"] = json!(b.conditional());
    } else {
        let kz = k_z(m, sidecar)?;
        let curve = preq::curve(ds, p)?;
        record["C_L"] = json!(language_compositionality(kz, curve.total_bits)?);
        record["k_z"] = json!(kz);
        record["prequential"] = preq::curve_json(&curve);
    }
    Ok(record)
}

pub fn run(args: &MeasureArgs, config: Option<&Path>, out: Option<&Path>) -> CliResult<()> {
    let (m, m_resolved) = resolve(&MeasureSettings::default(), config, "measure", &args.measure)?;
    let (p, p_resolved) = resolve(&PreqSettings::default(), config, "preq", &args.preq)?;
    p.schedule()?;
    let dir = out_dir(out)?;
    let ds = dataset::load_dataset(&args.dataset)?;
    let sidecar_path = dataset::sidecar_path(&args.dataset);
    let sidecar = if sidecar_path.exists() { Some(read_json(&sidecar_path)?) } else { None };

    let mut record = measure(&ds, sidecar.as_ref(), &m, &p)?;
    let config = json!({ "dataset": args.dataset, "measure": m_resolved, "preq": p_resolved });
    record["config_hash"] = json!(config_hash(&config));
    record["config"] = config;
    let path = dir.join(&args.name);
    write_json(&path, &record)?;
    println!("{}", serde_json::to_string(&record).map_err(|e| Failure::format(e.to_string()))?);
    Ok(())
}
