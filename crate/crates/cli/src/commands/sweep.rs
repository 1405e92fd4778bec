use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use repcomp::dataset::Dataset;
use repcomp::grammar::{self, GrammarParams};
use repcomp::langsys::{self, LanguageSystem, ObjectWorld};
use repcomp::lookup::{self, LookupParams};
use repcomp::metrics::{self, DistanceConfig, DEFAULT_MAX_PAIRS};
use repcomp::rng::{self, tag};
use repcomp::tokens::TokenMatrix;
use repcomp::{compositionality, language_compositionality, ComplexityBreakdown, QuantizedMatrix};

use super::preq;
use crate::args::{GeneratorKind, SweepArgs};
use crate::settings::{resolve, LangsysSettings, PreqSettings, SweepSettings};
use crate::{out_dir, CliResult, Failure, EXIT_NUMERICAL};

pub const CSV_COLUMNS: [&str; 13] = [
    "kind", "value", "value2", "seed_index", "seed", "c", "topsim", "k_pw", "k_w_given_pw", "k_f", "k_z_given_wf", "l_preq", "error",
];

/// Metrics of one generated representation.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RowMetrics {
    /// `C(Z)`, or `C^L(Z)` for language systems.
    pub c: f64,
    pub topsim: Option<f64>,
    pub breakdown: Option<ComplexityBreakdown>,
    pub l_preq: Option<f64>,
}

impl RowMetrics {
    fn columns(&self) -> [Option<f64>; 7] {
        let b = self.breakdown;
        [
            Some(self.c),
            self.topsim,
            b.map(|b| b.k_pw),
            b.map(|b| b.k_w_given_pw),
            b.map(|b| b.k_f),
            b.map(|b| b.k_z_given_wf),
            self.l_preq,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub value2: Option<String>,
    pub seed_index: usize,
    pub seed: u64,
    pub outcome: Result<RowMetrics, String>,
}

/// Mean and sample standard deviation of each metric column at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSummary {
    pub value: String,
    pub value2: Option<String>,
    pub mean: [Option<f64>; 7],
    pub std: [Option<f64>; 7],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub config: Value,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }

    /// Grid points in order of first appearance.
    pub fn summaries(&self) -> Vec<GridSummary> {
        let mut keys: Vec<(String, Option<String>)> = Vec::new();
        for r in &self.rows {
            let k = (r.value.clone(), r.value2.clone());
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        keys.into_iter()
            .map(|(value, value2)| {
                let ok: Vec<[Option<f64>; 7]> = self
                    .rows
                    .iter()
                    .filter(|r| r.value == value && r.value2 == value2)
                    .filter_map(|r| r.outcome.as_ref().ok().map(RowMetrics::columns))
                    .collect();
                let mut mean = [None; 7];
                let mut std = [None; 7];
                for j in 0..7 {
                    let xs: Vec<f64> = ok.iter().filter_map(|c| c[j]).collect();
                    if xs.is_empty() {
                        continue;
                    }
                    let n = xs.len() as f64;
                    let m = xs.iter().sum::<f64>() / n;
                    mean[j] = Some(m);
                    std[j] = Some(if xs.len() > 1 {
                        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
                    } else {
                        0.0
                    });
                }
                GridSummary { value, value2, mean, std }
            })
            .collect()
    }

    pub fn write_csv(&self, mut w: impl Write) -> CliResult<()> {
        writeln!(w, "# {}", self.config)?;
        let mut out = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| Failure::format(e.to_string());
        out.write_record(CSV_COLUMNS).map_err(csv_err)?;
        let num = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            let (cols, error) = match &r.outcome {
                Ok(m) => (m.columns(), String::new()),
                Err(e) => ([None; 7], e.clone()),
            };
            let mut rec = vec!["row".to_string(), r.value.clone(), r.value2.clone().unwrap_or_default(), r.seed_index.to_string(), r.seed.to_string()];
            rec.extend(cols.iter().map(|&c| num(c)));
            rec.push(error);
            out.write_record(&rec).map_err(csv_err)?;
        }
        for s in self.summaries() {
            for (kind, cols) in [("mean", s.mean), ("std", s.std)] {
                let mut rec = vec![kind.to_string(), s.value.clone(), s.value2.clone().unwrap_or_default(), String::new(), String::new()];
                rec.extend(cols.iter().map(|&c| num(c)));
                rec.push(String::new());
                out.write_record(&rec).map_err(csv_err)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn parse_value(s: &str) -> Value {
    serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.to_string()))
}

fn to_map<T: Serialize>(t: &T) -> Map<String, Value> {
    match serde_json::to_value(t) {
        Ok(Value::Object(m)) => m,
        _ => Map::new(),
    }
}

/// Parameters of one row: generator defaults, then `--set`, then axis values.
fn row_params<T: Serialize + DeserializeOwned>(base: &Map<String, Value>, overrides: &[(String, Value)], seed: u64) -> Result<T, String> {
    let mut m = base.clone();
    for (k, v) in overrides {
        m.insert(k.clone(), v.clone());
    }
    m.insert("seed".into(), json!(seed));
    serde_json::from_value(Value::Object(m)).map_err(|e| format!("invalid parameters: {e}"))
}

fn topsim(tokens: &TokenMatrix, z: &[f64], seed: u64) -> Option<f64> {
    metrics::topological_similarity(tokens, z, &DistanceConfig::default(), DEFAULT_MAX_PAIRS, seed).ok()
}

fn symbolic_metrics(b: ComplexityBreakdown, tokens: &TokenMatrix, z: &QuantizedMatrix, seed: u64) -> Result<RowMetrics, String> {
    let c = compositionality(&b).map_err(|e| e.to_string())?;
    let values: Vec<f64> = z.indices().iter().map(|&k| z.lattice().value(k)).collect();
    Ok(RowMetrics { c, topsim: topsim(tokens, &values, seed), breakdown: Some(b), l_preq: None })
}

fn run_row(kind: GeneratorKind, base: &Map<String, Value>, overrides: &[(String, Value)], seed: u64, preq_settings: &PreqSettings) -> Result<RowMetrics, String> {
    let err = |e: repcomp::Error| e.to_string();
    match kind {
        GeneratorKind::Lookup => {
            let p: LookupParams = row_params(base, overrides, seed)?;
            let s = lookup::generate(&p).map_err(err)?;
            let b = lookup::complexity(&s.program, &s.tokens, &s.noise).map_err(err)?;
            symbolic_metrics(b, &s.tokens, &s.z, seed)
        }
        GeneratorKind::Grammar => {
            let p: GrammarParams = row_params(base, overrides, seed)?;
            let s = grammar::generate(&p).map_err(err)?;
            let b = grammar::complexity(&s.program, &s.tokens, &s.noise).map_err(err)?;
            symbolic_metrics(b, &s.tokens, &s.z, seed)
        }
        GeneratorKind::Langsys => {
            let p: LangsysSettings = row_params(base, overrides, seed)?;
            let world = ObjectWorld::new(p.attributes, p.values).map_err(err)?;
            let language = LanguageSystem::new(world, p.kind().map_err(|f| f.message)?, seed).map_err(err)?;
            let records = langsys::emit_dataset(&language, p.repeats, seed).map_err(err)?;
            let ds = Dataset::from_records(records, language.vocab(), None, Some(seed), "langsys");
            let k_z = langsys::k_z_uniform(&world).map_err(err)?;
            let curve = preq::curve(&ds, preq_settings).map_err(|f| f.message)?;
            let c = language_compositionality(k_z, curve.total_bits).map_err(err)?;
            let tokens = ds.tokens().map_err(err)?;
            Ok(RowMetrics { c, topsim: topsim(&tokens, &ds.target_values(), seed), breakdown: None, l_preq: Some(curve.total_bits) })
        }
    }
}

/// Worker count from `REPCOMP_WORKERS`, or rayon's default when unset.
pub fn worker_count() -> CliResult<Option<usize>> {
    match std::env::var("REPCOMP_WORKERS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Failure::usage(format!("REPCOMP_WORKERS must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

/// Runs every (grid point, seed) row. Row `i` of each grid point uses seed
/// `derive(master_seed, [SWEEP_ROW, i])`, so grid points share seeds.
pub fn run_sweep(s: &SweepSettings, preq_settings: &PreqSettings, workers: Option<usize>) -> CliResult<SweepTable> {
    let kind = s.generator.ok_or_else(|| Failure::usage("sweep needs a generator"))?;
    let axis = s.axis.clone().ok_or_else(|| Failure::usage("sweep needs an axis"))?;
    let grid = s.grid.clone().filter(|g| !g.is_empty()).ok_or_else(|| Failure::usage("sweep grid must be nonempty"))?;
    if s.n_seeds == 0 {
        return Err(Failure::usage("n_seeds must be positive"));
    }
    let base = match kind {
        GeneratorKind::Lookup => to_map(&LookupParams::default()),
        GeneratorKind::Grammar => to_map(&GrammarParams::default()),
        GeneratorKind::Langsys => to_map(&LangsysSettings::default()),
    };
    let recognized = |k: &str| k != "seed" && base.contains_key(k);
    let mut fixed = Vec::new();
    for entry in &s.set {
        let (k, v) = entry.split_once('=').ok_or_else(|| Failure::usage(format!("--set expects key=value, got `{entry}`")))?;
        let k = k.trim().replace('-', "_");
        if !recognized(&k) {
            return Err(Failure::usage(format!("unknown parameter `{k}` in --set")));
        }
        fixed.push((k, parse_value(v.trim())));
    }
    if !recognized(&axis) {
        return Err(Failure::usage(format!("`{axis}` is not a parameter of the {kind:?} generator")));
    }
    let second: Option<(String, Vec<String>)> = match (&s.axis2, &s.grid2) {
        (Some(a), Some(g)) if !g.is_empty() => {
            if !recognized(a) || *a == axis {
                return Err(Failure::usage(format!("invalid second axis `{a}`")));
            }
            Some((a.clone(), g.clone()))
        }
        (None, None) => None,
        _ => return Err(Failure::usage("axis2 and a nonempty grid2 go together")),
    };

    let mut plan = Vec::new();
    for v in &grid {
        let v2s: Vec<Option<&String>> = match &second {
            Some((_, g)) => g.iter().map(Some).collect(),
            None => vec![None],
        };
        for v2 in v2s {
            for i in 0..s.n_seeds {
                plan.push((v.clone(), v2.cloned(), i));
            }
        }
    }
    let exec = |&(ref v, ref v2, i): &(String, Option<String>, usize)| {
        let seed = rng::derive_seed(s.master_seed, &[tag::SWEEP_ROW, i as u64]);
        let mut overrides = fixed.clone();
        overrides.push((axis.clone(), parse_value(v)));
        if let (Some((a2, _)), Some(v2)) = (&second, v2) {
            overrides.push((a2.clone(), parse_value(v2)));
        }
        SweepRow { value: v.clone(), value2: v2.clone(), seed_index: i, seed, outcome: run_row(kind, &base, &overrides, seed, preq_settings) }
    };
    let rows: Vec<SweepRow> = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::usage(e.to_string()))?
            .install(|| plan.par_iter().map(exec).collect()),
        None => plan.par_iter().map(exec).collect(),
    };
    let config = json!({ "sweep": s, "preq": if kind == GeneratorKind::Langsys { json!(preq_settings) } else { Value::Null } });
    Ok(SweepTable { config, rows })
}

pub fn run(args: &SweepArgs, config: Option<&Path>, out: Option<&Path>) -> CliResult<()> {
    let (s, _) = resolve(&SweepSettings::default(), config, "sweep", &args.sweep)?;
    let (p, _) = resolve(&PreqSettings::default(), config, "preq", &serde_json::Map::new())?;
    let workers = worker_count()?;
    let dir = out_dir(out)?;
    let table = run_sweep(&s, &p, workers)?;
    let path = dir.join(&args.name);
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
    table.write_csv(&mut f)?;
    f.flush()?;
    println!("{}", path.display());
    let failed = table.failed();
    if failed > 0 {
        return Err(Failure { code: EXIT_NUMERICAL, message: format!("{failed} of {} sweep rows failed", table.rows.len()) });
    }
    Ok(())
}
