//! Layered settings: built-in defaults, then a TOML section, then flags.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use repcomp::metrics::{RepresentationMetric, SentenceMetric, DEFAULT_MAX_PAIRS};

use crate::args::{GeneratorKind, MeasureMode};
use crate::{CliResult, Failure};

/// Reads `[section]` of a TOML config file as a JSON object.
pub fn config_section(config: Option<&Path>, section: &str) -> CliResult<Map<String, Value>> {
    let Some(path) = config else { return Ok(Map::new()) };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
    let table: toml::Table = text.parse().map_err(|e| Failure::usage(format!("invalid config {}: {e}", path.display())))?;
    let Some(value) = table.get(section) else { return Ok(Map::new()) };
    let json = serde_json::to_value(value).map_err(|e| Failure::usage(e.to_string()))?;
    match json {
        Value::Object(map) => Ok(map.into_iter().map(|(k, v)| (k.replace('-', "_"), v)).collect()),
        _ => Err(Failure::usage(format!("config entry [{section}] must be a table"))),
    }
}

fn object(value: Value) -> Map<String, Value> {
    match value {
        Value::Object(map) => map,
        _ => Map::new(),
    }
}

/// Merges `defaults`, the config section and `flags`, later layers winning.
/// Keys not present in `defaults` are rejected.
pub fn resolve<T, F>(defaults: &T, config: Option<&Path>, section: &str, flags: &F) -> CliResult<(T, Value)>
where
    T: Serialize + DeserializeOwned,
    F: Serialize,
{
    let mut merged = object(serde_json::to_value(defaults).map_err(|e| Failure::usage(e.to_string()))?);
    let file = config_section(config, section)?;
    let flags = object(serde_json::to_value(flags).map_err(|e| Failure::usage(e.to_string()))?);
    for layer in [file, flags] {
        for (k, v) in layer {
            if !merged.contains_key(&k) {
                return Err(Failure::usage(format!("unknown setting `{k}` for {section}")));
            }
            merged.insert(k, v);
        }
    }
    let value = Value::Object(merged);
    let resolved = serde_json::from_value(value.clone()).map_err(|e| Failure::usage(format!("invalid {section} settings: {e}")))?;
    Ok((resolved, value))
}

/// Settings of the `langsys` generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangsysSettings {
    pub attributes: usize,
    pub values: usize,
    pub language: String,
    pub p_swap: f64,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for LangsysSettings {
    fn default() -> Self {
        Self { attributes: 2, values: 8, language: "compositional".into(), p_swap: 0.1, repeats: 50, seed: 0 }
    }
}

impl LangsysSettings {
    pub fn kind(&self) -> CliResult<repcomp::langsys::LanguageKind> {
        use repcomp::langsys::LanguageKind;
        match self.language.as_str() {
            "compositional" => Ok(LanguageKind::Compositional),
            "holistic" => Ok(LanguageKind::Holistic),
            "noisy" => Ok(LanguageKind::Noisy { p_swap: self.p_swap }),
            other => Err(Failure::usage(format!("unknown language `{other}`"))),
        }
    }
}

/// Prequential estimator and network settings shared by `preq` and `measure`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreqSettings {
    pub chunk: Option<usize>,
    pub log_boundaries: Option<usize>,
    pub log_start: Option<usize>,
    /// Defaults to 400 for symbolic targets and 2.5% of N otherwise.
    pub holdout: Option<usize>,
    pub preq_seed: u64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub lr: f64,
    pub min_delta: f64,
    pub embedding_dim: usize,
    pub hidden: Vec<usize>,
    pub warm_start: bool,
    pub parallel_stages: bool,
    pub final_fit: bool,
}

impl Default for PreqSettings {
    fn default() -> Self {
        let t = repcomp::nn::TrainConfig::default();
        Self {
            chunk: None,
            log_boundaries: None,
            log_start: None,
            holdout: None,
            preq_seed: 0,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            patience: t.patience,
            lr: t.learning_rate,
            min_delta: t.min_delta,
            embedding_dim: 64,
            hidden: vec![256, 256],
            warm_start: false,
            parallel_stages: false,
            final_fit: false,
        }
    }
}

impl PreqSettings {
    pub fn schedule(&self) -> CliResult<repcomp::prequential::ScheduleKind> {
        use repcomp::prequential::ScheduleKind;
        match (self.chunk, self.log_boundaries) {
            (Some(_), Some(_)) => Err(Failure::usage("chunk and log_boundaries are mutually exclusive")),
            (None, Some(n_boundaries)) => Ok(ScheduleKind::Log10 { n_boundaries, start: self.log_start.unwrap_or(1000) }),
            (step, None) => {
                if self.log_start.is_some() {
                    return Err(Failure::usage("log_start requires log_boundaries"));
                }
                Ok(ScheduleKind::Linear { step: step.unwrap_or(50) })
            }
        }
    }

    pub fn config(&self, symbolic: bool, n: usize) -> CliResult<repcomp::prequential::PrequentialConfig> {
        use repcomp::nn::TrainConfig;
        use repcomp::prequential::{external_holdout, PrequentialConfig};
        let holdout = self.holdout.unwrap_or(if symbolic { 400 } else { external_holdout(n) });
        Ok(PrequentialConfig {
            schedule: self.schedule()?,
            holdout,
            seed: self.preq_seed,
            train: TrainConfig {
                learning_rate: self.lr,
                max_epochs: self.max_epochs,
                patience: self.patience,
                batch_size: self.batch_size,
                min_delta: self.min_delta,
                seed: self.preq_seed,
            },
            warm_start: self.warm_start,
            parallel_stages: self.parallel_stages,
            final_fit: self.final_fit,
        })
    }
}

/// Settings of `measure` other than the prequential ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSettings {
    pub mode: MeasureMode,
    pub kz_bits: Option<f64>,
    pub world: Option<Vec<usize>>,
    pub sentence_metric: SentenceMetric,
    pub z_metric: RepresentationMetric,
    pub max_pairs: usize,
    pub topsim_seed: u64,
}

impl Default for MeasureSettings {
    fn default() -> Self {
        Self {
            mode: MeasureMode::Auto,
            kz_bits: None,
            world: None,
            sentence_metric: SentenceMetric::Hamming,
            z_metric: RepresentationMetric::Euclidean,
            max_pairs: DEFAULT_MAX_PAIRS,
            topsim_seed: 0,
        }
    }
}

fn string_list<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<Vec<String>>, D::Error> {
    let values: Option<Vec<Value>> = Option::deserialize(d)?;
    Ok(values.map(|v| {
        v.into_iter()
            .map(|x| match x {
                Value::String(s) => s,
                other => other.to_string(),
            })
            .collect()
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub generator: Option<GeneratorKind>,
    pub axis: Option<String>,
    #[serde(deserialize_with = "string_list")]
    pub grid: Option<Vec<String>>,
    pub axis2: Option<String>,
    #[serde(deserialize_with = "string_list")]
    pub grid2: Option<Vec<String>>,
    pub n_seeds: usize,
    pub master_seed: u64,
    pub set: Vec<String>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self { generator: None, axis: None, grid: None, axis2: None, grid2: None, n_seeds: 10, master_seed: 0, set: Vec::new() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::LookupFlags;
    use repcomp::lookup::LookupParams;

    #[test]
    fn flags_override_file_which_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[lookup]\nm = 8\nk = 4\n").unwrap();
        let flags = LookupFlags { k: Some(6), ..Default::default() };
        let (p, _): (LookupParams, _) = resolve(&LookupParams::default(), Some(&path), "lookup", &flags).unwrap();
        assert_eq!((p.m, p.k, p.n), (8, 6, LookupParams::default().n));
    }

    #[test]
    fn unknown_keys_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[lookup]\nwidth = 3\n").unwrap();
        let err = resolve(&LookupParams::default(), Some(&path), "lookup", &LookupFlags::default()).unwrap_err();
        assert_eq!(err.code, crate::EXIT_USAGE);
    }

    #[test]
    fn schedule_flags_are_exclusive() {
        let s = PreqSettings { chunk: Some(10), log_boundaries: Some(3), ..Default::default() };
        assert!(s.schedule().is_err());
    }
}
