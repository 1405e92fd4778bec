//! Line-delimited JSON dataset files.
//!
//! The first line is a header `{"meta":{"vocab":K,"dim":D,"lambda_z":λ,"seed":s,"generator":name}}`,
//! optionally with a `"config"` object.
//! Each following line is a record, either `{"w":[...],"z":[...]}` with real
//! targets on the lattice of spacing `lambda_z`, or `{"w":[...],"y":[...]}`
//! with class targets. A file holds one kind only.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codelen::{Lattice, QuantizedMatrix};
use crate::error::{Error, Result};
use crate::nn::{Records, Targets};
use crate::tokens::TokenMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub vocab: usize,
    /// Target width: representation dimensions or class slots.
    pub dim: usize,
    pub lambda_z: Option<f64>,
    pub seed: Option<u64>,
    pub generator: String,
    /// Resolved settings of the run that produced the file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub records: Records,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub dim: usize,
    pub vocab: usize,
    pub sentence_length: usize,
    pub token_histogram: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    meta: DatasetMeta,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    w: Vec<u32>,
    #[serde(default)]
    z: Option<Vec<f64>>,
    #[serde(default)]
    y: Option<Vec<u32>>,
}

#[derive(Serialize)]
struct ZRecord<'a> {
    w: &'a [u32],
    z: Vec<f64>,
}

#[derive(Serialize)]
struct YRecord<'a> {
    w: &'a [u32],
    y: &'a [u32],
}

impl Dataset {
    /// Dataset of continuous targets from a token matrix and a representation.
    pub fn from_representation(tokens: &TokenMatrix, z: &QuantizedMatrix, seed: Option<u64>, generator: &str) -> Result<Self> {
        if tokens.rows() != z.rows() {
            return Err(Error::contract("token and representation row counts differ"));
        }
        let lattice = z.lattice();
        let records = Records::new(
            tokens.cols(),
            tokens.data().to_vec(),
            Targets::Lattice { dims: z.cols(), lattice, data: z.indices().to_vec() },
        )?;
        let meta = DatasetMeta {
            vocab: tokens.vocab(),
            dim: z.cols(),
            lambda_z: Some(lattice.spacing()),
            seed,
            generator: generator.into(),
            config: None,
        };
        Ok(Self { meta, records })
    }

    pub fn from_records(records: Records, vocab: usize, lambda_z: Option<f64>, seed: Option<u64>, generator: &str) -> Self {
        let meta = DatasetMeta { vocab, dim: records.targets().width(), lambda_z, seed, generator: generator.into(), config: None };
        Self { meta, records }
    }

    pub fn tokens(&self) -> Result<TokenMatrix> {
        TokenMatrix::new(self.records.len(), self.records.inputs(), self.meta.vocab, self.records.tokens().to_vec())
    }

    /// Real-valued targets as a row-major matrix.
    pub fn target_values(&self) -> Vec<f64> {
        match self.records.targets() {
            Targets::Lattice { lattice, data, .. } => data.iter().map(|&k| lattice.value(k)).collect(),
            Targets::Classes { data, .. } => data.iter().map(|&y| y as f64).collect(),
        }
    }

    pub fn summary(&self) -> DatasetSummary {
        let mut token_histogram = vec![0; self.meta.vocab];
        for &t in self.records.tokens() {
            token_histogram[t as usize] += 1;
        }
        DatasetSummary {
            n: self.records.len(),
            dim: self.meta.dim,
            vocab: self.meta.vocab,
            sentence_length: self.records.inputs(),
            token_histogram,
        }
    }
}

pub fn write_dataset(dataset: &Dataset, mut w: impl Write) -> Result<()> {
    let json = |e: serde_json::Error| Error::Format { line: 0, message: e.to_string() };
    serde_json::to_writer(&mut w, &Header { meta: dataset.meta.clone() }).map_err(json)?;
    w.write_all(b"\n")?;
    let r = &dataset.records;
    let m = r.inputs();
    for i in 0..r.len() {
        let tokens = &r.tokens()[i * m..(i + 1) * m];
        match r.targets() {
            Targets::Lattice { dims, lattice, data } => {
                let z = data[i * dims..(i + 1) * dims].iter().map(|&k| lattice.value(k)).collect();
                serde_json::to_writer(&mut w, &ZRecord { w: tokens, z }).map_err(json)?;
            }
            Targets::Classes { slots, data, .. } => {
                serde_json::to_writer(&mut w, &YRecord { w: tokens, y: &data[i * slots..(i + 1) * slots] }).map_err(json)?;
            }
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_dataset(dataset, &mut f)?;
    f.flush()?;
    Ok(())
}

/// Parses and validates a dataset; errors carry the 1-based line number.
pub fn read_dataset(reader: impl BufRead) -> Result<Dataset> {
    let fail = |line: usize, message: String| Error::Format { line, message };
    let mut lines = reader.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| fail(1, "empty file, expected a header".into()))?;
    let header: Header = serde_json::from_str(&first?).map_err(|e| fail(1, format!("bad header: {e}")))?;
    let meta = header.meta;
    if meta.vocab == 0 || meta.dim == 0 {
        return Err(fail(1, "vocab and dim must be positive".into()));
    }
    if let Some(l) = meta.lambda_z {
        if !(l.is_finite() && l > 0.0) {
            return Err(fail(1, format!("lambda_z must be positive, got {l}")));
        }
    }

    let mut sentence_length = None;
    let mut symbolic = None;
    let mut tokens = Vec::new();
    let mut z_idx = Vec::new();
    let mut y = Vec::new();
    for (i, text) in lines {
        let line = i + 1;
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let rec: RawRecord = serde_json::from_str(&text).map_err(|e| fail(line, format!("bad record: {e}")))?;
        let m = *sentence_length.get_or_insert(rec.w.len());
        if rec.w.is_empty() || rec.w.len() != m {
            return Err(fail(line, format!("sentence has {} tokens, expected {m}", rec.w.len())));
        }
        if let Some(&t) = rec.w.iter().find(|&&t| t as usize >= meta.vocab) {
            return Err(fail(line, format!("token {t} outside vocabulary of {}", meta.vocab)));
        }
        tokens.extend_from_slice(&rec.w);
        match (rec.z, rec.y) {
            (Some(z), None) => {
                if *symbolic.get_or_insert(false) {
                    return Err(fail(line, "continuous record in a symbolic dataset".into()));
                }
                let lambda = meta.lambda_z.ok_or_else(|| fail(line, "continuous targets require lambda_z in the header".into()))?;
                if z.len() != meta.dim {
                    return Err(fail(line, format!("vector has {} dims, expected {}", z.len(), meta.dim)));
                }
                for v in z {
                    if !v.is_finite() {
                        return Err(fail(line, "non-finite target".into()));
                    }
                    let k = (v / lambda).round();
                    if k.abs() > 9.0e15 {
                        return Err(fail(line, format!("value {v} out of lattice range")));
                    }
                    z_idx.push(k as i64);
                }
            }
            (None, Some(labels)) => {
                if !*symbolic.get_or_insert(true) {
                    return Err(fail(line, "symbolic record in a continuous dataset".into()));
                }
                if labels.len() != meta.dim {
                    return Err(fail(line, format!("record has {} labels, expected {}", labels.len(), meta.dim)));
                }
                y.extend(labels);
            }
            _ => return Err(fail(line, "record needs exactly one of \"z\" or \"y\"".into())),
        }
    }
    let m = sentence_length.ok_or_else(|| fail(1, "dataset has no records".into()))?;
    let targets = if symbolic == Some(true) {
        let classes = y.iter().max().map_or(1, |&c| c as usize + 1);
        Targets::Classes { slots: meta.dim, classes, data: y }
    } else {
        let lattice = Lattice::new(meta.lambda_z.expect("checked per record"))?;
        Targets::Lattice { dims: meta.dim, lattice, data: z_idx }
    };
    let records = Records::new(m, tokens, targets)?;
    Ok(Dataset { meta, records })
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    read_dataset(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Reads an external `(sentence, embedding)` file and returns it with its
/// summary statistics.
pub fn ingest_external(path: &Path) -> Result<(Dataset, DatasetSummary)> {
    let ds = load_dataset(path)?;
    let summary = ds.summary();
    Ok((ds, summary))
}

/// Sidecar path `<file>.meta.json`.
pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    s.into()
}
