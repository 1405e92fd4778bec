//! Lookup-table representations: each `q`-gram of a sentence indexes a table
//! row, and the rows of consecutive `q`-grams are concatenated.

use std::borrow::Cow;
use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codelen::{self, Lattice, QuantizedMatrix, SkellamCoder, SkellamParams};
use crate::error::{Error, Result};
use crate::metrics::ComplexityBreakdown;
use crate::rng::{self, tag};
use crate::tokens::TokenMatrix;

/// Tables with more entries than this are generated row by row on demand.
pub const MATERIALIZE_LIMIT: u128 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LookupParams {
    /// Number of sentences `N`.
    pub n: usize,
    /// Sentence length `M`.
    pub m: usize,
    /// Vocabulary size `K`.
    pub k: usize,
    /// Representation dimension `D`.
    pub d: usize,
    /// Disentanglement factor (n-gram size).
    pub q: usize,
    /// Lattice spacing.
    pub lambda: f64,
    /// Noise standard deviation; 0 disables noise.
    pub r: f64,
    pub seed: u64,
}

impl Default for LookupParams {
    fn default() -> Self {
        Self { n: 1000, m: 16, k: 10, d: 64, q: 1, lambda: 0.01, r: 0.01, seed: 0 }
    }
}

impl LookupParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.k == 0 || self.d == 0 || self.q == 0 {
            return Err(Error::param("N, M, K, D and q must all be positive"));
        }
        if self.m % self.q != 0 {
            return Err(Error::param(format!("q={} must divide M={}", self.q, self.m)));
        }
        if self.d % (self.m / self.q) != 0 {
            return Err(Error::param(format!("M/q={} must divide D={}", self.m / self.q, self.d)));
        }
        Lattice::new(self.lambda)?;
        if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(Error::param(format!("noise std must be nonnegative, got {}", self.r)));
        }
        if (self.k as u128).checked_pow(self.q as u32).is_none_or(|rows| rows > u64::MAX as u128) {
            return Err(Error::param(format!("K^q = {}^{} table rows cannot be indexed", self.k, self.q)));
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::new(self.lambda)
    }

    /// `K^q`.
    pub fn table_rows(&self) -> u64 {
        (self.k as u64).pow(self.q as u32)
    }

    /// `D·q/M`, the width of one table row.
    pub fn table_cols(&self) -> usize {
        self.d / (self.m / self.q)
    }

    /// `q`-grams per sentence.
    pub fn chunks(&self) -> usize {
        self.m / self.q
    }

    fn entry_params(&self) -> Result<SkellamParams> {
        SkellamParams::new(1.0, self.lattice()?)
    }
}

/// The lookup table: fully stored when small, otherwise regenerated per row
/// from its own random stream. Both forms produce identical rows.
#[derive(Debug, Clone, PartialEq)]
pub enum LookupTable {
    Dense(QuantizedMatrix),
    Virtual { rows: u64, cols: usize, lattice: Lattice, seed: u64 },
}

fn table_row(seed: u64, row: u64, cols: usize, params: &SkellamParams) -> Vec<i64> {
    let mut rng = rng::stream(seed, &[tag::LOOKUP_TABLE, row]);
    codelen::sample_indices(&mut rng, params, cols)
}

impl LookupTable {
    fn generate(params: &LookupParams) -> Result<Self> {
        let rows = params.table_rows();
        let cols = params.table_cols();
        let lattice = params.lattice()?;
        if rows as u128 * cols as u128 > MATERIALIZE_LIMIT {
            return Ok(LookupTable::Virtual { rows, cols, lattice, seed: params.seed });
        }
        let entry = params.entry_params()?;
        let mut data = Vec::with_capacity(rows as usize * cols);
        for r in 0..rows {
            data.extend(table_row(params.seed, r, cols, &entry));
        }
        Ok(LookupTable::Dense(QuantizedMatrix::from_indices(rows as usize, cols, data, lattice)?))
    }

    pub fn rows(&self) -> u64 {
        match self {
            LookupTable::Dense(m) => m.rows() as u64,
            LookupTable::Virtual { rows, .. } => *rows,
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            LookupTable::Dense(m) => m.cols(),
            LookupTable::Virtual { cols, .. } => *cols,
        }
    }

    pub fn lattice(&self) -> Lattice {
        match self {
            LookupTable::Dense(m) => m.lattice(),
            LookupTable::Virtual { lattice, .. } => *lattice,
        }
    }

    pub fn is_materialized(&self) -> bool {
        matches!(self, LookupTable::Dense(_))
    }

    pub fn row(&self, index: u64) -> Cow<'_, [i64]> {
        match self {
            LookupTable::Dense(m) => Cow::Borrowed(m.row(index as usize)),
            LookupTable::Virtual { cols, lattice, seed, .. } => {
                let entry = SkellamParams::new(1.0, *lattice).expect("unit std is valid");
                Cow::Owned(table_row(*seed, index, *cols, &entry))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LookupProgram {
    pub params: LookupParams,
    pub table: LookupTable,
}

/// Output of [`generate`]: sentences, representation, program and the noise
/// that was added (so that its code length is exact).
#[derive(Debug, Clone)]
pub struct LookupSample {
    pub tokens: TokenMatrix,
    pub z: QuantizedMatrix,
    pub noise: QuantizedMatrix,
    pub program: LookupProgram,
}

/// Table row of the n-gram `(w_1..w_q)`: mixed radix `Σ w_j K^(q-j)`.
pub fn ngram_row(ngram: &[u32], vocab: usize) -> u64 {
    ngram.iter().fold(0u64, |acc, &t| acc * vocab as u64 + t as u64)
}

pub fn generate(params: &LookupParams) -> Result<LookupSample> {
    params.validate()?;
    let lattice = params.lattice()?;
    let table = LookupTable::generate(params)?;
    let program = LookupProgram { params: *params, table };

    let mut rng = rng::stream(params.seed, &[tag::SENTENCES]);
    let data: Vec<u32> = (0..params.n * params.m).map(|_| rng.random_range(0..params.k as u32)).collect();
    let tokens = TokenMatrix::new(params.n, params.m, params.k, data)?;

    let clean = decode(&program, &tokens)?;
    let noise = if params.r > 0.0 {
        let noise_params = SkellamParams::new(params.r, lattice)?;
        let mut rng = rng::stream(params.seed, &[tag::NOISE]);
        let data = codelen::sample_indices(&mut rng, &noise_params, params.n * params.d);
        QuantizedMatrix::from_indices(params.n, params.d, data, lattice)?
    } else {
        QuantizedMatrix::zeros(params.n, params.d, lattice)
    };
    let z = clean.add(&noise)?;
    Ok(LookupSample { tokens, z, noise, program })
}

/// Noiseless representation of `tokens` under `program`.
pub fn decode(program: &LookupProgram, tokens: &TokenMatrix) -> Result<QuantizedMatrix> {
    let p = &program.params;
    if tokens.cols() != p.m {
        return Err(Error::contract(format!("sentences have length {}, program expects {}", tokens.cols(), p.m)));
    }
    if let Some(&bad) = tokens.data().iter().find(|&&t| t as usize >= p.k) {
        return Err(Error::TokenOutOfRange { token: bad, vocab: p.k });
    }
    let cols = program.table.cols();
    let mut out = QuantizedMatrix::zeros(tokens.rows(), p.d, program.table.lattice());
    let mut cache: HashMap<u64, Vec<i64>> = HashMap::new();
    for i in 0..tokens.rows() {
        let sentence = tokens.row(i);
        let row = out.row_mut(i);
        for (c, ngram) in sentence.chunks(p.q).enumerate() {
            let idx = ngram_row(ngram, p.k);
            let dst = &mut row[c * cols..(c + 1) * cols];
            match &program.table {
                LookupTable::Dense(m) => dst.copy_from_slice(m.row(idx as usize)),
                table => {
                    let entry = cache.entry(idx).or_insert_with(|| table.row(idx).into_owned());
                    dst.copy_from_slice(entry);
                }
            }
        }
    }
    Ok(out)
}

/// Bits for the table entries under Skellam(0, 1, λ). Returns the bit count
/// and whether it is exact; for virtual tables only the rows used by `tokens`
/// are coded exactly and the remaining entries contribute their expected cost.
pub fn table_code_length(program: &LookupProgram, tokens: &TokenMatrix) -> Result<(f64, bool)> {
    let entry = program.params.entry_params()?;
    match &program.table {
        LookupTable::Dense(m) => Ok((codelen::total_code_length(m, &entry)?, true)),
        table => {
            let p = &program.params;
            let used: BTreeSet<u64> = (0..tokens.rows())
                .flat_map(|i| tokens.row(i).chunks(p.q).map(|g| ngram_row(g, p.k)).collect::<Vec<_>>())
                .collect();
            let mut coder = SkellamCoder::new(entry);
            let mut bits = 0.0;
            for &r in &used {
                bits += coder.total(&table.row(r))?;
            }
            let unused = (table.rows() - used.len() as u64) as f64 * table.cols() as f64;
            bits += unused * codelen::skellam_entropy_bits(&entry)?;
            Ok((bits, false))
        }
    }
}

/// Closed-form complexity terms of a lookup-table program.
pub fn complexity(program: &LookupProgram, tokens: &TokenMatrix, noise: &QuantizedMatrix) -> Result<ComplexityBreakdown> {
    let p = &program.params;
    if noise.lattice() != program.table.lattice() {
        return Err(Error::contract("noise lattice differs from the table lattice"));
    }
    if (noise.rows(), noise.cols()) != (tokens.rows(), p.d) {
        return Err(Error::contract(format!(
            "noise is {}x{}, expected {}x{}",
            noise.rows(),
            noise.cols(),
            tokens.rows(),
            p.d
        )));
    }
    let k = p.k as f64;
    let k_pw = k.log2() + (p.m as f64).log2();
    let k_w = (tokens.rows() * p.m) as f64 * k.log2();
    let (k_f, _) = table_code_length(program, tokens)?;
    let k_z = if p.r > 0.0 {
        codelen::total_code_length(noise, &SkellamParams::new(p.r, noise.lattice())?)?
    } else {
        if noise.indices().iter().any(|&e| e != 0) {
            return Err(Error::contract("nonzero noise supplied for a noiseless program"));
        }
        0.0
    };
    ComplexityBreakdown::new(k_pw, k_w, k_f, k_z)
}
