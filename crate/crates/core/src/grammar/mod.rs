//! Synthetic binary context-free grammars with hierarchical linear semantics.
//!
//! Words are assigned evenly to `T` terminal parts of speech. Level 0 combines
//! pairs of parts of speech that may follow each other (offsets +1 and +2);
//! every higher level combines all ordered pairs of the level below. Parents
//! are assigned round-robin over the `width` symbols of a level, and the top
//! level gets recursive rules so that arbitrarily long sentences parse.

mod earley;
mod semantics;

pub use earley::{earley_parse, ParseTree, Parser};
pub use semantics::{decode, DenseSemantics, SemanticsProgram};

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codelen::{self, Lattice, QuantizedMatrix, SkellamParams};
use crate::error::{Error, Result};
use crate::metrics::ComplexityBreakdown;
use crate::rng::{self, tag};
use crate::tokens::TokenMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    Start,
    /// Terminal part of speech, 1-based.
    Pos(u32),
    /// Non-terminal `r{level}_{index}`, index 1-based.
    Rule { level: u32, index: u32 },
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Start => write!(f, "start"),
            Symbol::Pos(t) => write!(f, "T_{t}"),
            Symbol::Rule { level, index } => write!(f, "r{level}_{index}"),
        }
    }
}

/// One `|` alternative `parent → left right`. Its position in
/// [`GrammarSpec::productions`] is its id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Production {
    pub parent: Symbol,
    pub left: Symbol,
    pub right: Symbol,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrammarSpec {
    /// Number of terminal parts of speech.
    pub pos_count: u32,
    pub width: u32,
    pub depth: u32,
    pub vocab: usize,
    pub productions: Vec<Production>,
}

impl GrammarSpec {
    /// Part of speech of `word`, `(word mod T) + 1`.
    pub fn pos_of(&self, word: u32) -> u32 {
        word % self.pos_count + 1
    }

    /// Words carrying part of speech `pos`.
    pub fn words_with_pos(&self, pos: u32) -> usize {
        let offset = (pos - 1) as usize;
        if offset >= self.vocab {
            return 0;
        }
        (self.vocab - offset).div_ceil(self.pos_count as usize)
    }

    /// Part of speech reached from `pos` by moving `offset` steps, wrapped.
    pub fn successor(&self, pos: u32, offset: u32) -> u32 {
        (pos - 1 + offset) % self.pos_count + 1
    }

    pub fn top_level(&self) -> u32 {
        self.depth - 1
    }

    /// Symbols `start` expands to.
    pub fn start_symbols(&self) -> Vec<Symbol> {
        (1..=self.width).map(|index| Symbol::Rule { level: self.top_level(), index }).collect()
    }

    /// Number of `|` alternatives, each with its own linear map.
    pub fn rule_count(&self) -> usize {
        self.productions.len()
    }

    /// Number of words the sentence can continue with after `prev`
    /// (`None` for the sentence start).
    pub fn successor_count(&self, prev: Option<u32>) -> usize {
        match prev {
            None => self.words_with_pos(1) + self.words_with_pos(2),
            Some(w) => {
                let p = self.pos_of(w);
                self.words_with_pos(self.successor(p, 1)) + self.words_with_pos(self.successor(p, 2))
            }
        }
    }

    /// Root symbol of a subtree.
    pub fn root_symbol(&self, tree: &ParseTree) -> Symbol {
        match tree {
            ParseTree::Leaf { word } => Symbol::Pos(self.pos_of(*word)),
            ParseTree::Node { rule, .. } => self.productions[*rule].parent,
        }
    }

    /// Whether `tree` derives `sentence` from `start` using only this grammar.
    pub fn is_valid_parse(&self, tree: &ParseTree, sentence: &[u32]) -> bool {
        fn check(g: &GrammarSpec, t: &ParseTree) -> bool {
            match t {
                ParseTree::Leaf { word } => (*word as usize) < g.vocab,
                ParseTree::Node { rule, left, right } => {
                    let Some(p) = g.productions.get(*rule) else { return false };
                    p.left == g.root_symbol(left) && p.right == g.root_symbol(right) && check(g, left) && check(g, right)
                }
            }
        }
        tree.leaves() == sentence && self.start_symbols().contains(&self.root_symbol(tree)) && check(self, tree)
    }

    /// Textual listing, one rule per line: `r0_1: T_1 " " T_2 | ...`.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        let starts: Vec<String> = self.start_symbols().iter().map(|s| s.to_string()).collect();
        out.push_str(&format!("start: {}\n", starts.join(" | ")));
        let mut i = 0;
        while i < self.productions.len() {
            let parent = self.productions[i].parent;
            let mut alts = Vec::new();
            while i < self.productions.len() && self.productions[i].parent == parent {
                let p = &self.productions[i];
                alts.push(format!("{} \" \" {}", p.left, p.right));
                i += 1;
            }
            out.push_str(&format!("{parent}: {}\n", alts.join(" | ")));
        }
        out
    }
}

/// Builds the grammar for `T` parts of speech, `width` symbols per level and
/// `depth` levels over a vocabulary of size `vocab`.
pub fn build_grammar(pos_count: u32, width: u32, depth: u32, vocab: usize) -> Result<GrammarSpec> {
    if pos_count < 3 {
        return Err(Error::param(format!("need at least 3 parts of speech, got {pos_count}")));
    }
    if width == 0 || depth == 0 {
        return Err(Error::param("width and depth must be positive"));
    }
    if vocab < pos_count as usize {
        return Err(Error::param(format!("vocabulary {vocab} smaller than part-of-speech count {pos_count}")));
    }
    if width > 2 * pos_count {
        return Err(Error::param(format!(
            "width {width} exceeds the {} level-0 child pairs",
            2 * pos_count
        )));
    }
    let rule = |level: u32, index: u32| Symbol::Rule { level, index };
    let top = depth - 1;
    let mut productions = Vec::new();
    for level in 0..depth {
        // Child pairs in canonical order; level 0 is POS-major then offset.
        let pairs: Vec<(Symbol, Symbol)> = if level == 0 {
            (1..=pos_count)
                .flat_map(|t| (1..=2).map(move |d| (Symbol::Pos(t), Symbol::Pos((t - 1 + d) % pos_count + 1))))
                .collect()
        } else {
            (1..=width)
                .flat_map(|a| (1..=width).map(move |b| (rule(level - 1, a), rule(level - 1, b))))
                .collect()
        };
        for parent in 1..=width {
            for (i, &(left, right)) in pairs.iter().enumerate() {
                if i as u32 % width + 1 == parent {
                    productions.push(Production { parent: rule(level, parent), left, right });
                }
            }
            if level == top {
                for a in 1..=width {
                    productions.push(Production {
                        parent: rule(level, parent),
                        left: rule(level, a),
                        right: rule(level, parent),
                    });
                }
            }
        }
    }
    Ok(GrammarSpec { pos_count, width, depth, vocab, productions })
}

/// Samples `n` sentences of length `m` from the part-of-speech transition
/// process: start at POS 1 or 2, then step +1 or +2, each word uniform within
/// its POS.
pub fn sample_sentences(spec: &GrammarSpec, n: usize, m: usize, seed: u64) -> Result<TokenMatrix> {
    if m == 0 {
        return Err(Error::param("sentence length must be at least 1"));
    }
    let t = spec.pos_count;
    let mut rng = rng::stream(seed, &[tag::SENTENCES]);
    let mut data = Vec::with_capacity(n * m);
    for _ in 0..n {
        let mut pos = 1 + rng.random_range(0..2u32);
        for step in 0..m {
            if step > 0 {
                pos = spec.successor(pos, 1 + rng.random_range(0..2u32));
            }
            let count = spec.words_with_pos(pos);
            let j = rng.random_range(0..count) as u32;
            data.push(pos - 1 + t * j);
        }
    }
    TokenMatrix::new(n, m, spec.vocab, data)
}

/// `K(W|p_w) = Σ_n Σ_m log₂|t(w_{n,m-1})|`.
pub fn sentence_code_length(spec: &GrammarSpec, tokens: &TokenMatrix) -> f64 {
    let mut bits = 0.0;
    for i in 0..tokens.rows() {
        let mut prev = None;
        for &w in tokens.row(i) {
            bits += (spec.successor_count(prev) as f64).log2();
            prev = Some(w);
        }
    }
    bits
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrammarParams {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub d: usize,
    /// Terminal parts of speech.
    pub t: u32,
    pub width: u32,
    pub depth: u32,
    pub lambda: f64,
    pub r: f64,
    pub seed: u64,
}

impl Default for GrammarParams {
    fn default() -> Self {
        Self { n: 1000, m: 16, k: 100, d: 10, t: 5, width: 3, depth: 2, lambda: 0.01, r: 0.01, seed: 0 }
    }
}

impl GrammarParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::param("N and D must be positive"));
        }
        if self.depth >= 31 || self.m == 0 || self.m % (1usize << self.depth) != 0 {
            return Err(Error::param(format!(
                "sentence length {} must be a positive multiple of 2^depth = 2^{} to be derivable",
                self.m, self.depth
            )));
        }
        Lattice::new(self.lambda)?;
        if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(Error::param(format!("noise std must be nonnegative, got {}", self.r)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GrammarProgram {
    pub params: GrammarParams,
    pub spec: GrammarSpec,
    pub semantics: SemanticsProgram,
}

#[derive(Debug, Clone)]
pub struct GrammarSample {
    pub tokens: TokenMatrix,
    pub z: QuantizedMatrix,
    pub noise: QuantizedMatrix,
    pub program: GrammarProgram,
}

/// Samples sentences, parses them and evaluates the semantics; each row of
/// `Z` is the quantized root value plus Skellam noise.
pub fn generate(params: &GrammarParams) -> Result<GrammarSample> {
    params.validate()?;
    let lattice = Lattice::new(params.lambda)?;
    let spec = build_grammar(params.t, params.width, params.depth, params.k)?;
    let semantics = SemanticsProgram::sample(&spec, params.d, lattice, params.seed)?;
    let tokens = sample_sentences(&spec, params.n, params.m, params.seed)?;

    let parser = Parser::new(&spec);
    let dense = semantics.dense();
    let mut clean = QuantizedMatrix::zeros(params.n, params.d, lattice);
    for i in 0..params.n {
        let tree = parser.parse(tokens.row(i))?;
        let value = dense.decode(&tree)?;
        for (dst, v) in clean.row_mut(i).iter_mut().zip(value) {
            *dst = lattice.nearest_index(v)?;
        }
    }
    let noise = if params.r > 0.0 {
        let np = SkellamParams::new(params.r, lattice)?;
        let mut rng = rng::stream(params.seed, &[tag::NOISE]);
        QuantizedMatrix::from_indices(params.n, params.d, codelen::sample_indices(&mut rng, &np, params.n * params.d), lattice)?
    } else {
        QuantizedMatrix::zeros(params.n, params.d, lattice)
    };
    let z = clean.add(&noise)?;
    Ok(GrammarSample { tokens, z, noise, program: GrammarProgram { params: *params, spec, semantics } })
}

/// Closed-form complexity terms of a grammar program.
pub fn complexity(program: &GrammarProgram, tokens: &TokenMatrix, noise: &QuantizedMatrix) -> Result<ComplexityBreakdown> {
    let spec = &program.spec;
    let lattice = program.semantics.lattice();
    if noise.lattice() != lattice {
        return Err(Error::contract("noise lattice differs from the semantics lattice"));
    }
    if noise.rows() != tokens.rows() || noise.cols() != program.semantics.dim() {
        return Err(Error::contract("noise shape does not match the dataset"));
    }
    let t = spec.pos_count as f64;
    let k_pw = spec.vocab as f64 * t.log2() + t * (t + 1.0);
    let k_w = sentence_code_length(spec, tokens);
    let unit = SkellamParams::new(1.0, lattice)?;
    let mut coder = codelen::SkellamCoder::new(unit);
    let mut k_f = coder.total(program.semantics.embeddings.indices())?;
    for map in &program.semantics.rule_maps {
        k_f += coder.total(map.indices())?;
    }
    let k_z = if program.params.r > 0.0 {
        codelen::total_code_length(noise, &SkellamParams::new(program.params.r, lattice)?)?
    } else {
        if noise.indices().iter().any(|&e| e != 0) {
            return Err(Error::contract("nonzero noise supplied for a noiseless program"));
        }
        0.0
    };
    ComplexityBreakdown::new(k_pw, k_w, k_f, k_z)
}
