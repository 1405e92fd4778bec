use serde::{Deserialize, Serialize};

use super::{GrammarSpec, ParseTree};
use crate::codelen::{self, Lattice, QuantizedMatrix, SkellamParams};
use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Word embeddings (`K × D`) and one `2D × D` map per production alternative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticsProgram {
    pub embeddings: QuantizedMatrix,
    pub rule_maps: Vec<QuantizedMatrix>,
}

impl SemanticsProgram {
    /// Draws every entry from the unit Skellam on `lattice`.
    pub fn sample(spec: &GrammarSpec, dim: usize, lattice: Lattice, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("representation dimension must be positive"));
        }
        let unit = SkellamParams::new(1.0, lattice)?;
        let mut rng = rng::stream(seed, &[tag::EMBEDDINGS]);
        let embeddings = QuantizedMatrix::from_indices(
            spec.vocab,
            dim,
            codelen::sample_indices(&mut rng, &unit, spec.vocab * dim),
            lattice,
        )?;
        let rule_maps = (0..spec.rule_count())
            .map(|i| {
                let mut rng = rng::stream(seed, &[tag::RULE_MAPS, i as u64]);
                QuantizedMatrix::from_indices(
                    2 * dim,
                    dim,
                    codelen::sample_indices(&mut rng, &unit, 2 * dim * dim),
                    lattice,
                )
            })
            .collect::<Result<_>>()?;
        Ok(Self { embeddings, rule_maps })
    }

    pub fn dim(&self) -> usize {
        self.embeddings.cols()
    }

    pub fn lattice(&self) -> Lattice {
        self.embeddings.lattice()
    }

    /// Dequantized copy for repeated evaluation.
    pub fn dense(&self) -> DenseSemantics {
        DenseSemantics {
            dim: self.dim(),
            embeddings: self.embeddings.to_real(),
            maps: self.rule_maps.iter().map(|m| m.to_real()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseSemantics {
    pub dim: usize,
    /// Row-major `K × D`.
    pub embeddings: Vec<f64>,
    /// Row-major `2D × D` per alternative.
    pub maps: Vec<Vec<f64>>,
}

impl DenseSemantics {
    pub fn decode(&self, tree: &ParseTree) -> Result<Vec<f64>> {
        let d = self.dim;
        match tree {
            ParseTree::Leaf { word } => {
                let w = *word as usize;
                if (w + 1) * d > self.embeddings.len() {
                    return Err(Error::contract(format!("no embedding for word {w}")));
                }
                Ok(self.embeddings[w * d..(w + 1) * d].to_vec())
            }
            ParseTree::Node { rule, left, right } => {
                let a = self
                    .maps
                    .get(*rule)
                    .ok_or_else(|| Error::contract(format!("no linear map for rule {rule}")))?;
                let x = [self.decode(left)?, self.decode(right)?].concat();
                let mut out = vec![0.0; d];
                for (r, &xr) in x.iter().enumerate() {
                    if xr == 0.0 {
                        continue;
                    }
                    for (o, &ar) in out.iter_mut().zip(&a[r * d..(r + 1) * d]) {
                        *o += xr * ar;
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Root value of `tree`: leaves are embeddings, each node is
/// `[left, right] · A_rule`.
pub fn decode(_spec: &GrammarSpec, semantics: &SemanticsProgram, tree: &ParseTree) -> Result<Vec<f64>> {
    semantics.dense().decode(tree)
}
