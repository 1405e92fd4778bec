use serde::{Deserialize, Serialize};

use crate::codelen::Lattice;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Targets {
    /// `slots` class labels per record, each below `classes`.
    Classes { slots: usize, classes: usize, data: Vec<u32> },
    /// `dims` lattice indices per record.
    Lattice { dims: usize, lattice: Lattice, data: Vec<i64> },
}

impl Targets {
    pub fn width(&self) -> usize {
        match self {
            Targets::Classes { slots, .. } => *slots,
            Targets::Lattice { dims, .. } => *dims,
        }
    }

    fn data_len(&self) -> usize {
        match self {
            Targets::Classes { data, .. } => data.len(),
            Targets::Lattice { data, .. } => data.len(),
        }
    }

    fn gather(&self, rows: &[usize]) -> Targets {
        let w = self.width();
        match self {
            Targets::Classes { slots, classes, data } => Targets::Classes {
                slots: *slots,
                classes: *classes,
                data: rows.iter().flat_map(|&r| data[r * w..(r + 1) * w].iter().copied()).collect(),
            },
            Targets::Lattice { dims, lattice, data } => Targets::Lattice {
                dims: *dims,
                lattice: *lattice,
                data: rows.iter().flat_map(|&r| data[r * w..(r + 1) * w].iter().copied()).collect(),
            },
        }
    }
}

/// Input token rows paired with targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Records {
    inputs: usize,
    tokens: Vec<u32>,
    targets: Targets,
}

impl Records {
    pub fn new(inputs: usize, tokens: Vec<u32>, targets: Targets) -> Result<Self> {
        if inputs == 0 || targets.width() == 0 {
            return Err(Error::param("records need at least one token and one target"));
        }
        if tokens.len() % inputs != 0 || tokens.len() / inputs * targets.width() != targets.data_len() {
            return Err(Error::contract("token and target counts disagree"));
        }
        if let Targets::Classes { classes, data, .. } = &targets {
            if let Some(&bad) = data.iter().find(|&&y| y as usize >= *classes) {
                return Err(Error::contract(format!("class {bad} outside {classes} classes")));
            }
        }
        Ok(Self { inputs, tokens, targets })
    }

    pub fn len(&self) -> usize {
        self.tokens.len() / self.inputs
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    /// Largest token plus one.
    pub fn min_vocab(&self) -> usize {
        self.tokens.iter().max().map_or(0, |&t| t as usize + 1)
    }

    /// Records in the given order.
    pub fn select(&self, rows: &[usize]) -> Records {
        let m = self.inputs;
        Records {
            inputs: m,
            tokens: rows.iter().flat_map(|&r| self.tokens[r * m..(r + 1) * m].iter().copied()).collect(),
            targets: self.targets.gather(rows),
        }
    }

    pub fn range(&self, start: usize, end: usize) -> Records {
        self.select(&(start..end).collect::<Vec<_>>())
    }
}
