use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `N × M` matrix of sentences over the vocabulary `{0..vocab-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenMatrix {
    rows: usize,
    cols: usize,
    vocab: usize,
    data: Vec<u32>,
}

impl TokenMatrix {
    pub fn new(rows: usize, cols: usize, vocab: usize, data: Vec<u32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::contract(format!(
                "{} tokens supplied for a {rows}x{cols} sentence matrix",
                data.len()
            )));
        }
        if let Some(&bad) = data.iter().find(|&&t| t as usize >= vocab) {
            return Err(Error::TokenOutOfRange { token: bad, vocab });
        }
        Ok(Self { rows, cols, vocab, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn permute_rows(&self, order: &[usize]) -> TokenMatrix {
        let mut data = Vec::with_capacity(order.len() * self.cols);
        for &r in order {
            data.extend_from_slice(self.row(r));
        }
        TokenMatrix { rows: order.len(), cols: self.cols, vocab: self.vocab, data }
    }
}
