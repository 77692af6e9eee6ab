//! Structured outputs and the spaces they live in.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::model::taxonomy::Taxonomy;

/// One element of the output space: a taxonomy leaf or a fixed-length label
/// sequence. Leaves and labels are stored as canonical indices (pre-order
/// leaf position, alphabet position); string ids live at the I/O boundary.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StructuredOutput {
    Leaf(usize),
    Sequence(Vec<usize>),
}

/// A fixed-length sequence space over a finite label alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSpace {
    pub alphabet: Vec<String>,
    pub length: usize,
}

impl SequenceSpace {
    pub fn new(alphabet: Vec<String>, length: usize) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::InvalidOutput("empty label alphabet".into()));
        }
        if length == 0 {
            return Err(Error::InvalidOutput("sequence length must be >= 1".into()));
        }
        let unique: HashSet<&str> = alphabet.iter().map(|s| s.as_str()).collect();
        if unique.len() != alphabet.len() {
            return Err(Error::InvalidOutput("duplicate label in alphabet".into()));
        }
        Ok(SequenceSpace { alphabet, length })
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.alphabet.iter().position(|l| l == label)
    }
}

/// The space of admissible outputs for a dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum OutputSpace {
    Taxonomy(Taxonomy),
    Sequence(SequenceSpace),
}

impl OutputSpace {
    /// Number of elements, or `None` on overflow.
    pub fn cardinality(&self) -> Option<u128> {
        match self {
            OutputSpace::Taxonomy(tax) => Some(tax.num_leaves() as u128),
            OutputSpace::Sequence(seq) => {
                let a = seq.alphabet.len() as u128;
                let mut total: u128 = 1;
                for _ in 0..seq.length {
                    total = total.checked_mul(a)?;
                }
                Some(total)
            }
        }
    }

    /// Checks that `output` is an element of this space.
    pub fn check(&self, output: &StructuredOutput) -> Result<()> {
        match (self, output) {
            (OutputSpace::Taxonomy(tax), StructuredOutput::Leaf(leaf)) => {
                if *leaf < tax.num_leaves() {
                    Ok(())
                } else {
                    Err(Error::InvalidOutput(format!(
                        "leaf index {leaf} out of range (taxonomy has {} leaves)",
                        tax.num_leaves()
                    )))
                }
            }
            (OutputSpace::Sequence(seq), StructuredOutput::Sequence(labels)) => {
                if labels.len() != seq.length {
                    return Err(Error::dimension("label sequence", seq.length, labels.len()));
                }
                match labels.iter().find(|&&l| l >= seq.alphabet.len()) {
                    Some(l) => Err(Error::InvalidOutput(format!(
                        "label index {l} out of range (alphabet size {})",
                        seq.alphabet.len()
                    ))),
                    None => Ok(()),
                }
            }
            (OutputSpace::Taxonomy(_), StructuredOutput::Sequence(_)) => Err(Error::InvalidOutput(
                "label sequence used with a taxonomy space".into(),
            )),
            (OutputSpace::Sequence(_), StructuredOutput::Leaf(_)) => Err(Error::InvalidOutput(
                "taxonomy leaf used with a sequence space".into(),
            )),
        }
    }

    /// The first element in canonical enumeration order.
    pub fn first(&self) -> StructuredOutput {
        match self {
            OutputSpace::Taxonomy(_) => StructuredOutput::Leaf(0),
            OutputSpace::Sequence(seq) => StructuredOutput::Sequence(vec![0; seq.length]),
        }
    }
}
