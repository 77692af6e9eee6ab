//! Structured loss functions for both output variants.
//!
//! Taxonomy leaves are compared by the height of their lowest common
//! ancestor (longest downward edge count), so identical leaves cost 0 and
//! the worst case is the root height. Sequences default to normalized
//! Hamming; an unnormalized count and a whole-sequence 0-1 loss are also
//! provided.

use crate::error::{Error, Result};
use crate::model::{OutputSpace, StructuredOutput, Taxonomy};

/// Which structured loss to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[allow(clippy::manual_non_exhaustive)]
pub enum LossSpec {
    /// Height of the lowest common ancestor of two leaves.
    TreeAncestor,
    /// Count of mismatching positions, optionally divided by the length.
    Hamming { normalized: bool },
    /// 0 iff the sequences are identical, else 1.
    SequenceZeroOne,
    /// Identically zero; degenerate loss used to exercise score-only
    /// reductions in tests.
    #[doc(hidden)]
    Null,
}

impl LossSpec {
    /// Default loss for a space: tree-ancestor for taxonomies, normalized
    /// Hamming for sequences.
    pub fn default_for(space: &OutputSpace) -> Self {
        match space {
            OutputSpace::Taxonomy(_) => LossSpec::TreeAncestor,
            OutputSpace::Sequence(_) => LossSpec::Hamming { normalized: true },
        }
    }

    /// True when the loss sums over positions, enabling sequence DP.
    pub fn decomposes_per_position(&self) -> bool {
        matches!(self, LossSpec::Hamming { .. } | LossSpec::Null)
    }

    /// The largest value this loss can take on the space.
    pub fn max_value(&self, space: &OutputSpace) -> f64 {
        match (self, space) {
            (LossSpec::TreeAncestor, OutputSpace::Taxonomy(tax)) => tax.root_height() as f64,
            (LossSpec::Hamming { normalized: true }, _) => 1.0,
            (LossSpec::Hamming { normalized: false }, OutputSpace::Sequence(seq)) => {
                seq.length as f64
            }
            (LossSpec::SequenceZeroOne, _) => 1.0,
            (LossSpec::Null, _) => 0.0,
            // Mismatched pairings surface as errors in evaluate().
            _ => f64::NAN,
        }
    }
}

/// Tree loss: height of the lowest common ancestor of two leaves.
pub fn tree_loss(y: &StructuredOutput, y2: &StructuredOutput, tax: &Taxonomy) -> Result<f64> {
    match (y, y2) {
        (StructuredOutput::Leaf(a), StructuredOutput::Leaf(b)) => {
            Ok(tax.lca_height(*a, *b)? as f64)
        }
        _ => Err(Error::InvalidOutput(
            "tree loss compares taxonomy leaves".into(),
        )),
    }
}

/// Count of positions where the sequences disagree, divided by the length
/// when `normalized`.
pub fn hamming_loss(y: &StructuredOutput, y2: &StructuredOutput, normalized: bool) -> Result<f64> {
    let (a, b) = both_sequences(y, y2)?;
    let mismatches = a.iter().zip(b).filter(|(u, v)| u != v).count() as f64;
    if normalized {
        Ok(mismatches / a.len() as f64)
    } else {
        Ok(mismatches)
    }
}

/// 0 iff the sequences are identical, else 1.
pub fn sequence_zero_one_loss(y: &StructuredOutput, y2: &StructuredOutput) -> Result<f64> {
    let (a, b) = both_sequences(y, y2)?;
    Ok(if a == b { 0.0 } else { 1.0 })
}

fn both_sequences<'a>(
    y: &'a StructuredOutput,
    y2: &'a StructuredOutput,
) -> Result<(&'a [usize], &'a [usize])> {
    match (y, y2) {
        (StructuredOutput::Sequence(a), StructuredOutput::Sequence(b)) => {
            if a.len() != b.len() {
                return Err(Error::dimension("label sequence", a.len(), b.len()));
            }
            Ok((a, b))
        }
        _ => Err(Error::InvalidOutput(
            "sequence loss compares label sequences".into(),
        )),
    }
}

/// Evaluates the configured loss between two outputs of `space`.
pub fn structured_loss(
    spec: LossSpec,
    space: &OutputSpace,
    y: &StructuredOutput,
    y2: &StructuredOutput,
) -> Result<f64> {
    match (spec, space) {
        (LossSpec::TreeAncestor, OutputSpace::Taxonomy(tax)) => tree_loss(y, y2, tax),
        (LossSpec::TreeAncestor, OutputSpace::Sequence(_)) => Err(Error::Contract(
            "tree-ancestor loss needs a taxonomy space".into(),
        )),
        (LossSpec::Hamming { normalized }, _) => hamming_loss(y, y2, normalized),
        (LossSpec::SequenceZeroOne, _) => sequence_zero_one_loss(y, y2),
        (LossSpec::Null, _) => Ok(0.0),
    }
}
