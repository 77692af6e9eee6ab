//! Serde-facing schema types for the JSON file formats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::InferenceBackend;
use crate::loss::LossSpec;
use crate::model::{OutputSpace, SequenceSpace, Taxonomy, TaxonomyNode};

/// Output-space description as written in dataset, model and config files.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SpaceSchema {
    /// Explicit taxonomy as a nested node tree.
    Taxonomy { root: NodeSchema },
    /// Shorthand for a balanced taxonomy with one-hot leaf codes.
    BalancedTaxonomy { branching: usize, depth: usize },
    /// Fixed-length sequences over a label alphabet.
    Sequence {
        alphabet: Vec<String>,
        length: usize,
    },
}

/// One taxonomy node; a node without children is a leaf and may carry an
/// explicit output code.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NodeSchema {
    pub id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<NodeSchema>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<Vec<f64>>,
}

impl From<NodeSchema> for TaxonomyNode {
    fn from(node: NodeSchema) -> Self {
        TaxonomyNode {
            id: node.id,
            children: node.children.into_iter().map(Into::into).collect(),
            code: node.code,
        }
    }
}

impl From<TaxonomyNode> for NodeSchema {
    fn from(node: TaxonomyNode) -> Self {
        NodeSchema {
            id: node.id,
            children: node.children.into_iter().map(Into::into).collect(),
            code: node.code,
        }
    }
}

impl SpaceSchema {
    pub fn build(self) -> Result<OutputSpace> {
        match self {
            SpaceSchema::Taxonomy { root } => {
                Ok(OutputSpace::Taxonomy(Taxonomy::new(root.into())?))
            }
            SpaceSchema::BalancedTaxonomy { branching, depth } => {
                Ok(OutputSpace::Taxonomy(Taxonomy::balanced(branching, depth)?))
            }
            SpaceSchema::Sequence { alphabet, length } => {
                Ok(OutputSpace::Sequence(SequenceSpace::new(alphabet, length)?))
            }
        }
    }

    /// The explicit schema for a space (taxonomies are always written out in
    /// full so files stand alone).
    pub fn from_space(space: &OutputSpace) -> SpaceSchema {
        match space {
            OutputSpace::Taxonomy(tax) => SpaceSchema::Taxonomy {
                root: tax.to_node().into(),
            },
            OutputSpace::Sequence(seq) => SpaceSchema::Sequence {
                alphabet: seq.alphabet.clone(),
                length: seq.length,
            },
        }
    }
}

/// Loss selection as written in config files and CLI flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossChoice {
    /// Lowest-common-ancestor height between taxonomy leaves.
    Tree,
    /// Normalized per-position mismatch rate.
    Hamming,
    /// Raw per-position mismatch count.
    HammingRaw,
    /// Whole-sequence 0-1 loss.
    ZeroOne,
}

impl LossChoice {
    pub fn to_spec(self) -> LossSpec {
        match self {
            LossChoice::Tree => LossSpec::TreeAncestor,
            LossChoice::Hamming => LossSpec::Hamming { normalized: true },
            LossChoice::HammingRaw => LossSpec::Hamming { normalized: false },
            LossChoice::ZeroOne => LossSpec::SequenceZeroOne,
        }
    }

    /// Default choice for a space: tree loss for taxonomies, normalized
    /// Hamming for sequences.
    pub fn default_for(space: &OutputSpace) -> Self {
        match space {
            OutputSpace::Taxonomy(_) => LossChoice::Tree,
            OutputSpace::Sequence(_) => LossChoice::Hamming,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LossChoice::Tree => "tree",
            LossChoice::Hamming => "hamming",
            LossChoice::HammingRaw => "hamming-raw",
            LossChoice::ZeroOne => "zero-one",
        }
    }
}

impl std::str::FromStr for LossChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" => Ok(LossChoice::Tree),
            "hamming" => Ok(LossChoice::Hamming),
            "hamming-raw" => Ok(LossChoice::HammingRaw),
            "zero-one" => Ok(LossChoice::ZeroOne),
            other => Err(Error::Parse(format!(
                "unknown loss '{other}' (expected tree, hamming, hamming-raw or zero-one)"
            ))),
        }
    }
}

/// Inference backend selection for config files and CLI flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendChoice {
    Exhaustive,
    Dp,
}

impl BackendChoice {
    pub fn to_backend(self) -> InferenceBackend {
        match self {
            BackendChoice::Exhaustive => InferenceBackend::Exhaustive,
            BackendChoice::Dp => InferenceBackend::SequenceDp,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BackendChoice::Exhaustive => "exhaustive",
            BackendChoice::Dp => "dp",
        }
    }
}

impl std::str::FromStr for BackendChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(BackendChoice::Exhaustive),
            "dp" => Ok(BackendChoice::Dp),
            other => Err(Error::Parse(format!(
                "unknown backend '{other}' (expected exhaustive or dp)"
            ))),
        }
    }
}
