//! Joint input-output representations for both output-space variants.
//!
//! Taxonomy spaces use the tensor (outer) product of the input vector with
//! the leaf's output code, flattened input-index-major. Sequence spaces use a
//! transition histogram over label pairs followed by label-conditioned sums
//! of the per-position input vectors (emission block). The fixed block layout
//! (transitions first, label-major; then emissions, label-major) keeps
//! serialized weight vectors portable.

use crate::error::{Error, Result};
use crate::model::{Dataset, OutputSpace, SequenceSpace, StructuredOutput, Taxonomy};

/// Shape of the joint feature map; `dimension` gives the weight-vector size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMapSpec {
    /// `input_dim * code_dim` tensor-product features.
    TensorProduct { input_dim: usize, code_dim: usize },
    /// `alphabet^2` transition counts plus `alphabet * input_dim` emission
    /// sums, where `input_dim` is the per-position dimension.
    SequenceFeatures {
        alphabet: usize,
        length: usize,
        input_dim: usize,
    },
}

impl FeatureMapSpec {
    /// Derives the spec from an output space and the flat input dimension.
    pub fn for_space(space: &OutputSpace, flat_input_dim: usize) -> Result<Self> {
        match space {
            OutputSpace::Taxonomy(tax) => Ok(FeatureMapSpec::TensorProduct {
                input_dim: flat_input_dim,
                code_dim: tax.code_dim(),
            }),
            OutputSpace::Sequence(seq) => {
                if !flat_input_dim.is_multiple_of(seq.length) {
                    return Err(Error::dimension(
                        "sequence input (must be length * per-position dim)",
                        seq.length,
                        flat_input_dim,
                    ));
                }
                Ok(FeatureMapSpec::SequenceFeatures {
                    alphabet: seq.alphabet.len(),
                    length: seq.length,
                    input_dim: flat_input_dim / seq.length,
                })
            }
        }
    }

    pub fn for_dataset(ds: &Dataset) -> Result<Self> {
        Self::for_space(&ds.space, ds.input_dim())
    }

    pub fn dimension(&self) -> usize {
        feature_dimension(self)
    }

    /// Per-position input dimension (sequence specs only).
    pub fn per_position_dim(&self) -> Option<usize> {
        match self {
            FeatureMapSpec::SequenceFeatures { input_dim, .. } => Some(*input_dim),
            FeatureMapSpec::TensorProduct { .. } => None,
        }
    }
}

/// Joint-feature dimension for a spec.
pub fn feature_dimension(spec: &FeatureMapSpec) -> usize {
    match *spec {
        FeatureMapSpec::TensorProduct {
            input_dim,
            code_dim,
        } => input_dim * code_dim,
        FeatureMapSpec::SequenceFeatures {
            alphabet,
            length: _,
            input_dim,
        } => alphabet * alphabet + alphabet * input_dim,
    }
}

/// Tensor-product feature: the outer product of `x` with the leaf's output
/// code, flattened x-index major.
pub fn joint_feature_tensor(x: &[f64], y: &StructuredOutput, tax: &Taxonomy) -> Result<Vec<f64>> {
    let leaf = match y {
        StructuredOutput::Leaf(leaf) => *leaf,
        StructuredOutput::Sequence(_) => {
            return Err(Error::InvalidOutput(
                "tensor features need a taxonomy leaf".into(),
            ))
        }
    };
    let code = tax.code(leaf)?;
    let mut out = Vec::with_capacity(x.len() * code.len());
    for &xi in x {
        for &ci in code {
            out.push(xi * ci);
        }
    }
    Ok(out)
}

/// Sequence feature: transition-count block then emission-sum block.
///
/// `x` holds the per-position vectors concatenated; position `t` occupies
/// `x[t*d .. (t+1)*d]` with `d = spec.input_dim`.
pub fn joint_feature_sequence(
    x: &[f64],
    y: &StructuredOutput,
    space: &SequenceSpace,
    per_position_dim: usize,
) -> Result<Vec<f64>> {
    let labels = match y {
        StructuredOutput::Sequence(labels) => labels,
        StructuredOutput::Leaf(_) => {
            return Err(Error::InvalidOutput(
                "sequence features need a label sequence".into(),
            ))
        }
    };
    if labels.len() != space.length {
        return Err(Error::dimension(
            "label sequence",
            space.length,
            labels.len(),
        ));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= space.alphabet.len()) {
        return Err(Error::InvalidOutput(format!(
            "label index {bad} out of range (alphabet size {})",
            space.alphabet.len()
        )));
    }
    let a = space.alphabet.len();
    let d = per_position_dim;
    if x.len() != space.length * d {
        return Err(Error::dimension(
            "sequence input",
            space.length * d,
            x.len(),
        ));
    }
    let mut out = vec![0.0; a * a + a * d];
    for t in 0..labels.len().saturating_sub(1) {
        out[labels[t] * a + labels[t + 1]] += 1.0;
    }
    for (t, &label) in labels.iter().enumerate() {
        let emis = &mut out[a * a + label * d..a * a + (label + 1) * d];
        for (e, &xv) in emis.iter_mut().zip(&x[t * d..(t + 1) * d]) {
            *e += xv;
        }
    }
    Ok(out)
}

/// The joint feature map for one output space, bound to its spec.
#[derive(Debug, Clone)]
pub struct FeatureMap<'a> {
    space: &'a OutputSpace,
    spec: FeatureMapSpec,
}

impl<'a> FeatureMap<'a> {
    pub fn new(space: &'a OutputSpace, flat_input_dim: usize) -> Result<Self> {
        Ok(FeatureMap {
            space,
            spec: FeatureMapSpec::for_space(space, flat_input_dim)?,
        })
    }

    pub fn spec(&self) -> FeatureMapSpec {
        self.spec
    }

    pub fn space(&self) -> &OutputSpace {
        self.space
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension()
    }

    /// Materializes the joint feature vector for (x, y).
    pub fn feature(&self, x: &[f64], y: &StructuredOutput) -> Result<Vec<f64>> {
        match (self.space, self.spec) {
            (OutputSpace::Taxonomy(tax), FeatureMapSpec::TensorProduct { input_dim, .. }) => {
                if x.len() != input_dim {
                    return Err(Error::dimension("input vector", input_dim, x.len()));
                }
                joint_feature_tensor(x, y, tax)
            }
            (OutputSpace::Sequence(seq), FeatureMapSpec::SequenceFeatures { input_dim, .. }) => {
                joint_feature_sequence(x, y, seq, input_dim)
            }
            _ => unreachable!("spec is derived from the space"),
        }
    }

    /// `w . feature(x, y)` via the materialized feature vector.
    pub fn score(&self, w: &[f64], x: &[f64], y: &StructuredOutput) -> Result<f64> {
        if w.len() != self.dimension() {
            return Err(Error::dimension("weight vector", self.dimension(), w.len()));
        }
        let phi = self.feature(x, y)?;
        Ok(dot(w, &phi))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TaxonomyNode;
    use proptest::prelude::*;

    fn codes_taxonomy(codes: &[&[f64]]) -> Taxonomy {
        let children = codes
            .iter()
            .enumerate()
            .map(|(i, c)| TaxonomyNode {
                id: format!("l{i}"),
                children: vec![],
                code: Some(c.to_vec()),
            })
            .collect();
        Taxonomy::new(TaxonomyNode::branch("root", children)).unwrap()
    }

    #[test]
    fn tensor_examples() {
        let tax = codes_taxonomy(&[&[0.0, 1.0, 0.0]]);
        let y = StructuredOutput::Leaf(0);
        assert_eq!(
            joint_feature_tensor(&[1.0, 0.0], &y, &tax).unwrap(),
            vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(
            joint_feature_tensor(&[0.0, 0.0], &y, &tax).unwrap(),
            vec![0.0; 6]
        );

        let tax2 = codes_taxonomy(&[&[1.0, 0.0]]);
        assert_eq!(
            joint_feature_tensor(&[2.0, 3.0], &StructuredOutput::Leaf(0), &tax2).unwrap(),
            vec![2.0, 0.0, 3.0, 0.0]
        );
    }

    #[test]
    fn tensor_unknown_leaf() {
        let tax = codes_taxonomy(&[&[1.0]]);
        let err = joint_feature_tensor(&[1.0], &StructuredOutput::Leaf(5), &tax).unwrap_err();
        assert!(matches!(err, Error::InvalidOutput(_)));
    }

    fn ab_space(length: usize) -> SequenceSpace {
        SequenceSpace::new(vec!["a".into(), "b".into()], length).unwrap()
    }

    #[test]
    fn sequence_single_position_has_zero_transitions() {
        let space = ab_space(1);
        let phi = joint_feature_sequence(&[3.0], &StructuredOutput::Sequence(vec![1]), &space, 1)
            .unwrap();
        assert_eq!(phi, vec![0.0, 0.0, 0.0, 0.0, 0.0, 3.0]);
    }

    #[test]
    fn sequence_counts_and_emissions() {
        // A=2, L=3, y=(a,a,b), every position input [1].
        let space = ab_space(3);
        let y = StructuredOutput::Sequence(vec![0, 0, 1]);
        let phi = joint_feature_sequence(&[1.0, 1.0, 1.0], &y, &space, 1).unwrap();
        // transitions (a,a)=1, (a,b)=1; emissions a -> 2, b -> 1
        assert_eq!(phi, vec![1.0, 1.0, 0.0, 0.0, 2.0, 1.0]);
    }

    #[test]
    fn sequence_length_mismatch() {
        let space = ab_space(2);
        let err =
            joint_feature_sequence(&[1.0, 1.0], &StructuredOutput::Sequence(vec![0]), &space, 1)
                .unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
    }

    #[test]
    fn dimensions() {
        assert_eq!(
            feature_dimension(&FeatureMapSpec::TensorProduct {
                input_dim: 10,
                code_dim: 15
            }),
            150
        );
        assert_eq!(
            feature_dimension(&FeatureMapSpec::SequenceFeatures {
                alphabet: 3,
                length: 9,
                input_dim: 4
            }),
            21
        );
        assert_eq!(
            feature_dimension(&FeatureMapSpec::TensorProduct {
                input_dim: 1,
                code_dim: 1
            }),
            1
        );
    }

    #[test]
    fn distinct_leaves_distinct_features_for_nonzero_x() {
        let tax = Taxonomy::balanced(2, 2).unwrap(); // one-hot codes
        let space = OutputSpace::Taxonomy(tax);
        let fmap = FeatureMap::new(&space, 3).unwrap();
        let x = [0.3, -1.2, 0.0];
        for a in 0..4 {
            for b in (a + 1)..4 {
                let fa = fmap.feature(&x, &StructuredOutput::Leaf(a)).unwrap();
                let fb = fmap.feature(&x, &StructuredOutput::Leaf(b)).unwrap();
                assert_ne!(fa, fb);
            }
        }
    }

    proptest! {
        #[test]
        fn tensor_linearity_in_x(
            x1 in proptest::collection::vec(-5.0f64..5.0, 3),
            x2 in proptest::collection::vec(-5.0f64..5.0, 3),
            alpha in -3.0f64..3.0,
            beta in -3.0f64..3.0,
            leaf in 0usize..4,
        ) {
            let tax = Taxonomy::balanced(2, 2).unwrap();
            let y = StructuredOutput::Leaf(leaf);
            let combo: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| alpha * a + beta * b).collect();
            let lhs = joint_feature_tensor(&combo, &y, &tax).unwrap();
            let f1 = joint_feature_tensor(&x1, &y, &tax).unwrap();
            let f2 = joint_feature_tensor(&x2, &y, &tax).unwrap();
            for i in 0..lhs.len() {
                prop_assert!((lhs[i] - (alpha * f1[i] + beta * f2[i])).abs() <= 1e-12);
            }
        }

        #[test]
        fn sequence_decomposes_per_position(
            labels in proptest::collection::vec(0usize..3, 4),
            x in proptest::collection::vec(-2.0f64..2.0, 8),
        ) {
            let space = SequenceSpace::new(vec!["a".into(), "b".into(), "c".into()], 4).unwrap();
            let d = 2;
            let a = 3;
            let y = StructuredOutput::Sequence(labels.clone());
            let phi = joint_feature_sequence(&x, &y, &space, d).unwrap();

            // Independent per-position accumulation of node and edge parts.
            let mut expected = vec![0.0; a * a + a * d];
            for t in 0..labels.len() {
                for dd in 0..d {
                    expected[a * a + labels[t] * d + dd] += x[t * d + dd];
                }
                if t + 1 < labels.len() {
                    expected[labels[t] * a + labels[t + 1]] += 1.0;
                }
            }
            prop_assert_eq!(phi, expected);
        }

        #[test]
        fn score_matches_materialized_dot(
            x in proptest::collection::vec(-2.0f64..2.0, 6),
            w in proptest::collection::vec(-1.0f64..1.0, 18),
            labels in proptest::collection::vec(0usize..3, 2),
        ) {
            let space = OutputSpace::Sequence(
                SequenceSpace::new(vec!["a".into(), "b".into(), "c".into()], 2).unwrap(),
            );
            let fmap = FeatureMap::new(&space, 6).unwrap();
            let y = StructuredOutput::Sequence(labels);
            let phi = fmap.feature(&x, &y).unwrap();
            let by_score = fmap.score(&w, &x, &y).unwrap();
            prop_assert_eq!(by_score, dot(&w, &phi));
        }
    }
}
