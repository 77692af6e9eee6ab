//! Exact inference over the output space: prediction, loss-augmented
//! targets, and output imputation.
//!
//! Every operation exists in two backends. `Exhaustive` enumerates the whole
//! output space in canonical order (taxonomy leaves in pre-order, sequences
//! lexicographically) and scores each candidate through the materialized
//! joint feature vector; it is the reference implementation and the only
//! route for taxonomy spaces. `SequenceDp` solves the same problems on the
//! label lattice in `O(L * A^2)` and must agree with `Exhaustive` exactly
//! (same optimum, same first-in-canonical-order tie rule).
//!
//! Losses that do not decompose over positions (whole-sequence 0-1) fall
//! back to exhaustive enumeration under the DP backend.

use crate::error::{Error, Result};
use crate::features::{dot, FeatureMap};
use crate::loss::{structured_loss, LossSpec};
use crate::model::{
    Dataset, Neighborhood, OutputSpace, SequenceSpace, StructuredOutput, TrainingState,
};

/// Hard limit on exhaustive enumeration unless overridden.
pub const DEFAULT_ENUM_CAP: u64 = 1_000_000;

/// Which machinery answers argmax/argmin queries.
///
/// `SequenceDp` applies to sequence spaces with per-position losses;
/// taxonomy spaces always enumerate (their output sets are small by
/// construction), and non-decomposable losses fall back to enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InferenceBackend {
    Exhaustive,
    #[default]
    SequenceDp,
}

/// Streams all outputs of a space in canonical order.
#[derive(Debug)]
pub enum OutputIter<'a> {
    Leaves {
        next: usize,
        total: usize,
    },
    Sequences {
        space: &'a SequenceSpace,
        current: Option<Vec<usize>>,
    },
}

impl Iterator for OutputIter<'_> {
    type Item = StructuredOutput;

    fn next(&mut self) -> Option<StructuredOutput> {
        match self {
            OutputIter::Leaves { next, total } => {
                if next < total {
                    let leaf = *next;
                    *next += 1;
                    Some(StructuredOutput::Leaf(leaf))
                } else {
                    None
                }
            }
            OutputIter::Sequences { space, current } => {
                let labels = current.take()?;
                let out = StructuredOutput::Sequence(labels.clone());
                // Odometer increment, rightmost position fastest.
                let mut labels = labels;
                let a = space.alphabet.len();
                for t in (0..labels.len()).rev() {
                    labels[t] += 1;
                    if labels[t] < a {
                        *current = Some(labels);
                        return Some(out);
                    }
                    labels[t] = 0;
                }
                Some(out) // odometer wrapped: this was the last element
            }
        }
    }
}

/// All outputs of `space` in canonical order: taxonomy leaves in pre-order,
/// sequences in lexicographic label order. Errors when the space has more
/// than `cap` elements.
pub fn enumerate_outputs(space: &OutputSpace, cap: u64) -> Result<OutputIter<'_>> {
    let size = space.cardinality().unwrap_or(u128::MAX);
    if size > cap as u128 {
        return Err(Error::Capacity { size, cap });
    }
    Ok(match space {
        OutputSpace::Taxonomy(tax) => OutputIter::Leaves {
            next: 0,
            total: tax.num_leaves(),
        },
        OutputSpace::Sequence(seq) => OutputIter::Sequences {
            space: seq,
            current: Some(vec![0; seq.length]),
        },
    })
}

/// Inference engine bound to one output space and input dimension.
#[derive(Debug, Clone)]
pub struct Inferencer<'a> {
    fmap: FeatureMap<'a>,
    backend: InferenceBackend,
    cap: u64,
}

enum Route {
    Exhaustive,
    Dp,
}

impl<'a> Inferencer<'a> {
    pub fn new(
        space: &'a OutputSpace,
        flat_input_dim: usize,
        backend: InferenceBackend,
    ) -> Result<Self> {
        Ok(Inferencer {
            fmap: FeatureMap::new(space, flat_input_dim)?,
            backend,
            cap: DEFAULT_ENUM_CAP,
        })
    }

    /// Overrides the enumeration cap.
    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn space(&self) -> &OutputSpace {
        self.fmap.space()
    }

    pub fn feature_map(&self) -> &FeatureMap<'a> {
        &self.fmap
    }

    pub fn backend(&self) -> InferenceBackend {
        self.backend
    }

    fn route(&self, loss: Option<LossSpec>) -> Route {
        match (self.space(), self.backend) {
            (OutputSpace::Taxonomy(_), _) => Route::Exhaustive,
            (OutputSpace::Sequence(_), InferenceBackend::Exhaustive) => Route::Exhaustive,
            (OutputSpace::Sequence(_), InferenceBackend::SequenceDp) => match loss {
                Some(l) if !l.decomposes_per_position() => Route::Exhaustive,
                _ => Route::Dp,
            },
        }
    }

    fn check_weight_dim(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.fmap.dimension() {
            return Err(Error::dimension(
                "weight vector",
                self.fmap.dimension(),
                w.len(),
            ));
        }
        Ok(())
    }

    /// Highest-scoring output for weights `w` at input `x`; ties go to the
    /// first output in canonical order.
    pub fn predict(&self, w: &[f64], x: &[f64]) -> Result<StructuredOutput> {
        self.check_weight_dim(w)?;
        match self.route(None) {
            Route::Exhaustive => Ok(self.exhaustive_score_argmax(w, x)?.0),
            Route::Dp => {
                let lattice = self.score_lattice(w, x)?;
                Ok(StructuredOutput::Sequence(lattice.solve(false).0))
            }
        }
    }

    /// Loss-augmented argmax: the output maximizing
    /// `w . (phi(x, y') - phi(x, y_cur)) + loss(y_cur, y')`, together with
    /// that maximum. The maximum upper-bounds `loss(y_cur, predict(w, x))`
    /// and is never negative (`y' = y_cur` attains 0); on the exhaustive
    /// route both inequalities hold exactly, since every candidate's value
    /// is accumulated as `(score gap) + loss` with the gap at the score
    /// argmax non-negative by construction.
    pub fn loss_augmented_argmax(
        &self,
        w: &[f64],
        x: &[f64],
        y_cur: &StructuredOutput,
        loss: LossSpec,
    ) -> Result<(StructuredOutput, f64)> {
        self.check_weight_dim(w)?;
        let score_cur = self.fmap.score(w, x, y_cur)?;
        match self.route(Some(loss)) {
            Route::Exhaustive => {
                let mut best: Option<(StructuredOutput, f64)> = None;
                for y in enumerate_outputs(self.space(), self.cap)? {
                    let value = (self.fmap.score(w, x, &y)? - score_cur)
                        + structured_loss(loss, self.space(), y_cur, &y)?;
                    match &best {
                        Some((_, bv)) if value <= *bv => {}
                        _ => best = Some((y, value)),
                    }
                }
                Ok(best.expect("output spaces are non-empty"))
            }
            Route::Dp => {
                let mut lattice = self.score_lattice(w, x)?;
                lattice.add_loss_against(loss, y_cur, self.space())?;
                let (labels, value) = lattice.solve(false);
                Ok((StructuredOutput::Sequence(labels), value - score_cur))
            }
        }
    }

    /// Output minimizing the summed per-anchor imputation objective
    /// `sum_anchors inv_k * (loss(y, target) - w . phi(x, y))`.
    pub fn impute_argmin(
        &self,
        x: &[f64],
        terms: &[ImputeTerm<'_>],
        inv_k: f64,
        loss: LossSpec,
    ) -> Result<StructuredOutput> {
        if terms.is_empty() {
            return Err(Error::Contract(
                "imputation needs at least one covering neighborhood".into(),
            ));
        }
        for term in terms {
            self.check_weight_dim(term.weights)?;
            self.space().check(term.target)?;
        }
        match self.route(Some(loss)) {
            Route::Exhaustive => {
                let mut best: Option<(StructuredOutput, f64)> = None;
                for y in enumerate_outputs(self.space(), self.cap)? {
                    let mut value = 0.0;
                    for term in terms {
                        value += inv_k
                            * (structured_loss(loss, self.space(), &y, term.target)?
                                - self.fmap.score(term.weights, x, &y)?);
                    }
                    match &best {
                        Some((_, bv)) if value >= *bv => {}
                        _ => best = Some((y, value)),
                    }
                }
                Ok(best.expect("output spaces are non-empty").0)
            }
            Route::Dp => {
                let (_, a, d, l) = self.sequence_shape()?;
                check_flat_input(x, l, d)?;
                let mut lattice = Lattice::zeros(l, a);
                for term in terms {
                    let target = match term.target {
                        StructuredOutput::Sequence(labels) => labels,
                        StructuredOutput::Leaf(_) => unreachable!("checked above"),
                    };
                    let unit = per_position_loss_unit(loss, l);
                    for t in 0..l {
                        for label in 0..a {
                            let emis = emission_score(term.weights, x, a, d, t, label);
                            let miss = if label != target[t] { unit } else { 0.0 };
                            lattice.node[t * a + label] += inv_k * (miss - emis);
                        }
                    }
                    for from in 0..a {
                        for to in 0..a {
                            lattice.edge[from * a + to] -= inv_k * term.weights[from * a + to];
                        }
                    }
                }
                Ok(StructuredOutput::Sequence(lattice.solve(true).0))
            }
        }
    }

    /// Builds the score-only lattice for `w` at `x` (sequence spaces).
    fn score_lattice(&self, w: &[f64], x: &[f64]) -> Result<Lattice> {
        let (_, a, d, l) = self.sequence_shape()?;
        check_flat_input(x, l, d)?;
        let mut lattice = Lattice::zeros(l, a);
        for t in 0..l {
            for label in 0..a {
                lattice.node[t * a + label] = emission_score(w, x, a, d, t, label);
            }
        }
        lattice.edge.copy_from_slice(&w[..a * a]);
        Ok(lattice)
    }

    fn sequence_shape(&self) -> Result<(&SequenceSpace, usize, usize, usize)> {
        match (self.space(), self.fmap.spec().per_position_dim()) {
            (OutputSpace::Sequence(seq), Some(d)) => Ok((seq, seq.alphabet.len(), d, seq.length)),
            _ => Err(Error::Contract(
                "sequence DP requested for a non-sequence space".into(),
            )),
        }
    }

    /// First strict maximizer of the materialized score over the space.
    fn exhaustive_score_argmax(&self, w: &[f64], x: &[f64]) -> Result<(StructuredOutput, f64)> {
        let mut best: Option<(StructuredOutput, f64)> = None;
        for y in enumerate_outputs(self.space(), self.cap)? {
            let value = self.fmap.score(w, x, &y)?;
            match &best {
                Some((_, bv)) if value <= *bv => {}
                _ => best = Some((y, value)),
            }
        }
        Ok(best.expect("output spaces are non-empty"))
    }
}

/// One covering neighborhood's contribution to output imputation.
#[derive(Debug, Clone, Copy)]
pub struct ImputeTerm<'a> {
    pub weights: &'a [f64],
    pub target: &'a StructuredOutput,
}

/// Imputes the output of unlabeled point `i`: the argmin over the space of
/// the summed per-anchor objective over every neighborhood containing `i`,
/// using the current weights and augmented targets.
pub fn impute_output(
    i: usize,
    state: &TrainingState,
    neighborhoods: &[Neighborhood],
    ds: &Dataset,
    loss: LossSpec,
    inferencer: &Inferencer<'_>,
) -> Result<StructuredOutput> {
    if ds.is_labeled(i) {
        return Err(Error::Contract(format!(
            "impute_output called for labeled point {i}"
        )));
    }
    if !state.augmented.is_initialized() {
        return Err(Error::Contract(
            "augmented targets have not been refreshed".into(),
        ));
    }
    let k = neighborhoods
        .first()
        .map(|nbh| nbh.members.len())
        .unwrap_or(0);
    let mut terms = Vec::new();
    for anchor in 0..neighborhoods.len() {
        if let Some(target) = state.augmented.lookup(anchor, i, neighborhoods) {
            terms.push(ImputeTerm {
                weights: state.predictors.get(anchor),
                target,
            });
        }
    }
    if terms.is_empty() {
        return Err(Error::Contract(format!(
            "point {i} is covered by no neighborhood"
        )));
    }
    inferencer.impute_argmin(&ds.points[i].input, &terms, 1.0 / k as f64, loss)
}

fn check_flat_input(x: &[f64], length: usize, per_position_dim: usize) -> Result<()> {
    if x.len() != length * per_position_dim {
        return Err(Error::dimension(
            "sequence input",
            length * per_position_dim,
            x.len(),
        ));
    }
    Ok(())
}

fn emission_score(w: &[f64], x: &[f64], a: usize, d: usize, t: usize, label: usize) -> f64 {
    dot(
        &w[a * a + label * d..a * a + (label + 1) * d],
        &x[t * d..(t + 1) * d],
    )
}

/// Per-position contribution of a decomposable loss for one mismatch.
fn per_position_loss_unit(loss: LossSpec, length: usize) -> f64 {
    match loss {
        LossSpec::Hamming { normalized: true } => 1.0 / length as f64,
        LossSpec::Hamming { normalized: false } => 1.0,
        LossSpec::Null => 0.0,
        LossSpec::TreeAncestor | LossSpec::SequenceZeroOne => {
            unreachable!("non-decomposable losses never reach the DP route")
        }
    }
}

/// Max-sum (or min-sum) lattice over label sequences: `node[t*a + label]`
/// plus `edge[prev*a + next]` summed along the sequence.
struct Lattice {
    length: usize,
    alphabet: usize,
    node: Vec<f64>,
    edge: Vec<f64>,
}

impl Lattice {
    fn zeros(length: usize, alphabet: usize) -> Self {
        Lattice {
            length,
            alphabet,
            node: vec![0.0; length * alphabet],
            edge: vec![0.0; alphabet * alphabet],
        }
    }

    /// Adds the per-position loss against `y_cur` to the node scores.
    fn add_loss_against(
        &mut self,
        loss: LossSpec,
        y_cur: &StructuredOutput,
        space: &OutputSpace,
    ) -> Result<()> {
        let labels = match y_cur {
            StructuredOutput::Sequence(labels) => labels,
            StructuredOutput::Leaf(_) => {
                return Err(Error::InvalidOutput(
                    "sequence lattice compared against a taxonomy leaf".into(),
                ))
            }
        };
        space.check(y_cur)?;
        let unit = per_position_loss_unit(loss, self.length);
        for t in 0..self.length {
            for label in 0..self.alphabet {
                if label != labels[t] {
                    self.node[t * self.alphabet + label] += unit;
                }
            }
        }
        Ok(())
    }

    /// Returns the optimal label sequence and its value. Ties resolve to the
    /// lexicographically-first optimal sequence, matching the canonical
    /// enumeration order of the exhaustive backend.
    fn solve(&self, minimize: bool) -> (Vec<usize>, f64) {
        let (l, a) = (self.length, self.alphabet);
        let better = |cand: f64, best: f64| if minimize { cand < best } else { cand > best };

        // suffix[t*a + s]: best value of positions t.. given label s at t.
        let mut suffix = vec![0.0; l * a];
        for s in 0..a {
            suffix[(l - 1) * a + s] = self.node[(l - 1) * a + s];
        }
        for t in (0..l - 1).rev() {
            for s in 0..a {
                let mut best = f64::NAN;
                for b in 0..a {
                    let cand = self.edge[s * a + b] + suffix[(t + 1) * a + b];
                    if best.is_nan() || better(cand, best) {
                        best = cand;
                    }
                }
                suffix[t * a + s] = self.node[t * a + s] + best;
            }
        }

        // Greedy front-to-back reconstruction, picking the smallest label
        // that attains the recorded optimum at each step.
        let mut labels = Vec::with_capacity(l);
        let mut best = f64::NAN;
        for s in 0..a {
            if best.is_nan() || better(suffix[s], best) {
                best = suffix[s];
            }
        }
        let total = best;
        let first = (0..a)
            .find(|&s| suffix[s] == total)
            .expect("optimum exists");
        labels.push(first);
        for t in 1..l {
            let prev = labels[t - 1];
            let mut step_best = f64::NAN;
            for b in 0..a {
                let cand = self.edge[prev * a + b] + suffix[t * a + b];
                if step_best.is_nan() || better(cand, step_best) {
                    step_best = cand;
                }
            }
            let next = (0..a)
                .find(|&b| self.edge[prev * a + b] + suffix[t * a + b] == step_best)
                .expect("optimum exists");
            labels.push(next);
        }
        (labels, total)
    }
}
