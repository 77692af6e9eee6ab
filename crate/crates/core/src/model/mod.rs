//! Domain types shared by all modules: outputs and output spaces, datasets,
//! neighborhoods, predictor banks, hyperparameters and the training state.
//!
//! All types here are plain value objects. `TrainingState` is the one
//! exception to immutability: it is mutated only by the trainer phases under
//! a single-writer contract, and read-only snapshots are safe to share.

pub mod output;
pub mod taxonomy;

use serde::{Deserialize, Serialize};

pub use output::{OutputSpace, SequenceSpace, StructuredOutput};
pub use taxonomy::{Taxonomy, TaxonomyNode};

use crate::error::{Error, Result};

/// One training point: a dense input vector and, for labeled points, the
/// ground-truth output. For sequence spaces the input holds the per-position
/// vectors concatenated (position `t` occupies `input[t*d .. (t+1)*d]`).
#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint {
    pub input: Vec<f64>,
    pub truth: Option<StructuredOutput>,
}

/// A training set: `labeled_count` labeled points followed by the unlabeled
/// remainder, all sharing one input dimension and one output space.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub points: Vec<DataPoint>,
    pub labeled_count: usize,
    pub space: OutputSpace,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_labeled(&self, i: usize) -> bool {
        i < self.labeled_count
    }

    pub fn unlabeled_count(&self) -> usize {
        self.len() - self.labeled_count
    }

    /// Flat input dimension shared by all points (0 for an empty dataset).
    pub fn input_dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.input.len())
    }

    /// Collects every invariant violation; an empty report means valid.
    pub fn validate(&self) -> Vec<String> {
        validate_dataset(self)
    }
}

/// Returns every invariant violation in the dataset (empty = valid):
/// missing labels, label/unlabeled ordering, dimension mismatches,
/// non-finite inputs and outputs outside the space.
pub fn validate_dataset(ds: &Dataset) -> Vec<String> {
    let mut report = Vec::new();
    if ds.labeled_count == 0 {
        report.push("no labeled points".to_string());
    }
    if ds.labeled_count > ds.len() {
        report.push(format!(
            "labeled_count {} exceeds dataset size {}",
            ds.labeled_count,
            ds.len()
        ));
    }
    let dim = ds.input_dim();
    if let OutputSpace::Sequence(seq) = &ds.space {
        if !ds.is_empty() && !dim.is_multiple_of(seq.length) {
            report.push(format!(
                "input dimension {dim} is not a multiple of the sequence length {}",
                seq.length
            ));
        }
    }
    for (i, p) in ds.points.iter().enumerate() {
        if p.input.len() != dim {
            report.push(format!(
                "point {i}: input dimension {} (expected {dim})",
                p.input.len()
            ));
        }
        if p.input.iter().any(|v| !v.is_finite()) {
            report.push(format!("point {i}: non-finite input value"));
        }
        match (&p.truth, ds.is_labeled(i)) {
            (None, true) => report.push(format!("point {i}: labeled but truth is absent")),
            (Some(_), false) => {
                report.push(format!("point {i}: unlabeled but carries a truth output"))
            }
            (Some(truth), true) => {
                if let Err(e) = ds.space.check(truth) {
                    report.push(format!("point {i}: {e}"));
                }
            }
            (None, false) => {}
        }
    }
    report
}

/// Indices of the `k` training points nearest to an anchor point.
///
/// The anchor is always first; remaining members follow by increasing
/// distance, ties to the lower index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub anchor: usize,
    pub members: Vec<usize>,
}

/// One weight vector per training point, all of the joint-feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorBank {
    weights: Vec<Vec<f64>>,
    dim: usize,
}

impl PredictorBank {
    /// `n` zero vectors of dimension `dim`.
    pub fn zeros(n: usize, dim: usize) -> Self {
        PredictorBank {
            weights: vec![vec![0.0; dim]; n],
            dim,
        }
    }

    pub fn from_vecs(weights: Vec<Vec<f64>>) -> Result<Self> {
        let dim = weights.first().map_or(0, |w| w.len());
        if let Some(bad) = weights.iter().position(|w| w.len() != dim) {
            return Err(Error::dimension(
                format!("weight vector {bad}"),
                dim,
                weights[bad].len(),
            ));
        }
        Ok(PredictorBank { weights, dim })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.weights[i]
    }

    pub fn get_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.weights[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.weights.iter().map(|w| w.as_slice())
    }

    pub fn into_vecs(self) -> Vec<Vec<f64>> {
        self.weights
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// Neighborhood size (anchor included).
    pub k: usize,
    /// Regularization scale (>= 0).
    pub c: f64,
    /// Sub-gradient step size (> 0).
    pub eta: f64,
    /// Maximum outer iterations (>= 1).
    pub iters: usize,
    /// Multiplicative per-iteration step decay in (0, 1].
    pub eta_decay: f64,
    /// Stop early once the objective's relative change drops below 1e-8.
    #[serde(default)]
    pub early_stop: bool,
}

impl Hyperparameters {
    /// Defaults for an `n`-point dataset: k = max(2, n/10), C = 1, eta = 0.01,
    /// 50 iterations, no decay.
    pub fn for_dataset_size(n: usize) -> Self {
        Hyperparameters {
            k: Self::default_k(n),
            c: 1.0,
            eta: 0.01,
            iters: 50,
            eta_decay: 1.0,
            early_stop: false,
        }
    }

    pub fn default_k(n: usize) -> usize {
        (n / 10).max(2).min(n.max(1))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k < 1 || self.k > n {
            return Err(Error::Contract(format!(
                "k = {} must satisfy 1 <= k <= n = {n}",
                self.k
            )));
        }
        if !self.c.is_finite() || self.c < 0.0 {
            return Err(Error::Contract(format!(
                "C = {} must be finite and >= 0",
                self.c
            )));
        }
        if !self.eta.is_finite() || self.eta <= 0.0 {
            return Err(Error::Contract(format!(
                "eta = {} must be finite and > 0",
                self.eta
            )));
        }
        if self.iters < 1 {
            return Err(Error::Contract("iteration count must be >= 1".into()));
        }
        if !self.eta_decay.is_finite() || self.eta_decay <= 0.0 || self.eta_decay > 1.0 {
            return Err(Error::Contract(format!(
                "eta_decay = {} must lie in (0, 1]",
                self.eta_decay
            )));
        }
        Ok(())
    }
}

/// Cached loss-augmented targets, one per (anchor, member) pair, refreshed
/// once per outer iteration. Entries are aligned with each neighborhood's
/// member order; `based_on` records the (weights, outputs) versions of the
/// state they were computed from so stale use is detected.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedTargets {
    per_anchor: Vec<Vec<StructuredOutput>>,
    pub(crate) based_on: Option<(u64, u64)>,
}

impl AugmentedTargets {
    pub fn empty(n: usize) -> Self {
        AugmentedTargets {
            per_anchor: vec![Vec::new(); n],
            based_on: None,
        }
    }

    pub fn is_initialized(&self) -> bool {
        self.based_on.is_some()
    }

    /// Number of (anchor, member) entries.
    pub fn len(&self) -> usize {
        self.per_anchor.iter().map(|v| v.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Target for the `pos`-th member of `anchor`'s neighborhood.
    pub fn get(&self, anchor: usize, pos: usize) -> &StructuredOutput {
        &self.per_anchor[anchor][pos]
    }

    /// Target for point `member` inside `anchor`'s neighborhood.
    pub fn lookup(
        &self,
        anchor: usize,
        member: usize,
        neighborhoods: &[Neighborhood],
    ) -> Option<&StructuredOutput> {
        let pos = neighborhoods[anchor]
            .members
            .iter()
            .position(|&j| j == member)?;
        self.per_anchor[anchor].get(pos)
    }

    pub(crate) fn set_anchor(&mut self, anchor: usize, targets: Vec<StructuredOutput>) {
        self.per_anchor[anchor] = targets;
    }
}

/// Mutable state carried across training iterations.
///
/// Single-writer: only the trainer phases mutate it. The version counters
/// let the augmented-target cache detect staleness.
#[derive(Debug, Clone)]
pub struct TrainingState {
    pub predictors: PredictorBank,
    /// Current outputs for all points; labeled entries always equal truth.
    pub outputs: Vec<StructuredOutput>,
    pub augmented: AugmentedTargets,
    /// Objective value per completed iteration (index 0 = initial state).
    pub objective_trace: Vec<f64>,
    pub(crate) weights_version: u64,
    pub(crate) outputs_version: u64,
}

impl TrainingState {
    pub fn new(predictors: PredictorBank, outputs: Vec<StructuredOutput>) -> Self {
        let n = outputs.len();
        TrainingState {
            predictors,
            outputs,
            augmented: AugmentedTargets::empty(n),
            objective_trace: Vec::new(),
            weights_version: 0,
            outputs_version: 0,
        }
    }

    /// True when labeled outputs all match the dataset's ground truth.
    pub fn labeled_outputs_match(&self, ds: &Dataset) -> bool {
        (0..ds.labeled_count).all(|i| Some(&self.outputs[i]) == ds.points[i].truth.as_ref())
    }
}
