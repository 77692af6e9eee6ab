//! Joint training of per-neighborhood predictors and imputed outputs.
//!
//! Each outer iteration runs three phases in a fixed order: refresh the
//! loss-augmented targets for every (anchor, member) pair, take one
//! sub-gradient step on every local predictor, then recompute the outputs
//! (labeled points snap to ground truth, unlabeled points take the exact
//! minimizer of their partial objective). The surrogate objective is
//! recorded after every iteration.
//!
//! Phase functions are public so callers (and tests) can drive the loop
//! themselves; `fit` composes them. Within the weight phase the per-anchor
//! work is independent; everything here runs single-threaded so traces are
//! bit-reproducible.

use log::debug;

use crate::error::{Error, Result};
use crate::inference::{ImputeTerm, InferenceBackend, Inferencer, DEFAULT_ENUM_CAP};
use crate::loss::{structured_loss, LossSpec};
use crate::model::{
    Dataset, Hyperparameters, Neighborhood, OutputSpace, PredictorBank, TrainingState,
};

/// Relative objective change below which `early_stop` halts training.
pub const EARLY_STOP_REL_TOL: f64 = 1e-8;

/// Immutable per-run context: the dataset, the loss, the inference engine,
/// and the neighborhood structure with its inverted covering index.
pub struct TrainContext<'a> {
    pub dataset: &'a Dataset,
    pub loss: LossSpec,
    pub inferencer: Inferencer<'a>,
    pub neighborhoods: Vec<Neighborhood>,
    /// For each point, the (anchor, member-position) pairs covering it,
    /// ascending by anchor.
    covering: Vec<Vec<(usize, usize)>>,
    k: usize,
}

impl<'a> TrainContext<'a> {
    pub fn new(
        dataset: &'a Dataset,
        k: usize,
        loss: LossSpec,
        backend: InferenceBackend,
        enum_cap: Option<u64>,
    ) -> Result<Self> {
        let report = dataset.validate();
        if !report.is_empty() {
            return Err(Error::Validation(report));
        }
        check_loss_space(loss, &dataset.space)?;
        let inferencer = Inferencer::new(&dataset.space, dataset.input_dim(), backend)?
            .with_cap(enum_cap.unwrap_or(DEFAULT_ENUM_CAP));
        let neighborhoods = build_neighborhoods(dataset, k)?;
        let covering = covering_sets(&neighborhoods, dataset.len());
        Ok(TrainContext {
            dataset,
            loss,
            inferencer,
            neighborhoods,
            covering,
            k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Anchors whose neighborhood contains `point`, with member positions.
    pub fn covering(&self, point: usize) -> &[(usize, usize)] {
        &self.covering[point]
    }

    fn inv_k(&self) -> f64 {
        1.0 / self.k as f64
    }
}

fn check_loss_space(loss: LossSpec, space: &OutputSpace) -> Result<()> {
    let compatible = match loss {
        LossSpec::TreeAncestor => matches!(space, OutputSpace::Taxonomy(_)),
        LossSpec::Hamming { .. } | LossSpec::SequenceZeroOne => {
            matches!(space, OutputSpace::Sequence(_))
        }
        LossSpec::Null => true,
    };
    if compatible {
        Ok(())
    } else {
        Err(Error::Contract(format!(
            "loss {loss:?} does not apply to this output space"
        )))
    }
}

/// Squared Euclidean distance between two input vectors.
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The k nearest points (Euclidean) to every point, each anchored
/// neighborhood listing the anchor first and then the remaining members by
/// increasing distance, ties to the lower index.
pub fn build_neighborhoods(ds: &Dataset, k: usize) -> Result<Vec<Neighborhood>> {
    let n = ds.len();
    if k < 1 || k > n {
        return Err(Error::Contract(format!(
            "neighborhood size k = {k} must satisfy 1 <= k <= n = {n}"
        )));
    }
    let mut neighborhoods = Vec::with_capacity(n);
    for anchor in 0..n {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&p, &q| {
            let key = |j: usize| {
                (
                    j != anchor,
                    dist2(&ds.points[anchor].input, &ds.points[j].input),
                    j,
                )
            };
            let (pa, da, ia) = key(p);
            let (qa, db, ib) = key(q);
            pa.cmp(&qa).then(da.total_cmp(&db)).then(ia.cmp(&ib))
        });
        order.truncate(k);
        neighborhoods.push(Neighborhood {
            anchor,
            members: order,
        });
    }
    Ok(neighborhoods)
}

/// Inverted index: for every point, the (anchor, member-position) pairs of
/// the neighborhoods containing it, ascending by anchor.
pub fn covering_sets(neighborhoods: &[Neighborhood], n: usize) -> Vec<Vec<(usize, usize)>> {
    let mut covering = vec![Vec::new(); n];
    for (anchor, nbh) in neighborhoods.iter().enumerate() {
        for (pos, &member) in nbh.members.iter().enumerate() {
            covering[member].push((anchor, pos));
        }
    }
    covering
}

/// Members of a neighborhood with their positions, ascending by point
/// index. Sums over a neighborhood use this order so accumulated floats do
/// not depend on distance ordering.
fn members_by_index(nbh: &Neighborhood) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = nbh.members.iter().copied().zip(0..).collect();
    pairs.sort_unstable();
    pairs
}

fn require_fresh_targets(state: &TrainingState, what: &str) -> Result<()> {
    match state.augmented.based_on {
        Some((wv, ov)) if wv == state.weights_version && ov == state.outputs_version => Ok(()),
        Some(_) => Err(Error::Contract(format!(
            "stale augmented targets: refresh them before {what}"
        ))),
        None => Err(Error::Contract(format!(
            "augmented targets never refreshed before {what}"
        ))),
    }
}

/// Recomputes the loss-augmented target for every (anchor, member) pair
/// from the current weights and outputs.
pub fn refresh_augmented_targets(ctx: &TrainContext<'_>, state: &mut TrainingState) -> Result<()> {
    for (anchor, nbh) in ctx.neighborhoods.iter().enumerate() {
        let w = state.predictors.get(anchor);
        let mut targets = Vec::with_capacity(nbh.members.len());
        for &j in &nbh.members {
            let (target, _) = ctx.inferencer.loss_augmented_argmax(
                w,
                &ctx.dataset.points[j].input,
                &state.outputs[j],
                ctx.loss,
            )?;
            targets.push(target);
        }
        state.augmented.set_anchor(anchor, targets);
    }
    state.augmented.based_on = Some((state.weights_version, state.outputs_version));
    Ok(())
}

/// Sub-gradient of anchor `i`'s local objective at the current weights:
/// the mean feature gap between augmented targets and current outputs over
/// the neighborhood, plus the regularizer `c * w_i`.
pub fn subgradient(
    ctx: &TrainContext<'_>,
    state: &TrainingState,
    i: usize,
    c: f64,
) -> Result<Vec<f64>> {
    require_fresh_targets(state, "taking a sub-gradient")?;
    let fmap = ctx.inferencer.feature_map();
    let w = state.predictors.get(i);
    let mut sum = vec![0.0; w.len()];
    for (j, pos) in members_by_index(&ctx.neighborhoods[i]) {
        let x = &ctx.dataset.points[j].input;
        let phi_target = fmap.feature(x, state.augmented.get(i, pos))?;
        let phi_current = fmap.feature(x, &state.outputs[j])?;
        for (s, (pt, pc)) in sum.iter_mut().zip(phi_target.iter().zip(&phi_current)) {
            *s += pt - pc;
        }
    }
    let inv_k = ctx.inv_k();
    for (s, wv) in sum.iter_mut().zip(w) {
        *s = *s * inv_k + c * wv;
    }
    Ok(sum)
}

/// One sub-gradient step on every predictor, all from the same pre-update
/// snapshot (each anchor's gradient involves only its own weights).
pub fn update_weights(
    ctx: &TrainContext<'_>,
    state: &mut TrainingState,
    eta: f64,
    c: f64,
) -> Result<()> {
    require_fresh_targets(state, "updating weights")?;
    for i in 0..ctx.dataset.len() {
        let grad = subgradient(ctx, state, i, c)?;
        let w = state.predictors.get_mut(i);
        for (wv, g) in w.iter_mut().zip(&grad) {
            *wv -= eta * g;
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite weights for predictor {i} after update"
            )));
        }
    }
    state.weights_version += 1;
    Ok(())
}

fn require_targets_for_outputs(state: &TrainingState) -> Result<()> {
    match state.augmented.based_on {
        // The weight phase may have advanced exactly once since the refresh
        // (the per-iteration order is refresh -> weights -> outputs).
        Some((wv, ov))
            if ov == state.outputs_version
                && (wv == state.weights_version || wv + 1 == state.weights_version) =>
        {
            Ok(())
        }
        Some(_) => Err(Error::Contract(
            "stale augmented targets: refresh them before updating outputs".into(),
        )),
        None => Err(Error::Contract(
            "augmented targets never refreshed before updating outputs".into(),
        )),
    }
}

/// Recomputes every output: labeled points snap to ground truth, unlabeled
/// points (ascending index) take the exact minimizer of their partial
/// objective given the current weights and augmented targets.
pub fn update_outputs(ctx: &TrainContext<'_>, state: &mut TrainingState) -> Result<()> {
    require_targets_for_outputs(state)?;
    let ds = ctx.dataset;
    for i in 0..ds.len() {
        if ds.is_labeled(i) {
            state.outputs[i] = ds.points[i].truth.clone().expect("validated labeled point");
            continue;
        }
        let cover = ctx.covering(i);
        if cover.is_empty() {
            return Err(Error::Contract(format!(
                "point {i} is covered by no neighborhood"
            )));
        }
        let terms: Vec<ImputeTerm<'_>> = cover
            .iter()
            .map(|&(anchor, pos)| ImputeTerm {
                weights: state.predictors.get(anchor),
                target: state.augmented.get(anchor, pos),
            })
            .collect();
        state.outputs[i] =
            ctx.inferencer
                .impute_argmin(&ds.points[i].input, &terms, ctx.inv_k(), ctx.loss)?;
    }
    state.outputs_version += 1;
    debug_assert!(state.labeled_outputs_match(ds));
    Ok(())
}

/// The combined surrogate objective at the current weights, outputs, and
/// augmented targets: per-neighborhood mean of (score gap + loss against
/// the augmented target), plus the quadratic regularizer.
pub fn objective(ctx: &TrainContext<'_>, state: &TrainingState, c: f64) -> Result<f64> {
    if !state.augmented.is_initialized() {
        return Err(Error::Contract(
            "augmented targets never refreshed before evaluating the objective".into(),
        ));
    }
    let fmap = ctx.inferencer.feature_map();
    let mut total = 0.0;
    for (anchor, nbh) in ctx.neighborhoods.iter().enumerate() {
        let w = state.predictors.get(anchor);
        let mut inner = 0.0;
        for (j, pos) in members_by_index(nbh) {
            let x = &ctx.dataset.points[j].input;
            let target = state.augmented.get(anchor, pos);
            let current = &state.outputs[j];
            inner += fmap.score(w, x, target)? - fmap.score(w, x, current)?
                + structured_loss(ctx.loss, &ctx.dataset.space, current, target)?;
        }
        let reg = 0.5 * c * dot_self(w);
        total += ctx.inv_k() * inner + reg;
    }
    Ok(total)
}

fn dot_self(w: &[f64]) -> f64 {
    w.iter().map(|v| v * v).sum()
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub iterations_run: usize,
    /// Objective after every iteration; index 0 is the initial state, so the
    /// length is `iterations_run + 1`.
    pub objective_trace: Vec<f64>,
    pub state: TrainingState,
}

/// Builds the initial state: zero weights everywhere, labeled outputs set to
/// ground truth, unlabeled outputs copied from the nearest labeled point.
pub fn initial_state(ctx: &TrainContext<'_>) -> TrainingState {
    let ds = ctx.dataset;
    let m = ctx.inferencer.feature_map().dimension();
    let outputs = (0..ds.len())
        .map(|i| {
            if ds.is_labeled(i) {
                ds.points[i].truth.clone().expect("validated labeled point")
            } else {
                let nearest = (0..ds.labeled_count)
                    .min_by(|&p, &q| {
                        dist2(&ds.points[i].input, &ds.points[p].input)
                            .total_cmp(&dist2(&ds.points[i].input, &ds.points[q].input))
                            .then(p.cmp(&q))
                    })
                    .expect("validated datasets have labeled points");
                ds.points[nearest].truth.clone().expect("labeled point")
            }
        })
        .collect();
    TrainingState::new(PredictorBank::zeros(ds.len(), m), outputs)
}

/// Runs the full training loop on a validated dataset.
pub fn fit(
    ds: &Dataset,
    hp: &Hyperparameters,
    loss: LossSpec,
    backend: InferenceBackend,
    enum_cap: Option<u64>,
) -> Result<TrainReport> {
    hp.validate(ds.len())?;
    let ctx = TrainContext::new(ds, hp.k, loss, backend, enum_cap)?;
    let mut state = initial_state(&ctx);

    refresh_augmented_targets(&ctx, &mut state)?;
    let initial = objective(&ctx, &state, hp.c)?;
    state.objective_trace.push(initial);
    debug!("initial objective {initial:.6}");

    let mut iterations_run = 0;
    for t in 1..=hp.iters {
        let eta_t = hp.eta * hp.eta_decay.powi(t as i32 - 1);
        refresh_augmented_targets(&ctx, &mut state).map_err(|e| e.in_iteration(t))?;
        update_weights(&ctx, &mut state, eta_t, hp.c).map_err(|e| e.in_iteration(t))?;
        update_outputs(&ctx, &mut state).map_err(|e| e.in_iteration(t))?;
        let value = objective(&ctx, &state, hp.c).map_err(|e| e.in_iteration(t))?;
        state.objective_trace.push(value);
        iterations_run = t;
        debug!("iteration {t}: objective {value:.6}, eta {eta_t:.6}");

        if hp.early_stop {
            let prev = state.objective_trace[t - 1];
            if (value - prev).abs() <= EARLY_STOP_REL_TOL * prev.abs().max(1.0) {
                debug!("early stop at iteration {t}");
                break;
            }
        }
    }

    assert!(
        state.labeled_outputs_match(ds),
        "labeled outputs must equal ground truth after training"
    );
    let objective_trace = state.objective_trace.clone();
    Ok(TrainReport {
        iterations_run,
        objective_trace,
        state,
    })
}
