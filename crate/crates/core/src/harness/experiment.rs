//! Cross-validation experiment runner with a global-predictor baseline.
//!
//! The protocol: shuffle the (fully labeled) dataset into `folds` test
//! folds; for each fold, split the remaining points into a labeled and an
//! unlabeled part, train, then predict every test point with the weights of
//! its nearest training anchor and average the structured loss. The global
//! baseline trains on the labeled part only with one effective predictor
//! (k equal to the labeled count), standing in for single-predictor
//! methods. Both methods share the same seeded fold plan, so their per-fold
//! losses are paired.

use std::path::Path;
use std::time::Instant;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::structured_loss;
use crate::model::{DataPoint, Dataset, Hyperparameters};
use crate::trainer::fit;

use super::dataset_io::load_dataset;
use super::model_io::TrainedModel;
use super::schema::{BackendChoice, LossChoice};
use super::synth::{generate_synthetic, SynthSpec};

/// Where the experiment's dataset comes from.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    /// A dataset file on disk.
    Path(String),
    /// An inline synthetic-generator spec.
    Synth(SynthSpec),
}

/// Experiment configuration (usually parsed from a JSON file).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataSource,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_labeled_fraction")]
    pub labeled_fraction: f64,
    pub seed: u64,
    /// Neighborhood size; defaults to max(2, n/10) for the full dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_eta_decay")]
    pub eta_decay: f64,
    #[serde(default = "default_iters")]
    pub iters: usize,
    #[serde(default)]
    pub early_stop: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<BackendChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enum_cap: Option<u64>,
}

fn default_folds() -> usize {
    10
}

fn default_labeled_fraction() -> f64 {
    0.5
}

fn default_c() -> f64 {
    1.0
}

fn default_eta() -> f64 {
    0.01
}

fn default_eta_decay() -> f64 {
    1.0
}

fn default_iters() -> usize {
    50
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("experiment config: {e}")))
    }

    fn materialize(&self) -> Result<Dataset> {
        match &self.data {
            DataSource::Path(path) => load_dataset(path),
            DataSource::Synth(spec) => generate_synthetic(spec),
        }
    }
}

/// Fully-resolved configuration echoed into every results record.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResolvedConfig {
    pub backend: BackendChoice,
    pub c: f64,
    pub data: DataSource,
    pub early_stop: bool,
    pub eta: f64,
    pub eta_decay: f64,
    pub folds: usize,
    pub iters: usize,
    /// Neighborhood size of the local method (the baseline replaces it with
    /// each fold's labeled count).
    pub k: usize,
    pub labeled_fraction: f64,
    pub loss: LossChoice,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enum_cap: Option<u64>,
}

/// Per-fold losses with their aggregate statistics and the resolved config.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResultsRecord {
    pub config: ResolvedConfig,
    pub fold_losses: Vec<f64>,
    pub mean_loss: f64,
    pub method: String,
    pub std_loss: f64,
    pub wall_clock_seconds: f64,
}

/// One fold's assignment: test points, and the labeled/unlabeled split of
/// the remaining training points. All index lists are ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub test: Vec<usize>,
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
}

/// Seeded fold assignment shared by the local method and the baseline.
pub fn fold_plan(
    n: usize,
    folds: usize,
    labeled_fraction: f64,
    seed: u64,
) -> Result<Vec<FoldSplit>> {
    if folds < 2 || folds > n {
        return Err(Error::Contract(format!(
            "folds = {folds} must satisfy 2 <= folds <= n = {n}"
        )));
    }
    if !(labeled_fraction > 0.0 && labeled_fraction <= 1.0) {
        return Err(Error::Contract(format!(
            "labeled_fraction = {labeled_fraction} must lie in (0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let base = n / folds;
    let extra = n % folds;
    let mut plan = Vec::with_capacity(folds);
    let mut cursor = 0usize;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        let mut test: Vec<usize> = order[cursor..cursor + size].to_vec();
        cursor += size;
        test.sort_unstable();

        let mut train: Vec<usize> = (0..n).filter(|i| !test.contains(i)).collect();
        train.shuffle(&mut rng);
        let l = ((labeled_fraction * train.len() as f64).ceil() as usize).clamp(1, train.len());
        let mut labeled = train[..l].to_vec();
        let mut unlabeled = train[l..].to_vec();
        labeled.sort_unstable();
        unlabeled.sort_unstable();
        plan.push(FoldSplit {
            test,
            labeled,
            unlabeled,
        });
    }
    Ok(plan)
}

fn resolve(cfg: &ExperimentConfig, ds: &Dataset) -> Result<ResolvedConfig> {
    if ds.labeled_count != ds.len() {
        return Err(Error::Contract(
            "experiments need a fully labeled dataset (test folds are scored against truth)".into(),
        ));
    }
    Ok(ResolvedConfig {
        backend: cfg.backend.unwrap_or(BackendChoice::Dp),
        c: cfg.c,
        data: cfg.data.clone(),
        early_stop: cfg.early_stop,
        eta: cfg.eta,
        eta_decay: cfg.eta_decay,
        folds: cfg.folds,
        iters: cfg.iters,
        k: cfg
            .k
            .unwrap_or_else(|| Hyperparameters::default_k(ds.len())),
        labeled_fraction: cfg.labeled_fraction,
        loss: cfg
            .loss
            .unwrap_or_else(|| LossChoice::default_for(&ds.space)),
        seed: cfg.seed,
        enum_cap: cfg.enum_cap,
    })
}

fn run(cfg: &ExperimentConfig, baseline: bool) -> Result<ResultsRecord> {
    let start = Instant::now();
    let ds = cfg.materialize()?;
    let method = if baseline { "global" } else { "sslsop" };
    let resolved = resolve(cfg, &ds)?;
    let loss_spec = resolved.loss.to_spec();
    let plan = fold_plan(
        ds.len(),
        resolved.folds,
        resolved.labeled_fraction,
        resolved.seed,
    )?;

    let mut fold_losses = Vec::with_capacity(plan.len());
    for (f, split) in plan.iter().enumerate() {
        let (train, k) = if baseline {
            (
                build_training_set(&ds, &split.labeled, &[]),
                split.labeled.len(),
            )
        } else {
            (
                build_training_set(&ds, &split.labeled, &split.unlabeled),
                resolved.k,
            )
        };
        if k > train.len() {
            return Err(Error::Contract(format!(
                "fold {f}: k = {k} exceeds the training-split size {}",
                train.len()
            )));
        }
        let hp = Hyperparameters {
            k,
            c: resolved.c,
            eta: resolved.eta,
            iters: resolved.iters,
            eta_decay: resolved.eta_decay,
            early_stop: resolved.early_stop,
        };
        let report = fit(
            &train,
            &hp,
            loss_spec,
            resolved.backend.to_backend(),
            resolved.enum_cap,
        )
        .map_err(|e| e.with_context(format!("fold {f}")))?;
        let model = TrainedModel::from_fit(
            &train,
            &hp,
            resolved.loss,
            resolved.backend,
            resolved.enum_cap,
            &report,
        );

        let mut total = 0.0;
        for &i in &split.test {
            let prediction = model.predict(&ds.points[i].input)?;
            let truth = ds.points[i].truth.as_ref().expect("fully labeled");
            total += structured_loss(loss_spec, &ds.space, truth, &prediction)?;
        }
        let fold_loss = total / split.test.len() as f64;
        info!("{method} fold {f}: test loss {fold_loss:.6}");
        fold_losses.push(fold_loss);
    }

    let mean_loss = fold_losses.iter().sum::<f64>() / fold_losses.len() as f64;
    let var = fold_losses
        .iter()
        .map(|&x| (x - mean_loss) * (x - mean_loss))
        .sum::<f64>()
        / (fold_losses.len() - 1) as f64;
    Ok(ResultsRecord {
        config: resolved,
        fold_losses,
        mean_loss,
        method: method.to_string(),
        std_loss: var.sqrt(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Training split in dataset order: labeled points (keeping their truths)
/// first, then unlabeled points with truths stripped.
fn build_training_set(ds: &Dataset, labeled: &[usize], unlabeled: &[usize]) -> Dataset {
    let mut points: Vec<DataPoint> = Vec::with_capacity(labeled.len() + unlabeled.len());
    for &i in labeled {
        points.push(ds.points[i].clone());
    }
    for &i in unlabeled {
        points.push(DataPoint {
            input: ds.points[i].input.clone(),
            truth: None,
        });
    }
    Dataset {
        points,
        labeled_count: labeled.len(),
        space: ds.space.clone(),
    }
}

/// Runs the local method over the cross-validation protocol.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultsRecord> {
    run(cfg, false)
}

/// Runs the single-global-predictor baseline: labeled data only, one
/// effective weight vector per fold.
pub fn run_baseline_global(cfg: &ExperimentConfig) -> Result<ResultsRecord> {
    run(cfg, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_plan_partitions_every_point_once() {
        let plan = fold_plan(23, 4, 0.5, 7).unwrap();
        let mut seen = [0usize; 23];
        for split in &plan {
            for &i in &split.test {
                seen[i] += 1;
            }
            for &i in split.labeled.iter().chain(&split.unlabeled) {
                assert!(!split.test.contains(&i));
            }
            assert!(!split.labeled.is_empty());
            assert_eq!(
                split.test.len() + split.labeled.len() + split.unlabeled.len(),
                23
            );
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn fold_plan_two_folds_of_ten_points() {
        let plan = fold_plan(10, 2, 1.0, 3).unwrap();
        assert_eq!(plan.len(), 2);
        assert_eq!(plan[0].test.len(), 5);
        assert_eq!(plan[1].test.len(), 5);
        assert!(plan.iter().all(|s| s.unlabeled.is_empty()));
    }

    #[test]
    fn fold_plan_is_seeded() {
        assert_eq!(
            fold_plan(12, 3, 0.5, 9).unwrap(),
            fold_plan(12, 3, 0.5, 9).unwrap()
        );
        assert_ne!(
            fold_plan(12, 3, 0.5, 9).unwrap(),
            fold_plan(12, 3, 0.5, 10).unwrap()
        );
    }

    #[test]
    fn fold_plan_rejects_bad_parameters() {
        assert!(fold_plan(10, 1, 0.5, 0).is_err());
        assert!(fold_plan(10, 11, 0.5, 0).is_err());
        assert!(fold_plan(10, 2, 0.0, 0).is_err());
        assert!(fold_plan(10, 2, 1.1, 0).is_err());
    }
}
