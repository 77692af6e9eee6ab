//! Trained-model persistence and test-time prediction.
//!
//! A model file stores the output space, the training configuration, every
//! anchor's input vector and its weight vector. Unseen points are predicted
//! with the weights of their nearest training anchor (Euclidean, ties to
//! the lower anchor index).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::Inferencer;
use crate::model::{Dataset, Hyperparameters, OutputSpace, StructuredOutput};
use crate::trainer::TrainReport;

use super::schema::{BackendChoice, LossChoice, SpaceSchema};

/// A trained predictor bank with everything needed for inductive use.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub space: OutputSpace,
    pub hp: Hyperparameters,
    pub loss: LossChoice,
    pub backend: BackendChoice,
    pub enum_cap: Option<u64>,
    /// Training inputs, one per anchor, aligned with `weights`.
    pub anchors: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
}

impl TrainedModel {
    pub fn from_fit(
        ds: &Dataset,
        hp: &Hyperparameters,
        loss: LossChoice,
        backend: BackendChoice,
        enum_cap: Option<u64>,
        report: &TrainReport,
    ) -> Self {
        TrainedModel {
            space: ds.space.clone(),
            hp: hp.clone(),
            loss,
            backend,
            enum_cap,
            anchors: ds.points.iter().map(|p| p.input.clone()).collect(),
            weights: (0..ds.len())
                .map(|i| report.state.predictors.get(i).to_vec())
                .collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.anchors.first().map_or(0, |a| a.len())
    }

    /// Index of the anchor nearest to `x` (ties to the lower index).
    pub fn nearest_anchor(&self, x: &[f64]) -> Result<usize> {
        if self.anchors.is_empty() {
            return Err(Error::Contract("model has no anchors".into()));
        }
        if x.len() != self.input_dim() {
            return Err(Error::dimension("input vector", self.input_dim(), x.len()));
        }
        let dist2 = |a: &[f64]| -> f64 { a.iter().zip(x).map(|(u, v)| (u - v) * (u - v)).sum() };
        Ok((0..self.anchors.len())
            .min_by(|&p, &q| dist2(&self.anchors[p]).total_cmp(&dist2(&self.anchors[q])))
            .expect("non-empty anchors"))
    }

    /// Predicts a batch of inputs with one shared inference engine.
    pub fn predict_batch(&self, inputs: &[Vec<f64>]) -> Result<Vec<StructuredOutput>> {
        let inferencer = self.inferencer()?;
        inputs
            .iter()
            .map(|x| {
                let anchor = self.nearest_anchor(x)?;
                inferencer.predict(&self.weights[anchor], x)
            })
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<StructuredOutput> {
        let anchor = self.nearest_anchor(x)?;
        self.inferencer()?.predict(&self.weights[anchor], x)
    }

    fn inferencer(&self) -> Result<Inferencer<'_>> {
        let inferencer = Inferencer::new(&self.space, self.input_dim(), self.backend.to_backend())?;
        Ok(match self.enum_cap {
            Some(cap) => inferencer.with_cap(cap),
            None => inferencer,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    space: SpaceSchema,
    hyperparameters: Hyperparameters,
    loss: LossChoice,
    backend: BackendChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    enum_cap: Option<u64>,
    anchors: Vec<Vec<f64>>,
    weights: Vec<Vec<f64>>,
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let file = ModelFile {
        space: SpaceSchema::from_space(&model.space),
        hyperparameters: model.hp.clone(),
        loss: model.loss,
        backend: model.backend,
        enum_cap: model.enum_cap,
        anchors: model.anchors.clone(),
        weights: model.weights.clone(),
    };
    std::fs::write(path.as_ref(), serde_json::to_string_pretty(&file)? + "\n")?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("model: {e}")))?;
    let space = file.space.build()?;
    if file.anchors.len() != file.weights.len() {
        return Err(Error::Parse(format!(
            "model has {} anchors but {} weight vectors",
            file.anchors.len(),
            file.weights.len()
        )));
    }
    for (what, vectors) in [("anchor", &file.anchors), ("weight", &file.weights)] {
        if let Some(bad) = vectors
            .iter()
            .position(|v| v.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::Parse(format!(
                "model {what} vector {bad} contains a non-finite value"
            )));
        }
    }
    Ok(TrainedModel {
        space,
        hp: file.hyperparameters,
        loss: file.loss,
        backend: file.backend,
        enum_cap: file.enum_cap,
        anchors: file.anchors,
        weights: file.weights,
    })
}
