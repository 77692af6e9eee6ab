//! Semi-supervised local structured output prediction.
//!
//! Instead of one global predictor, every training point anchors a local
//! linear predictor over its k-nearest neighborhood, scored through a joint
//! input-output feature map. Training alternates three exact phases:
//! refreshing loss-augmented targets (the hinge upper bound's maximizers),
//! sub-gradient steps on every local predictor, and exact re-imputation of
//! the unlabeled points' outputs. Two output-space variants are supported —
//! taxonomy leaves under a lowest-common-ancestor height loss, and
//! fixed-length label sequences under Hamming or whole-sequence 0-1 loss —
//! each with an exhaustive inference backend and, for sequences, an exact
//! dynamic-programming backend.
//!
//! The [`harness`] module adds dataset files, synthetic data generation, a
//! cross-validation experiment runner with a global-predictor baseline, and
//! deterministic results emission; the `sslsop` binary exposes all of it on
//! the command line.

pub mod error;
pub mod features;
pub mod harness;
pub mod inference;
pub mod loss;
pub mod model;
pub mod trainer;

pub use error::{Error, Result};
pub use features::{feature_dimension, FeatureMap, FeatureMapSpec};
pub use inference::{enumerate_outputs, InferenceBackend, Inferencer, DEFAULT_ENUM_CAP};
pub use loss::{hamming_loss, sequence_zero_one_loss, structured_loss, tree_loss, LossSpec};
pub use model::{
    validate_dataset, AugmentedTargets, DataPoint, Dataset, Hyperparameters, Neighborhood,
    OutputSpace, PredictorBank, SequenceSpace, StructuredOutput, Taxonomy, TaxonomyNode,
    TrainingState,
};
pub use trainer::{
    build_neighborhoods, fit, objective, refresh_augmented_targets, subgradient, update_outputs,
    update_weights, TrainContext, TrainReport,
};
