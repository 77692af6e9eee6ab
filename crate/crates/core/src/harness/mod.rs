//! Experiment harness: dataset files, synthetic data, cross-validation
//! runs with a global baseline, model persistence and results emission.

mod dataset_io;
mod experiment;
mod model_io;
mod results;
mod schema;
mod synth;

pub use dataset_io::{load_dataset, parse_dataset, parse_records, render_dataset, save_dataset};
pub use experiment::{
    fold_plan, run_baseline_global, run_experiment, DataSource, ExperimentConfig, FoldSplit,
    ResolvedConfig, ResultsRecord,
};
pub use model_io::{load_model, save_model, TrainedModel};
pub use results::{emit_results, render_results, ResultsFormat};
pub use schema::{BackendChoice, LossChoice, SpaceSchema};
pub use synth::{generate_synthetic, generate_synthetic_with_rules, SynthSpec};
