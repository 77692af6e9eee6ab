//! Command-line interface for local structured output prediction.
//!
//! Subcommands: `validate`, `synth`, `train`, `experiment`, `predict`.
//! Log verbosity comes from the `RUST_LOG` environment variable
//! (e.g. `RUST_LOG=info`). Exit codes: 0 success, 1 usage error,
//! 2 data error, 3 numeric error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use sslsop::harness::{
    emit_results, generate_synthetic, load_dataset, load_model, parse_records, run_baseline_global,
    run_experiment, save_dataset, save_model, BackendChoice, ExperimentConfig, LossChoice,
    ResultsFormat, SynthSpec, TrainedModel,
};
use sslsop::model::{Hyperparameters, OutputSpace, StructuredOutput};
use sslsop::{structured_loss, Error};

#[derive(Parser)]
#[command(
    name = "sslsop",
    about = "Semi-supervised local structured output prediction",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a dataset file against every format and consistency rule.
    Validate {
        /// Dataset file (JSON).
        data: PathBuf,
    },
    /// Generate a synthetic clustered dataset from a generator spec.
    Synth {
        /// Generator spec file (JSON).
        spec: PathBuf,
        /// Where to write the dataset.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Train local predictors on a dataset and save the model.
    Train(TrainArgs),
    /// Run a cross-validation experiment from a config file.
    Experiment {
        /// Experiment config file (JSON).
        config: PathBuf,
        /// Run the single-global-predictor baseline instead.
        #[arg(long)]
        baseline: bool,
        /// Where to write the results.
        #[arg(short, long)]
        output: PathBuf,
        /// Results format: json or csv.
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Predict outputs for a file of inputs using a trained model.
    Predict {
        /// Model file written by `train`.
        model: PathBuf,
        /// Input file (dataset format; truths, when present, are scored).
        data: PathBuf,
        /// Write predictions here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// Training dataset file (JSON).
    data: PathBuf,
    /// Neighborhood size; defaults to max(2, n/10).
    #[arg(long)]
    k: Option<usize>,
    /// Regularization scale.
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    /// Sub-gradient step size.
    #[arg(long, default_value_t = 0.01)]
    eta: f64,
    /// Multiplicative per-iteration step decay in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    eta_decay: f64,
    /// Outer iterations.
    #[arg(long, default_value_t = 50)]
    iters: usize,
    /// Stop early when the objective stops changing.
    #[arg(long)]
    early_stop: bool,
    /// Random seed (accepted for interface stability; training itself is
    /// deterministic and ignores it).
    #[arg(long)]
    seed: Option<u64>,
    /// Inference backend: exhaustive or dp.
    #[arg(long)]
    backend: Option<String>,
    /// Loss: tree, hamming, hamming-raw or zero-one (defaults by space).
    #[arg(long)]
    loss: Option<String>,
    /// Cap on exhaustive output-space enumeration.
    #[arg(long)]
    enum_cap: Option<u64>,
    /// Where to write the trained model.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 3 for numeric failures, 2 for everything else that reaches here.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numeric(_) => 3,
        Error::Iteration { source, .. } | Error::Context { source, .. } => exit_code(source),
        _ => 2,
    }
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Validate { data } => validate(data),
        Command::Synth { spec, output } => synth(spec, output),
        Command::Train(args) => train(args),
        Command::Experiment {
            config,
            baseline,
            output,
            format,
        } => experiment(config, baseline, output, format),
        Command::Predict {
            model,
            data,
            output,
        } => predict(model, data, output),
    }
}

fn validate(data: PathBuf) -> Result<(), Error> {
    let ds = load_dataset(&data)?;
    println!(
        "valid: {} points ({} labeled, {} unlabeled), input dimension {}",
        ds.len(),
        ds.labeled_count,
        ds.unlabeled_count(),
        ds.input_dim()
    );
    Ok(())
}

fn synth(spec: PathBuf, output: PathBuf) -> Result<(), Error> {
    let text = std::fs::read_to_string(&spec)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", spec.display())))?;
    let spec: SynthSpec =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("synth spec: {e}")))?;
    let ds = generate_synthetic(&spec)?;
    save_dataset(&ds, &output)?;
    println!(
        "wrote {} points ({} clusters of {}) to {}",
        ds.len(),
        spec.clusters,
        spec.points_per_cluster,
        output.display()
    );
    Ok(())
}

fn train(args: TrainArgs) -> Result<(), Error> {
    let ds = load_dataset(&args.data)?;
    let hp = Hyperparameters {
        k: args
            .k
            .unwrap_or_else(|| Hyperparameters::default_k(ds.len())),
        c: args.c,
        eta: args.eta,
        iters: args.iters,
        eta_decay: args.eta_decay,
        early_stop: args.early_stop,
    };
    let loss = match &args.loss {
        Some(name) => name.parse::<LossChoice>()?,
        None => LossChoice::default_for(&ds.space),
    };
    let backend = match &args.backend {
        Some(name) => name.parse::<BackendChoice>()?,
        None => BackendChoice::Dp,
    };
    if args.seed.is_some() {
        info!("--seed has no effect: training is deterministic");
    }

    let report = sslsop::fit(
        &ds,
        &hp,
        loss.to_spec(),
        backend.to_backend(),
        args.enum_cap,
    )?;
    let trace = &report.objective_trace;
    println!(
        "trained {} local predictors: {} iterations, objective {:.6} -> {:.6}",
        ds.len(),
        report.iterations_run,
        trace.first().copied().unwrap_or(f64::NAN),
        trace.last().copied().unwrap_or(f64::NAN),
    );
    if let Some(path) = args.output {
        let model = TrainedModel::from_fit(&ds, &hp, loss, backend, args.enum_cap, &report);
        save_model(&model, &path)?;
        println!("model written to {}", path.display());
    }
    Ok(())
}

fn experiment(
    config: PathBuf,
    baseline: bool,
    output: PathBuf,
    format: String,
) -> Result<(), Error> {
    let cfg = ExperimentConfig::from_file(&config)?;
    let format: ResultsFormat = format.parse()?;
    let record = if baseline {
        run_baseline_global(&cfg)?
    } else {
        run_experiment(&cfg)?
    };
    emit_results(&record, &output, format)?;
    println!(
        "{}: mean test loss {:.6} (std {:.6}) over {} folds in {:.2}s -> {}",
        record.method,
        record.mean_loss,
        record.std_loss,
        record.fold_losses.len(),
        record.wall_clock_seconds,
        output.display()
    );
    Ok(())
}

fn predict(model: PathBuf, data: PathBuf, output: Option<PathBuf>) -> Result<(), Error> {
    let model = load_model(&model)?;
    let text = std::fs::read_to_string(&data)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", data.display())))?;
    let (space, points) = parse_records(&text)?;
    if space != model.space {
        return Err(Error::Contract(
            "the input file's output space differs from the model's".into(),
        ));
    }

    let inputs: Vec<Vec<f64>> = points.iter().map(|p| p.input.clone()).collect();
    let predictions = model.predict_batch(&inputs)?;

    let mut scored = 0usize;
    let mut total_loss = 0.0;
    for (p, pred) in points.iter().zip(&predictions) {
        if let Some(truth) = &p.truth {
            total_loss += structured_loss(model.loss.to_spec(), &space, truth, pred)?;
            scored += 1;
        }
    }
    let average_loss = (scored > 0).then(|| total_loss / scored as f64);

    let rendered = render_predictions(&space, &predictions, average_loss)?;
    match output {
        Some(path) => {
            std::fs::write(&path, rendered)?;
            println!("predictions written to {}", path.display());
        }
        None => print!("{rendered}"),
    }
    if let Some(avg) = average_loss {
        println!("average loss over {scored} labeled points: {avg:.6}");
    }
    Ok(())
}

fn render_predictions(
    space: &OutputSpace,
    predictions: &[StructuredOutput],
    average_loss: Option<f64>,
) -> Result<String, Error> {
    let rendered: Vec<serde_json::Value> = predictions
        .iter()
        .map(|p| match (p, space) {
            (StructuredOutput::Leaf(leaf), OutputSpace::Taxonomy(tax)) => {
                serde_json::Value::String(tax.leaf_id(*leaf).expect("prediction in space").into())
            }
            (StructuredOutput::Sequence(labels), OutputSpace::Sequence(seq)) => {
                serde_json::Value::Array(
                    labels
                        .iter()
                        .map(|&l| serde_json::Value::String(seq.alphabet[l].clone()))
                        .collect(),
                )
            }
            _ => unreachable!("predictions come from the model's own space"),
        })
        .collect();
    let doc = serde_json::json!({
        "average_loss": average_loss,
        "predictions": rendered,
    });
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}
