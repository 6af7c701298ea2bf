//! `preasp`: measure pre-aspiration onset/offset times in speech intervals.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use preasp_cli::commands::{
    cmd_evaluate, cmd_extract, cmd_predict, cmd_synth, cmd_train, EvalInput, EvaluateArgs,
    SplitSpec, SynthArgs,
};
use preasp_cli::config::{ModelKind, RunConfig};
use preasp_cli::{CliError, Result};
use preasp_core::evaluation::ToleranceMode;

#[derive(Parser)]
#[command(
    name = "preasp",
    about = "Pre-aspiration boundary measurement: synthesize, extract, train, predict, evaluate",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Hyperparameter overrides shared by train/predict/evaluate. Every value
/// has a documented default; a config file (--config) is applied first, then
/// these flags on top.
#[derive(Args, Default)]
struct Overrides {
    /// Flat key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Fraction of training data held out for validation.
    #[arg(long)]
    val_fraction: Option<f64>,
    /// Worker threads for extraction and per-fold evaluation.
    #[arg(long)]
    jobs: Option<usize>,
    /// PA aggressiveness parameter C.
    #[arg(long)]
    c: Option<f64>,
    /// Task-loss slack in ms.
    #[arg(long)]
    epsilon_ms: Option<f64>,
    /// Minimum candidate duration in ms.
    #[arg(long)]
    min_dur_ms: Option<usize>,
    /// Maximum candidate duration in ms.
    #[arg(long)]
    max_dur_ms: Option<usize>,
    /// Structured training epoch cap.
    #[arg(long)]
    pa_max_epochs: Option<usize>,
    /// Structured early-stopping patience.
    #[arg(long)]
    pa_patience: Option<usize>,
    /// Return the averaged PA weight vector.
    #[arg(long)]
    average_weights: Option<bool>,
    /// Frame-model learning rate.
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Frame-model mini-batch size.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Frame-model epoch cap.
    #[arg(long)]
    frame_max_epochs: Option<usize>,
    /// Frame-model early-stopping patience.
    #[arg(long)]
    frame_patience: Option<usize>,
    /// Hidden-layer dropout rate during training.
    #[arg(long)]
    dropout_rate: Option<f64>,
    /// Decoder moving-average window in ms.
    #[arg(long)]
    smooth_ms: Option<usize>,
    /// Decoder binarization threshold.
    #[arg(long)]
    threshold: Option<f64>,
    /// Voicing decision threshold of the pitch detector.
    #[arg(long)]
    voicing_threshold: Option<f64>,
}

impl Overrides {
    fn build(&self, model: Option<ModelKind>) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.load_file(path)?;
        }
        if let Some(m) = model {
            cfg.model = m;
        }
        macro_rules! apply {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        apply!(
            seed,
            val_fraction,
            jobs,
            c,
            epsilon_ms,
            min_dur_ms,
            max_dur_ms,
            pa_max_epochs,
            pa_patience,
            average_weights,
            learning_rate,
            batch_size,
            frame_max_epochs,
            frame_patience,
            dropout_rate,
            smooth_ms,
            threshold,
            voicing_threshold
        );
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic corpus with exactly known boundaries.
    Synth {
        /// Output directory for WAVs + annotations.csv.
        #[arg(long)]
        out: PathBuf,
        /// Number of tokens.
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Number of speakers (round-robin).
        #[arg(long, default_value_t = 8)]
        speakers: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 16000)]
        sample_rate: u32,
    },
    /// Dump the 8-feature sequence of one WAV as CSV.
    Extract {
        #[arg(long)]
        audio: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Train a model on an annotation CSV with gold labels.
    Train {
        #[arg(long)]
        annotations: PathBuf,
        /// Model type: structured | frame.
        #[arg(long, default_value = "structured")]
        model: ModelKind,
        /// Output model file.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Predict boundaries for every record of an annotation CSV.
    Predict {
        #[arg(long)]
        model_file: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        /// Output predictions CSV.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Score predictions, or run a full train+test split protocol.
    Evaluate {
        #[arg(long)]
        annotations: PathBuf,
        /// Predictions CSV to score (mutually exclusive with --split).
        #[arg(long, conflicts_with = "split")]
        predictions: Option<PathBuf>,
        /// Split protocol: kfold:<k> or loso (trains per fold).
        #[arg(long)]
        split: Option<SplitSpec>,
        /// Model type for --split runs: structured | frame.
        #[arg(long, default_value = "structured")]
        model: ModelKind,
        /// Tolerance criterion: duration | boundaries.
        #[arg(long, default_value = "duration")]
        tolerance_mode: String,
        /// Write the report as CSV.
        #[arg(long)]
        report_csv: Option<PathBuf>,
        /// Write all (pooled) test predictions as CSV.
        #[arg(long)]
        predictions_out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Synth {
            out,
            n,
            speakers,
            seed,
            sample_rate,
        } => cmd_synth(&SynthArgs {
            out_dir: out,
            n,
            speakers,
            seed,
            sample_rate,
        }),
        Cmd::Extract {
            audio,
            out,
            overrides,
        } => {
            let cfg = overrides.build(None)?;
            cmd_extract(&audio, &out, &cfg)
        }
        Cmd::Train {
            annotations,
            model,
            out,
            overrides,
        } => {
            let cfg = overrides.build(Some(model))?;
            cmd_train(&annotations, &out, &cfg)
        }
        Cmd::Predict {
            model_file,
            annotations,
            out,
            overrides,
        } => {
            let cfg = overrides.build(None)?;
            cmd_predict(&model_file, &annotations, &out, &cfg)
        }
        Cmd::Evaluate {
            annotations,
            predictions,
            split,
            model,
            tolerance_mode,
            report_csv,
            predictions_out,
            overrides,
        } => {
            let cfg = overrides.build(Some(model))?;
            let tolerance_mode = match tolerance_mode.as_str() {
                "duration" => ToleranceMode::Duration,
                "boundaries" => ToleranceMode::Boundaries,
                other => {
                    return Err(CliError::usage(format!(
                        "unknown tolerance mode `{other}` (duration|boundaries)"
                    )))
                }
            };
            let input = match (predictions, split) {
                (Some(p), None) => EvalInput::Predictions(p),
                (None, Some(s)) => EvalInput::Split(s),
                (None, None) => {
                    return Err(CliError::usage(
                        "evaluate needs either --predictions or --split",
                    ))
                }
                (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
            };
            cmd_evaluate(
                &EvaluateArgs {
                    annotations,
                    input,
                    tolerance_mode,
                    report_csv,
                    predictions_out,
                },
                &cfg,
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
