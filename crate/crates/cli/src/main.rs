//! `lsit`: the synthetic shadow-image cytometry pipeline from the command line.
//!
//! Every command writes into a fresh output directory and finishes with a
//! `run.txt` manifest listing the resolved settings and a SHA-256 per file.

mod commands;
mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Settings;
use crate::error::CliResult;

#[derive(Parser)]
#[command(name = "lsit", version, about = "Synthetic lens-free shadow-image cytometry pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// `key = value` file; flags override its entries
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args)]
struct Training {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Early-stopping patience in epochs; negative disables it
    #[arg(long, allow_hyphen_values = true)]
    patience: Option<i64>,
    /// Train on at most this many (evenly strided) samples
    #[arg(long)]
    max_train: Option<usize>,
    #[arg(long)]
    max_val: Option<usize>,
    /// Crop samples to this side before training
    #[arg(long)]
    input_size: Option<usize>,
}

impl Training {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("epochs", s(&self.epochs)),
            ("batch", s(&self.batch)),
            ("lr", s(&self.lr)),
            ("patience", s(&self.patience)),
            ("max_train", s(&self.max_train)),
            ("max_val", s(&self.max_val)),
            ("input_size", s(&self.input_size)),
        ]
    }
}

fn s<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(ToString::to_string)
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled, rotation-augmented dataset
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        base_per_class: Option<usize>,
        /// Requested train,val,test sample counts per class
        #[arg(long)]
        split: Option<String>,
        /// Comma-separated subset of the default class names
        #[arg(long)]
        classes: Option<String>,
        /// Also export this many PGM previews per class
        #[arg(long)]
        pgm_per_class: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Write a noisy copy of one split
    Corrupt {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        variance: Option<f64>,
        #[arg(long = "split")]
        eval_split: Option<String>,
        #[arg(long)]
        limit: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Denoise a corrupted split and report SNR improvement
    Denoise {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// gaussian, average, median, bilateral, cnn, elm or identity
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        variance: Option<f64>,
        /// Checkpoint directory for the learned methods
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        kernel: Option<usize>,
        #[arg(long = "split")]
        eval_split: Option<String>,
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        panels: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Train a CNN, dense or ELM denoising autoencoder
    TrainDenoiser {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// cnn-denoiser, fc-denoiser, fc-denoiser-deep or elm
        #[arg(long)]
        model: Option<String>,
        /// Comma-separated noise variances used during training
        #[arg(long)]
        variances: Option<String>,
        #[arg(long)]
        elm_hidden: Option<usize>,
        #[arg(long)]
        elm_c: Option<f64>,
        #[arg(long)]
        elm_samples: Option<usize>,
        /// Fit the ELM sequentially in chunks of this size
        #[arg(long)]
        elm_chunk: Option<usize>,
        #[command(flatten)]
        training: Training,
        #[command(flatten)]
        common: Common,
    },
    /// Train a classifier
    TrainClassifier {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// classifier or deep-classifier
        #[arg(long)]
        arch: Option<String>,
        /// Leave this class out, e.g. to transfer it in later
        #[arg(long)]
        exclude: Option<String>,
        #[command(flatten)]
        training: Training,
        #[command(flatten)]
        common: Common,
    },
    /// Add one class to a trained classifier by retraining its head only
    Transfer {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        new_class: Option<String>,
        #[command(flatten)]
        training: Training,
        #[command(flatten)]
        common: Common,
    },
    /// Confusion matrix, per-class metrics and ROC curves
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "split")]
        eval_split: Option<String>,
        #[arg(long)]
        limit: Option<usize>,
        /// Evaluate on inputs corrupted at this variance
        #[arg(long)]
        variance: Option<f64>,
        /// Denoise corrupted inputs with this checkpoint first
        #[arg(long)]
        denoiser: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Grad-CAM and saliency maps for a few samples per class
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long = "split")]
        eval_split: Option<String>,
        #[arg(long)]
        variance: Option<f64>,
        #[arg(long)]
        denoiser: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Mean SNR improvement per variance and method
    Sweep {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        variances: Option<String>,
        /// Comma-separated methods (default: all six)
        #[arg(long)]
        methods: Option<String>,
        #[arg(long)]
        cnn: Option<PathBuf>,
        #[arg(long)]
        elm: Option<PathBuf>,
        #[arg(long)]
        limit: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

fn p(v: &Option<PathBuf>) -> Option<String> {
    v.as_ref().map(|p| p.display().to_string())
}

fn settings(common: &Common, mut flags: Vec<(&'static str, Option<String>)>) -> CliResult<Settings> {
    flags.push(("seed", s(&common.seed)));
    Settings::resolve(common.config.as_deref(), &flags)
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Synth {
            out,
            window,
            base_per_class,
            split,
            classes,
            pgm_per_class,
            common,
        } => {
            let mut st = settings(
                &common,
                vec![
                    ("window", s(&window)),
                    ("base_per_class", s(&base_per_class)),
                    ("split", split),
                    ("classes", classes),
                    ("pgm_per_class", s(&pgm_per_class)),
                ],
            )?;
            commands::synth(&mut st, &out)
        }
        Command::Corrupt {
            data,
            out,
            variance,
            eval_split,
            limit,
            common,
        } => {
            let mut st = settings(
                &common,
                vec![("variance", s(&variance)), ("eval_split", eval_split), ("limit", s(&limit))],
            )?;
            commands::corrupt(&mut st, &data, &out)
        }
        Command::Denoise {
            data,
            out,
            method,
            variance,
            model,
            kernel,
            eval_split,
            limit,
            panels,
            common,
        } => {
            let mut st = settings(
                &common,
                vec![
                    ("method", method),
                    ("variance", s(&variance)),
                    ("model", p(&model)),
                    ("kernel", s(&kernel)),
                    ("eval_split", eval_split),
                    ("limit", s(&limit)),
                    ("panels", s(&panels)),
                ],
            )?;
            commands::denoise(&mut st, &data, &out)
        }
        Command::TrainDenoiser {
            data,
            out,
            model,
            variances,
            elm_hidden,
            elm_c,
            elm_samples,
            elm_chunk,
            training,
            common,
        } => {
            let mut flags = training.flags();
            flags.extend([
                ("model", model),
                ("variances", variances),
                ("elm_hidden", s(&elm_hidden)),
                ("elm_c", s(&elm_c)),
                ("elm_samples", s(&elm_samples)),
                ("elm_chunk", s(&elm_chunk)),
            ]);
            let mut st = settings(&common, flags)?;
            commands::train_denoiser_cmd(&mut st, &data, &out)
        }
        Command::TrainClassifier {
            data,
            out,
            arch,
            exclude,
            training,
            common,
        } => {
            let mut flags = training.flags();
            flags.extend([("arch", arch), ("exclude", exclude)]);
            let mut st = settings(&common, flags)?;
            commands::train_classifier_cmd(&mut st, &data, &out)
        }
        Command::Transfer {
            model,
            data,
            out,
            new_class,
            training,
            common,
        } => {
            let mut flags = training.flags();
            flags.push(("new_class", new_class));
            let mut st = settings(&common, flags)?;
            commands::transfer(&mut st, &model, &data, &out)
        }
        Command::Eval {
            model,
            data,
            out,
            eval_split,
            limit,
            variance,
            denoiser,
            common,
        } => {
            let mut st = settings(
                &common,
                vec![
                    ("eval_split", eval_split),
                    ("limit", s(&limit)),
                    ("variance", s(&variance)),
                    ("denoiser", p(&denoiser)),
                ],
            )?;
            commands::eval(&mut st, &model, &data, &out)
        }
        Command::Explain {
            model,
            data,
            out,
            count,
            eval_split,
            variance,
            denoiser,
            common,
        } => {
            let mut st = settings(
                &common,
                vec![
                    ("count", s(&count)),
                    ("eval_split", eval_split),
                    ("variance", s(&variance)),
                    ("denoiser", p(&denoiser)),
                ],
            )?;
            commands::explain(&mut st, &model, &data, &out)
        }
        Command::Sweep {
            data,
            out,
            variances,
            methods,
            cnn,
            elm,
            limit,
            common,
        } => {
            let mut st = settings(
                &common,
                vec![
                    ("variances", variances),
                    ("methods", methods),
                    ("cnn", p(&cnn)),
                    ("elm", p(&elm)),
                    ("limit", s(&limit)),
                ],
            )?;
            commands::sweep(&mut st, &data, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

