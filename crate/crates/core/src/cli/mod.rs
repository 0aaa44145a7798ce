//! The `senstype` command line: corpus generation, featurization, training,
//! classification, evaluation, flagging and the review-and-relabel loop.
//!
//! Every CSV artifact starts with `# key=value` lines recording the tool
//! version and the resolved [`RunConfig`]; model files carry the same record
//! in their `run_config` field.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 outputs
//! written but some requested metric is undefined.

mod commands;
pub mod relabel;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::features::{FeatureSchema, DEFAULT_WINDOW_LEN};
use crate::forest::{AveragingMode, ForestConfig};
use crate::meta::Preamble;
use crate::uncertainty::EntropyBase;

pub const DEFAULT_THRESHOLD: f64 = 0.425;
pub const DEFAULT_SEED: u64 = 42;

/// Settings shared by every command, recorded in every artifact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seconds.
    pub window_len: f64,
    pub forest: ForestConfig,
    pub entropy_base: EntropyBase,
    pub threshold: f64,
    pub scheme: FeatureSchema,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            window_len: DEFAULT_WINDOW_LEN,
            forest: ForestConfig {
                seed: DEFAULT_SEED,
                ..ForestConfig::default()
            },
            entropy_base: EntropyBase::Nats,
            threshold: DEFAULT_THRESHOLD,
            scheme: FeatureSchema::Rich8,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.window_len > 0.0 && self.window_len.is_finite()) {
            return Err(Error::InvalidWindowLength(self.window_len));
        }
        if !self.threshold.is_finite() {
            return Err(Error::Config {
                key: "threshold".into(),
                message: "must be finite".into(),
            });
        }
        self.forest.validate(self.scheme.len())
    }

    pub fn preamble(&self) -> Preamble {
        let f = &self.forest;
        Preamble::new()
            .with("window_len", self.window_len)
            .with("scheme", self.scheme)
            .with("n_trees", f.n_trees)
            .with("m_try", f.resolved_m_try(self.scheme.len()))
            .with("seed", f.seed)
            .with("averaging", f.averaging)
            .with("entropy_base", self.entropy_base)
            .with("threshold", self.threshold)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("run config serializes")
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "senstype",
    version,
    about = "Sensor-type classification for building time series"
)]
pub struct Cli {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct SharedArgs {
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Feature window length in minutes.
    #[arg(long, global = true, default_value_t = DEFAULT_WINDOW_LEN / 60.0)]
    pub window_mins: f64,
    #[arg(long, global = true, default_value_t = 50)]
    pub trees: usize,
    /// Features tried per node; default floor(sqrt(D)).
    #[arg(long, global = true)]
    pub mtry: Option<usize>,
    #[arg(long, global = true, default_value = "paper")]
    pub averaging: AveragingMode,
    #[arg(long, global = true, default_value = "nats")]
    pub entropy_base: EntropyBase,
    #[arg(long, global = true, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, global = true, default_value = "rich8")]
    pub scheme: FeatureSchema,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

impl SharedArgs {
    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            window_len: self.window_mins * 60.0,
            forest: ForestConfig {
                n_trees: self.trees,
                m_try: self.mtry,
                seed: self.seed,
                averaging: self.averaging,
            },
            entropy_base: self.entropy_base,
            threshold: self.threshold,
            scheme: self.scheme,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic corpus.
    Synth {
        /// TOML corpus config; fields left out come from the preset.
        #[arg(long)]
        config: Option<PathBuf>,
        /// default, shifted, overlap or confusable.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract a feature matrix from the traces of a manifest.
    Features {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a forest on the labeled rows of a feature matrix or manifest.
    Train {
        #[command(flatten)]
        input: FeatureInput,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict types with a trained model.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: FeatureInput,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluation protocols.
    Eval {
        #[command(subcommand)]
        protocol: EvalCommand,
    },
    /// Flag predictions whose entropy exceeds the threshold.
    Flag {
        #[arg(long)]
        predictions: PathBuf,
        /// Manifest with true labels; enables the TPR/FPR/PPV report.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Review the most uncertain predictions, correct labels and retrain.
    Relabel {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Maximum number of traces to review.
        #[arg(long)]
        budget: usize,
        /// `trace_id,label` answers instead of interactive prompts.
        #[arg(long)]
        answers: Option<PathBuf>,
        #[arg(long)]
        out_manifest: PathBuf,
        #[arg(long)]
        out_model: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct FeatureInput {
    /// Feature matrix written by `features`.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Manifest whose traces are featurized on the fly.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Leave-one-out cross-validation.
    Loo {
        #[arg(long)]
        manifest: PathBuf,
        /// Also run the baseline2 scheme and show it in parentheses.
        #[arg(long)]
        baseline: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train on stratified fractions, test on the rest, round(1/p) times each.
    Percentage {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.33,0.5")]
        fractions: Vec<f64>,
        #[arg(long)]
        baseline: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train on one corpus, test on another.
    Inter {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0.05,0.1,0.2,0.33,0.5,1.0"
        )]
        fractions: Vec<f64>,
        #[arg(long)]
        baseline: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy as a function of the window length.
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
        /// Score ten folds of this corpus instead of leave-one-out.
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "5,15,30,45,60,90,120,180"
        )]
        windows_mins: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Entropy CDFs and threshold sweep for predictions with known truth.
    Roc {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Single-tree LOO accuracy of all 255 rich feature subsets.
    Subsets {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Failure of a command with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub error: Error,
}

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_UNDEFINED_METRIC: u8 = 4;

impl From<Error> for CliError {
    fn from(error: Error) -> Self {
        let code = match error {
            Error::InvalidWindowLength(_)
            | Error::EmptyMask
            | Error::InvalidConfig(_)
            | Error::InvalidThresholds
            | Error::InvalidSpec(_)
            | Error::NonInteractiveWithoutAnswers
            | Error::Config { .. } => EXIT_CONFIG,
            _ => EXIT_DATA,
        };
        CliError { code, error }
    }
}

/// Outcome of a successful command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    UndefinedMetric,
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    let config = cli.shared.run_config();
    config.validate().map_err(|error| CliError {
        code: EXIT_CONFIG,
        error,
    })?;
    let work = || commands::dispatch(cli.command, &config);
    match cli.shared.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError {
                code: EXIT_CONFIG,
                error: Error::Config {
                    key: "threads".into(),
                    message: e.to_string(),
                },
            })?
            .install(work),
        None => work(),
    }
}

/// Parses the process arguments, runs, reports errors on stderr.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::UndefinedMetric) => ExitCode::from(EXIT_UNDEFINED_METRIC),
        Err(e) => {
            eprintln!("error: {}", e.error);
            ExitCode::from(e.code)
        }
    }
}
