use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rbc_core::learners::LearnerKind;
use rbc_core::metrics::MetricId;
use rbc_core::FeatureGroup;

#[derive(Debug, Parser)]
#[command(name = "rbc", about = "Red-blood-cell morphology features, classifiers and experiments")]
pub struct Cli {
    /// Master seed for splits, learners and permutations [default: 42]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON file with defaults for the global options and extraction settings
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory that relative output paths and reports are written into
    #[arg(long, global = true, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// Suppress the run banner
    #[arg(short, long, global = true)]
    pub quiet: bool,
    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract feature vectors from segmented cell images
    Extract(ExtractArgs),
    /// Fit a single learner or an ensemble and save it
    Train(TrainArgs),
    /// Append predicted labels to a feature table
    Predict(PredictArgs),
    /// Score a saved model on a labelled feature table
    Evaluate(EvaluateArgs),
    /// Feature importance of a saved model
    Importance(ImportanceArgs),
    /// Experiment plans, reference-matrix replay and synthetic data
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Summarize a saved model
    InspectModel(InspectModelArgs),
    /// List the feature registry
    InspectRegistry,
    /// Metrics of a confusion matrix stored as CSV
    Metrics(MetricsArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["manifest", "dir"])))]
pub struct ExtractArgs {
    /// CSV manifest with id, label, path and mask columns
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Directory laid out as <dir>/<class>/<id>.png with <id>.mask.png beside it
    #[arg(long)]
    pub dir: Option<PathBuf>,
    /// Feature groups to extract, comma separated [default: all]
    #[arg(long, value_delimiter = ',', value_parser = parse_group)]
    pub groups: Vec<FeatureGroup>,
    /// Side of the square frame cells are rescaled into
    #[arg(long)]
    pub target_side: Option<u32>,
    /// Gray levels for the co-occurrence matrices
    #[arg(long)]
    pub glcm_levels: Option<u32>,
    /// Output CSV; stdout when omitted
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("model").required(true).args(["ensemble", "learner"])))]
pub struct TrainArgs {
    /// Ensemble specification (JSON)
    #[arg(long)]
    pub ensemble: Option<PathBuf>,
    /// Single learner kind
    #[arg(long, value_parser = parse_kind)]
    pub learner: Option<LearnerKind>,
    /// Hyperparameters for --learner as inline JSON, e.g. '{"n_trees": 50}'
    #[arg(long, requires = "learner")]
    pub params: Option<String>,
    /// Labelled feature table
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Feature table; a label column is optional
    #[arg(long)]
    pub data: PathBuf,
    /// Also write class probabilities
    #[arg(long)]
    pub proba: bool,
    /// Output CSV; stdout when omitted
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Print JSON instead of text
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    Mdi,
    Permutation,
}

#[derive(Debug, Args)]
pub struct ImportanceArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "mdi")]
    pub method: Method,
    /// Labelled feature table (permutation only)
    #[arg(long, required_if_eq("method", "permutation"))]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = "sds", value_parser = parse_metric)]
    pub metric: MetricId,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// Output CSV; stdout when omitted
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Run an experiment plan (JSON) and write markdown, CSV and JSON reports
    Run {
        plan: PathBuf,
    },
    /// Recompute metrics of the stored reference matrices
    ReplayFixtures {
        /// Print JSON instead of a table
        #[arg(long)]
        json: bool,
    },
    /// Write a synthetic labelled cell set (images, masks and manifest)
    Synth {
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long)]
        n_cells: Option<usize>,
        #[arg(long)]
        noise: Option<f64>,
        /// Also extract the full feature table into this CSV
        #[arg(long)]
        features: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct InspectModelArgs {
    pub model: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("pick").args(["sds", "f1", "metric"])))]
pub struct MetricsArgs {
    /// CSV with one matrix row per line (true class), columns are predictions
    #[arg(long, value_name = "CSV")]
    pub from_matrix: PathBuf,
    /// Print only the SDS-score in percent
    #[arg(long)]
    pub sds: bool,
    /// Print only the weighted F1 in percent
    #[arg(long)]
    pub f1: bool,
    /// Print only this metric in percent
    #[arg(long, value_parser = parse_metric)]
    pub metric: Option<MetricId>,
    #[arg(long, conflicts_with = "pick")]
    pub json: bool,
}

fn parse_group(s: &str) -> Result<FeatureGroup, String> {
    s.parse().map_err(|e: rbc_core::Error| e.to_string())
}

fn parse_kind(s: &str) -> Result<LearnerKind, String> {
    s.parse().map_err(|e: rbc_core::Error| e.to_string())
}

fn parse_metric(s: &str) -> Result<MetricId, String> {
    s.parse().map_err(|e: rbc_core::Error| e.to_string())
}
