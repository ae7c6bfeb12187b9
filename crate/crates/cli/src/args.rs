use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "mrcp-decode",
    version,
    about = "Decode movement-related cortical potentials with filter-bank TRCA"
)]
pub struct Cli {
    /// Cap on worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a manifest and its trial files.
    Validate { manifest: PathBuf },
    /// Locate movement onsets from the trajectories a manifest references.
    Onset {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write a manifest of accepted trials carrying their onsets.
        #[arg(long)]
        apply: bool,
    },
    /// Cross-validated evaluation with report, plots and fitted models.
    Eval {
        manifest: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// mSTRCA accuracy as a function of the number of filter components.
    SweepP {
        manifest: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Comma-separated list, or `lo..hi` inclusive. Defaults to 1..C.
        #[arg(long)]
        ps: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Binary versus two-class multiclass accuracy for every class pair.
    Pairwise {
        manifest: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic dataset.
    Synth {
        /// JSON synthetic spec; omitted fields take their defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-render CSV and SVG outputs from a saved report.json.
    Report {
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Bstrca,
    Bfbtrca,
    Mstrca,
    Mfbtrca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifierArg {
    Svm,
    Lda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

/// Overrides layered on top of `--config` (or the defaults).
#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// JSON pipeline config; flags given alongside override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, value_enum)]
    pub classifier: Option<ClassifierArg>,
    #[arg(long)]
    pub c_reg: Option<f64>,
    #[arg(long, value_enum)]
    pub banks: Option<Switch>,
    /// Comma-separated, e.g. `5,10,all`.
    #[arg(long)]
    pub k_grid: Option<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Falls back to MRCP_DECODE_SEED, then the config file, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
}
