//! Command-line surface of `qcluster`: dataset generation, coreset
//! construction, solver runs and comparison reports.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qcluster::solvers::SolverKind;

mod data;
pub mod report;
pub mod run;

pub use run::{Problem, ResultFile};

/// Default ceiling on simulated register size.
pub const DEFAULT_QUBIT_CEILING: usize = 25;
pub const QUBIT_CEILING_ENV: &str = "QCLUSTER_QUBIT_CEILING";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] qcluster::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "qcluster", version, about = "Coreset clustering with simulated variational quantum solvers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a Gaussian-blob dataset and write it as CSV.
    GenData(GenDataArgs),
    /// Build a weighted coreset from a dataset and write it as JSON.
    Coreset(CoresetArgs),
    /// Run one clustering problem with one or more solvers.
    Solve(SolveArgs),
    /// Render result JSON files as a comparison table.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct BlobArgs {
    /// Number of Gaussian blobs.
    #[arg(long, default_value_t = 3)]
    pub blobs: usize,
    #[arg(long, default_value_t = 100)]
    pub points_per_blob: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Blob means are drawn uniformly from `[-spread, spread]` per feature.
    #[arg(long, default_value_t = 5.0)]
    pub spread: f64,
    /// Isotropic variance of each blob.
    #[arg(long, default_value_t = 0.5)]
    pub variance: f64,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[command(flatten)]
    pub blobs: BlobArgs,
    /// Blob spec JSON; overrides the blob flags.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CoresetArgs {
    /// Dataset CSV; a blob dataset is generated from the seed when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub blobs: BlobArgs,
    /// Problem whose default coreset size applies.
    #[arg(long, value_enum, default_value_t = Problem::Divisive)]
    pub problem: Problem,
    #[arg(long)]
    pub coreset_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Vqe,
    Random,
    Classical,
    BruteForce,
}

impl From<SolverArg> for SolverKind {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Vqe => SolverKind::Vqe,
            SolverArg::Random => SolverKind::Random,
            SolverArg::Classical => SolverKind::Classical,
            SolverArg::BruteForce => SolverKind::BruteForce,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CovarianceArg {
    Pooled,
    PerCluster,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub problem: Problem,
    /// Repeat to run several solvers; all four when omitted.
    #[arg(long = "solver", value_enum)]
    pub solvers: Vec<SolverArg>,
    /// Coreset JSON from the `coreset` subcommand.
    #[arg(long, conflicts_with = "data")]
    pub coreset: Option<PathBuf>,
    /// Dataset CSV; a blob dataset is generated from the seed when neither
    /// this nor `--coreset` is given.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub blobs: BlobArgs,
    /// Defaults to 25 for divisive and gmm, 12 for threemeans.
    #[arg(long)]
    pub coreset_size: Option<usize>,
    #[arg(long, default_value_t = qcluster::solvers::DEFAULT_LAYERS)]
    pub layers: usize,
    #[arg(long, default_value_t = qcluster::solvers::DEFAULT_RESTARTS)]
    pub restarts: usize,
    /// Divisive pipeline repetitions averaged into the reported cost.
    #[arg(long, default_value_t = qcluster::pipelines::DEFAULT_REPETITIONS)]
    pub repetitions: usize,
    /// Optimizer evaluations per VQE restart; 100 per parameter by default.
    #[arg(long)]
    pub max_evals: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = QUBIT_CEILING_ENV, default_value_t = DEFAULT_QUBIT_CEILING)]
    pub qubit_ceiling: usize,
    /// Measurement shots per expectation; 0 is exact.
    #[arg(long, default_value_t = 0)]
    pub shots: usize,
    /// Flat clusters cut from each dendrogram (divisive only).
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long, value_enum, default_value_t = CovarianceArg::Pooled)]
    pub covariance: CovarianceArg,
    /// Ridge added to the total scatter matrix (gmm only).
    #[arg(long)]
    pub regularization: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Result JSON files written by `solve`.
    #[arg(required = true)]
    pub results: Vec<PathBuf>,
    /// Write the table here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Executes one parsed command.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(args) => data::gen_data(&args),
        Command::Coreset(args) => data::coreset(&args),
        Command::Solve(args) => run::solve(&args).map(|_| ()),
        Command::Report(args) => {
            let table = report::render_files(&args.results)?;
            match &args.out {
                Some(path) => write_file(path, table.as_bytes()),
                None => {
                    print!("{table}");
                    Ok(())
                }
            }
        }
    }
}

pub(crate) fn write_file(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_json<T: serde::Serialize>(path: &std::path::Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Uses `seed` when given, otherwise draws one from the OS.
pub(crate) fn resolve_seed(seed: Option<u64>) -> (u64, bool) {
    match seed {
        Some(s) => (s, false),
        None => (rand::random(), true),
    }
}
