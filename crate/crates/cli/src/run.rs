//! The `solve` subcommand: coreset, problem pipeline and result files.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use qcluster::coreset::{normalize_coreset, WeightedCoreset};
use qcluster::optimize::OptimizerConfig;
use qcluster::pipelines::{
    cut_dendrogram, divisive_cluster, divisive_total_cost, gmm_cluster, gmm_exhaustive_separation,
    repeated_cost_average, three_means_cluster, ClusterTree, CovarianceNormalization, NestedNode,
};
use qcluster::qsim::AnsatzConfig;
use qcluster::solvers::{PartitionResult, SolveOptions, SolverKind};
use serde::{Deserialize, Serialize};

use crate::{data, read_json, resolve_seed, write_file, write_json, CliError, CovarianceArg, Result, SolveArgs};

/// Largest coreset for which the GMM report includes the exhaustive optimum.
const GMM_EXHAUSTIVE_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Divisive,
    Threemeans,
    Gmm,
}

impl Problem {
    pub const ALL: [Problem; 3] = [Problem::Divisive, Problem::Threemeans, Problem::Gmm];

    pub fn default_coreset_size(self) -> usize {
        match self {
            Problem::Threemeans => 12,
            Problem::Divisive | Problem::Gmm => 25,
        }
    }

    pub fn num_qubits(self, coreset_size: usize) -> usize {
        match self {
            Problem::Threemeans => 2 * coreset_size,
            Problem::Divisive | Problem::Gmm => coreset_size,
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Problem::Divisive => "Divisive Clustering",
            Problem::Threemeans => "3-Means Clustering",
            Problem::Gmm => "GMM Clustering",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Problem::Divisive => "divisive",
            Problem::Threemeans => "threemeans",
            Problem::Gmm => "gmm",
        }
    }
}

/// Settings that shaped a run, recorded so that it can be replayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub seed: u64,
    pub seed_drawn: bool,
    pub coreset_source: String,
    pub coreset_size: usize,
    pub num_qubits: usize,
    pub qubit_ceiling: usize,
    pub layers: usize,
    pub restarts: usize,
    pub max_evals: usize,
    pub shots: usize,
    pub repetitions: usize,
}

/// One solver's outcome on one problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub problem: Problem,
    pub solver: SolverKind,
    /// Divisive: mean total split cost over the repetitions. 3-means: weighted
    /// within-cluster cost. GMM: classification negative log-likelihood.
    pub cost: f64,
    pub settings: RunSettings,
    /// Hamiltonian outcome; for divisive, the first repetition's root split.
    pub partition: Option<PartitionResult>,
    pub detail: Detail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Detail {
    Divisive {
        costs: Vec<f64>,
        seeds: Vec<u64>,
        tree: NestedNode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        flat_labels: Option<Vec<usize>>,
    },
    Threemeans {
        centers: Vec<Option<Vec<f64>>>,
    },
    Gmm {
        params: qcluster::pipelines::GmmParams,
        separation: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        exhaustive_separation: Option<f64>,
    },
}

/// Coreset used by the run, unnormalized, plus the base seed.
struct Input {
    coreset: WeightedCoreset,
    /// Dataset kept for rebuilding coresets on divisive repetitions.
    dataset: Option<(qcluster::data::DataSet, String)>,
    seed: u64,
    seed_drawn: bool,
}

fn prepare(args: &SolveArgs) -> Result<Input> {
    if args.restarts == 0 || args.repetitions == 0 {
        return Err(CliError::Config("restarts and repetitions must be at least 1".into()));
    }
    let (seed, seed_drawn) = resolve_seed(args.seed);
    if let Some(path) = &args.coreset {
        let coreset: WeightedCoreset = read_json(path)?;
        if let Some(m) = args.coreset_size.filter(|&m| m != coreset.len()) {
            return Err(CliError::Config(format!(
                "--coreset-size {m} disagrees with the {} points in {}",
                coreset.len(),
                path.display()
            )));
        }
        check_ceiling(args, coreset.len())?;
        return Ok(Input { coreset, dataset: None, seed, seed_drawn });
    }
    let m = args.coreset_size.unwrap_or(args.problem.default_coreset_size());
    check_ceiling(args, m)?;
    let (dataset, source) = data::load_or_generate(args.data.as_deref(), &args.blobs, seed)?;
    let coreset = data::build(&dataset, m, seed, &source)?;
    Ok(Input { coreset, dataset: Some((dataset, source)), seed, seed_drawn })
}

fn check_ceiling(args: &SolveArgs, m: usize) -> Result<()> {
    let min = if args.problem == Problem::Divisive { 1 } else { 2 };
    if m < min {
        return Err(CliError::Config(format!("{} needs a coreset of at least {min} points", args.problem.as_str())));
    }
    let n = args.problem.num_qubits(m);
    if n > args.qubit_ceiling {
        return Err(CliError::Config(format!(
            "{} with a coreset of {m} needs {n} qubits, above the ceiling of {}; \
             lower --coreset-size or raise --qubit-ceiling",
            args.problem.as_str(),
            args.qubit_ceiling
        )));
    }
    Ok(())
}

fn options(args: &SolveArgs, num_qubits: usize, seed: u64) -> SolveOptions {
    let mut options = SolveOptions::new(seed);
    options.brute_force_max_qubits = args.qubit_ceiling;
    options.vqe.layers = args.layers;
    options.vqe.restarts = args.restarts;
    options.vqe.shots = args.shots;
    if let Some(max) = args.max_evals {
        let ansatz = AnsatzConfig::new(num_qubits, args.layers);
        let mut opt = OptimizerConfig::for_params(ansatz.num_params(), seed);
        opt.max_evaluations = max;
        options.vqe.optimizer = Some(opt);
    }
    options
}

fn solvers(args: &SolveArgs) -> Vec<SolverKind> {
    if args.solvers.is_empty() {
        return SolverKind::ALL.to_vec();
    }
    let mut out: Vec<SolverKind> = Vec::new();
    for s in &args.solvers {
        let kind = SolverKind::from(*s);
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    out
}

fn file_name(problem: Problem, solver: SolverKind, ext: &str) -> String {
    format!("{}_{}.{ext}", problem.as_str(), solver.as_str())
}

/// Runs every requested solver and writes its files into `--out`. Returns the
/// results of the solvers that completed; fails if any solver failed.
pub fn solve(args: &SolveArgs) -> Result<Vec<ResultFile>> {
    let input = prepare(args)?;
    std::fs::create_dir_all(&args.out).map_err(|source| CliError::Io { path: args.out.clone(), source })?;
    let m = input.coreset.len();
    let num_qubits = args.problem.num_qubits(m);
    let budget = args.max_evals.unwrap_or_else(|| {
        OptimizerConfig::for_params(AnsatzConfig::new(num_qubits, args.layers).num_params(), 0).max_evaluations
    });
    let settings = RunSettings {
        seed: input.seed,
        seed_drawn: input.seed_drawn,
        coreset_source: input.coreset.source().to_string(),
        coreset_size: m,
        num_qubits,
        qubit_ceiling: args.qubit_ceiling,
        layers: args.layers,
        restarts: args.restarts,
        max_evals: budget,
        shots: args.shots,
        repetitions: if args.problem == Problem::Divisive { args.repetitions } else { 1 },
    };
    write_json(&args.out.join("coreset.json"), &input.coreset)?;

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for solver in solvers(args) {
        match run_one(args, &input, solver, &settings) {
            Ok(result) => {
                write_json(&args.out.join(file_name(args.problem, solver, "json")), &result)?;
                results.push(result);
            }
            Err(e) => failures.push(format!("{}: {e}", solver.as_str())),
        }
    }
    let table = crate::report::render(&results)?;
    write_file(&args.out.join(format!("{}_table.md", args.problem.as_str())), table.as_bytes())?;
    if failures.is_empty() {
        Ok(results)
    } else {
        Err(CliError::Config(format!("solver failures: {}", failures.join("; "))))
    }
}

fn run_one(args: &SolveArgs, input: &Input, solver: SolverKind, settings: &RunSettings) -> Result<ResultFile> {
    let num_qubits = settings.num_qubits;
    match args.problem {
        Problem::Divisive => run_divisive(args, input, solver, settings),
        Problem::Threemeans => {
            let c = normalize_coreset(&input.coreset);
            let out = three_means_cluster(&c, solver, &options(args, num_qubits, input.seed))?;
            Ok(ResultFile {
                problem: args.problem,
                solver,
                cost: out.cost,
                settings: settings.clone(),
                detail: Detail::Threemeans { centers: out.centers },
                partition: Some(out.result),
            })
        }
        Problem::Gmm => {
            let c = normalize_coreset(&input.coreset);
            let mode = match args.covariance {
                CovarianceArg::Pooled => CovarianceNormalization::Pooled,
                CovarianceArg::PerCluster => CovarianceNormalization::PerCluster,
            };
            let out = gmm_cluster(&c, solver, &options(args, num_qubits, input.seed), args.regularization, mode)?;
            let exhaustive = if c.len() <= GMM_EXHAUSTIVE_LIMIT {
                Some(gmm_exhaustive_separation(&c, args.regularization)?.0)
            } else {
                None
            };
            write_labels(&args.out.join(file_name(args.problem, solver, "labels.csv")), &out.result.labels)?;
            Ok(ResultFile {
                problem: args.problem,
                solver,
                cost: out.cost,
                settings: settings.clone(),
                detail: Detail::Gmm {
                    params: out.params,
                    separation: out.separation,
                    exhaustive_separation: exhaustive,
                },
                partition: Some(out.result),
            })
        }
    }
}

fn run_divisive(args: &SolveArgs, input: &Input, solver: SolverKind, settings: &RunSettings) -> Result<ResultFile> {
    let mut first: Option<(ClusterTree, WeightedCoreset)> = None;
    let repeated = repeated_cost_average(input.seed, settings.repetitions, |seed| {
        // each repetition redraws the coreset when the dataset is at hand
        let coreset = match &input.dataset {
            Some((dataset, source)) if seed != input.seed => {
                data::build(dataset, input.coreset.len(), seed, source)?
            }
            _ => input.coreset.clone(),
        };
        let tree = divisive_cluster(&coreset, solver, &options(args, settings.num_qubits, seed))?;
        let cost = divisive_total_cost(&tree, &coreset)?;
        if first.is_none() {
            first = Some((tree, coreset));
        }
        Ok(cost)
    })?;
    let (tree, _) = first.expect("at least one repetition");
    write_file(&args.out.join(file_name(args.problem, solver, "dot")), tree.to_dot().as_bytes())?;
    let flat_labels = match args.clusters {
        Some(k) => {
            let labels = cut_dendrogram(&tree, k)?;
            write_labels(&args.out.join(file_name(args.problem, solver, "labels.csv")), &labels)?;
            Some(labels)
        }
        None => None,
    };
    Ok(ResultFile {
        problem: args.problem,
        solver,
        cost: repeated.mean,
        settings: settings.clone(),
        partition: None,
        detail: Detail::Divisive {
            costs: repeated.costs,
            seeds: repeated.seeds,
            tree: tree.to_nested(),
            flat_labels,
        },
    })
}

fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut text = String::from("index,label\n");
    for (i, l) in labels.iter().enumerate() {
        text.push_str(&format!("{i},{l}\n"));
    }
    write_file(path, text.as_bytes())
}

/// Paths of the result files `solve` writes for `problem` into `dir`.
pub fn result_paths(dir: &Path, problem: Problem, solvers: &[SolverKind]) -> Vec<PathBuf> {
    solvers.iter().map(|&s| dir.join(file_name(problem, s, "json"))).collect()
}
