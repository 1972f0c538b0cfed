//! Ground-state search: VQE, exhaustive enumeration, random assignment and
//! the classical weighted Lloyd baseline, plus bitstring ↔ label codecs.

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coreset::{min_sq_dist, weighted_mean, WeightedCoreset};
use crate::hamiltonian::{y_qubit, z_qubit, Bitstring, DiagonalHamiltonian};
use crate::optimize::{minimize, OptimizationTrace, OptimizerConfig};
use crate::qsim::{
    most_probable_bitstring, prepare_ansatz_state, sample_bitstrings, AnsatzConfig,
    DiagonalObservable, StateVector,
};
use crate::{derive_seed, seeded_rng, Error, Result};

/// Default qubit ceiling for exhaustive search (16M basis states).
pub const DEFAULT_BRUTE_FORCE_MAX_QUBITS: usize = 24;
/// Independent VQE runs per solve; the best is kept.
pub const DEFAULT_RESTARTS: usize = 5;
pub const DEFAULT_LAYERS: usize = 1;
/// VQE initial angles are drawn uniformly from `[-r, r]`.
pub const INITIAL_PARAM_RANGE: f64 = 0.1;
pub const DEFAULT_LLOYD_MAX_ITERS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Vqe,
    Random,
    Classical,
    BruteForce,
}

impl SolverKind {
    /// Column order of comparison tables.
    pub const ALL: [SolverKind; 4] = [
        SolverKind::Vqe,
        SolverKind::Random,
        SolverKind::Classical,
        SolverKind::BruteForce,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SolverKind::Vqe => "vqe",
            SolverKind::Random => "random",
            SolverKind::Classical => "classical",
            SolverKind::BruteForce => "brute_force",
        }
    }

    /// Column header used in comparison tables.
    pub fn title(&self) -> &'static str {
        match self {
            SolverKind::Vqe => "VQE",
            SolverKind::Random => "Random",
            SolverKind::Classical => "Classical",
            SolverKind::BruteForce => "Brute Force",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "vqe" => Ok(SolverKind::Vqe),
            "random" => Ok(SolverKind::Random),
            "classical" | "lloyd" => Ok(SolverKind::Classical),
            "brute_force" | "bruteforce" | "brute" => Ok(SolverKind::BruteForce),
            other => Err(Error::InvalidInput(format!("unknown solver {other:?}"))),
        }
    }
}

/// How cluster labels are laid out on qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// One qubit per point; bit value is the label (2-means and GMM).
    Bipartition,
    /// Two qubits `(y_i, z_i)` per point at `(2i, 2i+1)`.
    ThreeWay,
}

impl Encoding {
    pub fn num_clusters(&self) -> usize {
        match self {
            Encoding::Bipartition => 2,
            Encoding::ThreeWay => 3,
        }
    }

    pub fn num_qubits(&self, num_points: usize) -> usize {
        match self {
            Encoding::Bipartition => num_points,
            Encoding::ThreeWay => 2 * num_points,
        }
    }

    pub fn decode(&self, b: &Bitstring) -> Result<Vec<usize>> {
        match self {
            Encoding::Bipartition => Ok(decode_2means(b)),
            Encoding::ThreeWay => decode_3means(b),
        }
    }

    pub fn encode(&self, labels: &[usize]) -> Result<Bitstring> {
        match self {
            Encoding::Bipartition => encode_2means(labels),
            Encoding::ThreeWay => encode_3means(labels),
        }
    }
}

/// Bit `i` is the cluster (0 or 1) of point `i`.
pub fn decode_2means(b: &Bitstring) -> Vec<usize> {
    b.to_bools().into_iter().map(usize::from).collect()
}

/// Reads `(y_i, z_i)` per point: `z = 1 → 2`, else `y = 0 → 0`, `y = 1 → 1`.
pub fn decode_3means(b: &Bitstring) -> Result<Vec<usize>> {
    if b.len() % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "3-means bitstrings have even length, got {}",
            b.len()
        )));
    }
    Ok((0..b.len() / 2)
        .map(|i| match (b.bit(y_qubit(i)), b.bit(z_qubit(i))) {
            (_, true) => 2,
            (false, false) => 0,
            (true, false) => 1,
        })
        .collect())
}

pub fn encode_2means(labels: &[usize]) -> Result<Bitstring> {
    if let Some(l) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::InvalidInput(format!("bipartition label {l} is not 0 or 1")));
    }
    Bitstring::from_bools(&labels.iter().map(|&l| l == 1).collect::<Vec<_>>())
}

/// Canonical codes: label 0 → `00`, 1 → `10`, 2 → `01` (as `y z`).
pub fn encode_3means(labels: &[usize]) -> Result<Bitstring> {
    let mut bits = vec![false; 2 * labels.len()];
    for (i, &l) in labels.iter().enumerate() {
        match l {
            0 => {}
            1 => bits[y_qubit(i)] = true,
            2 => bits[z_qubit(i)] = true,
            _ => return Err(Error::InvalidInput(format!("3-means label {l} is not 0, 1 or 2"))),
        }
    }
    Bitstring::from_bools(&bits)
}

/// A concrete partition found by one solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    pub solver: SolverKind,
    pub bitstring: Bitstring,
    pub labels: Vec<usize>,
    /// Basis energy of `bitstring`.
    pub energy: f64,
    pub evaluations: u64,
    pub seed: u64,
    /// VQE only: expectation value at the best parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expectation: Option<f64>,
    /// Classical only: weighted k-means cost of its own centers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
}

impl PartitionResult {
    fn from_bitstring(
        solver: SolverKind,
        h: &DiagonalHamiltonian,
        encoding: Encoding,
        bitstring: Bitstring,
        evaluations: u64,
        seed: u64,
    ) -> Result<Self> {
        Ok(Self {
            solver,
            labels: encoding.decode(&bitstring)?,
            energy: h.basis_energy(&bitstring)?,
            bitstring,
            evaluations,
            seed,
            expectation: None,
            cost: None,
        })
    }
}

/// Exact minimizer over all `2^n` basis states; ties go to the lowest index.
pub fn solve_brute_force(
    h: &DiagonalHamiltonian,
    encoding: Encoding,
    max_qubits: usize,
) -> Result<PartitionResult> {
    let n = h.num_qubits();
    if n > max_qubits {
        return Err(Error::TooManyQubits {
            requested: n,
            limit: max_qubits,
            hint: "use the VQE solver for registers this large",
        });
    }
    let best = brute_force_minimum(h);
    PartitionResult::from_bitstring(
        SolverKind::BruteForce,
        h,
        encoding,
        Bitstring::new(best, n)?,
        1u64 << n,
        0,
    )
}

/// Index of the lowest-energy basis state. Near-ties on the running Gray-code
/// energy are re-decided with exact evaluation.
pub(crate) fn brute_force_minimum(h: &DiagonalHamiltonian) -> u64 {
    let scale = h.constant().abs() + h.terms().iter().map(|t| t.coefficient().abs()).sum::<f64>();
    let tol = 1e-10 * scale;
    let mut best_idx = 0u64;
    let mut best_e = f64::INFINITY;
    h.for_each_energy(|b, e| {
        if e < best_e - tol {
            best_idx = b;
            best_e = e;
        } else if e <= best_e + tol {
            let (exact, exact_best) = (h.energy_at(b), h.energy_at(best_idx));
            if exact < exact_best || (exact == exact_best && b < best_idx) {
                best_idx = b;
                best_e = e;
            }
        }
    });
    best_idx
}

/// A uniformly random basis state.
pub fn solve_random(h: &DiagonalHamiltonian, encoding: Encoding, seed: u64) -> Result<PartitionResult> {
    let n = h.num_qubits();
    let mut rng = seeded_rng(seed);
    let raw: u64 = rng.random();
    let index = if n == 64 { raw } else { raw & ((1u64 << n) - 1) };
    PartitionResult::from_bitstring(SolverKind::Random, h, encoding, Bitstring::new(index, n)?, 1, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VqeConfig {
    pub layers: usize,
    pub restarts: usize,
    /// `None` uses [`OptimizerConfig::for_params`] with `seed`.
    pub optimizer: Option<OptimizerConfig>,
    /// 0 evaluates expectations exactly; otherwise each evaluation averages
    /// this many sampled shots.
    pub shots: usize,
    pub seed: u64,
}

impl VqeConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            layers: DEFAULT_LAYERS,
            restarts: DEFAULT_RESTARTS,
            optimizer: None,
            shots: 0,
            seed,
        }
    }

    pub fn optimizer_for(&self, ansatz: &AnsatzConfig) -> OptimizerConfig {
        self.optimizer
            .clone()
            .unwrap_or_else(|| OptimizerConfig::for_params(ansatz.num_params(), self.seed))
    }
}

/// One optimized restart.
#[derive(Debug, Clone)]
pub struct VqeRun {
    pub restart: usize,
    pub initial_params: Vec<f64>,
    pub trace: OptimizationTrace,
    pub bitstring: Bitstring,
    pub energy: f64,
}

/// Uniform `[-0.1, 0.1]` starting angles for restart `restart`.
pub fn initial_params(num_params: usize, seed: u64, restart: usize) -> Vec<f64> {
    let mut rng = seeded_rng(derive_seed(seed, restart as u64));
    (0..num_params)
        .map(|_| rng.random_range(-INITIAL_PARAM_RANGE..=INITIAL_PARAM_RANGE))
        .collect()
}

/// Runs every restart of the VQE loop and returns them in restart order.
pub fn vqe_runs(h: &DiagonalHamiltonian, config: &VqeConfig) -> Result<Vec<VqeRun>> {
    if config.restarts == 0 {
        return Err(Error::InvalidInput("VQE needs at least one restart".into()));
    }
    let ansatz = AnsatzConfig::new(h.num_qubits(), config.layers);
    let observable = DiagonalObservable::new(h)?;
    let opt = config.optimizer_for(&ansatz);
    (0..config.restarts)
        .into_par_iter()
        .map(|restart| {
            let x0 = initial_params(ansatz.num_params(), opt.seed, restart);
            let shot_counter = Cell::new(0u64);
            let shot_seed = derive_seed(opt.seed ^ 0x5107_5EED, restart as u64);
            let objective = |theta: &[f64]| -> f64 {
                let state = prepare_ansatz_state(&ansatz, theta).expect("parameter count checked");
                if config.shots == 0 {
                    observable.expectation(&state).expect("register sizes agree")
                } else {
                    let k = shot_counter.get();
                    shot_counter.set(k + 1);
                    sampled_energy(&observable, &state, config.shots, derive_seed(shot_seed, k))
                }
            };
            let trace = minimize(objective, &x0, &opt)?;
            let state = prepare_ansatz_state(&ansatz, &trace.best_params)?;
            let bitstring = most_probable_bitstring(&state);
            let energy = h.basis_energy(&bitstring)?;
            Ok(VqeRun {
                restart,
                initial_params: x0,
                trace,
                bitstring,
                energy,
            })
        })
        .collect()
}

fn sampled_energy(obs: &DiagonalObservable, state: &StateVector, shots: usize, seed: u64) -> f64 {
    let samples = sample_bitstrings(state, shots, seed).expect("shots > 0");
    samples
        .iter()
        .map(|b| obs.diagonal()[b.index() as usize])
        .sum::<f64>()
        / shots as f64
}

/// VQE with most-probable-bitstring readout; the restart whose readout has the
/// lowest energy wins (earliest restart on ties).
pub fn solve_vqe(h: &DiagonalHamiltonian, encoding: Encoding, config: &VqeConfig) -> Result<PartitionResult> {
    let runs = vqe_runs(h, config)?;
    let evaluations = runs.iter().map(|r| r.trace.len() as u64).sum();
    let best = runs
        .iter()
        .min_by(|a, b| a.energy.total_cmp(&b.energy).then(a.restart.cmp(&b.restart)))
        .expect("restarts >= 1");
    let mut result = PartitionResult::from_bitstring(
        SolverKind::Vqe,
        h,
        encoding,
        best.bitstring,
        evaluations,
        config.seed,
    )?;
    result.expectation = Some(best.trace.best_value);
    Ok(result)
}

/// Output of [`weighted_lloyd`].
#[derive(Debug, Clone, PartialEq)]
pub struct LloydResult {
    pub centers: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub cost: f64,
    /// Cost after each assign-and-update iteration.
    pub cost_history: Vec<f64>,
}

fn weighted_cost(coreset: &WeightedCoreset, centers: &[Vec<f64>], labels: &[usize]) -> f64 {
    coreset
        .vectors()
        .iter()
        .zip(coreset.weights())
        .zip(labels)
        .map(|((x, w), &l)| w * crate::sq_dist(x, &centers[l]))
        .sum()
}

/// Weighted Lloyd iterations from a weighted k-means++ start.
///
/// A center that loses all its points is moved onto the point currently
/// farthest from its own center.
pub fn weighted_lloyd(
    coreset: &WeightedCoreset,
    k: usize,
    max_iters: usize,
    seed: u64,
) -> Result<LloydResult> {
    let m = coreset.len();
    if k == 0 || k > m {
        return Err(Error::InvalidInput(format!("cannot form {k} clusters from {m} points")));
    }
    if max_iters == 0 {
        return Err(Error::InvalidInput("max_iters must be at least 1".into()));
    }
    let x = coreset.vectors();
    let w = coreset.weights();
    let mut rng = seeded_rng(seed);
    let mut centers = weighted_kmeanspp(x, w, k, &mut rng);
    let mut labels: Vec<usize> = x.iter().map(|p| min_sq_dist(p, &centers).1).collect();
    let mut history = Vec::new();
    for _ in 0..max_iters {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (j, &l) in labels.iter().enumerate() {
            members[l].push(j);
        }
        for c in 0..k {
            match weighted_mean(x, w, &members[c]) {
                Some(mean) => centers[c] = mean,
                None => {
                    let far = (0..m)
                        .max_by(|&a, &b| {
                            crate::sq_dist(&x[a], &centers[labels[a]])
                                .total_cmp(&crate::sq_dist(&x[b], &centers[labels[b]]))
                                .then(b.cmp(&a))
                        })
                        .expect("m >= 1");
                    centers[c] = x[far].clone();
                }
            }
        }
        history.push(weighted_cost(coreset, &centers, &labels));
        let next: Vec<usize> = x.iter().map(|p| min_sq_dist(p, &centers).1).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    // final centers are the weighted means of the final labels
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (j, &l) in labels.iter().enumerate() {
        members[l].push(j);
    }
    for c in 0..k {
        if let Some(mean) = weighted_mean(x, w, &members[c]) {
            centers[c] = mean;
        }
    }
    let cost = weighted_cost(coreset, &centers, &labels);
    Ok(LloydResult {
        centers,
        labels,
        cost,
        cost_history: history,
    })
}

fn weighted_kmeanspp(x: &[Vec<f64>], w: &[f64], k: usize, rng: &mut crate::Rng) -> Vec<Vec<f64>> {
    let pick = |scores: &[f64], rng: &mut crate::Rng| -> usize {
        let total: f64 = scores.iter().sum();
        if !(total > 0.0) {
            return rng.random_range(0..scores.len());
        }
        let mut target = rng.random::<f64>() * total;
        for (i, s) in scores.iter().enumerate() {
            if *s > 0.0 && target < *s {
                return i;
            }
            target -= s;
        }
        scores.iter().rposition(|s| *s > 0.0).unwrap_or(0)
    };
    let mut centers = vec![x[pick(w, rng)].clone()];
    while centers.len() < k {
        let scores: Vec<f64> = x
            .iter()
            .zip(w)
            .map(|(p, wi)| wi * min_sq_dist(p, &centers).0)
            .collect();
        centers.push(x[pick(&scores, rng)].clone());
    }
    centers
}

/// Weighted Lloyd with `k = min(encoding clusters, m)`, reported as a bitstring.
pub fn solve_classical(
    coreset: &WeightedCoreset,
    h: &DiagonalHamiltonian,
    encoding: Encoding,
    seed: u64,
) -> Result<PartitionResult> {
    let k = encoding.num_clusters().min(coreset.len());
    let lloyd = weighted_lloyd(coreset, k, DEFAULT_LLOYD_MAX_ITERS, seed)?;
    let bitstring = encoding.encode(&lloyd.labels)?;
    let mut result = PartitionResult::from_bitstring(
        SolverKind::Classical,
        h,
        encoding,
        bitstring,
        lloyd.cost_history.len() as u64,
        seed,
    )?;
    result.cost = Some(lloyd.cost);
    Ok(result)
}

/// Shared knobs for [`solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub vqe: VqeConfig,
    pub brute_force_max_qubits: usize,
    pub seed: u64,
}

impl SolveOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            vqe: VqeConfig::new(seed),
            brute_force_max_qubits: DEFAULT_BRUTE_FORCE_MAX_QUBITS,
            seed,
        }
    }

    /// Same settings with every seed replaced by `seed`.
    pub fn reseeded(&self, seed: u64) -> Self {
        let mut next = self.clone();
        next.seed = seed;
        next.vqe.seed = seed;
        if let Some(opt) = &mut next.vqe.optimizer {
            opt.seed = seed;
        }
        next
    }
}

/// Dispatches to the solver named by `kind`.
pub fn solve(
    kind: SolverKind,
    coreset: &WeightedCoreset,
    h: &DiagonalHamiltonian,
    encoding: Encoding,
    options: &SolveOptions,
) -> Result<PartitionResult> {
    match kind {
        SolverKind::Vqe => solve_vqe(h, encoding, &options.vqe),
        SolverKind::BruteForce => solve_brute_force(h, encoding, options.brute_force_max_qubits),
        SolverKind::Random => solve_random(h, encoding, options.seed),
        SolverKind::Classical => solve_classical(coreset, h, encoding, options.seed),
    }
}
