//! Problem-level drivers and the clustering cost functions they report.

use std::collections::VecDeque;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::coreset::{normalize_coreset, weighted_mean, WeightedCoreset};
use crate::hamiltonian::{
    build_2means, build_3means, build_gmm, default_regularization, total_scatter_matrix,
    ScatterMatrix,
};
use crate::solvers::{solve, Encoding, PartitionResult, SolveOptions, SolverKind};
use crate::{derive_seed, sq_dist, Error, Result};

/// Default number of pipeline repetitions averaged for the divisive cost.
pub const DEFAULT_REPETITIONS: usize = 10;

/// Increment that keeps split heights strictly above their children's.
const HEIGHT_EPSILON: f64 = 1e-12;

/// Members of each cluster label in `0..k`.
fn members_by_label(labels: &[usize], k: usize) -> Result<Vec<Vec<usize>>> {
    let mut members = vec![Vec::new(); k];
    for (j, &l) in labels.iter().enumerate() {
        if l >= k {
            return Err(Error::InvalidInput(format!("label {l} out of range for {k} clusters")));
        }
        members[l].push(j);
    }
    Ok(members)
}

fn check_labels(coreset: &WeightedCoreset, labels: &[usize]) -> Result<()> {
    if labels.len() != coreset.len() {
        return Err(Error::DimensionMismatch {
            expected: coreset.len(),
            actual: labels.len(),
        });
    }
    Ok(())
}

/// Weighted cluster centers `μ_i = (1/W_i) Σ_{S_i} w_j x_j`; `None` for empty clusters.
pub fn cluster_centers(coreset: &WeightedCoreset, labels: &[usize], k: usize) -> Result<Vec<Option<Vec<f64>>>> {
    check_labels(coreset, labels)?;
    Ok(members_by_label(labels, k)?
        .iter()
        .map(|m| weighted_mean(coreset.vectors(), coreset.weights(), m))
        .collect())
}

/// Weighted within-cluster cost `Σ_i Σ_{j∈S_i} w_j ‖x_j − μ_i‖²` for `k` clusters.
pub fn kmeans_cost(coreset: &WeightedCoreset, labels: &[usize], k: usize) -> Result<f64> {
    let centers = cluster_centers(coreset, labels, k)?;
    Ok(coreset
        .vectors()
        .iter()
        .zip(coreset.weights())
        .zip(labels)
        .map(|((x, w), &l)| w * sq_dist(x, centers[l].as_ref().expect("cluster has a member")))
        .sum())
}

pub fn three_means_centers(coreset: &WeightedCoreset, labels: &[usize]) -> Result<Vec<Option<Vec<f64>>>> {
    cluster_centers(coreset, labels, 3)
}

pub fn three_means_cost(coreset: &WeightedCoreset, labels: &[usize]) -> Result<f64> {
    kmeans_cost(coreset, labels, 3)
}

/// Weighted cut `Σ_{i<j, labels differ} w_i w_j x_i·x_j`; the quantity the
/// oriented 2-means and 3-means Hamiltonians minimize.
pub fn weighted_cut(coreset: &WeightedCoreset, labels: &[usize]) -> Result<f64> {
    check_labels(coreset, labels)?;
    let (x, w) = (coreset.vectors(), coreset.weights());
    let mut cut = 0.0;
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            if labels[i] != labels[j] {
                cut += w[i] * w[j] * crate::dot(&x[i], &x[j]);
            }
        }
    }
    Ok(cut)
}

/// Total, within-cluster and between-cluster weighted scatter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterDecomposition {
    pub scatter: f64,
    pub within: f64,
    pub between: f64,
}

impl ScatterDecomposition {
    pub fn residual(&self) -> f64 {
        self.scatter - self.within - self.between
    }
}

/// Evaluates the three scatter terms directly; `scatter = within + between`.
pub fn scatter_decomposition(coreset: &WeightedCoreset, labels: &[usize], k: usize) -> Result<ScatterDecomposition> {
    let mean = coreset.weighted_mean();
    let centers = cluster_centers(coreset, labels, k)?;
    let mut out = ScatterDecomposition {
        scatter: 0.0,
        within: 0.0,
        between: 0.0,
    };
    for ((x, w), &l) in coreset.vectors().iter().zip(coreset.weights()).zip(labels) {
        let center = centers[l].as_ref().expect("cluster has a member");
        out.scatter += w * sq_dist(x, &mean);
        out.within += w * sq_dist(x, center);
        out.between += w * sq_dist(&mean, center);
    }
    Ok(out)
}

/// One node of a divisive [`ClusterTree`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    /// Coreset indices, ascending.
    pub members: Vec<usize>,
    /// Node indices of the two parts, for split nodes.
    pub children: Option<(usize, usize)>,
    pub split_solver: Option<SolverKind>,
    /// Basis energy of the split in the subset's own Hamiltonian.
    pub split_energy: Option<f64>,
    /// Split height; 0 for leaves.
    pub height: f64,
    pub depth: usize,
    /// True when the solver's split was degenerate and a one-vs-rest split was forced.
    #[serde(default)]
    pub forced: bool,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Binary dendrogram; node 0 is the root and holds every index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTree {
    pub nodes: Vec<TreeNode>,
}

impl ClusterTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn num_points(&self) -> usize {
        self.root().members.len()
    }

    /// Split nodes in creation (breadth-first) order.
    pub fn splits(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| !n.is_leaf())
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    /// Graphviz rendering: one node per cluster labelled with its members,
    /// edges carrying the parent's split height.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph dendrogram {\n  node [shape=box];\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let members = n.members.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",");
            let _ = writeln!(out, "  n{i} [label=\"{{{members}}}\\nh={:.6}\"];", n.height);
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some((a, b)) = n.children {
                for c in [a, b] {
                    let _ = writeln!(out, "  n{i} -> n{c} [height={}];", n.height);
                }
            }
        }
        out.push_str("}\n");
        out
    }

    /// Recursive JSON form rooted at node 0.
    pub fn to_nested(&self) -> NestedNode {
        self.nested(0)
    }

    fn nested(&self, i: usize) -> NestedNode {
        let n = &self.nodes[i];
        NestedNode {
            members: n.members.clone(),
            height: n.height,
            solver: n.split_solver,
            energy: n.split_energy,
            children: n
                .children
                .map(|(a, b)| vec![self.nested(a), self.nested(b)])
                .unwrap_or_default(),
        }
    }

    fn check_invariants(&self) -> Result<()> {
        for n in &self.nodes {
            match n.children {
                None if n.members.len() != 1 => {
                    return Err(Error::InvalidInput("a leaf holds more than one point".into()))
                }
                Some((a, b)) => {
                    let mut union = self.nodes[a].members.clone();
                    union.extend(&self.nodes[b].members);
                    union.sort_unstable();
                    if union != n.members
                        || self.nodes[a].height >= n.height
                        || self.nodes[b].height >= n.height
                    {
                        return Err(Error::InvalidInput("tree invariant violated".into()));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedNode {
    pub members: Vec<usize>,
    pub height: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<NestedNode>,
}

/// Solves one subset's 2-means Hamiltonian and returns its bipartition.
fn split_subset(
    coreset: &WeightedCoreset,
    members: &[usize],
    solver: SolverKind,
    options: &SolveOptions,
) -> Result<(Vec<usize>, Vec<usize>, f64)> {
    let sub = normalize_coreset(&coreset.restrict(members)?);
    let h = build_2means(&sub)?;
    let result = solve(solver, &sub, &h, Encoding::Bipartition, options)?;
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for (&idx, &label) in members.iter().zip(&result.labels) {
        if label == 0 {
            left.push(idx);
        } else {
            right.push(idx);
        }
    }
    Ok((left, right, result.energy))
}

/// Energy of the forced `{first} | rest` split in the subset Hamiltonian.
fn one_vs_rest_energy(coreset: &WeightedCoreset, members: &[usize]) -> Result<f64> {
    let sub = normalize_coreset(&coreset.restrict(members)?);
    let h = build_2means(&sub)?;
    let mut bits = vec![false; members.len()];
    bits[0] = true;
    h.basis_energy(&crate::hamiltonian::Bitstring::from_bools(&bits)?)
}

/// Top-down hierarchical clustering by repeated 2-means splits.
///
/// Clusters are processed first-in first-out. Each multi-point cluster is
/// restricted, re-normalized, compiled to its 2-means Hamiltonian and split by
/// `solver`. A split with an empty side is retried once with a fresh seed and
/// then replaced by separating the cluster's first member from the rest.
///
/// Split heights are the Euclidean distance between the two parts' weighted
/// centroids in the input coordinates, raised where needed so that every
/// split sits strictly above the splits beneath it.
pub fn divisive_cluster(coreset: &WeightedCoreset, solver: SolverKind, options: &SolveOptions) -> Result<ClusterTree> {
    let m = coreset.len();
    let mut nodes = vec![TreeNode {
        members: (0..m).collect(),
        children: None,
        split_solver: None,
        split_energy: None,
        height: 0.0,
        depth: 0,
        forced: false,
    }];
    let mut queue = VecDeque::from([0usize]);
    let mut singletons = 0;
    while singletons < m {
        let id = queue.pop_front().expect("queue holds every unsplit cluster");
        let members = nodes[id].members.clone();
        if members.len() == 1 {
            singletons += 1;
            continue;
        }
        let node_seed = derive_seed(options.seed, id as u64);
        let (mut left, mut right, mut energy) =
            split_subset(coreset, &members, solver, &options.reseeded(node_seed))?;
        if left.is_empty() || right.is_empty() {
            let retry_seed = derive_seed(node_seed, u64::MAX);
            (left, right, energy) = split_subset(coreset, &members, solver, &options.reseeded(retry_seed))?;
        }
        let forced = left.is_empty() || right.is_empty();
        if forced {
            left = vec![members[0]];
            right = members[1..].to_vec();
            energy = one_vs_rest_energy(coreset, &members)?;
        }
        let depth = nodes[id].depth + 1;
        let a = nodes.len();
        for part in [left, right] {
            nodes.push(TreeNode {
                members: part,
                children: None,
                split_solver: None,
                split_energy: None,
                height: 0.0,
                depth,
                forced: false,
            });
            queue.push_back(nodes.len() - 1);
        }
        let node = &mut nodes[id];
        node.children = Some((a, a + 1));
        node.split_solver = Some(solver);
        node.split_energy = Some(energy);
        node.forced = forced;
    }
    assign_heights(&mut nodes, coreset);
    let tree = ClusterTree { nodes };
    tree.check_invariants()?;
    Ok(tree)
}

fn assign_heights(nodes: &mut [TreeNode], coreset: &WeightedCoreset) {
    // children always have larger indices than their parent
    for i in (0..nodes.len()).rev() {
        if let Some((a, b)) = nodes[i].children {
            let ca = weighted_mean(coreset.vectors(), coreset.weights(), &nodes[a].members)
                .expect("non-empty part");
            let cb = weighted_mean(coreset.vectors(), coreset.weights(), &nodes[b].members)
                .expect("non-empty part");
            let raw = sq_dist(&ca, &cb).sqrt();
            let floor = nodes[a].height.max(nodes[b].height);
            nodes[i].height = if raw > floor {
                raw
            } else {
                floor + HEIGHT_EPSILON * (1.0 + floor)
            };
        }
    }
}

/// Sum over every split of the unweighted within-cluster squared distances
/// of its two parts, in the coordinates of `coreset`.
pub fn divisive_total_cost(tree: &ClusterTree, coreset: &WeightedCoreset) -> Result<f64> {
    if tree.num_points() != coreset.len() {
        return Err(Error::DimensionMismatch {
            expected: coreset.len(),
            actual: tree.num_points(),
        });
    }
    let x = coreset.vectors();
    let ones = vec![1.0; coreset.len()];
    let mut total = 0.0;
    for split in tree.splits() {
        let (a, b) = split.children.expect("split node");
        for part in [&tree.nodes[a].members, &tree.nodes[b].members] {
            let centroid = weighted_mean(x, &ones, part).expect("non-empty part");
            total += part.iter().map(|&i| sq_dist(&x[i], &centroid)).sum::<f64>();
        }
    }
    Ok(total)
}

/// Flat clustering with `num_clusters` groups: splits are undone from the
/// highest down. Labels are numbered by each group's smallest member.
pub fn cut_dendrogram(tree: &ClusterTree, num_clusters: usize) -> Result<Vec<usize>> {
    let m = tree.num_points();
    if num_clusters == 0 || num_clusters > m {
        return Err(Error::InvalidInput(format!(
            "cannot cut {m} points into {num_clusters} clusters"
        )));
    }
    let mut groups = vec![0usize];
    while groups.len() < num_clusters {
        let (pos, _) = groups
            .iter()
            .enumerate()
            .filter(|(_, &g)| !tree.nodes[g].is_leaf())
            .max_by(|a, b| tree.nodes[*a.1].height.total_cmp(&tree.nodes[*b.1].height))
            .expect("fewer groups than points implies a splittable group");
        let (a, b) = tree.nodes[groups[pos]].children.expect("split node");
        groups.swap_remove(pos);
        groups.extend([a, b]);
    }
    groups.sort_by_key(|&g| tree.nodes[g].members[0]);
    let mut labels = vec![0; m];
    for (label, &g) in groups.iter().enumerate() {
        for &i in &tree.nodes[g].members {
            labels[i] = label;
        }
    }
    Ok(labels)
}

/// Output of [`three_means_cluster`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeMeansOutcome {
    pub result: PartitionResult,
    pub centers: Vec<Option<Vec<f64>>>,
    pub cost: f64,
}

/// Solves the 3-means Hamiltonian of a normalized coreset and scores the
/// decoded partition with the weighted 3-means cost.
pub fn three_means_cluster(coreset: &WeightedCoreset, solver: SolverKind, options: &SolveOptions) -> Result<ThreeMeansOutcome> {
    let h = build_3means(coreset)?;
    let result = solve(solver, coreset, &h, Encoding::ThreeWay, options)?;
    Ok(ThreeMeansOutcome {
        centers: three_means_centers(coreset, &result.labels)?,
        cost: three_means_cost(coreset, &result.labels)?,
        result,
    })
}

/// How the shared GMM covariance is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceNormalization {
    /// `Σ = (1/W) Σ_k Σ_{S_k} w_j (x_j − μ_k)(x_j − μ_k)ᵀ`, one matrix for both clusters.
    #[default]
    Pooled,
    /// `Σ_k = (1/W_k) Σ_{S_k} w_j (x_j − μ_k)(x_j − μ_k)ᵀ`, one matrix per cluster.
    PerCluster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmParams {
    pub means: [Vec<f64>; 2],
    /// One entry when pooled, two when per cluster; regularized.
    pub covariances: Vec<Vec<Vec<f64>>>,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmOutcome {
    pub result: PartitionResult,
    pub params: GmmParams,
    /// Weighted classification negative log-likelihood (constants dropped).
    pub cost: f64,
    /// `W₁W₂(μ₁−μ₂)ᵀT⁻¹(μ₁−μ₂)` for the returned partition.
    pub separation: f64,
}

/// Between-cluster separation `W₁W₂(μ₁−μ₂)ᵀT⁻¹(μ₁−μ₂)` of a bipartition.
pub fn gmm_separation(coreset: &WeightedCoreset, labels: &[usize], scatter: &ScatterMatrix) -> Result<f64> {
    let members = members_by_label(labels, 2)?;
    let (x, w) = (coreset.vectors(), coreset.weights());
    let mu = |k: usize| -> Result<DVector<f64>> {
        weighted_mean(x, w, &members[k])
            .map(DVector::from_vec)
            .ok_or_else(|| Error::Degenerate(format!("cluster {k} is empty")))
    };
    let diff = mu(0)? - mu(1)?;
    let w1: f64 = members[0].iter().map(|&j| w[j]).sum();
    let w2: f64 = members[1].iter().map(|&j| w[j]).sum();
    Ok(w1 * w2 * (diff.transpose() * &scatter.inverse * &diff)[(0, 0)])
}

/// Largest separation over every non-trivial bipartition, with its labels.
pub fn gmm_exhaustive_separation(coreset: &WeightedCoreset, regularization: Option<f64>) -> Result<(f64, Vec<usize>)> {
    let m = coreset.len();
    if !(2..=crate::solvers::DEFAULT_BRUTE_FORCE_MAX_QUBITS).contains(&m) {
        return Err(Error::InvalidInput(format!("exhaustive search over {m} points refused")));
    }
    let scatter = total_scatter_matrix(coreset, regularization)?;
    let mut best = (f64::NEG_INFINITY, Vec::new());
    // fixing point 0 in cluster 0 visits each bipartition once
    for mask in 1u64..(1 << (m - 1)) {
        let labels: Vec<usize> = (0..m).map(|j| if j == 0 { 0 } else { ((mask >> (j - 1)) & 1) as usize }).collect();
        let s = gmm_separation(coreset, &labels, &scatter)?;
        if s > best.0 {
            best = (s, labels);
        }
    }
    Ok(best)
}

fn covariance(coreset: &WeightedCoreset, members: &[usize], mean: &DVector<f64>, norm: f64) -> DMatrix<f64> {
    let d = coreset.dim();
    let mut s = DMatrix::zeros(d, d);
    for &j in members {
        let c = DVector::from_column_slice(&coreset.vectors()[j]) - mean;
        s += coreset.weights()[j] * &c * c.transpose();
    }
    let s = s / norm;
    let eps = default_regularization(&s);
    (&s + s.transpose()) * 0.5 + DMatrix::identity(d, d) * eps
}

/// Weighted MLE plug-ins and the classification cost of a bipartition.
pub fn gmm_params_and_cost(
    coreset: &WeightedCoreset,
    labels: &[usize],
    mode: CovarianceNormalization,
) -> Result<(GmmParams, f64)> {
    check_labels(coreset, labels)?;
    let members = members_by_label(labels, 2)?;
    if members.iter().any(|m| m.is_empty()) {
        return Err(Error::Degenerate("one side of the bipartition is empty".into()));
    }
    let (x, w) = (coreset.vectors(), coreset.weights());
    let means: Vec<DVector<f64>> = members
        .iter()
        .map(|m| DVector::from_vec(weighted_mean(x, w, m).expect("non-empty")))
        .collect();
    let total = coreset.total_weight();
    let covs: Vec<DMatrix<f64>> = match mode {
        CovarianceNormalization::Pooled => {
            let d = coreset.dim();
            let raw = pooled_raw(coreset, &members, &means, total);
            let eps = default_regularization(&raw);
            vec![&raw + DMatrix::identity(d, d) * eps]
        }
        CovarianceNormalization::PerCluster => (0..2)
            .map(|k| {
                let wk: f64 = members[k].iter().map(|&j| w[j]).sum();
                covariance(coreset, &members[k], &means[k], wk)
            })
            .collect(),
    };
    let mut cost = 0.0;
    for k in 0..2 {
        let cov = &covs[k.min(covs.len() - 1)];
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Degenerate("covariance is not positive definite".into()))?;
        let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        for &j in &members[k] {
            let c = DVector::from_column_slice(&x[j]) - &means[k];
            let maha = c.dot(&chol.solve(&c));
            cost += w[j] * (log_det + maha);
        }
    }
    let to_rows = |m: &DMatrix<f64>| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    let params = GmmParams {
        means: [
            means[0].iter().copied().collect(),
            means[1].iter().copied().collect(),
        ],
        covariances: covs.iter().map(to_rows).collect(),
        labels: labels.to_vec(),
    };
    Ok((params, cost))
}

fn pooled_raw(coreset: &WeightedCoreset, members: &[Vec<usize>], means: &[DVector<f64>], total: f64) -> DMatrix<f64> {
    let d = coreset.dim();
    let mut s = DMatrix::zeros(d, d);
    for k in 0..2 {
        for &j in &members[k] {
            let c = DVector::from_column_slice(&coreset.vectors()[j]) - &means[k];
            s += coreset.weights()[j] * &c * c.transpose();
        }
    }
    let s = s / total;
    (&s + s.transpose()) * 0.5
}

/// Solves the GMM Hamiltonian of a normalized coreset, decodes the
/// bipartition and fits the equal-covariance mixture to it.
pub fn gmm_cluster(
    coreset: &WeightedCoreset,
    solver: SolverKind,
    options: &SolveOptions,
    regularization: Option<f64>,
    mode: CovarianceNormalization,
) -> Result<GmmOutcome> {
    let h = build_gmm(coreset, regularization)?;
    let result = solve(solver, coreset, &h, Encoding::Bipartition, options)?;
    let (params, cost) = gmm_params_and_cost(coreset, &result.labels, mode)?;
    let scatter = total_scatter_matrix(coreset, regularization)?;
    let separation = gmm_separation(coreset, &result.labels, &scatter)?;
    Ok(GmmOutcome {
        result,
        params,
        cost,
        separation,
    })
}

/// Per-run costs of a repeated pipeline and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatedCost {
    pub mean: f64,
    pub costs: Vec<f64>,
    pub seeds: Vec<u64>,
}

/// Runs `run(seed + r)` for `r in 0..repetitions` and averages the costs.
pub fn repeated_cost_average(
    seed: u64,
    repetitions: usize,
    mut run: impl FnMut(u64) -> Result<f64>,
) -> Result<RepeatedCost> {
    if repetitions == 0 {
        return Err(Error::InvalidInput("repetitions must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..repetitions as u64).map(|r| seed.wrapping_add(r)).collect();
    let costs = seeds.iter().map(|&s| run(s)).collect::<Result<Vec<_>>>()?;
    Ok(RepeatedCost {
        mean: costs.iter().sum::<f64>() / repetitions as f64,
        costs,
        seeds,
    })
}
