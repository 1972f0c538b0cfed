mod common;

use common::*;
use proptest::prelude::*;
use qcluster::coreset::{normalize_coreset, WeightedCoreset};
use qcluster::hamiltonian::{build_3means, total_scatter_matrix};
use qcluster::pipelines::{
    cut_dendrogram, divisive_cluster, divisive_total_cost, gmm_cluster, gmm_exhaustive_separation,
    gmm_params_and_cost, gmm_separation, repeated_cost_average, scatter_decomposition, three_means_cluster,
    three_means_cost, weighted_cut, ClusterTree, CovarianceNormalization,
};
use qcluster::solvers::{solve_brute_force, Encoding, SolveOptions, SolverKind};

fn line(points: &[f64]) -> WeightedCoreset {
    WeightedCoreset::unweighted(points.iter().map(|&p| vec![p]).collect()).unwrap()
}

fn assert_tree_shape(tree: &ClusterTree, m: usize) {
    assert_eq!(tree.root().members, (0..m).collect::<Vec<_>>());
    assert_eq!(tree.leaves().count(), m);
    assert_eq!(tree.splits().count(), m - 1);
    for n in &tree.nodes {
        match n.children {
            None => assert_eq!(n.members.len(), 1),
            Some((a, b)) => {
                let mut u = tree.nodes[a].members.clone();
                u.extend(&tree.nodes[b].members);
                u.sort_unstable();
                assert_eq!(u, n.members);
                assert!(tree.nodes[a].height < n.height && tree.nodes[b].height < n.height);
            }
        }
    }
}

#[test]
fn trivial_trees() {
    let one = divisive_cluster(&line(&[3.0]), SolverKind::BruteForce, &SolveOptions::new(0)).unwrap();
    assert_eq!(one.nodes.len(), 1);
    assert_eq!(one.splits().count(), 0);
    let two = divisive_cluster(&line(&[0.0, 1.0]), SolverKind::BruteForce, &SolveOptions::new(0)).unwrap();
    assert_eq!(two.splits().count(), 1);
    assert_eq!(divisive_total_cost(&two, &line(&[0.0, 1.0])).unwrap(), 0.0);
}

#[test]
fn three_collinear_points_cost_one_half() {
    let c = line(&[0.0, 1.0, 5.0]);
    let tree = divisive_cluster(&c, SolverKind::BruteForce, &SolveOptions::new(0)).unwrap();
    let (a, b) = tree.root().children.unwrap();
    let mut first = [tree.nodes[a].members.clone(), tree.nodes[b].members.clone()];
    first.sort();
    assert_eq!(first, [vec![0, 1], vec![2]]);
    assert!((divisive_total_cost(&tree, &c).unwrap() - 0.5).abs() <= 1e-12);
}

#[test]
fn every_solver_builds_a_valid_tree() {
    let c = random_coreset(12, 9, 2);
    for kind in [SolverKind::BruteForce, SolverKind::Random, SolverKind::Classical, SolverKind::Vqe] {
        let mut opts = SolveOptions::new(5);
        opts.vqe.restarts = 2;
        let tree = divisive_cluster(&c, kind, &opts).unwrap();
        assert_tree_shape(&tree, 9);
        assert!(divisive_total_cost(&tree, &c).unwrap() >= 0.0);
    }
}

#[test]
fn brute_force_splits_replay_the_subset_optimum() {
    let c = random_coreset(31, 8, 2);
    let tree = divisive_cluster(&c, SolverKind::BruteForce, &SolveOptions::new(1)).unwrap();
    for node in tree.splits() {
        let sub = normalize_coreset(&c.restrict(&node.members).unwrap());
        let k = node.members.len();
        let best = (0..1u64 << k).map(|b| two_means_energy(&sub, b)).fold(f64::INFINITY, f64::min);
        let (a, _) = node.children.unwrap();
        let side: u64 = node
            .members
            .iter()
            .enumerate()
            .filter(|(_, m)| tree.nodes[a].members.contains(m))
            .map(|(i, _)| 1u64 << i)
            .sum();
        assert!((two_means_energy(&sub, side) - best).abs() <= 1e-9 * (1.0 + best.abs()));
        assert!((node.split_energy.unwrap() - best).abs() <= 1e-9 * (1.0 + best.abs()));
    }
}

#[test]
fn dendrogram_cuts() {
    let c = random_coreset(8, 10, 2);
    let tree = divisive_cluster(&c, SolverKind::BruteForce, &SolveOptions::new(2)).unwrap();
    assert!(cut_dendrogram(&tree, 1).unwrap().iter().all(|&l| l == 0));
    let mut all = cut_dendrogram(&tree, 10).unwrap();
    all.sort_unstable();
    assert_eq!(all, (0..10).collect::<Vec<_>>());
    assert!(cut_dendrogram(&tree, 0).is_err() && cut_dendrogram(&tree, 11).is_err());

    // six groups are exactly the subtrees hanging below a horizontal line
    let labels = cut_dendrogram(&tree, 6).unwrap();
    let mut heights: Vec<f64> = tree.splits().map(|n| n.height).collect();
    heights.sort_by(|a, b| b.total_cmp(a));
    let line = 0.5 * (heights[4] + heights[5]);
    let below: Vec<&Vec<usize>> = tree
        .nodes
        .iter()
        .enumerate()
        .filter(|(i, n)| {
            n.height < line
                && tree.nodes.iter().any(|p| p.children.is_some_and(|(a, b)| (a == *i || b == *i) && p.height > line))
        })
        .map(|(_, n)| &n.members)
        .collect();
    assert_eq!(below.len(), 6);
    for group in below {
        assert!(group.iter().all(|&i| labels[i] == labels[group[0]]));
    }
}

#[test]
fn tree_exports() {
    let c = line(&[0.0, 1.0, 5.0, 6.5]);
    let tree = divisive_cluster(&c, SolverKind::BruteForce, &SolveOptions::new(0)).unwrap();
    let dot = tree.to_dot();
    assert!(dot.starts_with("digraph"));
    assert_eq!(dot.matches("->").count(), 6);
    let nested = serde_json::to_value(tree.to_nested()).unwrap();
    assert_eq!(nested["members"], serde_json::json!([0, 1, 2, 3]));
    assert_eq!(nested["children"].as_array().unwrap().len(), 2);
    let back: qcluster::pipelines::NestedNode = serde_json::from_value(nested).unwrap();
    assert_eq!(back, tree.to_nested());
}

#[test]
fn three_means_brute_force_is_surrogate_optimal() {
    for seed in 0..15 {
        let m = 3 + seed as usize % 3;
        let c = normalize_coreset(&random_coreset(seed, m, 2));
        let out = three_means_cluster(&c, SolverKind::BruteForce, &SolveOptions::new(seed)).unwrap();
        let all: Vec<Vec<usize>> = (0..3usize.pow(m as u32))
            .map(|mut code| (0..m).map(|_| { let l = code % 3; code /= 3; l }).collect())
            .collect();
        let min_cut = all.iter().map(|l| weighted_cut(&c, l).unwrap()).fold(f64::INFINITY, f64::min);
        let best_cost_among_optimal = all
            .iter()
            .filter(|l| (weighted_cut(&c, l).unwrap() - min_cut).abs() <= 1e-9)
            .map(|l| three_means_cost(&c, l).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!((out.cost - best_cost_among_optimal).abs() <= 1e-9, "seed {seed}");
        let h = build_3means(&c).unwrap();
        assert_eq!(out.result, solve_brute_force(&h, Encoding::ThreeWay, 24).unwrap());
    }
}

#[test]
fn three_means_cost_examples() {
    let c = random_coreset(4, 3, 2);
    assert_eq!(three_means_cost(&c, &[0, 1, 2]).unwrap(), 0.0);
    let d = scatter_decomposition(&c, &[0, 0, 0], 3).unwrap();
    assert!((three_means_cost(&c, &[0, 0, 0]).unwrap() - d.scatter).abs() < 1e-12);
    assert!(d.between.abs() < 1e-12);
}

#[test]
fn gmm_cost_is_label_swap_invariant_and_matches_unweighted_formulas() {
    let c = WeightedCoreset::unweighted(random_coreset(6, 8, 2).vectors().to_vec()).unwrap();
    let labels = vec![0, 0, 1, 0, 1, 1, 0, 1];
    let swapped: Vec<usize> = labels.iter().map(|l| 1 - l).collect();
    let (p, cost) = gmm_params_and_cost(&c, &labels, CovarianceNormalization::Pooled).unwrap();
    let (_, cost_swapped) = gmm_params_and_cost(&c, &swapped, CovarianceNormalization::Pooled).unwrap();
    assert!((cost - cost_swapped).abs() < 1e-9);

    let x = c.vectors();
    let mean = |k: usize| -> Vec<f64> {
        let idx: Vec<usize> = (0..8).filter(|&i| labels[i] == k).collect();
        (0..2).map(|t| idx.iter().map(|&i| x[i][t]).sum::<f64>() / idx.len() as f64).collect()
    };
    let mu = [mean(0), mean(1)];
    let mut pooled = [[0.0; 2]; 2];
    for i in 0..8 {
        let r: Vec<f64> = (0..2).map(|t| x[i][t] - mu[labels[i]][t]).collect();
        for a in 0..2 {
            for b in 0..2 {
                pooled[a][b] += r[a] * r[b] / 8.0;
            }
        }
    }
    for k in 0..2 {
        for t in 0..2 {
            assert!((p.means[k][t] - mu[k][t]).abs() < 1e-12);
        }
    }
    for a in 0..2 {
        for b in 0..2 {
            assert!((p.covariances[0][a][b] - pooled[a][b]).abs() < 1e-6 * (1.0 + pooled[a][b].abs()));
        }
    }
    assert!(gmm_params_and_cost(&c, &[0; 8], CovarianceNormalization::Pooled).is_err());
}

#[test]
fn gmm_brute_force_reports_gap_to_exhaustive_separation() {
    for seed in 0..10 {
        let c = normalize_coreset(&random_coreset(40 + seed, 8, 2));
        let out = gmm_cluster(&c, SolverKind::BruteForce, &SolveOptions::new(seed), None, Default::default()).unwrap();
        let (max_sep, _) = gmm_exhaustive_separation(&c, None).unwrap();
        let scatter = total_scatter_matrix(&c, None).unwrap();
        let sep = gmm_separation(&c, &out.result.labels, &scatter).unwrap();
        assert!((sep - out.separation).abs() < 1e-9 * (1.0 + sep));
        assert!(sep <= max_sep + 1e-9 * (1.0 + max_sep));
        let per = gmm_cluster(&c, SolverKind::BruteForce, &SolveOptions::new(seed), None, CovarianceNormalization::PerCluster).unwrap();
        assert_eq!(per.params.covariances.len(), 2);
    }
}

#[test]
fn repeated_costs() {
    let one = repeated_cost_average(7, 1, |s| Ok(s as f64)).unwrap();
    assert_eq!(one.mean, 7.0);
    let c = random_coreset(2, 6, 2);
    let run = |seed| {
        let tree = divisive_cluster(&c, SolverKind::BruteForce, &SolveOptions::new(seed))?;
        divisive_total_cost(&tree, &c)
    };
    let r = repeated_cost_average(3, 10, run).unwrap();
    assert_eq!(r.seeds, (3..13).collect::<Vec<_>>());
    assert!(r.costs.iter().all(|&x| x == r.costs[0]));
    assert!(repeated_cost_average(0, 0, |_| Ok(0.0)).is_err());
}

proptest! {
    #[test]
    fn scatter_identity(seed in any::<u64>(), m in 3usize..20, d in 1usize..4, k in 2usize..=3, raw in prop::collection::vec(0usize..3, 20)) {
        let c = random_coreset(seed, m, d);
        let mut labels: Vec<usize> = raw[..m].iter().map(|l| l % k).collect();
        for (i, l) in labels.iter_mut().enumerate().take(k) {
            *l = i;
        }
        let s = scatter_decomposition(&c, &labels, k).unwrap();
        prop_assert!(s.residual().abs() < 1e-9 * s.scatter);
    }
}
