//! Picks the overall sign of the 2-means and 3-means Hamiltonians.
//!
//! For 20 random instances with at most 6 points, both signs are tried and
//! the brute-force ground state is compared against the exhaustive minimum
//! of the direct clustering objective. Run with
//! `cargo run --release --example calibrate_orientation`.

use qcluster::coreset::{normalize_coreset, WeightedCoreset};
use qcluster::hamiltonian::{build_2means, build_3means, DiagonalHamiltonian};
use qcluster::pipelines::{kmeans_cost, weighted_cut};
use qcluster::solvers::{decode_2means, decode_3means, solve_brute_force, Encoding};
use rand::Rng;

const INSTANCES: u64 = 20;
const TOL: f64 = 1e-9;

fn random_coreset(seed: u64) -> WeightedCoreset {
    let mut rng = qcluster::seeded_rng(seed);
    let m = rng.random_range(3..=6);
    let d = rng.random_range(1..=3);
    let vectors = (0..m)
        .map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect())
        .collect();
    let weights = (0..m).map(|_| rng.random_range(0.5..3.0)).collect();
    normalize_coreset(&WeightedCoreset::new(vectors, weights, seed).unwrap())
}

fn all_labels(m: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..k.pow(m as u32)).map(move |mut code| {
        (0..m)
            .map(|_| {
                let l = code % k;
                code /= k;
                l
            })
            .collect()
    })
}

fn ground_labels(h: &DiagonalHamiltonian, encoding: Encoding) -> Vec<usize> {
    solve_brute_force(h, encoding, 24).unwrap().labels
}

fn main() {
    let mut two = [0u32; 2];
    let mut three = [0u32; 2];
    for seed in 0..INSTANCES {
        let c = random_coreset(seed);
        let m = c.len();

        let best2 = all_labels(m, 2)
            .map(|l| kmeans_cost(&c, &l, 2).unwrap())
            .fold(f64::INFINITY, f64::min);
        let best3 = all_labels(m, 3)
            .map(|l| weighted_cut(&c, &l).unwrap())
            .fold(f64::INFINITY, f64::min);

        let h2 = build_2means(&c).unwrap();
        let h3 = build_3means(&c).unwrap();
        // the builders apply the frozen constants; flipping the whole
        // operator tries the other sign
        for (slot, sign) in [(0, 1.0), (1, -1.0)] {
            let l2 = ground_labels(&h2.scaled(sign), Encoding::Bipartition);
            let b2 = qcluster::solvers::encode_2means(&l2).unwrap();
            let cost2 = kmeans_cost(&c, &decode_2means(&b2), 2).unwrap();
            if cost2 <= best2 + TOL * (1.0 + best2.abs()) {
                two[slot] += 1;
            }
            let l3 = ground_labels(&h3.scaled(sign), Encoding::ThreeWay);
            let b3 = qcluster::solvers::encode_3means(&l3).unwrap();
            let cut3 = weighted_cut(&c, &decode_3means(&b3).unwrap()).unwrap();
            if cut3 <= best3 + TOL * (1.0 + best3.abs()) {
                three[slot] += 1;
            }
        }
    }
    println!("instances: {INSTANCES}");
    println!("2-means  frozen sign matches {}/{INSTANCES}, flipped sign matches {}/{INSTANCES}", two[0], two[1]);
    println!("3-means  frozen sign matches {}/{INSTANCES}, flipped sign matches {}/{INSTANCES}", three[0], three[1]);
}
