mod common;

use common::*;
use proptest::prelude::*;
use qcluster::coreset::normalize_coreset;
use qcluster::hamiltonian::{
    build_2means, build_3means, build_gmm, total_scatter_matrix, Bitstring, DiagonalHamiltonian,
};
use qcluster::pipelines::weighted_cut;
use qcluster::solvers::{decode_3means, solve_brute_force, Encoding};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn two_means_matches_scalar_formula(seed in any::<u64>(), m in 2usize..=8, d in 1usize..=3) {
        let c = random_coreset(seed, m, d);
        let h = build_2means(&c).unwrap();
        for b in 0..1u64 << m {
            prop_assert!(close(h.energy_at(b), two_means_energy(&c, b)));
        }
    }

    #[test]
    fn three_means_matches_scalar_formula(seed in any::<u64>(), m in 2usize..=4, d in 1usize..=3) {
        let c = random_coreset(seed, m, d);
        let h = build_3means(&c).unwrap();
        for b in 0..1u64 << (2 * m) {
            prop_assert!(close(h.energy_at(b), three_means_energy(&c, b)));
        }
    }

    #[test]
    fn three_means_energy_is_the_decoded_cut(seed in any::<u64>(), m in 2usize..=4) {
        let c = random_coreset(seed, m, 2);
        let h = build_3means(&c).unwrap();
        for b in 0..1u64 << (2 * m) {
            let labels = decode_3means(&Bitstring::new(b, 2 * m).unwrap()).unwrap();
            prop_assert!(close(h.energy_at(b), weighted_cut(&c, &labels).unwrap()));
        }
    }

    #[test]
    fn gmm_matches_scalar_formula(seed in any::<u64>(), extra in 2usize..=6, d in 1usize..=3) {
        let m = d + extra;
        let c = random_coreset(seed, m, d);
        let scatter = total_scatter_matrix(&c, None).unwrap();
        let tinv = scatter_inverse(&c, scatter.regularization);
        let h = build_gmm(&c, None).unwrap();
        for b in 0..1u64 << m {
            let want = gmm_energy(&c, &tinv, b);
            prop_assert!((h.energy_at(b) - want).abs() <= 1e-9 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn bipartition_hamiltonians_are_flip_symmetric(seed in any::<u64>(), m in 2usize..=8) {
        let c = random_coreset(seed, m, 2);
        let full = (1u64 << m) - 1;
        for h in [build_2means(&c).unwrap(), build_gmm(&c, None).unwrap()] {
            for b in 0..1u64 << m {
                prop_assert!(close(h.energy_at(b), h.energy_at(b ^ full)));
            }
        }
    }

    #[test]
    fn merging_terms_preserves_every_energy(
        raw in prop::collection::vec(
            (prop::sample::subsequence((0usize..5).collect::<Vec<_>>(), 1..4), -3.0f64..3.0),
            1..12,
        ),
        constant in -2.0f64..2.0,
    ) {
        let merged = DiagonalHamiltonian::from_terms(5, &raw, constant).unwrap();
        for b in 0..32u64 {
            let direct: f64 = constant + raw.iter().map(|(support, c)| {
                c * support.iter().map(|&q| spin(b, q)).product::<f64>()
            }).sum::<f64>();
            prop_assert!(close(merged.energy_at(b), direct));
        }
        let mut supports: Vec<_> = merged.terms().iter().map(|t| t.mask()).collect();
        supports.dedup();
        prop_assert_eq!(supports.len(), merged.terms().len());
    }

    #[test]
    fn gray_code_walk_matches_direct_evaluation(seed in any::<u64>(), m in 2usize..=10) {
        let c = random_coreset(seed, m, 2);
        let h = build_2means(&c).unwrap();
        let mut seen = 0u64;
        h.for_each_energy(|b, e| {
            seen += 1;
            assert!(close(e, h.energy_at(b)));
        });
        prop_assert_eq!(seen, 1u64 << m);
    }
}

#[test]
fn two_means_ground_state_minimizes_the_weighted_cut() {
    for seed in 0..50 {
        let m = 4 + (seed as usize % 7);
        let c = normalize_coreset(&random_coreset(seed, m, 1 + seed as usize % 3));
        let h = build_2means(&c).unwrap();
        let ground = solve_brute_force(&h, Encoding::Bipartition, 24).unwrap();
        let min_cut = (0..1u64 << m)
            .map(|b| weighted_cut(&c, &labels_of(b, m)).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(close(ground.energy, min_cut), "seed {seed}");
        assert!(close(weighted_cut(&c, &ground.labels).unwrap(), min_cut));
    }
}

#[test]
fn json_round_trip_preserves_energies() {
    let c = random_coreset(3, 5, 2);
    let h = build_3means(&c).unwrap();
    let back: DiagonalHamiltonian = serde_json::from_str(&serde_json::to_string(&h).unwrap()).unwrap();
    for b in 0..1u64 << 10 {
        assert!(close(back.energy_at(b), h.energy_at(b)));
    }
}
