mod common;

use common::*;
use proptest::prelude::*;
use qcluster::hamiltonian::{build_2means, DiagonalHamiltonian};
use qcluster::qsim::{
    expectation, prepare_ansatz_state, sample_bitstrings, AnsatzConfig, DiagonalObservable, StateVector,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ansatz_matches_dense_kronecker_simulation(
        n in 1usize..=5,
        layers in 0usize..=2,
        raw in prop::collection::vec(-3.2f64..3.2, 36),
    ) {
        let cfg = AnsatzConfig::new(n, layers);
        let theta = &raw[..cfg.num_params()];
        let fast = prepare_ansatz_state(&cfg, theta).unwrap();
        let dense = dense_ansatz_state(n, layers, theta);
        for (a, b) in fast.amplitudes().iter().zip(&dense) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn every_gate_preserves_the_norm(n in 2usize..=6, angles in prop::collection::vec(-6.3f64..6.3, 12)) {
        let mut s = StateVector::uniform(n).unwrap();
        for (k, &t) in angles.iter().enumerate() {
            let q = k % n;
            match k % 4 {
                0 => s.apply_ry(q, t).unwrap(),
                1 => s.apply_rz(q, t).unwrap(),
                2 => s.apply_hadamard(q).unwrap(),
                _ => s.apply_cnot(q, (q + 1) % n).unwrap(),
            }
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn expectation_is_linear_in_the_hamiltonian(
        seed in any::<u64>(),
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
        theta in prop::collection::vec(-3.2f64..3.2, 16),
    ) {
        let h1 = build_2means(&random_coreset(seed, 4, 2)).unwrap();
        let h2 = DiagonalHamiltonian::from_terms(4, &[(vec![0], 0.7), (vec![1, 3], -1.1)], 0.2).unwrap();
        let state = prepare_ansatz_state(&AnsatzConfig::new(4, 1), &theta).unwrap();
        let combined = h1.scaled(alpha).plus(&h2.scaled(beta)).unwrap();
        let lhs = expectation(&combined, &state).unwrap();
        let rhs = alpha * expectation(&h1, &state).unwrap() + beta * expectation(&h2, &state).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
        let cached = DiagonalObservable::new(&combined).unwrap().expectation(&state).unwrap();
        prop_assert!((cached - lhs).abs() < 1e-10 * (1.0 + lhs.abs()));
    }
}

#[test]
fn zero_angles_leave_the_register_in_zero() {
    for n in 1..=8 {
        let cfg = AnsatzConfig::new(n, 2);
        let s = prepare_ansatz_state(&cfg, &vec![0.0; cfg.num_params()]).unwrap();
        assert!((s.probability(0) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn basis_state_expectation_is_its_energy() {
    let h = build_2means(&random_coreset(8, 5, 2)).unwrap();
    for b in 0..32u64 {
        let s = StateVector::basis(&qcluster::hamiltonian::Bitstring::new(b, 5).unwrap()).unwrap();
        assert!((expectation(&h, &s).unwrap() - h.energy_at(b)).abs() < 1e-12);
    }
}

#[test]
fn sampled_frequencies_follow_probabilities() {
    let cfg = AnsatzConfig::new(3, 1);
    let theta: Vec<f64> = (0..cfg.num_params()).map(|k| 0.3 * k as f64 - 1.0).collect();
    let s = prepare_ansatz_state(&cfg, &theta).unwrap();
    let shots = 40_000;
    let mut counts = [0usize; 8];
    for b in sample_bitstrings(&s, shots, 17).unwrap() {
        counts[b.index() as usize] += 1;
    }
    for (i, &c) in counts.iter().enumerate() {
        let p = s.probability(i as u64);
        let se = (p * (1.0 - p) / shots as f64).sqrt();
        assert!((c as f64 / shots as f64 - p).abs() <= 4.0 * se + 1e-9, "index {i}");
    }
    assert_eq!(sample_bitstrings(&s, 50, 3).unwrap(), sample_bitstrings(&s, 50, 3).unwrap());
}

#[test]
fn oversized_registers_are_refused() {
    assert!(StateVector::zero(qcluster::qsim::MAX_STATE_QUBITS + 1).is_err());
}
