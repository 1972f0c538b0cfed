//! Coreset-compressed clustering on simulated variational quantum hardware.
//!
//! A large point set is reduced to a small weighted coreset by sensitivity
//! sampling ([`coreset`]). The coreset is then compiled into a diagonal
//! Pauli-Z Hamiltonian ([`hamiltonian`]) whose ground state encodes one of
//! three clusterings:
//!
//! * 2-means bipartitions (one qubit per point), used recursively by the
//!   divisive hierarchical driver,
//! * 3-means partitions (two qubits per point),
//! * two-component, equal-covariance Gaussian-mixture clustering.
//!
//! The ground state is searched with a statevector-simulated variational
//! eigensolver ([`qsim`], [`optimize`], [`solvers`]) and compared against
//! exhaustive search, random assignment and weighted Lloyd iterations.
//!
//! All randomness comes from [`seeded_rng`], a ChaCha8 stream keyed by a
//! `u64` seed, so every result is reproducible from its seed.

pub mod coreset;
pub mod data;
mod error;
pub mod hamiltonian;
pub mod optimize;
pub mod pipelines;
pub mod qsim;
pub mod solvers;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for every stochastic operation in the crate.
pub type Rng = ChaCha8Rng;

/// Builds the crate's PRNG from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent child seed from `seed` and a stream index
/// (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Squared Euclidean distance.
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
