//! Statevector simulation of the hardware-efficient ansatz.
//!
//! Amplitude index bit `q` is the eigenbit of qubit `q`, matching
//! [`Bitstring::index`]. Gate conventions: `R_y(θ) = exp(−iθY/2)`,
//! `R_z(θ) = exp(−iθZ/2)`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng as _;

use crate::hamiltonian::{Bitstring, DiagonalHamiltonian};
use crate::{seeded_rng, Error, Result};

/// Largest simulable register: `2^26` complex doubles is 1 GiB.
pub const MAX_STATE_QUBITS: usize = 26;

/// A normalized pure state on `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        check_register(num_qubits)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// The computational basis state `|b⟩`.
    pub fn basis(b: &Bitstring) -> Result<Self> {
        let mut s = Self::zero(b.len())?;
        s.amplitudes[0] = Complex64::new(0.0, 0.0);
        s.amplitudes[b.index() as usize] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Equal superposition of all basis states.
    pub fn uniform(num_qubits: usize) -> Result<Self> {
        check_register(num_qubits)?;
        let a = (1.0 / (1u64 << num_qubits) as f64).sqrt();
        Ok(Self {
            num_qubits,
            amplitudes: vec![Complex64::new(a, 0.0); 1 << num_qubits],
        })
    }

    /// Wraps raw amplitudes; they must have length `2^n` and unit norm within 1e-10.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::InvalidInput(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_register(num_qubits)?;
        let s = Self {
            num_qubits,
            amplitudes,
        };
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!("state norm² is {norm}, expected 1")));
        }
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Bytes held by the amplitude buffer.
    pub fn memory_bytes(&self) -> usize {
        self.amplitudes.len() * std::mem::size_of::<Complex64>()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probability(&self, index: u64) -> f64 {
        self.amplitudes[index as usize].norm_sqr()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            return Err(Error::InvalidInput(format!(
                "qubit {q} out of range for {} qubits",
                self.num_qubits
            )));
        }
        Ok(())
    }

    /// Applies the 2×2 unitary `[[u00, u01], [u10, u11]]` to qubit `q`.
    fn apply_single(&mut self, q: usize, u: [[Complex64; 2]; 2]) {
        let stride = 1usize << q;
        for block in self.amplitudes.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a0, *a1);
                *a0 = u[0][0] * x + u[0][1] * y;
                *a1 = u[1][0] * x + u[1][1] * y;
            }
        }
    }

    pub fn apply_ry(&mut self, q: usize, theta: f64) -> Result<()> {
        self.check_qubit(q)?;
        let (s, c) = (theta / 2.0).sin_cos();
        let (c, s) = (Complex64::new(c, 0.0), Complex64::new(s, 0.0));
        self.apply_single(q, [[c, -s], [s, c]]);
        Ok(())
    }

    pub fn apply_rz(&mut self, q: usize, theta: f64) -> Result<()> {
        self.check_qubit(q)?;
        let stride = 1usize << q;
        let minus = Complex64::from_polar(1.0, -theta / 2.0);
        let plus = Complex64::from_polar(1.0, theta / 2.0);
        for block in self.amplitudes.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            lo.iter_mut().for_each(|a| *a *= minus);
            hi.iter_mut().for_each(|a| *a *= plus);
        }
        Ok(())
    }

    pub fn apply_hadamard(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        self.apply_single(q, [[h, h], [h, -h]]);
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::InvalidInput("CNOT control and target coincide".into()));
        }
        let (cm, tm) = (1usize << control, 1usize << target);
        for i in 0..self.amplitudes.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amplitudes.swap(i, i | tm);
            }
        }
        Ok(())
    }
}

fn check_register(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 {
        return Err(Error::InvalidInput("a register needs at least one qubit".into()));
    }
    if num_qubits > MAX_STATE_QUBITS {
        return Err(Error::TooManyQubits {
            requested: num_qubits,
            limit: MAX_STATE_QUBITS,
            hint: "the statevector would exceed 1 GiB",
        });
    }
    Ok(())
}

/// Layered hardware-efficient ansatz: `layers` blocks of per-qubit
/// `R_y, R_z` rotations followed by a CNOT ladder `0→1, 1→2, …`, then one
/// final rotation block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnsatzConfig {
    pub num_qubits: usize,
    pub layers: usize,
}

impl AnsatzConfig {
    pub fn new(num_qubits: usize, layers: usize) -> Self {
        Self { num_qubits, layers }
    }

    /// `2 n (L + 1)`.
    pub fn num_params(&self) -> usize {
        2 * self.num_qubits * (self.layers + 1)
    }

    /// Index of the `R_y` angle of rotation block `block` on `qubit`; the
    /// `R_z` angle follows it. Parameters are grouped per qubit, so for
    /// `n = 4, L = 1` qubit 0 owns `θ₀…θ₃` and qubit 3 owns `θ₁₂…θ₁₅`.
    pub fn ry_index(&self, qubit: usize, block: usize) -> usize {
        qubit * 2 * (self.layers + 1) + 2 * block
    }
}

/// Runs the ansatz circuit on `|0…0⟩`.
pub fn prepare_ansatz_state(config: &AnsatzConfig, params: &[f64]) -> Result<StateVector> {
    if params.len() != config.num_params() {
        return Err(Error::DimensionMismatch {
            expected: config.num_params(),
            actual: params.len(),
        });
    }
    let n = config.num_qubits;
    let mut state = StateVector::zero(n)?;
    for block in 0..=config.layers {
        for q in 0..n {
            let k = config.ry_index(q, block);
            state.apply_ry(q, params[k])?;
            state.apply_rz(q, params[k + 1])?;
        }
        if block < config.layers {
            for q in 0..n.saturating_sub(1) {
                state.apply_cnot(q, q + 1)?;
            }
        }
    }
    Ok(state)
}

fn check_sizes(h: &DiagonalHamiltonian, state: &StateVector) -> Result<()> {
    if h.num_qubits() != state.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: h.num_qubits(),
            actual: state.num_qubits(),
        });
    }
    Ok(())
}

/// Exact `⟨ψ|H|ψ⟩ = Σ_b |ψ_b|² E(b)`.
pub fn expectation(h: &DiagonalHamiltonian, state: &StateVector) -> Result<f64> {
    check_sizes(h, state)?;
    let mut acc = 0.0;
    h.for_each_energy(|b, e| acc += state.probability(b) * e);
    Ok(acc)
}

/// A Hamiltonian with its dense diagonal precomputed, for repeated
/// expectation values against many states.
#[derive(Debug, Clone)]
pub struct DiagonalObservable {
    num_qubits: usize,
    diagonal: Vec<f64>,
}

impl DiagonalObservable {
    pub fn new(h: &DiagonalHamiltonian) -> Result<Self> {
        Ok(Self {
            num_qubits: h.num_qubits(),
            diagonal: h.diagonal()?,
        })
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        if self.num_qubits != state.num_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                actual: state.num_qubits(),
            });
        }
        Ok(state
            .amplitudes
            .iter()
            .zip(&self.diagonal)
            .map(|(a, e)| a.norm_sqr() * e)
            .sum())
    }
}

/// Draws `shots` i.i.d. measurement outcomes from `|ψ_b|²`.
pub fn sample_bitstrings(state: &StateVector, shots: usize, seed: u64) -> Result<Vec<Bitstring>> {
    if shots == 0 {
        return Err(Error::InvalidInput("shots must be at least 1".into()));
    }
    let mut cumulative = Vec::with_capacity(state.amplitudes.len());
    let mut acc = 0.0;
    for a in &state.amplitudes {
        acc += a.norm_sqr();
        cumulative.push(acc);
    }
    let mut rng = seeded_rng(seed);
    (0..shots)
        .map(|_| {
            let r = rng.random::<f64>() * acc;
            let idx = cumulative
                .partition_point(|&c| c <= r)
                .min(cumulative.len() - 1);
            Bitstring::new(idx as u64, state.num_qubits)
        })
        .collect()
}

/// The basis state with the largest probability, lowest index on ties.
pub fn most_probable_bitstring(state: &StateVector) -> Bitstring {
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, a) in state.amplitudes.iter().enumerate() {
        let p = a.norm_sqr();
        if p > best.1 {
            best = (i, p);
        }
    }
    Bitstring::new(best.0 as u64, state.num_qubits).expect("index fits the register")
}
