//! Diagonal Pauli-Z Hamiltonians for the three clustering encodings.
//!
//! Every Hamiltonian here is a real polynomial in commuting `Z` operators,
//! `H = c₀ + Σ_t c_t Π_{q∈t} Z_q`, so it is diagonal in the computational
//! basis and the energy of a basis state `|b⟩` is
//! `c₀ + Σ_t c_t (−1)^{popcount(b ∧ t)}`.
//!
//! Qubit `q` is bit `q` of the integer basis index. In the string form of a
//! [`Bitstring`] qubit 0 is the leftmost character, and character `1` means
//! the `Z = −1` eigenstate.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::coreset::WeightedCoreset;
use crate::{dot, Error, Result};

/// Largest register a [`DiagonalHamiltonian`] can address (one `u64` mask per term).
pub const MAX_QUBITS: usize = 64;

/// Sign applied to the 2-means MaxCut Hamiltonian so that its ground state
/// minimizes the clustering cost. Frozen by `examples/calibrate_orientation.rs`.
pub const TWO_MEANS_ORIENTATION: f64 = -1.0;

/// Sign applied to the 3-means Hamiltonian so that its ground state minimizes
/// the weighted cut between the three sets. Frozen by
/// `examples/calibrate_orientation.rs`.
pub const THREE_MEANS_ORIENTATION: f64 = -1.0;

/// Relative scatter-matrix regularization: `ε_T = 1e-6 · trace(T) / d`.
pub const DEFAULT_RELATIVE_REGULARIZATION: f64 = 1e-6;
/// Floor on `ε_T` so that a zero scatter matrix stays invertible.
pub const MIN_REGULARIZATION: f64 = 1e-12;
/// Condition number above which `T + ε_T I` is reported singular.
pub const MAX_SCATTER_CONDITION: f64 = 1e13;

/// A computational basis state of `len` qubits; qubit `q` is bit `q` of `bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bitstring {
    bits: u64,
    len: usize,
}

impl Bitstring {
    pub fn new(bits: u64, len: usize) -> Result<Self> {
        if len == 0 || len > MAX_QUBITS {
            return Err(Error::InvalidInput(format!(
                "bitstring length must be in 1..={MAX_QUBITS}, got {len}"
            )));
        }
        if len < 64 && bits >> len != 0 {
            return Err(Error::InvalidInput(format!(
                "index {bits} does not fit in {len} qubits"
            )));
        }
        Ok(Self { bits, len })
    }

    /// All qubits in `|0⟩`.
    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(0, len)
    }

    pub fn from_bools(bits: &[bool]) -> Result<Self> {
        let index = bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (q, &b)| acc | (u64::from(b) << q));
        Self::new(index, bits.len())
    }

    /// Basis index with qubit `q` at bit `q`.
    pub fn index(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, qubit: usize) -> bool {
        (self.bits >> qubit) & 1 == 1
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|q| self.bit(q)).collect()
    }

    /// Every qubit flipped.
    pub fn complement(&self) -> Self {
        let mask = if self.len == 64 { u64::MAX } else { (1u64 << self.len) - 1 };
        Self {
            bits: !self.bits & mask,
            len: self.len,
        }
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.len {
            f.write_str(if self.bit(q) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    /// Parses `0`/`1` characters, qubit 0 first. Whitespace and `_` are ignored.
    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_')
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidInput(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bools(&bits)
    }
}

impl Serialize for Bitstring {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bitstring {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `coefficient · Π_{q ∈ support} Z_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliZTerm {
    support: Vec<usize>,
    mask: u64,
    coefficient: f64,
}

impl PauliZTerm {
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    /// `±1` eigenvalue of the Z-string on basis index `b`.
    #[inline]
    pub fn sign(&self, b: u64) -> f64 {
        parity_sign(b & self.mask)
    }
}

#[inline]
fn parity_sign(x: u64) -> f64 {
    if x.count_ones() & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Accumulates Z-string monomials keyed by their support mask.
///
/// `Z_q² = 1`, so the product of two monomials has the symmetric difference
/// (XOR) of their supports; repeated supports are merged on insertion.
#[derive(Debug, Clone, Default)]
pub struct ZPolynomial {
    coefficients: BTreeMap<u64, f64>,
}

impl ZPolynomial {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `coefficient · Π_{q ∈ qubits} Z_q`. A qubit listed twice cancels.
    pub fn add(&mut self, qubits: &[usize], coefficient: f64) -> &mut Self {
        let mask = qubits.iter().fold(0u64, |m, &q| m ^ (1u64 << q));
        self.add_mask(mask, coefficient)
    }

    pub fn add_mask(&mut self, mask: u64, coefficient: f64) -> &mut Self {
        *self.coefficients.entry(mask).or_insert(0.0) += coefficient;
        self
    }

    /// Freezes into a Hamiltonian on `num_qubits` qubits. Terms whose merged
    /// coefficient is exactly zero are dropped.
    pub fn into_hamiltonian(self, num_qubits: usize) -> Result<DiagonalHamiltonian> {
        check_num_qubits(num_qubits)?;
        let mut constant = 0.0;
        let mut terms = Vec::new();
        for (mask, c) in self.coefficients {
            if mask == 0 {
                constant += c;
                continue;
            }
            if num_qubits < 64 && mask >> num_qubits != 0 {
                return Err(Error::InvalidInput(format!(
                    "term support exceeds {num_qubits} qubits"
                )));
            }
            if c != 0.0 {
                terms.push(PauliZTerm {
                    support: (0..64).filter(|q| mask >> q & 1 == 1).collect(),
                    mask,
                    coefficient: c,
                });
            }
        }
        Ok(DiagonalHamiltonian {
            num_qubits,
            terms,
            constant,
        })
    }
}

fn check_num_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidInput(format!(
            "number of qubits must be in 1..={MAX_QUBITS}, got {n}"
        )));
    }
    Ok(())
}

/// A constant plus a sum of Z-strings with pairwise-distinct supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HamiltonianRecord", into = "HamiltonianRecord")]
pub struct DiagonalHamiltonian {
    num_qubits: usize,
    terms: Vec<PauliZTerm>,
    constant: f64,
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    support: Vec<usize>,
    coeff: f64,
}

/// Export form, consumable by external Pauli-operator toolkits.
#[derive(Serialize, Deserialize)]
struct HamiltonianRecord {
    num_qubits: usize,
    constant: f64,
    terms: Vec<TermRecord>,
}

impl From<DiagonalHamiltonian> for HamiltonianRecord {
    fn from(h: DiagonalHamiltonian) -> Self {
        HamiltonianRecord {
            num_qubits: h.num_qubits,
            constant: h.constant,
            terms: h
                .terms
                .into_iter()
                .map(|t| TermRecord {
                    support: t.support,
                    coeff: t.coefficient,
                })
                .collect(),
        }
    }
}

impl TryFrom<HamiltonianRecord> for DiagonalHamiltonian {
    type Error = Error;

    fn try_from(r: HamiltonianRecord) -> Result<Self> {
        let terms: Vec<(Vec<usize>, f64)> =
            r.terms.into_iter().map(|t| (t.support, t.coeff)).collect();
        DiagonalHamiltonian::from_terms(r.num_qubits, &terms, r.constant)
    }
}

impl DiagonalHamiltonian {
    /// Builds from raw `(support, coefficient)` pairs, merging equal supports.
    ///
    /// Supports must be non-empty, in range, and free of repeated qubits.
    pub fn from_terms(num_qubits: usize, terms: &[(Vec<usize>, f64)], constant: f64) -> Result<Self> {
        check_num_qubits(num_qubits)?;
        let mut poly = ZPolynomial::new();
        poly.add_mask(0, constant);
        for (support, c) in terms {
            if support.is_empty() {
                return Err(Error::InvalidInput("Z-term support must be non-empty".into()));
            }
            let mut mask = 0u64;
            for &q in support {
                if q >= num_qubits {
                    return Err(Error::InvalidInput(format!(
                        "qubit {q} out of range for {num_qubits} qubits"
                    )));
                }
                if mask >> q & 1 == 1 {
                    return Err(Error::InvalidInput(format!("qubit {q} repeated in a support")));
                }
                mask |= 1 << q;
            }
            poly.add_mask(mask, *c);
        }
        poly.into_hamiltonian(num_qubits)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[PauliZTerm] {
        &self.terms
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// `α H` for a real scalar `α`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            num_qubits: self.num_qubits,
            terms: self
                .terms
                .iter()
                .map(|t| PauliZTerm {
                    coefficient: alpha * t.coefficient,
                    ..t.clone()
                })
                .collect(),
            constant: alpha * self.constant,
        }
    }

    /// Sum of two Hamiltonians on the same register.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                actual: other.num_qubits,
            });
        }
        let mut poly = ZPolynomial::new();
        for h in [self, other] {
            poly.add_mask(0, h.constant);
            for t in &h.terms {
                poly.add_mask(t.mask, t.coefficient);
            }
        }
        poly.into_hamiltonian(self.num_qubits)
    }

    /// Energy of `|b⟩`.
    pub fn basis_energy(&self, b: &Bitstring) -> Result<f64> {
        if b.len() != self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                actual: b.len(),
            });
        }
        Ok(self.energy_at(b.index()))
    }

    /// Energy of basis index `b` (qubit `q` at bit `q`), without length checks.
    #[inline]
    pub fn energy_at(&self, b: u64) -> f64 {
        self.constant + self.terms.iter().map(|t| t.coefficient * t.sign(b)).sum::<f64>()
    }

    /// Calls `visit(index, energy)` for every basis state in Gray-code order.
    ///
    /// Each step flips one qubit and updates only the terms touching it; the
    /// running energy is recomputed from scratch every 1024 steps to bound
    /// floating-point drift.
    pub fn for_each_energy(&self, mut visit: impl FnMut(u64, f64)) {
        let n = self.num_qubits;
        let mut touching: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (t, term) in self.terms.iter().enumerate() {
            for &q in &term.support {
                touching[q].push(t);
            }
        }
        let mut signs = vec![1.0; self.terms.len()];
        let mut energy = self.constant + self.terms.iter().map(|t| t.coefficient).sum::<f64>();
        let mut gray = 0u64;
        visit(0, energy);
        let count: u64 = 1u64.checked_shl(n as u32).unwrap_or(0);
        for k in 1..count {
            let q = k.trailing_zeros() as usize;
            gray ^= 1 << q;
            for &t in &touching[q] {
                energy -= 2.0 * self.terms[t].coefficient * signs[t];
                signs[t] = -signs[t];
            }
            if k & 1023 == 0 {
                energy = self.energy_at(gray);
            }
            visit(gray, energy);
        }
    }

    /// Dense diagonal `⟨b|H|b⟩` for all `2^n` indices.
    pub fn diagonal(&self) -> Result<Vec<f64>> {
        if self.num_qubits > crate::qsim::MAX_STATE_QUBITS {
            return Err(Error::TooManyQubits {
                requested: self.num_qubits,
                limit: crate::qsim::MAX_STATE_QUBITS,
                hint: "the dense diagonal would not fit in memory",
            });
        }
        let mut diag = vec![0.0; 1usize << self.num_qubits];
        self.for_each_energy(|b, e| diag[b as usize] = e);
        Ok(diag)
    }
}

fn check_min_points(coreset: &WeightedCoreset, min: usize) -> Result<()> {
    if coreset.len() < min {
        return Err(Error::InvalidInput(format!(
            "need at least {min} coreset points, got {}",
            coreset.len()
        )));
    }
    Ok(())
}

/// Pairwise edge weights `w_i w_j x_i·x_j` for `i < j`.
fn edge_weights(coreset: &WeightedCoreset) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
    let x = coreset.vectors();
    let w = coreset.weights();
    let m = x.len();
    (0..m).flat_map(move |i| ((i + 1)..m).map(move |j| (i, j, w[i] * w[j] * dot(&x[i], &x[j]))))
}

/// 2-means as weighted MaxCut: `σ · ½ Σ_{i<j} w_i w_j x_i·x_j (Z_i Z_j − 1)`
/// with `σ` = [`TWO_MEANS_ORIENTATION`], one qubit per coreset point.
///
/// With `σ = −1` the energy of a bipartition equals the weighted cut sum
/// `Σ_{i∈S₀, j∈S₁} w_i w_j x_i·x_j`, which is minimized by the split with the
/// largest between-cluster scatter under the equal-cluster-weight
/// approximation.
pub fn build_2means(coreset: &WeightedCoreset) -> Result<DiagonalHamiltonian> {
    check_min_points(coreset, 2)?;
    let mut poly = ZPolynomial::new();
    for (i, j, g) in edge_weights(coreset) {
        let c = TWO_MEANS_ORIENTATION * 0.5 * g;
        poly.add(&[i, j], c);
        poly.add(&[], -c);
    }
    poly.into_hamiltonian(coreset.len())
}

/// Qubit holding label `y_i` of point `i` in the 3-means encoding.
pub fn y_qubit(i: usize) -> usize {
    2 * i
}

/// Qubit holding label `z_i` of point `i` in the 3-means encoding.
pub fn z_qubit(i: usize) -> usize {
    2 * i + 1
}

/// 3-means with equal cluster weights, two qubits per point.
///
/// For each pair `i < j` the bracket
/// `5 + Z_i' + Z_j' − Z_i Z_j − 3 Z_i' Z_j' − Z_i Z_i' Z_j − Z_i Z_j Z_j' − Z_i Z_i' Z_j Z_j'`
/// (unprimed = `y`, primed = `z`) equals 8 when the two points sit in
/// different sets and 0 otherwise. The pair contributes
/// `σ · (−⅛) · bracket · w_i w_j x_i·x_j` with `σ` = [`THREE_MEANS_ORIENTATION`].
pub fn build_3means(coreset: &WeightedCoreset) -> Result<DiagonalHamiltonian> {
    check_min_points(coreset, 2)?;
    let n = 2 * coreset.len();
    check_num_qubits(n)?;
    let mut poly = ZPolynomial::new();
    for (i, j, g) in edge_weights(coreset) {
        let (yi, zi, yj, zj) = (y_qubit(i), z_qubit(i), y_qubit(j), z_qubit(j));
        let c = THREE_MEANS_ORIENTATION * -0.125 * g;
        poly.add(&[], 5.0 * c)
            .add(&[zi], c)
            .add(&[zj], c)
            .add(&[yi, yj], -c)
            .add(&[zi, zj], -3.0 * c)
            .add(&[yi, zi, yj], -c)
            .add(&[yi, yj, zj], -c)
            .add(&[yi, zi, yj, zj], -c);
    }
    poly.into_hamiltonian(n)
}

/// Total scatter matrix `T = Σ_j w_j (x_j − μ)(x_j − μ)ᵀ` and the inverse of
/// its regularization `T + ε_T I`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterMatrix {
    pub matrix: DMatrix<f64>,
    pub regularization: f64,
    pub inverse: DMatrix<f64>,
    pub weighted_mean: DVector<f64>,
    pub total_weight: f64,
}

/// `ε_T = max(1e-6 · trace(T) / d, 1e-12)`.
pub fn default_regularization(scatter: &DMatrix<f64>) -> f64 {
    let d = scatter.nrows().max(1) as f64;
    (DEFAULT_RELATIVE_REGULARIZATION * scatter.trace() / d).max(MIN_REGULARIZATION)
}

/// Builds `T` for `coreset`; `regularization = None` uses [`default_regularization`].
pub fn total_scatter_matrix(
    coreset: &WeightedCoreset,
    regularization: Option<f64>,
) -> Result<ScatterMatrix> {
    let d = coreset.dim();
    let total_weight = coreset.total_weight();
    let mean = DVector::from_vec(coreset.weighted_mean());
    let mut t = DMatrix::<f64>::zeros(d, d);
    for (x, &w) in coreset.vectors().iter().zip(coreset.weights()) {
        let c = DVector::from_column_slice(x) - &mean;
        t += w * &c * c.transpose();
    }
    // exact symmetry despite accumulation order
    t = (&t + t.transpose()) * 0.5;
    let eps = match regularization {
        Some(e) if e < 0.0 || !e.is_finite() => {
            return Err(Error::InvalidInput(format!(
                "scatter regularization must be non-negative, got {e}"
            )))
        }
        Some(e) => e,
        None => default_regularization(&t),
    };
    let regularized = &t + DMatrix::identity(d, d) * eps;
    let eig = SymmetricEigen::new(regularized);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= MAX_SCATTER_CONDITION) {
        return Err(Error::SingularScatter { condition });
    }
    let inv_vals = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l));
    let inverse = &eig.eigenvectors * inv_vals * eig.eigenvectors.transpose();
    let inverse = (&inverse + inverse.transpose()) * 0.5;
    Ok(ScatterMatrix {
        matrix: t,
        regularization: eps,
        inverse,
        weighted_mean: mean,
        total_weight,
    })
}

/// Gram matrix `A_ij = x_iᵀ T⁻¹ x_j` of the coreset vectors.
pub fn mahalanobis_gram(coreset: &WeightedCoreset, scatter: &ScatterMatrix) -> DMatrix<f64> {
    let m = coreset.len();
    let x = DMatrix::from_fn(m, coreset.dim(), |i, k| coreset.vectors()[i][k]);
    &x * &scatter.inverse * x.transpose()
}

/// Two-component, equal-covariance Gaussian-mixture clustering.
///
/// With `Z_l = ±1` marking the side of point `l`, `D = Σ_l w_l Z_l` and
/// `A = X T⁻¹ Xᵀ`, the Hamiltonian is the negative of
///
/// ```text
/// Σ_i (1 − 2 Z_i D / W) w_i² A_ii + 2 Σ_{i<j} (Z_i Z_j − (Z_i + Z_j) D / W) w_i w_j A_ij
/// ```
///
/// expanded into Z-strings. `Z_i Z_i` collapses to the identity, so the
/// result holds only constant and quadratic terms and is invariant under a
/// global flip of all qubits.
pub fn build_gmm(coreset: &WeightedCoreset, regularization: Option<f64>) -> Result<DiagonalHamiltonian> {
    check_min_points(coreset, 2)?;
    let m = coreset.len();
    check_num_qubits(m)?;
    let scatter = total_scatter_matrix(coreset, regularization)?;
    let a = mahalanobis_gram(coreset, &scatter);
    let w = coreset.weights();
    let total = coreset.total_weight();

    // Accumulate −H, negate at the end.
    let mut neg = ZPolynomial::new();
    for i in 0..m {
        let g = w[i] * w[i] * a[(i, i)];
        neg.add(&[], g);
        for l in 0..m {
            neg.add(&[i, l], -2.0 * g * w[l] / total);
        }
    }
    for i in 0..m {
        for j in (i + 1)..m {
            let g = 2.0 * w[i] * w[j] * a[(i, j)];
            neg.add(&[i, j], g);
            for l in 0..m {
                neg.add(&[i, l], -g * w[l] / total);
                neg.add(&[j, l], -g * w[l] / total);
            }
        }
    }
    let mut h = ZPolynomial::new();
    for (mask, c) in neg.coefficients {
        h.add_mask(mask, -c);
    }
    h.into_hamiltonian(m)
}
