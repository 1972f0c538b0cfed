//! Independent oracles and instance generators shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use qcluster::coreset::WeightedCoreset;
use qcluster::hamiltonian::{THREE_MEANS_ORIENTATION, TWO_MEANS_ORIENTATION};
use rand::Rng;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Z_q = +1` when bit `q` of `b` is 0.
pub fn spin(b: u64, q: usize) -> f64 {
    if (b >> q) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Random weighted coreset with `m` points in `d` dimensions.
pub fn random_coreset(seed: u64, m: usize, d: usize) -> WeightedCoreset {
    let mut rng = qcluster::seeded_rng(seed);
    let vectors = (0..m)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let weights = (0..m).map(|_| rng.random_range(0.2..2.0)).collect();
    WeightedCoreset::new(vectors, weights, seed).unwrap()
}

/// Shifts the vectors so that their weighted mean is zero.
pub fn weighted_centered(c: &WeightedCoreset) -> WeightedCoreset {
    let total: f64 = c.weights().iter().sum();
    let d = c.dim();
    let mut mu = vec![0.0; d];
    for (x, w) in c.vectors().iter().zip(c.weights()) {
        for k in 0..d {
            mu[k] += w * x[k] / total;
        }
    }
    let vectors = c
        .vectors()
        .iter()
        .map(|x| x.iter().zip(&mu).map(|(a, b)| a - b).collect())
        .collect();
    WeightedCoreset::new(vectors, c.weights().to_vec(), c.seed()).unwrap()
}

/// `σ₂ · ½ Σ_{i<j} w_i w_j x_i·x_j (Z_i Z_j − 1)` at one basis state.
pub fn two_means_energy(c: &WeightedCoreset, b: u64) -> f64 {
    let (x, w) = (c.vectors(), c.weights());
    let mut e = 0.0;
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            e += 0.5 * w[i] * w[j] * dot(&x[i], &x[j]) * (spin(b, i) * spin(b, j) - 1.0);
        }
    }
    TWO_MEANS_ORIENTATION * e
}

/// `σ₃ · (−⅛) Σ_{i<j} bracket · w_i w_j x_i·x_j` with `y_i` on qubit `2i`
/// and `z_i` on qubit `2i+1`.
pub fn three_means_energy(c: &WeightedCoreset, b: u64) -> f64 {
    let (x, w) = (c.vectors(), c.weights());
    let mut e = 0.0;
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let (yi, zi, yj, zj) = (spin(b, 2 * i), spin(b, 2 * i + 1), spin(b, 2 * j), spin(b, 2 * j + 1));
            let bracket = 5.0 + zi + zj - yi * yj - 3.0 * zi * zj - yi * zi * yj - yi * yj * zj - yi * zi * yj * zj;
            e += -0.125 * bracket * w[i] * w[j] * dot(&x[i], &x[j]);
        }
    }
    THREE_MEANS_ORIENTATION * e
}

/// Regularized total scatter matrix inverse by direct inversion.
pub fn scatter_inverse(c: &WeightedCoreset, eps: f64) -> DMatrix<f64> {
    let d = c.dim();
    let total: f64 = c.weights().iter().sum();
    let mut mu = DVector::zeros(d);
    for (x, w) in c.vectors().iter().zip(c.weights()) {
        mu += DVector::from_column_slice(x) * (*w / total);
    }
    let mut t = DMatrix::zeros(d, d);
    for (x, w) in c.vectors().iter().zip(c.weights()) {
        let v = DVector::from_column_slice(x) - &mu;
        t += &v * v.transpose() * *w;
    }
    (t + DMatrix::identity(d, d) * eps).cholesky().unwrap().inverse()
}

/// Negated right-hand side of the Pauli approximation of the GMM separation.
pub fn gmm_energy(c: &WeightedCoreset, tinv: &DMatrix<f64>, b: u64) -> f64 {
    let (x, w) = (c.vectors(), c.weights());
    let m = x.len();
    let total: f64 = w.iter().sum();
    let a = |i: usize, j: usize| {
        (DVector::from_column_slice(&x[i]).transpose() * tinv * DVector::from_column_slice(&x[j]))[(0, 0)]
    };
    let s: f64 = (0..m).map(|l| w[l] * spin(b, l)).sum();
    let mut rhs = 0.0;
    for i in 0..m {
        rhs += (1.0 - 2.0 * spin(b, i) * s / total) * w[i] * w[i] * a(i, i);
    }
    for i in 0..m {
        for j in (i + 1)..m {
            rhs += 2.0 * (spin(b, i) * spin(b, j) - (spin(b, i) + spin(b, j)) * s / total) * w[i] * w[j] * a(i, j);
        }
    }
    -rhs
}

pub fn labels_of(b: u64, m: usize) -> Vec<usize> {
    (0..m).map(|i| ((b >> i) & 1) as usize).collect()
}

/// Weighted 2-means cost `Σ_k Σ_{S_k} w ‖x − μ_k‖²` with weighted centroids.
pub fn two_means_cost(c: &WeightedCoreset, labels: &[usize]) -> f64 {
    let (x, w) = (c.vectors(), c.weights());
    let d = c.dim();
    let mut cost = 0.0;
    for k in 0..2 {
        let idx: Vec<usize> = (0..x.len()).filter(|&i| labels[i] == k).collect();
        let wk: f64 = idx.iter().map(|&i| w[i]).sum();
        if idx.is_empty() {
            continue;
        }
        let mu: Vec<f64> = (0..d).map(|t| idx.iter().map(|&i| w[i] * x[i][t]).sum::<f64>() / wk).collect();
        cost += idx
            .iter()
            .map(|&i| w[i] * x[i].iter().zip(&mu).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
            .sum::<f64>();
    }
    cost
}

/// Exhaustive minimum of the weighted 2-means cost.
pub fn two_means_exact_min(c: &WeightedCoreset) -> f64 {
    let m = c.len();
    (0..1u64 << m)
        .map(|b| two_means_cost(c, &labels_of(b, m)))
        .fold(f64::INFINITY, f64::min)
}

/// Dense-matrix simulation of the layered Ry/Rz + CNOT-ladder ansatz, built
/// from Kronecker products. Qubit 0 is the least significant index bit.
pub fn dense_ansatz_state(n: usize, layers: usize, theta: &[f64]) -> Vec<num_complex::Complex64> {
    use num_complex::Complex64 as C;
    let dim = 1usize << n;
    let one_qubit = |q: usize, g: [[C; 2]; 2]| -> DMatrix<C> {
        let mut op = DMatrix::<C>::identity(1, 1);
        for k in (0..n).rev() {
            let f = if k == q {
                DMatrix::from_row_slice(2, 2, &[g[0][0], g[0][1], g[1][0], g[1][1]])
            } else {
                DMatrix::<C>::identity(2, 2)
            };
            op = op.kronecker(&f);
        }
        op
    };
    let ry = |t: f64| {
        let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
        [[C::new(c, 0.0), C::new(-s, 0.0)], [C::new(s, 0.0), C::new(c, 0.0)]]
    };
    let rz = |t: f64| {
        [
            [C::from_polar(1.0, -t / 2.0), C::new(0.0, 0.0)],
            [C::new(0.0, 0.0), C::from_polar(1.0, t / 2.0)],
        ]
    };
    let cnot = |ctl: usize, tgt: usize| {
        let mut op = DMatrix::<C>::zeros(dim, dim);
        for b in 0..dim {
            let out = if (b >> ctl) & 1 == 1 { b ^ (1 << tgt) } else { b };
            op[(out, b)] = C::new(1.0, 0.0);
        }
        op
    };
    let mut psi = DVector::<C>::zeros(dim);
    psi[0] = C::new(1.0, 0.0);
    let stride = 2 * (layers + 1);
    for block in 0..=layers {
        for q in 0..n {
            psi = one_qubit(q, ry(theta[q * stride + 2 * block])) * psi;
            psi = one_qubit(q, rz(theta[q * stride + 2 * block + 1])) * psi;
        }
        if block < layers {
            for q in 0..n.saturating_sub(1) {
                psi = cnot(q, q + 1) * psi;
            }
        }
    }
    psi.iter().copied().collect()
}

/// Three-blob dataset in the plane, feature-normalized.
pub fn blob_points(seed: u64, per_blob: usize) -> Vec<Vec<f64>> {
    use qcluster::data::{generate_blobs, BlobComponent, BlobSpec};
    let spec = BlobSpec {
        components: vec![
            BlobComponent::isotropic(vec![-3.0, 0.0], 0.6, per_blob),
            BlobComponent::isotropic(vec![2.0, 2.5], 0.4, per_blob),
            BlobComponent::isotropic(vec![1.5, -2.0], 0.8, per_blob),
        ],
        seed,
    };
    generate_blobs(&spec).unwrap().normalized().points().to_vec()
}

/// `Σ_x min_q ‖x − q‖²` with unit weights.
pub fn full_cost(points: &[Vec<f64>], centers: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .map(|x| {
            centers
                .iter()
                .map(|q| x.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}
