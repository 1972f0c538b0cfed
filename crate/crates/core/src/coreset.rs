//! Sensitivity-sampled k-means coresets.
//!
//! A bicriterion seed solution `B` is found by repeated D² sampling
//! ([`kmeanspp_centroids`]). Each point then gets the sampling probability
//!
//! ```text
//! Pr(x) = D(x, B) / (2 Σ_i D(x_i, B)) + 1 / (2 |B| ω(b_x))
//! ```
//!
//! where `D` is the squared distance to the nearest centroid `b_x` and `ω(b)`
//! counts the points whose nearest centroid is `b`. Drawing `m` points i.i.d.
//! from `Pr` and weighting each draw by `1 / (m Pr(x))` gives an unbiased
//! estimator of any additive cost.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{check_rectangular, normalize_features};
use crate::{seeded_rng, sq_dist, Error, Result};

/// Number of bicriterion centroids used to seed the probabilities (`β k` with `β = 2`, `k = 2`).
pub const DEFAULT_NUM_CENTROIDS: usize = 4;
/// Number of independent D²-sampling runs in [`kmeanspp_centroids`].
pub const DEFAULT_KMEANSPP_ITERATIONS: usize = 10;

/// A weighted point set `(X', w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoresetRecord", into = "CoresetRecord")]
pub struct WeightedCoreset {
    vectors: Vec<Vec<f64>>,
    weights: Vec<f64>,
    seed: u64,
    source: String,
}

/// Wire form of [`WeightedCoreset`].
#[derive(Serialize, Deserialize)]
struct CoresetRecord {
    vectors: Vec<Vec<f64>>,
    weights: Vec<f64>,
    seed: u64,
    source: String,
}

impl TryFrom<CoresetRecord> for WeightedCoreset {
    type Error = Error;

    fn try_from(r: CoresetRecord) -> Result<Self> {
        WeightedCoreset::with_source(r.vectors, r.weights, r.seed, r.source)
    }
}

impl From<WeightedCoreset> for CoresetRecord {
    fn from(c: WeightedCoreset) -> Self {
        CoresetRecord {
            vectors: c.vectors,
            weights: c.weights,
            seed: c.seed,
            source: c.source,
        }
    }
}

impl WeightedCoreset {
    pub fn new(vectors: Vec<Vec<f64>>, weights: Vec<f64>, seed: u64) -> Result<Self> {
        Self::with_source(vectors, weights, seed, String::new())
    }

    pub fn with_source(
        vectors: Vec<Vec<f64>>,
        weights: Vec<f64>,
        seed: u64,
        source: impl Into<String>,
    ) -> Result<Self> {
        check_rectangular(&vectors)?;
        if weights.len() != vectors.len() {
            return Err(Error::DimensionMismatch {
                expected: vectors.len(),
                actual: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "coreset weights must be positive and finite, got {w}"
            )));
        }
        Ok(Self {
            vectors,
            weights,
            seed,
            source: source.into(),
        })
    }

    /// Every point with weight one.
    pub fn unweighted(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let weights = vec![1.0; vectors.len()];
        Self::new(vectors, weights, 0)
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weighted mean of the vectors.
    pub fn weighted_mean(&self) -> Vec<f64> {
        weighted_mean(&self.vectors, &self.weights, (0..self.len()).collect::<Vec<_>>().as_slice())
            .expect("coreset is non-empty")
    }

    /// Sub-coreset on the given indices, in the given order.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("cannot restrict a coreset to no points".into()));
        }
        let vectors = indices.iter().map(|&i| self.vectors[i].clone()).collect();
        let weights = indices.iter().map(|&i| self.weights[i]).collect();
        Self::with_source(vectors, weights, self.seed, self.source.clone())
    }

    /// `Σ_j w_j min_c ‖x_j − c‖²`, the weighted k-means cost of `centers`.
    pub fn cost(&self, centers: &[Vec<f64>]) -> f64 {
        self.vectors
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * min_sq_dist(x, centers).0)
            .sum()
    }
}

/// Weighted mean of `vectors[idx]` for `idx` in `members`, or `None` when empty.
pub(crate) fn weighted_mean(vectors: &[Vec<f64>], weights: &[f64], members: &[usize]) -> Option<Vec<f64>> {
    let total: f64 = members.iter().map(|&j| weights[j]).sum();
    if members.is_empty() || total <= 0.0 {
        return None;
    }
    let d = vectors[members[0]].len();
    let mut mean = vec![0.0; d];
    for &j in members {
        for (m, x) in mean.iter_mut().zip(&vectors[j]) {
            *m += weights[j] * x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= total);
    Some(mean)
}

/// Squared distance to the nearest center and that center's index (lowest index on ties).
pub(crate) fn min_sq_dist(x: &[f64], centers: &[Vec<f64>]) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for (i, c) in centers.iter().enumerate() {
        let d = sq_dist(x, c);
        if d < best.0 {
            best = (d, i);
        }
    }
    best
}

/// Bicriterion seed centroids `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidSet {
    pub centroids: Vec<Vec<f64>>,
    /// `Σ_x min_b ‖x − b‖²` over the dataset the centroids were picked from.
    pub cost: f64,
}

/// Runs D² sampling `iterations` times from one RNG stream and keeps the
/// lowest-cost centroid set.
///
/// The points are expected to be feature-normalized already.
pub fn kmeanspp_centroids(
    points: &[Vec<f64>],
    num_centroids: usize,
    iterations: usize,
    seed: u64,
) -> Result<CentroidSet> {
    check_rectangular(points)?;
    if num_centroids == 0 || num_centroids > points.len() {
        return Err(Error::InvalidInput(format!(
            "cannot pick {num_centroids} centroids from {} points",
            points.len()
        )));
    }
    if iterations == 0 {
        return Err(Error::InvalidInput("kmeans++ needs at least one iteration".into()));
    }
    let mut rng = seeded_rng(seed);
    let mut best: Option<CentroidSet> = None;
    for _ in 0..iterations {
        let centroids = d2_sample(points, num_centroids, &mut rng);
        let cost = points.iter().map(|x| min_sq_dist(x, &centroids).0).sum();
        if best.as_ref().map_or(true, |b| cost < b.cost) {
            best = Some(CentroidSet { centroids, cost });
        }
    }
    Ok(best.expect("iterations >= 1"))
}

/// One k-means++ seeding pass: first center uniform, then each next center
/// drawn with probability proportional to its squared distance from the
/// centers chosen so far.
pub(crate) fn d2_sample(points: &[Vec<f64>], k: usize, rng: &mut crate::Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut dist: Vec<f64> = points.iter().map(|x| sq_dist(x, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, d) in dist.iter().enumerate() {
                if *d > 0.0 && target < *d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            // guard against rounding pushing the draw past the last positive entry
            if dist[pick] == 0.0 {
                pick = dist.iter().rposition(|d| *d > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = points[next].clone();
        for (d, x) in dist.iter_mut().zip(points) {
            *d = d.min(sq_dist(x, &c));
        }
        centers.push(c);
    }
    centers
}

/// Sensitivity-sampling probabilities for every point.
///
/// Both the distance term and its normalizer use squared distances, so each
/// half contributes ½ of the mass before the final renormalization.
pub fn coreset_probabilities(points: &[Vec<f64>], centroids: &CentroidSet) -> Result<Vec<f64>> {
    check_rectangular(points)?;
    let b = &centroids.centroids;
    if b.is_empty() {
        return Err(Error::InvalidInput("centroid set is empty".into()));
    }
    let nearest: Vec<(f64, usize)> = points.iter().map(|x| min_sq_dist(x, b)).collect();
    let mut omega = vec![0usize; b.len()];
    for &(_, c) in &nearest {
        omega[c] += 1;
    }
    let sum_dist: f64 = nearest.iter().map(|(d, _)| d).sum();
    let num_b = b.len() as f64;
    let mut pr: Vec<f64> = nearest
        .iter()
        .map(|&(d, c)| {
            let spread = if sum_dist > 0.0 { d / (2.0 * sum_dist) } else { 0.0 };
            spread + 1.0 / (2.0 * num_b * omega[c] as f64)
        })
        .collect();
    let total: f64 = pr.iter().sum();
    pr.iter_mut().for_each(|p| *p /= total);
    Ok(pr)
}

/// Draws `m` points i.i.d. (with replacement) by sensitivity probability and
/// weights each draw `1 / (m Pr)`.
pub fn build_coreset(
    points: &[Vec<f64>],
    centroids: &CentroidSet,
    m: usize,
    seed: u64,
) -> Result<WeightedCoreset> {
    let pr = coreset_probabilities(points, centroids)?;
    sample_coreset(points, &pr, m, seed)
}

/// Importance-samples `m` points from precomputed probabilities.
pub fn sample_coreset(points: &[Vec<f64>], pr: &[f64], m: usize, seed: u64) -> Result<WeightedCoreset> {
    if m == 0 {
        return Err(Error::InvalidInput("coreset size must be at least 1".into()));
    }
    if pr.len() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            actual: pr.len(),
        });
    }
    let dist = WeightedIndex::new(pr)
        .map_err(|e| Error::InvalidInput(format!("invalid sampling probabilities: {e}")))?;
    let mut rng = seeded_rng(seed);
    let mut vectors = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for _ in 0..m {
        let i = dist.sample(&mut rng);
        vectors.push(points[i].clone());
        weights.push(1.0 / (m as f64 * pr[i]));
    }
    WeightedCoreset::with_source(vectors, weights, seed, "sensitivity-sampling")
}

/// Feature-normalizes the vectors and divides the weights by their maximum.
pub fn normalize_coreset(coreset: &WeightedCoreset) -> WeightedCoreset {
    let vectors = normalize_features(&coreset.vectors).expect("coreset is non-empty");
    let max_w = coreset.weights.iter().copied().fold(0.0_f64, f64::max);
    let weights = coreset.weights.iter().map(|w| w / max_w).collect();
    WeightedCoreset {
        vectors,
        weights,
        seed: coreset.seed,
        source: coreset.source.clone(),
    }
}
