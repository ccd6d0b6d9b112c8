//! Online balanced k-means.
//!
//! Each streamed point goes through the same cycle: it is assigned to the
//! cluster minimizing `d(x, mu_j) - w_j`, the winning centroid moves toward it
//! by the learning rate, and all balance weights are recomputed from the
//! cluster counts as `w_j = beta * (n_j - E[n]) / V[n]`.

use serde::{Deserialize, Serialize};

use crate::distance::DistanceMode;
use crate::error::{Error, Result};

/// Below this count variance every balance weight is zero.
pub const VARIANCE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Number of clusters.
    pub k: usize,
    /// Learning rate in `(0, 1]`.
    pub alpha: f64,
    /// Balancing scale.
    pub beta: f64,
    #[serde(default)]
    pub distance_mode: DistanceMode,
}

impl Hyperparams {
    pub fn new(k: usize, alpha: f64, beta: f64) -> Result<Self> {
        let hp = Self {
            k,
            alpha,
            beta,
            distance_mode: DistanceMode::Euclidean,
        };
        hp.validate()?;
        Ok(hp)
    }

    pub fn with_distance(mut self, mode: DistanceMode) -> Self {
        self.distance_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidHyperparams("k must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidHyperparams(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !self.beta.is_finite() {
            return Err(Error::InvalidHyperparams("beta must be finite".into()));
        }
        Ok(())
    }
}

impl Default for Hyperparams {
    /// k = 300, alpha = 0.6, beta = 0.07.
    fn default() -> Self {
        Self {
            k: 300,
            alpha: 0.6,
            beta: 0.07,
            distance_mode: DistanceMode::Euclidean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    pub cluster_index: usize,
    /// `raw_distance - w[cluster_index]`.
    pub penalized_distance: f64,
    pub raw_distance: f64,
}

/// Full state of the online algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    dim: usize,
    distance_mode: DistanceMode,
    /// Row-major, `k * dim`.
    centroids: Vec<f64>,
    counts: Vec<u64>,
    balance_weights: Vec<f64>,
    mean_count: f64,
    var_count: f64,
}

impl ClusterModel {
    /// Seeds centroid `i` with `seeds[i]`, each with a count of one.
    pub fn init<R: AsRef<[f64]>>(hp: &Hyperparams, seeds: &[R]) -> Result<Self> {
        hp.validate()?;
        if seeds.len() < hp.k {
            return Err(Error::NotEnoughSeeds {
                need: hp.k,
                got: seeds.len(),
            });
        }
        let dim = seeds[0].as_ref().len();
        if dim < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: dim,
            });
        }
        let mut centroids = Vec::with_capacity(hp.k * dim);
        for s in &seeds[..hp.k] {
            let s = s.as_ref();
            if s.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.len(),
                });
            }
            centroids.extend_from_slice(s);
        }
        Ok(Self {
            dim,
            distance_mode: hp.distance_mode,
            centroids,
            counts: vec![1; hp.k],
            balance_weights: vec![0.0; hp.k],
            mean_count: 1.0,
            var_count: 0.0,
        })
    }

    /// Rebuilds a model from stored parts, recomputing the count statistics.
    /// Balance weights are taken as given.
    pub fn from_parts(
        dim: usize,
        distance_mode: DistanceMode,
        centroids: Vec<f64>,
        counts: Vec<u64>,
        balance_weights: Vec<f64>,
    ) -> Result<Self> {
        let k = counts.len();
        if k == 0 {
            return Err(Error::Empty("model"));
        }
        if dim < 2 {
            return Err(Error::Malformed(format!("model dimension {dim} < 2")));
        }
        if centroids.len() != k * dim {
            return Err(Error::Malformed(format!(
                "{} centroid values for k = {k}, dim = {dim}",
                centroids.len()
            )));
        }
        if balance_weights.len() != k {
            return Err(Error::Malformed(format!(
                "{} balance weights for k = {k}",
                balance_weights.len()
            )));
        }
        let (mean_count, var_count) = count_stats(&counts);
        Ok(Self {
            dim,
            distance_mode,
            centroids,
            counts,
            balance_weights,
            mean_count,
            var_count,
        })
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.counts.len()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn distance_mode(&self) -> DistanceMode {
        self.distance_mode
    }

    #[inline]
    pub fn centroid(&self, i: usize) -> &[f64] {
        &self.centroids[i * self.dim..(i + 1) * self.dim]
    }

    pub fn centroids(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.centroids.chunks_exact(self.dim)
    }

    /// Row-major centroid storage.
    pub fn centroids_flat(&self) -> &[f64] {
        &self.centroids
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn balance_weights(&self) -> &[f64] {
        &self.balance_weights
    }

    pub fn mean_count(&self) -> f64 {
        self.mean_count
    }

    pub fn var_count(&self) -> f64 {
        self.var_count
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Picks the cluster minimizing `d(x, mu_j) - w_j`, lowest index on ties.
    pub fn assign(&self, x: &[f64]) -> Result<Assignment> {
        self.check_dim(x)?;
        let mut best = Assignment {
            cluster_index: 0,
            penalized_distance: f64::INFINITY,
            raw_distance: f64::INFINITY,
        };
        for (j, c) in self.centroids().enumerate() {
            let raw = self.distance_mode.eval(x, c);
            let penalized = raw - self.balance_weights[j];
            if penalized < best.penalized_distance {
                best = Assignment {
                    cluster_index: j,
                    penalized_distance: penalized,
                    raw_distance: raw,
                };
            }
        }
        Ok(best)
    }

    /// `mu_i <- alpha * x + (1 - alpha) * mu_i` and `n_i <- n_i + 1`.
    pub fn update_centroid(&mut self, i: usize, x: &[f64], alpha: f64) -> Result<()> {
        self.check_dim(x)?;
        if i >= self.k() {
            return Err(Error::IndexOutOfRange {
                index: i,
                k: self.k(),
            });
        }
        let dim = self.dim;
        for (m, &xv) in self.centroids[i * dim..(i + 1) * dim].iter_mut().zip(x) {
            *m = alpha * xv + (1.0 - alpha) * *m;
        }
        self.counts[i] += 1;
        Ok(())
    }

    /// Recomputes `E[n]`, `V[n]` (population variance) and every `w_i`.
    pub fn update_balance_weights(&mut self, beta: f64) {
        let (mean, var) = count_stats(&self.counts);
        self.mean_count = mean;
        self.var_count = var;
        if var < VARIANCE_EPSILON {
            self.balance_weights.iter_mut().for_each(|w| *w = 0.0);
            return;
        }
        for (w, &n) in self.balance_weights.iter_mut().zip(&self.counts) {
            *w = beta * (n as f64 - mean) / var;
        }
    }

    /// One full assign / move / reweight cycle.
    pub fn step(&mut self, x: &[f64], hp: &Hyperparams) -> Result<Assignment> {
        let a = self.assign(x)?;
        self.update_centroid(a.cluster_index, x, hp.alpha)?;
        self.update_balance_weights(hp.beta);
        Ok(a)
    }

    /// Unpenalized distance from `x` to its nearest centroid.
    pub fn point_loss(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self
            .centroids()
            .map(|c| self.distance_mode.eval(x, c))
            .fold(f64::INFINITY, f64::min))
    }
}

/// Mean and population variance of the cluster counts.
pub fn count_stats(counts: &[u64]) -> (f64, f64) {
    if counts.is_empty() {
        return (0.0, 0.0);
    }
    let k = counts.len() as f64;
    let mean = counts.iter().map(|&n| n as f64).sum::<f64>() / k;
    let var = counts
        .iter()
        .map(|&n| {
            let d = n as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / k;
    (mean, var)
}
