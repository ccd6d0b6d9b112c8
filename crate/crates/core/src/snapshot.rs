//! JSON model snapshots.
//!
//! ```json
//! {
//!   "dim": 2, "k": 2, "alpha": 0.6, "beta": 0.07,
//!   "distance_mode": "euclidean",
//!   "centroids": [x00, x01, x10, x11],
//!   "counts": [n0, n1],
//!   "weights": [w0, w1],
//!   "overall_mean": 0.01
//! }
//! ```
//!
//! `centroids` is row-major. Reals are written in shortest round-trip form so
//! a load reproduces the saved model bit for bit.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::distance::DistanceMode;
use crate::error::{Error, Result};
use crate::model::{ClusterModel, Hyperparams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSnapshot {
    pub dim: usize,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub distance_mode: DistanceMode,
    pub centroids: Vec<f64>,
    pub counts: Vec<u64>,
    pub weights: Vec<f64>,
    /// Training mean of the last coordinate, used by `mean_merge`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overall_mean: Option<f64>,
}

impl ModelSnapshot {
    pub fn capture(model: &ClusterModel, hp: &Hyperparams, overall_mean: Option<f64>) -> Self {
        Self {
            dim: model.dim(),
            k: model.k(),
            alpha: hp.alpha,
            beta: hp.beta,
            distance_mode: model.distance_mode(),
            centroids: model.centroids_flat().to_vec(),
            counts: model.counts().to_vec(),
            weights: model.balance_weights().to_vec(),
            overall_mean,
        }
    }

    pub fn hyperparams(&self) -> Result<Hyperparams> {
        Ok(Hyperparams::new(self.k, self.alpha, self.beta)?.with_distance(self.distance_mode))
    }

    pub fn to_model(&self) -> Result<ClusterModel> {
        if self.counts.len() != self.k {
            return Err(Error::Malformed(format!(
                "snapshot k = {} but {} counts",
                self.k,
                self.counts.len()
            )));
        }
        ClusterModel::from_parts(
            self.dim,
            self.distance_mode,
            self.centroids.clone(),
            self.counts.clone(),
            self.weights.clone(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn read<R: Read>(r: R) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }
}
