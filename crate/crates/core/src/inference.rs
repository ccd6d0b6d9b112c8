//! Seven estimators of a query's missing last coordinate from a trained
//! model. Every distance here is projected: the query's known coordinates
//! against the first `d - 1` coordinates of each centroid, under the model's
//! distance mode.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ClusterModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Euclid,
    NormWeights,
    ClusterSize,
    MeanMerge,
    NwcsMerge,
    NwedMerge,
    CsExp,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Euclid,
        Method::NormWeights,
        Method::ClusterSize,
        Method::MeanMerge,
        Method::NwcsMerge,
        Method::NwedMerge,
        Method::CsExp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Euclid => "euclid",
            Method::NormWeights => "norm_weights",
            Method::ClusterSize => "cluster_size",
            Method::MeanMerge => "mean_merge",
            Method::NwcsMerge => "nwcs_merge",
            Method::NwedMerge => "nwed_merge",
            Method::CsExp => "cs_exp",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidInferenceParams(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceParams {
    /// Softmax sharpness for `norm_weights`; weights go as `exp(-temperature * d)`.
    pub temperature: f64,
    /// Nearest clusters used by `cluster_size` and `cs_exp`.
    pub neighbor_count: usize,
    /// Mixing coefficient of the three merged methods.
    pub merge_alpha: f64,
    /// Scale inside `cs_exp`'s exponent.
    pub cs_beta: f64,
    /// Divide `cs_exp` weights by their sum.
    pub normalize_cs_exp: bool,
}

impl Default for InferenceParams {
    fn default() -> Self {
        Self {
            temperature: 1.0,
            neighbor_count: 5,
            merge_alpha: 0.5,
            cs_beta: 1.0,
            normalize_cs_exp: true,
        }
    }
}

impl InferenceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::InvalidInferenceParams(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if self.neighbor_count == 0 {
            return Err(Error::InvalidInferenceParams(
                "neighbor count must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.merge_alpha) {
            return Err(Error::InvalidInferenceParams(format!(
                "merge alpha must lie in [0, 1], got {}",
                self.merge_alpha
            )));
        }
        if !self.cs_beta.is_finite() {
            return Err(Error::InvalidInferenceParams(
                "cs_beta must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Also rejects a neighbor count larger than the model's `k`.
    pub fn validate_for(&self, k: usize) -> Result<()> {
        self.validate()?;
        if self.neighbor_count > k {
            return Err(Error::InsufficientClusters {
                needed: self.neighbor_count,
                k,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub method: Method,
    pub value: f64,
}

/// Nearest clusters by projected distance, closest first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet {
    pub indices: Vec<usize>,
    pub distances: Vec<f64>,
    pub sizes: Vec<u64>,
}

/// Read-only view pairing a model with a validated query. Projected
/// distances are computed once on construction.
pub struct Inferencer<'a> {
    model: &'a ClusterModel,
    dist: Vec<f64>,
}

impl<'a> Inferencer<'a> {
    pub fn new(model: &'a ClusterModel, known: &[f64]) -> Result<Self> {
        if known.len() + 1 != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim() - 1,
                got: known.len(),
            });
        }
        let mode = model.distance_mode();
        let dist = model
            .centroids()
            .map(|c| mode.eval(known, &c[..c.len() - 1]))
            .collect();
        Ok(Self { model, dist })
    }

    fn last(&self, i: usize) -> f64 {
        self.model.centroid(i)[self.model.dim() - 1]
    }

    pub fn projected_distances(&self) -> &[f64] {
        &self.dist
    }

    pub fn neighbors(&self, count: usize) -> Result<NeighborSet> {
        let k = self.model.k();
        if count > k {
            return Err(Error::InsufficientClusters { needed: count, k });
        }
        let dist = &self.dist;
        // (distance, index) is a total order, so ties go to the lower index
        let by_rank = |a: &usize, b: &usize| dist[*a].total_cmp(&dist[*b]).then(a.cmp(b));
        let mut order: Vec<usize> = (0..k).collect();
        if count < k && count > 0 {
            order.select_nth_unstable_by(count - 1, by_rank);
        }
        order.truncate(count);
        order.sort_unstable_by(by_rank);
        Ok(NeighborSet {
            distances: order.iter().map(|&i| dist[i]).collect(),
            sizes: order.iter().map(|&i| self.model.counts()[i]).collect(),
            indices: order,
        })
    }

    pub fn euclid(&self) -> f64 {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &d) in self.dist.iter().enumerate() {
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        self.last(best)
    }

    /// Softmax of `-temperature * d_j` over every centroid.
    pub fn softmax_weights(&self, temperature: f64) -> Vec<f64> {
        let logits: Vec<f64> = self.dist.iter().map(|d| -temperature * d).collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / z).collect()
    }

    pub fn norm_weights(&self, p: &InferenceParams) -> f64 {
        self.softmax_weights(p.temperature)
            .iter()
            .enumerate()
            .map(|(i, w)| w * self.last(i))
            .sum()
    }

    /// `t_j / sum(t)` over the nearest `neighbor_count` clusters.
    pub fn cluster_size_weights(&self, p: &InferenceParams) -> Result<(NeighborSet, Vec<f64>)> {
        let nb = self.neighbors(p.neighbor_count)?;
        let total: f64 = nb.sizes.iter().map(|&t| t as f64).sum();
        let weights = nb.sizes.iter().map(|&t| t as f64 / total).collect();
        Ok((nb, weights))
    }

    pub fn cluster_size(&self, p: &InferenceParams) -> Result<f64> {
        let (nb, w) = self.cluster_size_weights(p)?;
        Ok(self.dot(&nb, &w))
    }

    /// `exp(-cs_beta * t_i / sum(t))`, optionally normalized to sum to one.
    pub fn cs_exp_weights(&self, p: &InferenceParams) -> Result<(NeighborSet, Vec<f64>)> {
        let nb = self.neighbors(p.neighbor_count)?;
        let total: f64 = nb.sizes.iter().map(|&t| t as f64).sum();
        let mut weights: Vec<f64> = nb
            .sizes
            .iter()
            .map(|&t| (-p.cs_beta * t as f64 / total).exp())
            .collect();
        if p.normalize_cs_exp {
            let z: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= z);
        }
        Ok((nb, weights))
    }

    pub fn cs_exp(&self, p: &InferenceParams) -> Result<f64> {
        let (nb, w) = self.cs_exp_weights(p)?;
        Ok(self.dot(&nb, &w))
    }

    fn dot(&self, nb: &NeighborSet, weights: &[f64]) -> f64 {
        nb.indices
            .iter()
            .zip(weights)
            .map(|(&i, w)| w * self.last(i))
            .sum()
    }
}

#[inline]
fn merge(alpha: f64, a: f64, b: f64) -> f64 {
    alpha * a + (1.0 - alpha) * b
}

pub fn infer_euclid(model: &ClusterModel, known: &[f64]) -> Result<Estimate> {
    Ok(Estimate {
        method: Method::Euclid,
        value: Inferencer::new(model, known)?.euclid(),
    })
}

pub fn infer_norm_weights(
    model: &ClusterModel,
    known: &[f64],
    p: &InferenceParams,
) -> Result<Estimate> {
    p.validate()?;
    Ok(Estimate {
        method: Method::NormWeights,
        value: Inferencer::new(model, known)?.norm_weights(p),
    })
}

pub fn infer_cluster_size(
    model: &ClusterModel,
    known: &[f64],
    p: &InferenceParams,
) -> Result<Estimate> {
    p.validate()?;
    Ok(Estimate {
        method: Method::ClusterSize,
        value: Inferencer::new(model, known)?.cluster_size(p)?,
    })
}

/// `merge_alpha * overall_mean + (1 - merge_alpha) * norm_weights`.
pub fn infer_mean_merge(
    model: &ClusterModel,
    known: &[f64],
    p: &InferenceParams,
    overall_mean: f64,
) -> Result<Estimate> {
    let nw = infer_norm_weights(model, known, p)?.value;
    Ok(Estimate {
        method: Method::MeanMerge,
        value: merge(p.merge_alpha, overall_mean, nw),
    })
}

/// `merge_alpha * norm_weights + (1 - merge_alpha) * cluster_size`.
pub fn infer_nwcs_merge(
    model: &ClusterModel,
    known: &[f64],
    p: &InferenceParams,
) -> Result<Estimate> {
    let nw = infer_norm_weights(model, known, p)?.value;
    let cs = infer_cluster_size(model, known, p)?.value;
    Ok(Estimate {
        method: Method::NwcsMerge,
        value: merge(p.merge_alpha, nw, cs),
    })
}

/// `merge_alpha * norm_weights + (1 - merge_alpha) * euclid`.
pub fn infer_nwed_merge(
    model: &ClusterModel,
    known: &[f64],
    p: &InferenceParams,
) -> Result<Estimate> {
    let nw = infer_norm_weights(model, known, p)?.value;
    let eu = infer_euclid(model, known)?.value;
    Ok(Estimate {
        method: Method::NwedMerge,
        value: merge(p.merge_alpha, nw, eu),
    })
}

pub fn infer_cs_exp(model: &ClusterModel, known: &[f64], p: &InferenceParams) -> Result<Estimate> {
    p.validate()?;
    Ok(Estimate {
        method: Method::CsExp,
        value: Inferencer::new(model, known)?.cs_exp(p)?,
    })
}

pub fn infer(
    model: &ClusterModel,
    known: &[f64],
    method: Method,
    p: &InferenceParams,
    overall_mean: f64,
) -> Result<Estimate> {
    match method {
        Method::Euclid => infer_euclid(model, known),
        Method::NormWeights => infer_norm_weights(model, known, p),
        Method::ClusterSize => infer_cluster_size(model, known, p),
        Method::MeanMerge => infer_mean_merge(model, known, p, overall_mean),
        Method::NwcsMerge => infer_nwcs_merge(model, known, p),
        Method::NwedMerge => infer_nwed_merge(model, known, p),
        Method::CsExp => infer_cs_exp(model, known, p),
    }
}

/// All seven estimates in [`Method::ALL`] order. Shared terms are computed once.
pub fn infer_all(
    model: &ClusterModel,
    known: &[f64],
    p: &InferenceParams,
    overall_mean: f64,
) -> Result<[Estimate; 7]> {
    p.validate_for(model.k())?;
    let inf = Inferencer::new(model, known)?;
    let eu = inf.euclid();
    let nw = inf.norm_weights(p);
    let cs = inf.cluster_size(p)?;
    let cse = inf.cs_exp(p)?;
    let a = p.merge_alpha;
    let values = [
        eu,
        nw,
        cs,
        merge(a, overall_mean, nw),
        merge(a, nw, cs),
        merge(a, nw, eu),
        cse,
    ];
    Ok(std::array::from_fn(|i| Estimate {
        method: Method::ALL[i],
        value: values[i],
    }))
}
