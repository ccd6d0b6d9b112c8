//! Voronoi density estimation.
//!
//! The density at `x` is `1 / (m * Vol(c(x)))` where `c(x)` is the Voronoi
//! cell of the site nearest to `x` and `m` the number of sites. Cell volumes
//! are Lebesgue measure clipped to a bounding box, estimated by uniform hit
//! counting.

use serde::{Deserialize, Serialize};

use crate::distance::squared_euclidean;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::Empty("bounding box"));
        }
        if let Some(axis) = lo
            .iter()
            .zip(&hi)
            .position(|(l, h)| l.partial_cmp(h) != Some(std::cmp::Ordering::Less))
        {
            return Err(Error::DegenerateBox(axis));
        }
        Ok(Self { lo, hi })
    }

    /// Per-axis min/max of `points`, widened on each side by `margin` times
    /// the axis extent. Zero-extent axes are widened by `margin` absolutely.
    pub fn around<R: AsRef<[f64]>>(points: &[R], margin: f64) -> Result<Self> {
        let first = points.first().ok_or(Error::Empty("point set"))?.as_ref();
        let mut lo = first.to_vec();
        let mut hi = first.to_vec();
        for p in points {
            let p = p.as_ref();
            if p.len() != lo.len() {
                return Err(Error::DimensionMismatch {
                    expected: lo.len(),
                    got: p.len(),
                });
            }
            for (j, &v) in p.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        for (l, h) in lo.iter_mut().zip(hi.iter_mut()) {
            let pad = if *h > *l {
                (*h - *l) * margin
            } else {
                margin.max(f64::EPSILON)
            };
            *l -= pad;
            *h += pad;
        }
        Self::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| *l <= *v && *v <= *h)
    }
}

/// Default margin for [`BoundingBox::around`].
pub const DEFAULT_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronoiEstimate {
    pub sites: Vec<Vec<f64>>,
    pub cell_volumes: Vec<f64>,
    pub hits: Vec<u64>,
    pub bounding_box: BoundingBox,
    pub mc_samples: u64,
}

fn nearest_site(sites: &[Vec<f64>], x: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, s) in sites.iter().enumerate() {
        let d = squared_euclidean(s, x);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

pub fn estimate_volumes(
    sites: &[Vec<f64>],
    bounding_box: &BoundingBox,
    mc_samples: u64,
    seed: u64,
) -> Result<VoronoiEstimate> {
    if sites.is_empty() {
        return Err(Error::Empty("site set"));
    }
    if mc_samples == 0 {
        return Err(Error::Empty("Monte Carlo sample"));
    }
    let d = bounding_box.dim();
    for s in sites {
        if s.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: s.len(),
            });
        }
    }
    for (i, s) in sites.iter().enumerate() {
        if sites[..i].contains(s) {
            return Err(Error::DuplicateSite(i));
        }
    }
    // re-check in case the box was built by hand
    let bounding_box = BoundingBox::new(bounding_box.lo.clone(), bounding_box.hi.clone())?;

    let mut rng = SeededRng::new(seed);
    let mut hits = vec![0u64; sites.len()];
    let mut x = vec![0.0; d];
    for _ in 0..mc_samples {
        for (v, (l, h)) in x
            .iter_mut()
            .zip(bounding_box.lo.iter().zip(&bounding_box.hi))
        {
            *v = rng.uniform(*l, *h);
        }
        hits[nearest_site(sites, &x)] += 1;
    }
    let box_volume = bounding_box.volume();
    let cell_volumes = hits
        .iter()
        .map(|&h| box_volume * h as f64 / mc_samples as f64)
        .collect();
    Ok(VoronoiEstimate {
        sites: sites.to_vec(),
        cell_volumes,
        hits,
        bounding_box,
        mc_samples,
    })
}

impl VoronoiEstimate {
    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    /// Cells that received no Monte Carlo hits.
    pub fn empty_cells(&self) -> Vec<usize> {
        self.hits
            .iter()
            .enumerate()
            .filter_map(|(i, &h)| (h == 0).then_some(i))
            .collect()
    }

    /// Density of the cell with index `i`.
    pub fn cell_density(&self, i: usize) -> Result<f64> {
        let vol = self.cell_volumes[i];
        if vol <= 0.0 {
            return Err(Error::ZeroVolumeCell(i));
        }
        Ok(1.0 / (self.site_count() as f64 * vol))
    }

    pub fn density_at(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.bounding_box.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.bounding_box.dim(),
                got: x.len(),
            });
        }
        if !self.bounding_box.contains(x) {
            return Err(Error::OutsideBox);
        }
        self.cell_density(nearest_site(&self.sites, x))
    }

    /// `sum_i p_i * Vol(c_i)` over cells with nonzero volume.
    pub fn total_mass(&self) -> f64 {
        (0..self.site_count())
            .filter_map(|i| self.cell_density(i).ok().map(|p| p * self.cell_volumes[i]))
            .sum()
    }
}
