//! Seeded synthetic datasets: single distributions, squared/cubed relations on
//! the last coordinate, and 2- or 3-component mixtures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistributionSpec {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, std: f64 },
    Gamma { shape: f64, scale: f64 },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DistributionSpec::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            DistributionSpec::Normal { mean, std } => {
                mean.is_finite() && std.is_finite() && std > 0.0
            }
            DistributionSpec::Gamma { shape, scale } => {
                shape.is_finite() && scale.is_finite() && shape > 0.0 && scale > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!(
                "bad distribution parameters: {self:?}"
            )))
        }
    }

    pub fn sample(&self, rng: &mut SeededRng) -> f64 {
        match *self {
            DistributionSpec::Uniform { lo, hi } => rng.uniform(lo, hi),
            DistributionSpec::Normal { mean, std } => rng.normal(mean, std),
            DistributionSpec::Gamma { shape, scale } => rng.gamma(shape, scale),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DistributionSpec::Uniform { lo, hi } => 0.5 * (lo + hi),
            DistributionSpec::Normal { mean, .. } => mean,
            DistributionSpec::Gamma { shape, scale } => shape * scale,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            DistributionSpec::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            DistributionSpec::Normal { std, .. } => std * std,
            DistributionSpec::Gamma { shape, scale } => shape * scale * scale,
        }
    }
}

/// How the last coordinate relates to the others.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationTransform {
    /// Drawn from the component distribution like every other column.
    #[default]
    Independent,
    SumOfSquares,
    SumOfCubes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub distribution: DistributionSpec,
    #[serde(default)]
    pub relation: RelationTransform,
    pub fraction: f64,
}

impl Component {
    pub fn new(distribution: DistributionSpec, relation: RelationTransform, fraction: f64) -> Self {
        Self {
            distribution,
            relation,
            fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub dim: usize,
    pub components: Vec<Component>,
    pub n_points: usize,
    pub seed: u64,
}

const FRACTION_TOLERANCE: f64 = 1e-9;

impl DataSpec {
    pub fn with_n_points(mut self, n: usize) -> Self {
        self.n_points = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidSpec(format!(
                "dimension must be >= 2, got {}",
                self.dim
            )));
        }
        if !(1..=3).contains(&self.components.len()) {
            return Err(Error::InvalidSpec(format!(
                "expected 1 to 3 components, got {}",
                self.components.len()
            )));
        }
        for c in &self.components {
            c.distribution.validate()?;
            if !(c.fraction.is_finite() && c.fraction > 0.0) {
                return Err(Error::InvalidSpec(format!("bad fraction {}", c.fraction)));
            }
        }
        let total: f64 = self.components.iter().map(|c| c.fraction).sum();
        if (total - 1.0).abs() > FRACTION_TOLERANCE {
            return Err(Error::InvalidSpec(format!(
                "fractions sum to {total}, not 1"
            )));
        }
        if self.n_points < self.components.len() {
            return Err(Error::InvalidSpec(format!(
                "{} points cannot cover {} components",
                self.n_points,
                self.components.len()
            )));
        }
        Ok(())
    }

    /// Rows per component by largest remainder; each differs from
    /// `fraction * n` by less than one.
    pub fn allocation(&self) -> Vec<usize> {
        let n = self.n_points;
        let exact: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.fraction * n as f64)
            .collect();
        let mut sizes: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
        let assigned: usize = sizes.iter().sum();
        let mut order: Vec<usize> = (0..sizes.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = exact[a] - exact[a].floor();
            let rb = exact[b] - exact[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().cycle().take(n.saturating_sub(assigned)) {
            sizes[i] += 1;
        }
        sizes
    }
}

/// Draws the dataset described by `spec`. Components are generated in order
/// from a single seeded stream, concatenated, then row-shuffled.
pub fn generate(spec: &DataSpec) -> Result<Matrix> {
    spec.validate()?;
    let d = spec.dim;
    let mut rng = SeededRng::new(spec.seed);
    let mut data = Vec::with_capacity(spec.n_points * d);
    let mut row = vec![0.0; d];
    for (component, size) in spec.components.iter().zip(spec.allocation()) {
        for _ in 0..size {
            for v in &mut row[..d - 1] {
                *v = component.distribution.sample(&mut rng);
            }
            row[d - 1] = match component.relation {
                RelationTransform::Independent => component.distribution.sample(&mut rng),
                RelationTransform::SumOfSquares => row[..d - 1].iter().map(|v| v * v).sum(),
                RelationTransform::SumOfCubes => row[..d - 1].iter().map(|v| v * v * v).sum(),
            };
            data.extend_from_slice(&row);
        }
    }
    let mut order: Vec<usize> = (0..spec.n_points).collect();
    rng.shuffle(&mut order);
    let unshuffled = Matrix::from_flat(spec.n_points, d, data)?;
    Ok(unshuffled.select_rows(&order))
}

/// Seeded disjoint row split; the train side gets `floor(n * train_fraction)` rows.
pub fn split(data: &Matrix, train_fraction: f64, seed: u64) -> Result<(Matrix, Matrix)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidSpec(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    // the nudge keeps e.g. 11000 * (10/11) from flooring to 9999
    let n_train = ((data.nrows() as f64) * train_fraction + 1e-9).floor() as usize;
    split_at(data, n_train, seed)
}

/// Seeded disjoint row split with exactly `n_train` rows on the train side.
pub fn split_at(data: &Matrix, n_train: usize, seed: u64) -> Result<(Matrix, Matrix)> {
    let n = data.nrows();
    if n_train == 0 {
        return Err(Error::Empty("train split"));
    }
    if n_train >= n {
        return Err(Error::Empty("test split"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    SeededRng::new(seed).shuffle(&mut order);
    Ok((
        data.select_rows(&order[..n_train]),
        data.select_rows(&order[n_train..]),
    ))
}

pub const DEFAULT_PRESET_POINTS: usize = 11_000;
pub const DEFAULT_PRESET_DIM: usize = 2;

/// The fifteen named datasets, in catalog order.
pub fn thesis_presets() -> Vec<(&'static str, DataSpec)> {
    use DistributionSpec::*;
    use RelationTransform::*;

    let u = Uniform { lo: -1.0, hi: 1.0 };
    let n = Normal {
        mean: 0.0,
        std: 1.0,
    };
    let g = Gamma {
        shape: 1.0,
        scale: 1.0,
    };
    let single = |dist, rel| vec![Component::new(dist, rel, 1.0)];
    let mix = |dists: &[DistributionSpec]| {
        let f = 1.0 / dists.len() as f64;
        dists
            .iter()
            .map(|&d| Component::new(d, Independent, f))
            .collect::<Vec<_>>()
    };

    let catalog: Vec<(&'static str, Vec<Component>)> = vec![
        ("uniform", single(u, Independent)),
        ("uniform_squared", single(u, SumOfSquares)),
        ("uniform_cube", single(u, SumOfCubes)),
        ("normal", single(n, Independent)),
        ("normal_squared", single(n, SumOfSquares)),
        ("normal_cube", single(n, SumOfCubes)),
        ("gamma", single(g, Independent)),
        ("gamma_squared", single(g, SumOfSquares)),
        ("gamma_cube", single(g, SumOfCubes)),
        ("uniform_2clust", mix(&[u, Uniform { lo: 5.0, hi: 7.0 }])),
        (
            "normal_2clust",
            mix(&[
                n,
                Normal {
                    mean: 6.0,
                    std: 1.0,
                },
            ]),
        ),
        (
            "gamma_2clust",
            mix(&[
                g,
                Gamma {
                    shape: 9.0,
                    scale: 1.0,
                },
            ]),
        ),
        (
            "uniform_3clust",
            mix(&[
                u,
                Uniform { lo: 5.0, hi: 7.0 },
                Uniform { lo: 11.0, hi: 13.0 },
            ]),
        ),
        (
            "normal_3clust",
            mix(&[
                n,
                Normal {
                    mean: 6.0,
                    std: 1.0,
                },
                Normal {
                    mean: 12.0,
                    std: 1.0,
                },
            ]),
        ),
        (
            "gamma_normal_3clust",
            mix(&[
                g,
                Gamma {
                    shape: 9.0,
                    scale: 1.0,
                },
                Normal {
                    mean: 20.0,
                    std: 1.0,
                },
            ]),
        ),
    ];
    catalog
        .into_iter()
        .map(|(name, components)| {
            (
                name,
                DataSpec {
                    dim: DEFAULT_PRESET_DIM,
                    components,
                    n_points: DEFAULT_PRESET_POINTS,
                    seed: 0,
                },
            )
        })
        .collect()
}

pub fn preset(name: &str) -> Result<DataSpec> {
    thesis_presets()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| s)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

pub fn preset_names() -> Vec<&'static str> {
    thesis_presets().into_iter().map(|(n, _)| n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(components: Vec<Component>, dim: usize, n: usize) -> DataSpec {
        DataSpec {
            dim,
            components,
            n_points: n,
            seed: 42,
        }
    }

    fn mean_sd(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v.sqrt())
    }

    #[test]
    fn uniform_entries_in_range() {
        let s = preset("uniform").unwrap().with_n_points(1000);
        let m = generate(&s).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (1000, 2));
        assert!(m.as_slice().iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn squares_are_nonnegative() {
        let s = preset("normal_squared")
            .unwrap()
            .with_dim(3)
            .with_n_points(5000);
        let m = generate(&s).unwrap();
        for r in m.rows() {
            assert!(r[2] >= 0.0);
            assert!((r[2] - (r[0] * r[0] + r[1] * r[1])).abs() < 1e-12);
        }
    }

    #[test]
    fn cubes_of_symmetric_inputs_center_on_zero() {
        let s = preset("normal_cube").unwrap().with_n_points(10_000);
        let m = generate(&s).unwrap();
        let last: Vec<f64> = m.column(1).collect();
        let (mean, sd) = mean_sd(&last);
        assert!(mean.abs() < 5.0 * sd / (last.len() as f64).sqrt());
    }

    #[test]
    fn two_uniform_halves() {
        let s = preset("uniform_2clust").unwrap().with_n_points(1000);
        let m = generate(&s).unwrap();
        let low = m.column(0).filter(|v| (-1.0..=1.0).contains(v)).count();
        let high = m.column(0).filter(|v| (5.0..=7.0).contains(v)).count();
        assert_eq!((low, high), (500, 500));
        // shuffled: the low half is not simply the first 500 rows
        assert!(m.column(0).take(500).any(|v| v >= 5.0));
    }

    #[test]
    fn marginals_match_within_five_standard_errors() {
        for name in ["uniform", "normal", "gamma"] {
            let s = preset(name).unwrap().with_n_points(10_000).with_seed(9);
            let dist = s.components[0].distribution;
            let m = generate(&s).unwrap();
            for j in 0..2 {
                let xs: Vec<f64> = m.column(j).collect();
                let n = xs.len() as f64;
                let (mean, sd) = mean_sd(&xs);
                let se_mean = dist.variance().sqrt() / n.sqrt();
                assert!(
                    (mean - dist.mean()).abs() < 5.0 * se_mean,
                    "{name} col {j} mean {mean}"
                );
                // sample variance standard error ~ sigma^2 * sqrt(2/(n-1)) for the normal;
                // widen by the kurtosis for gamma(1,1) (excess kurtosis 6)
                let var = sd * sd;
                let se_var = dist.variance() * ((2.0 + 6.0) / (n - 1.0)).sqrt();
                assert!(
                    (var - dist.variance()).abs() < 5.0 * se_var,
                    "{name} col {j} var {var}"
                );
            }
        }
    }

    #[test]
    fn deterministic() {
        let s = preset("gamma_normal_3clust")
            .unwrap()
            .with_n_points(3000)
            .with_seed(5);
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        assert_ne!(
            generate(&s).unwrap(),
            generate(&s.clone().with_seed(6)).unwrap()
        );
    }

    #[test]
    fn allocation_is_within_one() {
        let s = preset("normal_3clust").unwrap().with_n_points(1000);
        let sizes = s.allocation();
        assert_eq!(sizes.iter().sum::<usize>(), 1000);
        for (c, &sz) in s.components.iter().zip(&sizes) {
            assert!((sz as f64 - c.fraction * 1000.0).abs() <= 1.0);
        }
        assert_eq!(sizes, vec![334, 333, 333]);
    }

    #[test]
    fn spec_errors() {
        let u = DistributionSpec::Uniform { lo: 0.0, hi: 1.0 };
        let bad = spec(
            vec![
                Component::new(u, RelationTransform::Independent, 0.5),
                Component::new(u, RelationTransform::Independent, 0.4),
            ],
            2,
            10,
        );
        assert!(matches!(generate(&bad), Err(Error::InvalidSpec(_))));
        let few = spec(
            vec![
                Component::new(u, RelationTransform::Independent, 0.5),
                Component::new(u, RelationTransform::Independent, 0.5),
            ],
            2,
            1,
        );
        assert!(generate(&few).is_err());
        let degenerate = spec(
            vec![Component::new(
                DistributionSpec::Uniform { lo: 1.0, hi: 1.0 },
                RelationTransform::Independent,
                1.0,
            )],
            2,
            10,
        );
        assert!(generate(&degenerate).is_err());
        let gamma = spec(
            vec![Component::new(
                DistributionSpec::Gamma {
                    shape: 0.0,
                    scale: 1.0,
                },
                RelationTransform::Independent,
                1.0,
            )],
            2,
            10,
        );
        assert!(generate(&gamma).is_err());
        let normal = spec(
            vec![Component::new(
                DistributionSpec::Normal {
                    mean: 0.0,
                    std: -1.0,
                },
                RelationTransform::Independent,
                1.0,
            )],
            2,
            10,
        );
        assert!(generate(&normal).is_err());
        assert!(generate(&preset("uniform").unwrap().with_dim(1)).is_err());
    }

    #[test]
    fn catalog() {
        let presets = thesis_presets();
        assert_eq!(presets.len(), 15);
        let s = preset("normal_2clust").unwrap();
        assert_eq!(
            s.components
                .iter()
                .map(|c| (c.distribution, c.fraction))
                .collect::<Vec<_>>(),
            vec![
                (
                    DistributionSpec::Normal {
                        mean: 0.0,
                        std: 1.0
                    },
                    0.5
                ),
                (
                    DistributionSpec::Normal {
                        mean: 6.0,
                        std: 1.0
                    },
                    0.5
                ),
            ]
        );
        let s = preset("uniform").unwrap();
        assert_eq!(s.components.len(), 1);
        assert_eq!(
            s.components[0].distribution,
            DistributionSpec::Uniform { lo: -1.0, hi: 1.0 }
        );
        assert_eq!(s.components[0].relation, RelationTransform::Independent);
        for (_, s) in &presets {
            s.validate().unwrap();
        }
        assert!(matches!(preset("moons"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn split_sizes_and_replay() {
        let m = generate(&preset("uniform").unwrap().with_n_points(11_000)).unwrap();
        let (train, test) = split(&m, 10.0 / 11.0, 1).unwrap();
        assert_eq!((train.nrows(), test.nrows()), (10_000, 1_000));
        let (train2, test2) = split(&m, 10.0 / 11.0, 1).unwrap();
        assert_eq!((train, test), (train2, test2));

        let tiny = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let (a, b) = split(&tiny, 0.5, 0).unwrap();
        assert_eq!((a.nrows(), b.nrows()), (1, 1));
        assert!(split(&tiny, 0.2, 0).is_err());
        assert!(split(&tiny, 1.0, 0).is_err());
        assert!(split(&tiny, 0.0, 0).is_err());
    }

    #[test]
    fn split_is_a_partition() {
        let rows: Vec<[f64; 2]> = (0..50).map(|i| [i as f64, 0.0]).collect();
        let m = Matrix::from_rows(&rows).unwrap();
        let (a, b) = split(&m, 0.3, 4).unwrap();
        let mut ids: Vec<i64> = a.column(0).chain(b.column(0)).map(|v| v as i64).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..50).collect::<Vec<_>>());
    }
}
