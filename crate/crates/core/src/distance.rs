use serde::{Deserialize, Serialize};

/// Point-to-centroid distance used for assignment, loss and inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    #[default]
    Euclidean,
    SquaredEuclidean,
}

impl DistanceMode {
    #[inline]
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        let sq = squared_euclidean(a, b);
        match self {
            DistanceMode::Euclidean => sq.sqrt(),
            DistanceMode::SquaredEuclidean => sq,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DistanceMode::Euclidean => "euclidean",
            DistanceMode::SquaredEuclidean => "squared_euclidean",
        }
    }
}

impl std::str::FromStr for DistanceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euclidean" => Ok(DistanceMode::Euclidean),
            "squared_euclidean" => Ok(DistanceMode::SquaredEuclidean),
            other => Err(format!("unknown distance mode `{other}`")),
        }
    }
}

#[inline]
pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
