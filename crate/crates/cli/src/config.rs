//! Run configuration: a TOML file merged under command-line flags.
//!
//! ```toml
//! seed = 42
//! out_dir = "results"
//! jobs = 4
//!
//! [data]
//! preset = "normal_2clust"   # or an inline `components` list
//! n = 11000
//! dim = 2
//! train_fraction = 0.9090909090909091
//!
//! [model]
//! k = 300
//! alpha = 0.6
//! beta = 0.07
//! distance = "euclidean"
//! window = 1000
//!
//! [inference]
//! temperature = 1.0
//! neighbor_count = 5
//! merge_alpha = 0.5
//! cs_beta = 1.0
//! normalize_cs_exp = true
//!
//! [sweep]
//! axis = "k"
//! values = "100:1000:100"
//! seeds = [1, 2, 3]
//! n_train = 10000
//! n_test = 1000
//! ```

use std::path::PathBuf;

use obk_core::datagen::Component;
use obk_core::DistanceMode;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub inference: InferenceSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub preset: Option<String>,
    pub components: Option<Vec<Component>>,
    pub n: Option<usize>,
    pub dim: Option<usize>,
    pub train_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub distance: Option<DistanceMode>,
    pub window: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceSection {
    pub temperature: Option<f64>,
    pub neighbor_count: Option<usize>,
    pub merge_alpha: Option<f64>,
    pub cs_beta: Option<f64>,
    pub normalize_cs_exp: Option<bool>,
    pub overall_mean: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: Option<String>,
    pub values: Option<String>,
    pub seeds: Option<Vec<u64>>,
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&PathBuf>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text).map_err(|e| {
            CliError::Validation(format!("config {}: {}", path.display(), e.message()))
        })
    }
}

/// Parses `start:end:step` (inclusive) or a comma-separated list.
pub fn parse_values(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = |what: &str| CliError::Validation(format!("bad value list `{s}`: {what}"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, end, step] => {
            let (start, end, step) = (num(start)?, num(end)?, num(step)?);
            if step.is_nan() || step <= 0.0 || end < start {
                return Err(bad("range needs start <= end and a positive step"));
            }
            let n = ((end - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| start + i as f64 * step).collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => Err(bad("expected start:end:step or a comma list")),
    }
}

pub fn parse_seeds(s: &str) -> Result<Vec<u64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| CliError::Validation(format!("bad seed `{t}`")))
        })
        .collect()
}
