//! Training runs with prequential windowed loss, per-window inference error
//! on a held-out set, and one-axis hyperparameter sweeps.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen;
use crate::error::{Error, Result};
use crate::inference::{infer_all, InferenceParams, Method};
use crate::matrix::Matrix;
use crate::model::{ClusterModel, Hyperparams};

pub const DEFAULT_WINDOW: usize = 1000;

/// Sum of squared residuals of one method over `test`.
pub fn inference_error(
    model: &ClusterModel,
    test: &Matrix,
    method: Method,
    params: &InferenceParams,
    overall_mean: f64,
) -> Result<f64> {
    Ok(inference_errors(model, test, params, overall_mean)?[&method])
}

/// Sum of squared residuals for all seven methods at once.
pub fn inference_errors(
    model: &ClusterModel,
    test: &Matrix,
    params: &InferenceParams,
    overall_mean: f64,
) -> Result<BTreeMap<Method, f64>> {
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }
    if test.ncols() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: test.ncols(),
        });
    }
    let d = model.dim();
    let mut sums = [0.0f64; 7];
    for row in test.rows() {
        let estimates = infer_all(model, &row[..d - 1], params, overall_mean)?;
        for (s, e) in sums.iter_mut().zip(estimates) {
            let r = row[d - 1] - e.value;
            *s += r * r;
        }
    }
    Ok(Method::ALL.into_iter().zip(sums).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    /// 1-based.
    pub window_index: usize,
    pub window_size: usize,
    /// Sum of prequential point losses over the window.
    pub cumulative_loss: f64,
    pub per_method_error: BTreeMap<Method, f64>,
    /// Population variance of the cluster counts at the window's end.
    pub count_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub hp: Hyperparams,
    pub inference_params: InferenceParams,
    pub data_preset: String,
    pub seed: u64,
    pub windows: Vec<WindowStats>,
    pub final_counts: Vec<u64>,
}

impl RunRecord {
    pub fn final_count_var(&self) -> f64 {
        crate::model::count_stats(&self.final_counts).1
    }

    pub fn losses(&self) -> Vec<f64> {
        self.windows.iter().map(|w| w.cumulative_loss).collect()
    }

    pub fn errors(&self, method: Method) -> Vec<f64> {
        self.windows
            .iter()
            .map(|w| w.per_method_error[&method])
            .collect()
    }
}

pub struct TrainedRun {
    pub model: ClusterModel,
    /// Mean of the last coordinate over every training point.
    pub overall_mean: f64,
    pub record: RunRecord,
}

/// Streams `train` through a fresh model seeded from its first `k` rows.
///
/// Each later point is scored against the model before it is stepped in.
/// Whenever `window_size` points have streamed, the window's loss is closed
/// and all seven inference errors are taken on `test`. A trailing partial
/// window is dropped.
pub fn run_training(
    train: &Matrix,
    test: &Matrix,
    hp: &Hyperparams,
    params: &InferenceParams,
    window_size: usize,
    preset: &str,
    seed: u64,
) -> Result<TrainedRun> {
    hp.validate()?;
    params.validate_for(hp.k)?;
    if window_size == 0 {
        return Err(Error::InvalidHyperparams(
            "window size must be positive".into(),
        ));
    }
    if train.nrows() < hp.k + window_size {
        return Err(Error::InvalidHyperparams(format!(
            "{} training points cannot cover k = {} plus one window of {}",
            train.nrows(),
            hp.k,
            window_size
        )));
    }
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }

    let d = train.ncols();
    let rows: Vec<&[f64]> = train.rows().collect();
    let mut model = ClusterModel::init(hp, &rows[..hp.k])?;
    let mut last_sum: f64 = rows[..hp.k].iter().map(|r| r[d - 1]).sum();
    let mut seen = hp.k;

    let mut windows = Vec::new();
    let mut window_loss = 0.0;
    let mut in_window = 0;
    for x in &rows[hp.k..] {
        window_loss += model.point_loss(x)?;
        model.step(x, hp)?;
        last_sum += x[d - 1];
        seen += 1;
        in_window += 1;
        if in_window == window_size {
            let overall_mean = last_sum / seen as f64;
            windows.push(WindowStats {
                window_index: windows.len() + 1,
                window_size,
                cumulative_loss: window_loss,
                per_method_error: inference_errors(&model, test, params, overall_mean)?,
                count_var: model.var_count(),
            });
            window_loss = 0.0;
            in_window = 0;
        }
    }

    let overall_mean = last_sum / seen as f64;
    let record = RunRecord {
        hp: *hp,
        inference_params: *params,
        data_preset: preset.to_string(),
        seed,
        windows,
        final_counts: model.counts().to_vec(),
    };
    Ok(TrainedRun {
        model,
        overall_mean,
        record,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    K,
    Alpha,
    Beta,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::K => "k",
            SweepAxis::Alpha => "alpha",
            SweepAxis::Beta => "beta",
        }
    }

    /// Copy of `base` with this axis set to `value`.
    pub fn apply(self, base: &Hyperparams, value: f64) -> Result<Hyperparams> {
        let mut hp = *base;
        match self {
            SweepAxis::K => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::InvalidHyperparams(format!(
                        "k must be a positive integer, got {value}"
                    )));
                }
                hp.k = value as usize;
            }
            SweepAxis::Alpha => hp.alpha = value,
            SweepAxis::Beta => hp.beta = value,
        }
        hp.validate()?;
        Ok(hp)
    }

    pub fn value_of(self, hp: &Hyperparams) -> f64 {
        match self {
            SweepAxis::K => hp.k as f64,
            SweepAxis::Alpha => hp.alpha,
            SweepAxis::Beta => hp.beta,
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k" => Ok(SweepAxis::K),
            "alpha" => Ok(SweepAxis::Alpha),
            "beta" => Ok(SweepAxis::Beta),
            other => Err(Error::InvalidHyperparams(format!(
                "unknown sweep axis `{other}`"
            ))),
        }
    }
}

/// Everything held fixed across a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepBase {
    pub hp: Hyperparams,
    pub params: InferenceParams,
    pub preset: String,
    pub seeds: Vec<u64>,
    pub n_train: usize,
    pub n_test: usize,
    pub window_size: usize,
    pub dim: usize,
}

impl Default for SweepBase {
    fn default() -> Self {
        Self {
            hp: Hyperparams::default(),
            params: InferenceParams::default(),
            preset: "normal".into(),
            seeds: vec![0],
            n_train: 10_000,
            n_test: 1_000,
            window_size: DEFAULT_WINDOW,
            dim: datagen::DEFAULT_PRESET_DIM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub base: SweepBase,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Empty("sweep value list"));
        }
        for (i, v) in self.values.iter().enumerate() {
            if self.values[..i].contains(v) {
                return Err(Error::InvalidHyperparams(format!(
                    "sweep value {v} repeated"
                )));
            }
            self.axis.apply(&self.base.hp, *v)?;
        }
        if self.base.seeds.is_empty() {
            return Err(Error::Empty("seed list"));
        }
        datagen::preset(&self.base.preset)?;
        Ok(())
    }

    /// (value, seed) pairs in output order.
    pub fn runs(&self) -> Vec<(f64, u64)> {
        self.values
            .iter()
            .flat_map(|&v| self.base.seeds.iter().map(move |&s| (v, s)))
            .collect()
    }
}

/// Train and test sets for one seed of a preset.
pub fn preset_data(
    preset: &str,
    dim: usize,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(Matrix, Matrix)> {
    let spec = datagen::preset(preset)?
        .with_dim(dim)
        .with_n_points(n_train + n_test)
        .with_seed(seed);
    let data = datagen::generate(&spec)?;
    datagen::split_at(&data, n_train, seed.wrapping_add(1))
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub value: f64,
    pub seed: u64,
    pub result: std::result::Result<RunRecord, String>,
}

/// One run per (value, seed), executed on up to `jobs` threads; output order
/// follows [`SweepSpec::runs`] regardless of completion order.
pub fn sweep(spec: &SweepSpec, jobs: usize) -> Result<Vec<SweepOutcome>> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Malformed(e.to_string()))?;
    let base = &spec.base;
    let one = |value: f64, seed: u64| -> Result<RunRecord> {
        let hp = spec.axis.apply(&base.hp, value)?;
        let (train, test) = preset_data(&base.preset, base.dim, base.n_train, base.n_test, seed)?;
        Ok(run_training(
            &train,
            &test,
            &hp,
            &base.params,
            base.window_size,
            &base.preset,
            seed,
        )?
        .record)
    };
    let runs = spec.runs();
    Ok(pool.install(|| {
        runs.par_iter()
            .map(|&(value, seed)| SweepOutcome {
                value,
                seed,
                result: one(value, seed).map_err(|e| e.to_string()),
            })
            .collect()
    }))
}

/// Records only; fails on the first failed run.
pub fn sweep_records(spec: &SweepSpec, jobs: usize) -> Result<Vec<RunRecord>> {
    sweep(spec, jobs)?
        .into_iter()
        .map(|o| {
            o.result.map_err(|e| {
                Error::Malformed(format!("run value={} seed={} failed: {e}", o.value, o.seed))
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub preset: String,
    pub axis: SweepAxis,
    pub value: f64,
    pub seeds: usize,
    /// Final-window loss, averaged over seeds.
    pub final_loss: f64,
    /// Mean of the last three windows' errors per method, averaged over seeds.
    pub mean_error_last3: BTreeMap<Method, f64>,
    pub final_count_var: f64,
}

impl SummaryRow {
    /// Method with the lowest last-three error; lowest tag on ties.
    pub fn best_method(&self) -> (Method, f64) {
        let mut best = (Method::ALL[0], f64::INFINITY);
        for (&m, &e) in &self.mean_error_last3 {
            if e < best.1 {
                best = (m, e);
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    /// Index into `rows` with the lowest best-method error.
    pub argmin_error: usize,
    pub argmin_loss: usize,
    pub argmin_count_var: usize,
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut n = 0usize;
    let mut s = 0.0;
    for x in xs {
        s += x;
        n += 1;
    }
    s / n as f64
}

fn argmin(xs: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, x) in xs.into_iter().enumerate() {
        if x < best.1 {
            best = (i, x);
        }
    }
    best.0
}

/// One row per swept value in first-seen order, seeds averaged.
pub fn summarize(records: &[RunRecord], axis: SweepAxis) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::Empty("record list"));
    }
    let mut groups: Vec<(f64, Vec<&RunRecord>)> = Vec::new();
    for r in records {
        if r.windows.is_empty() {
            return Err(Error::Empty("window list"));
        }
        let v = axis.value_of(&r.hp);
        match groups.iter_mut().find(|(gv, _)| *gv == v) {
            Some((_, g)) => g.push(r),
            None => groups.push((v, vec![r])),
        }
    }
    let rows: Vec<SummaryRow> = groups
        .into_iter()
        .map(|(value, rs)| {
            let last3 = |r: &RunRecord, m: Method| {
                let n = r.windows.len();
                mean(
                    r.windows[n.saturating_sub(3)..]
                        .iter()
                        .map(|w| w.per_method_error[&m]),
                )
            };
            SummaryRow {
                preset: rs[0].data_preset.clone(),
                axis,
                value,
                seeds: rs.len(),
                final_loss: mean(rs.iter().map(|r| r.windows.last().unwrap().cumulative_loss)),
                mean_error_last3: Method::ALL
                    .into_iter()
                    .map(|m| (m, mean(rs.iter().map(|r| last3(r, m)))))
                    .collect(),
                final_count_var: mean(rs.iter().map(|r| r.final_count_var())),
            }
        })
        .collect();
    Ok(Summary {
        argmin_error: argmin(rows.iter().map(|r| r.best_method().1)),
        argmin_loss: argmin(rows.iter().map(|r| r.final_loss)),
        argmin_count_var: argmin(rows.iter().map(|r| r.final_count_var)),
        rows,
    })
}

/// Whether the last three windows' mean loss sits below the first three's.
pub fn loss_descends(record: &RunRecord) -> bool {
    let l = record.losses();
    if l.len() < 3 {
        return false;
    }
    mean(l[l.len() - 3..].iter().copied()) < mean(l[..3].iter().copied())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSpread {
    pub method: Method,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    /// Largest `|e - mean| / mean` over the windows.
    pub max_rel_dev: f64,
}

/// Spread of each method's error over the 1-based inclusive window range.
pub fn error_spread(record: &RunRecord, first: usize, last: usize) -> Result<Vec<ErrorSpread>> {
    let ws: Vec<&WindowStats> = record
        .windows
        .iter()
        .filter(|w| (first..=last).contains(&w.window_index))
        .collect();
    if ws.is_empty() {
        return Err(Error::Empty("window range"));
    }
    Ok(Method::ALL
        .into_iter()
        .map(|m| {
            let es: Vec<f64> = ws.iter().map(|w| w.per_method_error[&m]).collect();
            let mu = mean(es.iter().copied());
            let std = mean(es.iter().map(|e| (e - mu).powi(2))).sqrt();
            let max_rel_dev = es.iter().map(|e| (e - mu).abs() / mu).fold(0.0, f64::max);
            ErrorSpread {
                method: m,
                mean: mu,
                std,
                max_rel_dev,
            }
        })
        .collect())
}
