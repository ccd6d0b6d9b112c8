use std::collections::BTreeMap;

use obk_core::datagen;
use obk_core::eval;
use obk_core::inference::{self, Method};
use obk_core::vde::{self, BoundingBox};
use obk_core::{DistanceMode, Hyperparams, Matrix, ModelSnapshot};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: obk_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<Matrix> {
    Matrix::from_rows(rows).map_err(err)
}

type Rows = Vec<Vec<f64>>;

fn rows(m: &Matrix) -> Rows {
    m.rows().map(<[f64]>::to_vec).collect()
}

fn distance(name: &str) -> PyResult<DistanceMode> {
    name.parse().map_err(PyValueError::new_err)
}

fn method(name: &str) -> PyResult<Method> {
    name.parse().map_err(err)
}

#[pyclass(name = "InferenceParams", get_all, set_all, from_py_object)]
#[derive(Clone)]
struct PyInferenceParams {
    temperature: f64,
    neighbor_count: usize,
    merge_alpha: f64,
    cs_beta: f64,
    normalize_cs_exp: bool,
}

#[pymethods]
impl PyInferenceParams {
    #[new]
    #[pyo3(signature = (temperature=1.0, neighbor_count=5, merge_alpha=0.5, cs_beta=1.0, normalize_cs_exp=true))]
    fn new(
        temperature: f64,
        neighbor_count: usize,
        merge_alpha: f64,
        cs_beta: f64,
        normalize_cs_exp: bool,
    ) -> Self {
        Self {
            temperature,
            neighbor_count,
            merge_alpha,
            cs_beta,
            normalize_cs_exp,
        }
    }
}

impl PyInferenceParams {
    fn core(&self) -> obk_core::InferenceParams {
        obk_core::InferenceParams {
            temperature: self.temperature,
            neighbor_count: self.neighbor_count,
            merge_alpha: self.merge_alpha,
            cs_beta: self.cs_beta,
            normalize_cs_exp: self.normalize_cs_exp,
        }
    }
}

fn params_or_default(p: Option<PyInferenceParams>) -> obk_core::InferenceParams {
    p.map_or_else(obk_core::InferenceParams::default, |p| p.core())
}

/// Online balanced k-means state.
#[pyclass(name = "ClusterModel")]
struct PyClusterModel {
    hp: Hyperparams,
    inner: obk_core::ClusterModel,
}

#[pymethods]
impl PyClusterModel {
    /// Seeds the model from the first `k` points (all of them when `k` is None).
    #[new]
    #[pyo3(signature = (seeds, k=None, alpha=0.6, beta=0.07, distance="euclidean"))]
    fn new(
        seeds: Vec<Vec<f64>>,
        k: Option<usize>,
        alpha: f64,
        beta: f64,
        distance: &str,
    ) -> PyResult<Self> {
        let hp = Hyperparams::new(k.unwrap_or(seeds.len()), alpha, beta)
            .map_err(err)?
            .with_distance(self::distance(distance)?);
        let inner = obk_core::ClusterModel::init(&hp, &seeds).map_err(err)?;
        Ok(Self { hp, inner })
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.hp.alpha
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.hp.beta
    }

    #[getter]
    fn centroids(&self) -> Vec<Vec<f64>> {
        self.inner.centroids().map(<[f64]>::to_vec).collect()
    }

    #[getter]
    fn counts(&self) -> Vec<u64> {
        self.inner.counts().to_vec()
    }

    #[getter]
    fn balance_weights(&self) -> Vec<f64> {
        self.inner.balance_weights().to_vec()
    }

    #[getter]
    fn mean_count(&self) -> f64 {
        self.inner.mean_count()
    }

    #[getter]
    fn var_count(&self) -> f64 {
        self.inner.var_count()
    }

    /// Returns `(cluster_index, penalized_distance, raw_distance)`.
    fn assign(&self, x: Vec<f64>) -> PyResult<(usize, f64, f64)> {
        let a = self.inner.assign(&x).map_err(err)?;
        Ok((a.cluster_index, a.penalized_distance, a.raw_distance))
    }

    fn step(&mut self, x: Vec<f64>) -> PyResult<usize> {
        Ok(self.inner.step(&x, &self.hp).map_err(err)?.cluster_index)
    }

    /// Steps every point in order and returns the assigned indices.
    fn fit(&mut self, points: Vec<Vec<f64>>) -> PyResult<Vec<usize>> {
        points
            .iter()
            .map(|x| Ok(self.inner.step(x, &self.hp).map_err(err)?.cluster_index))
            .collect()
    }

    fn update_centroid(&mut self, i: usize, x: Vec<f64>, alpha: f64) -> PyResult<()> {
        self.inner.update_centroid(i, &x, alpha).map_err(err)
    }

    fn update_balance_weights(&mut self, beta: f64) {
        self.inner.update_balance_weights(beta)
    }

    fn point_loss(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.point_loss(&x).map_err(err)
    }

    #[pyo3(signature = (known, method, params=None, overall_mean=0.0))]
    fn infer(
        &self,
        known: Vec<f64>,
        method: &str,
        params: Option<PyInferenceParams>,
        overall_mean: f64,
    ) -> PyResult<f64> {
        let p = params_or_default(params);
        inference::infer(&self.inner, &known, self::method(method)?, &p, overall_mean)
            .map(|e| e.value)
            .map_err(err)
    }

    /// Method name to estimate for all seven methods.
    #[pyo3(signature = (known, params=None, overall_mean=0.0))]
    fn infer_all(
        &self,
        known: Vec<f64>,
        params: Option<PyInferenceParams>,
        overall_mean: f64,
    ) -> PyResult<BTreeMap<&'static str, f64>> {
        let p = params_or_default(params);
        let all = inference::infer_all(&self.inner, &known, &p, overall_mean).map_err(err)?;
        Ok(all.iter().map(|e| (e.method.as_str(), e.value)).collect())
    }

    #[pyo3(signature = (overall_mean=None))]
    fn to_json(&self, overall_mean: Option<f64>) -> PyResult<String> {
        ModelSnapshot::capture(&self.inner, &self.hp, overall_mean)
            .to_json()
            .map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let snap = ModelSnapshot::from_json(text).map_err(err)?;
        Ok(Self {
            hp: snap.hyperparams().map_err(err)?,
            inner: snap.to_model().map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "ClusterModel(k={}, dim={}, alpha={}, beta={})",
            self.inner.k(),
            self.inner.dim(),
            self.hp.alpha,
            self.hp.beta
        )
    }
}

#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    datagen::preset_names()
}

#[pyfunction]
#[pyo3(signature = (preset, n=11000, seed=0, dim=2))]
fn generate(preset: &str, n: usize, seed: u64, dim: usize) -> PyResult<Vec<Vec<f64>>> {
    let spec = datagen::preset(preset)
        .map_err(err)?
        .with_n_points(n)
        .with_seed(seed)
        .with_dim(dim);
    Ok(rows(&datagen::generate(&spec).map_err(err)?))
}

#[pyfunction]
fn split(data: Vec<Vec<f64>>, train_fraction: f64, seed: u64) -> PyResult<(Rows, Rows)> {
    let (a, b) = datagen::split(&matrix(&data)?, train_fraction, seed).map_err(err)?;
    Ok((rows(&a), rows(&b)))
}

#[pyfunction]
#[pyo3(signature = (model, test, method, params=None, overall_mean=0.0))]
fn inference_error(
    model: &PyClusterModel,
    test: Vec<Vec<f64>>,
    method: &str,
    params: Option<PyInferenceParams>,
    overall_mean: f64,
) -> PyResult<f64> {
    eval::inference_error(
        &model.inner,
        &matrix(&test)?,
        self::method(method)?,
        &params_or_default(params),
        overall_mean,
    )
    .map_err(err)
}

/// Windowed training run. Returns the trained model, the training mean of
/// the last coordinate, and one dict per window.
#[pyfunction]
#[pyo3(signature = (train, test, k=300, alpha=0.6, beta=0.07, window=1000, params=None, distance="euclidean"))]
#[allow(clippy::too_many_arguments)]
fn run_training(
    py: Python<'_>,
    train: Vec<Vec<f64>>,
    test: Vec<Vec<f64>>,
    k: usize,
    alpha: f64,
    beta: f64,
    window: usize,
    params: Option<PyInferenceParams>,
    distance: &str,
) -> PyResult<(PyClusterModel, f64, Vec<Py<PyAny>>)> {
    let hp = Hyperparams::new(k, alpha, beta)
        .map_err(err)?
        .with_distance(self::distance(distance)?);
    let p = params_or_default(params);
    let (train, test) = (matrix(&train)?, matrix(&test)?);
    let run = py
        .detach(|| eval::run_training(&train, &test, &hp, &p, window, "python", 0))
        .map_err(err)?;
    let windows = run
        .record
        .windows
        .iter()
        .map(|w| {
            let d = pyo3::types::PyDict::new(py);
            d.set_item("window", w.window_index)?;
            d.set_item("loss", w.cumulative_loss)?;
            d.set_item("count_var", w.count_var)?;
            let errors: BTreeMap<&str, f64> = w
                .per_method_error
                .iter()
                .map(|(m, e)| (m.as_str(), *e))
                .collect();
            d.set_item("errors", errors)?;
            Ok(d.into_any().unbind())
        })
        .collect::<PyResult<Vec<_>>>()?;
    Ok((
        PyClusterModel {
            hp,
            inner: run.model,
        },
        run.overall_mean,
        windows,
    ))
}

/// Monte Carlo Voronoi cell volumes; returns `(volumes, hits)`.
#[pyfunction]
#[pyo3(signature = (sites, lo, hi, samples=100_000, seed=0))]
fn estimate_volumes(
    sites: Vec<Vec<f64>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    samples: u64,
    seed: u64,
) -> PyResult<(Vec<f64>, Vec<u64>)> {
    let bbox = BoundingBox::new(lo, hi).map_err(err)?;
    let est = vde::estimate_volumes(&sites, &bbox, samples, seed).map_err(err)?;
    Ok((est.cell_volumes, est.hits))
}

#[pymodule]
fn obk(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyClusterModel>()?;
    m.add_class::<PyInferenceParams>()?;
    m.add(
        "METHODS",
        Method::ALL.iter().map(|m| m.as_str()).collect::<Vec<_>>(),
    )?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(split, m)?)?;
    m.add_function(wrap_pyfunction!(inference_error, m)?)?;
    m.add_function(wrap_pyfunction!(run_training, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_volumes, m)?)?;
    Ok(())
}
