//! Python bindings: config, corpus generation, training, prediction,
//! evaluation and the wavelet/metric primitives.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use rigcast::commands;
use rigcast::config::PipelineConfig;
use rigcast::dwt::{self, WaveletSpec};
use rigcast::error::Error;
use rigcast::eval::metrics;
use rigcast::telemetry::AccidentType;

create_exception!(pyrigcast, RigcastError, PyException);

/// Validation problems become `ValueError`; everything else `RigcastError`.
fn py_err(e: Error) -> PyErr {
    if e.exit_code() == 1 {
        PyValueError::new_err(e.to_string())
    } else {
        RigcastError::new_err(e.to_string())
    }
}

#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: PipelineConfig,
}

#[pymethods]
impl PyConfig {
    /// Defaults, or the `key = value` file at `path`.
    #[new]
    #[pyo3(signature = (path=None))]
    fn new(path: Option<PathBuf>) -> PyResult<Self> {
        let inner = PipelineConfig::load_or_default(path.as_deref()).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: PipelineConfig::parse(text).map_err(py_err)?,
        })
    }

    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.inner.set(key, value).map_err(py_err)
    }

    fn get(&self, key: &str) -> PyResult<String> {
        self.inner
            .entries()
            .into_iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v)
            .ok_or_else(|| PyValueError::new_err(format!("unknown key `{key}`")))
    }

    fn entries(&self) -> Vec<(String, String)> {
        self.inner.entries()
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(py_err)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!("Config(seed={})", self.inner.seed)
    }
}

#[pyclass(get_all, frozen)]
struct EvalSummary {
    label: String,
    threshold: f64,
    step_min: i64,
    macro_auc: (f64, f64),
    binary_auc: (f64, f64),
    tpr: (f64, f64),
    fpr: (f64, f64),
    false_alarms_per_day: f64,
    /// Accident type code to pooled AUC; `None` when undefined.
    type_auc: Vec<(String, Option<f64>)>,
    text: String,
}

#[pymethods]
impl EvalSummary {
    fn __repr__(&self) -> String {
        format!("EvalSummary({}, macro_auc={:.4})", self.label, self.macro_auc.0)
    }
}

impl From<&rigcast::eval::crossval::EvalReport> for EvalSummary {
    fn from(r: &rigcast::eval::crossval::EvalReport) -> Self {
        Self {
            label: r.label.clone(),
            threshold: r.threshold,
            step_min: r.step_s / 60,
            macro_auc: r.macro_auc(),
            binary_auc: r.binary_auc(),
            tpr: r.tpr(),
            fpr: r.fpr(),
            false_alarms_per_day: r.false_alarms_per_day(),
            type_auc: AccidentType::ALL.iter().map(|&t| (t.code().to_string(), r.type_auc(t))).collect(),
            text: r.to_text(),
        }
    }
}

/// Writes a synthetic corpus; returns (wells, accidents, annotations).
#[pyfunction]
fn synth(config: &PyConfig, out_dir: PathBuf) -> PyResult<(usize, usize, usize)> {
    let s = commands::cmd_synth(&config.inner, &out_dir).map_err(py_err)?;
    Ok((s.wells, s.accidents, s.annotations))
}

#[pyfunction]
fn clean(config: &PyConfig, input: PathBuf, output: PathBuf) -> PyResult<Vec<PathBuf>> {
    commands::cmd_clean(&config.inner, &input, &output).map_err(py_err)
}

/// Trains on a corpus directory, writes the artifact, returns its SHA-256.
#[pyfunction]
fn train(py: Python<'_>, config: &PyConfig, corpus_dir: PathBuf, out: PathBuf) -> PyResult<String> {
    let cfg = config.inner.clone();
    py.detach(move || commands::cmd_train(&corpus_dir, &cfg, &out))
        .map(|a| a.checksum())
        .map_err(py_err)
}

/// Returns (evaluations, alarms, max probability per type code).
#[pyfunction]
#[pyo3(signature = (artifact, log, out, step_min=None, threshold=None))]
fn predict(
    artifact: PathBuf,
    log: PathBuf,
    out: PathBuf,
    step_min: Option<i64>,
    threshold: Option<f64>,
) -> PyResult<(usize, usize, Vec<(String, Option<f64>)>)> {
    let s = commands::cmd_predict(&artifact, &log, step_min, threshold, &out).map_err(py_err)?;
    let maxp = AccidentType::ALL
        .iter()
        .map(|t| (t.code().to_string(), s.max_probability[t.index()]))
        .collect();
    Ok((s.evaluations, s.alarms, maxp))
}

#[pyfunction]
fn evaluate(py: Python<'_>, config: &PyConfig, corpus_dir: PathBuf, out_dir: PathBuf) -> PyResult<Vec<EvalSummary>> {
    let cfg = config.inner.clone();
    let reports = py
        .detach(move || commands::cmd_evaluate(&corpus_dir, &cfg, &out_dir))
        .map_err(py_err)?;
    Ok(reports.iter().map(EvalSummary::from).collect())
}

fn spec(family: &str, level: usize, padding: &str) -> PyResult<WaveletSpec> {
    let family = family.parse().map_err(py_err)?;
    let padding = padding.parse().map_err(py_err)?;
    WaveletSpec::with_padding(family, level, padding).map_err(py_err)
}

/// Concatenated coefficients `[cA_L, cD_L, ..., cD_1]`.
#[pyfunction]
#[pyo3(signature = (segment, family, level, padding="symmetric"))]
fn dwt_decompose(segment: Vec<f64>, family: &str, level: usize, padding: &str) -> PyResult<Vec<f64>> {
    dwt::decompose(&segment, &spec(family, level, padding)?).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (coefficients, length, family, level, padding="symmetric"))]
fn dwt_reconstruct(coefficients: Vec<f64>, length: usize, family: &str, level: usize, padding: &str) -> PyResult<Vec<f64>> {
    dwt::reconstruct(&coefficients, length, &spec(family, level, padding)?).map_err(py_err)
}

#[pyfunction]
fn roc_auc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    metrics::roc_auc(&scores, &labels).map_err(py_err)
}

/// Rand index between two flat clusterings given as label lists.
#[pyfunction]
fn rand_index(reference: Vec<i64>, predicted: Vec<i64>) -> PyResult<f64> {
    metrics::rand_index_labels(&reference, &predicted).map_err(py_err)
}

#[pymodule]
fn pyrigcast(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RigcastError", m.py().get_type::<RigcastError>())?;
    m.add_class::<PyConfig>()?;
    m.add_class::<EvalSummary>()?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(clean, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(predict, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(dwt_decompose, m)?)?;
    m.add_function(wrap_pyfunction!(dwt_reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(rand_index, m)?)?;
    Ok(())
}
