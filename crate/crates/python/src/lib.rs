//! Python bindings: `import conceptlearn`.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use conceptlearn::embedding::EmbeddingSource;
use conceptlearn::experiment::MetricValues;
use conceptlearn::metrics::Metric;
use conceptlearn::stats::Method;
use conceptlearn::{Alternative, Precision};

fn to_py(e: conceptlearn::Error) -> PyErr {
    if e.is_input_error() || matches!(e, conceptlearn::Error::AllZeroDifferences) {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn precision(s: &str) -> PyResult<Precision> {
    match s {
        "f32" => Ok(Precision::F32),
        "f64" => Ok(Precision::F64),
        other => Err(PyValueError::new_err(format!("precision must be 'f32' or 'f64', got {other:?}"))),
    }
}

fn metric_dict<'py>(py: Python<'py>, v: &MetricValues) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for m in Metric::ALL {
        d.set_item(m.key(), v.get(m))?;
    }
    Ok(d)
}

/// Vocabulary with one dense vector per word.
#[pyclass(name = "EmbeddingStore", module = "conceptlearn", frozen)]
struct PyEmbeddingStore {
    inner: conceptlearn::EmbeddingStore,
}

#[pymethods]
impl PyEmbeddingStore {
    /// Load a text vector file (`word v1 .. vd` per line, optional header).
    #[staticmethod]
    #[pyo3(signature = (path, name=None, lowercase=true, max_words=None, precision="f32"))]
    fn load(path: PathBuf, name: Option<String>, lowercase: bool, max_words: Option<usize>, precision: &str) -> PyResult<Self> {
        let name = name.unwrap_or_else(|| path.file_stem().and_then(|s| s.to_str()).unwrap_or("embedding").to_string());
        let source = EmbeddingSource {
            lowercase,
            max_words,
            precision: self::precision(precision)?,
            ..EmbeddingSource::new(name, path)
        };
        let inner = conceptlearn::EmbeddingStore::load(&source).map_err(to_py)?;
        Ok(PyEmbeddingStore { inner })
    }

    /// N(0, 1) vectors for `words`, reproducible from `seed`.
    #[staticmethod]
    #[pyo3(signature = (words, dimension, seed, name="gaussian", precision="f32"))]
    fn random_gaussian(words: Vec<String>, dimension: usize, seed: u64, name: &str, precision: &str) -> PyResult<Self> {
        let inner = conceptlearn::EmbeddingStore::random_gaussian(name, words, dimension, seed, self::precision(precision)?)
            .map_err(to_py)?;
        Ok(PyEmbeddingStore { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (name, words, rows, precision="f64"))]
    fn from_rows(name: &str, words: Vec<String>, rows: Vec<Vec<f64>>, precision: &str) -> PyResult<Self> {
        let inner =
            conceptlearn::EmbeddingStore::from_rows(name, words, &rows, self::precision(precision)?).map_err(to_py)?;
        Ok(PyEmbeddingStore { inner })
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn is_normalized(&self) -> bool {
        self.inner.is_normalized()
    }

    #[getter]
    fn skipped_duplicates(&self) -> usize {
        self.inner.skipped_duplicates()
    }

    fn words(&self) -> Vec<String> {
        self.inner.words().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, word: &str) -> bool {
        self.inner.contains(word)
    }

    /// The word's vector, or None when it is not in the vocabulary.
    fn lookup(&self, word: &str) -> Option<Vec<f64>> {
        self.inner.lookup(word)
    }

    /// Copy with every row scaled to unit length.
    fn normalize(&self) -> PyResult<Self> {
        Ok(PyEmbeddingStore {
            inner: self.inner.normalize().map_err(to_py)?,
        })
    }

    #[pyo3(signature = (path, header=false))]
    fn save(&self, path: PathBuf, header: bool) -> PyResult<()> {
        self.inner.save_text(&path, header).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "EmbeddingStore(name={:?}, words={}, dimension={})",
            self.inner.name(),
            self.inner.len(),
            self.inner.dimension()
        )
    }
}

/// A named word list.
#[pyclass(name = "Concept", module = "conceptlearn", frozen)]
struct PyConcept {
    inner: conceptlearn::Concept,
}

#[pymethods]
impl PyConcept {
    #[new]
    #[pyo3(signature = (name, words, source="python"))]
    fn new(name: &str, words: Vec<String>, source: &str) -> PyResult<Self> {
        let inner = conceptlearn::Concept::new(name, &words, source).map_err(to_py)?;
        Ok(PyConcept { inner })
    }

    /// Read a list file; `#` starts a comment line.
    #[staticmethod]
    #[pyo3(signature = (path, name, expand_against=None))]
    fn load(path: PathBuf, name: &str, expand_against: Option<&PyEmbeddingStore>) -> PyResult<Self> {
        let inner = conceptlearn::load_concept(&path, name, expand_against.map(|s| &s.inner)).map_err(to_py)?;
        Ok(PyConcept { inner })
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn words(&self) -> Vec<String> {
        self.inner.words.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.words.len()
    }

    fn __repr__(&self) -> String {
        format!("Concept(name={:?}, words={})", self.inner.name, self.inner.words.len())
    }
}

/// Split a concept into in-vocabulary and dropped words.
#[pyfunction]
fn resolve<'py>(py: Python<'py>, concept: &PyConcept, store: &PyEmbeddingStore) -> PyResult<Bound<'py, PyDict>> {
    let r = conceptlearn::resolve(&concept.inner, &store.inner).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("name", r.name())?;
    d.set_item("embedding", &r.embedding_name)?;
    d.set_item("in_vocab", &r.in_vocab)?;
    d.set_item("dropped", &r.dropped)?;
    d.set_item("size", r.size())?;
    d.set_item("listed_size", r.listed_size())?;
    Ok(d)
}

#[pyfunction]
fn sigmoid(z: f64) -> f64 {
    conceptlearn::sigmoid(z)
}

#[pyfunction]
fn roc_auc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    conceptlearn::roc_auc(&scores, &labels).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (scores, labels, threshold=0.5))]
fn confusion_metrics<'py>(py: Python<'py>, scores: Vec<f64>, labels: Vec<bool>, threshold: f64) -> PyResult<Bound<'py, PyDict>> {
    let m = conceptlearn::metrics::evaluate(&scores, &labels, threshold).map_err(to_py)?;
    let d = PyDict::new(py);
    for metric in Metric::ALL {
        d.set_item(metric.key(), m.get(metric))?;
    }
    d.set_item("tp", m.counts.tp)?;
    d.set_item("fp", m.counts.fp)?;
    d.set_item("tn", m.counts.tn)?;
    d.set_item("fn", m.counts.fn_)?;
    Ok(d)
}

/// Signed-rank test of x - y; exact for up to 20 non-zero pairs.
#[pyfunction]
#[pyo3(signature = (x, y, alternative="two-sided"))]
fn wilcoxon<'py>(py: Python<'py>, x: Vec<f64>, y: Vec<f64>, alternative: &str) -> PyResult<Bound<'py, PyDict>> {
    let alt: Alternative = alternative.parse().map_err(to_py)?;
    let o = conceptlearn::wilcoxon_signed_rank(&x, &y, alt).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("n", o.n_effective)?;
    d.set_item("n_zero", o.n_zero)?;
    d.set_item("w_plus", o.w_plus)?;
    d.set_item("w_minus", o.w_minus)?;
    d.set_item("w", o.w_statistic)?;
    d.set_item("p_value", o.p_value)?;
    d.set_item("exact", o.method == Method::ExactEnumeration)?;
    d.set_item("alternative", alt.to_string())?;
    Ok(d)
}

/// `(p, display)` for the add-one null estimate.
#[pyfunction]
fn empirical_p_value(observed: f64, null: Vec<f64>) -> PyResult<(f64, String)> {
    let p = conceptlearn::empirical_p_value(observed, &null).map_err(to_py)?;
    Ok((p.value, p.to_string()))
}

/// Repeated split/train/test rounds for one concept. Returns means, sample
/// standard deviations and the per-iteration AUCs.
#[pyfunction]
#[pyo3(signature = (store, concept, iterations=1000, seed=0, threshold=0.5))]
fn run_concept<'py>(
    py: Python<'py>,
    store: &PyEmbeddingStore,
    concept: &PyConcept,
    iterations: usize,
    seed: u64,
    threshold: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = conceptlearn::ExperimentConfig {
        iterations,
        master_seed: seed,
        normalize: store.inner.is_normalized(),
        threshold,
        ..Default::default()
    };
    let agg = py
        .detach(|| {
            let resolved = conceptlearn::resolve(&concept.inner, &store.inner)?;
            conceptlearn::run_concept(&store.inner, &resolved, &cfg)
        })
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("concept", &agg.concept)?;
    d.set_item("embedding", &agg.embedding)?;
    d.set_item("size", agg.size)?;
    d.set_item("listed_size", agg.listed_size)?;
    d.set_item("mean", metric_dict(py, &agg.mean)?)?;
    d.set_item("std", metric_dict(py, &agg.std)?)?;
    let aucs: Vec<f64> = agg.records.iter().map(|r| r.metrics.auc).collect();
    d.set_item("aucs", aucs)?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "conceptlearn")]
fn conceptlearn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEmbeddingStore>()?;
    m.add_class::<PyConcept>()?;
    m.add_function(wrap_pyfunction!(resolve, m)?)?;
    m.add_function(wrap_pyfunction!(sigmoid, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(confusion_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_p_value, m)?)?;
    m.add_function(wrap_pyfunction!(run_concept, m)?)?;
    Ok(())
}
