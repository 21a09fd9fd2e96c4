//! Python bindings. Words cross the boundary as lists of symbol strings (or
//! plain strings when every symbol is one character).

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use wfex::datagen;
use wfex::harness;
use wfex::oracle::wparen_alphabet;
use wfex::regression::RegressorSettings;
use wfex::{Alphabet, EqEngine, ExtractionConfig, ExtractionReport, LstmOracle, RnnWeights, WfaOracle, WparenOracle};

fn err(e: wfex::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[derive(FromPyObject)]
enum PyWord {
    Text(String),
    Symbols(Vec<String>),
}

fn encode(alphabet: &Alphabet, word: PyWord) -> PyResult<wfex::Word> {
    match word {
        PyWord::Text(s) => alphabet.parse(&s),
        PyWord::Symbols(v) => alphabet.encode(&v),
    }
    .map_err(err)
}

/// Weighted finite automaton over a named alphabet.
#[pyclass(name = "Wfa", module = "pywfex", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWfa {
    inner: wfex::Wfa,
}

#[pymethods]
impl PyWfa {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyWfa { inner: wfex::Wfa::from_json(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn n_states(&self) -> usize {
        self.inner.n_states()
    }

    #[getter]
    fn alphabet(&self) -> Vec<String> {
        self.inner.alphabet().symbols().to_vec()
    }

    #[getter]
    fn alpha(&self) -> Vec<f64> {
        self.inner.alpha().to_vec()
    }

    #[getter]
    fn beta(&self) -> Vec<f64> {
        self.inner.beta().to_vec()
    }

    /// Transition matrices keyed by symbol.
    #[getter]
    fn transitions(&self) -> BTreeMap<String, Vec<Vec<f64>>> {
        let ab = self.inner.alphabet();
        (0..ab.len())
            .map(|s| {
                let t = self.inner.transition(s);
                let rows = (0..t.rows()).map(|i| (0..t.cols()).map(|j| t[(i, j)]).collect()).collect();
                (ab.symbol(s).to_string(), rows)
            })
            .collect()
    }

    fn weight(&self, word: PyWord) -> PyResult<f64> {
        let w = encode(self.inner.alphabet(), word)?;
        self.inner.weight(&w).map_err(err)
    }

    fn configuration(&self, word: PyWord) -> PyResult<Vec<f64>> {
        let w = encode(self.inner.alphabet(), word)?;
        self.inner.configuration(&w).map_err(err)
    }

    #[pyo3(signature = (threshold = 0.01, emphasis = 0.1))]
    fn export_dot(&self, threshold: f64, emphasis: f64) -> String {
        self.inner.export_dot(threshold, emphasis)
    }

    fn __repr__(&self) -> String {
        format!("Wfa(states={}, alphabet={:?})", self.inner.n_states(), self.inner.alphabet().symbols())
    }
}

/// Black-box scorer queried by the learner.
#[pyclass(name = "Oracle", module = "pywfex", frozen)]
struct PyOracle {
    inner: Box<dyn wfex::Oracle>,
}

#[pymethods]
impl PyOracle {
    #[staticmethod]
    fn from_wfa(wfa: &PyWfa) -> Self {
        PyOracle { inner: Box::new(WfaOracle::new(wfa.inner.clone())) }
    }

    /// Two-layer LSTM loaded from a weights JSON document.
    #[staticmethod]
    fn from_rnn_json(text: &str) -> PyResult<Self> {
        let weights = RnnWeights::from_json(text).map_err(err)?;
        let alphabet = Alphabet::new(weights.alphabet.iter().cloned()).map_err(err)?;
        Ok(PyOracle { inner: Box::new(LstmOracle::new(&weights, alphabet).map_err(err)?) })
    }

    #[staticmethod]
    fn wparen() -> Self {
        PyOracle { inner: Box::new(WparenOracle::new()) }
    }

    #[getter]
    fn alphabet(&self) -> Vec<String> {
        self.inner.alphabet().symbols().to_vec()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn output(&self, word: PyWord) -> PyResult<f64> {
        let w = encode(self.inner.alphabet(), word)?;
        Ok(self.inner.output(&w))
    }

    fn config(&self, word: PyWord) -> PyResult<Vec<f64>> {
        let w = encode(self.inner.alphabet(), word)?;
        Ok(self.inner.config(&w))
    }
}

/// Runs the learner and returns the extracted WFA with the JSON run report.
#[pyfunction]
#[pyo3(signature = (
    oracle, *, eq = "regr", m = 5, n = 500, e = 0.05, max_len = 20, tau0 = 1e-2, decay = 0.5,
    max_rounds = 50, max_pops = 100_000, length_scale = 1.0, ridge = 1e-10, seed = 0
))]
#[allow(clippy::too_many_arguments)]
fn extract(
    py: Python<'_>,
    oracle: &PyOracle,
    eq: &str,
    m: usize,
    n: u64,
    e: f64,
    max_len: usize,
    tau0: f64,
    decay: f64,
    max_rounds: usize,
    max_pops: usize,
    length_scale: f64,
    ridge: f64,
    seed: u64,
) -> PyResult<(PyWfa, String)> {
    let engine = match eq {
        "regr" => EqEngine::Regression { concentration: m },
        "bfs" => EqEngine::Bfs { n },
        other => return Err(PyValueError::new_err(format!("unknown engine {other:?}; use \"regr\" or \"bfs\""))),
    };
    let cfg = ExtractionConfig {
        e,
        max_len,
        tau0,
        decay,
        engine,
        max_eq_rounds: max_rounds,
        max_pops,
        regressor: RegressorSettings { length_scale, ridge },
        seed,
    };
    let report = py.detach(|| wfex::extract(&*oracle.inner, &cfg)).map_err(err)?;
    Ok((PyWfa { inner: report.wfa.clone() }, report.to_json()))
}

/// Continues a run from its JSON report for up to `more_rounds` rounds.
#[pyfunction]
fn resume(py: Python<'_>, oracle: &PyOracle, report: &str, more_rounds: usize) -> PyResult<(PyWfa, String)> {
    let report = ExtractionReport::from_json(report).map_err(err)?;
    let next = py.detach(|| wfex::resume(&*oracle.inner, &report, more_rounds)).map_err(err)?;
    Ok((PyWfa { inner: next.wfa.clone() }, next.to_json()))
}

#[pyfunction]
fn wparen_value(word: &str) -> PyResult<f64> {
    wfex::oracle::wparen_value(word).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (alphabet_size, states, seed = 0))]
fn random_wfa(alphabet_size: usize, states: usize, seed: u64) -> PyResult<PyWfa> {
    let ab = Alphabet::letters(alphabet_size).map_err(err)?;
    Ok(PyWfa { inner: datagen::random_wfa(&ab, states, seed).map_err(err)? })
}

/// Uniformly sampled words over the first `alphabet_size` letters.
#[pyfunction]
#[pyo3(signature = (alphabet_size, count, max_len = 20, seed = 0))]
fn sample_uniform(alphabet_size: usize, count: usize, max_len: usize, seed: u64) -> PyResult<Vec<Vec<String>>> {
    let ab = Alphabet::letters(alphabet_size).map_err(err)?;
    Ok(datagen::sample_uniform(&ab, max_len, count, seed).iter().map(|w| ab.decode(w)).collect())
}

/// Words in which each letter occurs as a single contiguous block.
#[pyfunction]
#[pyo3(signature = (alphabet_size, count, max_len = 20, seed = 0))]
fn sample_block(alphabet_size: usize, count: usize, max_len: usize, seed: u64) -> PyResult<Vec<Vec<String>>> {
    let ab = Alphabet::letters(alphabet_size).map_err(err)?;
    Ok(datagen::sample_block(&ab, max_len, count, seed).iter().map(|w| ab.decode(w)).collect())
}

type PyLabelled = Vec<(String, f64)>;

/// Train and test splits of the weighted-parentheses task as `(word, value)` pairs.
#[pyfunction]
#[pyo3(signature = (seed = 0))]
fn wparen_dataset(seed: u64) -> (PyLabelled, PyLabelled) {
    let ab = wparen_alphabet();
    let conv = |items: datagen::Labelled| items.iter().map(|(w, y)| (ab.render(w).replace('ε', ""), *y)).collect();
    let (train, test) = datagen::build_wparen_dataset(seed);
    (conv(train), conv(test))
}

/// Mean squared error of `wfa` against `oracle` over `words`.
#[pyfunction]
fn mse(oracle: &PyOracle, wfa: &PyWfa, words: Vec<PyWord>) -> PyResult<f64> {
    let ab = oracle.inner.alphabet();
    let words = words.into_iter().map(|w| encode(ab, w)).collect::<PyResult<Vec<_>>>()?;
    Ok(harness::mse(&*oracle.inner, &wfa.inner, &words).map_err(err)?.mse)
}

/// Largest absolute difference over every word up to `max_len` symbols.
#[pyfunction]
fn sup_error(py: Python<'_>, oracle: &PyOracle, wfa: &PyWfa, max_len: usize) -> PyResult<f64> {
    py.detach(|| harness::sup_error_exhaustive(&*oracle.inner, &wfa.inner, max_len)).map_err(err)
}

#[pymodule]
fn pywfex(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWfa>()?;
    m.add_class::<PyOracle>()?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(resume, m)?)?;
    m.add_function(wrap_pyfunction!(wparen_value, m)?)?;
    m.add_function(wrap_pyfunction!(random_wfa, m)?)?;
    m.add_function(wrap_pyfunction!(sample_uniform, m)?)?;
    m.add_function(wrap_pyfunction!(sample_block, m)?)?;
    m.add_function(wrap_pyfunction!(wparen_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(mse, m)?)?;
    m.add_function(wrap_pyfunction!(sup_error, m)?)?;
    Ok(())
}
