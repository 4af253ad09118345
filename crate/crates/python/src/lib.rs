//! Python bindings: sequences, index sets and the experiment drivers.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use subseries::game::{play, AdversaryKind, TRule};
use subseries::isomorphism::{self, BijectionSpec, CertifyOptions};
use subseries::summation::{self, GrowthEvidence, SumMode};
use subseries::{Error, IndexSetExpr, SequenceExpr};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Parse { .. } | Error::InvalidParameter(_) | Error::NoCertifiedTail(_) => {
            PyValueError::new_err(err.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn mode(oracle: bool) -> SumMode {
    if oracle {
        SumMode::Oracle
    } else {
        SumMode::Compensated
    }
}

/// A positive sequence, built from the textual grammar (`star`, `power(star,0.5)`, ...).
#[pyclass(name = "Sequence", frozen, from_py_object)]
#[derive(Clone)]
struct PySequence(SequenceExpr);

#[pymethods]
impl PySequence {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        spec.parse().map(PySequence).map_err(to_py)
    }

    #[staticmethod]
    fn star() -> Self {
        PySequence(SequenceExpr::star())
    }

    fn eval(&self, n: u64) -> PyResult<f64> {
        if n == 0 {
            return Err(PyValueError::new_err("sequences are indexed from 1"));
        }
        Ok(self.0.eval(n))
    }

    fn tail_sup(&self, n: u64) -> PyResult<f64> {
        self.0.tail_sup(n).map_err(to_py)
    }

    fn power(&self, r: f64) -> PyResult<Self> {
        subseries::power_transform(self.0.clone(), r)
            .map(PySequence)
            .map_err(to_py)
    }

    #[staticmethod]
    fn fubini(even: &PySequence, odd: &PySequence) -> Self {
        PySequence(subseries::fubini_interleave(even.0.clone(), odd.0.clone()))
    }

    fn __repr__(&self) -> String {
        format!("Sequence('{}')", self.0)
    }
}

/// A lazy increasing subset of the positive integers (`primes`, `primes-1`, ...).
#[pyclass(name = "IndexSet", frozen, from_py_object)]
#[derive(Clone)]
struct PyIndexSet(IndexSetExpr);

#[pymethods]
impl PyIndexSet {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        spec.parse().map(PyIndexSet).map_err(to_py)
    }

    fn enumerate(&self, count: usize) -> PyResult<Vec<u64>> {
        self.0.enumerate(count).map_err(to_py)
    }

    fn upto(&self, limit: u64) -> PyResult<Vec<u64>> {
        self.0.elements_upto(limit).map_err(to_py)
    }

    fn contains(&self, n: u64) -> PyResult<bool> {
        self.0.contains(n).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("IndexSet('{}')", self.0)
    }
}

#[pyfunction]
fn nth_prime(n: u64) -> PyResult<u64> {
    subseries::nth_prime(n).map_err(to_py)
}

/// `[(horizon, sum, rounding_bound), ...]`
#[pyfunction]
#[pyo3(signature = (seq, set, horizons, oracle = false))]
fn partial_sums(
    seq: &PySequence,
    set: &PyIndexSet,
    horizons: Vec<u64>,
    oracle: bool,
) -> PyResult<Vec<(u64, f64, f64)>> {
    let series =
        summation::partial_sums_with(&seq.0, &set.0, &horizons, mode(oracle)).map_err(to_py)?;
    Ok(series
        .checkpoints
        .iter()
        .map(|c| (c.horizon, c.sum, c.rounding_bound))
        .collect())
}

fn evidence_dict<'py>(py: Python<'py>, ev: &GrowthEvidence) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("label", GrowthEvidence::LABEL)?;
    d.set_item("best", ev.best.to_string())?;
    let sums: Vec<(u64, f64)> = ev
        .series
        .checkpoints
        .iter()
        .map(|c| (c.horizon, c.sum))
        .collect();
    d.set_item("sums", sums)?;
    d.set_item("increments", ev.increments.clone())?;
    let fits = PyDict::new(py);
    for f in &ev.fits {
        fits.set_item(f.shape.to_string(), (f.rms, f.relative))?;
    }
    d.set_item("fits", fits)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (seq, set, checkpoints, oracle = false))]
fn growth_profile<'py>(
    py: Python<'py>,
    seq: &PySequence,
    set: &PyIndexSet,
    checkpoints: Vec<u64>,
    oracle: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let ev = summation::growth_profile(&seq.0, &set.0, &checkpoints, mode(oracle)).map_err(to_py)?;
    evidence_dict(py, &ev)
}

#[pyfunction]
fn domination<'py>(
    py: Python<'py>,
    a: (PySequence, PyIndexSet),
    b: (PySequence, PyIndexSet),
    terms: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let r = summation::domination_check((&a.0 .0, &a.1 .0), (&b.0 .0, &b.1 .0), terms)
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("terms", r.terms)?;
    d.set_item("constant", r.constant)?;
    d.set_item("argmax", r.argmax)?;
    d.set_item("last_decade_max", r.last_decade_max)?;
    d.set_item("trace", r.trace)?;
    Ok(d)
}

/// Plays the game; rounds come back as `(m, k0, t, delta, start, end)`.
#[pyfunction]
#[pyo3(signature = (adversary = "shrink", rounds = 12, seed = 0, minimal_t = false))]
fn play_game<'py>(
    py: Python<'py>,
    adversary: &str,
    rounds: usize,
    seed: u64,
    minimal_t: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let kind: AdversaryKind = adversary.parse().map_err(to_py)?;
    let rule = if minimal_t { TRule::Minimal } else { TRule::QuarterSlack };
    let g = play(kind.build(seed).as_mut(), rounds, rule).map_err(to_py)?;
    let rows: Vec<(usize, u64, u64, f64, u64, u64)> = g
        .rounds
        .iter()
        .map(|r| (r.m, r.k0, r.t, r.delta, r.block.start, r.block.end))
        .collect();
    let d = PyDict::new(py);
    d.set_item("rounds", rows)?;
    d.set_item("passed", g.passed())?;
    d.set_item("cumulative_lower", g.verification.cumulative_lower.clone())?;
    d.set_item("csv", g.to_csv())?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (r, s, f = "identity", blocks = 30, scan_cap = 10_000_000))]
fn build_witness<'py>(
    py: Python<'py>,
    r: f64,
    s: f64,
    f: &str,
    blocks: u64,
    scan_cap: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let f: BijectionSpec = f.parse().map_err(to_py)?;
    let w = isomorphism::build_witness(r, s, &f, blocks, scan_cap, &CertifyOptions::default())
        .map_err(to_py)?;
    let rows: Vec<(u64, u64, u64, u64, f64, f64)> = w
        .blocks
        .iter()
        .map(|b| (b.k, b.n_k, b.min(), b.max(), b.sum_r, b.sum_s))
        .collect();
    let d = PyDict::new(py);
    d.set_item("t", w.t)?;
    d.set_item("blocks", rows)?;
    d.set_item("total_r", w.total_r)?;
    d.set_item("total_s", w.total_s)?;
    d.set_item("bound", w.bound)?;
    d.set_item("passed", w.passed())?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (r, checkpoints, oracle = false))]
fn root_prime_test<'py>(
    py: Python<'py>,
    r: f64,
    checkpoints: Vec<u64>,
    oracle: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let rep = isomorphism::root_prime_membership_test(r, &checkpoints, mode(oracle)).map_err(to_py)?;
    let d = PyDict::new(py);
    for (name, dich) in [("literal", &rep.literal), ("odd", &rep.odd)] {
        let inner = PyDict::new(py);
        inner.set_item("direct", evidence_dict(py, &dich.direct)?)?;
        inner.set_item("shifted", evidence_dict(py, &dich.shifted)?)?;
        inner.set_item("holds", dich.holds())?;
        d.set_item(name, inner)?;
    }
    Ok(d)
}

#[pymodule]
fn pysubseries(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySequence>()?;
    m.add_class::<PyIndexSet>()?;
    m.add_function(wrap_pyfunction!(nth_prime, m)?)?;
    m.add_function(wrap_pyfunction!(partial_sums, m)?)?;
    m.add_function(wrap_pyfunction!(growth_profile, m)?)?;
    m.add_function(wrap_pyfunction!(domination, m)?)?;
    m.add_function(wrap_pyfunction!(play_game, m)?)?;
    m.add_function(wrap_pyfunction!(build_witness, m)?)?;
    m.add_function(wrap_pyfunction!(root_prime_test, m)?)?;
    Ok(())
}
