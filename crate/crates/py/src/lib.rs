//! Python bindings: phase polynomials, graph encodings, permanent engines,
//! gadget verification and the resource/sampling analysis.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use permsum::circuit::{extract_resolved, parse_bits, Circuit};
use permsum::gadgets;
use permsum::graph;
use permsum::permanent::{self, ComplexMatrix, PermanentMethod};
use permsum::resource;
use permsum::sampling;

fn to_py_err(e: permsum::Error) -> PyErr {
    match e {
        permsum::Error::Resource(msg) => PyRuntimeError::new_err(format!("resource limit: {msg}")),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn matrix_from_rows(rows: Vec<Vec<Complex64>>) -> PyResult<ComplexMatrix> {
    let n = rows.len();
    let mut data = Vec::with_capacity(n * n);
    for row in &rows {
        if row.len() != n {
            return Err(PyValueError::new_err("matrix must be square"));
        }
        data.extend_from_slice(row);
    }
    ComplexMatrix::from_rows(n, data).map_err(to_py_err)
}

fn matrix_to_rows(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    (0..m.order()).map(|i| m.row(i).to_vec()).collect()
}

/// Multilinear phase polynomial over boolean variables.
#[pyclass(name = "Polynomial", from_py_object)]
#[derive(Clone)]
struct PyPolynomial {
    inner: permsum::Polynomial,
}

#[pymethods]
impl PyPolynomial {
    /// Polynomial(num_vars, clauses) with clauses as [(theta, [vars...]), ...].
    #[new]
    fn new(num_vars: usize, clauses: Vec<(f64, Vec<usize>)>) -> PyResult<Self> {
        Ok(PyPolynomial {
            inner: permsum::Polynomial::new(num_vars, clauses).map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyPolynomial {
            inner: permsum::Polynomial::parse(text).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn num_vars(&self) -> usize {
        self.inner.num_vars()
    }

    #[getter]
    fn constant_phase(&self) -> f64 {
        self.inner.constant_phase()
    }

    /// Canonical clauses as [(theta, [vars...]), ...].
    fn clauses(&self) -> Vec<(f64, Vec<usize>)> {
        self.inner
            .clauses()
            .iter()
            .map(|c| (c.theta(), c.vars().to_vec()))
            .collect()
    }

    fn evaluate(&self, assignment: Vec<bool>) -> PyResult<f64> {
        self.inner.evaluate(&assignment).map_err(to_py_err)
    }

    /// Brute-force sum of e^{i f(x)} over all assignments.
    fn exp_sum(&self) -> PyResult<Complex64> {
        self.inner.exp_sum().map_err(to_py_err)
    }

    fn substitute(&self, fixed: Vec<(usize, bool)>) -> PyResult<Self> {
        Ok(PyPolynomial {
            inner: self.inner.substitute(&fixed).map_err(to_py_err)?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!(
            "Polynomial(num_vars={}, clauses={})",
            self.inner.num_vars(),
            self.inner.clauses().len()
        )
    }
}

/// Weighted digraph with multiplier * per(adjacency) = sum_x e^{i f(x)}.
#[pyclass(name = "EncodedGraph")]
struct PyEncodedGraph {
    inner: graph::EncodedGraph,
}

#[pymethods]
impl PyEncodedGraph {
    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    #[getter]
    fn multiplier(&self) -> Complex64 {
        self.inner.multiplier()
    }

    fn adjacency(&self) -> Vec<Vec<Complex64>> {
        matrix_to_rows(self.inner.adjacency())
    }

    /// multiplier * per(adjacency) with the chosen engine.
    #[pyo3(signature = (method = "block_auto"))]
    fn encoded_sum(&self, method: &str) -> PyResult<Complex64> {
        let method: PermanentMethod = method.parse().map_err(to_py_err)?;
        self.inner.encoded_sum(method).map_err(to_py_err)
    }

    fn spectral_norm(&self) -> PyResult<f64> {
        permanent::spectral_norm(self.inner.adjacency()).map_err(to_py_err)
    }

    fn to_json(&self) -> String {
        graph::export_graph_json(&self.inner)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyEncodedGraph {
            inner: graph::parse_graph_json(text).map_err(to_py_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("EncodedGraph(vertices={})", self.inner.vertex_count())
    }
}

/// Encode a polynomial as a graph whose permanent carries its exponential sum.
#[pyfunction]
fn encode_polynomial(poly: &PyPolynomial) -> PyResult<PyEncodedGraph> {
    Ok(PyEncodedGraph {
        inner: graph::encode_polynomial(&poly.inner).map_err(to_py_err)?,
    })
}

/// Encode an IQP circuit's zero-zero amplitude; returns (graph, scale) with
/// amplitude = scale * multiplier * per(adjacency).
#[pyfunction]
fn encode_zero_zero(circuit_text: &str) -> PyResult<(PyEncodedGraph, f64)> {
    let circuit = match Circuit::parse(circuit_text).map_err(to_py_err)? {
        Circuit::Iqp(c) => c,
        Circuit::Ht(_) => {
            return Err(PyValueError::new_err(
                "zero-zero encoding needs an IQP circuit",
            ))
        }
    };
    let (g, scale) = graph::encode_zero_zero(&circuit).map_err(to_py_err)?;
    Ok((PyEncodedGraph { inner: g }, scale))
}

/// Amplitude <out| C |in> of a circuit in the `iqp`/`ht` text format.
/// `via` selects the brute-force path sum ("direct") or the graph
/// permanent ("graph").
#[pyfunction]
#[pyo3(signature = (circuit_text, input, output, via = "direct"))]
fn amplitude(circuit_text: &str, input: &str, output: &str, via: &str) -> PyResult<Complex64> {
    let circuit = Circuit::parse(circuit_text).map_err(to_py_err)?;
    let a = parse_bits(input).map_err(to_py_err)?;
    let b = parse_bits(output).map_err(to_py_err)?;
    match via {
        "direct" => circuit.amplitude_direct(&a, &b).map_err(to_py_err),
        "graph" => match extract_resolved(&circuit, &a, &b).map_err(to_py_err)? {
            None => Ok(Complex64::new(0.0, 0.0)),
            Some(sop) => {
                let g = graph::encode_polynomial(&sop.poly).map_err(to_py_err)?;
                Ok(g.encoded_sum(PermanentMethod::BlockAuto)
                    .map_err(to_py_err)?
                    * sop.normalization())
            }
        },
        other => Err(PyValueError::new_err(format!(
            "via must be 'direct' or 'graph', got {other:?}"
        ))),
    }
}

/// Permanent of a square complex matrix (rows as nested lists).
#[pyfunction]
#[pyo3(signature = (rows, method = "block_auto"))]
fn permanent_of(rows: Vec<Vec<Complex64>>, method: &str) -> PyResult<Complex64> {
    let m = matrix_from_rows(rows)?;
    let method: PermanentMethod = method.parse().map_err(to_py_err)?;
    permanent::permanent(&m, method).map_err(to_py_err)
}

/// Unbiased randomized permanent estimate; returns (estimate, stderr).
#[pyfunction]
#[pyo3(signature = (rows, samples, seed = 0))]
fn gurvits_estimate(
    rows: Vec<Vec<Complex64>>,
    samples: u64,
    seed: u64,
) -> PyResult<(Complex64, f64)> {
    let m = matrix_from_rows(rows)?;
    Ok(permanent::gurvits_estimate_with_stderr(&m, samples, seed))
}

/// Largest singular value by power iteration.
#[pyfunction]
fn spectral_norm(rows: Vec<Vec<Complex64>>) -> PyResult<f64> {
    let m = matrix_from_rows(rows)?;
    permanent::spectral_norm(&m).map_err(to_py_err)
}

/// Clause gadget adjacency matrix for degree 1, 2 or 3.
#[pyfunction]
fn gadget_matrix(degree: usize, theta: f64) -> PyResult<Vec<Vec<Complex64>>> {
    let g = gadgets::gadget_matrix(degree, theta).map_err(to_py_err)?;
    Ok(matrix_to_rows(g.matrix()))
}

/// Check a gadget against its design constraints. With rows=None the
/// built-in gadget of the degree is checked; `radical_variant` selects the
/// known-bad cubic corner variant instead.
#[pyfunction]
#[pyo3(signature = (degree, theta, tol = 1e-9, rows = None, inner = None, radical_variant = false))]
fn verify_gadget<'py>(
    py: Python<'py>,
    degree: usize,
    theta: f64,
    tol: f64,
    rows: Option<Vec<Vec<Complex64>>>,
    inner: Option<usize>,
    radical_variant: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let gadget = match rows {
        Some(rows) => {
            let m = matrix_from_rows(rows)?;
            let k = inner.unwrap_or(m.order().saturating_sub(degree));
            gadgets::Gadget::new(degree, k, m).map_err(to_py_err)?
        }
        None if radical_variant => {
            if degree != 3 {
                return Err(PyValueError::new_err("radical_variant applies to degree 3"));
            }
            gadgets::cubic_gadget_radical_variant(theta)
        }
        None => gadgets::gadget_matrix(degree, theta).map_err(to_py_err)?,
    };
    let report = gadgets::verify_gadget(&gadget, theta, tol).map_err(to_py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("pass", report.pass)?;
    dict.set_item("theta", report.theta)?;
    dict.set_item("max_nonzero_residual", report.max_nonzero_residual)?;
    dict.set_item("max_zero_residual", report.max_zero_residual)?;
    let residuals: Vec<(String, f64)> = report
        .residuals
        .iter()
        .map(|(tag, r)| (tag.to_string(), *r))
        .collect();
    dict.set_item("residuals", residuals)?;
    let failing: Vec<String> = report.failing().iter().map(|t| t.to_string()).collect();
    dict.set_item("failing", failing)?;
    Ok(dict)
}

/// The gadget-design constraint system in the export grammar.
#[pyfunction]
#[pyo3(signature = (degree, inner, theta = None))]
fn constraint_system(degree: usize, inner: usize, theta: Option<f64>) -> PyResult<String> {
    let system = gadgets::generate_constraints(degree, inner).map_err(to_py_err)?;
    Ok(gadgets::export_constraints(&system, theta))
}

fn parse_mode(mode: &str) -> PyResult<resource::ProbMode> {
    mode.parse().map_err(to_py_err)
}

/// Probability that a random q-qubit {Z, CZ, CCZ} circuit needs fewer
/// graph-encoding samples than KLM samples.
#[pyfunction]
#[pyo3(signature = (q, mode = "exact"))]
fn prob_alpha_lt_1(q: usize, mode: &str) -> PyResult<f64> {
    resource::prob_alpha_lt_1(q, parse_mode(mode)?).map_err(to_py_err)
}

/// Probability that the graph encoding needs fewer photons per shot.
#[pyfunction]
#[pyo3(signature = (q, mode = "exact"))]
fn prob_fewer_photons(q: usize, mode: &str) -> PyResult<f64> {
    resource::prob_fewer_photons(q, parse_mode(mode)?).map_err(to_py_err)
}

/// Photon/mode requirements of both schemes for given gate counts.
#[pyfunction]
fn resource_table<'py>(
    py: Python<'py>,
    q: usize,
    deg1: usize,
    deg2: usize,
    deg3: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let t = resource::resource_table(&resource::GateCounts {
        q,
        deg1,
        deg2,
        deg3,
    });
    let dict = PyDict::new(py);
    dict.set_item("klm_photons", t.klm_photons)?;
    dict.set_item("klm_modes", t.klm_modes)?;
    dict.set_item("graph_photons", t.graph_photons)?;
    dict.set_item("graph_modes", t.graph_modes)?;
    Ok(dict)
}

/// CCZ-count threshold and its derived coefficients (c_x, c_y, c_q).
#[pyfunction]
fn ccz_threshold(q: usize, deg1: usize, deg2: usize) -> (i64, (f64, f64, f64)) {
    let (t, c) = resource::ccz_threshold(q, deg1, deg2, &resource::SchemeParams::default());
    (t, (c.c_x, c.c_y, c.c_q))
}

/// Hoeffding sample count for accuracy epsilon at confidence 1 - delta.
#[pyfunction]
fn hoeffding_samples(epsilon: f64, delta: f64) -> PyResult<u64> {
    resource::hoeffding_samples(epsilon, delta).map_err(to_py_err)
}

/// Ensemble size (log2) and expected photons per shot for q qubits.
#[pyfunction]
fn ensemble_stats<'py>(py: Python<'py>, q: usize) -> PyResult<Bound<'py, PyDict>> {
    let s = resource::ensemble_stats(q);
    let dict = PyDict::new(py);
    dict.set_item("log2_size", s.log2_size)?;
    dict.set_item("size", s.size.to_string())?;
    dict.set_item("expected_photons", s.expected_photons)?;
    Ok(dict)
}

/// Simulate one estimation run of a scheme ("graph" or "klm") on an IQP
/// circuit; returns a dict with the exact quantities and the run outcome.
#[pyfunction]
#[pyo3(signature = (circuit_text, scheme, samples, seed = 0))]
fn simulate_estimation<'py>(
    py: Python<'py>,
    circuit_text: &str,
    scheme: &str,
    samples: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let circuit = match Circuit::parse(circuit_text).map_err(to_py_err)? {
        Circuit::Iqp(c) => c,
        Circuit::Ht(_) => return Err(PyValueError::new_err("simulation needs an IQP circuit")),
    };
    let kind: sampling::SchemeKind = scheme.parse().map_err(to_py_err)?;
    let ctx = sampling::scheme_context(kind, &circuit, &resource::SchemeParams::default())
        .map_err(to_py_err)?;
    let run = sampling::simulate_estimation(&ctx, samples, seed);
    let dict = PyDict::new(py);
    dict.set_item("p_true", ctx.p_true)?;
    dict.set_item("rescale", ctx.rescale)?;
    dict.set_item("exact_probability", ctx.exact_probability)?;
    dict.set_item("samples", run.samples)?;
    dict.set_item("post_selected", run.post_selected)?;
    dict.set_item("estimate", run.estimate)?;
    Ok(dict)
}

/// Exact coefficients of per(A + eps I) as a polynomial in eps.
#[pyfunction]
fn eps_poly_coeffs(rows: Vec<Vec<Complex64>>) -> PyResult<Vec<Complex64>> {
    let m = matrix_from_rows(rows)?;
    sampling::eps_poly_coeffs(&m).map_err(to_py_err)
}

/// Recover |per A|^2 from diagonally shifted permanents; epsilons default
/// to Chebyshev points on [0, 2].
#[pyfunction]
#[pyo3(signature = (rows, epsilons = None))]
fn boost_recover(rows: Vec<Vec<Complex64>>, epsilons: Option<Vec<f64>>) -> PyResult<f64> {
    let m = matrix_from_rows(rows)?;
    let setup = match epsilons {
        Some(eps) => sampling::BoostSetup::new(m, eps).map_err(to_py_err)?,
        None => sampling::BoostSetup::chebyshev(m),
    };
    Ok(sampling::boost_recover(&setup, None)
        .map_err(to_py_err)?
        .recovered)
}

#[pymodule]
fn permsum_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPolynomial>()?;
    m.add_class::<PyEncodedGraph>()?;
    m.add_function(wrap_pyfunction!(encode_polynomial, m)?)?;
    m.add_function(wrap_pyfunction!(encode_zero_zero, m)?)?;
    m.add_function(wrap_pyfunction!(amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(permanent_of, m)?)?;
    m.add_function(wrap_pyfunction!(gurvits_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_norm, m)?)?;
    m.add_function(wrap_pyfunction!(gadget_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(verify_gadget, m)?)?;
    m.add_function(wrap_pyfunction!(constraint_system, m)?)?;
    m.add_function(wrap_pyfunction!(prob_alpha_lt_1, m)?)?;
    m.add_function(wrap_pyfunction!(prob_fewer_photons, m)?)?;
    m.add_function(wrap_pyfunction!(resource_table, m)?)?;
    m.add_function(wrap_pyfunction!(ccz_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(hoeffding_samples, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble_stats, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_estimation, m)?)?;
    m.add_function(wrap_pyfunction!(eps_poly_coeffs, m)?)?;
    m.add_function(wrap_pyfunction!(boost_recover, m)?)?;
    Ok(())
}
