//! Python bindings for the `fockslice` core.
//!
//! Complex amplitudes cross the boundary as Python `complex`; operators are
//! exported as nested lists in the graded Fock basis order.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fockslice::experiment::{self, ExperimentError};
use fockslice::fock::{coherent_overlap, coherent_vector, free_hamiltonian, h_rho_operator};
use fockslice::presets::preset_symbol;
use fockslice::propagator::{self, Construction, SliceConfig};
use fockslice::quadrature::build_rule;
use fockslice::symbols::{self, format_symbol, parse_symbol, phi_polynomial};
use fockslice::{C64, FockOperator, PolySymbol};

fn value_err(e: fockslice::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn experiment_err(e: ExperimentError) -> PyErr {
    match e {
        ExperimentError::Config(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Truncated multimode Fock space `|n| <= cutoff`.
#[pyclass(name = "ModeSpace", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModeSpace {
    inner: Arc<fockslice::ModeSpace>,
}

#[pymethods]
impl PyModeSpace {
    #[new]
    #[pyo3(signature = (modes, cutoff, frequencies=None, scale_weights=None))]
    fn new(modes: usize, cutoff: u32, frequencies: Option<Vec<f64>>, scale_weights: Option<Vec<f64>>) -> PyResult<Self> {
        let space = fockslice::ModeSpace::with_parameters(
            modes,
            cutoff,
            frequencies.unwrap_or_else(|| vec![1.0; modes]),
            scale_weights.unwrap_or_else(|| vec![1.0; modes]),
        )
        .map_err(value_err)?;
        Ok(Self { inner: Arc::new(space) })
    }

    #[getter]
    fn modes(&self) -> usize {
        self.inner.num_modes()
    }

    #[getter]
    fn cutoff(&self) -> u32 {
        self.inner.cutoff()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Occupation tuples in basis order.
    fn basis(&self) -> Vec<Vec<u32>> {
        self.inner.basis().iter().map(|i| i.0.clone()).collect()
    }

    /// Truncated coherent state with amplitudes `psi`.
    fn coherent(&self, psi: Vec<C64>) -> PyResult<Vec<C64>> {
        let v = coherent_vector(&self.inner, &psi).map_err(value_err)?;
        Ok(v.amplitudes.iter().copied().collect())
    }

    fn free_hamiltonian(&self) -> PyOperator {
        PyOperator { inner: free_hamiltonian(&self.inner) }
    }

    fn h_rho(&self, rho: f64) -> PyResult<PyOperator> {
        Ok(PyOperator { inner: h_rho_operator(&self.inner, rho).map_err(value_err)? })
    }

    fn __repr__(&self) -> String {
        format!("ModeSpace(modes={}, cutoff={}, dim={})", self.modes(), self.cutoff(), self.dim())
    }
}

/// Polynomial phase-space symbol in `psi` and `conj(psi)`.
#[pyclass(name = "Symbol", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySymbol {
    inner: PolySymbol,
}

#[pymethods]
impl PySymbol {
    /// Parses the text symbol format (`modes M` then `k l idx re im` lines).
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self { inner: parse_symbol(text).map_err(value_err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (name, modes=1, coupling=None, scale_weights=None, rho=0.0))]
    fn preset(name: &str, modes: usize, coupling: Option<f64>, scale_weights: Option<Vec<f64>>, rho: f64) -> PyResult<Self> {
        let weights = scale_weights.unwrap_or_else(|| vec![1.0; modes]);
        preset_symbol(name, modes, coupling, &weights, rho)
            .map(|inner| Self { inner })
            .ok_or_else(|| PyValueError::new_err(format!("unknown preset `{name}`")))
    }

    /// `sum_k |psi_k|^2`.
    #[staticmethod]
    fn number(modes: usize) -> Self {
        Self { inner: PolySymbol::number(modes) }
    }

    /// `coeffs[0] + sum_k sum_m coeffs[m] phi_k^m` with `phi = Re psi`.
    #[staticmethod]
    fn phi(coeffs: Vec<f64>, modes: usize) -> Self {
        Self { inner: phi_polynomial(&coeffs, modes) }
    }

    #[getter]
    fn modes(&self) -> usize {
        self.inner.modes()
    }

    #[getter]
    fn degree(&self) -> u32 {
        self.inner.degree()
    }

    fn is_real(&self) -> bool {
        self.inner.is_real(1e-14)
    }

    fn to_text(&self) -> String {
        format_symbol(&self.inner)
    }

    fn berezin_from_wick(&self) -> PyResult<Self> {
        Ok(Self { inner: symbols::berezin_from_wick(&self.inner).map_err(value_err)? })
    }

    fn wick_from_berezin(&self) -> PyResult<Self> {
        Ok(Self { inner: symbols::wick_from_berezin(&self.inner).map_err(value_err)? })
    }

    /// Berezin symbol of the product of the Toeplitz operators of `self` and `other`.
    #[pyo3(signature = (other, order=u32::MAX))]
    fn compose(&self, other: &PySymbol, order: u32) -> PyResult<Self> {
        self.same_modes(other)?;
        Ok(Self { inner: symbols::compose_expansion(&self.inner, &other.inner, order) })
    }

    fn __call__(&self, psi: Vec<C64>) -> PyResult<C64> {
        if psi.len() != self.inner.modes() {
            return Err(PyValueError::new_err(format!("expected {} amplitudes", self.inner.modes())));
        }
        Ok(self.inner.eval(&psi))
    }

    fn __add__(&self, other: &PySymbol) -> PyResult<Self> {
        self.same_modes(other)?;
        Ok(Self { inner: &self.inner + &other.inner })
    }

    fn __sub__(&self, other: &PySymbol) -> PyResult<Self> {
        self.same_modes(other)?;
        Ok(Self { inner: &self.inner - &other.inner })
    }

    fn __mul__(&self, other: &PySymbol) -> PyResult<Self> {
        self.same_modes(other)?;
        Ok(Self { inner: &self.inner * &other.inner })
    }

    fn scale(&self, factor: C64) -> Self {
        Self { inner: self.inner.scale(factor) }
    }

    fn __repr__(&self) -> String {
        format!("Symbol(modes={}, degree={}, terms={})", self.modes(), self.degree(), self.inner.num_terms())
    }
}

impl PySymbol {
    fn same_modes(&self, other: &PySymbol) -> PyResult<()> {
        if self.inner.modes() != other.inner.modes() {
            return Err(PyValueError::new_err("symbols have different mode counts"));
        }
        Ok(())
    }
}

/// Operator on a truncated Fock space.
#[pyclass(name = "Operator", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyOperator {
    inner: FockOperator,
}

#[pymethods]
impl PyOperator {
    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn matrix(&self) -> Vec<Vec<C64>> {
        self.inner.matrix.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    fn adjoint(&self) -> Self {
        Self { inner: self.inner.adjoint() }
    }

    fn hermitian_deviation(&self) -> f64 {
        self.inner.hermitian_deviation()
    }

    fn norm(&self) -> f64 {
        self.inner.operator_norm()
    }

    fn max_abs_diff(&self, other: &PyOperator) -> PyResult<f64> {
        self.same_dim(other)?;
        Ok(self.inner.max_abs_diff(&other.inner))
    }

    /// `<psi_out| self |psi_in>` between truncated coherent states.
    fn coherent_element(&self, psi_out: Vec<C64>, psi_in: Vec<C64>) -> PyResult<C64> {
        let space = self.inner.space();
        let l = coherent_vector(space, &psi_out).map_err(value_err)?;
        let r = coherent_vector(space, &psi_in).map_err(value_err)?;
        Ok(self.inner.matrix_element(&l, &r))
    }

    fn __matmul__(&self, other: &PyOperator) -> PyResult<Self> {
        self.same_dim(other)?;
        Ok(Self { inner: self.inner.compose(&other.inner) })
    }

    fn __add__(&self, other: &PyOperator) -> PyResult<Self> {
        self.same_dim(other)?;
        Ok(Self { inner: self.inner.add(&other.inner) })
    }

    fn __sub__(&self, other: &PyOperator) -> PyResult<Self> {
        self.same_dim(other)?;
        Ok(Self { inner: self.inner.sub(&other.inner) })
    }

    fn __repr__(&self) -> String {
        format!("Operator(dim={})", self.dim())
    }
}

impl PyOperator {
    fn same_dim(&self, other: &PyOperator) -> PyResult<()> {
        if self.inner.space() != other.inner.space() {
            return Err(PyValueError::new_err("operators act on different spaces"));
        }
        Ok(())
    }
}

#[pyfunction]
fn wick_quantize(symbol: &PySymbol, space: &PyModeSpace) -> PyResult<PyOperator> {
    Ok(PyOperator { inner: symbols::wick_quantize(&symbol.inner, &space.inner).map_err(value_err)? })
}

#[pyfunction]
fn toeplitz_quantize(symbol: &PySymbol, space: &PyModeSpace) -> PyResult<PyOperator> {
    Ok(PyOperator { inner: symbols::toeplitz_quantize_poly(&symbol.inner, &space.inner).map_err(value_err)? })
}

/// `e^{-i H t}` for Hermitian `h`.
#[pyfunction]
fn exact_propagator(h: &PyOperator, t: f64) -> PyResult<PyOperator> {
    Ok(PyOperator { inner: propagator::exact_propagator(&h.inner, t).map_err(value_err)? })
}

/// `<psi2|psi1> = exp(conj(psi2) . psi1)` for unnormalized coherent states.
#[pyfunction]
fn overlap(psi2: Vec<C64>, psi1: Vec<C64>) -> PyResult<C64> {
    if psi1.len() != psi2.len() {
        return Err(PyValueError::new_err("amplitude vectors differ in length"));
    }
    Ok(coherent_overlap(&psi2, &psi1))
}

fn parse_construction(name: &str) -> PyResult<Construction> {
    Construction::parse(name).ok_or_else(|| PyValueError::new_err(format!("unknown construction `{name}`")))
}

fn slice_config(
    space: &PyModeSpace,
    t: f64,
    slices: usize,
    psi_in: Vec<C64>,
    psi_out: Vec<C64>,
    radial_order: usize,
    angular_order: usize,
) -> PyResult<SliceConfig> {
    let quad = build_rule(space.inner.num_modes(), radial_order, angular_order).map_err(value_err)?;
    let cfg = SliceConfig::new(t, slices, Arc::new(quad), psi_in, psi_out);
    cfg.validate(&space.inner).map_err(value_err)?;
    Ok(cfg)
}

/// Coherent matrix element of a sliced construction with `slices` steps.
#[pyfunction]
#[pyo3(signature = (construction, symbol, space, t, slices, psi_in, psi_out, radial_order=100, angular_order=64))]
#[allow(clippy::too_many_arguments)]
fn element(
    py: Python<'_>,
    construction: &str,
    symbol: &PySymbol,
    space: &PyModeSpace,
    t: f64,
    slices: usize,
    psi_in: Vec<C64>,
    psi_out: Vec<C64>,
    radial_order: usize,
    angular_order: usize,
) -> PyResult<C64> {
    let c = parse_construction(construction)?;
    let cfg = slice_config(space, t, slices, psi_in, psi_out, radial_order, angular_order)?;
    py.detach(|| c.element(&symbol.inner, &cfg, &space.inner)).map_err(value_err)
}

/// Coherent matrix element of the exact evolution the construction approximates.
#[pyfunction]
#[pyo3(signature = (construction, symbol, space, t, psi_in, psi_out))]
fn oracle_element(
    construction: &str,
    symbol: &PySymbol,
    space: &PyModeSpace,
    t: f64,
    psi_in: Vec<C64>,
    psi_out: Vec<C64>,
) -> PyResult<C64> {
    let c = parse_construction(construction)?;
    let cfg = slice_config(space, t, 1, psi_in, psi_out, 4, 4)?;
    propagator::oracle_element(&symbol.inner, c, &cfg, &space.inner).map_err(value_err)
}

/// Errors against the exact oracle for each slice count. Returns a dict with
/// `oracle`, `fitted_order` and `points` (tuples of slices, element, error, ms).
#[pyfunction]
#[pyo3(signature = (construction, symbol, space, t, slices, psi_in, psi_out, radial_order=100, angular_order=64))]
#[allow(clippy::too_many_arguments)]
fn convergence_study<'py>(
    py: Python<'py>,
    construction: &str,
    symbol: &PySymbol,
    space: &PyModeSpace,
    t: f64,
    slices: Vec<usize>,
    psi_in: Vec<C64>,
    psi_out: Vec<C64>,
    radial_order: usize,
    angular_order: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let c = parse_construction(construction)?;
    let first = slices.first().copied().unwrap_or(1);
    let cfg = slice_config(space, t, first, psi_in, psi_out, radial_order, angular_order)?;
    let report = py
        .detach(|| propagator::convergence_study(&symbol.inner, c, &cfg, &slices, &space.inner))
        .map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("construction", report.construction.name())?;
    out.set_item("oracle", report.oracle)?;
    out.set_item("fitted_order", report.fitted_order)?;
    let points: Vec<(usize, C64, f64, f64)> = report
        .points
        .iter()
        .map(|p| (p.slices, p.element, p.abs_error, p.runtime_ms))
        .collect();
    out.set_item("points", points)?;
    Ok(out)
}

fn load(config: Option<PathBuf>, preset: Option<&str>, overrides: Vec<String>) -> PyResult<experiment::ExperimentConfig> {
    experiment::load_config(config.as_deref(), preset, &overrides, None).map_err(experiment_err)
}

/// Runs an experiment in memory. Returns a dict with `summary`, `csv` and
/// `failures` (threshold violations; empty on success).
#[pyfunction]
#[pyo3(signature = (config=None, preset=None, overrides=Vec::new()))]
fn run_experiment<'py>(
    py: Python<'py>,
    config: Option<PathBuf>,
    preset: Option<&str>,
    overrides: Vec<String>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = load(config, preset, overrides)?;
    let outcome = py.detach(|| experiment::run(&cfg)).map_err(experiment_err)?;
    let out = PyDict::new(py);
    out.set_item("summary", outcome.summary)?;
    out.set_item("csv", outcome.csv)?;
    out.set_item("failures", outcome.failures)?;
    out.set_item("oracle_kind", outcome.oracle_kind)?;
    Ok(out)
}

/// Runs the self-checks. Returns a list of `(name, passed, measured, tolerance, detail)`.
#[pyfunction]
#[pyo3(signature = (config=None, preset=None, overrides=Vec::new()))]
fn verify(
    py: Python<'_>,
    config: Option<PathBuf>,
    preset: Option<&str>,
    overrides: Vec<String>,
) -> PyResult<Vec<(String, bool, f64, f64, String)>> {
    let cfg = load(config, preset, overrides)?;
    let report = py.detach(|| experiment::verify(&cfg)).map_err(experiment_err)?;
    Ok(report
        .checks
        .into_iter()
        .map(|c| (c.name.to_string(), c.passed, c.measured, c.tolerance, c.detail))
        .collect())
}

#[pymodule]
fn fockslice_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModeSpace>()?;
    m.add_class::<PySymbol>()?;
    m.add_class::<PyOperator>()?;
    m.add_function(wrap_pyfunction!(wick_quantize, m)?)?;
    m.add_function(wrap_pyfunction!(toeplitz_quantize, m)?)?;
    m.add_function(wrap_pyfunction!(exact_propagator, m)?)?;
    m.add_function(wrap_pyfunction!(overlap, m)?)?;
    m.add_function(wrap_pyfunction!(element, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_element, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_study, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
