//! Python bindings: spin operators, the spin-cat code, closed-form fidelities,
//! density matrices and the experiment runner.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;

use spincat::analytics;
use spincat::channels;
use spincat::code;
use spincat::harness::{self, ExperimentConfig};
use spincat::linalg::CMatrix;
use spincat::spinops::{self, Basis, Operator};
use spincat::state::DensityMatrix as CoreDensity;

type Rows = Vec<Vec<Complex64>>;

fn err(e: spincat::Error) -> PyErr {
    match e {
        spincat::Error::Config(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn rows(m: &CMatrix) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn matrix(rows: &Rows) -> PyResult<CMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// A spin-J manifold with basis ordered by descending m.
#[pyclass(name = "SpinManifold", frozen)]
struct PySpinManifold(spinops::SpinManifold);

#[pymethods]
impl PySpinManifold {
    #[new]
    #[pyo3(signature = (j = 2.5, g_j = 1.2))]
    fn new(j: f64, g_j: f64) -> PyResult<Self> {
        spinops::SpinManifold::new(j, g_j).map(Self).map_err(err)
    }

    #[getter]
    fn j(&self) -> f64 {
        self.0.j()
    }

    #[getter]
    fn g_j(&self) -> f64 {
        self.0.g_j()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn m_values(&self) -> Vec<f64> {
        self.0.m_values()
    }

    fn labels(&self) -> Vec<String> {
        self.0.labels()
    }

    /// Jx, Jy, Jz as nested lists.
    fn angular_momentum(&self) -> (Rows, Rows, Rows) {
        let ops = spinops::angular_momentum_ops(&self.0);
        (rows(ops.jx.matrix()), rows(ops.jy.matrix()), rows(ops.jz.matrix()))
    }

    /// `exp(-i angle n·J)`.
    fn rotation(&self, axis: [f64; 3], angle: f64) -> PyResult<Rows> {
        spinops::su2_rotation(&self.0, axis, angle).map(|u| rows(u.matrix())).map_err(err)
    }

    fn encode_unitary(&self) -> Rows {
        rows(code::encode_unitary(&self.0).matrix())
    }

    /// The two spin-cat codewords as amplitude lists.
    fn codewords(&self) -> PyResult<(Vec<Complex64>, Vec<Complex64>)> {
        let pair = code::spin_cat_codewords(&self.0).map_err(err)?;
        Ok((pair.zero.amplitudes().iter().copied().collect(), pair.one.amplitudes().iter().copied().collect()))
    }

    /// Knill-Laflamme table for `{I, Jz, ..., Jz^max_order}` as a dict.
    fn kl_report(&self, py: Python<'_>, max_order: u32) -> PyResult<Py<PyAny>> {
        let pair = code::spin_cat_codewords(&self.0).map_err(err)?;
        let report = code::kl_conditions(&pair, &channels::error_operator_set(&self.0, max_order)).map_err(err)?;
        to_py(py, &serde_json::to_value(report).map_err(|e| PyRuntimeError::new_err(e.to_string()))?)
    }

    fn __repr__(&self) -> String {
        format!("SpinManifold(j={}, g_j={})", self.0.j(), self.0.g_j())
    }
}

#[pyclass(name = "DensityMatrix", frozen)]
struct PyDensityMatrix(CoreDensity);

#[pymethods]
impl PyDensityMatrix {
    #[new]
    fn new(manifold: &PySpinManifold, rows: Rows) -> PyResult<Self> {
        CoreDensity::from_matrix(matrix(&rows)?, Basis::Spin(manifold.0)).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_ket(manifold: &PySpinManifold, amplitudes: Vec<Complex64>) -> PyResult<Self> {
        let v = spincat::linalg::CVector::from_vec(amplitudes);
        let ket = spincat::state::Ket::new(v, Basis::Spin(manifold.0)).map_err(err)?;
        Ok(Self(ket.to_density()))
    }

    #[staticmethod]
    fn maximally_mixed(manifold: &PySpinManifold) -> Self {
        Self(CoreDensity::maximally_mixed(Basis::Spin(manifold.0)))
    }

    fn matrix(&self) -> Rows {
        rows(self.0.matrix())
    }

    fn trace(&self) -> f64 {
        self.0.trace()
    }

    fn purity(&self) -> f64 {
        self.0.purity()
    }

    fn populations(&self) -> Vec<f64> {
        self.0.populations()
    }

    fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigenvalues()
    }

    /// Gaussian Jz dephasing with phase width `sigma_phi`.
    fn dephase(&self, sigma_phi: f64) -> PyResult<Self> {
        channels::dephase(&self.0, sigma_phi).map(Self).map_err(err)
    }

    fn evolve(&self, unitary: Rows) -> PyResult<Self> {
        let u = Operator::new(matrix(&unitary)?, self.0.basis().clone()).map_err(err)?;
        Ok(Self(self.0.evolve(&u)))
    }

    fn fidelity(&self, other: &PyDensityMatrix) -> PyResult<f64> {
        analytics::uhlmann_fidelity(&self.0, &other.0).map_err(err)
    }
}

#[pyfunction]
#[pyo3(signature = (chi, g_j = 2.0))]
fn f_physical(chi: f64, g_j: f64) -> f64 {
    analytics::f_physical(chi, g_j)
}

#[pyfunction]
#[pyo3(signature = (chi, g_j = 1.2))]
fn f_encoded(chi: f64, g_j: f64) -> f64 {
    analytics::f_encoded(chi, g_j)
}

#[pyfunction]
#[pyo3(signature = (chi, g_j = 1.2))]
fn f_corrected(chi: f64, g_j: f64) -> f64 {
    analytics::f_corrected(chi, g_j)
}

#[pyfunction]
#[pyo3(signature = (chi, delta, g_j = 1.2))]
fn f_corrected_with_delta(chi: f64, delta: f64, g_j: f64) -> f64 {
    analytics::f_corrected_with_delta(chi, delta, g_j)
}

#[pyfunction]
#[pyo3(signature = (sigma_phi, g_j = 1.2))]
fn chi_from_sigma_phi(sigma_phi: f64, g_j: f64) -> f64 {
    channels::chi_from_sigma_phi(sigma_phi, g_j)
}

/// Runs an experiment described by a TOML config; returns `{"summary": ..., "tables": ...}`.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_toml: &str) -> PyResult<Py<PyAny>> {
    let cfg = ExperimentConfig::from_toml_str(config_toml).map_err(err)?;
    let record = py.detach(|| harness::run(&cfg)).map_err(err)?;
    let value = serde_json::to_value(&record).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &value)
}

#[pyfunction]
fn config_schema(py: Python<'_>) -> PyResult<Py<PyAny>> {
    to_py(py, &harness::config_schema())
}

#[pymodule]
fn pyspincat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", harness::VERSION)?;
    m.add_class::<PySpinManifold>()?;
    m.add_class::<PyDensityMatrix>()?;
    m.add_function(wrap_pyfunction!(f_physical, m)?)?;
    m.add_function(wrap_pyfunction!(f_encoded, m)?)?;
    m.add_function(wrap_pyfunction!(f_corrected, m)?)?;
    m.add_function(wrap_pyfunction!(f_corrected_with_delta, m)?)?;
    m.add_function(wrap_pyfunction!(chi_from_sigma_phi, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(config_schema, m)?)?;
    Ok(())
}
