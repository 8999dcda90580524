//! Python bindings for `nhse-core`.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use nhse_core::c64;
use nhse_core::entanglement::{self, EntropyCurve, SteadyOptions};
use nhse_core::localization::{self, WindowPolicy};
use nhse_core::model::{self, Decay, DenseMatrix, ModelParams};
use nhse_core::spectral::{self, PolylogOptions};
use nhse_core::sweep::{self, TaskKind};

create_exception!(nhse, NhseError, PyException);

fn err(e: nhse_core::Error) -> PyErr {
    NhseError::new_err(e.to_string())
}

fn decay(alpha: f64) -> Decay {
    if alpha.is_infinite() {
        Decay::NearestNeighbor
    } else {
        Decay::Power(alpha)
    }
}

fn rows(m: &DenseMatrix) -> Vec<Vec<c64>> {
    m.to_row_major()
        .chunks(m.dim())
        .map(<[c64]>::to_vec)
        .collect()
}

/// Open chain with couplings `J_L / l^alpha` (leftward) and `J_R / l^alpha`.
/// `alpha = inf` keeps nearest-neighbour hopping only.
#[pyclass(name = "Model", frozen)]
struct PyModel(ModelParams);

#[pymethods]
impl PyModel {
    #[new]
    fn new(j_left: c64, j_right: c64, alpha: f64, size: usize) -> PyResult<Self> {
        ModelParams::new(j_left, j_right, decay(alpha), size)
            .map(Self)
            .map_err(err)
    }

    /// Real couplings `J_L = e^g`, `J_R = e^-g`.
    #[staticmethod]
    fn from_g(g: f64, alpha: f64, size: usize) -> PyResult<Self> {
        ModelParams::from_g(g, decay(alpha), size)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn j_left(&self) -> c64 {
        self.0.j_left
    }

    #[getter]
    fn j_right(&self) -> c64 {
        self.0.j_right
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.decay.exponent().unwrap_or(f64::INFINITY)
    }

    #[getter]
    fn size(&self) -> usize {
        self.0.size
    }

    #[getter]
    fn g(&self) -> f64 {
        self.0.g()
    }

    fn with_size(&self, size: usize) -> PyResult<Self> {
        self.0.with_size(size).map(Self).map_err(err)
    }

    /// Dense Hamiltonian as nested lists; `part` is "full", "hn" or "nonlocal".
    #[pyo3(signature = (part = "full"))]
    fn hamiltonian(&self, part: &str) -> PyResult<Vec<Vec<c64>>> {
        let m = match part {
            "full" => model::build_full(&self.0),
            "hn" => model::build_hn(&self.0),
            "nonlocal" => model::build_nonlocal(&self.0),
            other => return Err(NhseError::new_err(format!("unknown part '{other}'"))),
        }
        .map_err(err)?;
        Ok(rows(&m))
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(j_left={}, j_right={}, alpha={}, size={})",
            self.0.j_left, self.0.j_right, self.0.decay, self.0.size
        )
    }
}

/// Eigenpairs sorted by real part.
#[pyclass(name = "Spectrum", frozen)]
struct PySpectrum(spectral::Spectrum);

#[pymethods]
impl PySpectrum {
    #[getter]
    fn eigenvalues(&self) -> Vec<c64> {
        self.0.eigenvalues.clone()
    }

    #[getter]
    fn is_complex(&self) -> Vec<bool> {
        self.0.is_complex.clone()
    }

    #[getter]
    fn complex_fraction(&self) -> f64 {
        spectral::complex_fraction(&self.0)
    }

    #[getter]
    fn reality_tol(&self) -> f64 {
        self.0.reality_tol
    }

    #[getter]
    fn max_residual(&self) -> f64 {
        self.0.max_residual
    }

    fn eigenvector(&self, k: usize) -> PyResult<Vec<c64>> {
        if k >= self.0.len() {
            return Err(pyo3::exceptions::PyIndexError::new_err(k));
        }
        Ok(self.0.eigenvector(k))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyfunction]
#[pyo3(signature = (model, reality_tol = None))]
fn eig(py: Python<'_>, model: &PyModel, reality_tol: Option<f64>) -> PyResult<PySpectrum> {
    let p = model.0.clone();
    py.detach(|| model::build_full(&p).and_then(|h| spectral::eig_dense(&h, reality_tol)))
        .map(PySpectrum)
        .map_err(err)
}

/// Eigenpairs of an arbitrary square matrix given as nested lists.
#[pyfunction]
#[pyo3(signature = (matrix, reality_tol = None))]
fn eig_matrix(matrix: Vec<Vec<c64>>, reality_tol: Option<f64>) -> PyResult<PySpectrum> {
    let n = matrix.len();
    let flat: Vec<c64> = matrix.into_iter().flatten().collect();
    DenseMatrix::from_row_major(n, &flat)
        .and_then(|h| spectral::eig_dense(&h, reality_tol))
        .map(PySpectrum)
        .map_err(err)
}

#[pyfunction]
fn predict_critical_length(alpha: f64, g: f64) -> PyResult<Option<f64>> {
    spectral::predict_critical_length(alpha, g).map_err(err)
}

/// Returns `(complex_fractions, critical_size)`.
#[pyfunction]
#[pyo3(signature = (model, sizes, threshold = 0.0))]
fn scan_critical_length(
    py: Python<'_>,
    model: &PyModel,
    sizes: Vec<usize>,
    threshold: f64,
) -> PyResult<(Vec<f64>, Option<usize>)> {
    let p = model.0.clone();
    let scan = py
        .detach(|| spectral::scan_critical_length(&p, &sizes, threshold))
        .map_err(err)?;
    Ok((scan.complex_fraction, scan.critical))
}

#[pyfunction]
fn polylog(alpha: f64, z: c64) -> PyResult<c64> {
    spectral::polylog(alpha, z, PolylogOptions::default())
        .map(|p| p.value)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (model, base = None, n_k = 4096))]
fn winding_number(model: &PyModel, base: Option<c64>, n_k: usize) -> PyResult<i64> {
    spectral::winding_number(&model.0, base, n_k, PolylogOptions::curve()).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (psi, trim = 0.1))]
fn fit_localization_length<'py>(
    py: Python<'py>,
    psi: Vec<c64>,
    trim: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let fit = localization::fit_localization_length(&psi, WindowPolicy::Trim(trim)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("xi", fit.xi)?;
    d.set_item("fit_quality", fit.fit_quality)?;
    d.set_item("window", fit.window)?;
    d.set_item("flagged", fit.flagged)?;
    Ok(d)
}

#[pyfunction]
fn analytic_xi(model: &PyModel) -> PyResult<f64> {
    localization::analytic_xi(&model.0).map_err(err)
}

/// Half-filled steady-state entropies; all cuts `1..L-1` when `cuts` is omitted.
#[pyfunction]
#[pyo3(signature = (model, cuts = None))]
fn steady_state_entropy<'py>(
    py: Python<'py>,
    model: &PyModel,
    cuts: Option<Vec<usize>>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = model.0.clone();
    let cuts = cuts.unwrap_or_else(|| (1..p.size).collect());
    let s = py
        .detach(|| entanglement::steady_state_entropy(&p, &cuts, SteadyOptions::default()))
        .map_err(err)?;
    let method = match s.method {
        entanglement::SteadyMethod::Projection => "projection",
        entanglement::SteadyMethod::ProjectionTieBreak => "projection_tie_break",
        entanglement::SteadyMethod::TimeAverage => "time_average",
    };
    let d = PyDict::new(py);
    d.set_item("method", method)?;
    d.set_item("gap", s.gap)?;
    d.set_item("cuts", s.cuts)?;
    d.set_item("entropy", s.entropy)?;
    Ok(d)
}

/// Central charge fit of `S(l)` for `l = 1..L-1`. Returns `(c, s0, residual)`.
#[pyfunction]
#[pyo3(signature = (entropy, trim = 0.1))]
fn cft_fit(entropy: Vec<f64>, trim: f64) -> PyResult<(f64, f64, f64)> {
    let size = entropy.len() + 1;
    let curve = EntropyCurve {
        size,
        cuts: (1..size).collect(),
        entropy,
    };
    let fit = entanglement::cft_fit(&curve, trim).map_err(err)?;
    Ok((fit.c, fit.s0, fit.residual))
}

/// Runs a `key = value` sweep configuration and returns the records as JSON.
#[pyfunction]
#[pyo3(signature = (config, task = None))]
fn run_sweep(py: Python<'_>, config: &str, task: Option<&str>) -> PyResult<String> {
    let task = task.map(TaskKind::parse).transpose().map_err(err)?;
    let entries = sweep::parse_entries(config).map_err(err)?;
    let cfg = sweep::build_config(task, &entries).map_err(err)?;
    let report = py.detach(|| sweep::run_sweep(&cfg)).map_err(err)?;
    let mut buf = Vec::new();
    sweep::write_json(&report.records, &mut buf).map_err(err)?;
    String::from_utf8(buf).map_err(|e| NhseError::new_err(e.to_string()))
}

#[pymodule]
fn nhse(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NhseError", m.py().get_type::<NhseError>())?;
    m.add_class::<PyModel>()?;
    m.add_class::<PySpectrum>()?;
    m.add_function(wrap_pyfunction!(eig, m)?)?;
    m.add_function(wrap_pyfunction!(eig_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(predict_critical_length, m)?)?;
    m.add_function(wrap_pyfunction!(scan_critical_length, m)?)?;
    m.add_function(wrap_pyfunction!(polylog, m)?)?;
    m.add_function(wrap_pyfunction!(winding_number, m)?)?;
    m.add_function(wrap_pyfunction!(fit_localization_length, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_xi, m)?)?;
    m.add_function(wrap_pyfunction!(steady_state_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(cft_fit, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
