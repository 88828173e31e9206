//! Python bindings. Fields cross the boundary as lists of Python `complex`.

use std::collections::HashMap;
use std::path::PathBuf;

use breatherlab::breathers::{self, BreatherSpec};
use breatherlab::checkpoint::Checkpoint;
use breatherlab::config::GrowthScanConfig;
use breatherlab::diagnostics;
use breatherlab::experiments::{self, InvariantOptions};
use breatherlab::propagator::{self, SpectralPair};
use breatherlab::solver::{self, Scheme, SolverConfig};
use breatherlab::{symbols, Error, Grid1D, PerturbationField};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

create_exception!(breatherlab, BlowupError, PyRuntimeError, "H^s norm crossed the blow-up threshold.");
create_exception!(breatherlab, PicardDivergenceError, PyRuntimeError, "Picard iteration failed to converge.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::BlowupDetected { .. } => BlowupError::new_err(e.to_string()),
        Error::PicardDivergence { .. } => PicardDivergenceError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        Error::Csv(_) | Error::Image(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Grid", module = "breatherlab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid {
    inner: Grid1D,
}

impl PyGrid {
    fn field(&self, samples: Vec<Complex64>) -> PyResult<PerturbationField> {
        PerturbationField::new(self.inner.clone(), samples).map_err(to_py)
    }
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(length: f64, points: usize) -> PyResult<Self> {
        Ok(Self { inner: Grid1D::new(length, points).map_err(to_py)? })
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.length()
    }

    #[getter]
    fn points(&self) -> usize {
        self.inner.points()
    }

    #[getter]
    fn dx(&self) -> f64 {
        self.inner.dx()
    }

    fn xs(&self) -> Vec<f64> {
        self.inner.xs()
    }

    fn frequencies(&self) -> Vec<f64> {
        self.inner.frequencies()
    }

    /// Index of wavenumber `k`; raises ValueError naming the nearest
    /// representable one otherwise.
    fn find_frequency(&self, k: f64) -> PyResult<usize> {
        self.inner.find_frequency(k).map_err(to_py)
    }

    /// Continuum-normalized transform `dx (-1)^j FFT(w)`.
    fn forward(&self, samples: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        Ok(self.field(samples)?.to_spectral().coefficients().to_vec())
    }

    fn hs_norm(&self, samples: Vec<Complex64>, s: f64) -> PyResult<f64> {
        self.field(samples)?.hs_norm(s).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Grid(length={}, points={})", self.inner.length(), self.inner.points())
    }
}

#[pyclass(name = "Breather", module = "breatherlab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBreather {
    spec: BreatherSpec,
}

#[pymethods]
impl PyBreather {
    #[staticmethod]
    fn stokes() -> Self {
        Self { spec: BreatherSpec::stokes() }
    }

    #[staticmethod]
    fn peregrine() -> Self {
        Self { spec: BreatherSpec::peregrine() }
    }

    #[staticmethod]
    fn kuznetsov_ma(a: f64) -> PyResult<Self> {
        Ok(Self { spec: BreatherSpec::kuznetsov_ma(a).map_err(to_py)? })
    }

    #[staticmethod]
    fn akhmediev(a: f64) -> PyResult<Self> {
        Ok(Self { spec: BreatherSpec::akhmediev(a).map_err(to_py)? })
    }

    #[staticmethod]
    fn plane_wave(c: f64, v: f64, gamma: f64) -> PyResult<Self> {
        Ok(Self { spec: BreatherSpec::plane_wave(c, v, gamma).map_err(to_py)? })
    }

    /// Copy with the offset shifted to `W(t - t0, x - x0)`.
    fn shifted(&self, t0: f64, x0: f64) -> Self {
        Self { spec: self.spec.shifted(t0, x0) }
    }

    fn value_at(&self, t: f64, x: f64) -> Complex64 {
        self.spec.value_at(t, x)
    }

    fn offset_at(&self, t: f64, x: f64) -> Complex64 {
        self.spec.offset_at(t, x)
    }

    fn sample_offset(&self, grid: &PyGrid, t: f64) -> PyResult<Vec<Complex64>> {
        breathers::check_commensurate(&self.spec, grid.inner.length()).map_err(to_py)?;
        Ok(breathers::offset(&self.spec).map_err(to_py)?.sample(&grid.inner, t).into_samples())
    }

    #[getter]
    fn time_period(&self) -> Option<f64> {
        self.spec.time_period()
    }

    #[getter]
    fn space_period(&self) -> Option<f64> {
        self.spec.space_period()
    }

    /// Finite-difference residual of the equation on the grid at time `t`.
    fn residual(&self, grid: &PyGrid, t: f64) -> PyResult<f64> {
        breathers::residual(&self.spec, &grid.inner, t).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Breather({})", self.spec)
    }
}

#[pyclass(name = "SolverConfig", module = "breatherlab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySolverConfig {
    inner: SolverConfig,
}

#[pymethods]
impl PySolverConfig {
    #[new]
    #[pyo3(signature = (
        dt = 1e-3,
        t_end = 1.0,
        scheme = "picard_duhamel",
        linear = false,
        project_mean = false,
        s = 1.0,
        picard_tol = 1e-12,
        picard_max_iters = 50,
        blowup_threshold = 1e6,
        snapshot_interval = 0.05,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        dt: f64,
        t_end: f64,
        scheme: &str,
        linear: bool,
        project_mean: bool,
        s: f64,
        picard_tol: f64,
        picard_max_iters: usize,
        blowup_threshold: f64,
        snapshot_interval: f64,
    ) -> PyResult<Self> {
        let scheme: Scheme = scheme.parse().map_err(to_py)?;
        let inner = SolverConfig {
            dt,
            t_end,
            picard_tol,
            picard_max_iters,
            s,
            blowup_threshold,
            scheme,
            linear,
            project_mean,
            snapshot_interval,
        };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    #[getter]
    fn t_end(&self) -> f64 {
        self.inner.t_end
    }

    #[getter]
    fn scheme(&self) -> &'static str {
        self.inner.scheme.name()
    }

    #[getter]
    fn linear(&self) -> bool {
        self.inner.linear
    }

    #[getter]
    fn s(&self) -> f64 {
        self.inner.s
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Integrates `w0` from `t0` to `config.t_end`; returns `(times, fields)`.
#[pyfunction]
#[pyo3(signature = (grid, w0, config, t0 = 0.0))]
fn simulate(
    py: Python<'_>,
    grid: &PyGrid,
    w0: Vec<Complex64>,
    config: &PySolverConfig,
    t0: f64,
) -> PyResult<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let w0 = grid.field(w0)?;
    let traj = py.detach(|| solver::run_from(&w0, t0, &config.inner)).map_err(|f| to_py(f.error))?;
    let times = traj.times();
    Ok((times, traj.snapshots.into_iter().map(|s| s.field.into_samples()).collect()))
}

/// Mass, energy, momentum, norms and zero modes of a field; with `exact`,
/// also the relative shift-minimized error and the shift.
#[pyfunction]
#[pyo3(signature = (grid, samples, t = 0.0, s = 1.0, exact = None))]
fn diagnostics_record(
    grid: &PyGrid,
    samples: Vec<Complex64>,
    t: f64,
    s: f64,
    exact: Option<&PyBreather>,
) -> PyResult<HashMap<&'static str, Option<f64>>> {
    let w = grid.field(samples)?;
    let exact = exact.map(|b| breathers::offset(&b.spec)).transpose().map_err(to_py)?;
    let r = diagnostics::compute_record(&w, t, s, exact.as_ref()).map_err(to_py)?;
    Ok(HashMap::from([
        ("t", Some(r.t)),
        ("mass_w", Some(r.mass_w)),
        ("energy_w", Some(r.energy_w)),
        ("momentum_w", Some(r.momentum_w)),
        ("hs_norm", Some(r.hs_norm)),
        ("linf", Some(r.linf)),
        ("zero_mode_re", Some(r.zero_mode_re)),
        ("zero_mode_im", Some(r.zero_mode_im)),
        ("err_vs_exact", r.err_vs_exact),
        ("shift_x0", r.shift_x0),
    ]))
}

#[pyfunction]
#[pyo3(signature = (grid, w, reference, s = 1.0))]
fn hs_distance_min_shift(grid: &PyGrid, w: Vec<Complex64>, reference: Vec<Complex64>, s: f64) -> PyResult<(f64, f64)> {
    diagnostics::hs_distance_min_shift(&grid.field(w)?, &grid.field(reference)?, s).map_err(to_py)
}

/// Exact linear flow (`G = 0`) over time `t`.
#[pyfunction]
fn homogeneous_step(grid: &PyGrid, samples: Vec<Complex64>, t: f64) -> PyResult<Vec<Complex64>> {
    let state = SpectralPair::from_field(&grid.field(samples)?);
    Ok(propagator::homogeneous_step(&state, t).to_field().into_samples())
}

/// Dealiased nonlinearity `G[w]` sampled on the grid.
#[pyfunction]
fn source(grid: &PyGrid, samples: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    Ok(breatherlab::nonlinearity::evaluate_g(&grid.field(samples)?).into_field().into_samples())
}

#[pyfunction]
fn kernel_c(mu: f64, t: f64) -> f64 {
    symbols::kernel_c(mu, t)
}

#[pyfunction]
fn kernel_s(mu: f64, t: f64) -> f64 {
    symbols::kernel_s(mu, t)
}

/// Rows `(k, regime, fitted, theory, abs_error)`.
#[pyfunction]
#[pyo3(signature = (ks, grid = None, amplitude = 1e-8, linear = true, dt = 1e-2, workers = 0))]
fn growth_scan(
    py: Python<'_>,
    ks: Vec<f64>,
    grid: Option<&PyGrid>,
    amplitude: f64,
    linear: bool,
    dt: f64,
    workers: usize,
) -> PyResult<Vec<(f64, String, f64, f64, f64)>> {
    let grid = match grid {
        Some(g) => g.inner.clone(),
        None => Grid1D::new(20.0 * std::f64::consts::PI, 256).map_err(to_py)?,
    };
    let scan = GrowthScanConfig { ks, amplitude, ..GrowthScanConfig::default() };
    let solver = SolverConfig { dt, linear, ..SolverConfig::default() };
    let rows = py.detach(|| experiments::growth_scan(&grid, &scan, &solver, workers)).map_err(to_py)?;
    Ok(rows.into_iter().map(|r| (r.k, r.regime.to_string(), r.fitted, r.theory, r.abs_error)).collect())
}

/// Runs the property suite; returns `(passed, report)`.
#[pyfunction]
#[pyo3(signature = (seed = 0, inject_fault = false))]
fn check_invariants(py: Python<'_>, seed: u64, inject_fault: bool) -> PyResult<(bool, String)> {
    let options = InvariantOptions { seed, inject_unguarded_kernels: inject_fault, ..InvariantOptions::default() };
    let report = py.detach(|| experiments::check_invariants(&options)).map_err(to_py)?;
    Ok((report.passed(), report.to_string()))
}

#[pyfunction]
#[pyo3(signature = (path, grid, samples, t, s = 1.0, scheme = "picard_duhamel"))]
fn save_checkpoint(
    path: PathBuf,
    grid: &PyGrid,
    samples: Vec<Complex64>,
    t: f64,
    s: f64,
    scheme: &str,
) -> PyResult<()> {
    let scheme: Scheme = scheme.parse().map_err(to_py)?;
    Checkpoint { t, s, scheme, field: grid.field(samples)? }.save(&path).map_err(to_py)
}

/// Returns `(grid, samples, t, s, scheme)`.
#[pyfunction]
fn load_checkpoint(path: PathBuf) -> PyResult<(PyGrid, Vec<Complex64>, f64, f64, &'static str)> {
    let c = Checkpoint::load(&path).map_err(to_py)?;
    let grid = PyGrid { inner: c.field.grid().clone() };
    Ok((grid, c.field.into_samples(), c.t, c.s, c.scheme.name()))
}

#[pymodule(name = "breatherlab")]
fn breatherlab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("BlowupError", m.py().get_type::<BlowupError>())?;
    m.add("PicardDivergenceError", m.py().get_type::<PicardDivergenceError>())?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyBreather>()?;
    m.add_class::<PySolverConfig>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(diagnostics_record, m)?)?;
    m.add_function(wrap_pyfunction!(hs_distance_min_shift, m)?)?;
    m.add_function(wrap_pyfunction!(homogeneous_step, m)?)?;
    m.add_function(wrap_pyfunction!(source, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_c, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_s, m)?)?;
    m.add_function(wrap_pyfunction!(growth_scan, m)?)?;
    m.add_function(wrap_pyfunction!(check_invariants, m)?)?;
    m.add_function(wrap_pyfunction!(save_checkpoint, m)?)?;
    m.add_function(wrap_pyfunction!(load_checkpoint, m)?)?;
    Ok(())
}
