use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kickrotor_core as kr;
use kr::scan::report::scan_csv;
use kr::scan::{EngineKind, EngineSelection, Exclusion, GridConfig, Header};

fn py_err(e: kr::Error) -> PyErr {
    let msg = format!("[{}] {e}", e.category());
    match e {
        kr::Error::Io { .. } => PyOSError::new_err(msg),
        kr::Error::Analysis { .. } => PyRuntimeError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

fn engine_kind(name: &str) -> PyResult<EngineKind> {
    name.parse().map_err(py_err)
}

#[pyclass(name = "KickParams", module = "kickrotor", frozen)]
struct PyKickParams {
    inner: kr::model::KickParams,
}

#[pymethods]
impl PyKickParams {
    #[new]
    fn new(k: f64, kbar: f64, kicks: u32) -> PyResult<Self> {
        let inner = kr::model::KickParams::new(k, kbar, kicks).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn k(&self) -> f64 {
        self.inner.k
    }

    #[getter]
    fn kbar(&self) -> f64 {
        self.inner.kbar
    }

    #[getter]
    fn kicks(&self) -> u32 {
        self.inner.kicks
    }

    /// Detuning from the nearest resonance `2πℓ`.
    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.resonance().epsilon
    }

    #[getter]
    fn ell(&self) -> u32 {
        self.inner.resonance().ell
    }

    /// `k² t / 4`
    #[getter]
    fn resonant_energy(&self) -> f64 {
        self.inner.resonant_energy()
    }

    fn __repr__(&self) -> String {
        format!(
            "KickParams(k={}, kbar={}, kicks={})",
            self.inner.k, self.inner.kbar, self.inner.kicks
        )
    }
}

#[pyclass(name = "QuantumState", module = "kickrotor", frozen)]
struct PyQuantumState {
    inner: kr::quantum::QuantumState,
}

#[pymethods]
impl PyQuantumState {
    /// All amplitude on `n0` in a ladder `|n| <= n_max`.
    #[staticmethod]
    fn delta(n0: i64, beta: f64, n_max: usize) -> PyResult<Self> {
        let inner = kr::quantum::QuantumState::delta(n0, beta, n_max).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }

    fn norm(&self) -> f64 {
        self.inner.norm_sqr()
    }

    fn mean_energy(&self) -> f64 {
        self.inner.mean_energy()
    }

    fn energy_gain(&self, p0: f64) -> f64 {
        self.inner.energy_gain(p0)
    }

    /// `[(n, |ψ_n|²)]` over the ladder.
    fn probabilities(&self) -> Vec<(i64, f64)> {
        self.inner.probabilities().collect()
    }

    fn __len__(&self) -> usize {
        self.inner.amplitudes().len()
    }
}

/// Evolve one atom `(n0, beta)` for `params.kicks` periods.
#[pyfunction]
#[pyo3(signature = (n0, beta, params, se_probability = 0.0, seed = 0))]
fn evolve_atom(
    py: Python<'_>,
    n0: i64,
    beta: f64,
    params: &PyKickParams,
    se_probability: f64,
    seed: u64,
) -> PyResult<PyQuantumState> {
    let noise = kr::quantum::NoiseModel {
        se_probability,
        ..Default::default()
    };
    let params = params.inner;
    let evo = py
        .detach(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            kr::quantum::evolve_atom(kr::model::Atom { n0, beta }, &params, &noise, &mut rng)
        })
        .map_err(py_err)?;
    Ok(PyQuantumState { inner: evo.state })
}

/// Mean energy gain `(mean, stderr)` of a uniform-β ensemble, quantum engine.
#[pyfunction]
#[pyo3(signature = (k, kbar, kicks, atoms = 1000, seed = 0))]
fn quantum_energy(py: Python<'_>, k: f64, kbar: f64, kicks: u32, atoms: usize, seed: u64) -> PyResult<(f64, f64)> {
    let est = py
        .detach(|| {
            let params = kr::model::KickParams::new(k, kbar, kicks)?;
            let spec = kr::model::EnsembleSpec::uniform(atoms, seed);
            kr::quantum::ensemble_energy(&spec, &params, &kr::quantum::NoiseModel::none())
        })
        .map_err(py_err)?;
    Ok((est.mean, est.stderr))
}

/// Mean energy gain `(mean, stderr)` of a uniform-β ensemble, ε-classical map.
#[pyfunction]
#[pyo3(signature = (k, kbar, kicks, trajectories = 100_000, seed = 0))]
fn eclassical_energy(
    py: Python<'_>,
    k: f64,
    kbar: f64,
    kicks: u32,
    trajectories: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let est = py
        .detach(|| {
            let spec = kr::model::EnsembleSpec::uniform(trajectories, seed);
            kr::eclassical::ensemble_energy_map(&spec, k, kbar, kicks, 1)
        })
        .map_err(py_err)?;
    Ok((est.mean, est.stderr))
}

/// `J′(x)` on the pendulum orbit through `(theta0, jprime0)`.
#[pyfunction]
fn pendulum_momentum(x: f64, theta0: f64, jprime0: f64) -> PyResult<f64> {
    let orbit = kr::pendulum::PendulumOrbit::new(theta0, jprime0).map_err(py_err)?;
    Ok(kr::pendulum::pendulum_momentum(x, &orbit))
}

/// `G(x)` by direct quadrature with `nodes` Gauss–Legendre nodes per axis.
#[pyfunction]
#[pyo3(signature = (xs, nodes = 400))]
fn g_values(py: Python<'_>, xs: Vec<f64>, nodes: usize) -> PyResult<Vec<f64>> {
    let quad = kr::pendulum::GQuadrature::new(nodes, nodes).map_err(py_err)?;
    if let Some(bad) = xs.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(PyValueError::new_err(format!("x = {bad} must be finite and >= 0")));
    }
    Ok(py.detach(|| quad.evaluate(&xs)))
}

/// Predicted side-peak detuning `|ε| = x0² / (t² k)`.
#[pyfunction]
#[pyo3(signature = (kicks, k, x0 = kr::pendulum::DEFAULT_X0))]
fn predict_side_peak(kicks: u32, k: f64, x0: f64) -> PyResult<f64> {
    Ok(kr::pendulum::predict_side_peak(kicks, k, x0)
        .map_err(py_err)?
        .epsilon_abs)
}

#[pyclass(name = "ScanConfig", module = "kickrotor")]
struct PyScanConfig {
    inner: kr::scan::ScanConfig,
}

#[pymethods]
impl PyScanConfig {
    /// Four kick counts 12..18 on `kbar ∈ 2π ± 0.35`, step 0.005.
    #[staticmethod]
    #[pyo3(signature = (k = 4.2, engine = "eclassical", seed = 0))]
    fn reproduction(k: f64, engine: &str, seed: u64) -> PyResult<Self> {
        let engine: EngineSelection = engine.parse().map_err(py_err)?;
        Ok(Self {
            inner: kr::scan::ScanConfig::reproduction(k, engine, seed),
        })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let inner = kr::scan::ScanConfig::from_toml_str(text).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner = kr::scan::ScanConfig::load(&path).map_err(py_err)?;
        Ok(Self { inner })
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml_string().map_err(py_err)
    }

    fn config_hash(&self) -> String {
        self.inner.config_hash()
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(py_err)
    }

    #[getter]
    fn get_seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    #[getter]
    fn get_k(&self) -> f64 {
        self.inner.k
    }

    #[setter]
    fn set_k(&mut self, k: f64) {
        self.inner.k = k;
    }

    #[getter]
    fn get_kicks(&self) -> Vec<u32> {
        self.inner.kicks.clone()
    }

    #[setter]
    fn set_kicks(&mut self, kicks: Vec<u32>) {
        self.inner.kicks = kicks;
    }

    #[getter]
    fn get_atoms(&self) -> usize {
        self.inner.ensemble.atoms
    }

    #[setter]
    fn set_atoms(&mut self, atoms: usize) {
        self.inner.ensemble.atoms = atoms;
    }

    #[getter]
    fn get_trajectories(&self) -> usize {
        self.inner.eclassical.trajectories
    }

    #[setter]
    fn set_trajectories(&mut self, trajectories: usize) {
        self.inner.eclassical.trajectories = trajectories;
    }

    #[getter]
    fn get_engine(&self) -> String {
        match self.inner.engine {
            EngineSelection::Quantum => "quantum",
            EngineSelection::Eclassical => "eclassical",
            EngineSelection::Both => "both",
        }
        .to_string()
    }

    #[setter]
    fn set_engine(&mut self, engine: &str) -> PyResult<()> {
        self.inner.engine = engine.parse().map_err(py_err)?;
        Ok(())
    }

    /// `kbar ∈ 2πℓ ± half_width` in steps of `step`.
    #[pyo3(signature = (half_width, step, ell = 1))]
    fn set_resonance_grid(&mut self, half_width: f64, step: f64, ell: u32) {
        self.inner.grid = GridConfig::around_resonance(ell, half_width, step);
    }

    fn set_kbar_values(&mut self, values: Vec<f64>) {
        self.inner.grid = GridConfig::kbar_values(values);
    }

    fn kbar_grid(&self) -> PyResult<Vec<f64>> {
        self.inner.kbar_grid().map_err(py_err)
    }
}

#[pyclass(name = "ScanResult", module = "kickrotor", frozen)]
struct PyScanResult {
    inner: kr::scan::ScanResult,
    header: Header,
}

#[pymethods]
impl PyScanResult {
    #[getter]
    fn k(&self) -> f64 {
        self.inner.k
    }

    fn __len__(&self) -> usize {
        self.inner.rows().len()
    }

    fn kicks(&self) -> Vec<u32> {
        self.inner.kicks()
    }

    fn engines(&self) -> Vec<&'static str> {
        self.inner.engines().into_iter().map(EngineKind::name).collect()
    }

    /// Rows as dicts with the CSV column names.
    fn rows<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .rows()
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("kbar", r.kbar)?;
                d.set_item("epsilon", r.epsilon)?;
                d.set_item("period_us", r.period_us)?;
                d.set_item("kicks", r.kicks)?;
                d.set_item("engine", r.engine.name())?;
                d.set_item("mean_energy", r.mean_energy)?;
                d.set_item("ratio", r.ratio)?;
                d.set_item("stderr", r.stderr)?;
                d.set_item("atoms", r.atoms)?;
                d.set_item("seed", r.seed)?;
                Ok(d)
            })
            .collect()
    }

    /// `[(epsilon, ratio, ratio_stderr)]` for one kick count and engine.
    fn curve(&self, kicks: u32, engine: &str) -> PyResult<Vec<(f64, f64, f64)>> {
        let engine = engine_kind(engine)?;
        Ok(self
            .inner
            .curve(kicks, engine)
            .iter()
            .map(|r| (r.epsilon, r.ratio, r.ratio_stderr()))
            .collect())
    }

    fn to_csv(&self) -> String {
        scan_csv(&self.header, &self.inner)
    }
}

#[pyfunction]
fn run_scan(py: Python<'_>, config: &PyScanConfig) -> PyResult<PyScanResult> {
    let cfg = config.inner.clone();
    let inner = py.detach(|| kr::scan::run_scan(&cfg)).map_err(py_err)?;
    let header = Header {
        config_hash: cfg.config_hash(),
        seed: cfg.seed,
        k: Some(cfg.k),
    };
    Ok(PyScanResult { inner, header })
}

/// `(kicks, left_eps, right_eps, fwhm)`
type PeakRow = (u32, Option<f64>, Option<f64>, Option<f64>);

#[pyclass(name = "PeakReport", module = "kickrotor", frozen)]
struct PyPeakReport {
    inner: kr::scan::PeakReport,
}

#[pymethods]
impl PyPeakReport {
    /// Per kick count: `(kicks, left_eps, right_eps, fwhm)`, `None` where missing.
    fn entries(&self) -> Vec<PeakRow> {
        self.inner
            .entries
            .iter()
            .map(|e| (e.kicks, e.left.map(|p| p.epsilon), e.right.map(|p| p.epsilon), e.fwhm))
            .collect()
    }

    /// `(x0, stderr, max_relative_residual)`.
    fn fit_x0(&self) -> PyResult<(f64, f64, f64)> {
        let fit = kr::scan::fit_x0(&self.inner).map_err(py_err)?;
        Ok((fit.x0, fit.stderr, fit.max_relative_residual))
    }
}

#[pyfunction]
#[pyo3(signature = (result, engine = "eclassical", exclusion = None, x0 = kr::pendulum::DEFAULT_X0))]
fn find_side_peaks(result: &PyScanResult, engine: &str, exclusion: Option<f64>, x0: f64) -> PyResult<PyPeakReport> {
    let exclusion = match exclusion {
        Some(w) => Exclusion::Fixed(w),
        None => Exclusion::Predicted { x0 },
    };
    let inner = kr::scan::find_side_peaks(&result.inner, engine_kind(engine)?, exclusion).map_err(py_err)?;
    Ok(PyPeakReport { inner })
}

#[pymodule]
fn kickrotor(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKickParams>()?;
    m.add_class::<PyQuantumState>()?;
    m.add_class::<PyScanConfig>()?;
    m.add_class::<PyScanResult>()?;
    m.add_class::<PyPeakReport>()?;
    m.add_function(wrap_pyfunction!(evolve_atom, m)?)?;
    m.add_function(wrap_pyfunction!(quantum_energy, m)?)?;
    m.add_function(wrap_pyfunction!(eclassical_energy, m)?)?;
    m.add_function(wrap_pyfunction!(pendulum_momentum, m)?)?;
    m.add_function(wrap_pyfunction!(g_values, m)?)?;
    m.add_function(wrap_pyfunction!(predict_side_peak, m)?)?;
    m.add_function(wrap_pyfunction!(run_scan, m)?)?;
    m.add_function(wrap_pyfunction!(find_side_peaks, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
