//! Python bindings: the `qgv` extension module.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qgv_core::certify::{self, VerificationResult as CoreResult};
use qgv_core::channels::{self, NoiseKind, NoiseModel, ProcessMatrix as CoreChi, QuantumChannel};
use qgv_core::io;
use qgv_core::linalg::CMat;
use qgv_core::simulate::{self, CountTable as CoreCounts, RngSpec};
use qgv_core::tomography::{self, MleOptions};
use qgv_core::verification::{pass_probability, UnitaryGate, VerificationStrategy};
use qgv_core::Error;

create_exception!(qgv, NotCertifiableError, PyValueError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NotCertifiable(msg) => NotCertifiableError::new_err(msg),
        Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for qgv_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn to_cmat(rows: Vec<Vec<Complex64>>) -> PyResult<CMat> {
    CMat::from_rows(&rows).py()
}

/// An ideal unitary gate.
#[pyclass(frozen, skip_from_py_object, module = "qgv")]
#[derive(Clone)]
struct Gate(UnitaryGate);

#[pymethods]
impl Gate {
    /// Builds a gate from a square matrix. A `rounding_tolerance` allows
    /// few-decimal tables, which are replaced by the nearest unitary.
    #[new]
    #[pyo3(signature = (matrix, rounding_tolerance=None))]
    fn new(matrix: Vec<Vec<Complex64>>, rounding_tolerance: Option<f64>) -> PyResult<Self> {
        let m = to_cmat(matrix)?;
        let g = match rounding_tolerance {
            Some(tol) => UnitaryGate::from_rounded(m, tol),
            None => UnitaryGate::new(m),
        };
        Ok(Gate(g.py()?))
    }

    /// One of `u_a`, `u_b`, `cnot`, `identity1`, `identity2`.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        Ok(Gate(io::builtin_gate(name).py()?))
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.0.n_qubits()
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<Complex64>> {
        self.0.matrix().to_rows()
    }

    fn __repr__(&self) -> String {
        format!("Gate(n_qubits={})", self.0.n_qubits())
    }
}

/// A completely positive trace-preserving map in Kraus form.
#[pyclass(frozen, skip_from_py_object, module = "qgv")]
#[derive(Clone)]
struct Channel(QuantumChannel);

#[pymethods]
impl Channel {
    #[staticmethod]
    fn unitary(gate: &Gate) -> Self {
        Channel(channels::unitary_channel(&gate.0))
    }

    /// The gate followed by noise given as JSON, e.g.
    /// `{"kind": "amplitude_damping", "params": {"gamma": 0.05}}`.
    #[staticmethod]
    fn noisy(gate: &Gate, noise_json: &str) -> PyResult<Self> {
        let model: NoiseModel = serde_json::from_str(noise_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Channel(channels::noisy_gate(&gate.0, &model).py()?))
    }

    /// The gate followed by noise tuned to a target entanglement fidelity.
    #[staticmethod]
    #[pyo3(signature = (gate, entanglement_fidelity, model="depolarizing"))]
    fn calibrated(gate: &Gate, entanglement_fidelity: f64, model: &str) -> PyResult<Self> {
        let kind = match model {
            "depolarizing" => NoiseKind::Depolarizing,
            "amplitude_damping" => NoiseKind::AmplitudeDamping,
            other => return Err(PyValueError::new_err(format!("unknown noise model {other:?}"))),
        };
        let noise = channels::calibrate_noise(entanglement_fidelity, kind, gate.0.n_qubits()).py()?;
        Ok(Channel(channels::noisy_gate(&gate.0, &noise).py()?))
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.0.n_qubits()
    }

    #[getter]
    fn kraus(&self) -> Vec<Vec<Vec<Complex64>>> {
        self.0.kraus().iter().map(CMat::to_rows).collect()
    }

    fn chi(&self) -> ProcessMatrix {
        ProcessMatrix(channels::channel_to_chi(&self.0))
    }

    /// Entanglement fidelity with the ideal `target`.
    fn fidelity(&self, target: &Gate) -> PyResult<f64> {
        channels::gate_fidelity(&self.0, &target.0).py()
    }
}

/// Process matrix over the unnormalized Pauli basis.
#[pyclass(frozen, skip_from_py_object, module = "qgv")]
#[derive(Clone)]
struct ProcessMatrix(CoreChi);

#[pymethods]
impl ProcessMatrix {
    #[getter]
    fn n_qubits(&self) -> usize {
        self.0.n_qubits()
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<Complex64>> {
        self.0.chi().to_rows()
    }

    #[getter]
    fn tp_residual(&self) -> f64 {
        self.0.tp_residual()
    }

    #[getter]
    fn min_eigenvalue(&self) -> f64 {
        self.0.min_eigenvalue()
    }

    fn fidelity(&self, other: &ProcessMatrix) -> PyResult<f64> {
        channels::process_fidelity(&self.0, &other.0).py()
    }
}

#[pyclass(frozen, get_all, module = "qgv")]
struct Setting {
    label: String,
    probability: f64,
    basis: String,
    pass_sign: i8,
}

#[pymethods]
impl Setting {
    fn __repr__(&self) -> String {
        format!("Setting({}, p={}, basis={}, pass={:+})", self.label, self.probability, self.basis, self.pass_sign)
    }
}

/// The verification strategy the toolkit uses for a gate.
#[pyclass(frozen, module = "qgv")]
struct Strategy(VerificationStrategy);

#[pymethods]
impl Strategy {
    #[new]
    fn new(gate: &Gate) -> PyResult<Self> {
        Ok(Strategy(io::strategy_for(&gate.0).py()?))
    }

    /// Spectral gap `1 - λ₂(Ω)`.
    #[getter]
    fn nu(&self) -> f64 {
        self.0.nu()
    }

    fn omega_spectrum(&self) -> Vec<f64> {
        self.0.omega_spectrum()
    }

    fn distinct_bases(&self) -> Vec<String> {
        self.0.distinct_bases()
    }

    fn settings(&self) -> Vec<Setting> {
        io::StrategyDump::new(&self.0)
            .settings
            .into_iter()
            .map(|s| Setting { label: s.label, probability: s.probability, basis: s.basis, pass_sign: s.pass_sign })
            .collect()
    }

    fn pass_probability(&self, device: &Channel) -> PyResult<f64> {
        pass_probability(&self.0, &device.0).py()
    }
}

#[pyclass(frozen, get_all, module = "qgv")]
struct VerificationResult {
    n_trials: u64,
    n_passed: u64,
    delta: f64,
    nu: f64,
    epsilon: f64,
    certified: bool,
}

impl From<&CoreResult> for VerificationResult {
    fn from(r: &CoreResult) -> Self {
        VerificationResult {
            n_trials: r.n_trials,
            n_passed: r.n_passed,
            delta: r.delta,
            nu: r.nu,
            epsilon: r.epsilon,
            certified: r.certified,
        }
    }
}

#[pymethods]
impl VerificationResult {
    fn __repr__(&self) -> String {
        format!(
            "VerificationResult(N={}, M={}, epsilon={}, certified={})",
            self.n_trials, self.n_passed, self.epsilon, self.certified
        )
    }
}

#[pyclass(frozen, get_all, module = "qgv")]
struct CampaignPoint {
    n: u64,
    mean_epsilon: f64,
    sd_epsilon: f64,
    mean_pass_fraction: f64,
    n_certified: usize,
}

#[pyclass(frozen, get_all, module = "qgv")]
struct QptPoint {
    n: u64,
    mean_infidelity: f64,
    sd_infidelity: f64,
    upper: f64,
}

/// Tomography outcome counts.
#[pyclass(frozen, module = "qgv")]
struct CountTable(CoreCounts);

#[pymethods]
impl CountTable {
    /// Parses `probe,basis,outcome,count` CSV text.
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(CountTable(io::read_counts(text.as_bytes()).py()?))
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        io::write_counts(&mut buf, &self.0).py()?;
        String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn n_settings(&self) -> usize {
        self.0.n_settings()
    }

    #[getter]
    fn total_shots(&self) -> u64 {
        self.0.total_shots()
    }
}

#[pyfunction]
fn kl_divergence(x: f64, y: f64) -> PyResult<f64> {
    certify::kl_divergence(x, y).py()
}

#[pyfunction]
fn delta_bound(m: u64, n: u64, epsilon: f64, nu: f64) -> PyResult<f64> {
    certify::delta_bound(m, n, epsilon, nu).py()
}

/// Smallest ε certified at confidence `1 - delta`; raises `NotCertifiableError`
/// when no ε ≤ 1 works.
#[pyfunction]
fn epsilon_at_confidence(m: u64, n: u64, delta: f64, nu: f64) -> PyResult<f64> {
    certify::epsilon_at_confidence(m, n, delta, nu).py()
}

#[pyfunction]
fn min_samples_perfect(epsilon: f64, delta: f64, nu: f64) -> PyResult<u64> {
    certify::min_samples_perfect(epsilon, delta, nu).py()
}

#[pyfunction]
fn certify_counts(m: u64, n: u64, delta: f64, nu: f64) -> PyResult<VerificationResult> {
    Ok((&CoreResult::from_counts(m, n, delta, nu).py()?).into())
}

/// Runs `n` verification trials and returns `(N, M)`.
#[pyfunction]
#[pyo3(signature = (strategy, device, n, seed, stream=0))]
fn run_qgv(py: Python<'_>, strategy: &Strategy, device: &Channel, n: u64, seed: u64, stream: u64) -> PyResult<(u64, u64)> {
    let (s, d) = (&strategy.0, &device.0);
    let m = py.detach(|| simulate::run_qgv_count(s, d, n, &mut RngSpec::new(seed, stream).rng())).py()?;
    Ok((n, m))
}

#[pyfunction]
#[pyo3(signature = (strategy, device, n_grid, repetitions, seed, delta=0.01))]
fn campaign(
    py: Python<'_>,
    strategy: &Strategy,
    device: &Channel,
    n_grid: Vec<u64>,
    repetitions: usize,
    seed: u64,
    delta: f64,
) -> PyResult<Vec<CampaignPoint>> {
    let (s, d) = (&strategy.0, &device.0);
    let c = py.detach(|| simulate::campaign(s, d, &n_grid, repetitions, delta, seed)).py()?;
    Ok(c.points
        .into_iter()
        .map(|p| CampaignPoint {
            n: p.n,
            mean_epsilon: p.mean_epsilon,
            sd_epsilon: p.sd_epsilon,
            mean_pass_fraction: p.mean_pass_fraction,
            n_certified: p.n_certified,
        })
        .collect())
}

/// Simulates the standard tomography grid with `shots` per setting.
#[pyfunction]
#[pyo3(signature = (device, shots, seed, stream=0))]
fn simulate_counts(device: &Channel, shots: u64, seed: u64, stream: u64) -> PyResult<CountTable> {
    let n = device.0.n_qubits();
    let probes = simulate::standard_probes(n);
    let bases = simulate::standard_bases(n);
    let table = simulate::run_qpt_counts(&device.0, &probes, &bases, shots, &mut RngSpec::new(seed, stream).rng());
    Ok(CountTable(table.py()?))
}

#[pyfunction]
fn linear_inversion(counts: &CountTable) -> PyResult<ProcessMatrix> {
    Ok(ProcessMatrix(tomography::linear_inversion(&counts.0).py()?))
}

#[pyfunction]
fn mle_reconstruct(py: Python<'_>, counts: &CountTable) -> PyResult<ProcessMatrix> {
    let table = &counts.0;
    let r = py.detach(|| tomography::mle_reconstruct(table, &MleOptions::default())).py()?;
    Ok(ProcessMatrix(r.process))
}

/// Infidelity of MLE tomography versus total sample count.
#[pyfunction]
#[pyo3(signature = (device, target, n_grid, repetitions, seed, delta=0.01))]
fn qpt_curve(
    py: Python<'_>,
    device: &Channel,
    target: &Gate,
    n_grid: Vec<u64>,
    repetitions: usize,
    seed: u64,
    delta: f64,
) -> PyResult<Vec<QptPoint>> {
    let (d, t) = (&device.0, &target.0);
    let curve = py
        .detach(|| tomography::qpt_epsilon_curve(d, t, &n_grid, repetitions, delta, seed, &MleOptions::default()))
        .py()?;
    Ok(curve
        .into_iter()
        .map(|p| QptPoint {
            n: p.n_total_samples,
            mean_infidelity: p.mean_infidelity,
            sd_infidelity: p.sd_infidelity,
            upper: p.infidelity_upper,
        })
        .collect())
}

/// Least-squares fit of `ln ε = a + b ln N`; returns `(slope, intercept, slope_stderr)`.
#[pyfunction]
#[pyo3(signature = (points, n_min=0.0, n_max=f64::INFINITY))]
fn loglog_fit(points: Vec<(f64, f64)>, n_min: f64, n_max: f64) -> PyResult<(f64, f64, f64)> {
    let f = certify::loglog_fit(&points, (n_min, n_max)).py()?;
    Ok((f.slope, f.intercept, f.slope_stderr))
}

#[pymodule]
fn qgv(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NotCertifiableError", m.py().get_type::<NotCertifiableError>())?;
    m.add_class::<Gate>()?;
    m.add_class::<Channel>()?;
    m.add_class::<ProcessMatrix>()?;
    m.add_class::<Setting>()?;
    m.add_class::<Strategy>()?;
    m.add_class::<VerificationResult>()?;
    m.add_class::<CampaignPoint>()?;
    m.add_class::<QptPoint>()?;
    m.add_class::<CountTable>()?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(delta_bound, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon_at_confidence, m)?)?;
    m.add_function(wrap_pyfunction!(min_samples_perfect, m)?)?;
    m.add_function(wrap_pyfunction!(certify_counts, m)?)?;
    m.add_function(wrap_pyfunction!(run_qgv, m)?)?;
    m.add_function(wrap_pyfunction!(campaign, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_counts, m)?)?;
    m.add_function(wrap_pyfunction!(linear_inversion, m)?)?;
    m.add_function(wrap_pyfunction!(mle_reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(qpt_curve, m)?)?;
    m.add_function(wrap_pyfunction!(loglog_fit, m)?)?;
    Ok(())
}
