//! Python module `qalpy`: circuits, the state-vector simulator, the virtual
//! device and the latency profiler.
//!
//! Errors surface as `qalpy.QalError`. Host errors use the subclass
//! `qalpy.HostError`, whose `args` are `(code, message)`.

use std::time::Duration;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use qal::circuit::{decode_binary, emit_text, encode_binary, parse_text};
use qal::host::{profile_run, CouplingPreset, CouplingSpec, DeviceConfig, DeviceHandle, Mode, WorkloadJob};
use qal::latency::{predict_job_latency, TimingModel};
use qal::qsim::{self, Histogram};

create_exception!(qalpy, QalError, PyException);
create_exception!(qalpy, HostError, QalError);

fn qal_err(e: impl std::fmt::Display) -> PyErr {
    QalError::new_err(e.to_string())
}

fn host_err(e: qal::host::HostError) -> PyErr {
    HostError::new_err((e.code(), e.to_string()))
}

/// Parses serialized JSON into Python objects with the stdlib `json` module.
fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn histogram_dict<'py>(py: Python<'py>, h: &Histogram) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (bits, n) in h.rows() {
        d.set_item(bits, n)?;
    }
    Ok(d)
}

#[pyclass(name = "Circuit", module = "qalpy", frozen)]
pub struct PyCircuit {
    inner: qal::circuit::Circuit,
}

#[pymethods]
impl PyCircuit {
    /// Assemble `.qalt` source.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        parse_text(text).map(|inner| Self { inner }).map_err(qal_err)
    }

    /// Decode a `.qalb` image.
    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        decode_binary(data).map(|inner| Self { inner }).map_err(qal_err)
    }

    #[staticmethod]
    fn bell() -> Self {
        Self {
            inner: qal::circuit::Circuit::bell(),
        }
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        let bytes = encode_binary(&self.inner).map_err(qal_err)?;
        Ok(PyBytes::new(py, &bytes))
    }

    fn to_text(&self) -> PyResult<String> {
        emit_text(&self.inner).map_err(qal_err)
    }

    #[getter]
    fn num_qubits(&self) -> u16 {
        self.inner.num_qubits
    }

    #[getter]
    fn num_cbits(&self) -> u16 {
        self.inner.num_cbits
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn gate_counts<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let c = self.inner.gate_counts();
        let d = PyDict::new(py);
        d.set_item("one_qubit", c.one_qubit)?;
        d.set_item("two_qubit", c.two_qubit)?;
        d.set_item("measure", c.measure)?;
        d.set_item("reset", c.reset)?;
        Ok(d)
    }

    /// Final amplitudes of a measurement-free circuit, little-endian indexing.
    fn statevector(&self) -> PyResult<Vec<Complex64>> {
        qsim::statevector_of(&self.inner)
            .map(|s| s.into_amplitudes())
            .map_err(qal_err)
    }

    /// Sample `shots` runs locally; keys are cbit strings, highest cbit first.
    #[pyo3(signature = (shots, seed = 0))]
    fn run<'py>(&self, py: Python<'py>, shots: u64, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        let h = qsim::run_circuit(&self.inner, shots, seed).map_err(qal_err)?;
        histogram_dict(py, &h)
    }

    fn __repr__(&self) -> String {
        format!(
            "Circuit(num_qubits={}, num_cbits={}, instructions={})",
            self.inner.num_qubits,
            self.inner.num_cbits,
            self.inner.len()
        )
    }
}

/// Accepts a `Circuit` or raw `.qalb` bytes.
fn payload_of(obj: &Bound<'_, PyAny>) -> PyResult<Vec<u8>> {
    if let Ok(c) = obj.cast::<PyCircuit>() {
        return encode_binary(&c.get().inner).map_err(qal_err);
    }
    obj.extract::<Vec<u8>>()
        .map_err(|_| PyValueError::new_err("expected a Circuit or bytes"))
}

fn timing_of(text: Option<&str>) -> PyResult<TimingModel> {
    match text {
        None => Ok(TimingModel::shipped()),
        Some(t) => t.parse().map_err(qal_err),
    }
}

fn coupling_of(name: &str, edges: Option<Vec<(u8, u8)>>) -> PyResult<CouplingSpec> {
    if let Some(e) = edges {
        return Ok(CouplingSpec::Edges(e));
    }
    let preset = match name {
        "line" => CouplingPreset::Line,
        "ring" => CouplingPreset::Ring,
        "full" => CouplingPreset::Full,
        other => return Err(PyValueError::new_err(format!("unknown coupling '{other}'"))),
    };
    Ok(CouplingSpec::Preset(preset))
}

fn mode_of(name: &str) -> PyResult<Mode> {
    match name {
        "fidelity" => Ok(Mode::Fidelity),
        "latency" => Ok(Mode::Latency),
        other => Err(PyValueError::new_err(format!("unknown mode '{other}'"))),
    }
}

/// Closed-form latency of one job on an idle device.
#[pyfunction]
#[pyo3(signature = (circuit, shots, result_len, timing = None))]
fn predict_latency(circuit: &PyCircuit, shots: u64, result_len: u64, timing: Option<&str>) -> PyResult<u64> {
    let model = timing_of(timing)?;
    let payload = encode_binary(&circuit.inner).map_err(qal_err)?;
    Ok(predict_job_latency(
        &model,
        payload.len() as u64,
        result_len,
        &circuit.inner.gate_counts(),
        shots,
    ))
}

/// An open virtual device. Closed when the object is collected.
#[pyclass(name = "Device", module = "qalpy", frozen)]
pub struct PyDevice {
    handle: DeviceHandle,
}

#[pymethods]
impl PyDevice {
    /// `timing` is a timing file's contents (JSON or `key = value`).
    #[new]
    #[pyo3(signature = (
        num_qubits = 16,
        coupling = "line",
        edges = None,
        mode = "fidelity",
        seed = 0,
        timing = None,
        bypass_transpile = false,
    ))]
    fn new(
        num_qubits: u16,
        coupling: &str,
        edges: Option<Vec<(u8, u8)>>,
        mode: &str,
        seed: u64,
        timing: Option<&str>,
        bypass_transpile: bool,
    ) -> PyResult<Self> {
        let config = DeviceConfig {
            num_qubits,
            coupling: coupling_of(coupling, edges)?,
            mode: mode_of(mode)?,
            seed,
            timing: timing_of(timing)?,
            bypass_transpile,
            ..DeviceConfig::default()
        };
        DeviceHandle::open(config)
            .map(|handle| Self { handle })
            .map_err(host_err)
    }

    /// Device description as a dict.
    fn query<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let info = serde_json::to_string(&self.handle.device_query()).map_err(qal_err)?;
        json_to_py(py, &info)
    }

    #[getter]
    fn mode(&self) -> &'static str {
        match self.handle.mode() {
            Mode::Fidelity => "fidelity",
            Mode::Latency => "latency",
        }
    }

    #[pyo3(signature = (circuit, shots = 1024, priority = 4))]
    fn submit(&self, circuit: &Bound<'_, PyAny>, shots: u64, priority: u8) -> PyResult<u64> {
        let payload = payload_of(circuit)?;
        self.handle.job_submit(&payload, shots, priority).map_err(host_err)
    }

    fn check(&self, job: u64) -> PyResult<&'static str> {
        self.handle.job_check(job).map(|s| s.name()).map_err(host_err)
    }

    /// Block until the job leaves the queue; `timeout` is in seconds.
    #[pyo3(signature = (job, timeout = None))]
    fn wait(&self, py: Python<'_>, job: u64, timeout: Option<f64>) -> PyResult<&'static str> {
        let timeout = timeout.map(Duration::from_secs_f64);
        py.detach(|| self.handle.job_wait(job, timeout))
            .map(|s| s.name())
            .map_err(host_err)
    }

    fn results<'py>(&self, py: Python<'py>, job: u64) -> PyResult<Bound<'py, PyDict>> {
        let h = self.handle.job_get_results(job).map_err(host_err)?;
        histogram_dict(py, &h)
    }

    /// Model execution time of a finished latency-mode job.
    fn exec_time_ns(&self, job: u64) -> PyResult<Option<u64>> {
        self.handle.job_info(job).map(|j| j.exec_time_ns).map_err(host_err)
    }

    fn cancel(&self, job: u64) -> PyResult<()> {
        self.handle.job_cancel(job).map_err(host_err)
    }

    fn free(&self, job: u64) -> PyResult<()> {
        self.handle.job_free(job).map_err(host_err)
    }

    /// Run `count` copies of a circuit and return the latency report as a dict.
    #[pyo3(signature = (circuit, count = 100, shots = 100, priority = 0))]
    fn profile<'py>(
        &self,
        py: Python<'py>,
        circuit: &Bound<'py, PyAny>,
        count: usize,
        shots: u64,
        priority: u8,
    ) -> PyResult<Bound<'py, PyAny>> {
        let payload = payload_of(circuit)?;
        let workload = vec![
            WorkloadJob {
                payload,
                shots,
                priority
            };
            count
        ];
        let report = py.detach(|| profile_run(&self.handle, &workload)).map_err(host_err)?;
        json_to_py(py, &report.to_json())
    }
}

#[pymodule]
fn qalpy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCircuit>()?;
    m.add_class::<PyDevice>()?;
    m.add_function(wrap_pyfunction!(predict_latency, m)?)?;
    m.add("QalError", m.py().get_type::<QalError>())?;
    m.add("HostError", m.py().get_type::<HostError>())?;
    Ok(())
}
