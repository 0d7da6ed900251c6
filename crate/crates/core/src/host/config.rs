use serde::{Deserialize, Serialize};

use super::HostError;
use crate::device::{regs, QpxConfig, DEFAULT_HOST_MEM_BYTES, DESCRIPTOR_LEN, RECORD_LEN};
use crate::latency::TimingModel;
use crate::transpile::{CouplingMap, DEFAULT_CAPACITY};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Fidelity,
    Latency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingPreset {
    Line,
    Ring,
    Full,
}

/// A preset name or an explicit edge list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CouplingSpec {
    Preset(CouplingPreset),
    Edges(Vec<(u8, u8)>),
}

impl Default for CouplingSpec {
    fn default() -> Self {
        CouplingSpec::Preset(CouplingPreset::Line)
    }
}

impl CouplingSpec {
    pub fn build(&self, num_qubits: u16) -> Result<CouplingMap, HostError> {
        let map = match self {
            CouplingSpec::Preset(CouplingPreset::Line) => CouplingMap::line(num_qubits),
            CouplingSpec::Preset(CouplingPreset::Ring) => CouplingMap::ring(num_qubits),
            CouplingSpec::Preset(CouplingPreset::Full) => CouplingMap::full(num_qubits),
            CouplingSpec::Edges(edges) => CouplingMap::new(num_qubits, edges.iter().copied()),
        };
        map.map_err(|e| HostError::ConfigInvalid(e.to_string()))
    }
}

/// Everything `device_open` needs. Missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    pub num_qubits: u16,
    pub coupling: CouplingSpec,
    pub mode: Mode,
    /// Run circuits exactly as submitted, skipping on-device transpilation.
    pub bypass_transpile: bool,
    pub seed: u64,
    pub timing: TimingModel,
    pub sq_len: u32,
    pub cq_len: u32,
    pub host_memory_bytes: usize,
    /// Most QUEUED jobs accepted before submissions fail.
    pub queue_high_water: usize,
    pub cache_capacity: usize,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            num_qubits: 16,
            coupling: CouplingSpec::default(),
            mode: Mode::Fidelity,
            bypass_transpile: false,
            seed: 0,
            timing: TimingModel::shipped(),
            sq_len: 64,
            cq_len: 64,
            host_memory_bytes: DEFAULT_HOST_MEM_BYTES,
            queue_high_water: 4096,
            cache_capacity: DEFAULT_CAPACITY,
        }
    }
}

impl DeviceConfig {
    pub fn validate(&self) -> Result<QpxConfig, HostError> {
        let invalid = |msg: String| Err(HostError::ConfigInvalid(msg));
        if !(1..=crate::circuit::MAX_QUBITS).contains(&self.num_qubits) {
            return invalid(format!("num_qubits {} outside 1..=16", self.num_qubits));
        }
        let coupling = self.coupling.build(self.num_qubits)?;
        if !coupling.is_connected() {
            return invalid("coupling map is disconnected".into());
        }
        for (name, len) in [("sq_len", self.sq_len), ("cq_len", self.cq_len)] {
            if !(regs::MIN_RING_LEN..=regs::MAX_RING_LEN).contains(&len) {
                return invalid(format!("{name} {len} outside 2..=4096"));
            }
        }
        let rings = self.sq_len as usize * DESCRIPTOR_LEN + self.cq_len as usize * RECORD_LEN;
        if self.host_memory_bytes < rings * 2 {
            return invalid(format!(
                "host_memory_bytes {} too small for the rings",
                self.host_memory_bytes
            ));
        }
        if self.queue_high_water == 0 {
            return invalid("queue_high_water must be at least 1".into());
        }
        Ok(QpxConfig {
            coupling,
            seed: self.seed,
            timing: self.timing,
            cache_capacity: self.cache_capacity,
        })
    }
}
