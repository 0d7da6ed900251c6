use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::circuit::Opcode;
use crate::transpile::CouplingMap;

/// Execution modes a device supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Modes {
    pub fidelity: bool,
    pub latency: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueDepths {
    pub submission: u32,
    pub completion: u32,
}

/// Static description of a device, as needed for transpilation and reported
/// by `device_query`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceInfo {
    pub num_qubits: u16,
    pub native_gates: BTreeSet<Opcode>,
    pub coupling_map: CouplingMap,
    pub modes: Modes,
    pub queue_depths: QueueDepths,
}

/// {RX, RZ, CNOT}
pub fn native_gate_set() -> BTreeSet<Opcode> {
    BTreeSet::from([Opcode::Rx, Opcode::Rz, Opcode::Cnot])
}

impl DeviceInfo {
    /// A description with the standard native set and both modes.
    pub fn for_coupling(coupling_map: CouplingMap) -> Self {
        Self {
            num_qubits: coupling_map.num_qubits(),
            native_gates: native_gate_set(),
            coupling_map,
            modes: Modes {
                fidelity: true,
                latency: true,
            },
            queue_depths: QueueDepths {
                submission: 64,
                completion: 64,
            },
        }
    }
}
