//! Lowering to the device's native gates and routing onto its coupling map.
//!
//! `transpile` = `decompose` then `route`, memoized in a [`TranspileCache`].
//! Routing is greedy: the initial layout is the identity, and every
//! two-qubit gate on non-adjacent physical qubits walks its first operand
//! along the lexicographically smallest shortest path, one SWAP (three
//! CNOTs) per hop, until the operands are adjacent.

mod cache;
mod coupling;

pub use cache::{content_key, CacheKey, CacheStats, TranspileCache, DEFAULT_CAPACITY};
pub use coupling::{CouplingError, CouplingMap};

use std::collections::BTreeSet;
use std::f32::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::Arc;

use thiserror::Error;

use crate::circuit::{encode_binary, Circuit, CircuitError, Instruction, Opcode};
use crate::host::DeviceInfo;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TranspileError {
    #[error("opcode {0} has no decomposition into the native gate set")]
    UnsupportedOpcode(Opcode),
    #[error("coupling map is disconnected")]
    DisconnectedCoupling,
    #[error("circuit needs {needed} qubits, device has {available}")]
    TooManyQubits { needed: u16, available: u16 },
    #[error(transparent)]
    InvalidCircuit(#[from] CircuitError),
}

/// A native, coupling-legal circuit on physical qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct TranspiledCircuit {
    pub circuit: Circuit,
    /// `layout_out[logical] = physical` once the circuit has run. Covers every
    /// qubit of `circuit`, including idle ancillas picked up by routing.
    pub layout_out: Vec<u8>,
}

const fn rx(q: u8, a: f32) -> Instruction {
    Instruction {
        opcode: Opcode::Rx,
        q0: q,
        q1: 0,
        cbit: 0,
        param: a,
    }
}

const fn rz(q: u8, a: f32) -> Instruction {
    Instruction {
        opcode: Opcode::Rz,
        q0: q,
        q1: 0,
        cbit: 0,
        param: a,
    }
}

fn cnot(a: u8, b: u8) -> Instruction {
    Instruction::pair(Opcode::Cnot, a, b)
}

fn hadamard(q: u8) -> [Instruction; 3] {
    [rz(q, FRAC_PI_2), rx(q, FRAC_PI_2), rz(q, FRAC_PI_2)]
}

/// Replacement sequence, in instruction-stream order.
fn lower(ins: &Instruction) -> Option<Vec<Instruction>> {
    let q = ins.q0;
    let seq = match ins.opcode {
        Opcode::X => vec![rx(q, PI)],
        Opcode::Z => vec![rz(q, PI)],
        Opcode::S => vec![rz(q, FRAC_PI_2)],
        Opcode::Sdg => vec![rz(q, -FRAC_PI_2)],
        Opcode::T => vec![rz(q, FRAC_PI_4)],
        Opcode::Tdg => vec![rz(q, -FRAC_PI_4)],
        Opcode::Y => vec![rx(q, PI), rz(q, PI)],
        Opcode::H => hadamard(q).to_vec(),
        // RZ(pi/2) RX(theta) RZ(-pi/2) as an operator product is RY(theta)
        Opcode::Ry => vec![rz(q, -FRAC_PI_2), rx(q, ins.param), rz(q, FRAC_PI_2)],
        Opcode::Cz => {
            let t = ins.q1;
            let mut v = hadamard(t).to_vec();
            v.push(cnot(q, t));
            v.extend(hadamard(t));
            v
        }
        Opcode::Swap => vec![cnot(q, ins.q1), cnot(ins.q1, q), cnot(q, ins.q1)],
        _ => return None,
    };
    Some(seq)
}

/// Rewrites every gate outside `native` using the fixed rule table.
///
/// Measurement, reset and barrier pass through; NOPs are dropped.
pub fn decompose(c: &Circuit, native: &BTreeSet<Opcode>) -> Result<Circuit, TranspileError> {
    c.validate()?;
    let mut out = Circuit::new(c.num_qubits, c.num_cbits);
    for ins in &c.instructions {
        match ins.opcode {
            Opcode::Nop => {}
            Opcode::Measure | Opcode::Reset | Opcode::Barrier => out.instructions.push(*ins),
            op if native.contains(&op) => out.instructions.push(*ins),
            op => {
                let seq = lower(ins).ok_or(TranspileError::UnsupportedOpcode(op))?;
                if seq.iter().any(|i| !native.contains(&i.opcode)) {
                    return Err(TranspileError::UnsupportedOpcode(op));
                }
                out.instructions.extend(seq);
            }
        }
    }
    Ok(out)
}

/// Maps logical qubits onto `map`, inserting SWAPs where a two-qubit gate
/// spans non-adjacent physical qubits.
pub fn route(c: &Circuit, map: &CouplingMap) -> Result<TranspiledCircuit, TranspileError> {
    c.validate()?;
    let physical = map.num_qubits();
    if c.num_qubits > physical {
        return Err(TranspileError::TooManyQubits {
            needed: c.num_qubits,
            available: physical,
        });
    }
    if !map.is_connected() {
        return Err(TranspileError::DisconnectedCoupling);
    }

    // layout[logical] = physical, occupant[physical] = logical
    let mut layout: Vec<u8> = (0..physical as u8).collect();
    let mut occupant = layout.clone();
    let mut out = Vec::with_capacity(c.instructions.len());
    let mut width = c.num_qubits;

    for ins in &c.instructions {
        let mut mapped = *ins;
        if ins.opcode.is_two_qubit() {
            let target = layout[usize::from(ins.q1)];
            let mut control = layout[usize::from(ins.q0)];
            if !map.is_adjacent(control, target) {
                let path = map
                    .shortest_path(control, target)
                    .ok_or(TranspileError::DisconnectedCoupling)?;
                for hop in path.windows(2).take(path.len() - 2) {
                    let (a, b) = (hop[0], hop[1]);
                    out.extend([cnot(a, b), cnot(b, a), cnot(a, b)]);
                    let (la, lb) = (occupant[usize::from(a)], occupant[usize::from(b)]);
                    occupant.swap(usize::from(a), usize::from(b));
                    layout[usize::from(la)] = b;
                    layout[usize::from(lb)] = a;
                    width = width.max(u16::from(a.max(b)) + 1);
                }
                control = path[path.len() - 2];
            }
            mapped.q0 = control;
            mapped.q1 = target;
        } else if ins.opcode != Opcode::Nop {
            mapped.q0 = layout[usize::from(ins.q0)];
        }
        for q in mapped.qubits() {
            width = width.max(u16::from(q) + 1);
        }
        out.push(mapped);
    }

    layout.truncate(usize::from(width));
    Ok(TranspiledCircuit {
        circuit: Circuit::with_instructions(width, c.num_cbits, out),
        layout_out: layout,
    })
}

/// Cache key over the circuit bytes, the canonical coupling and the native set.
pub fn cache_key(c: &Circuit, info: &DeviceInfo) -> Result<CacheKey, TranspileError> {
    let bytes = encode_binary(c)?;
    let mut coupling = Vec::new();
    coupling.extend_from_slice(&info.coupling_map.num_qubits().to_le_bytes());
    for (a, b) in info.coupling_map.canonical_edges() {
        coupling.extend_from_slice(&[a, b]);
    }
    let native: Vec<u8> = info.native_gates.iter().map(|op| *op as u8).collect();
    Ok(content_key(&[&bytes, &coupling, &native]))
}

pub fn transpile(
    c: &Circuit,
    info: &DeviceInfo,
    cache: &TranspileCache,
) -> Result<Arc<TranspiledCircuit>, TranspileError> {
    let key = cache_key(c, info)?;
    if let Some(hit) = cache.get(&key) {
        return Ok(hit);
    }
    let lowered = decompose(c, &info.native_gates)?;
    let routed = Arc::new(route(&lowered, &info.coupling_map)?);
    cache.insert(key, routed.clone());
    Ok(routed)
}
