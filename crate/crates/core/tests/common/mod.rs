//! Helpers shared by the integration tests: random circuit generation and an
//! independent dense-matrix reference simulator.
#![allow(dead_code)]

pub mod oracle;

use qal::circuit::{Circuit, Instruction, Opcode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const UNITARY_OPS: [Opcode; 14] = [
    Opcode::H,
    Opcode::X,
    Opcode::Y,
    Opcode::Z,
    Opcode::S,
    Opcode::Sdg,
    Opcode::T,
    Opcode::Tdg,
    Opcode::Rx,
    Opcode::Ry,
    Opcode::Rz,
    Opcode::Cnot,
    Opcode::Cz,
    Opcode::Swap,
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_unitary_instruction(rng: &mut impl Rng, n: u16) -> Instruction {
    loop {
        let op = UNITARY_OPS[rng.random_range(0..UNITARY_OPS.len())];
        let q0 = rng.random_range(0..n) as u8;
        if op.is_two_qubit() {
            if n < 2 {
                continue;
            }
            let mut q1 = rng.random_range(0..n - 1) as u8;
            if q1 >= q0 {
                q1 += 1;
            }
            return Instruction::pair(op, q0, q1);
        }
        if matches!(op, Opcode::Rx | Opcode::Ry | Opcode::Rz) {
            let angle = rng.random_range(-7.0f32..7.0f32);
            return Instruction::rotation(op, q0, angle);
        }
        return Instruction::single(op, q0);
    }
}

/// Unitary-only circuit with `1..=max_qubits` qubits and `0..=max_gates` gates.
pub fn random_unitary_circuit(rng: &mut impl Rng, max_qubits: u16, max_gates: usize) -> Circuit {
    let n = rng.random_range(1..=max_qubits);
    let len = rng.random_range(0..=max_gates);
    let mut c = Circuit::new(n, 0);
    for _ in 0..len {
        c.push(random_unitary_instruction(rng, n));
    }
    c
}

/// Any valid circuit: gates, measurements, resets, barriers and nops.
pub fn random_circuit(rng: &mut impl Rng, max_gates: usize) -> Circuit {
    let n = rng.random_range(1..=16u16);
    let nc = rng.random_range(0..=16u16);
    let len = rng.random_range(0..=max_gates);
    let mut c = Circuit::new(n, nc);
    for _ in 0..len {
        let ins = match rng.random_range(0..10) {
            0 if nc > 0 => Instruction::measure(rng.random_range(0..n) as u8, rng.random_range(0..nc) as u8),
            1 => Instruction::single(Opcode::Reset, rng.random_range(0..n) as u8),
            2 => Instruction::single(Opcode::Barrier, rng.random_range(0..n) as u8),
            3 => Instruction::nop(),
            4 => {
                // arbitrary finite f32 bit patterns, including subnormals and -0.0
                let angle = loop {
                    let v = f32::from_bits(rng.random::<u32>());
                    if v.is_finite() {
                        break v;
                    }
                };
                Instruction::rotation(Opcode::Rz, rng.random_range(0..n) as u8, angle)
            }
            _ => random_unitary_instruction(rng, n),
        };
        c.push(ins);
    }
    c
}
