//! Gate-level circuit representation.
//!
//! A [`Circuit`] is a flat, ordered list of [`Instruction`]s over a fixed
//! number of qubits and classical bits. Every codec in this module preserves
//! instruction order and field values exactly.

mod binary;
mod text;

pub use binary::{
    decode_binary, decode_header, encode_binary, DecodeError, Header, HEADER_LEN, INSTRUCTION_LEN, MAGIC, VERSION,
};
pub use text::{emit_text, format_angle, parse_text, TextError};

use std::fmt;

use thiserror::Error;

/// Largest qubit count any circuit may declare.
pub const MAX_QUBITS: u16 = 16;
/// Largest classical register any circuit may declare.
pub const MAX_CBITS: u16 = 16;

#[repr(u8)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Opcode {
    Nop = 0x00,
    H = 0x01,
    X = 0x02,
    Y = 0x03,
    Z = 0x04,
    S = 0x05,
    Sdg = 0x06,
    T = 0x07,
    Tdg = 0x08,
    Rx = 0x10,
    Ry = 0x11,
    Rz = 0x12,
    Cnot = 0x20,
    Cz = 0x21,
    Swap = 0x22,
    Measure = 0x30,
    Reset = 0x31,
    Barrier = 0x3F,
}

/// Operand shape of an opcode; decides which instruction fields are live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    /// No operands at all.
    None,
    /// One qubit.
    Single,
    /// One qubit and an angle.
    Rotation,
    /// Two distinct qubits.
    Pair,
    /// One qubit into one classical bit.
    Measure,
}

impl Opcode {
    pub const ALL: [Opcode; 18] = [
        Opcode::Nop,
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
        Opcode::Measure,
        Opcode::Reset,
        Opcode::Barrier,
    ];

    pub fn from_u8(byte: u8) -> Option<Opcode> {
        Opcode::ALL.iter().copied().find(|op| *op as u8 == byte)
    }

    pub fn arity(self) -> Arity {
        use Opcode::*;
        match self {
            Nop => Arity::None,
            H | X | Y | Z | S | Sdg | T | Tdg | Reset | Barrier => Arity::Single,
            Rx | Ry | Rz => Arity::Rotation,
            Cnot | Cz | Swap => Arity::Pair,
            Measure => Arity::Measure,
        }
    }

    /// True for opcodes that act as a unitary on the state.
    pub fn is_unitary(self) -> bool {
        !matches!(self, Opcode::Nop | Opcode::Measure | Opcode::Reset | Opcode::Barrier)
    }

    pub fn is_two_qubit(self) -> bool {
        self.arity() == Arity::Pair
    }

    pub fn mnemonic(self) -> &'static str {
        use Opcode::*;
        match self {
            Nop => "nop",
            H => "h",
            X => "x",
            Y => "y",
            Z => "z",
            S => "s",
            Sdg => "sdg",
            T => "t",
            Tdg => "tdg",
            Rx => "rx",
            Ry => "ry",
            Rz => "rz",
            Cnot => "cx",
            Cz => "cz",
            Swap => "swap",
            Measure => "measure",
            Reset => "reset",
            Barrier => "barrier",
        }
    }

    pub fn from_mnemonic(name: &str) -> Option<Opcode> {
        Opcode::ALL.iter().copied().find(|op| op.mnemonic() == name)
    }
}

impl serde::Serialize for Opcode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.mnemonic())
    }
}

impl<'de> serde::Deserialize<'de> for Opcode {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        Opcode::from_mnemonic(&name).ok_or_else(|| serde::de::Error::custom(format!("unknown opcode '{name}'")))
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

/// One gate, measurement or marker.
///
/// Fields an opcode does not use must be zero (`param` must be `+0.0`), which
/// keeps every valid instruction in a single canonical form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instruction {
    pub opcode: Opcode,
    pub q0: u8,
    pub q1: u8,
    pub cbit: u8,
    pub param: f32,
}

impl Instruction {
    pub fn nop() -> Self {
        Self::raw(Opcode::Nop, 0, 0, 0, 0.0)
    }

    pub fn single(opcode: Opcode, q: u8) -> Self {
        Self::raw(opcode, q, 0, 0, 0.0)
    }

    pub fn rotation(opcode: Opcode, q: u8, angle: f32) -> Self {
        Self::raw(opcode, q, 0, 0, angle)
    }

    pub fn pair(opcode: Opcode, a: u8, b: u8) -> Self {
        Self::raw(opcode, a, b, 0, 0.0)
    }

    pub fn measure(q: u8, cbit: u8) -> Self {
        Self::raw(Opcode::Measure, q, 0, cbit, 0.0)
    }

    pub fn raw(opcode: Opcode, q0: u8, q1: u8, cbit: u8, param: f32) -> Self {
        Self {
            opcode,
            q0,
            q1,
            cbit,
            param,
        }
    }

    /// Qubits this instruction touches, in operand order.
    pub fn qubits(&self) -> impl Iterator<Item = u8> {
        let (first, second) = match self.opcode.arity() {
            Arity::None => (None, None),
            Arity::Pair => (Some(self.q0), Some(self.q1)),
            _ => (Some(self.q0), None),
        };
        first.into_iter().chain(second)
    }

    /// Checks this instruction against a circuit of the given size.
    pub fn validate(&self, num_qubits: u16, num_cbits: u16) -> Result<(), InstructionError> {
        let arity = self.opcode.arity();
        let in_range = |q: u8| u16::from(q) < num_qubits;
        let zero_param = self.param.to_bits() == 0;
        match arity {
            Arity::None => {
                if self.q0 != 0 || self.q1 != 0 || self.cbit != 0 || !zero_param {
                    return Err(InstructionError::NonZeroUnusedField);
                }
            }
            Arity::Single | Arity::Rotation => {
                if !in_range(self.q0) {
                    return Err(InstructionError::QubitOutOfRange(self.q0));
                }
                if self.q1 != 0 || self.cbit != 0 {
                    return Err(InstructionError::NonZeroUnusedField);
                }
                if arity == Arity::Rotation {
                    if !self.param.is_finite() {
                        return Err(InstructionError::NonFiniteAngle);
                    }
                } else if !zero_param {
                    return Err(InstructionError::NonZeroUnusedField);
                }
            }
            Arity::Pair => {
                for q in [self.q0, self.q1] {
                    if !in_range(q) {
                        return Err(InstructionError::QubitOutOfRange(q));
                    }
                }
                if self.q0 == self.q1 {
                    return Err(InstructionError::RepeatedQubit(self.q0));
                }
                if self.cbit != 0 || !zero_param {
                    return Err(InstructionError::NonZeroUnusedField);
                }
            }
            Arity::Measure => {
                if !in_range(self.q0) {
                    return Err(InstructionError::QubitOutOfRange(self.q0));
                }
                if u16::from(self.cbit) >= num_cbits {
                    return Err(InstructionError::CbitOutOfRange(self.cbit));
                }
                if self.q1 != 0 || !zero_param {
                    return Err(InstructionError::NonZeroUnusedField);
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum InstructionError {
    #[error("qubit q{0} out of range")]
    QubitOutOfRange(u8),
    #[error("classical bit c{0} out of range")]
    CbitOutOfRange(u8),
    #[error("two-qubit gate repeats qubit q{0}")]
    RepeatedQubit(u8),
    #[error("rotation angle is not finite")]
    NonFiniteAngle,
    #[error("field unused by this opcode is non-zero")]
    NonZeroUnusedField,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("qubit count {0} outside 1..={MAX_QUBITS}")]
    QubitCount(u16),
    #[error("classical bit count {0} outside 0..={MAX_CBITS}")]
    CbitCount(u16),
    #[error("instruction {index}: {source}")]
    Instruction {
        index: usize,
        #[source]
        source: InstructionError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub num_qubits: u16,
    pub num_cbits: u16,
    pub instructions: Vec<Instruction>,
}

impl Circuit {
    pub fn new(num_qubits: u16, num_cbits: u16) -> Self {
        Self {
            num_qubits,
            num_cbits,
            instructions: Vec::new(),
        }
    }

    pub fn with_instructions(num_qubits: u16, num_cbits: u16, instructions: Vec<Instruction>) -> Self {
        Self {
            num_qubits,
            num_cbits,
            instructions,
        }
    }

    pub fn push(&mut self, ins: Instruction) -> &mut Self {
        self.instructions.push(ins);
        self
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        if !(1..=MAX_QUBITS).contains(&self.num_qubits) {
            return Err(CircuitError::QubitCount(self.num_qubits));
        }
        if self.num_cbits > MAX_CBITS {
            return Err(CircuitError::CbitCount(self.num_cbits));
        }
        for (index, ins) in self.instructions.iter().enumerate() {
            ins.validate(self.num_qubits, self.num_cbits)
                .map_err(|source| CircuitError::Instruction { index, source })?;
        }
        Ok(())
    }

    /// True when no instruction is a measurement or reset.
    pub fn is_unitary(&self) -> bool {
        !self
            .instructions
            .iter()
            .any(|i| matches!(i.opcode, Opcode::Measure | Opcode::Reset))
    }

    /// Gate counts in the buckets the timing model charges for.
    pub fn gate_counts(&self) -> GateCounts {
        let mut counts = GateCounts::default();
        for ins in &self.instructions {
            match ins.opcode {
                Opcode::Nop | Opcode::Barrier => {}
                Opcode::Measure => counts.measure += 1,
                Opcode::Reset => counts.reset += 1,
                op if op.is_two_qubit() => counts.two_qubit += 1,
                _ => counts.one_qubit += 1,
            }
        }
        counts
    }

    /// Hand-built Bell pair with terminal measurement of both qubits.
    pub fn bell() -> Self {
        Self::with_instructions(
            2,
            2,
            vec![
                Instruction::single(Opcode::H, 0),
                Instruction::pair(Opcode::Cnot, 0, 1),
                Instruction::measure(0, 0),
                Instruction::measure(1, 1),
            ],
        )
    }
}

/// Per-category instruction counts. NOPs and barriers cost nothing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GateCounts {
    pub one_qubit: u64,
    pub two_qubit: u64,
    pub measure: u64,
    pub reset: u64,
}
