//! The `.qalb` wire format.
//!
//! Header (16 bytes, little-endian):
//!
//! | offset | size | field              |
//! |--------|------|--------------------|
//! | 0      | 4    | magic `0x51414C42` |
//! | 4      | 2    | version (1)        |
//! | 6      | 2    | num_qubits         |
//! | 8      | 2    | num_cbits          |
//! | 10     | 2    | reserved (0)       |
//! | 12     | 4    | num_instructions   |
//!
//! followed by `num_instructions` 8-byte records
//! `{opcode u8, q0 u8, q1 u8, cbit u8, param f32}`.

use thiserror::Error;

use super::{Circuit, CircuitError, Instruction, InstructionError, Opcode, MAX_CBITS, MAX_QUBITS};

pub const MAGIC: u32 = 0x5141_4C42;
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;
pub const INSTRUCTION_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("bad magic {0:#010x}")]
    BadMagic(u32),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("payload truncated: need {expected} bytes, have {actual}")]
    TruncatedPayload { expected: usize, actual: usize },
    #[error("{0} trailing bytes after the last instruction")]
    TrailingBytes(usize),
    #[error("malformed header: {0}")]
    BadHeader(&'static str),
    #[error("unknown opcode {byte:#04x} at offset {offset}")]
    BadOpcode { offset: usize, byte: u8 },
    #[error("qubit or classical bit out of range at offset {offset}")]
    QubitOutOfRange { offset: usize },
    #[error("invalid instruction at offset {offset}: {reason}")]
    InvalidInstruction { offset: usize, reason: InstructionError },
}

/// Serializes a valid circuit into its canonical byte form.
pub fn encode_binary(c: &Circuit) -> Result<Vec<u8>, CircuitError> {
    c.validate()?;
    let mut out = Vec::with_capacity(HEADER_LEN + INSTRUCTION_LEN * c.instructions.len());
    out.extend_from_slice(&MAGIC.to_le_bytes());
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&c.num_qubits.to_le_bytes());
    out.extend_from_slice(&c.num_cbits.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&(c.instructions.len() as u32).to_le_bytes());
    for ins in &c.instructions {
        out.extend_from_slice(&[ins.opcode as u8, ins.q0, ins.q1, ins.cbit]);
        out.extend_from_slice(&ins.param.to_le_bytes());
    }
    Ok(out)
}

/// Header fields, checked for magic and version only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub num_qubits: u16,
    pub num_cbits: u16,
    pub num_instructions: u32,
}

/// Parses just the fixed header. Used by the host for fast rejection.
pub fn decode_header(b: &[u8]) -> Result<Header, DecodeError> {
    if b.len() < HEADER_LEN {
        return Err(DecodeError::TruncatedPayload {
            expected: HEADER_LEN,
            actual: b.len(),
        });
    }
    let magic = u32::from_le_bytes(b[0..4].try_into().unwrap());
    if magic != MAGIC {
        return Err(DecodeError::BadMagic(magic));
    }
    let version = u16::from_le_bytes([b[4], b[5]]);
    if version != VERSION {
        return Err(DecodeError::UnsupportedVersion(version));
    }
    Ok(Header {
        num_qubits: u16::from_le_bytes([b[6], b[7]]),
        num_cbits: u16::from_le_bytes([b[8], b[9]]),
        num_instructions: u32::from_le_bytes(b[12..16].try_into().unwrap()),
    })
}

/// Parses and fully validates a `.qalb` payload.
///
/// Only canonical encodings are accepted, so for any `Ok(c)` the bytes equal
/// `encode_binary(&c)`.
pub fn decode_binary(b: &[u8]) -> Result<Circuit, DecodeError> {
    let header = decode_header(b)?;
    if !(1..=MAX_QUBITS).contains(&header.num_qubits) {
        return Err(DecodeError::QubitOutOfRange { offset: 6 });
    }
    if header.num_cbits > MAX_CBITS {
        return Err(DecodeError::QubitOutOfRange { offset: 8 });
    }
    if u16::from_le_bytes([b[10], b[11]]) != 0 {
        return Err(DecodeError::BadHeader("reserved field is non-zero"));
    }

    let body_len = u64::from(header.num_instructions) * INSTRUCTION_LEN as u64;
    let expected = HEADER_LEN as u64 + body_len;
    if (b.len() as u64) < expected {
        return Err(DecodeError::TruncatedPayload {
            expected: usize::try_from(expected).unwrap_or(usize::MAX),
            actual: b.len(),
        });
    }
    if (b.len() as u64) > expected {
        return Err(DecodeError::TrailingBytes(b.len() - expected as usize));
    }

    let mut instructions = Vec::with_capacity(header.num_instructions as usize);
    for (i, rec) in b[HEADER_LEN..].chunks_exact(INSTRUCTION_LEN).enumerate() {
        let offset = HEADER_LEN + i * INSTRUCTION_LEN;
        let opcode = Opcode::from_u8(rec[0]).ok_or(DecodeError::BadOpcode { offset, byte: rec[0] })?;
        let param = f32::from_le_bytes(rec[4..8].try_into().unwrap());
        let ins = Instruction::raw(opcode, rec[1], rec[2], rec[3], param);
        ins.validate(header.num_qubits, header.num_cbits)
            .map_err(|reason| match reason {
                InstructionError::QubitOutOfRange(_) | InstructionError::CbitOutOfRange(_) => {
                    DecodeError::QubitOutOfRange { offset }
                }
                reason => DecodeError::InvalidInstruction { offset, reason },
            })?;
        instructions.push(ins);
    }
    Ok(Circuit::with_instructions(
        header.num_qubits,
        header.num_cbits,
        instructions,
    ))
}
