//! Little-endian layouts of submission descriptors, completion records and
//! result payloads.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::qsim::Histogram;

pub const DESCRIPTOR_LEN: usize = 32;
pub const RECORD_LEN: usize = 32;
pub const RESULT_HEADER_LEN: usize = 8;
pub const RESULT_ENTRY_LEN: usize = 16;

/// Descriptor flag: run this job in latency mode whatever CTRL.MODE says.
pub const FLAG_LATENCY: u32 = 1 << 0;
pub const KNOWN_FLAGS: u32 = FLAG_LATENCY;

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SubmissionDescriptor {
    pub job_id: u64,
    pub payload_addr: u64,
    pub payload_len: u32,
    pub shots: u32,
    pub flags: u32,
    pub reserved: u32,
}

impl SubmissionDescriptor {
    pub fn encode(&self) -> [u8; DESCRIPTOR_LEN] {
        let mut b = [0; DESCRIPTOR_LEN];
        b[0..8].copy_from_slice(&self.job_id.to_le_bytes());
        b[8..16].copy_from_slice(&self.payload_addr.to_le_bytes());
        b[16..20].copy_from_slice(&self.payload_len.to_le_bytes());
        b[20..24].copy_from_slice(&self.shots.to_le_bytes());
        b[24..28].copy_from_slice(&self.flags.to_le_bytes());
        b[28..32].copy_from_slice(&self.reserved.to_le_bytes());
        b
    }

    pub fn decode(b: &[u8; DESCRIPTOR_LEN]) -> Self {
        Self {
            job_id: u64_at(b, 0),
            payload_addr: u64_at(b, 8),
            payload_len: u32_at(b, 16),
            shots: u32_at(b, 20),
            flags: u32_at(b, 24),
            reserved: u32_at(b, 28),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CompletionRecord {
    pub job_id: u64,
    pub status: u32,
    pub result_len: u32,
    pub result_addr: u64,
    pub exec_time_ns: u64,
}

impl CompletionRecord {
    pub fn encode(&self) -> [u8; RECORD_LEN] {
        let mut b = [0; RECORD_LEN];
        b[0..8].copy_from_slice(&self.job_id.to_le_bytes());
        b[8..12].copy_from_slice(&self.status.to_le_bytes());
        b[12..16].copy_from_slice(&self.result_len.to_le_bytes());
        b[16..24].copy_from_slice(&self.result_addr.to_le_bytes());
        b[24..32].copy_from_slice(&self.exec_time_ns.to_le_bytes());
        b
    }

    pub fn decode(b: &[u8; RECORD_LEN]) -> Self {
        Self {
            job_id: u64_at(b, 0),
            status: u32_at(b, 8),
            result_len: u32_at(b, 12),
            result_addr: u64_at(b, 16),
            exec_time_ns: u64_at(b, 24),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResultFormatError {
    #[error("result shorter than its {0}-byte header")]
    Truncated(usize),
    #[error("result holds {actual} bytes, header implies {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("cbit count {0} does not fit a 64-bit key")]
    TooManyCbits(u32),
    #[error("keys not strictly ascending at entry {0}")]
    Unsorted(usize),
}

/// Serialized size of a histogram with `entries` distinct keys.
pub fn result_len(entries: usize) -> usize {
    RESULT_HEADER_LEN + RESULT_ENTRY_LEN * entries
}

pub fn encode_result(h: &Histogram) -> Vec<u8> {
    let mut out = Vec::with_capacity(result_len(h.counts.len()));
    out.extend_from_slice(&u32::from(h.num_cbits).to_le_bytes());
    out.extend_from_slice(&(h.counts.len() as u32).to_le_bytes());
    for (key, count) in &h.counts {
        out.extend_from_slice(&key.to_le_bytes());
        out.extend_from_slice(&count.to_le_bytes());
    }
    out
}

pub fn decode_result(b: &[u8]) -> Result<Histogram, ResultFormatError> {
    if b.len() < RESULT_HEADER_LEN {
        return Err(ResultFormatError::Truncated(RESULT_HEADER_LEN));
    }
    let num_cbits = u32_at(b, 0);
    let entries = u32_at(b, 4) as usize;
    let expected = result_len(entries);
    if b.len() != expected {
        return Err(ResultFormatError::LengthMismatch {
            expected,
            actual: b.len(),
        });
    }
    let num_cbits = u16::try_from(num_cbits)
        .ok()
        .filter(|&n| n <= 64)
        .ok_or(ResultFormatError::TooManyCbits(num_cbits))?;
    let mut counts = BTreeMap::new();
    let mut last = None;
    for i in 0..entries {
        let at = RESULT_HEADER_LEN + i * RESULT_ENTRY_LEN;
        let key = u64_at(b, at);
        if last.is_some_and(|prev| key <= prev) {
            return Err(ResultFormatError::Unsorted(i));
        }
        last = Some(key);
        counts.insert(key, u64_at(b, at + 8));
    }
    Ok(Histogram { num_cbits, counts })
}
