//! Flat host memory shared between the driver and the device.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use thiserror::Error;

/// Address of the first byte. Address 0 is never valid.
pub const HOST_MEM_BASE: u64 = 0x1000;
pub const DEFAULT_HOST_MEM_BYTES: usize = 16 << 20;
const ALIGN: u64 = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MemoryError {
    #[error("DMA fault: [{addr:#x}, +{len}) is outside host memory")]
    DmaFault { addr: u64, len: u64 },
    #[error("out of host memory allocating {0} bytes")]
    OutOfMemory(u64),
    #[error("no allocated region starts at {0:#x}")]
    UnknownRegion(u64),
}

/// Byte array with a first-fit region allocator.
///
/// Bounds checks only look at the whole array: DMA into an unallocated but
/// in-range address succeeds, like it would on real hardware.
#[derive(Debug)]
pub struct HostMemory {
    bytes: Vec<u8>,
    regions: BTreeMap<u64, u64>,
}

pub type SharedMemory = Arc<Mutex<HostMemory>>;

impl HostMemory {
    pub fn new(size: usize) -> Self {
        Self {
            bytes: vec![0; size],
            regions: BTreeMap::new(),
        }
    }

    pub fn shared(size: usize) -> SharedMemory {
        Arc::new(Mutex::new(Self::new(size)))
    }

    pub fn size(&self) -> usize {
        self.bytes.len()
    }

    pub fn end(&self) -> u64 {
        HOST_MEM_BASE + self.bytes.len() as u64
    }

    pub fn live_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn allocated_bytes(&self) -> u64 {
        self.regions.values().sum()
    }

    /// `[addr, addr+len)` as an index range, if fully in bounds.
    pub fn span(&self, addr: u64, len: u64) -> Result<std::ops::Range<usize>, MemoryError> {
        let fault = MemoryError::DmaFault { addr, len };
        if len == 0 {
            return Ok(0..0);
        }
        let start = addr.checked_sub(HOST_MEM_BASE).ok_or(fault.clone())?;
        let end = start.checked_add(len).ok_or(fault.clone())?;
        if end > self.bytes.len() as u64 {
            return Err(fault);
        }
        Ok(start as usize..end as usize)
    }

    pub fn contains(&self, addr: u64, len: u64) -> bool {
        self.span(addr, len).is_ok()
    }

    pub fn read(&self, addr: u64, len: u64) -> Result<Vec<u8>, MemoryError> {
        Ok(self.bytes[self.span(addr, len)?].to_vec())
    }

    pub fn write(&mut self, addr: u64, data: &[u8]) -> Result<(), MemoryError> {
        let range = self.span(addr, data.len() as u64)?;
        self.bytes[range].copy_from_slice(data);
        Ok(())
    }

    /// Reserves `len` bytes (8-byte aligned, zero-filled).
    pub fn alloc(&mut self, len: u64) -> Result<u64, MemoryError> {
        let size = len.max(1).next_multiple_of(ALIGN);
        let mut cursor = HOST_MEM_BASE;
        for (&start, &rlen) in &self.regions {
            if start - cursor >= size {
                break;
            }
            cursor = start + rlen;
        }
        if cursor + size > self.end() {
            return Err(MemoryError::OutOfMemory(len));
        }
        self.regions.insert(cursor, size);
        let range = self.span(cursor, size)?;
        self.bytes[range].fill(0);
        Ok(cursor)
    }

    pub fn free(&mut self, addr: u64) -> Result<(), MemoryError> {
        self.regions
            .remove(&addr)
            .map(|_| ())
            .ok_or(MemoryError::UnknownRegion(addr))
    }
}
