use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use super::{
    decode_result, regs, CompletionRecord, DeviceError, HostMemory, MemoryError, QpxConfig, QpxDevice,
    ResultFormatError, SubmissionDescriptor, DESCRIPTOR_LEN, RECORD_LEN,
};
use crate::qsim::Histogram;

/// A minimal synchronous driver for a [`QpxDevice`]: owns the rings, stages
/// descriptors and drains completions. Useful for protocol tests and for
/// poking at the device without the job layer.
pub struct RawHost {
    pub device: QpxDevice,
    sq: u64,
    cq: u64,
    sq_len: u32,
    cq_len: u32,
    sq_tail: u32,
    cq_head: u32,
    payloads: HashMap<u64, u64>,
    interrupts: Arc<AtomicUsize>,
}

impl RawHost {
    /// Allocates the SQ, then the CQ, from a fresh host memory. The device
    /// is left disabled; call [`RawHost::enable`].
    pub fn new(config: QpxConfig, mem_bytes: usize, sq_len: u32, cq_len: u32) -> Result<Self, DeviceError> {
        let memory = HostMemory::shared(mem_bytes);
        let (sq, cq) = {
            let mut m = memory.lock().unwrap();
            let sq = m.alloc(u64::from(sq_len) * DESCRIPTOR_LEN as u64).unwrap_or(0);
            let cq = m.alloc(u64::from(cq_len) * RECORD_LEN as u64).unwrap_or(0);
            (sq, cq)
        };
        let mut device = QpxDevice::new(config, memory)?;
        let interrupts = Arc::new(AtomicUsize::new(0));
        let counter = interrupts.clone();
        device.register_interrupt_sink(Some(Arc::new(move || {
            counter.fetch_add(1, Ordering::SeqCst);
        })));
        Ok(Self {
            device,
            sq,
            cq,
            sq_len,
            cq_len,
            sq_tail: 0,
            cq_head: 0,
            payloads: HashMap::new(),
            interrupts,
        })
    }

    pub fn sq_base(&self) -> u64 {
        self.sq
    }

    pub fn cq_base(&self) -> u64 {
        self.cq
    }

    /// Programs the rings, unmasks the interrupt and sets CTRL to
    /// `ENABLE | extra_ctrl`.
    pub fn enable(&mut self, extra_ctrl: u32) {
        let d = &mut self.device;
        d.mmio_write(regs::SQ_BASE_LO, self.sq as u32);
        d.mmio_write(regs::SQ_BASE_HI, (self.sq >> 32) as u32);
        d.mmio_write(regs::SQ_LEN, self.sq_len);
        d.mmio_write(regs::CQ_BASE_LO, self.cq as u32);
        d.mmio_write(regs::CQ_BASE_HI, (self.cq >> 32) as u32);
        d.mmio_write(regs::CQ_LEN, self.cq_len);
        d.mmio_write(regs::IRQ_MASK, regs::IRQ_CQ);
        d.mmio_write(regs::CTRL, regs::CTRL_ENABLE | extra_ctrl);
    }

    /// Copies the payload into host memory and writes a descriptor at the
    /// SQ tail, without ringing the doorbell.
    pub fn stage(&mut self, job_id: u64, payload: &[u8], shots: u32, flags: u32) -> Result<u64, MemoryError> {
        let mut m = self.device.memory().lock().unwrap();
        let addr = m.alloc(payload.len() as u64)?;
        m.write(addr, payload)?;
        let desc = SubmissionDescriptor {
            job_id,
            payload_addr: addr,
            payload_len: payload.len() as u32,
            shots,
            flags,
            reserved: 0,
        };
        m.write(
            self.sq + u64::from(self.sq_tail) * DESCRIPTOR_LEN as u64,
            &desc.encode(),
        )?;
        drop(m);
        self.payloads.insert(job_id, addr);
        self.sq_tail = (self.sq_tail + 1) % self.sq_len;
        Ok(addr)
    }

    /// Writes the raw descriptor bytes at the SQ tail.
    pub fn stage_descriptor(&mut self, desc: &SubmissionDescriptor) -> Result<(), MemoryError> {
        let slot = self.sq + u64::from(self.sq_tail) * DESCRIPTOR_LEN as u64;
        self.device.memory().lock().unwrap().write(slot, &desc.encode())?;
        self.sq_tail = (self.sq_tail + 1) % self.sq_len;
        Ok(())
    }

    /// Host half of a device reset: releases results of records still in the
    /// CQ, zeroes both rings, frees outstanding payloads and rewinds the
    /// ring indices.
    pub fn reinitialize(&mut self) {
        let unread: Vec<_> = (0..self.cq_len)
            .filter_map(|i| {
                let slot = self.cq + u64::from(i) * RECORD_LEN as u64;
                let raw = self
                    .device
                    .memory()
                    .lock()
                    .unwrap()
                    .read(slot, RECORD_LEN as u64)
                    .ok()?;
                let rec = CompletionRecord::decode(raw.as_slice().try_into().unwrap());
                (rec.job_id != 0 && rec.result_len > 0).then_some(rec.result_addr)
            })
            .collect();
        let mut m = self.device.memory().lock().unwrap();
        for addr in unread {
            let _ = m.free(addr);
        }
        let _ = m.write(self.sq, &vec![0; self.sq_len as usize * DESCRIPTOR_LEN]);
        let _ = m.write(self.cq, &vec![0; self.cq_len as usize * RECORD_LEN]);
        for (_, addr) in self.payloads.drain() {
            let _ = m.free(addr);
        }
        self.sq_tail = 0;
        self.cq_head = 0;
    }

    pub fn ring_doorbell(&mut self) {
        self.device.mmio_write(regs::DOORBELL, self.sq_tail);
    }

    pub fn submit(&mut self, job_id: u64, payload: &[u8], shots: u32, flags: u32) -> Result<u64, MemoryError> {
        let addr = self.stage(job_id, payload, shots, flags)?;
        self.ring_doorbell();
        Ok(addr)
    }

    /// True when the next CQ slot holds a record.
    pub fn cq_pending(&self) -> bool {
        self.peek().is_some()
    }

    fn peek(&self) -> Option<CompletionRecord> {
        let slot = self.cq + u64::from(self.cq_head) * RECORD_LEN as u64;
        let raw = self
            .device
            .memory()
            .lock()
            .unwrap()
            .read(slot, RECORD_LEN as u64)
            .ok()?;
        let rec = CompletionRecord::decode(raw.as_slice().try_into().unwrap());
        (rec.job_id != 0).then_some(rec)
    }

    /// Acknowledges the interrupt, consumes every posted record and frees
    /// their payload regions, then publishes the new CQ head.
    pub fn drain(&mut self) -> Vec<CompletionRecord> {
        self.device.mmio_write(regs::IRQ_STATUS, regs::IRQ_CQ);
        let mut out = Vec::new();
        while let Some(rec) = self.peek() {
            let slot = self.cq + u64::from(self.cq_head) * RECORD_LEN as u64;
            let mut m = self.device.memory().lock().unwrap();
            let _ = m.write(slot, &[0; RECORD_LEN]);
            if let Some(addr) = self.payloads.remove(&rec.job_id) {
                let _ = m.free(addr);
            }
            drop(m);
            self.cq_head = (self.cq_head + 1) % self.cq_len;
            out.push(rec);
        }
        if !out.is_empty() {
            self.device.mmio_write(regs::CQ_HEAD, self.cq_head);
        }
        out
    }

    /// Reads a record's result without freeing it.
    pub fn read_result(&self, rec: &CompletionRecord) -> Result<Vec<u8>, MemoryError> {
        self.device
            .memory()
            .lock()
            .unwrap()
            .read(rec.result_addr, u64::from(rec.result_len))
    }

    /// Decodes a record's result and frees its region.
    pub fn take_result(&mut self, rec: &CompletionRecord) -> Result<Histogram, ResultFormatError> {
        let bytes = self.read_result(rec).unwrap_or_default();
        let _ = self.device.memory().lock().unwrap().free(rec.result_addr);
        decode_result(&bytes)
    }

    /// Little-endian reads of offsets 0x00..=0x40 (the last one unmapped).
    pub fn register_dump(&self) -> Vec<u8> {
        (0..=0x40)
            .step_by(4)
            .flat_map(|off| self.device.mmio_read(off).to_le_bytes())
            .collect()
    }

    pub fn interrupts(&self) -> usize {
        self.interrupts.load(Ordering::SeqCst)
    }
}
