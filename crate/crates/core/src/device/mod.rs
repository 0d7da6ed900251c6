//! Register-level virtual accelerator: MMIO registers, submission and
//! completion rings in host memory, and a single in-order execution engine.
//!
//! [`QpxDevice`] is the synchronous state machine. [`VirtualQpx`] runs one on
//! its own thread and serializes MMIO from any number of callers.

mod facade;
pub mod memory;
mod raw_host;
pub mod regs;
pub mod wire;

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{decode_binary, DecodeError, GateCounts};
use crate::host::DeviceInfo;
use crate::latency::{JobTiming, Timeline, TimingModel};
use crate::qsim::{run_circuit, Histogram};
use crate::transpile::{transpile, CouplingMap, TranspileCache, TranspileError, DEFAULT_CAPACITY};

pub use facade::VirtualQpx;
pub use memory::{HostMemory, MemoryError, SharedMemory, DEFAULT_HOST_MEM_BYTES, HOST_MEM_BASE};
pub use raw_host::RawHost;
pub use wire::{
    decode_result, encode_result, CompletionRecord, ResultFormatError, SubmissionDescriptor, DESCRIPTOR_LEN,
    FLAG_LATENCY, RECORD_LEN,
};

/// Device status codes, used in ERR_CODE and in completion records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u32)]
pub enum ErrorCode {
    Ok = 0,
    BadMagic = 1,
    UnsupportedVersion = 2,
    QubitOutOfRange = 3,
    BadOpcode = 4,
    DmaFault = 5,
    BadDoorbell = 6,
    Cancelled = 7,
    /// Truncated or trailing payload bytes, bad descriptor fields, invalid
    /// instruction fields.
    MalformedPayload = 8,
    /// Ring lengths or bases rejected when ENABLE was set.
    BadRingConfig = 9,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 10] = [
        ErrorCode::Ok,
        ErrorCode::BadMagic,
        ErrorCode::UnsupportedVersion,
        ErrorCode::QubitOutOfRange,
        ErrorCode::BadOpcode,
        ErrorCode::DmaFault,
        ErrorCode::BadDoorbell,
        ErrorCode::Cancelled,
        ErrorCode::MalformedPayload,
        ErrorCode::BadRingConfig,
    ];

    pub fn from_u32(v: u32) -> Option<Self> {
        Self::ALL.get(v as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorCode::Ok => "OK",
            ErrorCode::BadMagic => "BAD_MAGIC",
            ErrorCode::UnsupportedVersion => "UNSUPPORTED_VERSION",
            ErrorCode::QubitOutOfRange => "QUBIT_OUT_OF_RANGE",
            ErrorCode::BadOpcode => "BAD_OPCODE",
            ErrorCode::DmaFault => "DMA_FAULT",
            ErrorCode::BadDoorbell => "BAD_DOORBELL",
            ErrorCode::Cancelled => "CANCELLED",
            ErrorCode::MalformedPayload => "MALFORMED_PAYLOAD",
            ErrorCode::BadRingConfig => "BAD_RING_CONFIG",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.name(), *self as u32)
    }
}

impl From<&DecodeError> for ErrorCode {
    fn from(e: &DecodeError) -> Self {
        match e {
            DecodeError::BadMagic(_) => ErrorCode::BadMagic,
            DecodeError::UnsupportedVersion(_) => ErrorCode::UnsupportedVersion,
            DecodeError::QubitOutOfRange { .. } => ErrorCode::QubitOutOfRange,
            DecodeError::BadOpcode { .. } => ErrorCode::BadOpcode,
            DecodeError::TruncatedPayload { .. }
            | DecodeError::TrailingBytes(_)
            | DecodeError::BadHeader(_)
            | DecodeError::InvalidInstruction { .. } => ErrorCode::MalformedPayload,
        }
    }
}

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("coupling map is disconnected")]
    DisconnectedCoupling,
    #[error("{0} qubits is outside 1..=16")]
    QubitCount(u16),
}

/// Called from the device thread when IRQ_STATUS rises while unmasked.
/// Must not block.
pub type InterruptSink = Arc<dyn Fn() + Send + Sync>;

/// Construction-time device parameters (the "card").
#[derive(Debug, Clone, PartialEq)]
pub struct QpxConfig {
    pub coupling: CouplingMap,
    /// Mixed with each job id to seed fidelity-mode sampling.
    pub seed: u64,
    pub timing: TimingModel,
    pub cache_capacity: usize,
}

impl QpxConfig {
    pub fn new(coupling: CouplingMap) -> Self {
        Self {
            coupling,
            seed: 0,
            timing: TimingModel::shipped(),
            cache_capacity: DEFAULT_CAPACITY,
        }
    }
}

impl Default for QpxConfig {
    /// 16 qubits on a line.
    fn default() -> Self {
        Self::new(CouplingMap::line(16).expect("16-qubit line"))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sampling seed of a fidelity-mode job.
pub fn job_seed(device_seed: u64, job_id: u64) -> u64 {
    splitmix64(job_id ^ device_seed)
}

const TRACE_CAPACITY: usize = 1 << 16;

/// Outcome of one executed descriptor, before it is posted to the CQ.
struct Executed {
    record: CompletionRecord,
    timing: JobTiming,
}

/// The device state machine. Not thread-safe by itself.
pub struct QpxDevice {
    config: QpxConfig,
    info: DeviceInfo,
    memory: SharedMemory,
    cache: TranspileCache,
    regs: regs::Registers,
    sq_head: u32,
    cq_tail: u32,
    stalled: Option<CompletionRecord>,
    timeline: Timeline,
    trace: HashMap<u64, JobTiming>,
    trace_order: VecDeque<u64>,
    sink: Option<InterruptSink>,
}

impl fmt::Debug for QpxDevice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QpxDevice")
            .field("regs", &self.regs)
            .field("sq_head", &self.sq_head)
            .field("cq_tail", &self.cq_tail)
            .field("stalled", &self.stalled)
            .finish_non_exhaustive()
    }
}

impl QpxDevice {
    pub fn new(config: QpxConfig, memory: SharedMemory) -> Result<Self, DeviceError> {
        let n = config.coupling.num_qubits();
        if !(1..=crate::circuit::MAX_QUBITS).contains(&n) {
            return Err(DeviceError::QubitCount(n));
        }
        if !config.coupling.is_connected() {
            return Err(DeviceError::DisconnectedCoupling);
        }
        Ok(Self {
            info: DeviceInfo::for_coupling(config.coupling.clone()),
            cache: TranspileCache::new(config.cache_capacity),
            config,
            memory,
            regs: regs::Registers::default(),
            sq_head: 0,
            cq_tail: 0,
            stalled: None,
            timeline: Timeline::default(),
            trace: HashMap::new(),
            trace_order: VecDeque::new(),
            sink: None,
        })
    }

    pub fn info(&self) -> &DeviceInfo {
        &self.info
    }

    pub fn config(&self) -> &QpxConfig {
        &self.config
    }

    pub fn memory(&self) -> &SharedMemory {
        &self.memory
    }

    pub fn cache(&self) -> &TranspileCache {
        &self.cache
    }

    pub fn register_interrupt_sink(&mut self, sink: Option<InterruptSink>) {
        self.sink = sink;
    }

    /// Current model time of the execution engine.
    pub fn model_time_ns(&self) -> u64 {
        self.timeline.now()
    }

    /// Removes and returns the timing trace of a finished job.
    pub fn take_timing(&mut self, job_id: u64) -> Option<JobTiming> {
        self.trace.remove(&job_id)
    }

    fn status(&self) -> u32 {
        let mut s = 0;
        if self.regs.enabled() {
            s |= regs::STATUS_READY;
            if self.has_work() {
                s |= regs::STATUS_BUSY;
            }
        }
        if self.regs.err_code != 0 {
            s |= regs::STATUS_ERROR;
        }
        if self.stalled.is_some() {
            s |= regs::STATUS_STALLED;
        }
        s
    }

    fn has_work(&self) -> bool {
        self.stalled.is_some() || self.sq_head != self.regs.sq_tail
    }

    pub fn mmio_read(&self, offset: u32) -> u32 {
        match offset {
            regs::MAGIC => regs::DEVICE_MAGIC,
            regs::VERSION => regs::DEVICE_VERSION,
            regs::CAPS => regs::caps(self.info.num_qubits),
            regs::CTRL => self.regs.ctrl,
            regs::STATUS => self.status(),
            regs::DOORBELL => self.regs.sq_tail,
            regs::SQ_BASE_LO => self.regs.sq_base as u32,
            regs::SQ_BASE_HI => (self.regs.sq_base >> 32) as u32,
            regs::SQ_LEN => self.regs.sq_len,
            regs::CQ_BASE_LO => self.regs.cq_base as u32,
            regs::CQ_BASE_HI => (self.regs.cq_base >> 32) as u32,
            regs::CQ_LEN => self.regs.cq_len,
            regs::CQ_HEAD => self.regs.cq_head,
            regs::IRQ_MASK => self.regs.irq_mask,
            regs::IRQ_STATUS => self.regs.irq_status,
            regs::ERR_CODE => self.regs.err_code,
            _ => regs::UNMAPPED,
        }
    }

    /// Register write followed by queue processing to quiescence.
    pub fn mmio_write(&mut self, offset: u32, value: u32) {
        self.write_register(offset, value);
        self.process_submissions();
    }

    /// Register side effects only; no job runs.
    pub(crate) fn write_register(&mut self, offset: u32, value: u32) {
        match offset {
            regs::CTRL => self.write_ctrl(value),
            regs::DOORBELL => {
                if !self.regs.enabled() || value >= self.regs.sq_len {
                    self.fault(ErrorCode::BadDoorbell);
                } else {
                    self.regs.sq_tail = value;
                }
            }
            regs::SQ_BASE_LO | regs::SQ_BASE_HI | regs::SQ_LEN | regs::CQ_BASE_LO | regs::CQ_BASE_HI | regs::CQ_LEN => {
                self.regs.write_ring_config(offset, value)
            }
            regs::CQ_HEAD => {
                if !self.regs.enabled() || value >= self.regs.cq_len {
                    self.fault(ErrorCode::BadDoorbell);
                } else {
                    self.regs.cq_head = value;
                }
            }
            regs::IRQ_MASK => {
                let was_masked = self.regs.irq_mask & regs::IRQ_CQ == 0;
                self.regs.irq_mask = value & regs::IRQ_CQ;
                if was_masked && self.irq_unmasked() && self.regs.irq_status & regs::IRQ_CQ != 0 {
                    self.notify();
                }
            }
            regs::IRQ_STATUS => self.regs.irq_status &= !value,
            // any write clears
            regs::ERR_CODE => self.regs.err_code = 0,
            _ => {}
        }
    }

    fn write_ctrl(&mut self, value: u32) {
        if value & regs::CTRL_RESET != 0 {
            self.reset();
            return;
        }
        let enabling = !self.regs.enabled() && value & regs::CTRL_ENABLE != 0;
        if enabling && !self.ring_config_valid() {
            self.fault(ErrorCode::BadRingConfig);
            self.regs.set_ctrl(value & !regs::CTRL_ENABLE);
            return;
        }
        self.regs.set_ctrl(value);
    }

    /// Power-on state, keeping the sink, the memory and the transpile cache.
    fn reset(&mut self) {
        // the host never learns about an unposted result, so release it here
        if let Some(rec) = self.stalled.take() {
            if rec.result_len > 0 {
                let _ = self.memory.lock().unwrap().free(rec.result_addr);
            }
        }
        self.regs = regs::Registers::default();
        self.sq_head = 0;
        self.cq_tail = 0;
        self.stalled = None;
        self.timeline = Timeline::default();
        self.trace.clear();
        self.trace_order.clear();
    }

    fn ring_config_valid(&self) -> bool {
        let r = &self.regs;
        let len_ok = |n: u32| (regs::MIN_RING_LEN..=regs::MAX_RING_LEN).contains(&n);
        if !len_ok(r.sq_len) || !len_ok(r.cq_len) {
            return false;
        }
        let mem = self.memory.lock().unwrap();
        mem.contains(r.sq_base, u64::from(r.sq_len) * DESCRIPTOR_LEN as u64)
            && mem.contains(r.cq_base, u64::from(r.cq_len) * RECORD_LEN as u64)
    }

    fn fault(&mut self, code: ErrorCode) {
        self.regs.err_code = code as u32;
    }

    fn irq_unmasked(&self) -> bool {
        self.regs.irq_mask & regs::IRQ_CQ != 0
    }

    fn notify(&self) {
        if let Some(sink) = &self.sink {
            sink();
        }
    }

    fn raise_irq(&mut self) {
        let was_pending = self.regs.irq_status & regs::IRQ_CQ != 0;
        self.regs.irq_status |= regs::IRQ_CQ;
        if !was_pending && self.irq_unmasked() {
            self.notify();
        }
    }

    fn cq_full(&self) -> bool {
        (self.cq_tail + 1) % self.regs.cq_len == self.regs.cq_head
    }

    /// Runs queued descriptors until the SQ is empty or the CQ is full.
    pub fn process_submissions(&mut self) {
        while self.step() {}
    }

    /// Does one unit of work: posts a stalled completion, or consumes and
    /// executes one descriptor. Returns false when nothing could be done.
    pub fn step(&mut self) -> bool {
        if !self.regs.enabled() {
            return false;
        }
        if let Some(record) = self.stalled {
            if self.cq_full() {
                return false;
            }
            self.stalled = None;
            self.post(record);
            return true;
        }
        if self.sq_head == self.regs.sq_tail {
            return false;
        }
        let slot = self.regs.sq_base + u64::from(self.sq_head) * DESCRIPTOR_LEN as u64;
        let raw = self.memory.lock().unwrap().read(slot, DESCRIPTOR_LEN as u64);
        let Ok(raw) = raw else {
            self.fault(ErrorCode::DmaFault);
            return false;
        };
        self.sq_head = (self.sq_head + 1) % self.regs.sq_len;
        let desc = SubmissionDescriptor::decode(raw.as_slice().try_into().unwrap());
        let done = self.execute(&desc);
        self.record_timing(desc.job_id, done.timing);
        if self.cq_full() {
            self.stalled = Some(done.record);
        } else {
            self.post(done.record);
        }
        true
    }

    fn post(&mut self, record: CompletionRecord) {
        let slot = self.regs.cq_base + u64::from(self.cq_tail) * RECORD_LEN as u64;
        if self.memory.lock().unwrap().write(slot, &record.encode()).is_err() {
            self.fault(ErrorCode::DmaFault);
            return;
        }
        self.cq_tail = (self.cq_tail + 1) % self.regs.cq_len;
        self.raise_irq();
    }

    fn record_timing(&mut self, job_id: u64, timing: JobTiming) {
        if self.trace.insert(job_id, timing).is_none() {
            self.trace_order.push_back(job_id);
        }
        while self.trace_order.len() > TRACE_CAPACITY {
            if let Some(old) = self.trace_order.pop_front() {
                self.trace.remove(&old);
            }
        }
    }

    fn execute(&mut self, desc: &SubmissionDescriptor) -> Executed {
        let payload_len = u64::from(desc.payload_len);
        let (status, counts, result) = match self.run_job(desc) {
            Ok((counts, result)) => (ErrorCode::Ok, counts, Some(result)),
            Err(code) => (code, GateCounts::default(), None),
        };
        if status == ErrorCode::DmaFault {
            self.fault(ErrorCode::DmaFault);
        }
        let (result_addr, result_len) = result.unwrap_or((0, 0));
        let shots = if status == ErrorCode::Ok {
            u64::from(desc.shots)
        } else {
            0
        };
        let phases = self
            .config
            .timing
            .phases(payload_len, u64::from(result_len), &counts, shots);
        let (start_ns, end_ns) = self.timeline.serve(self.timeline.now(), phases.service_ns());
        Executed {
            record: CompletionRecord {
                job_id: desc.job_id,
                status: status as u32,
                result_len,
                result_addr,
                exec_time_ns: phases.exec_ns,
            },
            timing: JobTiming {
                start_ns,
                end_ns,
                phases,
            },
        }
    }

    /// Fetches, decodes and runs a job; returns the gate counts charged and
    /// the `(addr, len)` of the result written to host memory.
    fn run_job(&mut self, desc: &SubmissionDescriptor) -> Result<(GateCounts, (u64, u32)), ErrorCode> {
        if desc.reserved != 0 || desc.flags & !wire::KNOWN_FLAGS != 0 || desc.shots == 0 {
            return Err(ErrorCode::MalformedPayload);
        }
        let payload = self
            .memory
            .lock()
            .unwrap()
            .read(desc.payload_addr, u64::from(desc.payload_len))
            .map_err(|_| ErrorCode::DmaFault)?;
        let circuit = decode_binary(&payload).map_err(|e| ErrorCode::from(&e))?;
        if circuit.num_qubits > self.info.num_qubits {
            return Err(ErrorCode::QubitOutOfRange);
        }
        let counts = circuit.gate_counts();
        let shots = u64::from(desc.shots);
        let latency = self.regs.latency_mode() || desc.flags & FLAG_LATENCY != 0;
        let histogram = if latency {
            Histogram::all_zero(circuit.num_cbits, shots)
        } else {
            let seed = job_seed(self.config.seed, desc.job_id);
            let hist = if self.regs.bypass_transpile() {
                run_circuit(&circuit, shots, seed)
            } else {
                let lowered = transpile(&circuit, &self.info, &self.cache).map_err(|e| match e {
                    TranspileError::TooManyQubits { .. } => ErrorCode::QubitOutOfRange,
                    _ => ErrorCode::MalformedPayload,
                })?;
                run_circuit(&lowered.circuit, shots, seed)
            };
            hist.map_err(|_| ErrorCode::MalformedPayload)?
        };
        let bytes = encode_result(&histogram);
        let mut mem = self.memory.lock().unwrap();
        let addr = mem.alloc(bytes.len() as u64).map_err(|_| ErrorCode::DmaFault)?;
        mem.write(addr, &bytes).map_err(|_| ErrorCode::DmaFault)?;
        Ok((counts, (addr, bytes.len() as u32)))
    }
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicUsize, Ordering};

    use super::*;
    use crate::circuit::{encode_binary, Circuit};

    struct Rig {
        dev: QpxDevice,
        sq: u64,
        cq: u64,
        sq_tail: u32,
        cq_head: u32,
        irqs: Arc<AtomicUsize>,
    }

    const LEN: u32 = 4;

    impl Rig {
        fn new() -> Self {
            let mem = HostMemory::shared(1 << 16);
            let (sq, cq) = {
                let mut m = mem.lock().unwrap();
                (m.alloc(LEN as u64 * 32).unwrap(), m.alloc(LEN as u64 * 32).unwrap())
            };
            let mut dev = QpxDevice::new(QpxConfig::default(), mem).unwrap();
            let irqs = Arc::new(AtomicUsize::new(0));
            let counter = irqs.clone();
            dev.register_interrupt_sink(Some(Arc::new(move || {
                counter.fetch_add(1, Ordering::SeqCst);
            })));
            let mut rig = Rig {
                dev,
                sq,
                cq,
                sq_tail: 0,
                cq_head: 0,
                irqs,
            };
            rig.configure();
            rig
        }

        fn configure(&mut self) {
            let d = &mut self.dev;
            d.mmio_write(regs::SQ_BASE_LO, self.sq as u32);
            d.mmio_write(regs::SQ_BASE_HI, (self.sq >> 32) as u32);
            d.mmio_write(regs::SQ_LEN, LEN);
            d.mmio_write(regs::CQ_BASE_LO, self.cq as u32);
            d.mmio_write(regs::CQ_BASE_HI, (self.cq >> 32) as u32);
            d.mmio_write(regs::CQ_LEN, LEN);
            d.mmio_write(regs::IRQ_MASK, 1);
            d.mmio_write(regs::CTRL, regs::CTRL_ENABLE);
        }

        /// Writes a descriptor without ringing the doorbell.
        fn stage(&mut self, job_id: u64, payload: &[u8], shots: u32) {
            let mut m = self.dev.memory().lock().unwrap();
            let addr = m.alloc(payload.len() as u64).unwrap();
            m.write(addr, payload).unwrap();
            let d = SubmissionDescriptor {
                job_id,
                payload_addr: addr,
                payload_len: payload.len() as u32,
                shots,
                ..Default::default()
            };
            m.write(self.sq + u64::from(self.sq_tail) * 32, &d.encode()).unwrap();
            self.sq_tail = (self.sq_tail + 1) % LEN;
        }

        fn submit(&mut self, job_id: u64, payload: &[u8], shots: u32) {
            self.stage(job_id, payload, shots);
            self.dev.mmio_write(regs::DOORBELL, self.sq_tail);
        }

        fn drain(&mut self) -> Vec<CompletionRecord> {
            let mut out = Vec::new();
            loop {
                let slot = self.cq + u64::from(self.cq_head) * 32;
                let raw = self.dev.memory().lock().unwrap().read(slot, 32).unwrap();
                let rec = CompletionRecord::decode(raw.as_slice().try_into().unwrap());
                if rec.job_id == 0 {
                    break;
                }
                self.dev.memory().lock().unwrap().write(slot, &[0; 32]).unwrap();
                self.cq_head = (self.cq_head + 1) % LEN;
                out.push(rec);
            }
            self.dev.mmio_write(regs::IRQ_STATUS, 1);
            self.dev.mmio_write(regs::CQ_HEAD, self.cq_head);
            out
        }

        fn result(&self, rec: &CompletionRecord) -> Histogram {
            let m = self.dev.memory().lock().unwrap();
            decode_result(&m.read(rec.result_addr, u64::from(rec.result_len)).unwrap()).unwrap()
        }
    }

    fn bell() -> Vec<u8> {
        encode_binary(&Circuit::bell()).unwrap()
    }

    #[test]
    fn idle_register_values() {
        let rig = Rig::new();
        assert_eq!(rig.dev.mmio_read(regs::MAGIC), 0x5150_4558);
        assert_eq!(rig.dev.mmio_read(regs::STATUS), regs::STATUS_READY);
        assert_eq!(rig.dev.mmio_read(0xFC), 0xFFFF_FFFF);
        assert_eq!(rig.dev.mmio_read(0x3E), 0xFFFF_FFFF);
        assert_eq!(rig.dev.mmio_read(regs::CAPS) & 0xFF, 16);
    }

    #[test]
    fn read_only_and_w1c() {
        let mut rig = Rig::new();
        rig.dev.mmio_write(regs::MAGIC, 0);
        rig.dev.mmio_write(regs::STATUS, 0xFFFF);
        assert_eq!(rig.dev.mmio_read(regs::MAGIC), regs::DEVICE_MAGIC);
        assert_eq!(rig.dev.mmio_read(regs::STATUS), regs::STATUS_READY);
        rig.submit(1, &bell(), 10);
        assert_eq!(rig.dev.mmio_read(regs::IRQ_STATUS), 1);
        rig.dev.mmio_write(regs::IRQ_STATUS, 1);
        assert_eq!(rig.dev.mmio_read(regs::IRQ_STATUS), 0);
    }

    #[test]
    fn doorbell_out_of_range() {
        let mut rig = Rig::new();
        rig.dev.mmio_write(regs::DOORBELL, LEN);
        assert_eq!(rig.dev.mmio_read(regs::ERR_CODE), ErrorCode::BadDoorbell as u32);
        assert_ne!(rig.dev.mmio_read(regs::STATUS) & regs::STATUS_ERROR, 0);
        rig.dev.mmio_write(regs::ERR_CODE, 0);
        assert_eq!(rig.dev.mmio_read(regs::STATUS) & regs::STATUS_ERROR, 0);
    }

    #[test]
    fn bad_ring_config_refuses_enable() {
        let mem = HostMemory::shared(1024);
        let mut dev = QpxDevice::new(QpxConfig::default(), mem).unwrap();
        dev.mmio_write(regs::SQ_LEN, 1);
        dev.mmio_write(regs::CTRL, regs::CTRL_ENABLE);
        assert_eq!(dev.mmio_read(regs::ERR_CODE), ErrorCode::BadRingConfig as u32);
        assert_eq!(dev.mmio_read(regs::CTRL) & regs::CTRL_ENABLE, 0);
    }

    #[test]
    fn bell_job_completes() {
        let mut rig = Rig::new();
        rig.submit(7, &bell(), 1000);
        let recs = rig.drain();
        assert_eq!(recs.len(), 1);
        assert_eq!((recs[0].job_id, recs[0].status), (7, 0));
        let h = rig.result(&recs[0]);
        assert_eq!(h.total(), 1000);
        assert!(h.counts.keys().all(|k| *k == 0 || *k == 3));
        assert_eq!(rig.irqs.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn malformed_payload_then_valid() {
        let mut rig = Rig::new();
        let mut bad = bell();
        bad[0] ^= 0xFF;
        rig.submit(1, &bad, 10);
        rig.submit(2, &bell()[..20], 10);
        rig.submit(3, &bell(), 10);
        let recs = rig.drain();
        let status: Vec<_> = recs.iter().map(|r| (r.job_id, r.status, r.result_len)).collect();
        assert_eq!(status, vec![(1, 1, 0), (2, 8, 0), (3, 0, 24 + 16)]);
    }

    #[test]
    fn full_cq_stalls_until_head_moves() {
        let mut rig = Rig::new();
        for id in 1..=3 {
            rig.submit(id, &bell(), 1);
        }
        // CQ of 4 holds 3 records; the fourth job stalls.
        rig.submit(4, &bell(), 1);
        assert_ne!(rig.dev.mmio_read(regs::STATUS) & regs::STATUS_STALLED, 0);
        let first = rig.drain();
        assert_eq!(first.iter().map(|r| r.job_id).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert_eq!(rig.dev.mmio_read(regs::STATUS) & regs::STATUS_STALLED, 0);
        assert_eq!(rig.drain().iter().map(|r| r.job_id).collect::<Vec<_>>(), vec![4]);
    }

    #[test]
    fn masked_completion_delivered_on_unmask() {
        let mut rig = Rig::new();
        rig.dev.mmio_write(regs::IRQ_MASK, 0);
        rig.submit(1, &bell(), 1);
        assert_eq!(rig.irqs.load(Ordering::SeqCst), 0);
        rig.dev.mmio_write(regs::IRQ_MASK, 1);
        assert_eq!(rig.irqs.load(Ordering::SeqCst), 1);
        rig.dev.mmio_write(regs::IRQ_MASK, 1);
        assert_eq!(rig.irqs.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn two_completions_coalesce() {
        let mut rig = Rig::new();
        rig.stage(1, &bell(), 1);
        rig.stage(2, &bell(), 1);
        rig.dev.mmio_write(regs::DOORBELL, rig.sq_tail);
        assert_eq!(rig.irqs.load(Ordering::SeqCst), 1);
        assert_eq!(rig.drain().len(), 2);
    }

    #[test]
    fn latency_mode_zero_histogram_and_exec_time() {
        let mut rig = Rig::new();
        rig.dev
            .mmio_write(regs::CTRL, regs::CTRL_ENABLE | regs::CTRL_MODE_LATENCY);
        rig.submit(1, &bell(), 100);
        let rec = rig.drain()[0];
        assert_eq!(rec.status, 0);
        assert_eq!(rec.exec_time_ns, 100 * (20 + 40 + 2 * 300));
        let h = rig.result(&rec);
        assert_eq!(h.counts.len(), 1);
        assert_eq!(h.get(0), 100);
        let t = rig.dev.take_timing(1).unwrap();
        assert_eq!(t.start_ns, 0);
        assert_eq!(t.end_ns, rig.dev.model_time_ns());
    }

    #[test]
    fn reset_returns_to_power_on() {
        let mut rig = Rig::new();
        rig.submit(1, &bell(), 1);
        rig.dev.mmio_write(regs::DOORBELL, 9);
        rig.dev.mmio_write(regs::CTRL, regs::CTRL_RESET);
        for off in (0..0x40).step_by(4) {
            let fresh = QpxDevice::new(QpxConfig::default(), HostMemory::shared(16)).unwrap();
            assert_eq!(rig.dev.mmio_read(off), fresh.mmio_read(off), "offset {off:#x}");
        }
        assert_eq!(rig.dev.model_time_ns(), 0);
    }

    #[test]
    fn error_codes_round_trip() {
        for code in ErrorCode::ALL {
            assert_eq!(ErrorCode::from_u32(code as u32), Some(code));
        }
        assert_eq!(ErrorCode::from_u32(10), None);
        assert_eq!(ErrorCode::DmaFault.to_string(), "DMA_FAULT (5)");
    }

    #[test]
    fn seeds_differ_per_job() {
        assert_ne!(job_seed(0, 1), job_seed(0, 2));
        assert_ne!(job_seed(1, 1), job_seed(0, 1));
    }
}
