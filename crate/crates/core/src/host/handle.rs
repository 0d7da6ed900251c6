use std::collections::{HashMap, VecDeque};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::config::{DeviceConfig, Mode};
use super::job::{Job, JobId, JobState, MAX_PRIORITY};
use super::scheduler::{QueueEntry, SchedulingPolicy, StrictPriority};
use super::{DeviceInfo, HostError, QueueDepths};
use crate::circuit::{decode_header, HEADER_LEN};
use crate::device::{
    decode_result, regs, CompletionRecord, ErrorCode, HostMemory, SharedMemory, SubmissionDescriptor, VirtualQpx,
    DESCRIPTOR_LEN, RECORD_LEN,
};
use crate::qsim::Histogram;
use crate::transpile::CacheStats;

const LOG_CAPACITY: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub job: JobId,
    pub from: JobState,
    pub to: JobState,
}

/// Job tallies. At every quiescent point
/// `submitted == queued + in_flight + done + failed + cancelled`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobCounts {
    pub submitted: u64,
    pub queued: u64,
    pub in_flight: u64,
    pub done: u64,
    pub failed: u64,
    pub cancelled: u64,
}

impl JobCounts {
    pub fn is_conserved(&self) -> bool {
        self.submitted == self.queued + self.in_flight + self.done + self.failed + self.cancelled
    }

    fn enter(&mut self, state: JobState) {
        *self.bucket(state) += 1;
    }

    fn leave(&mut self, state: JobState) {
        *self.bucket(state) -= 1;
    }

    fn bucket(&mut self, state: JobState) -> &mut u64 {
        match state {
            JobState::Created | JobState::Queued => &mut self.queued,
            JobState::Dispatched | JobState::Running => &mut self.in_flight,
            JobState::Done => &mut self.done,
            JobState::Failed => &mut self.failed,
            JobState::Cancelled => &mut self.cancelled,
        }
    }
}

/// Persisted job store, used to carry queued and finished jobs across
/// handle lifetimes (for example between CLI invocations).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub next_id: JobId,
    pub next_seq: u64,
    pub jobs: Vec<Job>,
}

struct Store {
    jobs: HashMap<JobId, Job>,
    policy: Box<dyn SchedulingPolicy>,
    next_id: JobId,
    next_seq: u64,
    counts: JobCounts,
    log: VecDeque<Transition>,
    paused: bool,
}

impl Store {
    fn record(&mut self, job: JobId, from: JobState, to: JobState) {
        self.counts.leave(from);
        self.counts.enter(to);
        if self.log.len() == LOG_CAPACITY {
            self.log.pop_front();
        }
        self.log.push_back(Transition { job, from, to });
    }

    /// Applies `f` to job `id` and logs the state change it made.
    fn update(&mut self, id: JobId, f: impl FnOnce(&mut Job)) {
        let Some(job) = self.jobs.get_mut(&id) else { return };
        let from = job.state();
        f(job);
        let to = job.state();
        if from != to {
            self.record(id, from, to);
        }
    }
}

struct Shared {
    store: Mutex<Store>,
    changed: Condvar,
    opened: Instant,
}

impl Shared {
    fn lock(&self) -> MutexGuard<'_, Store> {
        self.store.lock().unwrap()
    }

    fn now_ns(&self) -> u64 {
        self.opened.elapsed().as_nanos() as u64
    }
}

enum Msg {
    Interrupt,
    Kick,
    Submit {
        payload: Vec<u8>,
        shots: u32,
        priority: u8,
        reply: Sender<Result<JobId, HostError>>,
    },
    Cancel(JobId, Sender<Result<(), HostError>>),
    Free(JobId, Sender<Result<(), HostError>>),
    SetPaused(bool, Sender<()>),
    Shutdown,
}

struct Inner {
    config: DeviceConfig,
    info: DeviceInfo,
    device: Arc<VirtualQpx>,
    shared: Arc<Shared>,
    tx: Sender<Msg>,
    service: Mutex<Option<JoinHandle<()>>>,
}

impl Drop for Inner {
    fn drop(&mut self) {
        let _ = self.tx.send(Msg::Shutdown);
        if let Some(t) = self.service.lock().unwrap().take() {
            let _ = t.join();
        }
    }
}

/// An open device. Cheap to clone; all clones share one device, and the
/// device closes when the last clone is dropped.
#[derive(Clone)]
pub struct DeviceHandle {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for DeviceHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DeviceHandle")
            .field("info", &self.inner.info)
            .finish_non_exhaustive()
    }
}

/// Opens a virtual device and wires its interrupt to the completion handler.
pub fn device_open(config: DeviceConfig) -> Result<DeviceHandle, HostError> {
    DeviceHandle::open(config)
}

impl DeviceHandle {
    pub fn open(config: DeviceConfig) -> Result<Self, HostError> {
        Self::open_with(config, Box::new(StrictPriority::default()), Session::default(), false)
    }

    /// Opens a device whose job store starts from `session`. Jobs that were
    /// not terminal are queued again. With `paused`, nothing is dispatched
    /// until [`DeviceHandle::resume_dispatch`].
    pub fn restore(config: DeviceConfig, session: Session, paused: bool) -> Result<Self, HostError> {
        Self::open_with(config, Box::new(StrictPriority::default()), session, paused)
    }

    /// Opens with a custom scheduling policy.
    pub fn open_with(
        config: DeviceConfig,
        mut policy: Box<dyn SchedulingPolicy>,
        session: Session,
        paused: bool,
    ) -> Result<Self, HostError> {
        let qpx = config.validate()?;
        let memory = HostMemory::shared(config.host_memory_bytes);
        let device =
            Arc::new(VirtualQpx::spawn(qpx, memory.clone()).map_err(|e| HostError::ConfigInvalid(e.to_string()))?);
        let mut info = device.info().clone();
        info.queue_depths = QueueDepths {
            submission: config.sq_len,
            completion: config.cq_len,
        };

        let mut jobs = HashMap::new();
        let mut counts = JobCounts::default();
        let mut next_id = session.next_id.max(1);
        let mut next_seq = session.next_seq;
        for mut job in session.jobs {
            job.requeue_for_restore();
            if job.id == 0 || jobs.contains_key(&job.id) {
                return Err(HostError::Session(format!("duplicate or zero job id {}", job.id)));
            }
            next_id = next_id.max(job.id + 1);
            next_seq = next_seq.max(job.seq + 1);
            counts.submitted += 1;
            counts.enter(job.state());
            if job.state() == JobState::Queued {
                policy.push(QueueEntry {
                    priority: job.priority,
                    seq: job.seq,
                    id: job.id,
                });
            }
            jobs.insert(job.id, job);
        }

        let shared = Arc::new(Shared {
            store: Mutex::new(Store {
                jobs,
                policy,
                next_id,
                next_seq,
                counts,
                log: VecDeque::new(),
                paused,
            }),
            changed: Condvar::new(),
            opened: Instant::now(),
        });

        let (tx, rx) = mpsc::channel();
        let rings = Rings::setup(&device, &memory, &config)?;
        let irq_tx = tx.clone();
        device.register_interrupt_sink(Some(Arc::new(move || {
            let _ = irq_tx.send(Msg::Interrupt);
        })));
        device.mmio_write(regs::IRQ_MASK, regs::IRQ_CQ);

        let mut service = Service {
            device: device.clone(),
            memory,
            shared: shared.clone(),
            rings,
            in_flight: VecDeque::new(),
            high_water: config.queue_high_water,
            payload_limit: config.host_memory_bytes / 4,
        };
        let thread = thread::Builder::new()
            .name("qal-service".into())
            .spawn(move || service.run(rx))
            .expect("spawn service thread");
        // restored queued jobs need a first dispatch pass
        let _ = tx.send(Msg::Kick);

        Ok(Self {
            inner: Arc::new(Inner {
                config,
                info,
                device,
                shared,
                tx,
                service: Mutex::new(Some(thread)),
            }),
        })
    }

    pub fn config(&self) -> &DeviceConfig {
        &self.inner.config
    }

    pub fn device_query(&self) -> DeviceInfo {
        self.inner.info.clone()
    }

    fn request<T>(&self, make: impl FnOnce(Sender<T>) -> Msg) -> Result<T, HostError> {
        let (reply, rx) = mpsc::channel();
        self.inner.tx.send(make(reply)).map_err(|_| HostError::DeviceClosed)?;
        rx.recv().map_err(|_| HostError::DeviceClosed)
    }

    /// Validates the header and queues the job. Returns immediately.
    pub fn job_submit(&self, payload: &[u8], shots: u64, priority: u8) -> Result<JobId, HostError> {
        if priority > MAX_PRIORITY {
            return Err(HostError::InvalidPriority(priority));
        }
        let shots32 = u32::try_from(shots)
            .ok()
            .filter(|&s| s > 0)
            .ok_or(HostError::InvalidShots(shots))?;
        if payload.len() < HEADER_LEN {
            return Err(HostError::BadHeader(format!(
                "payload is {} bytes, header needs {HEADER_LEN}",
                payload.len()
            )));
        }
        decode_header(payload).map_err(|e| HostError::BadHeader(e.to_string()))?;
        self.request(|reply| Msg::Submit {
            payload: payload.to_vec(),
            shots: shots32,
            priority,
            reply,
        })?
    }

    pub fn job_check(&self, id: JobId) -> Result<JobState, HostError> {
        let store = self.inner.shared.lock();
        store.jobs.get(&id).map(Job::state).ok_or(HostError::UnknownJob(id))
    }

    /// Blocks until the job is terminal. `None` waits forever.
    pub fn job_wait(&self, id: JobId, timeout: Option<Duration>) -> Result<JobState, HostError> {
        let deadline = timeout.map(|t| Instant::now() + t);
        let shared = &self.inner.shared;
        let mut store = shared.lock();
        loop {
            let state = store.jobs.get(&id).map(Job::state).ok_or(HostError::UnknownJob(id))?;
            if state.is_terminal() {
                return Ok(state);
            }
            store = match deadline {
                None => shared.changed.wait(store).unwrap(),
                Some(d) => {
                    let now = Instant::now();
                    if now >= d {
                        return Err(HostError::TimedOut(id));
                    }
                    shared.changed.wait_timeout(store, d - now).unwrap().0
                }
            };
        }
    }

    pub fn job_get_results(&self, id: JobId) -> Result<Histogram, HostError> {
        let store = self.inner.shared.lock();
        let job = store.jobs.get(&id).ok_or(HostError::UnknownJob(id))?;
        match job.state() {
            JobState::Done => Ok(job.result().cloned().expect("DONE jobs carry a result")),
            JobState::Failed | JobState::Cancelled => Err(HostError::JobFailed {
                id,
                code: job.error().expect("failed jobs carry a code"),
            }),
            _ => Err(HostError::NotFinished(id)),
        }
    }

    /// Only QUEUED jobs can be cancelled.
    pub fn job_cancel(&self, id: JobId) -> Result<(), HostError> {
        self.request(|reply| Msg::Cancel(id, reply))?
    }

    /// Drops a terminal job and its result.
    pub fn job_free(&self, id: JobId) -> Result<(), HostError> {
        self.request(|reply| Msg::Free(id, reply))?
    }

    /// A copy of the job record.
    pub fn job_info(&self, id: JobId) -> Result<Job, HostError> {
        let store = self.inner.shared.lock();
        store.jobs.get(&id).cloned().ok_or(HostError::UnknownJob(id))
    }

    pub fn job_ids(&self) -> Vec<JobId> {
        let store = self.inner.shared.lock();
        let mut ids: Vec<_> = store.jobs.keys().copied().collect();
        ids.sort_unstable();
        ids
    }

    /// Stops moving jobs from the queue to the device. In-flight jobs finish.
    pub fn pause_dispatch(&self) -> Result<(), HostError> {
        self.request(|reply| Msg::SetPaused(true, reply))
    }

    pub fn resume_dispatch(&self) -> Result<(), HostError> {
        self.request(|reply| Msg::SetPaused(false, reply))
    }

    pub fn counts(&self) -> JobCounts {
        self.inner.shared.lock().counts
    }

    pub fn transition_log(&self) -> Vec<Transition> {
        self.inner.shared.lock().log.iter().copied().collect()
    }

    /// Blocks until no job is queued or in flight, or the timeout passes.
    /// Returns whether the handle went idle.
    pub fn wait_idle(&self, timeout: Option<Duration>) -> bool {
        let deadline = timeout.map(|t| Instant::now() + t);
        let shared = &self.inner.shared;
        let mut store = shared.lock();
        loop {
            if store.counts.queued == 0 && store.counts.in_flight == 0 {
                return true;
            }
            store = match deadline {
                None => shared.changed.wait(store).unwrap(),
                Some(d) => {
                    let now = Instant::now();
                    if now >= d {
                        return false;
                    }
                    shared.changed.wait_timeout(store, d - now).unwrap().0
                }
            };
        }
    }

    /// Current model time of the device's execution engine.
    pub fn model_time_ns(&self) -> u64 {
        self.inner.device.model_time_ns()
    }

    pub fn mode(&self) -> Mode {
        self.inner.config.mode
    }

    pub fn cache_stats(&self) -> CacheStats {
        self.inner.device.cache_stats()
    }

    /// Direct register read, for diagnostics.
    pub fn mmio_read(&self, offset: u32) -> u32 {
        self.inner.device.mmio_read(offset)
    }

    /// Snapshot of every job; non-terminal jobs are recorded as QUEUED.
    pub fn export_session(&self) -> Session {
        let store = self.inner.shared.lock();
        let mut jobs: Vec<Job> = store.jobs.values().cloned().collect();
        jobs.sort_by_key(|j| j.id);
        for j in &mut jobs {
            j.requeue_for_restore();
        }
        Session {
            next_id: store.next_id,
            next_seq: store.next_seq,
            jobs,
        }
    }
}

/// Host-side view of the two rings.
struct Rings {
    sq_base: u64,
    sq_len: u32,
    sq_tail: u32,
    cq_base: u64,
    cq_len: u32,
    cq_head: u32,
}

impl Rings {
    fn setup(device: &VirtualQpx, memory: &SharedMemory, config: &DeviceConfig) -> Result<Self, HostError> {
        let (sq_base, cq_base) = {
            let mut m = memory.lock().unwrap();
            let oom = |e: crate::device::MemoryError| HostError::ConfigInvalid(e.to_string());
            (
                m.alloc(u64::from(config.sq_len) * DESCRIPTOR_LEN as u64).map_err(oom)?,
                m.alloc(u64::from(config.cq_len) * RECORD_LEN as u64).map_err(oom)?,
            )
        };
        device.mmio_write(regs::SQ_BASE_LO, sq_base as u32);
        device.mmio_write(regs::SQ_BASE_HI, (sq_base >> 32) as u32);
        device.mmio_write(regs::SQ_LEN, config.sq_len);
        device.mmio_write(regs::CQ_BASE_LO, cq_base as u32);
        device.mmio_write(regs::CQ_BASE_HI, (cq_base >> 32) as u32);
        device.mmio_write(regs::CQ_LEN, config.cq_len);
        let mut ctrl = regs::CTRL_ENABLE;
        if config.mode == Mode::Latency {
            ctrl |= regs::CTRL_MODE_LATENCY;
        }
        if config.bypass_transpile {
            ctrl |= regs::CTRL_BYPASS_TRANSPILE;
        }
        device.mmio_write(regs::CTRL, ctrl);
        let err = device.mmio_read(regs::ERR_CODE);
        if err != 0 {
            return Err(HostError::ConfigInvalid(format!(
                "device refused ring setup, ERR_CODE {err}"
            )));
        }
        Ok(Self {
            sq_base,
            sq_len: config.sq_len,
            sq_tail: 0,
            cq_base,
            cq_len: config.cq_len,
            cq_head: 0,
        })
    }
}

/// The single context that mutates the job store and talks to the device.
struct Service {
    device: Arc<VirtualQpx>,
    memory: SharedMemory,
    shared: Arc<Shared>,
    rings: Rings,
    /// Dispatched jobs in device order, with their payload regions.
    in_flight: VecDeque<(JobId, u64)>,
    high_water: usize,
    payload_limit: usize,
}

impl Service {
    fn run(&mut self, rx: Receiver<Msg>) {
        while let Ok(first) = rx.recv() {
            let mut interrupted = false;
            let mut next = Some(first);
            while let Some(msg) = next {
                match msg {
                    Msg::Shutdown => return,
                    Msg::Interrupt => interrupted = true,
                    other => self.handle(other),
                }
                next = rx.try_recv().ok();
            }
            if interrupted {
                // W1C, then a read to flush the posted write, then drain:
                // any record posted after this point raises a new interrupt.
                self.device.mmio_write(regs::IRQ_STATUS, regs::IRQ_CQ);
                self.device.mmio_read(regs::IRQ_STATUS);
            }
            self.reap();
            self.dispatch();
        }
    }

    fn handle(&mut self, msg: Msg) {
        match msg {
            Msg::Submit {
                payload,
                shots,
                priority,
                reply,
            } => {
                let _ = reply.send(self.submit(payload, shots, priority));
            }
            Msg::Cancel(id, reply) => {
                let _ = reply.send(self.cancel(id));
            }
            Msg::Free(id, reply) => {
                let _ = reply.send(self.free(id));
            }
            Msg::SetPaused(paused, reply) => {
                self.shared.lock().paused = paused;
                let _ = reply.send(());
            }
            Msg::Interrupt | Msg::Kick | Msg::Shutdown => {}
        }
    }

    fn submit(&mut self, payload: Vec<u8>, shots: u32, priority: u8) -> Result<JobId, HostError> {
        if payload.len() > self.payload_limit {
            return Err(HostError::PayloadTooLarge(payload.len()));
        }
        let now = self.shared.now_ns();
        let mut store = self.shared.lock();
        if store.policy.len() >= self.high_water {
            return Err(HostError::QueueSaturated(self.high_water));
        }
        let id = store.next_id;
        let seq = store.next_seq;
        store.next_id += 1;
        store.next_seq += 1;
        let mut job = Job::new(id, priority, seq, payload, shots);
        job.timestamps.submit_ns = now;
        job.transition(JobState::Queued).expect("CREATED -> QUEUED");
        store.counts.submitted += 1;
        store.counts.enter(JobState::Created);
        store.record(id, JobState::Created, JobState::Queued);
        store.jobs.insert(id, job);
        store.policy.push(QueueEntry { priority, seq, id });
        Ok(id)
    }

    fn cancel(&mut self, id: JobId) -> Result<(), HostError> {
        let mut store = self.shared.lock();
        let state = store.jobs.get(&id).map(Job::state).ok_or(HostError::UnknownJob(id))?;
        if state != JobState::Queued {
            return Err(HostError::TooLateToCancel { id, state });
        }
        store.policy.remove(id);
        store.update(id, |j| j.cancel().expect("QUEUED -> CANCELLED"));
        drop(store);
        self.shared.changed.notify_all();
        Ok(())
    }

    fn free(&mut self, id: JobId) -> Result<(), HostError> {
        let mut store = self.shared.lock();
        let state = store.jobs.get(&id).map(Job::state).ok_or(HostError::UnknownJob(id))?;
        if !state.is_terminal() {
            return Err(HostError::NotFinished(id));
        }
        store.jobs.remove(&id);
        Ok(())
    }

    /// Moves queued jobs onto free SQ slots and rings the doorbell once.
    fn dispatch(&mut self) {
        let capacity = (self.rings.sq_len - 1) as usize;
        let mut store = self.shared.lock();
        let mut rang = false;
        while !store.paused && self.in_flight.len() < capacity {
            let Some(entry) = store.policy.pop() else { break };
            let job = &store.jobs[&entry.id];
            let desc_slot = self.rings.sq_base + u64::from(self.rings.sq_tail) * DESCRIPTOR_LEN as u64;
            let staged = {
                let mut mem = self.memory.lock().unwrap();
                mem.alloc(job.payload.len() as u64).and_then(|addr| {
                    mem.write(addr, &job.payload)?;
                    let desc = SubmissionDescriptor {
                        job_id: job.id,
                        payload_addr: addr,
                        payload_len: job.payload.len() as u32,
                        shots: job.shots,
                        flags: 0,
                        reserved: 0,
                    };
                    mem.write(desc_slot, &desc.encode())?;
                    Ok(addr)
                })
            };
            let Ok(addr) = staged else {
                // host memory is full; retry after completions free some
                store.policy.push(entry);
                break;
            };
            let now = self.shared.now_ns();
            store.update(entry.id, |j| {
                j.transition(JobState::Dispatched).expect("QUEUED -> DISPATCHED");
                j.timestamps.dispatch_ns = Some(now);
            });
            self.rings.sq_tail = (self.rings.sq_tail + 1) % self.rings.sq_len;
            self.in_flight.push_back((entry.id, addr));
            rang = true;
        }
        self.promote_head(&mut store);
        drop(store);
        if rang {
            self.device.mmio_write(regs::DOORBELL, self.rings.sq_tail);
        }
    }

    /// The device executes in order, so the oldest in-flight job is running.
    fn promote_head(&self, store: &mut Store) {
        if let Some(&(id, _)) = self.in_flight.front() {
            if store.jobs.get(&id).map(Job::state) == Some(JobState::Dispatched) {
                store.update(id, |j| j.transition(JobState::Running).expect("DISPATCHED -> RUNNING"));
            }
        }
    }

    fn next_record(&self) -> Option<CompletionRecord> {
        let slot = self.rings.cq_base + u64::from(self.rings.cq_head) * RECORD_LEN as u64;
        let mut mem = self.memory.lock().unwrap();
        let raw = mem.read(slot, RECORD_LEN as u64).ok()?;
        let rec = CompletionRecord::decode(raw.as_slice().try_into().unwrap());
        if rec.job_id == 0 {
            return None;
        }
        mem.write(slot, &[0; RECORD_LEN]).ok()?;
        Some(rec)
    }

    /// Drains the completion queue.
    fn reap(&mut self) {
        let mut any = false;
        while let Some(rec) = self.next_record() {
            any = true;
            self.rings.cq_head = (self.rings.cq_head + 1) % self.rings.cq_len;
            self.complete(rec);
        }
        if any {
            self.device.mmio_write(regs::CQ_HEAD, self.rings.cq_head);
            self.shared.changed.notify_all();
        }
    }

    fn complete(&mut self, rec: CompletionRecord) {
        let id = rec.job_id;
        if let Some(pos) = self.in_flight.iter().position(|&(j, _)| j == id) {
            let (_, addr) = self.in_flight.remove(pos).unwrap();
            let _ = self.memory.lock().unwrap().free(addr);
        }
        let outcome = if rec.status == 0 {
            let mut mem = self.memory.lock().unwrap();
            let bytes = mem.read(rec.result_addr, u64::from(rec.result_len));
            let _ = mem.free(rec.result_addr);
            bytes
                .ok()
                .and_then(|b| decode_result(&b).ok())
                .ok_or(ErrorCode::MalformedPayload)
        } else {
            Err(ErrorCode::from_u32(rec.status).unwrap_or(ErrorCode::MalformedPayload))
        };
        let timing = self.device.take_timing(id);
        let now = self.shared.now_ns();
        let mut store = self.shared.lock();
        store.update(id, |j| {
            if j.state() == JobState::Dispatched {
                let _ = j.transition(JobState::Running);
            }
        });
        store.update(id, |j| {
            let done = match outcome {
                Ok(h) => j.complete(h),
                Err(code) => j.fail(code),
            };
            if done.is_ok() {
                j.exec_time_ns = Some(rec.exec_time_ns);
                j.timing = timing;
                j.timestamps.complete_ns = Some(now);
            }
        });
        self.promote_head(&mut store);
    }
}
