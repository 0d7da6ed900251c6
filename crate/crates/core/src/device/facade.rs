use std::sync::mpsc::{self, Receiver, Sender, TryRecvError};
use std::thread::{self, JoinHandle};

use super::{DeviceError, InterruptSink, QpxConfig, QpxDevice, SharedMemory};
use crate::host::DeviceInfo;
use crate::latency::JobTiming;
use crate::transpile::CacheStats;

enum Command {
    Read(u32, Sender<u32>),
    Write(u32, u32),
    SetSink(Option<InterruptSink>),
    ModelTime(Sender<u64>),
    TakeTiming(u64, Sender<Option<JobTiming>>),
    CacheStats(Sender<CacheStats>),
}

/// A [`QpxDevice`] running on its own thread.
///
/// MMIO writes are posted (they return immediately); reads wait for the
/// device loop and therefore observe every earlier write from the same
/// caller. Between commands the loop executes at most one job, so a long
/// queue never starves register access.
pub struct VirtualQpx {
    tx: Option<Sender<Command>>,
    thread: Option<JoinHandle<()>>,
    memory: SharedMemory,
    info: DeviceInfo,
}

impl VirtualQpx {
    pub fn spawn(config: QpxConfig, memory: SharedMemory) -> Result<Self, DeviceError> {
        let device = QpxDevice::new(config, memory.clone())?;
        let info = device.info().clone();
        let (tx, rx) = mpsc::channel();
        let thread = thread::Builder::new()
            .name("qpx-device".into())
            .spawn(move || run(device, rx))
            .expect("spawn device thread");
        Ok(Self {
            tx: Some(tx),
            thread: Some(thread),
            memory,
            info,
        })
    }

    pub fn info(&self) -> &DeviceInfo {
        &self.info
    }

    pub fn memory(&self) -> &SharedMemory {
        &self.memory
    }

    fn send(&self, cmd: Command) -> bool {
        self.tx.as_ref().is_some_and(|tx| tx.send(cmd).is_ok())
    }

    fn ask<T>(&self, make: impl FnOnce(Sender<T>) -> Command) -> Option<T> {
        let (reply, rx) = mpsc::channel();
        if !self.send(make(reply)) {
            return None;
        }
        rx.recv().ok()
    }

    pub fn mmio_read(&self, offset: u32) -> u32 {
        self.ask(|r| Command::Read(offset, r)).unwrap_or(super::regs::UNMAPPED)
    }

    pub fn mmio_write(&self, offset: u32, value: u32) {
        self.send(Command::Write(offset, value));
    }

    pub fn register_interrupt_sink(&self, sink: Option<InterruptSink>) {
        self.send(Command::SetSink(sink));
    }

    pub fn model_time_ns(&self) -> u64 {
        self.ask(Command::ModelTime).unwrap_or(0)
    }

    pub fn take_timing(&self, job_id: u64) -> Option<JobTiming> {
        self.ask(|r| Command::TakeTiming(job_id, r)).flatten()
    }

    pub fn cache_stats(&self) -> CacheStats {
        self.ask(Command::CacheStats).unwrap_or_default()
    }
}

impl Drop for VirtualQpx {
    fn drop(&mut self) {
        self.tx = None;
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn handle(device: &mut QpxDevice, cmd: Command) {
    match cmd {
        Command::Read(off, reply) => {
            let _ = reply.send(device.mmio_read(off));
        }
        Command::Write(off, value) => device.write_register(off, value),
        Command::SetSink(sink) => device.register_interrupt_sink(sink),
        Command::ModelTime(reply) => {
            let _ = reply.send(device.model_time_ns());
        }
        Command::TakeTiming(id, reply) => {
            let _ = reply.send(device.take_timing(id));
        }
        Command::CacheStats(reply) => {
            let _ = reply.send(device.cache().stats());
        }
    }
}

fn run(mut device: QpxDevice, rx: Receiver<Command>) {
    loop {
        match rx.try_recv() {
            Ok(cmd) => {
                handle(&mut device, cmd);
                continue;
            }
            Err(TryRecvError::Disconnected) => return,
            Err(TryRecvError::Empty) => {}
        }
        if device.step() {
            continue;
        }
        // idle or stalled: sleep until the host does something
        match rx.recv() {
            Ok(cmd) => handle(&mut device, cmd),
            Err(_) => return,
        }
    }
}
