//! Host abstraction layer: job store, scheduler, completion handling and the
//! client API over one virtual device.

pub mod commands;
mod config;
mod handle;
mod info;
mod job;
mod profile;
pub mod scheduler;

use thiserror::Error;

use crate::device::ErrorCode;

pub use config::{CouplingPreset, CouplingSpec, DeviceConfig, Mode};
pub use handle::{device_open, DeviceHandle, JobCounts, Session, Transition};
pub use info::{native_gate_set, DeviceInfo, Modes, QueueDepths};
pub use job::{IllegalTransition, Job, JobId, JobState, Timestamps, MAX_PRIORITY};
pub use profile::{profile_run, WorkloadJob};
pub use scheduler::{Fifo, QueueEntry, SchedulingPolicy, StrictPriority};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HostError {
    #[error("invalid device config: {0}")]
    ConfigInvalid(String),
    #[error("bad payload header: {0}")]
    BadHeader(String),
    #[error("software queue is full ({0} jobs queued)")]
    QueueSaturated(usize),
    #[error("unknown job {0}")]
    UnknownJob(JobId),
    #[error("timed out waiting for job {0}")]
    TimedOut(JobId),
    #[error("job {0} has not finished")]
    NotFinished(JobId),
    #[error("job {id} failed: {code}")]
    JobFailed { id: JobId, code: ErrorCode },
    #[error("job {id} is {state}; only QUEUED jobs can be cancelled")]
    TooLateToCancel { id: JobId, state: JobState },
    #[error("priority {0} outside 0..=7")]
    InvalidPriority(u8),
    #[error("shot count {0} outside 1..=4294967295")]
    InvalidShots(u64),
    #[error("payload of {0} bytes exceeds the host memory budget")]
    PayloadTooLarge(usize),
    #[error("operation needs a device in {0:?} mode")]
    WrongMode(Mode),
    #[error("device is closed")]
    DeviceClosed,
    #[error("malformed command record: {0}")]
    MalformedCommand(String),
    #[error("session: {0}")]
    Session(String),
}

impl HostError {
    /// Stable numeric code used in command responses. 0 means success.
    pub fn code(&self) -> u32 {
        match self {
            HostError::ConfigInvalid(_) => 1,
            HostError::BadHeader(_) => 2,
            HostError::QueueSaturated(_) => 3,
            HostError::UnknownJob(_) => 4,
            HostError::TimedOut(_) => 5,
            HostError::NotFinished(_) => 6,
            HostError::JobFailed { .. } => 7,
            HostError::TooLateToCancel { .. } => 8,
            HostError::InvalidPriority(_) => 9,
            HostError::InvalidShots(_) => 10,
            HostError::PayloadTooLarge(_) => 11,
            HostError::WrongMode(_) => 12,
            HostError::DeviceClosed => 13,
            HostError::MalformedCommand(_) => 14,
            HostError::Session(_) => 15,
        }
    }
}
