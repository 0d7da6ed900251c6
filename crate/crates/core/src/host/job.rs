use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::ErrorCode;
use crate::latency::JobTiming;
use crate::qsim::Histogram;

/// Per-handle job identifier. The first job of a handle is 1; 0 never names a job.
pub type JobId = u64;

pub const MAX_PRIORITY: u8 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
#[repr(u32)]
pub enum JobState {
    Created = 0,
    Queued = 1,
    Dispatched = 2,
    Running = 3,
    Done = 4,
    Failed = 5,
    Cancelled = 6,
}

impl JobState {
    pub const ALL: [JobState; 7] = [
        JobState::Created,
        JobState::Queued,
        JobState::Dispatched,
        JobState::Running,
        JobState::Done,
        JobState::Failed,
        JobState::Cancelled,
    ];

    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed | JobState::Cancelled)
    }

    /// The lifecycle edges. Everything else is rejected.
    pub fn can_transition(self, to: JobState) -> bool {
        use JobState::*;
        matches!(
            (self, to),
            (Created, Queued)
                | (Queued, Dispatched)
                | (Queued, Cancelled)
                | (Dispatched, Running)
                | (Running, Done)
                | (Running, Failed)
        )
    }

    pub fn from_u32(v: u32) -> Option<Self> {
        Self::ALL.get(v as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            JobState::Created => "CREATED",
            JobState::Queued => "QUEUED",
            JobState::Dispatched => "DISPATCHED",
            JobState::Running => "RUNNING",
            JobState::Done => "DONE",
            JobState::Failed => "FAILED",
            JobState::Cancelled => "CANCELLED",
        }
    }
}

impl fmt::Display for JobState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("illegal transition {from} -> {to}")]
pub struct IllegalTransition {
    pub from: JobState,
    pub to: JobState,
}

/// Wall-clock nanoseconds since the owning handle was opened.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timestamps {
    pub submit_ns: u64,
    pub dispatch_ns: Option<u64>,
    pub complete_ns: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: JobId,
    pub priority: u8,
    pub seq: u64,
    #[serde(with = "hex_bytes")]
    pub payload: Vec<u8>,
    pub shots: u32,
    state: JobState,
    result: Option<Histogram>,
    error: Option<ErrorCode>,
    /// Device-reported model execution time.
    pub exec_time_ns: Option<u64>,
    /// Device-side model timestamps, when the device traced the job.
    pub timing: Option<JobTiming>,
    pub timestamps: Timestamps,
}

impl Job {
    pub fn new(id: JobId, priority: u8, seq: u64, payload: Vec<u8>, shots: u32) -> Self {
        Self {
            id,
            priority,
            seq,
            payload,
            shots,
            state: JobState::Created,
            result: None,
            error: None,
            exec_time_ns: None,
            timing: None,
            timestamps: Timestamps::default(),
        }
    }

    pub fn state(&self) -> JobState {
        self.state
    }

    pub fn result(&self) -> Option<&Histogram> {
        self.result.as_ref()
    }

    pub fn error(&self) -> Option<ErrorCode> {
        self.error
    }

    /// Moves along one lifecycle edge. Use [`Job::complete`] and
    /// [`Job::fail`] for the terminal states that carry data.
    pub fn transition(&mut self, to: JobState) -> Result<(), IllegalTransition> {
        if !self.state.can_transition(to) || matches!(to, JobState::Done | JobState::Failed | JobState::Cancelled) {
            return Err(IllegalTransition { from: self.state, to });
        }
        self.state = to;
        Ok(())
    }

    pub fn complete(&mut self, result: Histogram) -> Result<(), IllegalTransition> {
        self.check(JobState::Done)?;
        self.state = JobState::Done;
        self.result = Some(result);
        Ok(())
    }

    pub fn fail(&mut self, code: ErrorCode) -> Result<(), IllegalTransition> {
        self.check(JobState::Failed)?;
        self.state = JobState::Failed;
        self.error = Some(code);
        Ok(())
    }

    pub fn cancel(&mut self) -> Result<(), IllegalTransition> {
        self.check(JobState::Cancelled)?;
        self.state = JobState::Cancelled;
        self.error = Some(ErrorCode::Cancelled);
        Ok(())
    }

    fn check(&self, to: JobState) -> Result<(), IllegalTransition> {
        if self.state.can_transition(to) {
            Ok(())
        } else {
            Err(IllegalTransition { from: self.state, to })
        }
    }

    /// Non-terminal jobs restored from a snapshot go back to the queue: the
    /// device they were dispatched to no longer exists.
    pub(crate) fn requeue_for_restore(&mut self) {
        if !self.state.is_terminal() {
            self.state = JobState::Queued;
            self.timestamps.dispatch_ns = None;
            self.timing = None;
        }
    }
}

mod hex_bytes {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        let hex: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
        s.serialize_str(&hex)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        if s.len() % 2 != 0 {
            return Err(D::Error::custom("odd-length hex string"));
        }
        (0..s.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&s[i..i + 2], 16).map_err(D::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_lifecycle_edges_allowed() {
        let allowed = [
            (JobState::Created, JobState::Queued),
            (JobState::Queued, JobState::Dispatched),
            (JobState::Queued, JobState::Cancelled),
            (JobState::Dispatched, JobState::Running),
            (JobState::Running, JobState::Done),
            (JobState::Running, JobState::Failed),
        ];
        for from in JobState::ALL {
            for to in JobState::ALL {
                assert_eq!(from.can_transition(to), allowed.contains(&(from, to)), "{from} -> {to}");
            }
        }
    }

    #[test]
    fn terminal_data_only_through_dedicated_calls() {
        let mut j = Job::new(1, 0, 0, vec![], 1);
        assert!(j.transition(JobState::Queued).is_ok());
        assert!(j.transition(JobState::Cancelled).is_err());
        j.cancel().unwrap();
        assert_eq!(j.error(), Some(ErrorCode::Cancelled));
        assert!(j.cancel().is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut j = Job::new(3, 2, 9, vec![0x42, 0x4c, 0x00], 10);
        j.transition(JobState::Queued).unwrap();
        let s = serde_json::to_string(&j).unwrap();
        assert!(s.contains("\"424c00\""));
        assert_eq!(serde_json::from_str::<Job>(&s).unwrap(), j);
    }
}
