//! Fixed-layout command records, the driver-style interface to a
//! [`DeviceHandle`]. Layouts are documented in `docs/commands.md`.

use std::time::Duration;

use super::{DeviceHandle, DeviceInfo, HostError, JobId, JobState};
use crate::device::{decode_result, encode_result, ErrorCode, ResultFormatError};
use crate::qsim::Histogram;

pub const REQUEST_HEADER_LEN: usize = 40;
pub const RESPONSE_HEADER_LEN: usize = 32;
/// `timeout_ns` value meaning "wait forever".
pub const INFINITE: u64 = u64::MAX;
const NO_STATE: u32 = 0xFFFF_FFFF;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum CommandCode {
    Submit = 1,
    Check = 2,
    Wait = 3,
    GetResults = 4,
    Cancel = 5,
    Query = 6,
    Free = 7,
}

impl CommandCode {
    pub fn from_u32(v: u32) -> Option<Self> {
        Some(match v {
            1 => CommandCode::Submit,
            2 => CommandCode::Check,
            3 => CommandCode::Wait,
            4 => CommandCode::GetResults,
            5 => CommandCode::Cancel,
            6 => CommandCode::Query,
            7 => CommandCode::Free,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Request {
    Submit { payload: Vec<u8>, shots: u64, priority: u8 },
    Check { job: JobId },
    Wait { job: JobId, timeout: Option<Duration> },
    GetResults { job: JobId },
    Cancel { job: JobId },
    Query,
    Free { job: JobId },
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

impl Request {
    pub fn code(&self) -> CommandCode {
        match self {
            Request::Submit { .. } => CommandCode::Submit,
            Request::Check { .. } => CommandCode::Check,
            Request::Wait { .. } => CommandCode::Wait,
            Request::GetResults { .. } => CommandCode::GetResults,
            Request::Cancel { .. } => CommandCode::Cancel,
            Request::Query => CommandCode::Query,
            Request::Free { .. } => CommandCode::Free,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let (mut priority, mut job, mut shots, mut timeout, mut payload): (u8, u64, u64, u64, &[u8]) =
            (0, 0, 0, 0, &[]);
        match self {
            Request::Submit {
                payload: p,
                shots: s,
                priority: pr,
            } => {
                priority = *pr;
                shots = *s;
                payload = p;
            }
            Request::Wait { job: j, timeout: t } => {
                job = *j;
                timeout = t.map_or(INFINITE, |d| d.as_nanos().min(u128::from(INFINITE - 1)) as u64);
            }
            Request::Check { job: j }
            | Request::GetResults { job: j }
            | Request::Cancel { job: j }
            | Request::Free { job: j } => job = *j,
            Request::Query => {}
        }
        let mut out = Vec::with_capacity(REQUEST_HEADER_LEN + payload.len());
        out.extend_from_slice(&(self.code() as u32).to_le_bytes());
        out.extend_from_slice(&[priority, 0, 0, 0]);
        out.extend_from_slice(&job.to_le_bytes());
        out.extend_from_slice(&shots.to_le_bytes());
        out.extend_from_slice(&timeout.to_le_bytes());
        out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        out.extend_from_slice(payload);
        out
    }

    pub fn decode(b: &[u8]) -> Result<Self, HostError> {
        let bad = |m: &str| Err(HostError::MalformedCommand(m.into()));
        if b.len() < REQUEST_HEADER_LEN {
            return bad("shorter than the 40-byte header");
        }
        if b[5..8] != [0, 0, 0] || u32_at(b, 36) != 0 {
            return bad("reserved bytes must be zero");
        }
        let Some(code) = CommandCode::from_u32(u32_at(b, 0)) else {
            return bad("unknown command code");
        };
        let priority = b[4];
        let job = u64_at(b, 8);
        let shots = u64_at(b, 16);
        let timeout = u64_at(b, 24);
        let payload_len = u32_at(b, 32) as usize;
        if b.len() != REQUEST_HEADER_LEN + payload_len {
            return bad("payload_len disagrees with the record size");
        }
        if code != CommandCode::Submit && payload_len != 0 {
            return bad("only SUBMIT carries a payload");
        }
        Ok(match code {
            CommandCode::Submit => Request::Submit {
                payload: b[REQUEST_HEADER_LEN..].to_vec(),
                shots,
                priority,
            },
            CommandCode::Check => Request::Check { job },
            CommandCode::Wait => Request::Wait {
                job,
                timeout: (timeout != INFINITE).then(|| Duration::from_nanos(timeout)),
            },
            CommandCode::GetResults => Request::GetResults { job },
            CommandCode::Cancel => Request::Cancel { job },
            CommandCode::Query => Request::Query,
            CommandCode::Free => Request::Free { job },
        })
    }
}

/// Outcome of one command. `data` holds the result payload for GET_RESULTS,
/// DeviceInfo JSON for QUERY, and the error message on failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    /// 0 on success, otherwise [`HostError::code`].
    pub status: u32,
    pub state: Option<JobState>,
    pub job: JobId,
    /// Device error code when `status` reports a failed job.
    pub device_error: u32,
    /// Model execution time reported with GET_RESULTS, else 0.
    pub exec_time_ns: u64,
    pub data: Vec<u8>,
}

impl Response {
    fn ok(job: JobId, state: Option<JobState>, data: Vec<u8>) -> Self {
        Self {
            status: 0,
            state,
            job,
            device_error: 0,
            exec_time_ns: 0,
            data,
        }
    }

    fn error(job: JobId, e: &HostError) -> Self {
        let (device_error, state) = match e {
            HostError::JobFailed { code, .. } => (*code as u32, None),
            HostError::TooLateToCancel { state, .. } => (0, Some(*state)),
            _ => (0, None),
        };
        Self {
            status: e.code(),
            state,
            job,
            device_error,
            exec_time_ns: 0,
            data: e.to_string().into_bytes(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == 0
    }

    /// The error message of a failed command.
    pub fn message(&self) -> Option<String> {
        (!self.is_ok()).then(|| String::from_utf8_lossy(&self.data).into_owned())
    }

    pub fn failed_code(&self) -> Option<ErrorCode> {
        (self.status == 7)
            .then(|| ErrorCode::from_u32(self.device_error))
            .flatten()
    }

    pub fn histogram(&self) -> Result<Histogram, ResultFormatError> {
        decode_result(&self.data)
    }

    pub fn device_info(&self) -> Option<DeviceInfo> {
        serde_json::from_slice(&self.data).ok()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(RESPONSE_HEADER_LEN + self.data.len());
        out.extend_from_slice(&self.status.to_le_bytes());
        out.extend_from_slice(&self.state.map_or(NO_STATE, |s| s as u32).to_le_bytes());
        out.extend_from_slice(&self.job.to_le_bytes());
        out.extend_from_slice(&self.device_error.to_le_bytes());
        out.extend_from_slice(&(self.data.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.exec_time_ns.to_le_bytes());
        out.extend_from_slice(&self.data);
        out
    }

    pub fn decode(b: &[u8]) -> Result<Self, HostError> {
        let bad = |m: &str| Err(HostError::MalformedCommand(m.into()));
        if b.len() < RESPONSE_HEADER_LEN {
            return bad("shorter than the 32-byte header");
        }
        let raw_state = u32_at(b, 4);
        let state = match raw_state {
            NO_STATE => None,
            v => match JobState::from_u32(v) {
                Some(s) => Some(s),
                None => return bad("unknown job state"),
            },
        };
        let data_len = u32_at(b, 20) as usize;
        if b.len() != RESPONSE_HEADER_LEN + data_len {
            return bad("data_len disagrees with the record size");
        }
        Ok(Self {
            status: u32_at(b, 0),
            state,
            job: u64_at(b, 8),
            device_error: u32_at(b, 16),
            exec_time_ns: u64_at(b, 24),
            data: b[RESPONSE_HEADER_LEN..].to_vec(),
        })
    }
}

impl DeviceHandle {
    /// Executes one command.
    pub fn execute(&self, req: &Request) -> Response {
        let job = match req {
            Request::Check { job }
            | Request::Wait { job, .. }
            | Request::GetResults { job }
            | Request::Cancel { job }
            | Request::Free { job } => *job,
            Request::Submit { .. } | Request::Query => 0,
        };
        let outcome = match req {
            Request::Submit {
                payload,
                shots,
                priority,
            } => self
                .job_submit(payload, *shots, *priority)
                .map(|id| Response::ok(id, Some(JobState::Queued), vec![])),
            Request::Check { job } => self.job_check(*job).map(|s| Response::ok(*job, Some(s), vec![])),
            Request::Wait { job, timeout } => self
                .job_wait(*job, *timeout)
                .map(|s| Response::ok(*job, Some(s), vec![])),
            Request::GetResults { job } => self.job_get_results(*job).and_then(|h| {
                let mut r = Response::ok(*job, Some(JobState::Done), encode_result(&h));
                r.exec_time_ns = self.job_info(*job)?.exec_time_ns.unwrap_or(0);
                Ok(r)
            }),
            Request::Cancel { job } => self
                .job_cancel(*job)
                .map(|()| Response::ok(*job, Some(JobState::Cancelled), vec![])),
            Request::Query => {
                let json = serde_json::to_vec(&self.device_query()).expect("DeviceInfo serializes");
                Ok(Response::ok(0, None, json))
            }
            Request::Free { job } => self.job_free(*job).map(|()| Response::ok(*job, None, vec![])),
        };
        outcome.unwrap_or_else(|e| Response::error(job, &e))
    }

    /// Executes an encoded request record and returns the encoded response.
    pub fn execute_raw(&self, request: &[u8]) -> Vec<u8> {
        match Request::decode(request) {
            Ok(req) => self.execute(&req),
            Err(e) => Response::error(0, &e),
        }
        .encode()
    }
}
