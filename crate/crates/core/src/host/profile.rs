use serde::{Deserialize, Serialize};

use super::{DeviceHandle, HostError, JobState, Mode};
use crate::latency::{JobLatency, LatencyReport};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadJob {
    pub payload: Vec<u8>,
    pub shots: u64,
    pub priority: u8,
}

/// Runs a workload on a latency-mode device and reports per-job model latency.
///
/// Every job is submitted at the same model instant (the device clock once
/// the handle is idle), with dispatch paused so the device sees them in
/// scheduler order. The handle should not be shared with other clients
/// while this runs, or the report stops being deterministic.
pub fn profile_run(h: &DeviceHandle, workload: &[WorkloadJob]) -> Result<LatencyReport, HostError> {
    if h.mode() != Mode::Latency {
        return Err(HostError::WrongMode(Mode::Latency));
    }
    let timing = h.config().timing;
    h.wait_idle(None);
    let t0 = h.model_time_ns();

    h.pause_dispatch()?;
    let mut ids = Vec::with_capacity(workload.len());
    for w in workload {
        match h.job_submit(&w.payload, w.shots, w.priority) {
            Ok(id) => ids.push(id),
            Err(e) => {
                for id in ids {
                    let _ = h.job_cancel(id);
                }
                h.resume_dispatch()?;
                return Err(e);
            }
        }
    }
    h.resume_dispatch()?;

    let mut records = Vec::with_capacity(ids.len());
    for id in ids {
        if h.job_wait(id, None)? == JobState::Cancelled {
            return Err(HostError::JobFailed {
                id,
                code: crate::device::ErrorCode::Cancelled,
            });
        }
        let job = h.job_info(id)?;
        let t = job.timing.ok_or(HostError::NotFinished(id))?;
        records.push(JobLatency::from_timing(id, t0, &t));
    }
    Ok(LatencyReport::new(timing, records))
}
