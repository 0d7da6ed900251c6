//! Latency-mode timing: a parameterized cost model, a single-engine virtual
//! clock, and per-job latency reports.
//!
//! Per-job cost is
//!
//! ```text
//! T = t_mmio_write
//!   + t_dma_setup + payload_len * t_dma_per_byte
//!   + shots * (t_shot_overhead + n1q*t_gate_1q + n2q*t_gate_2q + nmeas*t_measure + nreset*t_reset)
//!   + t_dma_setup + result_len * t_dma_per_byte
//!   + t_irq_delivery
//! ```
//!
//! The device additionally charges the fixed [`SchedulerConstants`]: the
//! 32-byte descriptor fetch, the 32-byte completion-record write, and the
//! host's interrupt acknowledge (one MMIO read, one MMIO write).
//!
//! The shipped parameter values are placeholders, not measurements.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::GateCounts;

const SHIPPED_TIMING: &str = include_str!("../config/timing.json");

/// Bytes the device reads per submission descriptor.
pub const DESCRIPTOR_BYTES: u64 = 32;
/// Bytes the device writes per completion record.
pub const COMPLETION_RECORD_BYTES: u64 = 32;

#[derive(Debug, Error)]
pub enum TimingConfigError {
    #[error("invalid timing JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("line {line}: {msg}")]
    KeyValue { line: usize, msg: String },
}

/// All durations in nanoseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingModel {
    pub t_mmio_write: u64,
    pub t_mmio_read: u64,
    pub t_dma_setup: u64,
    pub t_dma_per_byte: u64,
    pub t_irq_delivery: u64,
    pub t_gate_1q: u64,
    pub t_gate_2q: u64,
    pub t_measure: u64,
    pub t_reset: u64,
    pub t_shot_overhead: u64,
}

const KEYS: [&str; 10] = [
    "t_mmio_write",
    "t_mmio_read",
    "t_dma_setup",
    "t_dma_per_byte",
    "t_irq_delivery",
    "t_gate_1q",
    "t_gate_2q",
    "t_measure",
    "t_reset",
    "t_shot_overhead",
];

impl TimingModel {
    /// The model in `config/timing.json`.
    pub fn shipped() -> Self {
        SHIPPED_TIMING.parse().expect("shipped timing config is valid")
    }

    fn field_mut(&mut self, key: &str) -> Option<&mut u64> {
        Some(match key {
            "t_mmio_write" => &mut self.t_mmio_write,
            "t_mmio_read" => &mut self.t_mmio_read,
            "t_dma_setup" => &mut self.t_dma_setup,
            "t_dma_per_byte" => &mut self.t_dma_per_byte,
            "t_irq_delivery" => &mut self.t_irq_delivery,
            "t_gate_1q" => &mut self.t_gate_1q,
            "t_gate_2q" => &mut self.t_gate_2q,
            "t_measure" => &mut self.t_measure,
            "t_reset" => &mut self.t_reset,
            "t_shot_overhead" => &mut self.t_shot_overhead,
            _ => return None,
        })
    }

    /// `key = value` lines; `#` starts a comment. Every key exactly once.
    fn parse_key_value(text: &str) -> Result<Self, TimingConfigError> {
        let mut model = TimingModel::default();
        let mut seen = Vec::new();
        let err = |line: usize, msg: String| TimingConfigError::KeyValue { line, msg };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .or_else(|| line.split_once(':'))
                .ok_or_else(|| err(i + 1, "expected 'key = value'".into()))?;
            let key = key.trim();
            let slot = model
                .field_mut(key)
                .ok_or_else(|| err(i + 1, format!("unknown key '{key}'")))?;
            *slot = value
                .trim()
                .parse()
                .map_err(|_| err(i + 1, format!("'{}' is not a non-negative integer", value.trim())))?;
            if seen.contains(&key) {
                return Err(err(i + 1, format!("duplicate key '{key}'")));
            }
            seen.push(key);
        }
        if let Some(missing) = KEYS.iter().find(|k| !seen.contains(k)) {
            return Err(err(text.lines().count(), format!("missing key '{missing}'")));
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }

    /// Execution term: `shots * (per-shot cost)`.
    pub fn execution_ns(&self, counts: &GateCounts, shots: u64) -> u64 {
        let per_shot = self
            .t_shot_overhead
            .saturating_add(counts.one_qubit.saturating_mul(self.t_gate_1q))
            .saturating_add(counts.two_qubit.saturating_mul(self.t_gate_2q))
            .saturating_add(counts.measure.saturating_mul(self.t_measure))
            .saturating_add(counts.reset.saturating_mul(self.t_reset));
        shots.saturating_mul(per_shot)
    }

    /// Constants the device charges beyond the per-job formula.
    pub fn scheduler_constants(&self) -> SchedulerConstants {
        SchedulerConstants {
            descriptor_bytes: DESCRIPTOR_BYTES,
            completion_record_bytes: COMPLETION_RECORD_BYTES,
            irq_ack_ns: self.t_mmio_read.saturating_add(self.t_mmio_write),
            per_job_ns: (DESCRIPTOR_BYTES + COMPLETION_RECORD_BYTES)
                .saturating_mul(self.t_dma_per_byte)
                .saturating_add(self.t_mmio_read)
                .saturating_add(self.t_mmio_write),
        }
    }

    /// Splits one job's device time into the reported phases.
    ///
    /// * `transfer_ns`: bytes moved (descriptor, payload, result, record) times `t_dma_per_byte`
    /// * `exec_ns`: the execution term
    /// * `completion_ns`: fixed protocol overhead: doorbell write, two DMA
    ///   setups, interrupt delivery and the host's acknowledge
    pub fn phases(&self, payload_len: u64, result_len: u64, counts: &GateCounts, shots: u64) -> PhaseTimes {
        let bytes = DESCRIPTOR_BYTES
            .saturating_add(payload_len)
            .saturating_add(result_len)
            .saturating_add(COMPLETION_RECORD_BYTES);
        PhaseTimes {
            transfer_ns: bytes.saturating_mul(self.t_dma_per_byte),
            exec_ns: self.execution_ns(counts, shots),
            completion_ns: self
                .t_mmio_write
                .saturating_add(self.t_dma_setup.saturating_mul(2))
                .saturating_add(self.t_irq_delivery)
                .saturating_add(self.scheduler_constants().irq_ack_ns),
        }
    }
}

impl FromStr for TimingModel {
    type Err = TimingConfigError;

    /// JSON object if the text starts with `{`, key/value lines otherwise.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        if text.trim_start().starts_with('{') {
            Ok(serde_json::from_str(text)?)
        } else {
            Self::parse_key_value(text)
        }
    }
}

/// Fixed costs the device adds on top of the per-job formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedulerConstants {
    pub descriptor_bytes: u64,
    pub completion_record_bytes: u64,
    /// Host reads IRQ_STATUS and writes CQ_HEAD.
    pub irq_ack_ns: u64,
    /// Total added per job under the current model.
    pub per_job_ns: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub transfer_ns: u64,
    pub exec_ns: u64,
    pub completion_ns: u64,
}

impl PhaseTimes {
    pub fn service_ns(&self) -> u64 {
        self.transfer_ns
            .saturating_add(self.exec_ns)
            .saturating_add(self.completion_ns)
    }
}

/// Closed-form latency of one job on an idle device.
pub fn predict_job_latency(m: &TimingModel, payload_len: u64, result_len: u64, counts: &GateCounts, shots: u64) -> u64 {
    m.t_mmio_write
        .saturating_add(m.t_dma_setup)
        .saturating_add(payload_len.saturating_mul(m.t_dma_per_byte))
        .saturating_add(m.execution_ns(counts, shots))
        .saturating_add(m.t_dma_setup)
        .saturating_add(result_len.saturating_mul(m.t_dma_per_byte))
        .saturating_add(m.t_irq_delivery)
}

/// Monotone virtual clock.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ModelClock {
    now: u64,
}

impl ModelClock {
    pub fn new(start: u64) -> Self {
        Self { now: start }
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    /// Advances by the sum of `durations` and returns the new time.
    pub fn advance(&mut self, durations: &[u64]) -> u64 {
        for d in durations {
            self.now = self.now.saturating_add(*d);
        }
        self.now
    }
}

/// One execution engine: busy intervals never overlap.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Timeline {
    clock: ModelClock,
}

impl Timeline {
    pub fn new(start: u64) -> Self {
        Self {
            clock: ModelClock::new(start),
        }
    }

    pub fn now(&self) -> u64 {
        self.clock.now()
    }

    /// Serves a job that became ready at `arrival`; returns `(start, end)`.
    pub fn serve(&mut self, arrival: u64, service: u64) -> (u64, u64) {
        let start = arrival.max(self.clock.now());
        self.clock = ModelClock::new(start);
        let end = self.clock.advance(&[service]);
        (start, end)
    }
}

/// Device-side timestamps of one job, in model nanoseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobTiming {
    pub start_ns: u64,
    pub end_ns: u64,
    pub phases: PhaseTimes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobLatency {
    pub job_id: u64,
    pub queue_wait_ns: u64,
    pub transfer_ns: u64,
    pub exec_ns: u64,
    pub completion_ns: u64,
    pub end_to_end_ns: u64,
}

impl JobLatency {
    /// Builds a record for a job submitted at `submit_ns`.
    pub fn from_timing(job_id: u64, submit_ns: u64, t: &JobTiming) -> Self {
        let queue_wait_ns = t.start_ns.saturating_sub(submit_ns);
        Self {
            job_id,
            queue_wait_ns,
            transfer_ns: t.phases.transfer_ns,
            exec_ns: t.phases.exec_ns,
            completion_ns: t.phases.completion_ns,
            end_to_end_ns: queue_wait_ns.saturating_add(t.phases.service_ns()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub min: u64,
    pub p50: u64,
    pub p90: u64,
    pub p99: u64,
    pub max: u64,
    pub mean: f64,
}

impl ColumnStats {
    /// Nearest-rank percentiles. `None` for an empty column.
    pub fn of(values: &[u64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_unstable();
        let rank = |p: u64| {
            let n = sorted.len() as u64;
            let idx = (p * n).div_ceil(100).max(1) - 1;
            sorted[idx as usize]
        };
        let sum: u128 = sorted.iter().map(|&v| u128::from(v)).sum();
        Some(Self {
            min: sorted[0],
            p50: rank(50),
            p90: rank(90),
            p99: rank(99),
            max: sorted[sorted.len() - 1],
            mean: sum as f64 / sorted.len() as f64,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub queue_wait_ns: ColumnStats,
    pub transfer_ns: ColumnStats,
    pub exec_ns: ColumnStats,
    pub completion_ns: ColumnStats,
    pub end_to_end_ns: ColumnStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub timing: TimingModel,
    pub constants: SchedulerConstants,
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub header: ReportHeader,
    pub records: Vec<JobLatency>,
    pub aggregates: Option<Aggregates>,
}

const CSV_HEADER: &str = "job_id,queue_wait_ns,transfer_ns,exec_ns,completion_ns,end_to_end_ns";

impl LatencyReport {
    pub fn new(timing: TimingModel, records: Vec<JobLatency>) -> Self {
        let column = |f: fn(&JobLatency) -> u64| records.iter().map(f).collect::<Vec<_>>();
        let aggregates = (!records.is_empty()).then(|| Aggregates {
            queue_wait_ns: ColumnStats::of(&column(|r| r.queue_wait_ns)).unwrap(),
            transfer_ns: ColumnStats::of(&column(|r| r.transfer_ns)).unwrap(),
            exec_ns: ColumnStats::of(&column(|r| r.exec_ns)).unwrap(),
            completion_ns: ColumnStats::of(&column(|r| r.completion_ns)).unwrap(),
            end_to_end_ns: ColumnStats::of(&column(|r| r.end_to_end_ns)).unwrap(),
        });
        Self {
            header: ReportHeader {
                timing,
                constants: timing.scheduler_constants(),
                jobs: records.len(),
            },
            records,
            aggregates,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.job_id, r.queue_wait_ns, r.transfer_ns, r.exec_ns, r.completion_ns, r.end_to_end_ns
            );
        }
        s
    }

    /// Fixed-width aggregate table for terminals.
    pub fn summary_table(&self) -> String {
        let mut s = String::new();
        let Some(agg) = &self.aggregates else {
            let _ = writeln!(s, "no jobs");
            return s;
        };
        let _ = writeln!(
            s,
            "{:<14} {:>12} {:>12} {:>12} {:>12} {:>12} {:>14}",
            "column", "min", "p50", "p90", "p99", "max", "mean"
        );
        for (name, c) in [
            ("queue_wait_ns", &agg.queue_wait_ns),
            ("transfer_ns", &agg.transfer_ns),
            ("exec_ns", &agg.exec_ns),
            ("completion_ns", &agg.completion_ns),
            ("end_to_end_ns", &agg.end_to_end_ns),
        ] {
            let _ = writeln!(
                s,
                "{:<14} {:>12} {:>12} {:>12} {:>12} {:>12} {:>14.1}",
                name, c.min, c.p50, c.p90, c.p99, c.max, c.mean
            );
        }
        s
    }
}
