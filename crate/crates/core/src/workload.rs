//! Synthetic traffic: compute/communicate phases (the power-management
//! stressor), hotspot traffic (the congestion stressor), their combination,
//! and replay of plain-text injection traces.
//!
//! Phased traffic is closed-loop: an endpoint starts computing again only
//! once every packet of its previous burst has been delivered, so delays
//! in the network stretch the runtime. Hotspot and trace traffic is
//! open-loop with fixed injection times.

use std::fmt;
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fabric::FlowClass;
use crate::sim::{RandomStream, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadKind {
    Phased,
    Hotspot,
    PhasedHotspot,
    Trace,
}

impl fmt::Display for WorkloadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Phased => "phased",
            Self::Hotspot => "hotspot",
            Self::PhasedHotspot => "phased_hotspot",
            Self::Trace => "trace",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    pub message_bytes: u32,
    pub messages_per_burst: u32,
    /// Nominal compute-phase length.
    pub compute_ns: u64,
    /// Uniform jitter applied to every compute phase, in percent of its length.
    pub jitter_pct: f64,
    /// Every `long_every`-th phase computes for `long_compute_ns` instead
    /// (checkpoint or global-reduction style pauses). 0 disables.
    pub long_every: u32,
    pub long_compute_ns: u64,
    /// Compute/communicate cycles per endpoint.
    pub phases: u32,
    pub hotspot_fraction: f64,
    pub hot_dst: usize,
    /// Open-loop hotspot traffic: offered load per endpoint as a fraction of link rate.
    pub load: f64,
    /// Open-loop hotspot traffic: messages per endpoint.
    pub messages: u32,
    pub trace: Option<PathBuf>,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self {
            kind: WorkloadKind::PhasedHotspot,
            message_bytes: 4096,
            messages_per_burst: 8,
            compute_ns: 50_000,
            jitter_pct: 20.0,
            long_every: 8,
            long_compute_ns: 2_000_000,
            phases: 24,
            hotspot_fraction: 0.25,
            hot_dst: 0,
            load: 0.3,
            messages: 100,
            trace: None,
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self, endpoints: usize) -> Result<(), (&'static str, String)> {
        if self.message_bytes == 0 {
            return Err(("workload.message_bytes", "must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.hotspot_fraction) {
            return Err((
                "workload.hotspot_fraction",
                format!("must lie in [0, 1], got {}", self.hotspot_fraction),
            ));
        }
        if self.hot_dst >= endpoints {
            return Err((
                "workload.hot_dst",
                format!("endpoint {} does not exist ({} endpoints)", self.hot_dst, endpoints),
            ));
        }
        if !(0.0..100.0).contains(&self.jitter_pct) {
            return Err(("workload.jitter_pct", format!("must lie in [0, 100), got {}", self.jitter_pct)));
        }
        if !(self.load > 0.0 && self.load <= 1.0) {
            return Err(("workload.load", format!("must lie in (0, 1], got {}", self.load)));
        }
        if self.kind == WorkloadKind::Trace && self.trace.is_none() {
            return Err(("workload.trace", "trace workloads need a trace path".into()));
        }
        Ok(())
    }

    fn has_hotspot(&self) -> bool {
        matches!(self.kind, WorkloadKind::Hotspot | WorkloadKind::PhasedHotspot)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub dst: usize,
    pub size: u32,
    pub class: FlowClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub compute_ns: u64,
    pub burst: Vec<Message>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Injection {
    pub time: SimTime,
    pub message: Message,
}

/// Everything one endpoint will inject during a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EndpointTraffic {
    Phased(Vec<Phase>),
    OpenLoop(Vec<Injection>),
}

impl EndpointTraffic {
    pub fn message_count(&self) -> usize {
        match self {
            Self::Phased(phases) => phases.iter().map(|p| p.burst.len()).sum(),
            Self::OpenLoop(inj) => inj.len(),
        }
    }

    /// Absolute injection times for a network with zero delivery time.
    pub fn ideal_injections(&self) -> Vec<Injection> {
        match self {
            Self::OpenLoop(inj) => inj.clone(),
            Self::Phased(phases) => {
                let mut t = SimTime::ZERO;
                let mut out = Vec::new();
                for phase in phases {
                    t = t + phase.compute_ns;
                    out.extend(phase.burst.iter().map(|&message| Injection { time: t, message }));
                }
                out
            }
        }
    }
}

fn uniform_peer(rng: &mut RandomStream, src: usize, endpoints: usize) -> usize {
    let u = rng.below(endpoints as u64 - 1) as usize;
    if u >= src { u + 1 } else { u }
}

fn pick_message(spec: &WorkloadSpec, rng: &mut RandomStream, src: usize, endpoints: usize) -> Message {
    let hot = spec.has_hotspot()
        && src != spec.hot_dst
        && rng.next_random() < spec.hotspot_fraction;
    let dst = if hot { spec.hot_dst } else { uniform_peer(rng, src, endpoints) };
    let class = if spec.has_hotspot() && dst == spec.hot_dst { FlowClass::Hot } else { FlowClass::Cold };
    Message { dst, size: spec.message_bytes, class }
}

/// Draws the traffic of `endpoint` from its own random stream.
///
/// Trace workloads are loaded separately with [`load_trace`].
pub fn endpoint_traffic(
    spec: &WorkloadSpec,
    endpoint: usize,
    endpoints: usize,
    seed: u64,
    rate_bps: u64,
) -> EndpointTraffic {
    let mut rng = RandomStream::new(seed, endpoint as u64);
    match spec.kind {
        WorkloadKind::Phased | WorkloadKind::PhasedHotspot => {
            let phases = (0..spec.phases)
                .map(|i| {
                    let long = spec.long_every > 0 && (i + 1) % spec.long_every == 0;
                    let nominal = if long { spec.long_compute_ns } else { spec.compute_ns } as f64;
                    let jitter = spec.jitter_pct / 100.0 * (2.0 * rng.next_random() - 1.0);
                    let compute_ns = (nominal * (1.0 + jitter)).round() as u64;
                    let burst = (0..spec.messages_per_burst)
                        .map(|_| pick_message(spec, &mut rng, endpoint, endpoints))
                        .collect();
                    Phase { compute_ns, burst }
                })
                .collect();
            EndpointTraffic::Phased(phases)
        }
        WorkloadKind::Hotspot => {
            let mean_gap_ns = spec.message_bytes as f64 * 8e9 / (rate_bps as f64 * spec.load);
            let exp = Exp::new(1.0 / mean_gap_ns).expect("positive rate");
            let mut t = 0.0;
            let injections = (0..spec.messages)
                .map(|_| {
                    t += exp.sample(rng.rng());
                    let message = pick_message(spec, &mut rng, endpoint, endpoints);
                    Injection { time: SimTime(t.round() as u64), message }
                })
                .collect();
            EndpointTraffic::OpenLoop(injections)
        }
        WorkloadKind::Trace => EndpointTraffic::OpenLoop(Vec::new()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t_inject: u64,
    pub src: usize,
    pub dst: usize,
    pub size: u32,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("cannot read trace {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: timestamp {t} is earlier than the previous record ({prev})")]
    Unsorted { line: usize, t: u64, prev: u64 },
    #[error("line {line}: endpoint {id} out of range ({endpoints} endpoints)")]
    OutOfRange { line: usize, id: usize, endpoints: usize },
    #[error("line {line}: source and destination are both {id}")]
    SelfAddressed { line: usize, id: usize },
}

/// Parses `t_ns src dst size_bytes` records: decimal integers separated by
/// single spaces, LF line endings, `#` comment lines.
pub fn parse_trace(text: &str, endpoints: usize) -> Result<Vec<TraceRecord>, TraceError> {
    let mut records = Vec::new();
    let mut prev = 0;
    for (i, raw) in text.split('\n').enumerate() {
        let line = i + 1;
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let malformed = |reason: String| TraceError::Malformed { line, reason };
        let fields: Vec<&str> = raw.split(' ').collect();
        if fields.len() != 4 {
            return Err(malformed(format!("expected 4 space-separated fields, found {}", fields.len())));
        }
        let mut nums = [0u64; 4];
        for (slot, field) in nums.iter_mut().zip(&fields) {
            if field.is_empty() || !field.bytes().all(|b| b.is_ascii_digit()) {
                return Err(malformed(format!("`{field}` is not a decimal integer")));
            }
            *slot = field.parse().map_err(|e| malformed(format!("`{field}`: {e}")))?;
        }
        let [t, src, dst, size] = nums;
        if t < prev {
            return Err(TraceError::Unsorted { line, t, prev });
        }
        prev = t;
        for id in [src, dst] {
            if id >= endpoints as u64 {
                return Err(TraceError::OutOfRange { line, id: id as usize, endpoints });
            }
        }
        if src == dst {
            return Err(TraceError::SelfAddressed { line, id: src as usize });
        }
        let size = u32::try_from(size)
            .ok()
            .filter(|&s| s > 0)
            .ok_or_else(|| malformed(format!("size {size} out of range")))?;
        records.push(TraceRecord { t_inject: t, src: src as usize, dst: dst as usize, size });
    }
    Ok(records)
}

pub fn load_trace(path: &Path, endpoints: usize) -> Result<Vec<TraceRecord>, TraceError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| TraceError::Io { path: path.to_owned(), source })?;
    parse_trace(&text, endpoints)
}

/// Splits validated trace records into per-endpoint open-loop streams.
pub fn trace_traffic(records: &[TraceRecord], endpoints: usize) -> Vec<EndpointTraffic> {
    let mut per: Vec<Vec<Injection>> = vec![Vec::new(); endpoints];
    for r in records {
        per[r.src].push(Injection {
            time: SimTime(r.t_inject),
            message: Message { dst: r.dst, size: r.size, class: FlowClass::Cold },
        });
    }
    per.into_iter().map(EndpointTraffic::OpenLoop).collect()
}
