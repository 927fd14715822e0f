//! Per-run metrics, baseline-relative increases, and the CSV/JSON outputs.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::fabric::{FlowClass, Packet};
use crate::network::RunOutcome;
use crate::power::{Pdt, PolicyConfig, StateDurations};
use crate::sqs::SqsScheme;

pub const CSV_HEADER: [&str; 19] = [
    "run_id",
    "sqs",
    "policy",
    "pdt_ns",
    "alpha",
    "strategy",
    "seed",
    "energy_J",
    "energy_norm",
    "mean_lat_ns",
    "p99_lat_ns",
    "cold_mean_lat_ns",
    "hot_mean_lat_ns",
    "makespan_ns",
    "netlat_increase_pct",
    "runtime_increase_pct",
    "wake_delay_ns",
    "pause_events",
    "drops",
];

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("baseline {baseline} does not share the fingerprint of run {run}")]
    FingerprintMismatch { run: String, baseline: String },
    #[error("run {0} is not an always-on baseline")]
    NotABaseline(String),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub count: usize,
    pub mean_ns: f64,
    pub p50_ns: u64,
    pub p99_ns: u64,
    pub max_ns: u64,
}

/// Nearest-rank percentile of sorted samples, `p` in (0, 100].
pub fn nearest_rank(sorted: &[u64], p: f64) -> u64 {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

impl LatencyStats {
    pub fn from_samples(mut samples: Vec<u64>) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        samples.sort_unstable();
        let sum: u128 = samples.iter().map(|&s| s as u128).sum();
        Some(Self {
            count: samples.len(),
            mean_ns: sum as f64 / samples.len() as f64,
            p50_ns: nearest_rank(&samples, 50.0),
            p99_ns: nearest_rank(&samples, 99.0),
            max_ns: *samples.last().expect("non-empty"),
        })
    }

    fn of(packets: &[Packet], class: Option<FlowClass>) -> Option<Self> {
        Self::from_samples(
            packets
                .iter()
                .filter(|p| class.is_none_or(|c| p.class == c))
                .filter_map(Packet::latency)
                .collect(),
        )
    }
}

/// What identifies a run in the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLabel {
    pub run_id: String,
    pub fingerprint: String,
    pub seed: u64,
    pub sqs: SqsScheme,
    pub policy: String,
    pub pdt_ns: Option<Pdt>,
    pub alpha: Option<f64>,
    pub strategy: Option<String>,
}

impl RunLabel {
    pub fn of(cfg: &RunConfig) -> Self {
        let (pdt_ns, alpha, strategy) = match &cfg.policy {
            PolicyConfig::AlwaysOn => (None, None, None),
            PolicyConfig::FixedPdt { pdt } => (Some(*pdt), None, None),
            PolicyConfig::Perfbound(pb) => (None, Some(pb.alpha), Some(pb.strategy.to_string())),
        };
        Self {
            run_id: cfg.run_id(),
            fingerprint: cfg.fingerprint(),
            seed: cfg.seed,
            sqs: cfg.sqs,
            policy: cfg.policy.name().to_owned(),
            pdt_ns,
            alpha,
            strategy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(flatten)]
    pub label: RunLabel,
    pub is_baseline: bool,
    pub energy_per_direction_j: Vec<f64>,
    pub energy_j: f64,
    /// Energy relative to every direction staying active for the horizon.
    pub energy_norm: f64,
    pub latency: Option<LatencyStats>,
    pub cold_latency: Option<LatencyStats>,
    pub hot_latency: Option<LatencyStats>,
    pub makespan_ns: u64,
    pub wake_delay_ns: u64,
    pub wakes: u64,
    pub pause_events: Vec<u64>,
    pub drops: u64,
    pub injected: usize,
    pub delivered: usize,
    pub in_flight: usize,
    pub peak_occupancy_bytes: u32,
    pub netlat_increase_pct: Option<f64>,
    pub runtime_increase_pct: Option<f64>,
}

impl MetricsReport {
    pub fn from_outcome(cfg: &RunConfig, out: &RunOutcome) -> Self {
        let energy = out.ledger.energy_total(&cfg.power);
        // Summed the same way as the measured energy so an all-active run is exactly 1.
        let always_on: f64 = {
            let active = StateDurations([out.horizon.ns(), 0, 0, 0]);
            std::iter::repeat_n(active.energy_j(&cfg.power), out.ledger.per_direction.len()).sum()
        };
        let delivered = out.delivered();
        let first = out.packets.iter().map(|p| p.t_inject).min();
        let last = out.packets.iter().filter_map(|p| p.t_deliver).max();
        let makespan_ns = match (first, last) {
            (Some(f), Some(l)) => l - f,
            _ => 0,
        };
        Self {
            label: RunLabel::of(cfg),
            is_baseline: cfg.policy.is_always_on(),
            energy_j: energy.total_j,
            energy_norm: if always_on > 0.0 { energy.total_j / always_on } else { 0.0 },
            energy_per_direction_j: energy.per_direction_j,
            latency: LatencyStats::of(&out.packets, None),
            cold_latency: LatencyStats::of(&out.packets, Some(FlowClass::Cold)),
            hot_latency: LatencyStats::of(&out.packets, Some(FlowClass::Hot)),
            makespan_ns,
            wake_delay_ns: out.wake_delay_ns,
            wakes: out.wakes,
            pause_events: out.pause_events.clone(),
            drops: 0,
            injected: out.packets.len(),
            delivered,
            in_flight: out.packets.len() - delivered,
            peak_occupancy_bytes: out.peak_occupancy,
            netlat_increase_pct: None,
            runtime_increase_pct: None,
        }
    }

    pub fn mean_latency_ns(&self) -> Option<f64> {
        self.latency.map(|l| l.mean_ns)
    }

    pub fn total_pause_events(&self) -> u64 {
        self.pause_events.iter().sum()
    }

    /// Fills the increases over the always-on run with the same fingerprint.
    pub fn relate_to_baseline(&mut self, baseline: &MetricsReport) -> Result<(), MetricsError> {
        if !baseline.is_baseline {
            return Err(MetricsError::NotABaseline(baseline.label.run_id.clone()));
        }
        if baseline.label.fingerprint != self.label.fingerprint {
            return Err(MetricsError::FingerprintMismatch {
                run: self.label.run_id.clone(),
                baseline: baseline.label.run_id.clone(),
            });
        }
        let pct = |x: f64, base: f64| if base > 0.0 { Some((x / base - 1.0) * 100.0) } else { None };
        self.netlat_increase_pct = match (self.mean_latency_ns(), baseline.mean_latency_ns()) {
            (Some(x), Some(b)) => pct(x, b),
            _ => None,
        };
        self.runtime_increase_pct = pct(self.makespan_ns as f64, baseline.makespan_ns as f64);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedRun {
    #[serde(flatten)]
    pub label: RunLabel,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum RunRecord {
    Completed(MetricsReport),
    Failed(FailedRun),
}

impl RunRecord {
    pub fn label(&self) -> &RunLabel {
        match self {
            Self::Completed(m) => &m.label,
            Self::Failed(f) => &f.label,
        }
    }

    pub fn report(&self) -> Option<&MetricsReport> {
        match self {
            Self::Completed(m) => Some(m),
            Self::Failed(_) => None,
        }
    }

    fn csv_row(&self) -> Vec<String> {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|v| v.to_string()).unwrap_or_default()
        }
        let l = self.label();
        let mut row = vec![
            l.run_id.clone(),
            l.sqs.to_string(),
            l.policy.clone(),
            opt(l.pdt_ns),
            opt(l.alpha),
            opt(l.strategy.clone()),
            l.seed.to_string(),
        ];
        match self {
            Self::Completed(m) => row.extend([
                m.energy_j.to_string(),
                m.energy_norm.to_string(),
                opt(m.latency.map(|s| s.mean_ns)),
                opt(m.latency.map(|s| s.p99_ns)),
                opt(m.cold_latency.map(|s| s.mean_ns)),
                opt(m.hot_latency.map(|s| s.mean_ns)),
                m.makespan_ns.to_string(),
                opt(m.netlat_increase_pct),
                opt(m.runtime_increase_pct),
                m.wake_delay_ns.to_string(),
                m.total_pause_events().to_string(),
                m.drops.to_string(),
            ]),
            Self::Failed(_) => {
                row.extend(std::iter::repeat_n(String::new(), 11));
                row.push("1".to_owned());
            }
        }
        row
    }
}

pub fn csv_string(records: &[RunRecord]) -> Result<String, MetricsError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.csv_row())?;
    }
    let bytes = w.into_inner().map_err(|e| MetricsError::Io { path: "<memory>".into(), source: e.into_error() })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn json_string(records: &[RunRecord]) -> Result<String, MetricsError> {
    Ok(serde_json::to_string_pretty(records)? + "\n")
}

/// Writes `contents` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), MetricsError> {
    let io = |source| MetricsError::Io { path: path.display().to_string(), source };
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Writes `results.csv` and `results.json` under `dir`, sorted by run id.
pub fn write_outputs(dir: &Path, records: &mut [RunRecord]) -> Result<(), MetricsError> {
    records.sort_by(|a, b| a.label().run_id.cmp(&b.label().run_id));
    write_atomic(&dir.join("results.csv"), &csv_string(records)?)?;
    write_atomic(&dir.join("results.json"), &json_string(records)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_percentiles() {
        let v: Vec<u64> = (1..=100).collect();
        assert_eq!(nearest_rank(&v, 50.0), 50);
        assert_eq!(nearest_rank(&v, 99.0), 99);
        assert_eq!(nearest_rank(&[7], 99.0), 7);
        let s = LatencyStats::from_samples(vec![30, 10, 20]).unwrap();
        assert_eq!((s.mean_ns, s.p50_ns, s.p99_ns, s.max_ns), (20.0, 20, 30, 30));
        assert!(LatencyStats::from_samples(Vec::new()).is_none());
    }

    fn report(cfg: &RunConfig, mean: f64, makespan: u64) -> MetricsReport {
        MetricsReport {
            label: RunLabel::of(cfg),
            is_baseline: cfg.policy.is_always_on(),
            energy_per_direction_j: vec![],
            energy_j: 0.0,
            energy_norm: 0.0,
            latency: Some(LatencyStats { count: 1, mean_ns: mean, p50_ns: 0, p99_ns: 0, max_ns: 0 }),
            cold_latency: None,
            hot_latency: None,
            makespan_ns: makespan,
            wake_delay_ns: 0,
            wakes: 0,
            pause_events: vec![0; 4],
            drops: 0,
            injected: 0,
            delivered: 0,
            in_flight: 0,
            peak_occupancy_bytes: 0,
            netlat_increase_pct: None,
            runtime_increase_pct: None,
        }
    }

    #[test]
    fn baseline_relation() {
        let base_cfg = RunConfig::default();
        let run_cfg = RunConfig { policy: PolicyConfig::FixedPdt { pdt: Pdt::Never }, ..base_cfg.clone() };
        let base = report(&base_cfg, 1000.0, 2000);
        let mut run = report(&run_cfg, 1100.0, 2000);
        run.relate_to_baseline(&base).unwrap();
        assert!((run.netlat_increase_pct.unwrap() - 10.0).abs() < 1e-9);
        assert_eq!(run.runtime_increase_pct, Some(0.0));

        assert!(matches!(run.clone().relate_to_baseline(&run), Err(MetricsError::NotABaseline(_))));
        let other = report(&RunConfig { seed: 9, ..base_cfg }, 1.0, 1);
        assert!(matches!(run.relate_to_baseline(&other), Err(MetricsError::FingerprintMismatch { .. })));
    }

    #[test]
    fn csv_has_exact_header_and_failed_rows() {
        let cfg = RunConfig::default();
        let records = vec![
            RunRecord::Completed(report(&cfg, 1.5, 3)),
            RunRecord::Failed(FailedRun { label: RunLabel::of(&cfg), error: "boom".into() }),
        ];
        let text = csv_string(&records).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(lines.next().unwrap().split(',').count(), 19);
        let failed: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(failed.len(), 19);
        assert_eq!(failed[18], "1");
        assert_eq!(failed[7], "");
    }

    #[test]
    fn json_round_trips() {
        let cfg = RunConfig { policy: PolicyConfig::FixedPdt { pdt: Pdt::Never }, ..Default::default() };
        let records = vec![RunRecord::Completed(report(&cfg, 1.5, 3))];
        let text = json_string(&records).unwrap();
        let back: Vec<RunRecord> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, records);
        assert!(text.contains("\"status\": \"completed\""));
    }
}
