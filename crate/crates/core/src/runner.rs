//! Executes batches of independent runs, optionally in parallel, and ties
//! each run to its always-on baseline.

use std::collections::HashMap;

use crate::config::RunConfig;
use crate::metrics::{FailedRun, MetricsReport, RunLabel, RunRecord};
use crate::network::{simulate, SimOptions};

pub fn run_one(cfg: &RunConfig) -> RunRecord {
    match simulate(cfg, SimOptions::default()) {
        Ok(out) => RunRecord::Completed(MetricsReport::from_outcome(cfg, &out)),
        Err(e) => {
            log::warn!("run {} failed: {e}", cfg.run_id());
            RunRecord::Failed(FailedRun { label: RunLabel::of(cfg), error: e.to_string() })
        }
    }
}

pub fn run_batch_sequential(configs: &[RunConfig]) -> Vec<RunRecord> {
    configs.iter().map(run_one).collect()
}

/// Runs on a pool of `workers` threads; results keep the input order.
#[cfg(feature = "parallel")]
pub fn run_batch_parallel(configs: &[RunConfig], workers: usize) -> Vec<RunRecord> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| configs.par_iter().map(run_one).collect())
}

pub fn run_batch(configs: &[RunConfig], workers: usize) -> Vec<RunRecord> {
    #[cfg(feature = "parallel")]
    if workers > 1 {
        return run_batch_parallel(configs, workers);
    }
    let _ = workers;
    run_batch_sequential(configs)
}

/// Runs baselines, then everything else, and fills the baseline-relative
/// increases. A run whose baseline failed keeps empty increases.
pub fn execute(configs: &[RunConfig], workers: usize) -> Vec<RunRecord> {
    let (baselines, dependents): (Vec<RunConfig>, Vec<RunConfig>) =
        configs.iter().cloned().partition(|c| c.policy.is_always_on());
    let mut records = run_batch(&baselines, workers);
    let by_fingerprint: HashMap<String, MetricsReport> = records
        .iter()
        .filter_map(RunRecord::report)
        .map(|r| (r.label.fingerprint.clone(), r.clone()))
        .collect();
    for mut record in run_batch(&dependents, workers) {
        if let RunRecord::Completed(report) = &mut record {
            if let Some(base) = by_fingerprint.get(&report.label.fingerprint) {
                report.relate_to_baseline(base).expect("fingerprints match");
            }
        }
        records.push(record);
    }
    records
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{TopologyConfig, TopologyKind};
    use crate::power::{Pdt, PolicyConfig};
    use crate::workload::{WorkloadKind, WorkloadSpec};

    fn tiny(policy: PolicyConfig) -> RunConfig {
        RunConfig {
            horizon_ns: 2_000_000,
            topology: TopologyConfig { kind: TopologyKind::SingleSwitch, endpoints: 4, ..Default::default() },
            workload: WorkloadSpec { kind: WorkloadKind::Phased, phases: 3, long_every: 0, ..Default::default() },
            policy,
            ..Default::default()
        }
    }

    #[test]
    fn baseline_relative_fields_are_filled() {
        let configs = vec![tiny(PolicyConfig::FixedPdt { pdt: Pdt::Finite(0) }), tiny(PolicyConfig::AlwaysOn)];
        let records = execute(&configs, 1);
        assert_eq!(records.len(), 2);
        let base = records[0].report().unwrap();
        assert!(base.is_baseline && base.netlat_increase_pct.is_none());
        let run = records[1].report().unwrap();
        assert!(run.netlat_increase_pct.unwrap() > 0.0);
        assert!(run.runtime_increase_pct.is_some());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_sequential() {
        let configs: Vec<_> = [0, 1000, 100_000]
            .into_iter()
            .map(|p| tiny(PolicyConfig::FixedPdt { pdt: Pdt::Finite(p) }))
            .collect();
        assert_eq!(run_batch_sequential(&configs), run_batch_parallel(&configs, 3));
    }
}
