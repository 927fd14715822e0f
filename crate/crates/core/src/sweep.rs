//! Parameter sweeps: Cartesian expansion of a few override lists on top of
//! a base configuration, plus the always-on baselines the runs need.
//!
//! ```text
//! sqs = ["one_q", "dbbm"]
//! policy.kind = ["fixed_pdt"]
//! policy.pdt_ns = [0, 10000, "inf"]
//! seed = [1, 2]
//! max_runs = 1000
//! ```

use std::collections::HashSet;
use std::path::Path;

use serde::Deserialize;

use crate::config::{ConfigError, PolicyKind, PolicySpec, RunConfig, StrategyName};
use crate::power::Pdt;
use crate::sqs::SqsScheme;

pub const DEFAULT_MAX_RUNS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweepPolicy {
    kind: Option<Vec<PolicyKind>>,
    pdt_ns: Option<Vec<Pdt>>,
    alpha: Option<Vec<f64>>,
    strategy: Option<Vec<StrategyName>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    sqs: Option<Vec<SqsScheme>>,
    seed: Option<Vec<u64>>,
    policy: Option<RawSweepPolicy>,
    max_runs: Option<usize>,
}

/// Override lists; `None` keeps the base configuration's value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepSpec {
    pub sqs: Option<Vec<SqsScheme>>,
    pub kind: Option<Vec<PolicyKind>>,
    pub pdt_ns: Option<Vec<Pdt>>,
    pub alpha: Option<Vec<f64>>,
    pub strategy: Option<Vec<StrategyName>>,
    pub seed: Option<Vec<u64>>,
    pub max_runs: usize,
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawSweep = toml::from_str(text).map_err(|e| ConfigError::Parse {
            origin: "<sweep>".into(),
            message: e.to_string().trim_end().to_owned(),
        })?;
        let policy = raw.policy.unwrap_or(RawSweepPolicy { kind: None, pdt_ns: None, alpha: None, strategy: None });
        let spec = Self {
            sqs: raw.sqs,
            kind: policy.kind,
            pdt_ns: policy.pdt_ns,
            alpha: policy.alpha,
            strategy: policy.strategy,
            seed: raw.seed,
            max_runs: raw.max_runs.unwrap_or(DEFAULT_MAX_RUNS),
        };
        let empty = [
            ("sqs", spec.sqs.as_ref().map(Vec::len)),
            ("policy.kind", spec.kind.as_ref().map(Vec::len)),
            ("policy.pdt_ns", spec.pdt_ns.as_ref().map(Vec::len)),
            ("policy.alpha", spec.alpha.as_ref().map(Vec::len)),
            ("policy.strategy", spec.strategy.as_ref().map(Vec::len)),
            ("seed", spec.seed.as_ref().map(Vec::len)),
        ]
        .into_iter()
        .find(|(_, len)| *len == Some(0));
        if let Some((key, _)) = empty {
            return Err(ConfigError::invalid(key, "sweep list is empty"));
        }
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse { origin: path.display().to_string(), message },
            other => other,
        })
    }
}

fn values<T: Clone>(list: &Option<Vec<T>>, base: T) -> Vec<T> {
    list.clone().unwrap_or_else(|| vec![base])
}

/// All runs of a sweep: distinct always-on baselines first, then the rest,
/// each group in expansion order with duplicates removed.
pub fn expand(base: &RunConfig, sweep: &SweepSpec) -> Result<Vec<RunConfig>, ConfigError> {
    let spec = PolicySpec::from_policy(&base.policy);
    let mut runs = Vec::new();
    for &sqs in &values(&sweep.sqs, base.sqs) {
        for &kind in &values(&sweep.kind, spec.kind) {
            for &pdt_ns in &values(&sweep.pdt_ns, spec.pdt_ns) {
                for &alpha in &values(&sweep.alpha, spec.alpha) {
                    for &strategy in &values(&sweep.strategy, spec.strategy) {
                        for &seed in &values(&sweep.seed, base.seed) {
                            let policy = PolicySpec { kind, pdt_ns, alpha, strategy, ..spec }.to_policy()?;
                            let cfg = RunConfig { sqs, seed, policy, ..base.clone() };
                            runs.push(cfg);
                        }
                    }
                }
            }
        }
    }

    let mut seen = HashSet::new();
    let mut baselines = Vec::new();
    let mut dependents = Vec::new();
    for cfg in runs {
        let baseline = cfg.baseline();
        if seen.insert(baseline.run_id()) {
            baselines.push(baseline);
        }
        if !cfg.policy.is_always_on() && seen.insert(cfg.run_id()) {
            dependents.push(cfg);
        }
    }
    baselines.extend(dependents);
    if baselines.len() > sweep.max_runs {
        return Err(ConfigError::TooManyRuns { count: baselines.len(), max: sweep.max_runs });
    }
    Ok(baselines)
}
