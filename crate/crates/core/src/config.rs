//! Run configuration: a flat `key = value` text format with dotted sections
//! (TOML syntax), defaults, and validation that names the offending key.
//!
//! ```text
//! seed = 7
//! sqs = "dbbm"
//! topology.kind = "fat_tree"
//! topology.k = 8
//! policy.kind = "fixed_pdt"
//! policy.pdt_ns = "inf"
//! workload.kind = "phased_hotspot"
//! ```
//!
//! Buffer sizes, VC counts, power figures and workload shapes all have
//! defaults; they are modelling choices, not measured values.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fabric::{pause_headroom_bytes, MIN_PACKET_BYTES};
use crate::power::{BudgetReference, HistogramStrategy, Pdt, PerfBoundConfig, PolicyConfig, PowerParams};
use crate::sqs::SqsScheme;
use crate::topology::{self, LinkParams, Topology, TopologyError};
use crate::workload::WorkloadSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("invalid `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("sweep expands to {count} runs, more than max_runs = {max}")]
    TooManyRuns { count: usize, max: usize },
}

impl ConfigError {
    pub(crate) fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invalid { key: key.into(), message: message.into() }
    }
}

impl From<(&'static str, String)> for ConfigError {
    fn from((key, message): (&'static str, String)) -> Self {
        Self::invalid(key, message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    FatTree,
    SingleSwitch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologyConfig {
    pub kind: TopologyKind,
    pub k: usize,
    pub levels: usize,
    /// Endpoint count of a single-switch network.
    pub endpoints: usize,
    pub max_endpoints: usize,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self { kind: TopologyKind::FatTree, k: 8, levels: 2, endpoints: 16, max_endpoints: 4096 }
    }
}

impl TopologyConfig {
    pub fn build(&self, link: LinkParams) -> Result<Topology, TopologyError> {
        match self.kind {
            TopologyKind::FatTree => topology::build_fat_tree(self.k, self.levels, link, self.max_endpoints),
            TopologyKind::SingleSwitch => topology::build_single_switch(self.endpoints, link),
        }
    }

    pub fn endpoint_count(&self) -> usize {
        match self.kind {
            TopologyKind::FatTree => self.k.saturating_pow(self.levels as u32),
            TopologyKind::SingleSwitch => self.endpoints,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    pub rate_gbps: f64,
    pub prop_delay_ns: u64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self { rate_gbps: 100.0, prop_delay_ns: 100 }
    }
}

impl LinkConfig {
    pub fn params(&self) -> LinkParams {
        LinkParams { rate_bps: (self.rate_gbps * 1e9).round() as u64, prop_delay_ns: self.prop_delay_ns }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FabricConfig {
    pub vcs: usize,
    /// VCs the hardware offers; `vcs` may not exceed it.
    pub hw_vcs: usize,
    pub buffer_bytes: u32,
    pub xoff_bytes: u32,
    pub xon_bytes: u32,
    pub mtu: u32,
    /// Skip the pause-headroom check (lets tests provoke overflows).
    pub unchecked_thresholds: bool,
}

impl Default for FabricConfig {
    fn default() -> Self {
        Self {
            vcs: 4,
            hw_vcs: 8,
            buffer_bytes: 16 * 1024,
            xoff_bytes: 12 * 1024,
            xon_bytes: 8 * 1024,
            mtu: 1500,
            unchecked_thresholds: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    AlwaysOn,
    FixedPdt,
    Perfbound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    Persistent,
    WindowReset,
    Decay,
}

/// Flat view of a policy as written in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub pdt_ns: Pdt,
    pub alpha: f64,
    pub epoch_ns: u64,
    pub strategy: StrategyName,
    pub lambda: f64,
    pub fallback_pdt_ns: Pdt,
    pub budget: BudgetReference,
}

impl Default for PolicySpec {
    fn default() -> Self {
        Self::from_policy(&PolicyConfig::AlwaysOn)
    }
}

impl PolicySpec {
    pub fn from_policy(policy: &PolicyConfig) -> Self {
        let pb = match policy {
            PolicyConfig::Perfbound(pb) => *pb,
            _ => PerfBoundConfig::default(),
        };
        let (strategy, lambda) = match pb.strategy {
            HistogramStrategy::Persistent => (StrategyName::Persistent, 0.5),
            HistogramStrategy::WindowReset => (StrategyName::WindowReset, 0.5),
            HistogramStrategy::Decay(l) => (StrategyName::Decay, l),
        };
        let (kind, pdt_ns) = match policy {
            PolicyConfig::AlwaysOn => (PolicyKind::AlwaysOn, Pdt::Finite(100_000)),
            PolicyConfig::FixedPdt { pdt } => (PolicyKind::FixedPdt, *pdt),
            PolicyConfig::Perfbound(_) => (PolicyKind::Perfbound, Pdt::Finite(100_000)),
        };
        Self {
            kind,
            pdt_ns,
            alpha: pb.alpha,
            epoch_ns: pb.epoch_ns,
            strategy,
            lambda,
            fallback_pdt_ns: pb.fallback_pdt,
            budget: pb.budget,
        }
    }

    pub fn to_policy(&self) -> Result<PolicyConfig, ConfigError> {
        Ok(match self.kind {
            PolicyKind::AlwaysOn => PolicyConfig::AlwaysOn,
            PolicyKind::FixedPdt => PolicyConfig::FixedPdt { pdt: self.pdt_ns },
            PolicyKind::Perfbound => {
                if !(0.0..=1.0).contains(&self.alpha) {
                    return Err(ConfigError::invalid(
                        "policy.alpha",
                        format!("degradation limit must lie in [0, 1], got {}", self.alpha),
                    ));
                }
                if self.epoch_ns == 0 {
                    return Err(ConfigError::invalid("policy.epoch_ns", "epoch must be > 0"));
                }
                let strategy = match self.strategy {
                    StrategyName::Persistent => HistogramStrategy::Persistent,
                    StrategyName::WindowReset => HistogramStrategy::WindowReset,
                    StrategyName::Decay => {
                        if !(self.lambda > 0.0 && self.lambda < 1.0) {
                            return Err(ConfigError::invalid(
                                "policy.lambda",
                                format!("decay factor must lie in (0, 1), got {}", self.lambda),
                            ));
                        }
                        HistogramStrategy::Decay(self.lambda)
                    }
                };
                PolicyConfig::Perfbound(PerfBoundConfig {
                    alpha: self.alpha,
                    epoch_ns: self.epoch_ns,
                    strategy,
                    fallback_pdt: self.fallback_pdt_ns,
                    budget: self.budget,
                })
            }
        })
    }
}

/// A fully validated description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub horizon_ns: u64,
    pub sqs: SqsScheme,
    pub topology: TopologyConfig,
    pub link: LinkConfig,
    pub fabric: FabricConfig,
    pub power: PowerParams,
    pub policy: PolicyConfig,
    pub workload: WorkloadSpec,
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    horizon_ns: Option<u64>,
    sqs: Option<SqsScheme>,
    output_dir: Option<PathBuf>,
    topology: TopologyConfig,
    #[serde(default)]
    link: LinkConfig,
    #[serde(default)]
    fabric: FabricConfig,
    #[serde(default)]
    power: PowerParams,
    #[serde(default)]
    policy: PolicySpec,
    workload: WorkloadSpec,
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_HORIZON_NS: u64 = 50_000_000;

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            horizon_ns: DEFAULT_HORIZON_NS,
            sqs: SqsScheme::Dbbm,
            topology: TopologyConfig::default(),
            link: LinkConfig::default(),
            fabric: FabricConfig::default(),
            power: PowerParams::default(),
            policy: PolicyConfig::AlwaysOn,
            workload: WorkloadSpec::default(),
            output_dir: None,
        }
    }
}

fn short_hash(bytes: &[u8]) -> String {
    hex::encode(&Sha256::digest(bytes)[..8])
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::parse_with_origin(text, "<config>")
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        let mut cfg = Self::parse_with_origin(&text, &path.display().to_string())?;
        // Relative trace paths are relative to the config file.
        if let (Some(trace), Some(dir)) = (&cfg.workload.trace, path.parent()) {
            if trace.is_relative() {
                cfg.workload.trace = Some(dir.join(trace));
                cfg.validate()?;
            }
        }
        Ok(cfg)
    }

    fn parse_with_origin(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            origin: origin.to_owned(),
            message: e.to_string().trim_end().to_owned(),
        })?;
        let cfg = RunConfig {
            seed: raw.seed.unwrap_or(DEFAULT_SEED),
            horizon_ns: raw.horizon_ns.unwrap_or(DEFAULT_HORIZON_NS),
            sqs: raw.sqs.unwrap_or(SqsScheme::Dbbm),
            topology: raw.topology,
            link: raw.link,
            fabric: raw.fabric,
            power: raw.power,
            policy: raw.policy.to_policy()?,
            workload: raw.workload,
            output_dir: raw.output_dir,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn endpoint_count(&self) -> usize {
        self.topology.endpoint_count()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.horizon_ns == 0 {
            return Err(ConfigError::invalid("horizon_ns", "must be > 0"));
        }
        let t = &self.topology;
        match t.kind {
            TopologyKind::FatTree => {
                if t.k < 2 {
                    return Err(ConfigError::invalid("topology.k", format!("need k >= 2, got {}", t.k)));
                }
                if t.levels < 1 {
                    return Err(ConfigError::invalid("topology.levels", "need at least one level"));
                }
                let n = (t.k as u128).checked_pow(t.levels as u32).unwrap_or(u128::MAX);
                if n > t.max_endpoints as u128 {
                    return Err(ConfigError::invalid(
                        "topology.levels",
                        format!("{}-ary {}-tree has {n} endpoints, above max_endpoints = {}", t.k, t.levels, t.max_endpoints),
                    ));
                }
            }
            TopologyKind::SingleSwitch => {
                if t.endpoints < 2 {
                    return Err(ConfigError::invalid(
                        "topology.endpoints",
                        format!("need at least 2 endpoints, got {}", t.endpoints),
                    ));
                }
            }
        }

        if self.link.rate_gbps.is_nan() || self.link.rate_gbps <= 0.0 {
            return Err(ConfigError::invalid("link.rate_gbps", "must be > 0"));
        }

        let f = &self.fabric;
        if f.vcs == 0 || f.vcs > 255 {
            return Err(ConfigError::invalid("fabric.vcs", format!("must lie in [1, 255], got {}", f.vcs)));
        }
        if f.vcs > f.hw_vcs {
            return Err(ConfigError::invalid(
                "fabric.vcs",
                format!("{} VCs requested but hardware offers {}", f.vcs, f.hw_vcs),
            ));
        }
        if f.mtu < MIN_PACKET_BYTES || f.mtu > f.buffer_bytes {
            return Err(ConfigError::invalid(
                "fabric.mtu",
                format!("must lie in [{MIN_PACKET_BYTES}, buffer_bytes = {}], got {}", f.buffer_bytes, f.mtu),
            ));
        }
        if f.xon_bytes >= f.xoff_bytes {
            return Err(ConfigError::invalid(
                "fabric.xon_bytes",
                format!("xon ({}) must be below xoff ({})", f.xon_bytes, f.xoff_bytes),
            ));
        }
        if f.xoff_bytes > f.buffer_bytes {
            return Err(ConfigError::invalid(
                "fabric.xoff_bytes",
                format!("xoff ({}) exceeds the buffer ({})", f.xoff_bytes, f.buffer_bytes),
            ));
        }
        if !f.unchecked_thresholds {
            let link = self.link.params();
            let headroom = pause_headroom_bytes(link.rate_bps, link.prop_delay_ns, f.mtu);
            if u64::from(f.xoff_bytes) + headroom > u64::from(f.buffer_bytes) {
                return Err(ConfigError::invalid(
                    "fabric.xoff_bytes",
                    format!(
                        "xoff ({}) leaves less than the {headroom} B pause headroom in a {} B buffer",
                        f.xoff_bytes, f.buffer_bytes
                    ),
                ));
            }
        }

        self.power.validate()?;
        if let PolicyConfig::Perfbound(pb) = &self.policy {
            PolicySpec::from_policy(&PolicyConfig::Perfbound(*pb)).to_policy()?;
        }
        self.workload.validate(self.endpoint_count())?;
        Ok(())
    }

    /// Hash of everything except the power policy; a run and its always-on
    /// baseline share it.
    pub fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.policy = PolicyConfig::AlwaysOn;
        short_hash(serde_json::to_string(&c).expect("serializable").as_bytes())
    }

    /// Stable identifier derived from the whole configuration (seed included).
    pub fn run_id(&self) -> String {
        short_hash(serde_json::to_string(self).expect("serializable").as_bytes())
    }

    pub fn baseline(&self) -> RunConfig {
        RunConfig { policy: PolicyConfig::AlwaysOn, ..self.clone() }
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} sqs={} policy={} seed={} endpoints={}",
            self.run_id(),
            self.sqs,
            self.policy.name(),
            self.seed,
            self.endpoint_count()
        )
    }
}
