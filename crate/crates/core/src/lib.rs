//! Discrete-event simulator of a lossless switched interconnect whose links
//! sleep between bursts, with static virtual-channel queuing schemes and an
//! adaptive power-down-threshold policy.

pub mod config;
pub mod fabric;
pub mod metrics;
pub mod network;
pub mod power;
pub mod runner;
pub mod sim;
pub mod sqs;
pub mod sweep;
pub mod topology;
pub mod workload;

pub use config::{ConfigError, RunConfig};
pub use metrics::{MetricsReport, RunRecord};
pub use network::{simulate, RunOutcome, SimError, SimOptions};
