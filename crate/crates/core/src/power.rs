//! Link power management: the four-state low-power-idle machine for one link
//! direction, idle-timer policies (always-on, fixed power-down threshold,
//! PerfBound), the idle-gap histogram that drives PerfBound, and energy
//! accounting.
//!
//! The PerfBound predictor implemented here is one consistent reading of the
//! mechanism: a candidate threshold `t` is charged one wake-up (`Tw`) for each
//! recorded gap whose bin boundary lies above `t`, and the smallest bin
//! boundary whose predicted cost fits in `alpha * reference_time` wins.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::SimTime;

/// Power-down threshold: either a finite idle time or "never power down".
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pdt {
    Finite(u64),
    Never,
}

impl Pdt {
    pub fn deadline(self, from: SimTime) -> Option<SimTime> {
        match self {
            Pdt::Finite(ns) => Some(from + ns),
            Pdt::Never => None,
        }
    }
}

impl fmt::Display for Pdt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pdt::Finite(ns) => write!(f, "{ns}"),
            Pdt::Never => f.write_str("inf"),
        }
    }
}

impl FromStr for Pdt {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "inf" | "infinity" => Ok(Pdt::Never),
            other => other
                .parse::<u64>()
                .map(Pdt::Finite)
                .map_err(|_| format!("expected a non-negative integer or `inf`, got `{other}`")),
        }
    }
}

// Serialized as an integer, or the string "inf".
impl Serialize for Pdt {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Pdt::Finite(ns) => s.serialize_u64(*ns),
            Pdt::Never => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Pdt {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Pdt;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative integer number of ns or \"inf\"")
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Pdt, E> {
                Ok(Pdt::Finite(v))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Pdt, E> {
                u64::try_from(v)
                    .map(Pdt::Finite)
                    .map_err(|_| E::custom(format!("threshold must be non-negative, got {v}")))
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<Pdt, E> {
                if v == f64::INFINITY {
                    Ok(Pdt::Never)
                } else {
                    Err(E::custom(format!("expected an integer or `inf`, got {v}")))
                }
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Pdt, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerState {
    Active,
    ToSleep,
    Lpi,
    ToWake,
}

impl PowerState {
    pub const ALL: [PowerState; 4] = [Self::Active, Self::ToSleep, Self::Lpi, Self::ToWake];

    fn index(self) -> usize {
        self as usize
    }

    fn next(self) -> PowerState {
        match self {
            Self::Active => Self::ToSleep,
            Self::ToSleep => Self::Lpi,
            Self::Lpi => Self::ToWake,
            Self::ToWake => Self::Active,
        }
    }
}

/// Transition timing and power draw of one link direction.
///
/// Defaults are 10GBASE-T-class EEE figures; none of them are measured values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerParams {
    pub ts_ns: u64,
    pub tw_ns: u64,
    pub p_active_w: f64,
    pub p_lpi_w: f64,
    pub p_transition_w: f64,
    /// Let a wake request cut a sleep transition short.
    pub abortable_sleep: bool,
}

impl Default for PowerParams {
    fn default() -> Self {
        Self {
            ts_ns: 2880,
            tw_ns: 4480,
            p_active_w: 1.0,
            p_lpi_w: 0.1,
            p_transition_w: 1.0,
            abortable_sleep: false,
        }
    }
}

impl PowerParams {
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.ts_ns == 0 {
            return Err(("power.ts_ns", "sleep transition time must be > 0".into()));
        }
        if self.tw_ns == 0 {
            return Err(("power.tw_ns", "wake transition time must be > 0".into()));
        }
        if !(self.p_lpi_w >= 0.0 && self.p_lpi_w < self.p_active_w) {
            return Err((
                "power.p_lpi_w",
                format!(
                    "need 0 <= p_lpi_w < p_active_w (p_lpi_w={}, p_active_w={})",
                    self.p_lpi_w, self.p_active_w
                ),
            ));
        }
        if self.p_transition_w.is_nan() || self.p_transition_w < self.p_lpi_w {
            return Err((
                "power.p_transition_w",
                format!(
                    "need p_transition_w >= p_lpi_w (p_transition_w={}, p_lpi_w={})",
                    self.p_transition_w, self.p_lpi_w
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "lambda")]
pub enum HistogramStrategy {
    Persistent,
    WindowReset,
    Decay(f64),
}

impl fmt::Display for HistogramStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Persistent => f.write_str("persistent"),
            Self::WindowReset => f.write_str("window_reset"),
            Self::Decay(l) => write!(f, "decay({l})"),
        }
    }
}

/// What the PerfBound degradation budget is a fraction of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetReference {
    WallTime,
    BusyTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfBoundConfig {
    pub alpha: f64,
    pub epoch_ns: u64,
    pub strategy: HistogramStrategy,
    pub fallback_pdt: Pdt,
    pub budget: BudgetReference,
}

impl Default for PerfBoundConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            epoch_ns: 1_000_000,
            strategy: HistogramStrategy::Persistent,
            fallback_pdt: Pdt::Finite(1_000_000),
            budget: BudgetReference::WallTime,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PolicyConfig {
    AlwaysOn,
    FixedPdt { pdt: Pdt },
    Perfbound(PerfBoundConfig),
}

impl PolicyConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::AlwaysOn => "always_on",
            Self::FixedPdt { .. } => "fixed_pdt",
            Self::Perfbound(_) => "perfbound",
        }
    }

    pub fn is_always_on(&self) -> bool {
        matches!(self, Self::AlwaysOn)
    }

    /// Threshold in force before any PerfBound recomputation.
    pub fn initial_pdt(&self) -> Pdt {
        match self {
            Self::AlwaysOn => Pdt::Never,
            Self::FixedPdt { pdt } => *pdt,
            Self::Perfbound(pb) => pb.fallback_pdt,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PowerError {
    #[error("illegal power transition {from:?} -> {to:?} at {at}")]
    IllegalTransition { from: PowerState, to: PowerState, at: SimTime },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WakeOutcome {
    /// Link was asleep; it will be active at `ready_at`.
    Started { ready_at: SimTime },
    /// Link is still powering down; the wake starts when that completes.
    Deferred,
    /// A wake is already in progress or queued.
    Pending,
    AlreadyActive,
}

/// Power state machine and state-time ledger for one link direction.
#[derive(Debug, Clone)]
pub struct LinkPower {
    state: PowerState,
    entered: SimTime,
    wake_requested: Option<SimTime>,
    durations: [u64; 4],
    wake_delay_ns: u64,
    wakes: u64,
    timeline: Option<Vec<(SimTime, PowerState)>>,
}

impl LinkPower {
    pub fn new(record_timeline: bool) -> Self {
        Self {
            state: PowerState::Active,
            entered: SimTime::ZERO,
            wake_requested: None,
            durations: [0; 4],
            wake_delay_ns: 0,
            wakes: 0,
            timeline: record_timeline.then(|| vec![(SimTime::ZERO, PowerState::Active)]),
        }
    }

    pub fn state(&self) -> PowerState {
        self.state
    }

    pub fn entered(&self) -> SimTime {
        self.entered
    }

    pub fn wake_pending(&self) -> bool {
        self.wake_requested.is_some()
    }

    /// Sum of `(active again - wake requested)` over completed wakes.
    pub fn wake_delay_ns(&self) -> u64 {
        self.wake_delay_ns
    }

    pub fn wakes(&self) -> u64 {
        self.wakes
    }

    pub fn timeline(&self) -> Option<&[(SimTime, PowerState)]> {
        self.timeline.as_deref()
    }

    fn transition(&mut self, to: PowerState, at: SimTime) -> Result<(), PowerError> {
        let abort = self.state == PowerState::ToSleep && to == PowerState::ToWake;
        if (self.state.next() != to && !abort) || at < self.entered {
            return Err(PowerError::IllegalTransition { from: self.state, to, at });
        }
        self.durations[self.state.index()] += at - self.entered;
        self.state = to;
        self.entered = at;
        if let Some(tl) = &mut self.timeline {
            tl.push((at, to));
        }
        Ok(())
    }

    /// Idle timer expired: ACTIVE -> TO_SLEEP. Returns when the sleep completes.
    pub fn begin_sleep(&mut self, at: SimTime, params: &PowerParams) -> Result<SimTime, PowerError> {
        self.transition(PowerState::ToSleep, at)?;
        Ok(at + params.ts_ns)
    }

    /// TO_SLEEP -> LPI, continuing straight into TO_WAKE when a wake was
    /// requested meanwhile. Returns the wake completion time in that case.
    pub fn complete_sleep(
        &mut self,
        at: SimTime,
        params: &PowerParams,
    ) -> Result<Option<SimTime>, PowerError> {
        self.transition(PowerState::Lpi, at)?;
        if self.wake_requested.is_some() {
            self.transition(PowerState::ToWake, at)?;
            return Ok(Some(at + params.tw_ns));
        }
        Ok(None)
    }

    pub fn request_wake(
        &mut self,
        at: SimTime,
        params: &PowerParams,
    ) -> Result<WakeOutcome, PowerError> {
        match self.state {
            PowerState::Active => Ok(WakeOutcome::AlreadyActive),
            PowerState::ToWake => Ok(WakeOutcome::Pending),
            PowerState::ToSleep if self.wake_requested.is_some() => Ok(WakeOutcome::Pending),
            PowerState::ToSleep => {
                self.wake_requested = Some(at);
                if params.abortable_sleep {
                    self.transition(PowerState::ToWake, at)?;
                    Ok(WakeOutcome::Started { ready_at: at + params.tw_ns })
                } else {
                    Ok(WakeOutcome::Deferred)
                }
            }
            PowerState::Lpi => {
                self.wake_requested = Some(at);
                self.transition(PowerState::ToWake, at)?;
                Ok(WakeOutcome::Started { ready_at: at + params.tw_ns })
            }
        }
    }

    pub fn complete_wake(&mut self, at: SimTime) -> Result<(), PowerError> {
        self.transition(PowerState::Active, at)?;
        if let Some(req) = self.wake_requested.take() {
            self.wake_delay_ns += at - req;
            self.wakes += 1;
        }
        Ok(())
    }

    /// Closes the ledger at `horizon`; the durations sum to `horizon` exactly.
    pub fn close(&self, horizon: SimTime) -> StateDurations {
        let mut d = self.durations;
        d[self.state.index()] += horizon.ns().saturating_sub(self.entered.ns());
        StateDurations(d)
    }
}

/// Nanoseconds spent in each [`PowerState`], indexed in declaration order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDurations(pub [u64; 4]);

impl StateDurations {
    pub fn get(&self, state: PowerState) -> u64 {
        self.0[state.index()]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn energy_j(&self, p: &PowerParams) -> f64 {
        let secs = |s: PowerState| self.get(s) as f64 * 1e-9;
        p.p_active_w * secs(PowerState::Active)
            + p.p_lpi_w * secs(PowerState::Lpi)
            + p.p_transition_w * (secs(PowerState::ToSleep) + secs(PowerState::ToWake))
    }
}

/// Closed per-direction ledgers of a finished run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub per_direction: Vec<StateDurations>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTotals {
    pub per_direction_j: Vec<f64>,
    pub total_j: f64,
}

impl EnergyLedger {
    pub fn energy_total(&self, params: &PowerParams) -> EnergyTotals {
        let per_direction_j: Vec<f64> =
            self.per_direction.iter().map(|d| d.energy_j(params)).collect();
        let total_j = per_direction_j.iter().sum();
        EnergyTotals { per_direction_j, total_j }
    }
}

/// Binned record of idle-gap lengths for one output port.
#[derive(Debug, Clone, PartialEq)]
pub struct IdleGapHistogram {
    boundaries: Vec<u64>,
    counts: Vec<f64>,
    busy_ns: f64,
    wall_ns: f64,
}

impl Default for IdleGapHistogram {
    /// 24 bins, 256 ns doubling up to ~2.1 s.
    fn default() -> Self {
        Self::geometric(256, 2, 24)
    }
}

impl IdleGapHistogram {
    pub fn geometric(first: u64, ratio: u64, bins: usize) -> Self {
        let boundaries = std::iter::successors(Some(first), |b| Some(b * ratio))
            .take(bins)
            .collect();
        Self::with_boundaries(boundaries)
    }

    /// Panics unless `boundaries` is non-empty and strictly increasing.
    pub fn with_boundaries(boundaries: Vec<u64>) -> Self {
        assert!(!boundaries.is_empty());
        assert!(boundaries.windows(2).all(|w| w[0] < w[1]), "boundaries must increase");
        let counts = vec![0.0; boundaries.len()];
        Self { boundaries, counts, busy_ns: 0.0, wall_ns: 0.0 }
    }

    pub fn boundaries(&self) -> &[u64] {
        &self.boundaries
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn set_counts(&mut self, counts: &[f64]) {
        assert_eq!(counts.len(), self.counts.len());
        self.counts.copy_from_slice(counts);
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|&c| c == 0.0)
    }

    /// Bin of the largest boundary `<= gap`, clamped to the first bin.
    pub fn bin_of(&self, gap: u64) -> usize {
        self.boundaries.partition_point(|&b| b <= gap).saturating_sub(1)
    }

    pub fn record_gap(&mut self, gap: u64) {
        let bin = self.bin_of(gap);
        self.counts[bin] += 1.0;
    }

    pub fn add_busy(&mut self, ns: u64) {
        self.busy_ns += ns as f64;
    }

    pub fn add_wall(&mut self, ns: u64) {
        self.wall_ns += ns as f64;
    }

    pub fn busy_ns(&self) -> f64 {
        self.busy_ns
    }

    pub fn wall_ns(&self) -> f64 {
        self.wall_ns
    }

    /// Epoch-boundary maintenance. The busy/wall accumulators follow the
    /// counts so the budget always refers to the window the counts describe.
    pub fn apply_strategy(&mut self, strategy: HistogramStrategy) {
        match strategy {
            HistogramStrategy::Persistent => {}
            HistogramStrategy::WindowReset => {
                self.counts.iter_mut().for_each(|c| *c = 0.0);
                self.busy_ns = 0.0;
                self.wall_ns = 0.0;
            }
            HistogramStrategy::Decay(lambda) => {
                self.counts.iter_mut().for_each(|c| *c *= lambda);
                self.busy_ns *= lambda;
                self.wall_ns *= lambda;
            }
        }
    }
}

/// Smallest bin boundary `t` whose predicted added latency
/// `(sum of counts in bins with boundary > t) * tw` stays within
/// `alpha * reference_ns`. An empty histogram yields `fallback`.
pub fn perfbound_compute_pdt(
    hist: &IdleGapHistogram,
    alpha: f64,
    tw_ns: u64,
    reference_ns: f64,
    fallback: Pdt,
) -> Pdt {
    if hist.is_empty() {
        return fallback;
    }
    let budget = alpha * reference_ns;
    let tw = tw_ns as f64;
    // above[i] = total weight in bins strictly above bin i.
    let mut above = vec![0.0; hist.counts.len()];
    for i in (0..hist.counts.len() - 1).rev() {
        above[i] = above[i + 1] + hist.counts[i + 1];
    }
    for (bin, &boundary) in hist.boundaries.iter().enumerate() {
        if above[bin] * tw <= budget {
            return Pdt::Finite(boundary);
        }
    }
    Pdt::Never
}
