#![allow(dead_code)]

use std::collections::VecDeque;
use std::io::Write;

use lpinet::config::{FabricConfig, RunConfig, TopologyConfig, TopologyKind};
use lpinet::fabric::serialization_ns;
use lpinet::power::{IdleGapHistogram, Pdt, PolicyConfig, PowerParams, PowerState};
use lpinet::workload::{WorkloadKind, WorkloadSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RATE_BPS: u64 = 100_000_000_000;
pub const PROP_NS: u64 = 100;

/// Brute-force PerfBound threshold: try every candidate in increasing order.
pub fn brute_force_pdt(hist: &IdleGapHistogram, alpha: f64, tw_ns: u64, reference_ns: f64, fallback: Pdt) -> Pdt {
    if hist.counts().iter().all(|&c| c == 0.0) {
        return fallback;
    }
    let bounds = hist.boundaries();
    let candidates = bounds.iter().map(|&b| Pdt::Finite(b)).chain(std::iter::once(Pdt::Never));
    for cand in candidates {
        let mut exceeding = 0.0;
        for (i, &b) in bounds.iter().enumerate() {
            if Pdt::Finite(b) > cand {
                exceeding += hist.counts()[i];
            }
        }
        if exceeding * tw_ns as f64 <= alpha * reference_ns {
            return cand;
        }
    }
    unreachable!("the infinite threshold always satisfies the budget")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TracePacket {
    pub t: u64,
    pub size: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceLink {
    pub timeline: Vec<(u64, PowerState)>,
    /// (start, size) of each transmission.
    pub tx: Vec<(u64, u32)>,
    pub durations: [u64; 4],
}

fn idx(s: PowerState) -> usize {
    PowerState::ALL.iter().position(|&x| x == s).unwrap()
}

/// One link direction stepped one nanosecond at a time.
///
/// `arrivals` are the instants packets become eligible to send, in order.
/// Within an instant, arrivals, transmission ends and completed transitions
/// are applied before the idle timer is checked.
pub fn reference_link(
    arrivals: &[TracePacket],
    pdt: Option<u64>,
    p: &PowerParams,
    horizon: u64,
) -> ReferenceLink {
    let mut state = PowerState::Active;
    let mut entered = 0u64;
    let mut durations = [0u64; 4];
    let mut timeline = vec![(0, PowerState::Active)];
    let mut queue: VecDeque<u32> = VecDeque::new();
    let mut next = 0;
    let mut busy_until: Option<u64> = None;
    let mut idle_since: Option<u64> = Some(0);
    let mut wake_requested = false;
    let mut tx = Vec::new();

    let mut go = |to: PowerState, t: u64, state: &mut PowerState, entered: &mut u64| {
        durations[idx(*state)] += t - *entered;
        *state = to;
        *entered = t;
        timeline.push((t, to));
    };

    for t in 0..=horizon {
        while next < arrivals.len() && arrivals[next].t == t {
            queue.push_back(arrivals[next].size);
            next += 1;
        }
        if busy_until == Some(t) {
            busy_until = None;
        }
        if state == PowerState::ToSleep && t == entered + p.ts_ns {
            go(PowerState::Lpi, t, &mut state, &mut entered);
            if wake_requested {
                go(PowerState::ToWake, t, &mut state, &mut entered);
            }
        }
        if state == PowerState::ToWake && t == entered + p.tw_ns {
            go(PowerState::Active, t, &mut state, &mut entered);
            wake_requested = false;
        }

        if busy_until.is_none() && !queue.is_empty() {
            idle_since = None;
            match state {
                PowerState::Active => {
                    let size = queue.pop_front().unwrap();
                    busy_until = Some(t + serialization_ns(size, RATE_BPS));
                    tx.push((t, size));
                }
                PowerState::Lpi => {
                    wake_requested = true;
                    go(PowerState::ToWake, t, &mut state, &mut entered);
                }
                PowerState::ToSleep if !wake_requested => {
                    wake_requested = true;
                    if p.abortable_sleep {
                        go(PowerState::ToWake, t, &mut state, &mut entered);
                    }
                }
                PowerState::ToSleep | PowerState::ToWake => {}
            }
        }
        if state == PowerState::Active && busy_until.is_none() && queue.is_empty() && idle_since.is_none() {
            idle_since = Some(t);
        }

        if let (Some(pdt), Some(since)) = (pdt, idle_since) {
            if state == PowerState::Active && busy_until.is_none() && queue.is_empty() && t == since + pdt {
                go(PowerState::ToSleep, t, &mut state, &mut entered);
            }
        }
    }
    durations[idx(state)] += horizon - entered;
    ReferenceLink { timeline, tx, durations }
}

/// Arrival instants at the far end of a link for the given transmissions.
pub fn downstream_arrivals(tx: &[(u64, u32)]) -> Vec<TracePacket> {
    tx.iter()
        .map(|&(start, size)| TracePacket { t: start + serialization_ns(size, RATE_BPS) + PROP_NS, size })
        .collect()
}

#[derive(Debug, Clone)]
pub struct LinkScenario {
    pub packets: Vec<TracePacket>,
    pub policy: PolicyConfig,
    pub power: PowerParams,
    pub horizon_ns: u64,
}

impl LinkScenario {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let horizon_ns = 1_000_000;
        let n = rng.random_range(0..60);
        let burst = rng.random_bool(0.5);
        let mut packets: Vec<TracePacket> = (0..n)
            .map(|_| {
                let t = if burst { rng.random_range(0..8) * 100_000 + rng.random_range(0..2_000) } else { rng.random_range(0..horizon_ns - 50_000) };
                TracePacket { t, size: rng.random_range(64..=1500) }
            })
            .collect();
        packets.sort_by_key(|p| p.t);
        let policy = match rng.random_range(0..10) {
            0 => PolicyConfig::AlwaysOn,
            1 => PolicyConfig::FixedPdt { pdt: Pdt::Never },
            2 => PolicyConfig::FixedPdt { pdt: Pdt::Finite(0) },
            3..=6 => PolicyConfig::FixedPdt { pdt: Pdt::Finite(rng.random_range(1..20_000)) },
            _ => PolicyConfig::FixedPdt { pdt: Pdt::Finite(rng.random_range(1..200_000)) },
        };
        let power = PowerParams {
            ts_ns: rng.random_range(1..5_000),
            tw_ns: rng.random_range(1..8_000),
            abortable_sleep: rng.random_bool(0.3),
            ..PowerParams::default()
        };
        Self { packets, policy, power, horizon_ns }
    }

    pub fn pdt(&self) -> Option<u64> {
        match self.policy {
            PolicyConfig::FixedPdt { pdt: Pdt::Finite(p) } => Some(p),
            _ => None,
        }
    }

    /// Two endpoints on one switch; every packet goes from 0 to 1.
    pub fn config(&self, dir: &tempfile::TempDir) -> RunConfig {
        let path = dir.path().join("trace.txt");
        let mut f = std::fs::File::create(&path).unwrap();
        for p in &self.packets {
            writeln!(f, "{} 0 1 {}", p.t, p.size).unwrap();
        }
        RunConfig {
            horizon_ns: self.horizon_ns,
            topology: TopologyConfig { kind: TopologyKind::SingleSwitch, endpoints: 2, ..Default::default() },
            fabric: FabricConfig {
                vcs: 1,
                buffer_bytes: 1 << 20,
                xoff_bytes: 900_000,
                xon_bytes: 800_000,
                ..Default::default()
            },
            power: self.power,
            policy: self.policy,
            workload: WorkloadSpec { kind: WorkloadKind::Trace, trace: Some(path), ..Default::default() },
            ..Default::default()
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Compares the engine against the reference on every channel of a
/// two-endpoint scenario; returns a description of the first mismatch.
pub fn check_link_scenario(sc: &LinkScenario) -> Result<(), String> {
    use lpinet::network::{simulate, SimOptions};

    let dir = tempfile::tempdir().unwrap();
    let cfg = sc.config(&dir);
    let out = simulate(&cfg, SimOptions { record_timelines: true, record_events: false }).map_err(|e| e.to_string())?;
    let timelines = out.timelines.as_ref().unwrap();
    let transmissions = out.transmissions.as_ref().unwrap();

    let uplink = reference_link(&sc.packets, sc.pdt(), &sc.power, sc.horizon_ns);
    let downlink = reference_link(&downstream_arrivals(&uplink.tx), sc.pdt(), &sc.power, sc.horizon_ns);
    let silent = reference_link(&[], sc.pdt(), &sc.power, sc.horizon_ns);

    for (c, info) in out.channels.iter().enumerate() {
        let expected = match (info.from.node, info.to.node) {
            (0, _) => &uplink,
            (_, 1) => &downlink,
            _ => &silent,
        };
        let got_timeline: Vec<(u64, PowerState)> = timelines[c].iter().map(|&(t, s)| (t.ns(), s)).collect();
        if got_timeline != expected.timeline {
            return Err(format!("channel {c} timeline\n engine:    {got_timeline:?}\n reference: {:?}", expected.timeline));
        }
        let got_tx: Vec<u64> = transmissions[c].iter().map(|r| r.start.ns()).collect();
        let want_tx: Vec<u64> = expected.tx.iter().map(|&(t, _)| t).collect();
        if got_tx != want_tx {
            return Err(format!("channel {c} transmissions\n engine:    {got_tx:?}\n reference: {want_tx:?}"));
        }
        if out.ledger.per_direction[c].0 != expected.durations {
            return Err(format!(
                "channel {c} durations engine {:?} reference {:?}",
                out.ledger.per_direction[c].0, expected.durations
            ));
        }
    }
    Ok(())
}

/// Single switch, always on, traffic from `(t, src, dst, size)` records.
pub fn trace_config(dir: &tempfile::TempDir, endpoints: usize, records: &[(u64, usize, usize, u32)]) -> RunConfig {
    let path = dir.path().join("trace.txt");
    let mut f = std::fs::File::create(&path).unwrap();
    for (t, s, d, size) in records {
        writeln!(f, "{t} {s} {d} {size}").unwrap();
    }
    RunConfig {
        horizon_ns: 20_000_000,
        topology: TopologyConfig { kind: TopologyKind::SingleSwitch, endpoints, ..Default::default() },
        workload: WorkloadSpec { kind: WorkloadKind::Trace, trace: Some(path), ..Default::default() },
        ..Default::default()
    }
}

/// Checks conservation, per-flow ordering and serialized transmissions.
pub fn check_fabric_invariants(out: &lpinet::network::RunOutcome, rate_bps: u64) -> Result<(), String> {
    use std::collections::HashMap;

    let delivered = out.delivered();
    if delivered != out.packets.len() {
        return Err(format!("{} of {} packets delivered", delivered, out.packets.len()));
    }
    let mut last: HashMap<(usize, usize, u8), (u32, u64)> = HashMap::new();
    let mut packets: Vec<_> = out.packets.iter().collect();
    packets.sort_by_key(|p| p.id);
    for p in packets {
        let t = p.t_deliver.unwrap().ns();
        if let Some(&(prev, prev_t)) = last.get(&(p.src, p.dst, p.vc)) {
            if t <= prev_t {
                return Err(format!("packet {} delivered at {t}, before packet {prev} at {prev_t}", p.id));
            }
        }
        last.insert((p.src, p.dst, p.vc), (p.id, t));
    }
    let size: HashMap<u32, u32> = out.packets.iter().map(|p| (p.id, p.size)).collect();
    for (c, txs) in out.transmissions.as_ref().unwrap().iter().enumerate() {
        for w in txs.windows(2) {
            let end = w[0].start.ns() + serialization_ns(size[&w[0].packet], rate_bps);
            if w[1].start.ns() < end {
                return Err(format!("channel {c}: transmission at {} overlaps one ending at {end}", w[1].start.ns()));
            }
        }
    }
    Ok(())
}
