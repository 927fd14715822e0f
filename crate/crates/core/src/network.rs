//! Event-driven simulation of a lossless, store-and-forward fabric whose
//! link directions sleep and wake under a power policy.
//!
//! Each link has two channels (`2 * link` carries `a -> b`, `2 * link + 1`
//! carries `b -> a`). A channel owns a transmitter, a power state machine and
//! per-VC pause flags set by the buffer it feeds.

use std::collections::VecDeque;

use thiserror::Error;

use crate::config::RunConfig;
use crate::fabric::{
    serialization_ns, BufferedPacket, FabricError, FlowClass, Packet, PacketId, PauseAction,
    RoundRobin, VcBuffer, MIN_PACKET_BYTES,
};
use crate::power::{
    perfbound_compute_pdt, BudgetReference, EnergyLedger, IdleGapHistogram, LinkPower, Pdt,
    PerfBoundConfig, PolicyConfig, PowerError, PowerState, WakeOutcome,
};
use crate::sim::{EventHandle, EventQueue, ScheduleError, SimTime};
use crate::sqs::{map_vc, SqsError};
use crate::topology::{LinkParams, PortRef, RoutingTable, Topology, TopologyError};
use crate::workload::{
    endpoint_traffic, load_trace, trace_traffic, EndpointTraffic, Message, TraceError, WorkloadKind,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("lossless violation at {time}: switch {node} port {port} VC {vc}: {source}")]
    LosslessViolation { time: SimTime, node: usize, port: usize, vc: usize, source: FabricError },
    #[error("protocol violation at {time} on channel {channel}: {what}")]
    Protocol { time: SimTime, channel: usize, what: &'static str },
    #[error("fabric stalled at {time} with packets still in flight")]
    Stalled { time: SimTime },
    #[error(transparent)]
    Power(#[from] PowerError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Sqs(#[from] SqsError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    PhaseStart { endpoint: u32 },
    Inject { endpoint: u32, index: u32 },
    HeadArrival { channel: u32, packet: PacketId },
    TailArrival { channel: u32, packet: PacketId },
    TxComplete { channel: u32 },
    Pause { channel: u32, vc: u8, action: PauseAction },
    IdleTimer { channel: u32 },
    SleepComplete { channel: u32 },
    WakeComplete { channel: u32 },
    Epoch,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimOptions {
    /// Keep every power transition and transmission start per channel.
    pub record_timelines: bool,
    /// Keep the full processed-event sequence.
    pub record_events: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxRecord {
    pub start: SimTime,
    pub packet: PacketId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelInfo {
    pub from: PortRef,
    pub to: PortRef,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub horizon: SimTime,
    pub packets: Vec<Packet>,
    pub channels: Vec<ChannelInfo>,
    pub ledger: EnergyLedger,
    pub timelines: Option<Vec<Vec<(SimTime, PowerState)>>>,
    pub transmissions: Option<Vec<Vec<TxRecord>>>,
    pub events: Option<Vec<(SimTime, Event)>>,
    /// Pause frames sent, per VC.
    pub pause_events: Vec<u64>,
    pub wake_delay_ns: u64,
    pub wakes: u64,
    pub peak_occupancy: u32,
    pub messages: usize,
    /// Final PDT of every channel (PerfBound only changes it).
    pub final_pdt: Vec<Pdt>,
}

impl RunOutcome {
    pub fn delivered(&self) -> usize {
        self.packets.iter().filter(|p| p.t_deliver.is_some()).count()
    }
}

struct Channel {
    info: ChannelInfo,
    params: LinkParams,
    busy: bool,
    arbiter: RoundRobin,
    paused: Vec<bool>,
    power: LinkPower,
    pdt: Pdt,
    timer: Option<EventHandle>,
    sleep: Option<EventHandle>,
    idle_since: Option<SimTime>,
    hist: Option<IdleGapHistogram>,
    tx_log: Option<Vec<TxRecord>>,
}

struct EndpointState {
    traffic: EndpointTraffic,
    next_phase: usize,
    outstanding: usize,
}

enum Source {
    Nic(usize),
    Switch { node: usize, out_port: usize, in_ports: usize },
}

pub struct Network<'a> {
    cfg: &'a RunConfig,
    topo: Topology,
    routes: RoutingTable,
    vcs: usize,
    queue: EventQueue<Event>,
    channels: Vec<Channel>,
    out_channel: Vec<Vec<usize>>,
    in_channel: Vec<Vec<usize>>,
    /// `inputs[node][port][vc]`; empty for endpoints.
    inputs: Vec<Vec<Vec<VcBuffer>>>,
    /// Unbounded per-VC injection queues at each endpoint.
    nics: Vec<Vec<VecDeque<PacketId>>>,
    packets: Vec<Packet>,
    endpoints: Vec<EndpointState>,
    perfbound: Option<PerfBoundConfig>,
    pause_events: Vec<u64>,
    events: Option<Vec<(SimTime, Event)>>,
    messages: usize,
}

fn ch(c: usize) -> u32 {
    c as u32
}

impl<'a> Network<'a> {
    pub fn new(cfg: &'a RunConfig, opts: SimOptions) -> Result<Self, SimError> {
        let link = cfg.link.params();
        let topo = cfg.topology.build(link)?;
        let routes = RoutingTable::build(&topo);
        let n = topo.endpoint_count();
        let vcs = cfg.fabric.vcs;

        let traffic: Vec<EndpointTraffic> = match cfg.workload.kind {
            WorkloadKind::Trace => {
                let path = cfg.workload.trace.as_deref().expect("validated trace path");
                trace_traffic(&load_trace(path, n)?, n)
            }
            _ => (0..n)
                .map(|e| endpoint_traffic(&cfg.workload, e, n, cfg.seed, link.rate_bps))
                .collect(),
        };

        let perfbound = match &cfg.policy {
            PolicyConfig::Perfbound(pb) => Some(*pb),
            _ => None,
        };
        let pdt = cfg.policy.initial_pdt();

        let mut out_channel: Vec<Vec<usize>> = topo.nodes.iter().map(|n| vec![0; n.radix]).collect();
        let mut in_channel = out_channel.clone();
        let mut channels = Vec::with_capacity(2 * topo.links.len());
        for l in &topo.links {
            for (c, (from, to)) in [(l.a, l.b), (l.b, l.a)].into_iter().enumerate() {
                let id = 2 * l.id + c;
                out_channel[from.node][from.port] = id;
                in_channel[to.node][to.port] = id;
                channels.push(Channel {
                    info: ChannelInfo { from, to },
                    params: l.params,
                    busy: false,
                    arbiter: RoundRobin::new(),
                    paused: vec![false; vcs],
                    power: LinkPower::new(opts.record_timelines),
                    pdt,
                    timer: None,
                    sleep: None,
                    idle_since: Some(SimTime::ZERO),
                    hist: perfbound.map(|_| IdleGapHistogram::default()),
                    tx_log: opts.record_timelines.then(Vec::new),
                });
            }
        }

        let f = &cfg.fabric;
        let inputs = topo
            .nodes
            .iter()
            .map(|node| {
                if topo.is_endpoint(node.id) {
                    Vec::new()
                } else {
                    (0..node.radix)
                        .map(|_| (0..vcs).map(|_| VcBuffer::new(f.buffer_bytes, f.xoff_bytes, f.xon_bytes)).collect())
                        .collect()
                }
            })
            .collect();

        let messages = traffic.iter().map(EndpointTraffic::message_count).sum();
        let mut net = Network {
            cfg,
            routes,
            vcs,
            queue: EventQueue::new(),
            channels,
            out_channel,
            in_channel,
            inputs,
            nics: vec![vec![VecDeque::new(); vcs]; n],
            packets: Vec::new(),
            endpoints: traffic
                .into_iter()
                .map(|traffic| EndpointState { traffic, next_phase: 0, outstanding: 0 })
                .collect(),
            perfbound,
            pause_events: vec![0; vcs],
            events: opts.record_events.then(Vec::new),
            messages,
            topo,
        };
        net.schedule_initial()?;
        Ok(net)
    }

    fn schedule_initial(&mut self) -> Result<(), SimError> {
        for e in 0..self.endpoints.len() {
            match &self.endpoints[e].traffic {
                EndpointTraffic::Phased(phases) => {
                    if let Some(first) = phases.first() {
                        self.queue.schedule(SimTime(first.compute_ns), Event::PhaseStart { endpoint: e as u32 })?;
                    }
                }
                EndpointTraffic::OpenLoop(inj) => {
                    let times: Vec<SimTime> = inj.iter().map(|i| i.time).collect();
                    for (index, t) in times.into_iter().enumerate() {
                        self.queue.schedule(t, Event::Inject { endpoint: e as u32, index: index as u32 })?;
                    }
                }
            }
        }
        for c in 0..self.channels.len() {
            self.arm_timer(c, SimTime::ZERO)?;
        }
        if let Some(pb) = self.perfbound {
            self.queue.schedule(SimTime(pb.epoch_ns), Event::Epoch)?;
        }
        Ok(())
    }

    pub fn run(mut self) -> Result<RunOutcome, SimError> {
        let horizon = SimTime(self.cfg.horizon_ns);
        while let Some(s) = self.queue.pop_until(horizon) {
            if let Some(log) = &mut self.events {
                log.push((s.time, s.event));
            }
            self.dispatch(s.time, s.event)?;
        }
        if self.queue.is_empty() && self.packets.iter().any(|p| p.t_deliver.is_none()) {
            return Err(SimError::Stalled { time: self.queue.now() });
        }
        let per_direction = self.channels.iter().map(|c| c.power.close(horizon)).collect();
        let peak_occupancy = self
            .inputs
            .iter()
            .flatten()
            .flatten()
            .map(VcBuffer::peak)
            .max()
            .unwrap_or(0);
        let record = self.channels.first().is_some_and(|c| c.tx_log.is_some());
        Ok(RunOutcome {
            horizon,
            channels: self.channels.iter().map(|c| c.info).collect(),
            ledger: EnergyLedger { per_direction },
            timelines: record.then(|| {
                self.channels.iter().map(|c| c.power.timeline().unwrap_or_default().to_vec()).collect()
            }),
            transmissions: record
                .then(|| self.channels.iter_mut().map(|c| c.tx_log.take().unwrap_or_default()).collect()),
            events: self.events,
            pause_events: self.pause_events,
            wake_delay_ns: self.channels.iter().map(|c| c.power.wake_delay_ns()).sum(),
            wakes: self.channels.iter().map(|c| c.power.wakes()).sum(),
            peak_occupancy,
            messages: self.messages,
            final_pdt: self.channels.iter().map(|c| c.pdt).collect(),
            packets: self.packets,
        })
    }

    fn dispatch(&mut self, t: SimTime, event: Event) -> Result<(), SimError> {
        match event {
            Event::PhaseStart { endpoint } => self.phase_start(endpoint as usize, t),
            Event::Inject { endpoint, index } => {
                let e = endpoint as usize;
                let EndpointTraffic::OpenLoop(inj) = &self.endpoints[e].traffic else {
                    unreachable!("inject event for a phased endpoint")
                };
                let message = inj[index as usize].message;
                self.inject(e, message, t)?;
                self.try_output(self.out_channel[e][0], t)
            }
            Event::HeadArrival { channel, packet } => self.head_arrival(channel as usize, packet, t),
            Event::TailArrival { channel, packet } => self.tail_arrival(channel as usize, packet, t),
            Event::TxComplete { channel } => {
                let c = channel as usize;
                self.channels[c].busy = false;
                self.try_output(c, t)?;
                self.went_idle(c, t)
            }
            Event::Pause { channel, vc, action } => {
                let c = channel as usize;
                self.channels[c].paused[vc as usize] = action == PauseAction::Pause;
                if action == PauseAction::Resume {
                    self.try_output(c, t)?;
                    self.went_idle(c, t)?;
                }
                Ok(())
            }
            Event::IdleTimer { channel } => {
                let c = channel as usize;
                self.channels[c].timer = None;
                let chan = &self.channels[c];
                if chan.power.state() == PowerState::Active && !chan.busy && !self.has_demand(c) {
                    let done = self.channels[c].power.begin_sleep(t, &self.cfg.power)?;
                    let h = self.queue.schedule(done, Event::SleepComplete { channel })?;
                    self.channels[c].sleep = Some(h);
                }
                Ok(())
            }
            Event::SleepComplete { channel } => {
                let c = channel as usize;
                self.channels[c].sleep = None;
                if let Some(ready) = self.channels[c].power.complete_sleep(t, &self.cfg.power)? {
                    self.queue.schedule(ready, Event::WakeComplete { channel })?;
                }
                Ok(())
            }
            Event::WakeComplete { channel } => {
                let c = channel as usize;
                self.channels[c].power.complete_wake(t)?;
                self.try_output(c, t)?;
                self.went_idle(c, t)
            }
            Event::Epoch => self.epoch(t),
        }
    }

    fn phase_start(&mut self, e: usize, t: SimTime) -> Result<(), SimError> {
        let EndpointTraffic::Phased(phases) = &self.endpoints[e].traffic else {
            unreachable!("phase event for an open-loop endpoint")
        };
        let burst: Vec<Message> = phases[self.endpoints[e].next_phase].burst.clone();
        self.endpoints[e].next_phase += 1;
        if burst.is_empty() {
            return self.next_phase(e, t);
        }
        for m in burst {
            self.inject(e, m, t)?;
        }
        self.try_output(self.out_channel[e][0], t)
    }

    fn next_phase(&mut self, e: usize, t: SimTime) -> Result<(), SimError> {
        let st = &self.endpoints[e];
        if let EndpointTraffic::Phased(phases) = &st.traffic {
            if let Some(p) = phases.get(st.next_phase) {
                self.queue.schedule(t + p.compute_ns, Event::PhaseStart { endpoint: e as u32 })?;
            }
        }
        Ok(())
    }

    /// Segments a message into MTU-sized packets on the endpoint's NIC queue.
    fn inject(&mut self, src: usize, m: Message, t: SimTime) -> Result<(), SimError> {
        let n = self.topo.endpoint_count();
        let vc = map_vc(self.cfg.sqs, src, m.dst, n, self.vcs)?;
        let mtu = self.cfg.fabric.mtu;
        let mut remaining = m.size.max(1);
        while remaining > 0 {
            let chunk = remaining.min(mtu);
            remaining -= chunk;
            let id = self.packets.len() as PacketId;
            self.packets.push(Packet {
                id,
                src,
                dst: m.dst,
                size: chunk.max(MIN_PACKET_BYTES),
                vc: vc as u8,
                class: m.class,
                t_inject: t,
                t_deliver: None,
            });
            self.nics[src][vc].push_back(id);
            self.endpoints[src].outstanding += 1;
        }
        Ok(())
    }

    fn source(&self, c: usize) -> Source {
        let from = self.channels[c].info.from;
        if self.topo.is_endpoint(from.node) {
            Source::Nic(from.node)
        } else {
            Source::Switch { node: from.node, out_port: from.port, in_ports: self.topo.nodes[from.node].radix }
        }
    }

    fn candidates(&self, c: usize) -> usize {
        match self.source(c) {
            Source::Nic(_) => self.vcs,
            Source::Switch { in_ports, .. } => in_ports * self.vcs,
        }
    }

    /// Candidate `i` is (input port `i / vcs`, VC `i % vcs`).
    fn eligible(&self, c: usize, i: usize) -> bool {
        let vc = i % self.vcs;
        if self.channels[c].paused[vc] {
            return false;
        }
        match self.source(c) {
            Source::Nic(e) => !self.nics[e][vc].is_empty(),
            Source::Switch { node, out_port, .. } => self.inputs[node][i / self.vcs][vc]
                .head()
                .is_some_and(|h| h.ready && usize::from(h.out_port) == out_port),
        }
    }

    fn has_demand(&self, c: usize) -> bool {
        (0..self.candidates(c)).any(|i| self.eligible(c, i))
    }

    fn try_output(&mut self, c: usize, t: SimTime) -> Result<(), SimError> {
        if self.channels[c].busy || !self.has_demand(c) {
            return Ok(());
        }
        match self.channels[c].power.state() {
            PowerState::Active => {
                if let Some(h) = self.channels[c].timer.take() {
                    self.queue.cancel(h);
                }
                self.end_idle(c, t);
                let n = self.candidates(c);
                let mut arbiter = std::mem::take(&mut self.channels[c].arbiter);
                let winner = arbiter.pick(n, |i| self.eligible(c, i));
                self.channels[c].arbiter = arbiter;
                let i = winner.expect("demand implies an eligible candidate");
                self.transmit(c, i / self.vcs, i % self.vcs, t)
            }
            PowerState::Lpi | PowerState::ToSleep => {
                self.end_idle(c, t);
                match self.channels[c].power.request_wake(t, &self.cfg.power)? {
                    WakeOutcome::Started { ready_at } => {
                        if let Some(h) = self.channels[c].sleep.take() {
                            self.queue.cancel(h);
                        }
                        self.queue.schedule(ready_at, Event::WakeComplete { channel: ch(c) })?;
                    }
                    WakeOutcome::Deferred | WakeOutcome::Pending | WakeOutcome::AlreadyActive => {}
                }
                Ok(())
            }
            PowerState::ToWake => Ok(()),
        }
    }

    fn end_idle(&mut self, c: usize, t: SimTime) {
        let chan = &mut self.channels[c];
        if let Some(since) = chan.idle_since.take() {
            if let Some(hist) = &mut chan.hist {
                let gap = t - since;
                if gap > 0 {
                    hist.record_gap(gap);
                }
            }
        }
    }

    /// Called after the transmitter may have become free; starts the idle
    /// period and arms the timer when nothing is left to send.
    fn went_idle(&mut self, c: usize, t: SimTime) -> Result<(), SimError> {
        let chan = &mut self.channels[c];
        if chan.busy || chan.power.state() != PowerState::Active || self.has_demand(c) {
            return Ok(());
        }
        let chan = &mut self.channels[c];
        if chan.idle_since.is_none() {
            chan.idle_since = Some(t);
        }
        self.arm_timer(c, t)
    }

    fn arm_timer(&mut self, c: usize, t: SimTime) -> Result<(), SimError> {
        if self.cfg.policy.is_always_on() {
            return Ok(());
        }
        let chan = &self.channels[c];
        if chan.timer.is_some() || chan.busy || chan.power.state() != PowerState::Active {
            return Ok(());
        }
        let Some(since) = chan.idle_since else { return Ok(()) };
        if let Some(deadline) = chan.pdt.deadline(since) {
            // Demand arriving at the very instant the timer expires wins.
            let h = self.queue.schedule_late(deadline.max(t), Event::IdleTimer { channel: ch(c) })?;
            self.channels[c].timer = Some(h);
        }
        Ok(())
    }

    fn transmit(&mut self, c: usize, port: usize, vc: usize, t: SimTime) -> Result<(), SimError> {
        if self.channels[c].power.state() != PowerState::Active {
            return Err(SimError::Protocol { time: t, channel: c, what: "transmit on a link that is not active" });
        }
        if self.channels[c].paused[vc] {
            return Err(SimError::Protocol { time: t, channel: c, what: "transmit on a paused VC" });
        }
        let mut exposed = None;
        let id = match self.source(c) {
            Source::Nic(e) => self.nics[e][vc].pop_front().expect("eligible NIC queue"),
            Source::Switch { node, .. } => {
                let buf = &mut self.inputs[node][port][vc];
                let (bp, action) = buf.on_packet_departure().expect("eligible input");
                // The new head may be waiting for a different output.
                exposed = buf.head().filter(|h| h.ready).map(|h| self.out_channel[node][usize::from(h.out_port)]);
                if let Some(action) = action {
                    self.send_pause(self.in_channel[node][port], vc, action, t)?;
                }
                bp.id
            }
        };
        let chan = &mut self.channels[c];
        let ser = serialization_ns(self.packets[id as usize].size, chan.params.rate_bps);
        let prop = chan.params.prop_delay_ns;
        chan.busy = true;
        if let Some(hist) = &mut chan.hist {
            hist.add_busy(ser);
        }
        if let Some(log) = &mut chan.tx_log {
            log.push(TxRecord { start: t, packet: id });
        }
        self.queue.schedule(t + ser, Event::TxComplete { channel: ch(c) })?;
        self.queue.schedule(t + prop, Event::HeadArrival { channel: ch(c), packet: id })?;
        self.queue.schedule(t + ser + prop, Event::TailArrival { channel: ch(c), packet: id })?;
        match exposed {
            Some(other) if other != c => self.try_output(other, t),
            _ => Ok(()),
        }
    }

    /// Sends a pause or resume for `vc` to the transmitter of channel `upstream`.
    fn send_pause(&mut self, upstream: usize, vc: usize, action: PauseAction, t: SimTime) -> Result<(), SimError> {
        if action == PauseAction::Pause {
            self.pause_events[vc] += 1;
        }
        let delay = self.channels[upstream].params.prop_delay_ns;
        self.queue.schedule(t + delay, Event::Pause { channel: ch(upstream), vc: vc as u8, action })?;
        Ok(())
    }

    fn head_arrival(&mut self, c: usize, id: PacketId, t: SimTime) -> Result<(), SimError> {
        let to = self.channels[c].info.to;
        if self.topo.is_endpoint(to.node) {
            return Ok(());
        }
        let pkt = &self.packets[id as usize];
        let (vc, dst, size) = (pkt.vc as usize, pkt.dst, pkt.size);
        let out_port = self.routes.route_next_hop(to.node, dst)?;
        let bp = BufferedPacket { id, size, out_port: out_port as u16, ready: false };
        let action = self.inputs[to.node][to.port][vc]
            .on_packet_head_arrival(bp)
            .map_err(|source| SimError::LosslessViolation { time: t, node: to.node, port: to.port, vc, source })?;
        if let Some(action) = action {
            self.send_pause(c, vc, action, t)?;
        }
        Ok(())
    }

    fn tail_arrival(&mut self, c: usize, id: PacketId, t: SimTime) -> Result<(), SimError> {
        let to = self.channels[c].info.to;
        if self.topo.is_endpoint(to.node) {
            return self.deliver(id, to.node, t);
        }
        let vc = self.packets[id as usize].vc as usize;
        let buf = &mut self.inputs[to.node][to.port][vc];
        let marked = buf.mark_ready(id);
        debug_assert!(marked);
        if let Some(head) = buf.head().copied() {
            if head.ready {
                self.try_output(self.out_channel[to.node][usize::from(head.out_port)], t)?;
            }
        }
        Ok(())
    }

    fn deliver(&mut self, id: PacketId, at_node: usize, t: SimTime) -> Result<(), SimError> {
        let pkt = &mut self.packets[id as usize];
        if pkt.dst != at_node || pkt.t_deliver.is_some() {
            return Err(SimError::Protocol { time: t, channel: usize::MAX, what: "misdelivered packet" });
        }
        pkt.t_deliver = Some(t);
        let src = pkt.src;
        let st = &mut self.endpoints[src];
        st.outstanding -= 1;
        if st.outstanding == 0 && matches!(st.traffic, EndpointTraffic::Phased(_)) {
            self.next_phase(src, t)?;
        }
        Ok(())
    }

    fn epoch(&mut self, t: SimTime) -> Result<(), SimError> {
        let pb = self.perfbound.expect("epochs only run under PerfBound");
        let tw = self.cfg.power.tw_ns;
        for c in 0..self.channels.len() {
            let chan = &mut self.channels[c];
            let hist = chan.hist.as_mut().expect("PerfBound histogram");
            hist.add_wall(pb.epoch_ns);
            let reference = match pb.budget {
                BudgetReference::WallTime => hist.wall_ns(),
                BudgetReference::BusyTime => hist.busy_ns(),
            };
            let pdt = perfbound_compute_pdt(hist, pb.alpha, tw, reference, pb.fallback_pdt);
            hist.apply_strategy(pb.strategy);
            if pdt != chan.pdt {
                chan.pdt = pdt;
                if let Some(h) = chan.timer.take() {
                    self.queue.cancel(h);
                }
                self.arm_timer(c, t)?;
            }
        }
        let next = t + pb.epoch_ns;
        if next.ns() <= self.cfg.horizon_ns {
            self.queue.schedule(next, Event::Epoch)?;
        }
        Ok(())
    }
}

/// Runs one configuration to its horizon.
pub fn simulate(cfg: &RunConfig, opts: SimOptions) -> Result<RunOutcome, SimError> {
    Network::new(cfg, opts)?.run()
}

/// Share of packets of `class` in `packets`.
pub fn class_count(packets: &[Packet], class: FlowClass) -> usize {
    packets.iter().filter(|p| p.class == class).count()
}
