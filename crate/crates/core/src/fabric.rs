//! Port-level building blocks of the lossless fabric: packets, per-VC input
//! buffers with xoff/xon pause thresholds, and the round-robin arbiter.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::SimTime;

pub type PacketId = u32;

pub const MIN_PACKET_BYTES: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowClass {
    Hot,
    Cold,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub id: PacketId,
    pub src: usize,
    pub dst: usize,
    pub size: u32,
    pub vc: u8,
    pub class: FlowClass,
    pub t_inject: SimTime,
    pub t_deliver: Option<SimTime>,
}

impl Packet {
    pub fn latency(&self) -> Option<u64> {
        self.t_deliver.map(|d| d - self.t_inject)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PauseAction {
    Pause,
    Resume,
}

/// Control frame travelling upstream on the reverse direction of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PauseFrame {
    /// Channel (link direction) whose transmitter is being paused.
    pub channel: usize,
    pub vc: u8,
    pub action: PauseAction,
    pub t_sent: SimTime,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FabricError {
    #[error(
        "lossless violation: VC buffer would hold {would_hold} B with capacity {capacity} B"
    )]
    Overflow { capacity: u32, would_hold: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BufferedPacket {
    pub id: PacketId,
    pub size: u32,
    pub out_port: u16,
    /// Tail received; store-and-forward may send it on.
    pub ready: bool,
}

/// One VC's share of an input port.
#[derive(Debug, Clone)]
pub struct VcBuffer {
    capacity: u32,
    xoff: u32,
    xon: u32,
    occupancy: u32,
    paused: bool,
    fifo: VecDeque<BufferedPacket>,
    peak: u32,
}

impl VcBuffer {
    pub fn new(capacity: u32, xoff: u32, xon: u32) -> Self {
        debug_assert!(xon < xoff && xoff <= capacity);
        Self { capacity, xoff, xon, occupancy: 0, paused: false, fifo: VecDeque::new(), peak: 0 }
    }

    pub fn occupancy(&self) -> u32 {
        self.occupancy
    }

    pub fn peak(&self) -> u32 {
        self.peak
    }

    /// True while this buffer has told its upstream to pause.
    pub fn is_pausing(&self) -> bool {
        self.paused
    }

    pub fn len(&self) -> usize {
        self.fifo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fifo.is_empty()
    }

    pub fn head(&self) -> Option<&BufferedPacket> {
        self.fifo.front()
    }

    /// Accounts a packet whose head just arrived and reports whether the
    /// xoff threshold now requires pausing the upstream sender.
    pub fn on_packet_head_arrival(
        &mut self,
        packet: BufferedPacket,
    ) -> Result<Option<PauseAction>, FabricError> {
        let would_hold = self.occupancy + packet.size;
        if would_hold > self.capacity {
            return Err(FabricError::Overflow { capacity: self.capacity, would_hold });
        }
        self.occupancy = would_hold;
        self.peak = self.peak.max(would_hold);
        self.fifo.push_back(packet);
        if self.occupancy >= self.xoff && !self.paused {
            self.paused = true;
            return Ok(Some(PauseAction::Pause));
        }
        Ok(None)
    }

    /// Marks a buffered packet as fully received.
    pub fn mark_ready(&mut self, id: PacketId) -> bool {
        match self.fifo.iter_mut().rev().find(|p| p.id == id) {
            Some(p) => {
                p.ready = true;
                true
            }
            None => false,
        }
    }

    /// Removes the head packet and reports whether the upstream may resume.
    pub fn on_packet_departure(&mut self) -> Option<(BufferedPacket, Option<PauseAction>)> {
        let packet = self.fifo.pop_front()?;
        self.occupancy -= packet.size;
        if self.paused && self.occupancy <= self.xon {
            self.paused = false;
            return Some((packet, Some(PauseAction::Resume)));
        }
        Some((packet, None))
    }
}

/// Round-robin pointer over a fixed set of candidates.
#[derive(Debug, Clone, Default)]
pub struct RoundRobin {
    next: usize,
}

impl RoundRobin {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pointer(&self) -> usize {
        self.next
    }

    /// Picks the first eligible candidate at or after the pointer and moves
    /// the pointer just past the winner.
    pub fn pick(&mut self, candidates: usize, mut eligible: impl FnMut(usize) -> bool) -> Option<usize> {
        (0..candidates)
            .map(|i| (self.next + i) % candidates)
            .find(|&c| eligible(c))
            .inspect(|&winner| self.next = (winner + 1) % candidates)
    }
}

/// Serialization time in whole nanoseconds, rounded up.
pub fn serialization_ns(size_bytes: u32, rate_bps: u64) -> u64 {
    let bits = size_bytes as u128 * 8 * 1_000_000_000;
    bits.div_ceil(rate_bps as u128) as u64
}

/// Minimum gap between xoff and capacity that keeps a VC lossless: the
/// bytes that can still arrive during a pause round trip plus one packet
/// already being serialized.
pub fn pause_headroom_bytes(rate_bps: u64, prop_delay_ns: u64, mtu: u32) -> u64 {
    let max_ser = serialization_ns(mtu, rate_bps);
    let bits = rate_bps as u128 * (2 * prop_delay_ns + max_ser) as u128;
    bits.div_ceil(8 * 1_000_000_000) as u64
}
