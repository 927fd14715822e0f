//! Discrete-event kernel: integer-nanosecond clock, a `(time, sequence)` ordered
//! event queue with cancellation, and seeded per-entity random streams.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::ops::{Add, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Simulated time in nanoseconds since the start of the run.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn ns(self) -> u64 {
        self.0
    }
}

impl Add<u64> for SimTime {
    type Output = SimTime;

    fn add(self, rhs: u64) -> SimTime {
        SimTime(self.0.saturating_add(rhs))
    }
}

impl Sub for SimTime {
    type Output = u64;

    fn sub(self, rhs: SimTime) -> u64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ns", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("event scheduled at {at} but the clock is already at {now}")]
    InPast { at: SimTime, now: SimTime },
}

/// Opaque handle returned by [`EventQueue::schedule`], used for cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

/// An event popped from the queue.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheduled<E> {
    pub time: SimTime,
    pub seq: u64,
    pub event: E,
}

struct Entry<E> {
    time: SimTime,
    late: bool,
    seq: u64,
    event: E,
}

impl<E> Entry<E> {
    fn key(&self) -> (SimTime, bool, u64) {
        (self.time, self.late, self.seq)
    }
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // Reversed so the max-heap yields the smallest key first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key().cmp(&self.key())
    }
}

/// Priority queue of future events, totally ordered by `(time, sequence)`.
/// Events scheduled with [`EventQueue::schedule_late`] run after every
/// ordinary event of the same instant.
pub struct EventQueue<E> {
    now: SimTime,
    next_seq: u64,
    heap: BinaryHeap<Entry<E>>,
    cancelled: HashSet<u64>,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        Self {
            now: SimTime::ZERO,
            next_seq: 0,
            heap: BinaryHeap::new(),
            cancelled: HashSet::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Number of scheduled entries, including cancelled ones not yet discarded.
    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.len() == self.cancelled.len()
    }

    pub fn schedule(&mut self, time: SimTime, event: E) -> Result<EventHandle, ScheduleError> {
        self.push(time, false, event)
    }

    pub fn schedule_late(&mut self, time: SimTime, event: E) -> Result<EventHandle, ScheduleError> {
        self.push(time, true, event)
    }

    fn push(&mut self, time: SimTime, late: bool, event: E) -> Result<EventHandle, ScheduleError> {
        if time < self.now {
            return Err(ScheduleError::InPast { at: time, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry { time, late, seq, event });
        Ok(EventHandle(seq))
    }

    /// Cancels a pending event. Cancelling an event that already fired is a
    /// caller bug and leaves a stale tombstone behind.
    pub fn cancel(&mut self, handle: EventHandle) {
        self.cancelled.insert(handle.0);
    }

    fn discard_cancelled(&mut self) {
        while let Some(top) = self.heap.peek() {
            if self.cancelled.remove(&top.seq) {
                self.heap.pop();
            } else {
                break;
            }
        }
    }

    pub fn peek_time(&mut self) -> Option<SimTime> {
        self.discard_cancelled();
        self.heap.peek().map(|e| e.time)
    }

    /// Pops the next event with `time <= limit`, advancing the clock to it.
    pub fn pop_until(&mut self, limit: SimTime) -> Option<Scheduled<E>> {
        self.discard_cancelled();
        if self.heap.peek()?.time > limit {
            return None;
        }
        let Entry { time, seq, event, .. } = self.heap.pop()?;
        self.now = time;
        Some(Scheduled { time, seq, event })
    }

    pub fn pop(&mut self) -> Option<Scheduled<E>> {
        self.pop_until(SimTime(u64::MAX))
    }

    /// Dispatches every event with `time <= limit` and returns the final clock.
    pub fn run_until<F>(&mut self, limit: SimTime, mut handler: F) -> SimTime
    where
        F: FnMut(&mut Self, Scheduled<E>),
    {
        while let Some(ev) = self.pop_until(limit) {
            handler(self, ev);
        }
        self.now
    }
}

/// Reproducible uniform stream keyed by `(global seed, entity id)`.
///
/// Each entity draws from its own ChaCha stream, so adding or removing
/// entities never perturbs the draws of the others.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, entity: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(entity);
        Self { rng }
    }

    /// Uniform value in `[0, 1)`.
    pub fn next_random(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: u64) -> u64 {
        self.rng.random_range(0..n)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drain(q: &mut EventQueue<&'static str>, limit: u64) -> Vec<(u64, &'static str)> {
        let mut out = Vec::new();
        q.run_until(SimTime(limit), |_, ev| out.push((ev.time.ns(), ev.event)));
        out
    }

    #[test]
    fn dispatches_in_time_order() {
        let mut q = EventQueue::new();
        q.schedule(SimTime(5), "five").unwrap();
        q.schedule(SimTime(3), "three").unwrap();
        assert_eq!(drain(&mut q, 100), vec![(3, "three"), (5, "five")]);
    }

    #[test]
    fn same_time_breaks_ties_by_sequence() {
        let mut q = EventQueue::new();
        q.schedule(SimTime(7), "first").unwrap();
        q.schedule(SimTime(7), "second").unwrap();
        assert_eq!(drain(&mut q, 100), vec![(7, "first"), (7, "second")]);
    }

    #[test]
    fn late_events_follow_same_instant_events() {
        let mut q = EventQueue::new();
        q.schedule_late(SimTime(7), "late").unwrap();
        q.schedule(SimTime(7), "ordinary").unwrap();
        q.schedule(SimTime(6), "earlier").unwrap();
        let mut seen = Vec::new();
        q.run_until(SimTime(100), |q, ev| {
            if ev.event == "ordinary" {
                q.schedule(SimTime(7), "follow-up").unwrap();
            }
            seen.push(ev.event);
        });
        assert_eq!(seen, vec!["earlier", "ordinary", "follow-up", "late"]);
    }

    #[test]
    fn cancelled_event_never_fires() {
        let mut q = EventQueue::new();
        let h = q.schedule(SimTime(2), "gone").unwrap();
        q.schedule(SimTime(4), "kept").unwrap();
        q.cancel(h);
        assert_eq!(drain(&mut q, 100), vec![(4, "kept")]);
        assert!(q.is_empty());
    }

    #[test]
    fn scheduling_in_the_past_is_rejected() {
        let mut q = EventQueue::new();
        q.schedule(SimTime(10), "a").unwrap();
        q.pop();
        assert_eq!(
            q.schedule(SimTime(9), "late"),
            Err(ScheduleError::InPast { at: SimTime(9), now: SimTime(10) })
        );
    }

    #[test]
    fn run_until_respects_limit() {
        let mut q: EventQueue<&str> = EventQueue::new();
        assert_eq!(q.run_until(SimTime(10), |_, _| {}), SimTime(0));

        q.schedule(SimTime(4), "in").unwrap();
        q.schedule(SimTime(12), "out").unwrap();
        let mut seen = Vec::new();
        let end = q.run_until(SimTime(10), |_, ev| seen.push(ev.event));
        assert_eq!(seen, vec!["in"]);
        assert!(end >= SimTime(4) && end <= SimTime(10));
        assert_eq!(q.peek_time(), Some(SimTime(12)));
    }

    #[test]
    fn handler_can_schedule_follow_ups() {
        let mut q = EventQueue::new();
        q.schedule(SimTime(1), 3u32).unwrap();
        let mut fired = Vec::new();
        q.run_until(SimTime(100), |q, ev| {
            fired.push(ev.time.ns());
            if ev.event > 0 {
                q.schedule(ev.time + 10, ev.event - 1).unwrap();
            }
        });
        assert_eq!(fired, vec![1, 11, 21, 31]);
    }

    #[test]
    fn random_streams_are_reproducible_and_keyed() {
        let a: Vec<f64> = (0..8).map({
            let mut s = RandomStream::new(42, 3);
            move |_| s.next_random()
        }).collect();
        let b: Vec<f64> = (0..8).map({
            let mut s = RandomStream::new(42, 3);
            move |_| s.next_random()
        }).collect();
        let c: Vec<f64> = (0..8).map({
            let mut s = RandomStream::new(42, 4);
            move |_| s.next_random()
        }).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|v| (0.0..1.0).contains(v)));
    }
}
