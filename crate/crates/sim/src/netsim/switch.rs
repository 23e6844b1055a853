//! Store-and-forward Ethernet switch with one drop-tail FIFO per egress port.

use std::collections::{BTreeMap, VecDeque};

use fade_core::{Frame, MacAddr, Nanos};

use super::link::Link;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchParams {
    /// Frames an egress port can hold, counting the one being transmitted.
    pub egress_queue_frames: usize,
    pub forwarding: BTreeMap<MacAddr, usize>,
}

/// A frame waiting for a transmitter, with the time it entered the queue.
#[derive(Debug, Clone)]
pub struct Queued {
    pub frame: Frame,
    pub since: Nanos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Enqueue {
    /// The port was idle; the caller should start transmitting this frame.
    StartNow,
    Queued,
    Dropped,
}

/// Transmitter with a FIFO in front of it. `capacity` of `None` is unbounded.
#[derive(Debug)]
pub struct EgressPort {
    pub link: Link,
    queue: VecDeque<Queued>,
    capacity: Option<usize>,
    pub drops: u64,
    pub max_depth: usize,
}

impl EgressPort {
    pub fn new(link: Link, capacity: Option<usize>) -> Self {
        EgressPort { link, queue: VecDeque::new(), capacity, drops: 0, max_depth: 0 }
    }

    pub fn depth(&self) -> usize {
        self.queue.len()
    }

    pub fn offer(&mut self, item: Queued) -> Enqueue {
        if self.capacity.is_some_and(|cap| self.queue.len() >= cap) {
            self.drops += 1;
            return Enqueue::Dropped;
        }
        self.queue.push_back(item);
        self.max_depth = self.max_depth.max(self.queue.len());
        if self.queue.len() == 1 {
            Enqueue::StartNow
        } else {
            Enqueue::Queued
        }
    }

    /// The frame currently being transmitted.
    pub fn front(&self) -> Option<&Queued> {
        self.queue.front()
    }

    /// Finishes the frame in service; returns whether another is waiting.
    pub fn complete(&mut self) -> bool {
        self.queue.pop_front();
        !self.queue.is_empty()
    }
}

#[derive(Debug)]
pub struct Switch {
    pub ports: Vec<EgressPort>,
    forwarding: BTreeMap<MacAddr, usize>,
    pub unknown_dst: u64,
}

impl Switch {
    pub fn new(params: &SwitchParams, links: Vec<Link>) -> Self {
        assert!(params.egress_queue_frames >= 1, "egress queue needs room for one frame");
        let ports = links.into_iter().map(|l| EgressPort::new(l, Some(params.egress_queue_frames))).collect();
        Switch { ports, forwarding: params.forwarding.clone(), unknown_dst: 0 }
    }

    pub fn port_for(&self, dst: MacAddr) -> Option<usize> {
        self.forwarding.get(&dst).copied()
    }

    /// Takes a fully received frame and places it on its egress queue.
    /// Returns the egress port and the queueing outcome, or `None` when the
    /// destination is unknown.
    pub fn forward(&mut self, frame: Frame, now: Nanos) -> Option<(usize, Enqueue)> {
        let Some(port) = self.port_for(frame.dst) else {
            self.unknown_dst += 1;
            return None;
        };
        Some((port, self.ports[port].offer(Queued { frame, since: now })))
    }

    pub fn drops(&self) -> u64 {
        self.ports.iter().map(|p| p.drops).sum()
    }
}
