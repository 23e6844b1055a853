//! Host-side receiver: the protocol handler and the per-board circular
//! buffers handed to the consuming application.
//!
//! Each started board owns a ring of `n` whole data sets. Because the ring
//! length is a multiple of the set length, every set occupies one contiguous
//! region and a packet `(set, pkt)` has a fixed place in it. Only the two
//! oldest incomplete sets can be in flight, so the handler keeps one bitmap
//! of received packets per active set and slides the pair forward when the
//! older one is complete.
//!
//! Positions are tracked as absolute byte counts; the ring offsets reported
//! to the consumer are those counts modulo the capacity.
//!
//! The protocol handler and the consumer API may run on different threads.
//! The slot table is behind a read/write lock and each slot behind its own
//! mutex, so the pointer pair is always observed consistently.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use parking_lot::{Condvar, Mutex, RwLock};
use thiserror::Error;

use crate::wire::{set_distance, Frame, FrameBody, MacAddr, SeqNum, N_PKTS, PAYLOAD_LEN, SET_LEN};

pub const DEFAULT_RING_SETS: usize = 4;
pub const MIN_RING_SETS: usize = 2;

const FULL_SET: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RxError {
    #[error("no slot for {0}")]
    NotFound(MacAddr),
    #[error("all {0} slots are in use")]
    CapacityFull(usize),
    #[error("{0} is already started")]
    AlreadyStarted(MacAddr),
    #[error("ring of {0} sets is too small (minimum {MIN_RING_SETS})")]
    RingTooSmall(usize),
    #[error("cannot consume {requested} bytes, only {available} available")]
    Range { requested: u64, available: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RxReply {
    Ack(SeqNum),
    Stop(MacAddr),
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RxAction {
    pub reply: RxReply,
    /// The payload was copied into the ring by this call.
    pub stored: bool,
    /// Bytes that became available to the consumer because of this frame.
    pub newly_available: u64,
}

impl RxAction {
    const NONE: RxAction = RxAction { reply: RxReply::None, stored: false, newly_available: 0 };

    fn reply(reply: RxReply) -> Self {
        RxAction { reply, ..Self::NONE }
    }

    /// The frame to send back to `peer`, if any.
    pub fn reply_frame(&self, host_mac: MacAddr, peer: MacAddr) -> Option<Frame> {
        match self.reply {
            RxReply::Ack(seq) => Some(Frame::ack(peer, host_mac, seq)),
            RxReply::Stop(target) => Some(Frame::stop(target, host_mac)),
            RxReply::None => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pointers {
    pub head: u64,
    pub tail: u64,
    pub available: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SlotCounters {
    pub stored: u64,
    pub duplicate_acks: u64,
    pub late_acks: u64,
    pub dropped_no_space: u64,
    pub stale_set: u64,
    pub bad_pkt_index: u64,
    pub consumed_bytes: u64,
}

#[derive(Debug)]
pub struct FebSlot {
    mac: MacAddr,
    started: bool,
    ring_sets: usize,
    ring: Box<[u8]>,
    /// Sets fully received since start; the low 16 bits are the expected set number.
    completed_sets: u64,
    bitmaps: [u32; 2],
    head: u64,
    tail: u64,
    wakeup_threshold: u64,
    counters: SlotCounters,
}

impl FebSlot {
    fn new(mac: MacAddr, ring_sets: usize) -> Self {
        FebSlot {
            mac,
            started: true,
            ring_sets,
            ring: vec![0u8; ring_sets * SET_LEN].into_boxed_slice(),
            completed_sets: 0,
            bitmaps: [0; 2],
            head: 0,
            tail: 0,
            wakeup_threshold: 0,
            counters: SlotCounters::default(),
        }
    }

    pub fn mac(&self) -> MacAddr {
        self.mac
    }

    pub fn is_started(&self) -> bool {
        self.started
    }

    pub fn expected_set(&self) -> u16 {
        self.completed_sets as u16
    }

    pub fn bitmaps(&self) -> [u32; 2] {
        self.bitmaps
    }

    pub fn capacity(&self) -> u64 {
        self.ring.len() as u64
    }

    pub fn counters(&self) -> SlotCounters {
        self.counters
    }

    /// The whole ring, consumed or not.
    pub fn ring(&self) -> &[u8] {
        &self.ring
    }

    /// Ring offset where the given active set (0 = expected, 1 = next) begins.
    pub fn set_base(&self, which: usize) -> u64 {
        ((self.completed_sets + which as u64) * SET_LEN as u64) % self.capacity()
    }

    pub fn pointers(&self) -> Pointers {
        let cap = self.capacity();
        Pointers { head: self.head % cap, tail: self.tail % cap, available: self.head - self.tail }
    }

    fn available(&self) -> u64 {
        self.head - self.tail
    }

    /// The unconsumed bytes as at most two slices (the second is non-empty
    /// when the region wraps around the end of the ring).
    pub fn available_slices(&self) -> (&[u8], &[u8]) {
        let cap = self.capacity();
        let start = (self.tail % cap) as usize;
        let len = self.available() as usize;
        let first = len.min(self.ring.len() - start);
        (&self.ring[start..start + first], &self.ring[..len - first])
    }

    fn handle_data(&mut self, seq: SeqNum, payload: &[u8; PAYLOAD_LEN]) -> RxAction {
        let pkt = usize::from(seq.pkt);
        if pkt >= N_PKTS {
            self.counters.bad_pkt_index += 1;
            return RxAction::NONE;
        }
        let d = set_distance(self.expected_set(), seq.set);
        if d == 0 || d == 1 {
            let which = d as usize;
            let bit = 1u32 << pkt;
            if self.bitmaps[which] & bit != 0 {
                self.counters.duplicate_acks += 1;
                return RxAction::reply(RxReply::Ack(seq));
            }
            let pos = (self.completed_sets + which as u64) * SET_LEN as u64 + (pkt * PAYLOAD_LEN) as u64;
            if pos + PAYLOAD_LEN as u64 > self.tail + self.capacity() {
                self.counters.dropped_no_space += 1;
                return RxAction::NONE;
            }
            let off = (pos % self.capacity()) as usize;
            self.ring[off..off + PAYLOAD_LEN].copy_from_slice(payload);
            self.bitmaps[which] |= bit;
            self.counters.stored += 1;
            let before = self.head;
            self.advance();
            return RxAction { reply: RxReply::Ack(seq), stored: true, newly_available: self.head - before };
        }
        let back = u64::from(d.unsigned_abs());
        if d < 0 && back < self.ring_sets as u64 && back <= self.completed_sets {
            self.counters.late_acks += 1;
            return RxAction::reply(RxReply::Ack(seq));
        }
        self.counters.stale_set += 1;
        RxAction::NONE
    }

    /// Moves `head` over contiguously received packets and slides the
    /// active-set window while the older set is complete.
    fn advance(&mut self) {
        loop {
            let base = self.completed_sets * SET_LEN as u64;
            let rel = (self.head - base) as usize;
            if rel < 2 * SET_LEN {
                let which = rel / SET_LEN;
                let pkt = (rel % SET_LEN) / PAYLOAD_LEN;
                if self.bitmaps[which] & (1 << pkt) != 0 {
                    self.head += PAYLOAD_LEN as u64;
                    continue;
                }
            }
            if self.bitmaps[0] == FULL_SET {
                self.bitmaps = [self.bitmaps[1], 0];
                self.completed_sets += 1;
                continue;
            }
            break;
        }
    }
}

struct SlotCell {
    state: Mutex<FebSlot>,
    ready: Condvar,
}

pub struct ReceiverCore {
    host_mac: MacAddr,
    max_slaves: usize,
    slots: RwLock<BTreeMap<MacAddr, Arc<SlotCell>>>,
    unregistered_source: AtomicU64,
    non_data: AtomicU64,
}

impl ReceiverCore {
    pub fn new(host_mac: MacAddr, max_slaves: usize) -> Self {
        ReceiverCore {
            host_mac,
            max_slaves,
            slots: RwLock::new(BTreeMap::new()),
            unregistered_source: AtomicU64::new(0),
            non_data: AtomicU64::new(0),
        }
    }

    pub fn host_mac(&self) -> MacAddr {
        self.host_mac
    }

    pub fn max_slaves(&self) -> usize {
        self.max_slaves
    }

    fn cell(&self, mac: MacAddr) -> Result<Arc<SlotCell>, RxError> {
        self.slots.read().get(&mac).cloned().ok_or(RxError::NotFound(mac))
    }

    /// Registers (or restarts) a board with a fresh ring of `ring_sets` data
    /// sets and returns the START frame to send to it.
    pub fn start_feb(&self, mac: MacAddr, ring_sets: usize) -> Result<Frame, RxError> {
        if ring_sets < MIN_RING_SETS {
            return Err(RxError::RingTooSmall(ring_sets));
        }
        let mut slots = self.slots.write();
        match slots.get(&mac) {
            Some(cell) => {
                let mut slot = cell.state.lock();
                if slot.started {
                    return Err(RxError::AlreadyStarted(mac));
                }
                let threshold = slot.wakeup_threshold;
                *slot = FebSlot::new(mac, ring_sets);
                slot.wakeup_threshold = threshold;
            }
            None => {
                if slots.len() >= self.max_slaves {
                    return Err(RxError::CapacityFull(self.max_slaves));
                }
                let cell = SlotCell { state: Mutex::new(FebSlot::new(mac, ring_sets)), ready: Condvar::new() };
                slots.insert(mac, Arc::new(cell));
            }
        }
        Ok(Frame::start(mac, self.host_mac))
    }

    /// Marks the board stopped (its ring stays readable) and returns the STOP frame.
    pub fn stop_feb(&self, mac: MacAddr) -> Result<Frame, RxError> {
        let cell = self.cell(mac)?;
        cell.state.lock().started = false;
        Ok(Frame::stop(mac, self.host_mac))
    }

    /// Protocol handler entry point for a received frame.
    pub fn handle_frame(&self, frame: &Frame) -> RxAction {
        let FrameBody::Data { seq, payload, .. } = &frame.body else {
            self.non_data.fetch_add(1, Ordering::Relaxed);
            return RxAction::NONE;
        };
        let cell = self.slots.read().get(&frame.src).cloned();
        let Some(cell) = cell else {
            self.unregistered_source.fetch_add(1, Ordering::Relaxed);
            return RxAction::reply(RxReply::Stop(frame.src));
        };
        let mut slot = cell.state.lock();
        if !slot.started {
            self.unregistered_source.fetch_add(1, Ordering::Relaxed);
            return RxAction::reply(RxReply::Stop(frame.src));
        }
        let action = slot.handle_data(*seq, payload);
        if action.newly_available > 0 && slot.available() >= slot.wakeup_threshold {
            cell.ready.notify_all();
        }
        action
    }

    pub fn read_ptrs(&self, mac: MacAddr) -> Result<Pointers, RxError> {
        Ok(self.cell(mac)?.state.lock().pointers())
    }

    /// Releases `consumed` bytes at the tail back to the protocol handler.
    pub fn write_ptrs(&self, mac: MacAddr, consumed: u64) -> Result<(), RxError> {
        let cell = self.cell(mac)?;
        let mut slot = cell.state.lock();
        let available = slot.available();
        if consumed > available {
            return Err(RxError::Range { requested: consumed, available });
        }
        slot.tail += consumed;
        slot.counters.consumed_bytes += consumed;
        Ok(())
    }

    pub fn poll_ready(&self, mac: MacAddr) -> Result<bool, RxError> {
        let cell = self.cell(mac)?;
        let slot = cell.state.lock();
        Ok(slot.available() >= slot.wakeup_threshold)
    }

    /// Blocks until the wake-up threshold is reached or `timeout` passes.
    pub fn wait_ready(&self, mac: MacAddr, timeout: Duration) -> Result<bool, RxError> {
        let cell = self.cell(mac)?;
        let mut slot = cell.state.lock();
        if slot.available() >= slot.wakeup_threshold {
            return Ok(true);
        }
        cell.ready.wait_for(&mut slot, timeout);
        Ok(slot.available() >= slot.wakeup_threshold)
    }

    pub fn set_wakeup(&self, mac: MacAddr, threshold: u64) -> Result<(), RxError> {
        self.cell(mac)?.state.lock().wakeup_threshold = threshold;
        Ok(())
    }

    pub fn get_buf_len(&self, mac: MacAddr) -> Result<u64, RxError> {
        Ok(self.cell(mac)?.state.lock().capacity())
    }

    /// Runs `f` on the slot with its lock held.
    pub fn with_slot<R>(&self, mac: MacAddr, f: impl FnOnce(&FebSlot) -> R) -> Result<R, RxError> {
        Ok(f(&self.cell(mac)?.state.lock()))
    }

    /// Copies up to `max` unconsumed bytes into `out` without releasing them.
    pub fn read_available(&self, mac: MacAddr, max: usize, out: &mut Vec<u8>) -> Result<usize, RxError> {
        self.with_slot(mac, |slot| {
            let (a, b) = slot.available_slices();
            let n_a = a.len().min(max);
            let n_b = b.len().min(max - n_a);
            out.extend_from_slice(&a[..n_a]);
            out.extend_from_slice(&b[..n_b]);
            n_a + n_b
        })
    }

    pub fn registered(&self) -> Vec<MacAddr> {
        self.slots.read().keys().copied().collect()
    }

    /// Protocol counters and pointer values, keyed by name.
    pub fn metrics(&self) -> BTreeMap<String, u64> {
        let mut m = BTreeMap::new();
        m.insert("rx.unregistered_source".to_string(), self.unregistered_source.load(Ordering::Relaxed));
        m.insert("rx.non_data".to_string(), self.non_data.load(Ordering::Relaxed));
        for (mac, cell) in self.slots.read().iter() {
            let slot = cell.state.lock();
            let c = slot.counters;
            let p = slot.pointers();
            for (name, v) in [
                ("head", p.head),
                ("tail", p.tail),
                ("available", p.available),
                ("capacity", slot.capacity()),
                ("expected_set", u64::from(slot.expected_set())),
                ("completed_sets", slot.completed_sets),
                ("stored", c.stored),
                ("duplicate_acks", c.duplicate_acks),
                ("late_acks", c.late_acks),
                ("dropped_no_space", c.dropped_no_space),
                ("stale_set", c.stale_set),
                ("bad_pkt_index", c.bad_pkt_index),
                ("consumed_bytes", c.consumed_bytes),
            ] {
                m.insert(format!("feb.{mac}.{name}"), v);
            }
        }
        m
    }

    /// Sum of the protocol-violation counters over all slots.
    pub fn violations(&self) -> u64 {
        let slots = self.slots.read();
        let per_slot: u64 = slots
            .values()
            .map(|cell| {
                let c = cell.state.lock().counters;
                c.stale_set + c.bad_pkt_index
            })
            .sum();
        per_slot + self.non_data.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HOST: MacAddr = MacAddr([2, 0, 0, 0, 0, 0xff]);
    const FEB: MacAddr = MacAddr([2, 0, 0, 0, 0, 1]);
    const OTHER: MacAddr = MacAddr([2, 0, 0, 0, 0, 2]);

    fn data(set: u16, pkt: u8, fill: u8) -> Frame {
        Frame::data(HOST, FEB, SeqNum::new(set, pkt), 200, Box::new([fill; PAYLOAD_LEN]))
    }

    fn rx() -> ReceiverCore {
        let rx = ReceiverCore::new(HOST, 4);
        rx.start_feb(FEB, 4).unwrap();
        rx
    }

    #[test]
    fn start_sizes_ring() {
        let rx = ReceiverCore::new(HOST, 1);
        let f = rx.start_feb(FEB, 4).unwrap();
        assert_eq!(f, Frame::start(FEB, HOST));
        assert_eq!(rx.get_buf_len(FEB).unwrap(), 131_072);
        assert_eq!(rx.start_feb(OTHER, 4), Err(RxError::CapacityFull(1)));
        assert_eq!(rx.start_feb(FEB, 4), Err(RxError::AlreadyStarted(FEB)));
        assert_eq!(rx.start_feb(OTHER, 1), Err(RxError::RingTooSmall(1)));
    }

    #[test]
    fn stop_is_idempotent() {
        let rx = rx();
        assert_eq!(rx.stop_feb(FEB).unwrap(), Frame::stop(FEB, HOST));
        assert_eq!(rx.stop_feb(FEB).unwrap(), Frame::stop(FEB, HOST));
        assert_eq!(rx.stop_feb(OTHER), Err(RxError::NotFound(OTHER)));
        // data from a stopped board is answered with STOP
        assert_eq!(rx.handle_frame(&data(0, 0, 1)).reply, RxReply::Stop(FEB));
        // and it may be started again
        rx.start_feb(FEB, 2).unwrap();
        assert_eq!(rx.get_buf_len(FEB).unwrap(), 65_536);
    }

    #[test]
    fn first_packet_is_stored_and_acked() {
        let rx = rx();
        let a = rx.handle_frame(&data(0, 0, 7));
        assert_eq!(a, RxAction { reply: RxReply::Ack(SeqNum::new(0, 0)), stored: true, newly_available: 1024 });
        assert_eq!(rx.read_ptrs(FEB).unwrap(), Pointers { head: 1024, tail: 0, available: 1024 });
        let mut out = Vec::new();
        rx.read_available(FEB, usize::MAX, &mut out).unwrap();
        assert_eq!(out, vec![7u8; 1024]);
    }

    #[test]
    fn duplicate_is_acked_without_change() {
        let rx = rx();
        rx.handle_frame(&data(0, 0, 7));
        let before = rx.with_slot(FEB, |s| (s.ring.clone(), s.pointers(), s.bitmaps())).unwrap();
        let a = rx.handle_frame(&data(0, 0, 9));
        assert_eq!(a.reply, RxReply::Ack(SeqNum::new(0, 0)));
        assert!(!a.stored);
        let after = rx.with_slot(FEB, |s| (s.ring.clone(), s.pointers(), s.bitmaps())).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn unregistered_source_gets_stop() {
        let rx = rx();
        let f = Frame::data(HOST, OTHER, SeqNum::new(0, 0), 1, Box::new([0; PAYLOAD_LEN]));
        let a = rx.handle_frame(&f);
        assert_eq!(a.reply, RxReply::Stop(OTHER));
        assert_eq!(a.reply_frame(HOST, OTHER), Some(Frame::stop(OTHER, HOST)));
        assert_eq!(rx.metrics()["rx.unregistered_source"], 1);
    }

    #[test]
    fn head_stops_at_gap() {
        let rx = rx();
        rx.handle_frame(&data(0, 0, 1));
        rx.handle_frame(&data(0, 2, 3));
        assert_eq!(rx.read_ptrs(FEB).unwrap().available, 1024);
        let a = rx.handle_frame(&data(0, 1, 2));
        assert_eq!(a.newly_available, 2048);
        assert_eq!(rx.read_ptrs(FEB).unwrap().available, 3072);
        let mut out = Vec::new();
        rx.read_available(FEB, usize::MAX, &mut out).unwrap();
        assert_eq!(&out[1024..1025], &[2]);
        assert_eq!(&out[2048..2049], &[3]);
    }

    #[test]
    fn next_set_lands_in_second_region() {
        let rx = rx();
        rx.handle_frame(&data(1, 0, 5));
        assert_eq!(rx.read_ptrs(FEB).unwrap().available, 0);
        for p in 0..32 {
            rx.handle_frame(&data(0, p, p));
        }
        let (exp, avail) = rx.with_slot(FEB, |s| (s.expected_set(), s.available())).unwrap();
        assert_eq!(exp, 1);
        assert_eq!(avail, SET_LEN as u64 + 1024);
        assert_eq!(rx.with_slot(FEB, |s| s.set_base(0)).unwrap(), SET_LEN as u64);
    }

    #[test]
    fn far_future_and_stale_sets_are_dropped() {
        let rx = rx();
        assert_eq!(rx.handle_frame(&data(2, 0, 1)).reply, RxReply::None);
        // set 0xffff is one behind set 0 but nothing was ever completed
        assert_eq!(rx.handle_frame(&data(0xffff, 0, 1)).reply, RxReply::None);
        assert_eq!(rx.with_slot(FEB, |s| s.counters().stale_set).unwrap(), 2);
    }

    #[test]
    fn late_duplicate_from_completed_set() {
        let rx = rx();
        for p in 0..32 {
            rx.handle_frame(&data(0, p, 0));
        }
        rx.write_ptrs(FEB, SET_LEN as u64).unwrap();
        let a = rx.handle_frame(&data(0, 5, 0));
        assert_eq!(a.reply, RxReply::Ack(SeqNum::new(0, 5)));
        assert!(!a.stored);
    }

    #[test]
    fn full_ring_drops_without_ack() {
        let rx = ReceiverCore::new(HOST, 1);
        rx.start_feb(FEB, 2).unwrap();
        for set in 0..2u16 {
            for p in 0..32 {
                assert!(rx.handle_frame(&data(set, p, 1)).stored);
            }
        }
        assert_eq!(rx.read_ptrs(FEB).unwrap().available, 2 * SET_LEN as u64);
        let a = rx.handle_frame(&data(2, 0, 1));
        assert_eq!(a.reply, RxReply::None);
        assert!(!a.stored);
        rx.write_ptrs(FEB, 1024).unwrap();
        assert!(rx.handle_frame(&data(2, 0, 1)).stored);
        assert_eq!(rx.with_slot(FEB, |s| s.counters().dropped_no_space).unwrap(), 1);
    }

    #[test]
    fn consumer_pointers() {
        let rx = rx();
        assert_eq!(rx.read_ptrs(FEB).unwrap(), Pointers { head: 0, tail: 0, available: 0 });
        rx.handle_frame(&data(0, 0, 1));
        rx.write_ptrs(FEB, 0).unwrap();
        assert_eq!(rx.read_ptrs(FEB).unwrap().available, 1024);
        assert_eq!(rx.write_ptrs(FEB, 1025), Err(RxError::Range { requested: 1025, available: 1024 }));
        rx.write_ptrs(FEB, 1024).unwrap();
        assert_eq!(rx.read_ptrs(FEB).unwrap(), Pointers { head: 1024, tail: 1024, available: 0 });
        assert_eq!(rx.read_ptrs(OTHER), Err(RxError::NotFound(OTHER)));
    }

    #[test]
    fn wakeup_threshold() {
        let rx = rx();
        rx.set_wakeup(FEB, 4096).unwrap();
        rx.handle_frame(&data(0, 0, 1));
        assert!(!rx.poll_ready(FEB).unwrap());
        for p in 1..4 {
            rx.handle_frame(&data(0, p, 1));
        }
        assert!(rx.poll_ready(FEB).unwrap());
        rx.set_wakeup(FEB, 0).unwrap();
        rx.write_ptrs(FEB, 4096).unwrap();
        assert!(rx.poll_ready(FEB).unwrap());
        assert_eq!(rx.set_wakeup(OTHER, 1), Err(RxError::NotFound(OTHER)));
        assert_eq!(rx.get_buf_len(OTHER), Err(RxError::NotFound(OTHER)));
    }

    #[test]
    fn wakeup_at_exact_threshold() {
        let rx = rx();
        rx.set_wakeup(FEB, 65_536).unwrap();
        for set in 0..2u16 {
            for p in 0..32 {
                rx.handle_frame(&data(set, p, 1));
            }
        }
        assert_eq!(rx.read_ptrs(FEB).unwrap().available, 65_536);
        assert!(rx.poll_ready(FEB).unwrap());
    }

    #[test]
    fn wraps_around_ring() {
        let rx = ReceiverCore::new(HOST, 1);
        rx.start_feb(FEB, 2).unwrap();
        let mut out = Vec::new();
        for set in 0..5u16 {
            for p in 0..32u8 {
                assert!(rx.handle_frame(&data(set, p, set as u8 * 32 + p)).stored);
            }
            out.clear();
            rx.read_available(FEB, usize::MAX, &mut out).unwrap();
            assert_eq!(out.len(), SET_LEN);
            for (i, chunk) in out.chunks(PAYLOAD_LEN).enumerate() {
                assert!(chunk.iter().all(|&b| b == set as u8 * 32 + i as u8));
            }
            rx.write_ptrs(FEB, SET_LEN as u64).unwrap();
        }
        assert_eq!(rx.with_slot(FEB, |s| s.expected_set()).unwrap(), 5);
    }

    #[test]
    fn control_frames_are_counted() {
        let rx = rx();
        assert_eq!(rx.handle_frame(&Frame::ack(HOST, FEB, SeqNum::new(0, 0))).reply, RxReply::None);
        assert_eq!(rx.violations(), 1);
    }

    #[test]
    fn bad_packet_index() {
        let rx = rx();
        let f = Frame::data(HOST, FEB, SeqNum::new(0, 40), 1, Box::new([0; PAYLOAD_LEN]));
        assert_eq!(rx.handle_frame(&f).reply, RxReply::None);
        assert_eq!(rx.with_slot(FEB, |s| s.counters().bad_pkt_index).unwrap(), 1);
    }
}
