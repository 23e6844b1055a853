//! Front-end board sender: packet buffer memory plus the descriptor manager.
//!
//! Input words are written into the buffer at `head`. A filled buffer is
//! marked valid and the input is blocked until `head` can advance. Buffers
//! in `[tail, head)` are transmitted in turn by the `retr` pointer, which
//! sweeps the interval cyclically, so anything not yet confirmed is resent
//! on the next pass. The sweep is paced by the congestion-avoidance delay.
//!
//! The i-th packet of every data set lives in buffer i, so a packet's
//! sequence number is simply `(descriptor set number, buffer index)`.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::nca::{NcaParams, NcaState, WindowOutcome};
use crate::wire::{Frame, FrameBody, MacAddr, SeqNum, N_PKTS, PAYLOAD_LEN};
use crate::Nanos;

/// Depth of the acknowledge and commands FIFO.
pub const ACK_FIFO_DEPTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct PacketDescriptor {
    pub valid: bool,
    pub sent: bool,
    pub confirmed: bool,
    pub set_number: u16,
}

impl PacketDescriptor {
    fn pending(&self) -> bool {
        self.valid && !self.confirmed
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SendAction {
    Transmit {
        frame: Frame,
        not_before: Nanos,
        /// The buffer had been sent before.
        resend: bool,
        /// Set when this transmission closed an NCA update window.
        window: Option<WindowOutcome>,
    },
    /// An ACK was consumed or `head` moved; nothing goes on the wire.
    Internal,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Start,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SenderStats {
    pub frames_sent: u64,
    pub frames_resent: u64,
    pub acks_accepted: u64,
    pub acks_discarded: u64,
    pub ack_fifo_overflows: u64,
    pub nca_windows: u64,
}

/// Protocol-visible state, used to check that an operation changed nothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SenderSnapshot {
    pub descriptors: [PacketDescriptor; N_PKTS],
    pub head: usize,
    pub tail: usize,
    pub retr: usize,
    pub current_set: u16,
    pub fill_offset: usize,
    pub running: bool,
    pub data_ready: bool,
    pub nca: NcaState,
    pub last_transmit: Option<Nanos>,
    pub buffers: Box<[[u8; PAYLOAD_LEN]; N_PKTS]>,
}

pub struct SenderCore {
    buffers: Box<[[u8; PAYLOAD_LEN]; N_PKTS]>,
    descriptors: [PacketDescriptor; N_PKTS],
    head: usize,
    tail: usize,
    retr: usize,
    current_set: u16,
    fill_offset: usize,
    running: bool,
    data_ready: bool,
    nca_params: NcaParams,
    nca: NcaState,
    last_transmit: Option<Nanos>,
    ack_fifo: VecDeque<SeqNum>,
    mac: MacAddr,
    host_mac: MacAddr,
    stats: SenderStats,
}

fn next(i: usize) -> usize {
    (i + 1) % N_PKTS
}

impl SenderCore {
    /// A halted core; it starts transmitting after a Start command.
    pub fn new(mac: MacAddr, nca_params: NcaParams) -> Self {
        SenderCore {
            buffers: Box::new([[0; PAYLOAD_LEN]; N_PKTS]),
            descriptors: [PacketDescriptor::default(); N_PKTS],
            head: 0,
            tail: 0,
            retr: 0,
            current_set: 0,
            fill_offset: 0,
            running: false,
            data_ready: false,
            nca: NcaState::new(&nca_params),
            nca_params,
            last_transmit: None,
            ack_fifo: VecDeque::with_capacity(ACK_FIFO_DEPTH),
            mac,
            host_mac: MacAddr::default(),
            stats: SenderStats::default(),
        }
    }

    pub fn mac(&self) -> MacAddr {
        self.mac
    }

    pub fn host_mac(&self) -> MacAddr {
        self.host_mac
    }

    pub fn is_running(&self) -> bool {
        self.running
    }

    pub fn data_ready(&self) -> bool {
        self.running && self.data_ready
    }

    pub fn head(&self) -> usize {
        self.head
    }

    pub fn tail(&self) -> usize {
        self.tail
    }

    pub fn retr(&self) -> usize {
        self.retr
    }

    pub fn current_set(&self) -> u16 {
        self.current_set
    }

    pub fn fill_offset(&self) -> usize {
        self.fill_offset
    }

    pub fn descriptors(&self) -> &[PacketDescriptor; N_PKTS] {
        &self.descriptors
    }

    pub fn buffer(&self, index: usize) -> &[u8; PAYLOAD_LEN] {
        &self.buffers[index]
    }

    pub fn nca(&self) -> &NcaState {
        &self.nca
    }

    pub fn nca_params(&self) -> &NcaParams {
        &self.nca_params
    }

    pub fn stats(&self) -> &SenderStats {
        &self.stats
    }

    pub fn pending_acks(&self) -> usize {
        self.ack_fifo.len()
    }

    pub fn snapshot(&self) -> SenderSnapshot {
        SenderSnapshot {
            descriptors: self.descriptors,
            head: self.head,
            tail: self.tail,
            retr: self.retr,
            current_set: self.current_set,
            fill_offset: self.fill_offset,
            running: self.running,
            data_ready: self.data_ready,
            nca: self.nca.clone(),
            last_transmit: self.last_transmit,
            buffers: self.buffers.clone(),
        }
    }

    /// Bytes the input can take before the current buffer is full.
    pub fn input_room(&self) -> usize {
        if self.data_ready() {
            PAYLOAD_LEN - self.fill_offset
        } else {
            0
        }
    }

    /// Writes one 32-bit input word (big-endian) into the buffer at `head`.
    pub fn offer_word(&mut self, word: u32) -> bool {
        self.offer_bytes(&word.to_be_bytes()) == 4
    }

    /// Writes as many whole 32-bit words from `bytes` as the current buffer
    /// accepts and returns the number of bytes consumed. A trailing partial
    /// word is never consumed.
    pub fn offer_bytes(&mut self, bytes: &[u8]) -> usize {
        let n = self.input_room().min(bytes.len() & !3);
        if n == 0 {
            return 0;
        }
        let off = self.fill_offset;
        self.buffers[self.head][off..off + n].copy_from_slice(&bytes[..n]);
        self.fill_offset += n;
        if self.fill_offset == PAYLOAD_LEN {
            self.descriptors[self.head].valid = true;
            self.data_ready = false;
        }
        n
    }

    /// START resets the whole core and begins a new stream at set 0; STOP
    /// halts it. Both are idempotent.
    pub fn on_command(&mut self, command: Command) {
        match command {
            Command::Start => {
                self.reset();
                self.running = true;
                self.data_ready = true;
            }
            Command::Stop => self.running = false,
        }
    }

    fn reset(&mut self) {
        self.descriptors = [PacketDescriptor::default(); N_PKTS];
        self.head = 0;
        self.tail = 0;
        self.retr = 0;
        self.current_set = 0;
        self.fill_offset = 0;
        self.nca = NcaState::new(&self.nca_params);
        self.last_transmit = None;
        self.ack_fifo.clear();
    }

    /// Feeds a frame received from the network. START/STOP act immediately;
    /// ACKs are queued for the state machine.
    pub fn on_frame(&mut self, frame: &Frame) {
        match &frame.body {
            FrameBody::Start => {
                self.host_mac = frame.src;
                self.on_command(Command::Start);
            }
            FrameBody::Stop => self.on_command(Command::Stop),
            FrameBody::Ack { seq } => self.enqueue_ack(*seq),
            FrameBody::Data { .. } => {}
        }
    }

    pub fn enqueue_ack(&mut self, seq: SeqNum) {
        if self.ack_fifo.len() == ACK_FIFO_DEPTH {
            self.ack_fifo.pop_front();
            self.stats.ack_fifo_overflows += 1;
        }
        self.ack_fifo.push_back(seq);
    }

    /// Processes one acknowledgement immediately.
    pub fn on_ack(&mut self, seq: SeqNum) {
        let i = usize::from(seq.pkt);
        if i >= N_PKTS {
            self.stats.acks_discarded += 1;
            return;
        }
        let d = self.descriptors[i];
        // A descriptor that was never transmitted cannot be acknowledged; this
        // also rejects stale ACKs from before a restart.
        if d.set_number != seq.set || !d.valid || !d.sent {
            self.stats.acks_discarded += 1;
            return;
        }
        self.stats.acks_accepted += 1;
        self.descriptors[i].confirmed = true;
        if i == self.tail {
            while self.tail != self.head && self.descriptors[self.tail].confirmed {
                self.tail = next(self.tail);
            }
        }
        if i == self.retr {
            self.retr = self.seek_retr(next(i));
        }
    }

    /// First pending descriptor at or after `from`, wrapping from `head` to
    /// `tail`; `head` if there is none.
    fn seek_retr(&self, from: usize) -> usize {
        let mut p = from;
        for _ in 0..2 * N_PKTS + 2 {
            if p == self.head {
                if self.tail == self.head {
                    return self.head;
                }
                p = self.tail;
            }
            if self.descriptors[p].pending() {
                return p;
            }
            p = next(p);
        }
        self.head
    }

    /// Runs one task of the descriptor manager, highest priority first:
    /// consume an ACK, advance `head`, transmit the buffer at `retr`.
    /// `tx_ready` tells whether the transmitter can take a frame now.
    pub fn step(&mut self, now: Nanos, tx_ready: bool) -> SendAction {
        if !self.running {
            return SendAction::None;
        }
        if let Some(seq) = self.ack_fifo.pop_front() {
            self.on_ack(seq);
            return SendAction::Internal;
        }
        if !self.data_ready && next(self.head) != self.tail {
            self.head = next(self.head);
            if self.head == 0 {
                self.current_set = self.current_set.wrapping_add(1);
            }
            self.descriptors[self.head] = PacketDescriptor {
                set_number: self.current_set,
                ..PacketDescriptor::default()
            };
            self.fill_offset = 0;
            self.data_ready = true;
            return SendAction::Internal;
        }
        if self.head == self.tail || !tx_ready {
            return SendAction::None;
        }
        if !self.descriptors[self.retr].pending() || self.retr == self.head {
            self.retr = self.seek_retr(self.retr);
            if self.retr == self.head {
                return SendAction::None;
            }
        }
        if let Some(last) = self.last_transmit {
            if now < self.nca.earliest_next_transmit(last) {
                return SendAction::None;
            }
        }
        let i = self.retr;
        let d = &mut self.descriptors[i];
        let resend = d.sent;
        d.sent = true;
        let seq = SeqNum::new(d.set_number, i as u8);
        let frame = Frame::data(self.host_mac, self.mac, seq, self.nca.reported_delay_us(), Box::new(self.buffers[i]));
        let window = self.nca.record_transmission(&self.nca_params, resend);
        self.stats.frames_sent += 1;
        if resend {
            self.stats.frames_resent += 1;
        }
        if window.is_some() {
            self.stats.nca_windows += 1;
        }
        self.last_transmit = Some(now);
        self.retr = self.seek_retr(next(i));
        SendAction::Transmit { frame, not_before: now, resend, window }
    }

    /// Whether a buffer is waiting to be (re)transmitted.
    pub fn has_pending(&self) -> bool {
        self.running && self.head != self.tail && self.seek_retr(self.retr) != self.head
    }

    /// Earliest time the pacing delay allows the next transmission, if any
    /// buffer is waiting.
    pub fn next_transmit_time(&self) -> Option<Nanos> {
        if !self.has_pending() {
            return None;
        }
        Some(self.last_transmit.map_or(0, |t| self.nca.earliest_next_transmit(t)))
    }

    /// Whether a `step` call would do internal work (ACK or head movement).
    pub fn has_internal_work(&self) -> bool {
        self.running && (!self.ack_fifo.is_empty() || (!self.data_ready && next(self.head) != self.tail))
    }

    /// Number of descriptors that are valid and not yet confirmed.
    pub fn outstanding(&self) -> usize {
        self.descriptors.iter().filter(|d| d.pending()).count()
    }

    /// Checks the structural invariants of the descriptor table.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (i, d) in self.descriptors.iter().enumerate() {
            if (d.confirmed || d.sent) && !d.valid {
                return Err(format!("descriptor {i} is sent/confirmed but not valid: {d:?}"));
            }
        }
        if self.outstanding() > N_PKTS {
            return Err("more than 32 outstanding buffers".into());
        }
        let mut sets: Vec<u16> = self.descriptors.iter().filter(|d| d.valid).map(|d| d.set_number).collect();
        sets.sort_unstable();
        sets.dedup();
        match sets.as_slice() {
            [] | [_] => {}
            [a, b] if b.wrapping_sub(*a) == 1 || a.wrapping_sub(*b) == 1 => {}
            other => return Err(format!("valid descriptors span sets {other:?}")),
        }
        let span = |from: usize, to: usize| (to + N_PKTS - from) % N_PKTS;
        if span(self.tail, self.retr) > span(self.tail, self.head) {
            return Err(format!("retr {} outside [tail {}, head {}]", self.retr, self.tail, self.head));
        }
        let mut p = self.tail;
        while p != self.head {
            if !self.descriptors[p].valid {
                return Err(format!("descriptor {p} in [tail, head) is not valid"));
            }
            p = next(p);
        }
        if self.tail != self.head && self.descriptors[self.tail].confirmed {
            return Err(format!("tail {} rests on a confirmed buffer", self.tail));
        }
        Ok(())
    }

    /// One-line dump of pointers and flags for tracing.
    pub fn trace_line(&self) -> String {
        let mut s = format!(
            "head={} tail={} retr={} set={} fill={} run={} ready={} delay_ns={} flags=",
            self.head,
            self.tail,
            self.retr,
            self.current_set,
            self.fill_offset,
            u8::from(self.running),
            u8::from(self.data_ready),
            self.nca.delay()
        );
        for (i, d) in self.descriptors.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(
                s,
                "{}{}{}",
                if d.valid { 'V' } else { '-' },
                if d.sent { 'S' } else { '-' },
                if d.confirmed { 'C' } else { '-' }
            );
        }
        s
    }
}
