//! Point-to-point link: one serializing transmitter and a lossy channel.

use fade_core::Nanos;

use super::rng::SimRng;

#[derive(Debug, Clone, PartialEq)]
pub struct LinkParams {
    pub rate_bps: u64,
    pub propagation: Nanos,
    pub loss_prob: f64,
    pub dup_prob: f64,
    /// Each copy is delayed by an extra uniform draw from `[0, reorder_jitter]`.
    pub reorder_jitter: Nanos,
    /// Overrides the simulation seed for this link's random stream.
    pub seed: Option<u64>,
}

impl LinkParams {
    pub fn ideal(rate_bps: u64) -> Self {
        LinkParams { rate_bps, propagation: 0, loss_prob: 0.0, dup_prob: 0.0, reorder_jitter: 0, seed: None }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.rate_bps == 0 {
            return Err("rate_bps must be positive".into());
        }
        for (name, p) in [("loss_prob", self.loss_prob), ("dup_prob", self.dup_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }

    /// Time to clock `bytes` onto the wire, rounded up to whole nanoseconds.
    pub fn serialization(&self, bytes: usize) -> Nanos {
        let bits = bytes as u128 * 8 * 1_000_000_000;
        bits.div_ceil(u128::from(self.rate_bps)) as Nanos
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LinkStats {
    pub sent: u64,
    pub duplicated: u64,
    pub dropped: u64,
    pub delivered: u64,
    pub bytes_sent: u64,
}

impl LinkStats {
    /// Copies put on the channel that have neither arrived nor been lost.
    pub fn in_flight(&self) -> u64 {
        self.sent + self.duplicated - self.dropped - self.delivered
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transmission {
    pub start: Nanos,
    /// When the transmitter is free again.
    pub done: Nanos,
    /// Arrival times of the copies that survive the channel.
    pub arrivals: [Option<Nanos>; 2],
}

#[derive(Debug, Clone)]
pub struct Link {
    params: LinkParams,
    rng: SimRng,
    busy_until: Nanos,
    stats: LinkStats,
}

impl Link {
    pub fn new(params: LinkParams, rng: SimRng) -> Self {
        Link { params, rng, busy_until: 0, stats: LinkStats::default() }
    }

    pub fn params(&self) -> &LinkParams {
        &self.params
    }

    pub fn stats(&self) -> &LinkStats {
        &self.stats
    }

    pub fn busy_until(&self) -> Nanos {
        self.busy_until
    }

    pub fn is_free(&self, now: Nanos) -> bool {
        self.busy_until <= now
    }

    /// Serializes a frame of `bytes` starting no earlier than `t_start` (or
    /// when the transmitter frees up) and draws its fate on the channel.
    pub fn transmit(&mut self, bytes: usize, t_start: Nanos) -> Transmission {
        self.send(bytes, t_start, true)
    }

    /// Like [`Link::transmit`] but the channel never duplicates the frame.
    pub fn transmit_once(&mut self, bytes: usize, t_start: Nanos) -> Transmission {
        self.send(bytes, t_start, false)
    }

    fn send(&mut self, bytes: usize, t_start: Nanos, may_duplicate: bool) -> Transmission {
        let start = t_start.max(self.busy_until);
        let done = start + self.params.serialization(bytes);
        self.busy_until = done;
        self.stats.sent += 1;
        self.stats.bytes_sent += bytes as u64;
        let base = done + self.params.propagation;
        let mut arrivals = [None, None];
        if self.rng.chance(self.params.loss_prob) {
            self.stats.dropped += 1;
        } else {
            arrivals[0] = Some(base + self.rng.up_to(self.params.reorder_jitter));
            if may_duplicate && self.rng.chance(self.params.dup_prob) {
                self.stats.duplicated += 1;
                arrivals[1] = Some(base + self.rng.up_to(self.params.reorder_jitter));
            }
        }
        Transmission { start, done, arrivals }
    }

    /// Records that a copy reached the far end.
    pub fn mark_delivered(&mut self) {
        self.stats.delivered += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fade_core::wire::{DATA_FRAME_LEN, MIN_FRAME_LEN};

    const GIG: u64 = 1_000_000_000;

    #[test]
    fn serialization_times() {
        let p = LinkParams::ideal(GIG);
        assert_eq!(p.serialization(DATA_FRAME_LEN), 8384);
        assert_eq!(p.serialization(MIN_FRAME_LEN), 512);
        assert_eq!(LinkParams::ideal(100_000_000).serialization(DATA_FRAME_LEN), 83_840);
    }

    #[test]
    fn ideal_link_timing() {
        let mut l = Link::new(LinkParams { propagation: 1000, ..LinkParams::ideal(GIG) }, SimRng::new(1, 1));
        let t = l.transmit(DATA_FRAME_LEN, 100);
        assert_eq!(t, Transmission { start: 100, done: 8484, arrivals: [Some(9484), None] });
        // a second frame queues behind the first
        let t2 = l.transmit(MIN_FRAME_LEN, 200);
        assert_eq!(t2.start, 8484);
        assert_eq!(t2.arrivals[0], Some(8484 + 512 + 1000));
    }

    #[test]
    fn transmit_once_never_duplicates() {
        let p = LinkParams { dup_prob: 1.0, ..LinkParams::ideal(GIG) };
        let mut l = Link::new(p, SimRng::new(1, 1));
        assert!(l.transmit(64, 0).arrivals[1].is_some());
        assert!(l.transmit_once(64, 0).arrivals[1].is_none());
        assert_eq!(l.stats().duplicated, 1);
    }

    #[test]
    fn total_loss() {
        let mut l = Link::new(LinkParams { loss_prob: 1.0, ..LinkParams::ideal(GIG) }, SimRng::new(1, 1));
        for i in 0..100 {
            assert_eq!(l.transmit(64, i * 1000).arrivals, [None, None]);
        }
        assert_eq!(l.stats().dropped, 100);
        assert_eq!(l.stats().in_flight(), 0);
    }

    #[test]
    fn jitter_and_duplicates_respect_latency_floor() {
        let params = LinkParams {
            propagation: 500,
            dup_prob: 0.5,
            reorder_jitter: 10_000,
            loss_prob: 0.1,
            ..LinkParams::ideal(GIG)
        };
        let mut l = Link::new(params, SimRng::new(3, 9));
        let mut copies = 0;
        for i in 0..1000u64 {
            let t = l.transmit(MIN_FRAME_LEN, i * 600);
            for a in t.arrivals.into_iter().flatten() {
                assert!(a >= t.done + 500);
                assert!(a <= t.done + 500 + 10_000);
                copies += 1;
                l.mark_delivered();
            }
        }
        let s = l.stats();
        assert_eq!(s.sent + s.duplicated, s.delivered + s.dropped);
        assert_eq!(copies, s.delivered);
        assert!(s.duplicated > 300 && s.dropped > 50);
    }

    #[test]
    fn validation() {
        assert!(LinkParams::ideal(0).validate().is_err());
        assert!(LinkParams { loss_prob: 1.5, ..LinkParams::ideal(1) }.validate().is_err());
        assert!(LinkParams { dup_prob: -0.1, ..LinkParams::ideal(1) }.validate().is_err());
        assert!(LinkParams::ideal(1).validate().is_ok());
    }
}
