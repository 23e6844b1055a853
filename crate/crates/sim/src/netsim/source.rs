//! Data producers attached to the sender's 32-bit input bus.

use fade_core::{Nanos, SenderCore};

use crate::oracle::OracleStream;

const NS_PER_S: u128 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum TrafficPattern {
    /// Data is always waiting; the sender is never starved.
    Unlimited,
    ConstantRate { rate_bps: u64 },
    /// `burst_bytes` become available at the start of every period.
    Burst { burst_bytes: u64, period: Nanos },
}

/// Oracle-stream producer with a timing pattern and an optional length limit.
/// Data not yet taken by the sender waits upstream.
pub struct TrafficSource {
    pattern: TrafficPattern,
    limit: Option<u64>,
    stream: OracleStream,
    offered: u64,
    scratch: Vec<u8>,
}

impl TrafficSource {
    pub fn new(pattern: TrafficPattern, limit: Option<u64>, stream: OracleStream) -> Self {
        TrafficSource { pattern, limit: limit.map(|l| l & !3), stream, offered: 0, scratch: Vec::new() }
    }

    pub fn offered(&self) -> u64 {
        self.offered
    }

    pub fn limit(&self) -> Option<u64> {
        self.limit
    }

    /// Bytes produced by time `now`, in whole 32-bit words.
    pub fn produced_by(&self, now: Nanos) -> u64 {
        let raw = match self.pattern {
            TrafficPattern::Unlimited => u64::MAX,
            TrafficPattern::ConstantRate { rate_bps } => {
                (u128::from(rate_bps) * u128::from(now) / (8 * NS_PER_S)).min(u128::from(u64::MAX)) as u64
            }
            TrafficPattern::Burst { burst_bytes, period } => {
                (now / period.max(1) + 1).saturating_mul(burst_bytes)
            }
        };
        self.limit.map_or(raw, |l| raw.min(l)) & !3
    }

    pub fn exhausted(&self) -> bool {
        self.limit.is_some_and(|l| self.offered >= l)
    }

    /// Hands the sender whatever it can take of the data produced so far.
    pub fn feed(&mut self, now: Nanos, core: &mut SenderCore) {
        let room = core.input_room() as u64;
        if room == 0 {
            return;
        }
        let n = room.min(self.produced_by(now) - self.offered) as usize;
        if n == 0 {
            return;
        }
        self.scratch.resize(n, 0);
        self.stream.fill(&mut self.scratch);
        let taken = core.offer_bytes(&self.scratch);
        debug_assert_eq!(taken, n);
        self.offered += taken as u64;
    }

    /// When enough data will exist to complete the buffer being filled,
    /// given `room` free bytes in it. `None` if that never happens by itself.
    pub fn next_available(&self, now: Nanos, room: usize) -> Option<Nanos> {
        if room == 0 || self.exhausted() {
            return None;
        }
        let remaining = self.limit.map_or(u64::MAX, |l| l - self.offered);
        let target = self.offered + (room as u64).min(remaining);
        let t = match self.pattern {
            TrafficPattern::Unlimited => return None,
            TrafficPattern::ConstantRate { rate_bps } => {
                let t = (u128::from(target) * 8 * NS_PER_S).div_ceil(u128::from(rate_bps.max(1)));
                u64::try_from(t).unwrap_or(u64::MAX)
            }
            TrafficPattern::Burst { burst_bytes, period } => {
                let k = target.div_ceil(burst_bytes.max(1)).saturating_sub(1);
                k.saturating_mul(period)
            }
        };
        Some(t.max(now + 1))
    }
}
