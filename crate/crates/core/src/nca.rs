//! Network congestion avoidance: an adaptive inter-packet delay driven by the
//! ratio of resent to sent packets.
//!
//! After every `n_pkt_update` transmissions the resend ratio is compared with
//! two thresholds. Above `t_high` the delay is multiplied by `alpha_incr`,
//! below `t_low` by `alpha_decr`; in between it is left alone. All arithmetic
//! is exact integer/rational arithmetic on nanoseconds so update sequences
//! reproduce bit-for-bit.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::Nanos;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NcaError {
    #[error("invalid fraction {0:?}")]
    BadFraction(String),
    #[error("invalid NCA parameters: {0}")]
    Invalid(&'static str),
    #[error("unknown NCA preset {0:?} (expected \"set1\" or \"set2\")")]
    UnknownPreset(String),
}

/// Non-negative rational number `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub const fn new(num: u64, den: u64) -> Self {
        Fraction { num, den }
    }

    /// `value * self`, rounded toward zero.
    pub fn scale(self, value: u64) -> u64 {
        let r = u128::from(value) * u128::from(self.num) / u128::from(self.den);
        u64::try_from(r).unwrap_or(u64::MAX)
    }

    /// Whether `a / b` is strictly greater than this fraction. `b` must be non-zero.
    pub fn is_exceeded_by(self, a: u64, b: u64) -> bool {
        u128::from(a) * u128::from(self.den) > u128::from(b) * u128::from(self.num)
    }

    /// Whether `a / b` is strictly smaller than this fraction. `b` must be non-zero.
    pub fn is_above(self, a: u64, b: u64) -> bool {
        u128::from(a) * u128::from(self.den) < u128::from(b) * u128::from(self.num)
    }

    fn cmp_one(self) -> std::cmp::Ordering {
        self.num.cmp(&self.den)
    }

    fn lt(self, other: Fraction) -> bool {
        u128::from(self.num) * u128::from(other.den) < u128::from(other.num) * u128::from(self.den)
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Accepts `"a/b"`, integers, and plain decimals such as `"0.9375"` (parsed
/// exactly, never through binary floating point).
impl FromStr for Fraction {
    type Err = NcaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NcaError::BadFraction(s.to_string());
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let num = n.trim().parse().map_err(|_| bad())?;
            let den: u64 = d.trim().parse().map_err(|_| bad())?;
            if den == 0 {
                return Err(bad());
            }
            return Ok(Fraction { num, den });
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty() || frac.len() > 18 {
            return Err(bad());
        }
        let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if !all_digits(int) || !all_digits(frac) {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let num = int.checked_mul(den).and_then(|v| v.checked_add(frac)).ok_or_else(bad)?;
        Ok(Fraction { num, den })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NcaParams {
    pub n_pkt_update: u32,
    pub t_high: Fraction,
    pub t_low: Fraction,
    pub alpha_incr: Fraction,
    pub alpha_decr: Fraction,
    pub initial_delay: Nanos,
    pub min_delay: Nanos,
    pub max_delay: Nanos,
}

pub const INITIAL_DELAY: Nanos = 200_000;
pub const MIN_DELAY: Nanos = 1_000;
pub const MAX_DELAY: Nanos = 10_000_000;

impl NcaParams {
    /// N=3000, T_high=1/16, T_low=1/64, alpha 5/4 and 15/16.
    pub const SET1: NcaParams = NcaParams {
        n_pkt_update: 3000,
        t_high: Fraction::new(1, 16),
        t_low: Fraction::new(1, 64),
        alpha_incr: Fraction::new(5, 4),
        alpha_decr: Fraction::new(15, 16),
        initial_delay: INITIAL_DELAY,
        min_delay: MIN_DELAY,
        max_delay: MAX_DELAY,
    };

    /// N=10000, T_high=1/8, T_low=1/32, alpha 5/4 and 3/4.
    pub const SET2: NcaParams = NcaParams {
        n_pkt_update: 10_000,
        t_high: Fraction::new(1, 8),
        t_low: Fraction::new(1, 32),
        alpha_incr: Fraction::new(5, 4),
        alpha_decr: Fraction::new(3, 4),
        initial_delay: INITIAL_DELAY,
        min_delay: MIN_DELAY,
        max_delay: MAX_DELAY,
    };

    pub fn preset(name: &str) -> Result<NcaParams, NcaError> {
        match name {
            "set1" => Ok(Self::SET1),
            "set2" => Ok(Self::SET2),
            other => Err(NcaError::UnknownPreset(other.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), NcaError> {
        if self.n_pkt_update == 0 {
            return Err(NcaError::Invalid("n_pkt_update must be positive"));
        }
        for f in [self.t_high, self.t_low, self.alpha_incr, self.alpha_decr] {
            if f.den == 0 {
                return Err(NcaError::Invalid("zero denominator"));
            }
        }
        if !self.t_low.lt(self.t_high) {
            return Err(NcaError::Invalid("t_low must be below t_high"));
        }
        if self.alpha_incr.cmp_one().is_le() {
            return Err(NcaError::Invalid("alpha_incr must exceed 1"));
        }
        if self.alpha_decr.cmp_one().is_ge() || self.alpha_decr.num == 0 {
            return Err(NcaError::Invalid("alpha_decr must lie in (0, 1)"));
        }
        if !(self.min_delay <= self.initial_delay && self.initial_delay <= self.max_delay) {
            return Err(NcaError::Invalid("need min_delay <= initial_delay <= max_delay"));
        }
        Ok(())
    }

    fn clamp(&self, delay: Nanos) -> Nanos {
        delay.clamp(self.min_delay, self.max_delay)
    }
}

impl Default for NcaParams {
    fn default() -> Self {
        Self::SET1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adjustment {
    Increased,
    Decreased,
    Held,
}

/// Result of one completed update window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowOutcome {
    pub sent: u64,
    pub resent: u64,
    pub adjustment: Adjustment,
    pub delay: Nanos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NcaState {
    delay: Nanos,
    c_pkt_sent: u64,
    c_pkt_rsnt: u64,
}

impl NcaState {
    pub fn new(params: &NcaParams) -> Self {
        NcaState {
            delay: params.clamp(params.initial_delay),
            c_pkt_sent: 0,
            c_pkt_rsnt: 0,
        }
    }

    /// State with an explicit delay, clamped into the parameter bounds.
    pub fn with_delay(params: &NcaParams, delay: Nanos) -> Self {
        NcaState { delay: params.clamp(delay), c_pkt_sent: 0, c_pkt_rsnt: 0 }
    }

    pub fn delay(&self) -> Nanos {
        self.delay
    }

    pub fn sent_in_window(&self) -> u64 {
        self.c_pkt_sent
    }

    pub fn resent_in_window(&self) -> u64 {
        self.c_pkt_rsnt
    }

    pub fn record_transmission(&mut self, params: &NcaParams, is_resend: bool) -> Option<WindowOutcome> {
        self.c_pkt_sent += 1;
        if is_resend {
            self.c_pkt_rsnt += 1;
        }
        if self.c_pkt_sent < u64::from(params.n_pkt_update) {
            return None;
        }
        let (sent, resent) = (self.c_pkt_sent, self.c_pkt_rsnt);
        let adjustment = if params.t_high.is_exceeded_by(resent, sent) {
            self.delay = params.clamp(params.alpha_incr.scale(self.delay));
            Adjustment::Increased
        } else if params.t_low.is_above(resent, sent) {
            self.delay = params.clamp(params.alpha_decr.scale(self.delay));
            Adjustment::Decreased
        } else {
            Adjustment::Held
        };
        self.c_pkt_sent = 0;
        self.c_pkt_rsnt = 0;
        Some(WindowOutcome { sent, resent, adjustment, delay: self.delay })
    }

    pub fn earliest_next_transmit(&self, last_transmit: Nanos) -> Nanos {
        last_transmit.saturating_add(self.delay)
    }

    /// Current delay in whole microseconds, rounded half-up, as carried in Data frames.
    pub fn reported_delay_us(&self) -> u32 {
        u32::try_from(self.delay.saturating_add(500) / 1000).unwrap_or(u32::MAX)
    }
}
