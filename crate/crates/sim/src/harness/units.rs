//! Human-friendly durations and bit rates for scenario files.
//!
//! Durations are either integers (nanoseconds) or strings such as `"3us"`,
//! `"0.5ms"` or `"60s"`. Rates are integers (bit/s) or strings such as
//! `"100M"`, `"1Gbps"` or `"2.5G"`. Decimal parts are handled exactly.

use std::fmt;

use fade_core::Nanos;
use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;

fn parse_scaled(number: &str, scale: u128) -> Option<u128> {
    let (int, frac) = number.split_once('.').unwrap_or((number, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit() || b == b'_') {
        return None;
    }
    let digits = |s: &str| s.chars().filter(|c| *c != '_').collect::<String>();
    let (int, frac) = (digits(int), digits(frac));
    let whole: u128 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let mut value = whole.checked_mul(scale)?;
    if !frac.is_empty() {
        let den = 10u128.checked_pow(frac.len() as u32)?;
        let part: u128 = frac.parse().ok()?;
        let scaled = part.checked_mul(scale)?;
        if scaled % den != 0 {
            return None;
        }
        value = value.checked_add(scaled / den)?;
    }
    Some(value)
}

fn split_unit(s: &str) -> (&str, &str) {
    let at = s.find(|c: char| !(c.is_ascii_digit() || c == '.' || c == '_')).unwrap_or(s.len());
    (s[..at].trim(), s[at..].trim())
}

/// Parses a duration string into nanoseconds. A bare number is nanoseconds.
pub fn parse_duration(s: &str) -> Result<Nanos, String> {
    let (number, unit) = split_unit(s.trim());
    let scale: u128 = match unit {
        "" | "ns" => 1,
        "us" | "µs" => 1_000,
        "ms" => 1_000_000,
        "s" => 1_000_000_000,
        other => return Err(format!("unknown duration unit {other:?} in {s:?}")),
    };
    parse_scaled(number, scale)
        .and_then(|v| Nanos::try_from(v).ok())
        .ok_or_else(|| format!("invalid duration {s:?} (must be a whole number of nanoseconds)"))
}

/// Parses a bit rate string into bit/s.
pub fn parse_rate(s: &str) -> Result<u64, String> {
    let (number, unit) = split_unit(s.trim());
    let unit = unit.strip_suffix("bps").or_else(|| unit.strip_suffix("b/s")).unwrap_or(unit);
    let scale: u128 = match unit {
        "" => 1,
        "k" | "K" => 1_000,
        "M" => 1_000_000,
        "G" => 1_000_000_000,
        other => return Err(format!("unknown rate unit {other:?} in {s:?}")),
    };
    parse_scaled(number, scale)
        .and_then(|v| u64::try_from(v).ok())
        .ok_or_else(|| format!("invalid rate {s:?}"))
}

pub fn format_duration(ns: Nanos) -> String {
    const UNITS: [(u64, &str); 3] = [(1_000_000_000, "s"), (1_000_000, "ms"), (1_000, "us")];
    for (scale, unit) in UNITS {
        if ns >= scale && ns.is_multiple_of(scale) {
            return format!("{}{unit}", ns / scale);
        }
    }
    format!("{ns}ns")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Duration(pub Nanos);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Rate(pub u64);

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_duration(self.0))
    }
}

struct NumberOrString<T> {
    expecting: &'static str,
    parse: fn(&str) -> Result<u64, String>,
    wrap: fn(u64) -> T,
}

impl<T> Visitor<'_> for NumberOrString<T> {
    type Value = T;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(self.expecting)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<T, E> {
        Ok((self.wrap)(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<T, E> {
        u64::try_from(v).map(self.wrap).map_err(|_| E::custom(format!("{v} is negative")))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<T, E> {
        // 1e9 and friends come through as floats
        if v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 {
            Ok((self.wrap)(v as u64))
        } else {
            Err(E::custom(format!("{v} is not a whole non-negative number")))
        }
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<T, E> {
        (self.parse)(v).map(self.wrap).map_err(E::custom)
    }
}

impl<'de> Deserialize<'de> for Duration {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(NumberOrString {
            expecting: "nanoseconds or a duration string like \"3us\"",
            parse: parse_duration,
            wrap: Duration,
        })
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(NumberOrString { expecting: "bit/s or a rate string like \"1G\"", parse: parse_rate, wrap: Rate })
    }
}
