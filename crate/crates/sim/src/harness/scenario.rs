//! Scenario files: what to simulate, described in TOML.
//!
//! ```toml
//! seed = 7
//! duration = "2s"
//! warmup = "100ms"            # default: 5% of duration
//!
//! [switch]
//! egress_queue_frames = 16
//!
//! [receiver]
//! mac = "02:00:00:00:00:ff"
//! per_frame_processing = "3us"
//! ring_sets = 4
//! wakeup_threshold = 0
//! link = { rate_bps = "1G", propagation = "1us" }
//!
//! [consumer]
//! mode = "immediate"           # or "delayed" with consume_latency
//!
//! [[senders]]
//! mac = "02:00:00:00:01:01"
//! nca = "set1"                 # or a table of parameters
//! link = { rate_bps = "1G", loss_prob = 0.01 }
//! source = { mode = "unlimited", limit_bytes = 10_000_000 }
//! ```
//!
//! Unknown keys are rejected. Semantic checks happen in
//! [`Scenario::validate`], which reports every problem with its field path.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use fade_core::receiver::{DEFAULT_RING_SETS, MIN_RING_SETS};
use fade_core::{MacAddr, Nanos, NcaParams};
use serde::Deserialize;
use thiserror::Error;

use super::units::{Duration, Rate};
use crate::netsim::{ConsumerMode, LinkParams, TrafficPattern};

pub const DEFAULT_RECEIVER_MAC: MacAddr = MacAddr([0x02, 0, 0, 0, 0, 0xff]);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {message}")]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigErrors(pub Vec<FieldError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&lines.join("\n"))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub duration: Duration,
    pub warmup: Option<Duration>,
    /// Records NCA delays and delivered bytes at this interval.
    pub sample_interval: Option<Duration>,
    #[serde(default)]
    pub switch: SwitchConfig,
    #[serde(default)]
    pub receiver: ReceiverConfig,
    #[serde(default)]
    pub consumer: ConsumerConfig,
    pub senders: Vec<SenderConfig>,
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchConfig {
    #[serde(default = "default_queue")]
    pub egress_queue_frames: usize,
}

fn default_queue() -> usize {
    16
}

impl Default for SwitchConfig {
    fn default() -> Self {
        SwitchConfig { egress_queue_frames: default_queue() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverConfig {
    pub mac: Option<String>,
    #[serde(default = "default_processing")]
    pub per_frame_processing: Duration,
    #[serde(default = "default_ring_sets")]
    pub ring_sets: usize,
    #[serde(default)]
    pub wakeup_threshold: u64,
    /// Interval for repeating a START that never reached its sender; `0` disables it.
    #[serde(default = "default_start_retry")]
    pub start_retry: Duration,
    #[serde(default)]
    pub link: LinkConfig,
}

fn default_start_retry() -> Duration {
    Duration(10_000_000)
}

fn default_processing() -> Duration {
    Duration(3_000)
}

fn default_ring_sets() -> usize {
    DEFAULT_RING_SETS
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        ReceiverConfig {
            mac: None,
            per_frame_processing: default_processing(),
            ring_sets: default_ring_sets(),
            wakeup_threshold: 0,
            start_retry: default_start_retry(),
            link: LinkConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ConsumerKind {
    #[default]
    Immediate,
    Delayed,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsumerConfig {
    #[serde(default)]
    pub mode: ConsumerKind,
    pub consume_latency: Option<Duration>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    #[serde(default = "default_rate")]
    pub rate_bps: Rate,
    #[serde(default)]
    pub propagation: Duration,
    #[serde(default)]
    pub loss_prob: f64,
    #[serde(default)]
    pub dup_prob: f64,
    #[serde(default)]
    pub reorder_jitter: Duration,
    pub seed: Option<u64>,
}

fn default_rate() -> Rate {
    Rate(1_000_000_000)
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            rate_bps: default_rate(),
            propagation: Duration(0),
            loss_prob: 0.0,
            dup_prob: 0.0,
            reorder_jitter: Duration(0),
            seed: None,
        }
    }
}

impl LinkConfig {
    pub fn params(&self) -> LinkParams {
        LinkParams {
            rate_bps: self.rate_bps.0,
            propagation: self.propagation.0,
            loss_prob: self.loss_prob,
            dup_prob: self.dup_prob,
            reorder_jitter: self.reorder_jitter.0,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SourceMode {
    #[default]
    Unlimited,
    ConstantRate,
    Burst,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    #[serde(default)]
    pub mode: SourceMode,
    pub rate_bps: Option<Rate>,
    pub burst_bytes: Option<u64>,
    pub burst_period: Option<Duration>,
    /// Total stream length; the stream is open-ended when absent.
    pub limit_bytes: Option<u64>,
}

/// A fraction written as `"1/16"`, `"0.9375"` or a number.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FractionValue {
    Text(String),
    Integer(u64),
    Float(f64),
}

impl FractionValue {
    fn text(&self) -> String {
        match self {
            FractionValue::Text(s) => s.clone(),
            FractionValue::Integer(v) => v.to_string(),
            FractionValue::Float(v) => v.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NcaTable {
    /// Starting point for the fields given below; `set1` if absent.
    pub preset: Option<String>,
    pub n_pkt_update: Option<u32>,
    pub t_high: Option<FractionValue>,
    pub t_low: Option<FractionValue>,
    pub alpha_incr: Option<FractionValue>,
    pub alpha_decr: Option<FractionValue>,
    pub initial_delay: Option<Duration>,
    pub min_delay: Option<Duration>,
    pub max_delay: Option<Duration>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum NcaConfig {
    Preset(String),
    Table(NcaTable),
}

impl Default for NcaConfig {
    fn default() -> Self {
        NcaConfig::Preset("set1".into())
    }
}

impl NcaConfig {
    /// Resolves to parameters; errors carry the sub-path below the `nca` key.
    pub fn resolve(&self) -> Result<NcaParams, FieldError> {
        let err = |path: &str, message: String| FieldError { path: path.to_string(), message };
        let table = match self {
            NcaConfig::Preset(name) => return NcaParams::preset(name).map_err(|e| err("", e.to_string())),
            NcaConfig::Table(t) => t,
        };
        let mut p = match &table.preset {
            Some(name) => NcaParams::preset(name).map_err(|e| err("preset", e.to_string()))?,
            None => NcaParams::SET1,
        };
        if let Some(n) = table.n_pkt_update {
            p.n_pkt_update = n;
        }
        let fractions = [
            ("t_high", &table.t_high, &mut p.t_high),
            ("t_low", &table.t_low, &mut p.t_low),
            ("alpha_incr", &table.alpha_incr, &mut p.alpha_incr),
            ("alpha_decr", &table.alpha_decr, &mut p.alpha_decr),
        ];
        for (name, value, slot) in fractions {
            if let Some(v) = value {
                *slot = FromStr::from_str(&v.text()).map_err(|e: fade_core::nca::NcaError| err(name, e.to_string()))?;
            }
        }
        for (value, slot) in [
            (table.initial_delay, &mut p.initial_delay),
            (table.min_delay, &mut p.min_delay),
            (table.max_delay, &mut p.max_delay),
        ] {
            if let Some(v) = value {
                *slot = v.0;
            }
        }
        p.validate().map_err(|e| err("", e.to_string()))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SenderConfig {
    pub mac: String,
    #[serde(default)]
    pub nca: NcaConfig,
    #[serde(default)]
    pub link: LinkConfig,
    #[serde(default)]
    pub source: SourceConfig,
}

/// A validated sender description.
#[derive(Debug, Clone, PartialEq)]
pub struct SenderPlan {
    pub mac: MacAddr,
    pub nca: NcaParams,
    pub link: LinkParams,
    pub pattern: TrafficPattern,
    pub limit: Option<u64>,
}

/// A validated scenario with everything resolved to simulator types.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub seed: u64,
    pub duration: Nanos,
    pub warmup: Nanos,
    pub sample_interval: Option<Nanos>,
    pub switch_queue_frames: usize,
    pub receiver_mac: MacAddr,
    pub receiver_link: LinkParams,
    pub per_frame_processing: Nanos,
    pub ring_sets: usize,
    pub wakeup_threshold: u64,
    pub start_retry: Option<Nanos>,
    pub consumer: ConsumerMode,
    pub senders: Vec<SenderPlan>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Scenario, toml::de::Error> {
        toml::from_str(text)
    }

    /// Checks the scenario and resolves it, collecting every problem found.
    pub fn validate(&self) -> Result<Plan, ConfigErrors> {
        let mut errors = Vec::new();
        let mut fail = |path: String, message: String| errors.push(FieldError { path, message });

        if self.duration.0 == 0 {
            fail("duration".into(), "must be positive".into());
        }
        let warmup = self.warmup.map_or(self.duration.0 / 20, |w| w.0);
        if self.duration.0 > 0 && warmup >= self.duration.0 {
            fail("warmup".into(), "must be shorter than duration".into());
        }
        if self.sample_interval.is_some_and(|s| s.0 == 0) {
            fail("sample_interval".into(), "must be positive".into());
        }
        if self.switch.egress_queue_frames == 0 {
            fail("switch.egress_queue_frames".into(), "must be at least 1".into());
        }

        let mut macs = BTreeSet::new();
        let receiver_mac = match &self.receiver.mac {
            None => DEFAULT_RECEIVER_MAC,
            Some(s) => s.parse::<MacAddr>().unwrap_or_else(|e| {
                fail("receiver.mac".into(), e.to_string());
                DEFAULT_RECEIVER_MAC
            }),
        };
        macs.insert(receiver_mac);
        if self.receiver.ring_sets < MIN_RING_SETS {
            fail("receiver.ring_sets".into(), format!("must be at least {MIN_RING_SETS}"));
        }
        let receiver_link = self.receiver.link.params();
        if let Err(e) = receiver_link.validate() {
            fail("receiver.link".into(), e);
        }

        let consumer = match (self.consumer.mode, self.consumer.consume_latency) {
            (ConsumerKind::Immediate, None) => ConsumerMode::Immediate,
            (ConsumerKind::Immediate, Some(_)) => {
                fail("consumer.consume_latency".into(), "only applies to mode \"delayed\"".into());
                ConsumerMode::Immediate
            }
            (ConsumerKind::Delayed, Some(l)) => ConsumerMode::Delayed(l.0),
            (ConsumerKind::Delayed, None) => {
                fail("consumer.consume_latency".into(), "required for mode \"delayed\"".into());
                ConsumerMode::Immediate
            }
        };

        if self.senders.is_empty() {
            fail("senders".into(), "at least one sender is required".into());
        }
        let mut senders = Vec::new();
        for (i, s) in self.senders.iter().enumerate() {
            let at = |field: &str| format!("senders[{i}].{field}");
            let mac = match s.mac.parse::<MacAddr>() {
                Ok(m) => {
                    if !macs.insert(m) {
                        fail(at("mac"), format!("{m} is used more than once"));
                    }
                    Some(m)
                }
                Err(e) => {
                    fail(at("mac"), e.to_string());
                    None
                }
            };
            let nca = match s.nca.resolve() {
                Ok(p) => Some(p),
                Err(e) => {
                    let path = if e.path.is_empty() { at("nca") } else { at(&format!("nca.{}", e.path)) };
                    fail(path, e.message);
                    None
                }
            };
            let link = s.link.params();
            if let Err(e) = link.validate() {
                fail(at("link"), e);
            }
            let src = &s.source;
            let pattern = match src.mode {
                SourceMode::Unlimited => Some(TrafficPattern::Unlimited),
                SourceMode::ConstantRate => match src.rate_bps {
                    Some(Rate(r)) if r > 0 => Some(TrafficPattern::ConstantRate { rate_bps: r }),
                    _ => {
                        fail(at("source.rate_bps"), "a positive rate is required for constant-rate".into());
                        None
                    }
                },
                SourceMode::Burst => match (src.burst_bytes, src.burst_period) {
                    (Some(b), Some(p)) if b > 0 && p.0 > 0 => {
                        Some(TrafficPattern::Burst { burst_bytes: b, period: p.0 })
                    }
                    _ => {
                        fail(at("source"), "burst needs positive burst_bytes and burst_period".into());
                        None
                    }
                },
            };
            if let Some(limit) = src.limit_bytes {
                if limit % 4 != 0 {
                    fail(at("source.limit_bytes"), "must be a multiple of 4 (32-bit input words)".into());
                }
            }
            if let (Some(mac), Some(nca), Some(pattern)) = (mac, nca, pattern) {
                senders.push(SenderPlan { mac, nca, link, pattern, limit: src.limit_bytes });
            }
        }

        if !errors.is_empty() {
            return Err(ConfigErrors(errors));
        }
        Ok(Plan {
            seed: self.seed,
            duration: self.duration.0,
            warmup,
            sample_interval: self.sample_interval.map(|d| d.0),
            switch_queue_frames: self.switch.egress_queue_frames,
            receiver_mac,
            receiver_link,
            per_frame_processing: self.receiver.per_frame_processing.0,
            ring_sets: self.receiver.ring_sets,
            wakeup_threshold: self.receiver.wakeup_threshold,
            start_retry: Some(self.receiver.start_retry.0).filter(|&t| t > 0),
            consumer,
            senders,
        })
    }
}
