//! Runs one scenario and summarizes it.

use std::collections::BTreeMap;
use std::io::{self, Write};

use fade_core::wire::{N_PKTS, PAYLOAD_LEN};
use fade_core::Nanos;
use serde::Serialize;
use thiserror::Error;

use super::scenario::{ConfigErrors, Plan, Scenario};
use crate::netsim::{LatencyStats, Network, NetworkConfig, SenderNode, SenderSpec, TrafficSource};
use crate::oracle::{OracleStream, StreamVerifier};

/// Bytes that must be in flight to sustain `rate_bps` when an
/// acknowledgement takes `ack_latency` to come back.
pub fn m_buf_bound(rate_bps: u64, ack_latency: Nanos) -> u64 {
    (u128::from(rate_bps) * u128::from(ack_latency) / 8_000_000_000) as u64
}

/// Sender window in bytes: one set of buffers.
pub const WINDOW_BYTES: u64 = (N_PKTS * PAYLOAD_LEN) as u64;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario:\n{0}")]
    Config(#[from] ConfigErrors),
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("{0}")]
    Sweep(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencySummary {
    pub count: u64,
    pub min_ns: Nanos,
    pub mean_ns: f64,
    pub max_ns: Nanos,
}

impl From<&LatencyStats> for LatencySummary {
    fn from(s: &LatencyStats) -> Self {
        LatencySummary { count: s.count, min_ns: s.min, mean_ns: s.mean(), max_ns: s.max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Integrity {
    pub pass: bool,
    pub checked_bytes: u64,
    pub first_mismatch: Option<u64>,
    /// Whole stream length for finite sources.
    pub expected_bytes: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SenderReport {
    pub mac: String,
    pub bytes_delivered: u64,
    pub bytes_delivered_measured: u64,
    pub throughput_bps: f64,
    /// Counted over the measurement window.
    pub frames_sent: u64,
    pub frames_resent: u64,
    pub resend_ratio: f64,
    pub frames_sent_total: u64,
    pub frames_resent_total: u64,
    pub final_delay_ns: Nanos,
    pub final_delay_us: u32,
    pub nca_windows: u64,
    pub ack_latency: LatencySummary,
    /// Measured from a packet's most recent transmission to its ACK.
    pub round_trip: LatencySummary,
    /// Bytes in flight needed to fill the sender's link at the mean round trip.
    pub m_buf_bytes: u64,
    pub window_limited: bool,
    pub completed_at_ns: Option<Nanos>,
    pub integrity: Integrity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub duration_ns: Nanos,
    pub warmup_ns: Nanos,
    pub stopped_at_ns: Nanos,
    /// Interval the throughput figures are computed over.
    pub measured_ns: Nanos,
    pub senders: Vec<SenderReport>,
    pub throughput_bps: f64,
    pub switch_drops: u64,
    pub switch_unknown_dst: u64,
    pub switch_max_depth: Vec<usize>,
    pub link_drops: u64,
    pub link_duplicates: u64,
    pub receiver: BTreeMap<String, u64>,
    pub events: u64,
    pub integrity: &'static str,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.integrity == "pass"
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// A finished simulation, kept for inspection.
pub struct Simulation {
    pub plan: Plan,
    pub network: Network,
    pub report: RunReport,
}

/// Oracle stream index for sender `i`.
fn stream_id(i: usize) -> u64 {
    i as u64
}

pub fn build_network(plan: &Plan) -> Network {
    let cfg = NetworkConfig {
        seed: plan.seed,
        receiver_mac: plan.receiver_mac,
        receiver_link: plan.receiver_link.clone(),
        switch_queue_frames: plan.switch_queue_frames,
        per_frame_processing: plan.per_frame_processing,
        ring_sets: plan.ring_sets,
        wakeup_threshold: plan.wakeup_threshold,
        consumer: plan.consumer,
        warmup: plan.warmup,
        sample_interval: plan.sample_interval,
        start_retry: plan.start_retry,
    };
    let specs = plan
        .senders
        .iter()
        .enumerate()
        .map(|(i, s)| SenderSpec {
            mac: s.mac,
            link: s.link.clone(),
            nca: s.nca,
            source: TrafficSource::new(s.pattern.clone(), s.limit, OracleStream::new(plan.seed, stream_id(i))),
            verifier: StreamVerifier::new(plan.seed, stream_id(i)),
        })
        .collect();
    Network::new(cfg, specs)
}

pub fn simulate(plan: Plan, trace: Option<Box<dyn Write + Send>>) -> Result<Simulation, HarnessError> {
    let mut network = build_network(&plan);
    if let Some(t) = trace {
        network.set_trace(t)?;
    }
    network.start();
    let stopped = network.run_until(plan.duration)?;
    let report = report(&plan, &network, stopped);
    Ok(Simulation { plan, network, report })
}

pub fn run_scenario(scenario: &Scenario, trace: Option<Box<dyn Write + Send>>) -> Result<RunReport, HarnessError> {
    Ok(simulate(scenario.validate()?, trace)?.report)
}

fn integrity(node: &SenderNode) -> Integrity {
    let v = &node.verifier;
    let expected = node.deliverable();
    let pass = v.intact() && v.checked() == node.metrics.delivered && expected.is_none_or(|e| v.checked() == e);
    Integrity { pass, checked_bytes: v.checked(), first_mismatch: v.first_mismatch(), expected_bytes: expected }
}

fn report(plan: &Plan, net: &Network, stopped: Nanos) -> RunReport {
    // a run that ends before the warm-up is over is measured from the start
    let (from, measured_all) = if stopped > plan.warmup { (plan.warmup, false) } else { (0, true) };
    let measured = (stopped - from).max(1);
    let senders: Vec<SenderReport> = net
        .senders()
        .iter()
        .zip(&plan.senders)
        .map(|(node, sp)| {
            let m = &node.metrics;
            let stats = node.core.stats();
            let in_window = if measured_all { m.delivered } else { m.delivered_after_warmup };
            let (sent, resent) = if measured_all {
                (stats.frames_sent, stats.frames_resent)
            } else {
                (m.sent_after_warmup, m.resent_after_warmup)
            };
            let rtt_mean = m.rtt.mean().round() as Nanos;
            let m_buf = m_buf_bound(sp.link.rate_bps, rtt_mean);
            SenderReport {
                mac: node.core.mac().to_string(),
                bytes_delivered: m.delivered,
                bytes_delivered_measured: in_window,
                throughput_bps: in_window as f64 * 8e9 / measured as f64,
                frames_sent: sent,
                frames_resent: resent,
                resend_ratio: if sent == 0 { 0.0 } else { resent as f64 / sent as f64 },
                frames_sent_total: stats.frames_sent,
                frames_resent_total: stats.frames_resent,
                final_delay_ns: node.core.nca().delay(),
                final_delay_us: node.core.nca().reported_delay_us(),
                nca_windows: stats.nca_windows,
                ack_latency: (&m.ack_latency).into(),
                round_trip: (&m.rtt).into(),
                m_buf_bytes: m_buf,
                window_limited: m_buf > WINDOW_BYTES,
                completed_at_ns: m.completed_at,
                integrity: integrity(node),
            }
        })
        .collect();
    let switch = net.switch();
    let mut link_drops = net.receiver_uplink().stats().dropped;
    let mut link_duplicates = net.receiver_uplink().stats().duplicated;
    for l in net.senders().iter().map(|s| &s.uplink).chain(switch.ports.iter().map(|p| &p.link)) {
        link_drops += l.stats().dropped;
        link_duplicates += l.stats().duplicated;
    }
    let pass = senders.iter().all(|s| s.integrity.pass);
    RunReport {
        seed: plan.seed,
        duration_ns: plan.duration,
        warmup_ns: plan.warmup,
        stopped_at_ns: stopped,
        measured_ns: measured,
        throughput_bps: senders.iter().map(|s| s.throughput_bps).sum(),
        senders,
        switch_drops: switch.drops(),
        switch_unknown_dst: switch.unknown_dst,
        switch_max_depth: switch.ports.iter().map(|p| p.max_depth).collect(),
        link_drops,
        link_duplicates,
        receiver: net.receiver().metrics(),
        events: net.events_processed(),
        integrity: if pass { "pass" } else { "fail" },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m_buf_examples() {
        assert_eq!(m_buf_bound(100_000_000, 7_000_000), 87_500);
        assert_eq!(m_buf_bound(1_000_000_000, 700_000), 87_500);
        assert_eq!(m_buf_bound(1_000_000_000, 0), 0);
        assert_eq!(m_buf_bound(12_345, 0), 0);
    }

    fn scenario(extra: &str) -> Scenario {
        Scenario::from_toml(&format!(
            "duration = \"1s\"\nseed = 3\n{extra}\n[[senders]]\nmac = \"02:00:00:00:01:01\"\nsource = {{ limit_bytes = 1_048_576 }}"
        ))
        .unwrap()
    }

    #[test]
    fn finite_clean_run_passes() {
        let r = run_scenario(&scenario(""), None).unwrap();
        assert!(r.passed());
        let s = &r.senders[0];
        assert_eq!(s.bytes_delivered, 1 << 20);
        assert_eq!(s.integrity.checked_bytes, 1 << 20);
        assert_eq!(s.frames_resent_total, 0);
        assert_eq!(r.stopped_at_ns, s.completed_at_ns.unwrap());
        assert_eq!(s.ack_latency.min_ns, 3_000);
        assert_eq!(r.switch_drops, 0);
    }

    #[test]
    fn lossy_run_still_delivers_everything() {
        let mut sc = scenario("");
        sc.senders[0].link.loss_prob = 0.1;
        sc.receiver.link.loss_prob = 0.1;
        sc.duration = super::super::units::Duration(2_000_000_000);
        let r = run_scenario(&sc, None).unwrap();
        assert!(r.passed(), "{}", r.to_json());
        assert!(r.senders[0].frames_resent_total > 0);
        assert!(r.link_drops > 0);
    }

    #[test]
    fn truncated_run_fails_integrity() {
        let mut sc = scenario("");
        sc.duration = super::super::units::Duration(1_000_000);
        let r = run_scenario(&sc, None).unwrap();
        assert!(!r.passed());
        assert!(r.senders[0].integrity.first_mismatch.is_none());
    }

    #[test]
    fn reports_are_deterministic() {
        let mut sc = scenario("");
        sc.senders[0].link.loss_prob = 0.05;
        sc.senders[0].link.reorder_jitter = super::super::units::Duration(20_000);
        let a = run_scenario(&sc, None).unwrap().to_json();
        let b = run_scenario(&sc, None).unwrap().to_json();
        assert_eq!(a, b);
        sc.seed = 4;
        assert_ne!(a, run_scenario(&sc, None).unwrap().to_json());
    }
}
