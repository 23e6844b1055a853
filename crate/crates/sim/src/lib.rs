//! Simulation of senders, a switch and a receiving host, plus the tooling
//! to describe, run and sweep experiments.

pub mod netsim;
pub mod oracle;
pub mod harness;
