//! Discrete-event model of the test bed.

pub mod link;
pub mod network;
pub mod queue;
pub mod rng;
pub mod source;
pub mod switch;

pub use link::{Link, LinkParams, LinkStats};
pub use network::{ConsumerMode, LatencyStats, Network, NetworkConfig, SenderMetrics, SenderNode, SenderSpec};
pub use queue::EventQueue;
pub use rng::SimRng;
pub use source::{TrafficPattern, TrafficSource};
pub use switch::{EgressPort, Switch, SwitchParams};
