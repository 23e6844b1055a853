//! Reliable transport of data-acquisition streams over raw Ethernet frames
//! with EtherType 0xfade.
//!
//! - [`wire`]: frame encoding and sequence-number arithmetic
//! - [`sender`]: the front-end board's packet buffers and descriptor manager
//! - [`nca`]: adaptive inter-packet delay (congestion avoidance)
//! - [`receiver`]: host protocol handler and consumer ring buffers

pub mod nca;
pub mod receiver;
pub mod sender;
pub mod wire;

/// Virtual time and durations, in nanoseconds.
pub type Nanos = u64;

pub use nca::{Fraction, NcaParams, NcaState};
pub use receiver::{ReceiverCore, RxAction, RxError, RxReply};
pub use sender::{Command, SendAction, SenderCore};
pub use wire::{Frame, FrameBody, FrameKind, MacAddr, SeqNum, WireError};
