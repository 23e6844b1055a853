//! Frame layout of the 0xfade protocol.
//!
//! Every frame starts with a standard Ethernet header (destination MAC,
//! source MAC, EtherType) followed by a 16-bit type word. Data and ACK frames
//! then carry the packed sequence word; Data frames add the sender's current
//! inter-packet delay and exactly [`PAYLOAD_LEN`] bytes of payload. Control
//! frames and ACKs are zero-padded to [`MIN_FRAME_LEN`] bytes. All multi-byte
//! fields are big-endian. The FCS is not serialized.

use std::fmt;

use thiserror::Error;

/// EtherType identifying this protocol.
pub const ETHERTYPE: u16 = 0xfade;
/// Packets per data set, and packet buffers in the sender's memory.
pub const N_PKTS: usize = 32;
/// Payload bytes carried by one Data frame.
pub const PAYLOAD_LEN: usize = 1024;
/// Bytes in one complete data set.
pub const SET_LEN: usize = N_PKTS * PAYLOAD_LEN;
/// Encoded size of Start, Stop and Ack frames.
pub const MIN_FRAME_LEN: usize = 64;
/// Encoded size of a Data frame.
pub const DATA_FRAME_LEN: usize = ETH_HEADER_LEN + 2 + 4 + 4 + PAYLOAD_LEN;
/// Standard Ethernet MTU including header; Data frames must stay below it.
pub const ETH_MAX_FRAME_LEN: usize = 1518;

const ETH_HEADER_LEN: usize = 14;

const TYPE_START: u16 = 0x0001;
const TYPE_ACK: u16 = 0x0003;
const TYPE_STOP: u16 = 0x0005;
const TYPE_DATA: u16 = 0xa5a5;

const RETRY_LIMIT: u16 = 1 << 10;
const PKT_FIELD_LIMIT: u8 = 1 << 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("invalid sequence field: {0}")]
    InvalidField(&'static str),
    #[error("packet number {0} out of range (protocol uses {N_PKTS} buffers)")]
    PacketOutOfRange(u8),
    #[error("frame truncated: {0} bytes")]
    Truncated(usize),
    #[error("not a 0xfade frame (EtherType {0:#06x})")]
    ForeignEtherType(u16),
    #[error("unknown frame type word {0:#06x}")]
    UnknownType(u16),
    #[error("data frame has length {0}, expected {DATA_FRAME_LEN}")]
    BadDataLength(usize),
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MacAddr(pub [u8; 6]);

impl MacAddr {
    pub const fn new(octets: [u8; 6]) -> Self {
        MacAddr(octets)
    }

    pub fn octets(&self) -> [u8; 6] {
        self.0
    }
}

impl fmt::Display for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = &self.0;
        write!(
            f,
            "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
            o[0], o[1], o[2], o[3], o[4], o[5]
        )
    }
}

impl fmt::Debug for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MacAddr({self})")
    }
}

impl std::str::FromStr for MacAddr {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut octets = [0u8; 6];
        let mut parts = s.split([':', '-']);
        for o in octets.iter_mut() {
            let part = parts.next().ok_or_else(|| format!("MAC address too short: {s:?}"))?;
            if part.len() != 2 {
                return Err(format!("bad MAC octet {part:?} in {s:?}"));
            }
            *o = u8::from_str_radix(part, 16).map_err(|_| format!("bad MAC octet {part:?} in {s:?}"))?;
        }
        if parts.next().is_some() {
            return Err(format!("MAC address too long: {s:?}"));
        }
        Ok(MacAddr(octets))
    }
}

/// Sequence identifier of a packet: data set, retry counter and packet index.
///
/// Packs into one 32-bit word as `[31:16]=set`, `[15:6]=retry`, `[5:0]=pkt`.
/// The retry field is reserved and always transmitted as zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SeqNum {
    pub set: u16,
    pub retry: u16,
    pub pkt: u8,
}

impl SeqNum {
    pub const fn new(set: u16, pkt: u8) -> Self {
        SeqNum { set, retry: 0, pkt }
    }
}

impl fmt::Display for SeqNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.set, self.pkt)
    }
}

pub fn pack_seq(seq: SeqNum) -> Result<u32, WireError> {
    if seq.pkt >= PKT_FIELD_LIMIT {
        return Err(WireError::InvalidField("pkt does not fit in 6 bits"));
    }
    if seq.retry >= RETRY_LIMIT {
        return Err(WireError::InvalidField("retry does not fit in 10 bits"));
    }
    Ok((u32::from(seq.set) << 16) | (u32::from(seq.retry) << 6) | u32::from(seq.pkt))
}

pub fn unpack_seq(word: u32) -> Result<SeqNum, WireError> {
    let pkt = (word & 0x3f) as u8;
    if usize::from(pkt) >= N_PKTS {
        return Err(WireError::PacketOutOfRange(pkt));
    }
    Ok(SeqNum {
        set: (word >> 16) as u16,
        retry: ((word >> 6) & 0x3ff) as u16,
        pkt,
    })
}

/// Signed distance from `from_set` to `to_set` on the 16-bit set-number circle.
pub fn set_distance(from_set: u16, to_set: u16) -> i32 {
    i32::from(to_set.wrapping_sub(from_set) as i16)
}

#[derive(Clone, PartialEq, Eq)]
pub enum FrameBody {
    Start,
    Stop,
    Ack { seq: SeqNum },
    Data { seq: SeqNum, delay_us: u32, payload: Box<[u8; PAYLOAD_LEN]> },
}

impl fmt::Debug for FrameBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameBody::Start => f.write_str("Start"),
            FrameBody::Stop => f.write_str("Stop"),
            FrameBody::Ack { seq } => write!(f, "Ack({seq})"),
            FrameBody::Data { seq, delay_us, .. } => write!(f, "Data({seq}, delay={delay_us}us)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameKind {
    Start,
    Stop,
    Ack,
    Data,
}

impl fmt::Display for FrameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrameKind::Start => "start",
            FrameKind::Stop => "stop",
            FrameKind::Ack => "ack",
            FrameKind::Data => "data",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub dst: MacAddr,
    pub src: MacAddr,
    pub body: FrameBody,
}

impl Frame {
    pub fn start(dst: MacAddr, src: MacAddr) -> Self {
        Frame { dst, src, body: FrameBody::Start }
    }

    pub fn stop(dst: MacAddr, src: MacAddr) -> Self {
        Frame { dst, src, body: FrameBody::Stop }
    }

    pub fn ack(dst: MacAddr, src: MacAddr, seq: SeqNum) -> Self {
        Frame { dst, src, body: FrameBody::Ack { seq } }
    }

    pub fn data(dst: MacAddr, src: MacAddr, seq: SeqNum, delay_us: u32, payload: Box<[u8; PAYLOAD_LEN]>) -> Self {
        Frame { dst, src, body: FrameBody::Data { seq, delay_us, payload } }
    }

    pub fn kind(&self) -> FrameKind {
        match self.body {
            FrameBody::Start => FrameKind::Start,
            FrameBody::Stop => FrameKind::Stop,
            FrameBody::Ack { .. } => FrameKind::Ack,
            FrameBody::Data { .. } => FrameKind::Data,
        }
    }

    pub fn seq(&self) -> Option<SeqNum> {
        match &self.body {
            FrameBody::Ack { seq } | FrameBody::Data { seq, .. } => Some(*seq),
            _ => None,
        }
    }

    /// Number of bytes this frame occupies on the wire.
    pub fn wire_len(&self) -> usize {
        match self.body {
            FrameBody::Data { .. } => DATA_FRAME_LEN,
            _ => MIN_FRAME_LEN,
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>, WireError> {
        let mut out = Vec::with_capacity(self.wire_len());
        self.encode_into(&mut out)?;
        Ok(out)
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) -> Result<(), WireError> {
        let start = out.len();
        out.extend_from_slice(&self.dst.0);
        out.extend_from_slice(&self.src.0);
        out.extend_from_slice(&ETHERTYPE.to_be_bytes());
        match &self.body {
            FrameBody::Start => out.extend_from_slice(&TYPE_START.to_be_bytes()),
            FrameBody::Stop => out.extend_from_slice(&TYPE_STOP.to_be_bytes()),
            FrameBody::Ack { seq } => {
                out.extend_from_slice(&TYPE_ACK.to_be_bytes());
                out.extend_from_slice(&pack_seq(*seq)?.to_be_bytes());
            }
            FrameBody::Data { seq, delay_us, payload } => {
                out.extend_from_slice(&TYPE_DATA.to_be_bytes());
                out.extend_from_slice(&pack_seq(*seq)?.to_be_bytes());
                out.extend_from_slice(&delay_us.to_be_bytes());
                out.extend_from_slice(&payload[..]);
            }
        }
        if out.len() - start < MIN_FRAME_LEN {
            out.resize(start + MIN_FRAME_LEN, 0);
        }
        Ok(())
    }

    pub fn decode(bytes: &[u8]) -> Result<Frame, WireError> {
        if bytes.len() < MIN_FRAME_LEN {
            return Err(WireError::Truncated(bytes.len()));
        }
        let ethertype = be16(&bytes[12..14]);
        if ethertype != ETHERTYPE {
            return Err(WireError::ForeignEtherType(ethertype));
        }
        let dst = MacAddr(bytes[0..6].try_into().unwrap());
        let src = MacAddr(bytes[6..12].try_into().unwrap());
        let body = match be16(&bytes[14..16]) {
            TYPE_START => FrameBody::Start,
            TYPE_STOP => FrameBody::Stop,
            TYPE_ACK => FrameBody::Ack { seq: unpack_seq(be32(&bytes[16..20]))? },
            TYPE_DATA => {
                if bytes.len() != DATA_FRAME_LEN {
                    return Err(WireError::BadDataLength(bytes.len()));
                }
                let seq = unpack_seq(be32(&bytes[16..20]))?;
                let delay_us = be32(&bytes[20..24]);
                let mut payload = Box::new([0u8; PAYLOAD_LEN]);
                payload.copy_from_slice(&bytes[24..]);
                FrameBody::Data { seq, delay_us, payload }
            }
            other => return Err(WireError::UnknownType(other)),
        };
        Ok(Frame { dst, src, body })
    }
}

fn be16(b: &[u8]) -> u16 {
    u16::from_be_bytes([b[0], b[1]])
}

fn be32(b: &[u8]) -> u32 {
    u32::from_be_bytes([b[0], b[1], b[2], b[3]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const A: MacAddr = MacAddr([0x02, 0, 0, 0, 0, 0x01]);
    const B: MacAddr = MacAddr([0x02, 0, 0, 0, 0, 0x02]);

    /// Independent bit-layout oracle.
    fn layout(set: u32, retry: u32, pkt: u32) -> u32 {
        (set << 16) | (retry << 6) | pkt
    }

    #[test]
    fn pack_examples() {
        assert_eq!(pack_seq(SeqNum::new(0, 0)).unwrap(), 0);
        assert_eq!(pack_seq(SeqNum::new(1, 31)).unwrap(), 0x0001_001F);
        assert_eq!(pack_seq(SeqNum::new(1, 31)).unwrap(), layout(1, 0, 31));
        assert_eq!(pack_seq(SeqNum::new(0xFFFF, 5)).unwrap(), 0xFFFF_0005);
        assert_eq!(pack_seq(SeqNum::new(0xFFFF, 5)).unwrap(), layout(0xFFFF, 0, 5));
    }

    #[test]
    fn pack_rejects_wide_fields() {
        assert!(matches!(pack_seq(SeqNum::new(0, 64)), Err(WireError::InvalidField(_))));
        let seq = SeqNum { set: 0, retry: 1024, pkt: 0 };
        assert!(matches!(pack_seq(seq), Err(WireError::InvalidField(_))));
        // 6-bit field holds 32..63 even though the protocol never uses them
        assert_eq!(pack_seq(SeqNum::new(0, 63)).unwrap(), 63);
    }

    #[test]
    fn unpack_examples() {
        assert_eq!(unpack_seq(0).unwrap(), SeqNum::new(0, 0));
        assert_eq!(unpack_seq(0x0001_001F).unwrap(), SeqNum::new(1, 31));
        assert_eq!(unpack_seq(0x0000_0020), Err(WireError::PacketOutOfRange(32)));
        let s = unpack_seq(layout(7, 1023, 3)).unwrap();
        assert_eq!((s.set, s.retry, s.pkt), (7, 1023, 3));
    }

    #[test]
    fn set_distance_examples() {
        assert_eq!(set_distance(5, 5), 0);
        assert_eq!(set_distance(0xFFFF, 0), 1);
        assert_eq!(set_distance(0, 0xFFFF), -1);
        assert_eq!(set_distance(0, 0x8000), -32768);
        assert_eq!(set_distance(0, 0x7FFF), 32767);
    }

    #[test]
    fn start_frame_layout() {
        let bytes = Frame::start(A, B).encode().unwrap();
        assert_eq!(bytes.len(), 64);
        assert_eq!(&bytes[0..6], &A.0);
        assert_eq!(&bytes[6..12], &B.0);
        assert_eq!(&bytes[12..16], &[0xFA, 0xDE, 0x00, 0x01]);
        assert!(bytes[16..].iter().all(|&b| b == 0));
    }

    #[test]
    fn ack_frame_layout() {
        let bytes = Frame::ack(A, B, SeqNum::new(2, 7)).encode().unwrap();
        assert_eq!(bytes.len(), 64);
        assert_eq!(&bytes[12..20], &[0xFA, 0xDE, 0x00, 0x03, 0x00, 0x02, 0x00, 0x07]);
    }

    #[test]
    fn data_frame_length() {
        let f = Frame::data(A, B, SeqNum::new(0, 0), 200, Box::new([0xAB; PAYLOAD_LEN]));
        let bytes = f.encode().unwrap();
        assert_eq!(bytes.len(), 14 + 2 + 4 + 4 + 1024);
        assert_eq!(bytes.len(), DATA_FRAME_LEN);
        assert!(bytes.len() < ETH_MAX_FRAME_LEN);
        assert_eq!(&bytes[14..16], &[0xA5, 0xA5]);
        assert_eq!(&bytes[20..24], &200u32.to_be_bytes());
    }

    #[test]
    fn decode_errors() {
        assert_eq!(Frame::decode(&[0u8; 63]), Err(WireError::Truncated(63)));

        let mut bytes = Frame::stop(A, B).encode().unwrap();
        bytes[15] = 0x02;
        assert_eq!(Frame::decode(&bytes), Err(WireError::UnknownType(0x0002)));

        bytes[12] = 0x08;
        bytes[13] = 0x00;
        assert_eq!(Frame::decode(&bytes), Err(WireError::ForeignEtherType(0x0800)));

        let mut data = Frame::data(A, B, SeqNum::new(0, 0), 1, Box::new([0; PAYLOAD_LEN])).encode().unwrap();
        data.pop();
        assert_eq!(Frame::decode(&data), Err(WireError::BadDataLength(DATA_FRAME_LEN - 1)));

        let mut ack = Frame::ack(A, B, SeqNum::new(0, 0)).encode().unwrap();
        ack[19] = 40;
        assert_eq!(Frame::decode(&ack), Err(WireError::PacketOutOfRange(40)));
    }

    #[test]
    fn mac_parse_and_display() {
        let m: MacAddr = "02:00:00:00:00:0a".parse().unwrap();
        assert_eq!(m, MacAddr([2, 0, 0, 0, 0, 10]));
        assert_eq!(m.to_string(), "02:00:00:00:00:0a");
        assert!("02:00:00:00:00".parse::<MacAddr>().is_err());
        assert!("02:00:00:00:00:00:01".parse::<MacAddr>().is_err());
        assert!("zz:00:00:00:00:00".parse::<MacAddr>().is_err());
    }

    fn arb_seq() -> impl Strategy<Value = SeqNum> {
        (any::<u16>(), 0u16..1024, 0u8..32).prop_map(|(set, retry, pkt)| SeqNum { set, retry, pkt })
    }

    fn arb_frame() -> impl Strategy<Value = Frame> {
        let mac = any::<[u8; 6]>().prop_map(MacAddr);
        let body = prop_oneof![
            Just(FrameBody::Start),
            Just(FrameBody::Stop),
            arb_seq().prop_map(|seq| FrameBody::Ack { seq }),
            (arb_seq(), any::<u32>(), proptest::collection::vec(any::<u8>(), PAYLOAD_LEN)).prop_map(
                |(seq, delay_us, p)| FrameBody::Data {
                    seq,
                    delay_us,
                    payload: Box::new(p.try_into().unwrap()),
                }
            ),
        ];
        (mac.clone(), mac, body).prop_map(|(dst, src, body)| Frame { dst, src, body })
    }

    proptest! {
        #[test]
        fn frame_round_trip(f in arb_frame()) {
            let bytes = f.encode().unwrap();
            prop_assert_eq!(bytes.len(), f.wire_len());
            prop_assert_eq!(Frame::decode(&bytes).unwrap(), f);
        }

        #[test]
        fn seq_round_trip(s in arb_seq()) {
            prop_assert_eq!(unpack_seq(pack_seq(s).unwrap()).unwrap(), s);
        }

        #[test]
        fn set_distance_antisymmetric(a in any::<u16>(), b in any::<u16>()) {
            let d = set_distance(a, b);
            prop_assert!((-32768..=32767).contains(&d));
            prop_assert_eq!(i64::from(b), (i64::from(a) + i64::from(d)).rem_euclid(65536));
            if d != -32768 {
                prop_assert_eq!(set_distance(b, a), -d);
            }
        }
    }
}
