//! Encoded frames compared against stored hex dumps.

use std::path::Path;

use fade_core::wire::{FrameBody, PAYLOAD_LEN};
use fade_core::{Frame, FrameKind, MacAddr, SeqNum};

const SENDER: MacAddr = MacAddr([0x02, 0, 0, 0, 0x01, 0x01]);
const HOST: MacAddr = MacAddr([0x02, 0, 0, 0, 0, 0xff]);

fn golden(name: &str) -> Vec<u8> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.hex"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let digits: String = text.split_whitespace().collect();
    hex::decode(digits).expect("golden files hold hex")
}

fn check(name: &str, frame: Frame, len: usize, type_word: [u8; 2]) {
    let expected = golden(name);
    assert_eq!(expected.len(), len);
    assert_eq!(expected[12..16], [0xfa, 0xde, type_word[0], type_word[1]]);
    let encoded = frame.encode().unwrap();
    assert_eq!(hex::encode(&encoded), hex::encode(&expected), "{name} encoding");
    assert_eq!(Frame::decode(&expected).unwrap(), frame, "{name} decoding");
}

#[test]
fn start_frame() {
    check("start", Frame::start(SENDER, HOST), 64, [0x00, 0x01]);
}

#[test]
fn ack_frame() {
    let seq = SeqNum { set: 0x1234, retry: 5, pkt: 17 };
    check("ack", Frame::ack(SENDER, HOST, seq), 64, [0x00, 0x03]);
}

#[test]
fn data_frame() {
    let mut payload = Box::new([0u8; PAYLOAD_LEN]);
    for (i, b) in payload.iter_mut().enumerate() {
        *b = (i * 7 + 3) as u8;
    }
    let frame = Frame::data(HOST, SENDER, SeqNum::new(7, 31), 200, payload);
    check("data", frame.clone(), 1048, [0xa5, 0xa5]);
    let decoded = Frame::decode(&golden("data")).unwrap();
    assert_eq!(decoded.kind(), FrameKind::Data);
    match decoded.body {
        FrameBody::Data { seq, delay_us, .. } => assert_eq!((seq, delay_us), (SeqNum::new(7, 31), 200)),
        other => panic!("unexpected body {other:?}"),
    }
}
