//! Deterministic payload streams used both to feed the senders and to verify
//! what the consumer receives.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BLOCK: usize = 4096;

/// Endless pseudo-random byte stream selected by `(seed, stream)`.
///
/// Bytes are produced in fixed-size blocks, so the output does not depend on
/// how callers slice their reads.
pub struct OracleStream {
    rng: ChaCha8Rng,
    block: Box<[u8; BLOCK]>,
    pos: usize,
    produced: u64,
}

impl OracleStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        OracleStream { rng, block: Box::new([0; BLOCK]), pos: BLOCK, produced: 0 }
    }

    /// Bytes handed out so far.
    pub fn position(&self) -> u64 {
        self.produced
    }

    pub fn fill(&mut self, out: &mut [u8]) {
        let mut done = 0;
        while done < out.len() {
            if self.pos == BLOCK {
                self.rng.fill_bytes(&mut self.block[..]);
                self.pos = 0;
            }
            let n = (BLOCK - self.pos).min(out.len() - done);
            out[done..done + n].copy_from_slice(&self.block[self.pos..self.pos + n]);
            self.pos += n;
            done += n;
        }
        self.produced += out.len() as u64;
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("stream length {0} is not a multiple of 4 bytes")]
pub struct UnalignedLength(pub u64);

/// The first `length` bytes of stream 0 for `seed`.
pub fn oracle_stream(seed: u64, length: u64) -> Result<Vec<u8>, UnalignedLength> {
    if !length.is_multiple_of(4) {
        return Err(UnalignedLength(length));
    }
    let mut out = vec![0u8; length as usize];
    OracleStream::new(seed, 0).fill(&mut out);
    Ok(out)
}

/// Compares received bytes against the oracle, remembering the first mismatch.
pub struct StreamVerifier {
    oracle: OracleStream,
    scratch: Vec<u8>,
    checked: u64,
    first_mismatch: Option<u64>,
}

impl StreamVerifier {
    pub fn new(seed: u64, stream: u64) -> Self {
        StreamVerifier { oracle: OracleStream::new(seed, stream), scratch: Vec::new(), checked: 0, first_mismatch: None }
    }

    pub fn accept(&mut self, data: &[u8]) {
        if data.is_empty() {
            return;
        }
        self.scratch.resize(data.len(), 0);
        self.oracle.fill(&mut self.scratch);
        if self.first_mismatch.is_none() {
            if let Some(i) = data.iter().zip(&self.scratch).position(|(a, b)| a != b) {
                self.first_mismatch = Some(self.checked + i as u64);
            }
        }
        self.checked += data.len() as u64;
    }

    pub fn checked(&self) -> u64 {
        self.checked
    }

    pub fn first_mismatch(&self) -> Option<u64> {
        self.first_mismatch
    }

    pub fn intact(&self) -> bool {
        self.first_mismatch.is_none()
    }
}
