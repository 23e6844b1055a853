//! Seeded randomness for the simulator.
//!
//! Every random decision draws from a PCG-XSH-RR generator (64-bit state)
//! selected by `(seed, stream)`, so each link gets an independent stream and
//! traces reproduce on any platform.

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg32;

use fade_core::Nanos;

#[derive(Debug, Clone)]
pub struct SimRng(Pcg32);

impl SimRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        // Spread the seed so consecutive seeds start far apart.
        let mut mixer = Pcg32::seed_from_u64(seed);
        SimRng(Pcg32::new(mixer.random::<u64>(), stream))
    }

    /// True with probability `p`.
    pub fn chance(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            self.0.random::<f64>() < p
        }
    }

    /// Uniform in `[0, max]`.
    pub fn up_to(&mut self, max: Nanos) -> Nanos {
        if max == 0 {
            0
        } else {
            self.0.random_range(0..=max)
        }
    }
}
