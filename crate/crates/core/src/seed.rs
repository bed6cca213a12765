//! Reproducible random streams.
//!
//! A [`Seed`] names a ChaCha8 stream: `master` is expanded to the 256-bit key
//! via `SeedableRng::seed_from_u64`, and `stream` selects the ChaCha stream
//! (nonce). ChaCha output is defined bit-for-bit by the algorithm, so equal
//! seeds give equal sequences on every platform. Trial `t` of sweep cell `g`
//! uses stream `(g << 32) | t`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// The generator behind every sampler.
pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub master: u64,
    pub stream: u64,
}

impl Seed {
    pub const fn new(master: u64, stream: u64) -> Self {
        Seed { master, stream }
    }

    /// Seed for trial `trial` of sweep cell `cell`. Injective while both
    /// indices stay below 2^32.
    pub fn trial(master: u64, cell: u32, trial: u32) -> Self {
        Seed::new(master, (u64::from(cell) << 32) | u64::from(trial))
    }

    /// An independent seed derived from this one, for auxiliary randomness
    /// (e.g. Monte-Carlo likelihood draws) that must not perturb the main stream.
    pub fn child(&self, index: u64) -> Self {
        Seed::new(splitmix64(self.master ^ splitmix64(index.wrapping_add(1))), self.stream)
    }

    pub fn rng(&self) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
