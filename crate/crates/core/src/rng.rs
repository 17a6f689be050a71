//! Seed handling. Every random draw in the crate goes through a ChaCha8
//! stream built from an [`RngSeed`], so runs replay bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// The splitmix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        RngSeed(seed)
    }

    /// Independent child seed for stream `stream`. Depends only on
    /// `(self, stream)`, never on evaluation order.
    pub fn derive(self, stream: u64) -> RngSeed {
        let a = splitmix64(self.0.wrapping_add(GOLDEN_GAMMA));
        RngSeed(splitmix64(
            a ^ stream.wrapping_mul(GOLDEN_GAMMA).wrapping_add(GOLDEN_GAMMA),
        ))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        RngSeed(seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn identical_seed_identical_stream() {
        let a: Vec<u64> = RngSeed(7).rng().random_iter().take(16).collect();
        let b: Vec<u64> = RngSeed(7).rng().random_iter().take(16).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn derived_streams_differ() {
        let s = RngSeed(3);
        let kids: Vec<u64> = (0..64).map(|i| s.derive(i).0).collect();
        let mut dedup = kids.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), kids.len());
        assert_ne!(s.derive(1), RngSeed(4).derive(1));
    }
}
