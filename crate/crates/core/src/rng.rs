//! Splittable deterministic randomness.
//!
//! Every sub-search gets its own generator derived from the parent's key and
//! a split counter, so results do not depend on how work is interleaved:
//! the same (seed, split order) always yields the same streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::rand_core::RngCore;

#[derive(Debug, Clone)]
pub struct SplitRng {
    rng: ChaCha8Rng,
    key: u64,
    splits: u64,
}

impl SplitRng {
    pub fn new(seed: u64) -> Self {
        SplitRng {
            rng: ChaCha8Rng::seed_from_u64(seed),
            key: seed,
            splits: 0,
        }
    }

    /// Derive an independent child generator. Children are keyed by the
    /// parent key and split index, not by how much the parent was consumed.
    pub fn split(&mut self) -> SplitRng {
        self.splits += 1;
        SplitRng::new(mix(self.key, self.splits))
    }
}

// splitmix64 finalizer.
fn mix(key: u64, counter: u64) -> u64 {
    let mut z = key ^ counter.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngCore for SplitRng {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand_chacha::rand_core::Error> {
        self.rng.try_fill_bytes(dest)
    }
}
