//! Seed derivation for reproducible random substreams.
//!
//! Every random draw in the crate comes from a [`SeedStream`] keyed by a
//! master seed and a path of integer tags (replicate index, rep index, role).
//! Two streams with different paths are statistically independent, and a
//! stream's output never depends on how many draws other streams made, which
//! is what makes results identical under any thread schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Concrete generator handed to samplers.
pub type StreamRng = ChaCha8Rng;

/// Stream roles used across the crate.
pub mod tag {
    pub const TRAIN_X: u64 = 1;
    pub const TRAIN_NOISE: u64 = 2;
    pub const TEST_X: u64 = 3;
    pub const TEST_NOISE: u64 = 4;
    pub const REPLICATE: u64 = 10;
    pub const FOLDS: u64 = 11;
    pub const SPLIT: u64 = 12;
    pub const SNR: u64 = 13;
    pub const REP: u64 = 20;
    pub const BOOTSTRAP: u64 = 21;
    pub const DGP: u64 = 22;
    pub const CV: u64 = 23;
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines a parent seed with a tag into a child seed.
#[inline]
pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    mix64(parent ^ mix64(tag.wrapping_add(0x6A09_E667_F3BC_C909)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream {
    seed: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn child(&self, tag: u64) -> Self {
        Self {
            seed: derive_seed(self.seed, tag),
        }
    }

    pub fn child2(&self, tag: u64, index: u64) -> Self {
        self.child(tag).child(index)
    }

    pub fn rng(&self) -> StreamRng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}
