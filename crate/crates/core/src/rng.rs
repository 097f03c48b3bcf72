//! Deterministic, splittable random streams.
//!
//! Every random decision in a run is drawn from a ChaCha20 stream whose key is
//! derived from the master seed plus a path of labels (task kind, concept
//! name, embedding name, iteration index). A task's stream therefore depends
//! only on *what* the task is, never on which worker runs it or in what order.
//!
//! Seed derivation hashes each label with 64-bit FNV-1a and folds it into the
//! running key with the SplitMix64 finalizer. Both are fixed, documented
//! functions, so derived seeds are stable across platforms and releases.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type StreamRng = ChaCha20Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Builder for a derived seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedPath(u64);

impl SeedPath {
    pub fn new(master_seed: u64) -> Self {
        SeedPath(mix64(master_seed))
    }

    pub fn label(self, label: &str) -> Self {
        // length is folded in so ("ab","c") and ("a","bc") differ
        let h = fnv1a(label.as_bytes()) ^ (label.len() as u64).rotate_left(32);
        SeedPath(mix64(self.0 ^ h))
    }

    pub fn index(self, index: u64) -> Self {
        SeedPath(mix64(self.0 ^ mix64(index ^ 0x5851_f42d_4c95_7f2d)))
    }

    pub fn seed(self) -> u64 {
        self.0
    }

    pub fn rng(self) -> StreamRng {
        ChaCha20Rng::seed_from_u64(self.0)
    }
}

/// Stream `stream` of the generator keyed by `seed`. Streams are
/// independent, so row `i` of a synthetic matrix can be generated in
/// isolation and still match a sequential fill.
pub fn indexed_stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
