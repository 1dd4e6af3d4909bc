//! Deterministic random streams.
//!
//! A run has a single root seed. Every consumer derives its own child stream
//! from `(root, purpose, index)`, so the draws seen by one module never depend
//! on how many draws another module made, or in which order workers ran.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every stochastic operation.
pub type StreamRng = ChaCha8Rng;

/// Root of a tree of derived random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeedStream {
    key: u64,
}

impl SeedStream {
    pub fn new(root: u64) -> Self {
        Self { key: splitmix(root ^ 0x6a09_e667_f3bc_c908) }
    }

    /// Child node for a named purpose and index.
    pub fn child(&self, purpose: &str, index: u64) -> SeedStream {
        let mut key = splitmix(self.key ^ fnv1a(purpose.as_bytes()));
        key = splitmix(key ^ splitmix(index.wrapping_add(0x9e37_79b9_7f4a_7c15)));
        SeedStream { key }
    }

    /// A 64-bit seed for components that take a plain integer seed.
    pub fn seed(&self, purpose: &str, index: u64) -> u64 {
        self.child(purpose, index).key
    }

    /// Generator for a named purpose and index.
    pub fn rng(&self, purpose: &str, index: u64) -> StreamRng {
        self.child(purpose, index).to_rng()
    }

    pub fn to_rng(&self) -> StreamRng {
        let mut bytes = [0u8; 32];
        let mut state = self.key;
        for chunk in bytes.chunks_mut(8) {
            state = splitmix(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha8Rng::from_seed(bytes)
    }
}

/// Generator seeded from a plain integer seed.
pub fn rng_from_seed(seed: u64) -> StreamRng {
    SeedStream::new(seed).to_rng()
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}
