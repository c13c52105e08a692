//! Deterministic random streams.
//!
//! A run carries one root seed. Each stochastic component draws from its own
//! named stream: a ChaCha20 generator keyed by the root seed, with the
//! ChaCha stream id set to the 64-bit FNV-1a hash of the component name.
//! Streams with different names never overlap, and adding a new component
//! never perturbs the draws of existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub const SAMPLING: &str = "sampling";
pub const CHANNEL: &str = "channel";
pub const BOOTSTRAP: &str = "bootstrap";
pub const RESTARTS: &str = "restarts";
pub const RESPONSE: &str = "response";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedTree {
    root: u64,
}

impl SeedTree {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn stream(&self, name: &str) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.root);
        rng.set_stream(fnv1a(name.as_bytes()));
        rng
    }

    /// Derived tree for an indexed child (e.g. one restart or one worker).
    pub fn child(&self, name: &str, index: u64) -> SeedTree {
        let h = fnv1a(name.as_bytes()) ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        SeedTree { root: self.root.rotate_left(17) ^ h }
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
