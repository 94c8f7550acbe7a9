//! Seed derivation for independent deterministic RNG streams.
//!
//! Every stochastic component draws from its own ChaCha20 stream derived from
//! the master seed and a purpose label (plus an optional lane index, e.g. the
//! UE number), so adding draws in one component never perturbs another.

use rand_chacha::ChaCha20Rng;
use rand_chacha::rand_core::SeedableRng;
use sha2::{Digest, Sha256};

pub fn derive_rng(master_seed: u64, label: &str) -> ChaCha20Rng {
    derive_rng_lane(master_seed, label, 0)
}

pub fn derive_rng_lane(master_seed: u64, label: &str, lane: u64) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(b"pgpp.rng.v1");
    h.update(master_seed.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.update(lane.to_le_bytes());
    let digest = h.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha20Rng::from_seed(seed)
}
