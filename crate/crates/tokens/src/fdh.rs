//! Full-domain hash: map a message onto the RSA ring Z_n.
//!
//! SHA-256 in counter mode expands the message to 16 bytes past the modulus
//! width, and the result reduces mod n; the surplus keeps the reduction bias
//! far below anything observable. Hash-then-blind prevents the
//! multiplicative forgeries possible on raw messages.

use num_bigint::BigUint;
use sha2::{Digest, Sha256};

const DOMAIN_TAG: &[u8] = b"pgpp-token-fdh-v1";

pub fn full_domain_hash(message: &[u8], modulus: &BigUint) -> BigUint {
    let out_len = ((modulus.bits() + 7) / 8) as usize + 16;
    let mut bytes = Vec::with_capacity(out_len + 32);
    let mut counter = 0u32;
    while bytes.len() < out_len {
        let mut h = Sha256::new();
        h.update(DOMAIN_TAG);
        h.update(counter.to_be_bytes());
        h.update((message.len() as u64).to_be_bytes());
        h.update(message);
        bytes.extend_from_slice(&h.finalize());
        counter += 1;
    }
    bytes.truncate(out_len);
    BigUint::from_bytes_be(&bytes) % modulus
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::RandBigInt;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn deterministic_and_message_sensitive() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let n = rng.gen_biguint(2048) | BigUint::from(1u8);
        let a = full_domain_hash(b"message-1", &n);
        let b = full_domain_hash(b"message-1", &n);
        let c = full_domain_hash(b"message-2", &n);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a < n);
    }

    #[test]
    fn outputs_spread_over_the_ring() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let n = rng.gen_biguint(512) | BigUint::from(1u8);
        let half = &n >> 1;
        let mut low = 0usize;
        let trials = 2000;
        for i in 0..trials {
            let h = full_domain_hash(&u64::to_be_bytes(i as u64), &n);
            if h < half {
                low += 1;
            }
        }
        // crude uniformity: each half gets its share within 5 sigma
        let mean = trials as f64 / 2.0;
        let sigma = (trials as f64 * 0.25).sqrt();
        assert!((low as f64 - mean).abs() < 5.0 * sigma, "low = {low}");
    }
}
