//! Per-billing-period slice keysets and the published key repository format.
//!
//! The billing system generates one independent RSA keypair per time slice
//! and appends the public halves to a well-known repository; clients fetch
//! that file to blind and verify tokens.

use crate::rsa::{RsaKeyPair, RsaPublicKey};
use num_bigint::BigUint;
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_KEY_BITS: u64 = 2048;
pub const REPOSITORY_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum KeySetError {
    #[error("slice count must be at least 1")]
    NoSlices,
    #[error("unsupported repository format version {0}")]
    BadVersion(u32),
    #[error("slice {index}: bad modulus hex")]
    BadModulus { index: u64 },
    #[error("slice indices must be 0..s in order (saw {got} at position {pos})")]
    BadIndexing { got: u64, pos: usize },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// The billing authority's full keyset for one period.
pub struct SliceKeySet {
    pub period_id: String,
    pub keys: Vec<RsaKeyPair>,
}

impl SliceKeySet {
    pub fn slices(&self) -> u64 {
        self.keys.len() as u64
    }

    pub fn key_for(&self, slice_index: u64) -> Option<&RsaKeyPair> {
        self.keys.get(slice_index as usize)
    }

    /// Public halves in the repository format.
    pub fn public_set(&self) -> SlicePublicKeys {
        SlicePublicKeys {
            version: REPOSITORY_FORMAT_VERSION,
            period_id: self.period_id.clone(),
            s: self.slices(),
            keys: self
                .keys
                .iter()
                .enumerate()
                .map(|(i, k)| PublicKeyRecord {
                    slice_index: i as u64,
                    modulus_hex: hex::encode(k.public.n.to_bytes_be()),
                    exponent: k.public.e,
                })
                .collect(),
        }
    }
}

/// Generate `s` independent keypairs for a billing period.
pub fn gen_period_keys<R: RngCore + CryptoRng>(
    period_id: &str,
    s: u64,
    bits: u64,
    rng: &mut R,
) -> Result<SliceKeySet, KeySetError> {
    if s == 0 {
        return Err(KeySetError::NoSlices);
    }
    let keys = (0..s).map(|_| RsaKeyPair::generate(bits, rng)).collect();
    Ok(SliceKeySet {
        period_id: period_id.to_string(),
        keys,
    })
}

/// Published public-key repository entry for one period.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlicePublicKeys {
    pub version: u32,
    pub period_id: String,
    pub s: u64,
    pub keys: Vec<PublicKeyRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PublicKeyRecord {
    pub slice_index: u64,
    pub modulus_hex: String,
    pub exponent: u64,
}

impl SlicePublicKeys {
    pub fn key_for(&self, slice_index: u64) -> Option<RsaPublicKey> {
        let rec = self.keys.get(slice_index as usize)?;
        let n = BigUint::parse_bytes(rec.modulus_hex.as_bytes(), 16)?;
        Some(RsaPublicKey { n, e: rec.exponent })
    }

    pub fn to_json(&self) -> Result<String, KeySetError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<SlicePublicKeys, KeySetError> {
        let set: SlicePublicKeys = serde_json::from_str(s)?;
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<(), KeySetError> {
        if self.version != REPOSITORY_FORMAT_VERSION {
            return Err(KeySetError::BadVersion(self.version));
        }
        if self.s == 0 || self.keys.len() as u64 != self.s {
            return Err(KeySetError::NoSlices);
        }
        for (pos, rec) in self.keys.iter().enumerate() {
            if rec.slice_index != pos as u64 {
                return Err(KeySetError::BadIndexing {
                    got: rec.slice_index,
                    pos,
                });
            }
            if BigUint::parse_bytes(rec.modulus_hex.as_bytes(), 16).is_none() {
                return Err(KeySetError::BadModulus {
                    index: rec.slice_index,
                });
            }
        }
        Ok(())
    }
}

/// Serializable private keyset (operator-side storage).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrivateKeySetFile {
    pub version: u32,
    pub period_id: String,
    pub keys: Vec<PrivateKeyRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrivateKeyRecord {
    pub slice_index: u64,
    pub n_hex: String,
    pub d_hex: String,
    pub p_hex: String,
    pub q_hex: String,
}

impl PrivateKeySetFile {
    pub fn from_keyset(set: &SliceKeySet) -> PrivateKeySetFile {
        PrivateKeySetFile {
            version: REPOSITORY_FORMAT_VERSION,
            period_id: set.period_id.clone(),
            keys: set
                .keys
                .iter()
                .enumerate()
                .map(|(i, k)| {
                    let (d, p, q) = k.private_parts();
                    PrivateKeyRecord {
                        slice_index: i as u64,
                        n_hex: hex::encode(k.public.n.to_bytes_be()),
                        d_hex: hex::encode(d.to_bytes_be()),
                        p_hex: hex::encode(p.to_bytes_be()),
                        q_hex: hex::encode(q.to_bytes_be()),
                    }
                })
                .collect(),
        }
    }

    pub fn into_keyset(self) -> Result<SliceKeySet, KeySetError> {
        let parse = |hexs: &str, index: u64| {
            BigUint::parse_bytes(hexs.as_bytes(), 16).ok_or(KeySetError::BadModulus { index })
        };
        let mut keys = Vec::with_capacity(self.keys.len());
        for rec in &self.keys {
            keys.push(RsaKeyPair::from_parts(
                parse(&rec.n_hex, rec.slice_index)?,
                parse(&rec.d_hex, rec.slice_index)?,
                parse(&rec.p_hex, rec.slice_index)?,
                parse(&rec.q_hex, rec.slice_index)?,
            ));
        }
        if keys.is_empty() {
            return Err(KeySetError::NoSlices);
        }
        Ok(SliceKeySet {
            period_id: self.period_id,
            keys,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn one_slice_keyset() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let set = gen_period_keys("p1", 1, 512, &mut rng).unwrap();
        assert_eq!(set.slices(), 1);
        assert!(set.key_for(0).is_some());
        assert!(set.key_for(1).is_none());
    }

    #[test]
    fn zero_slices_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        assert!(matches!(
            gen_period_keys("p", 0, 512, &mut rng),
            Err(KeySetError::NoSlices)
        ));
    }

    #[test]
    fn distinct_periods_share_no_moduli() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let a = gen_period_keys("p1", 3, 512, &mut rng).unwrap();
        let b = gen_period_keys("p2", 3, 512, &mut rng).unwrap();
        for ka in &a.keys {
            for kb in &b.keys {
                assert_ne!(ka.public.n, kb.public.n);
            }
        }
    }

    #[test]
    fn repository_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let set = gen_period_keys("2026-08", 4, 512, &mut rng).unwrap();
        let json = set.public_set().to_json().unwrap();
        let back = SlicePublicKeys::from_json(&json).unwrap();
        assert_eq!(back.s, 4);
        for i in 0..4 {
            assert_eq!(back.key_for(i).unwrap(), set.keys[i as usize].public);
        }
    }

    #[test]
    fn repository_rejects_bad_version_and_indexing() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let set = gen_period_keys("p", 2, 512, &mut rng).unwrap();
        let mut publ = set.public_set();
        publ.version = 9;
        let json = serde_json::to_string(&publ).unwrap();
        assert!(matches!(
            SlicePublicKeys::from_json(&json),
            Err(KeySetError::BadVersion(9))
        ));
        publ.version = 1;
        publ.keys[1].slice_index = 5;
        let json = serde_json::to_string(&publ).unwrap();
        assert!(matches!(
            SlicePublicKeys::from_json(&json),
            Err(KeySetError::BadIndexing { got: 5, pos: 1 })
        ));
    }

    #[test]
    fn private_keyset_file_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let set = gen_period_keys("p", 2, 512, &mut rng).unwrap();
        let file = PrivateKeySetFile::from_keyset(&set);
        let json = serde_json::to_string(&file).unwrap();
        let back: PrivateKeySetFile = serde_json::from_str(&json).unwrap();
        let restored = back.into_keyset().unwrap();
        use num_bigint::RandBigInt;
        let m = rng.gen_biguint_below(&set.keys[0].public.n);
        assert_eq!(
            restored.keys[0].pow_private(&m),
            set.keys[0].pow_private(&m)
        );
    }
}
