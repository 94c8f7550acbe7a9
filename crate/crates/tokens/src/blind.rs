//! Chaum blind signatures over the full-domain-hashed token message.
//!
//! Client: `blind` the FDH digest with a random unit b (sends FDH(m)·bᵉ).
//! Signer: `sign_blinded` raises the opaque value to d, never seeing m.
//! Client: `unblind` divides by b, leaving an ordinary signature on FDH(m)
//! that `verify` checks against the slice public key.

use crate::fdh::full_domain_hash;
use crate::rsa::{RsaKeyPair, RsaPublicKey};
use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::One;
use rand::{CryptoRng, RngCore};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BlindError {
    #[error("value does not fit under the modulus")]
    ValueOutOfRange,
}

/// Blinded message, ready to hand to the signer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlindedMessage(pub Vec<u8>);

/// Client-side unblinding secret; never leaves the client.
#[derive(Debug, Clone)]
pub struct UnblindingSecret {
    b_inv: BigUint,
}

/// Blind `message` for the given slice key. Returns the value for the signer
/// and the secret needed to unblind the response.
pub fn blind<R: RngCore + CryptoRng>(
    message: &[u8],
    key: &RsaPublicKey,
    rng: &mut R,
) -> (BlindedMessage, UnblindingSecret) {
    let h = full_domain_hash(message, &key.n);
    let one = BigUint::one();
    loop {
        let b = rng.gen_biguint_range(&one, &key.n);
        if b.gcd(&key.n) != one {
            continue; // non-unit (factors n): resample
        }
        let b_inv = match b.clone().modinv(&key.n) {
            Some(inv) => inv,
            None => continue,
        };
        let blinded = (&h * key.pow_public(&b)) % &key.n;
        return (
            BlindedMessage(to_padded_bytes(&blinded, key)),
            UnblindingSecret { b_inv },
        );
    }
}

/// Sign an opaque blinded value. The signer never learns the message; the
/// only check possible here is the RSA range.
pub fn sign_blinded(blinded: &BlindedMessage, key: &RsaKeyPair) -> Result<Vec<u8>, BlindError> {
    let v = BigUint::from_bytes_be(&blinded.0);
    if v >= key.public.n {
        return Err(BlindError::ValueOutOfRange);
    }
    Ok(to_padded_bytes(&key.pow_private(&v), &key.public))
}

/// Strip the blinding factor from the signer's response.
pub fn unblind(
    blinded_signature: &[u8],
    secret: &UnblindingSecret,
    key: &RsaPublicKey,
) -> Result<Vec<u8>, BlindError> {
    let s = BigUint::from_bytes_be(blinded_signature);
    if s >= key.n {
        return Err(BlindError::ValueOutOfRange);
    }
    Ok(to_padded_bytes(&((s * &secret.b_inv) % &key.n), key))
}

/// Check an unblinded signature against the message under the slice key.
pub fn verify(message: &[u8], signature: &[u8], key: &RsaPublicKey) -> bool {
    let s = BigUint::from_bytes_be(signature);
    if s >= key.n {
        return false;
    }
    key.pow_public(&s) == full_domain_hash(message, &key.n)
}

fn to_padded_bytes(v: &BigUint, key: &RsaPublicKey) -> Vec<u8> {
    let raw = v.to_bytes_be();
    let len = key.modulus_len();
    let mut out = vec![0u8; len - raw.len()];
    out.extend_from_slice(&raw);
    out
}
