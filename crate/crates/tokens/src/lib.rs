//! Anonymous access tokens for a privacy-preserving operator.
//!
//! A billing period is divided into `s` time slices, each with its own RSA
//! keypair. A paying user mints one token `i ‖ r` per slice, blinds it,
//! has the billing system sign it (the signer never sees the token), and
//! unblinds the result. Presenting a signed token later proves "some
//! customer paid for slice i" — and nothing else; a shared spent-token store
//! catches any token presented twice.
//!
//! Module map: [`rsa`] raw keys and exponentiation, [`fdh`] the full-domain
//! hash, [`token`] the message format and wallet file, [`keys`] per-period
//! keysets and the public repository format, [`blind`] the blind-signature
//! protocol, [`store`] spent-token stores, [`spend`] acceptance.

pub mod blind;
pub mod fdh;
pub mod keys;
pub mod rsa;
pub mod spend;
pub mod store;
pub mod token;

pub use blind::{blind, sign_blinded, unblind, verify, BlindedMessage, UnblindingSecret};
pub use keys::{gen_period_keys, SliceKeySet, SlicePublicKeys, DEFAULT_KEY_BITS};
pub use spend::{verify_and_spend, AcceptanceWindow, RejectReason, VerifyOutcome};
pub use store::{
    FileStore, InsertOutcome, MemoryStore, SpentKey, SpentTokenStore, StoreError, UnavailableStore,
};
pub use token::{SignedToken, Token, TokenKind, Wallet};

use rand::{CryptoRng, RngCore};

/// Client-side issuance: mint, blind, obtain signatures, unblind, verify.
/// Returns one signed token per slice of the period.
///
/// This is the whole billing exchange in one call; payment happens out of
/// band before the signer agrees to sign.
pub fn issue_period_tokens<R: RngCore + CryptoRng>(
    keyset: &SliceKeySet,
    rng: &mut R,
) -> Vec<SignedToken> {
    let publ = keyset.public_set();
    (0..keyset.slices())
        .map(|i| {
            let token = Token::new(i, rng);
            let key = publ.key_for(i).expect("slice key");
            let (blinded, secret) = blind(&token.message_bytes(), &key, rng);
            let blind_sig = sign_blinded(&blinded, keyset.key_for(i).expect("slice key"))
                .expect("blinded value in range");
            let signature = unblind(&blind_sig, &secret, &key).expect("signature in range");
            debug_assert!(verify(&token.message_bytes(), &signature, &key));
            SignedToken { token, signature }
        })
        .collect()
}
