//! The access token and its 64-byte wire form `i ‖ r`.
//!
//! `i` is the slice index as a 256-bit big-endian value, zero-indexed from
//! the period start; `r` is a 256-bit client-chosen random nonce. The two
//! most significant bits of `i` are reserved tags: bit 255 marks a metered
//! (data-unit) token, bit 254 a priority token; both are clear for the
//! default flat-rate time-slice tokens.

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Length of the signed message `i ‖ r`.
pub const MESSAGE_LEN: usize = 64;

const FLAG_METERED: u8 = 0b1000_0000;
const FLAG_PRIORITY: u8 = 0b0100_0000;

#[derive(Debug, Error, PartialEq)]
pub enum TokenError {
    #[error("token message must be {MESSAGE_LEN} bytes, got {0}")]
    BadLength(usize),
    #[error("reserved bytes of the slice index are not zero")]
    BadPadding,
}

/// What one token denominates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenKind {
    /// A fixed period of time (flat-rate service); the default.
    #[default]
    TimeSlice,
    /// A fixed unit of data (metered service).
    Metered,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub slice_index: u64,
    pub nonce: [u8; 32],
    pub kind: TokenKind,
    pub priority: bool,
}

impl Token {
    /// Fresh flat-rate token for `slice_index` with a random nonce.
    pub fn new<R: RngCore + CryptoRng>(slice_index: u64, rng: &mut R) -> Token {
        let mut nonce = [0u8; 32];
        rng.fill_bytes(&mut nonce);
        Token {
            slice_index,
            nonce,
            kind: TokenKind::TimeSlice,
            priority: false,
        }
    }

    pub fn with_kind(mut self, kind: TokenKind) -> Token {
        self.kind = kind;
        self
    }

    pub fn with_priority(mut self, priority: bool) -> Token {
        self.priority = priority;
        self
    }

    /// Serialize to the 64-byte message `i ‖ r` (big-endian `i`, then `r`).
    pub fn message_bytes(&self) -> [u8; MESSAGE_LEN] {
        let mut m = [0u8; MESSAGE_LEN];
        if self.kind == TokenKind::Metered {
            m[0] |= FLAG_METERED;
        }
        if self.priority {
            m[0] |= FLAG_PRIORITY;
        }
        m[24..32].copy_from_slice(&self.slice_index.to_be_bytes());
        m[32..].copy_from_slice(&self.nonce);
        m
    }

    pub fn parse(m: &[u8]) -> Result<Token, TokenError> {
        if m.len() != MESSAGE_LEN {
            return Err(TokenError::BadLength(m.len()));
        }
        if m[0] & !(FLAG_METERED | FLAG_PRIORITY) != 0 || m[1..24].iter().any(|&b| b != 0) {
            return Err(TokenError::BadPadding);
        }
        let mut idx = [0u8; 8];
        idx.copy_from_slice(&m[24..32]);
        let mut nonce = [0u8; 32];
        nonce.copy_from_slice(&m[32..]);
        Ok(Token {
            slice_index: u64::from_be_bytes(idx),
            nonce,
            kind: if m[0] & FLAG_METERED != 0 {
                TokenKind::Metered
            } else {
                TokenKind::TimeSlice
            },
            priority: m[0] & FLAG_PRIORITY != 0,
        })
    }
}

/// A token together with its unblinded signature under the slice key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedToken {
    pub token: Token,
    /// Big-endian signature value, zero-padded to the modulus width.
    pub signature: Vec<u8>,
}

/// Client-side wallet file: every signed token of one billing period.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Wallet {
    pub version: u32,
    pub period_id: String,
    pub tokens: Vec<WalletEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalletEntry {
    pub slice_index: u64,
    #[serde(default)]
    pub kind: TokenKind,
    #[serde(default)]
    pub priority: bool,
    pub nonce_hex: String,
    pub signature_hex: String,
}

#[derive(Debug, Error)]
pub enum WalletError {
    #[error("entry {0}: bad hex: {1}")]
    BadHex(usize, hex::FromHexError),
    #[error("entry {index}: nonce must be 32 bytes, got {got}")]
    BadNonce { index: usize, got: usize },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Wallet {
    pub fn new(period_id: &str) -> Wallet {
        Wallet {
            version: 1,
            period_id: period_id.to_string(),
            tokens: Vec::new(),
        }
    }

    pub fn push(&mut self, signed: &SignedToken) {
        self.tokens.push(WalletEntry {
            slice_index: signed.token.slice_index,
            kind: signed.token.kind,
            priority: signed.token.priority,
            nonce_hex: hex::encode(signed.token.nonce),
            signature_hex: hex::encode(&signed.signature),
        });
    }

    pub fn signed_tokens(&self) -> Result<Vec<SignedToken>, WalletError> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let nonce_bytes =
                    hex::decode(&e.nonce_hex).map_err(|err| WalletError::BadHex(i, err))?;
                let nonce: [u8; 32] = nonce_bytes.as_slice().try_into().map_err(|_| {
                    WalletError::BadNonce {
                        index: i,
                        got: nonce_bytes.len(),
                    }
                })?;
                Ok(SignedToken {
                    token: Token {
                        slice_index: e.slice_index,
                        nonce,
                        kind: e.kind,
                        priority: e.priority,
                    },
                    signature: hex::decode(&e.signature_hex)
                        .map_err(|err| WalletError::BadHex(i, err))?,
                })
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String, WalletError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Wallet, WalletError> {
        Ok(serde_json::from_str(s)?)
    }
}
