//! Token acceptance: signature check, slice-window check, and the atomic
//! spend against the shared store.

use crate::blind::verify;
use crate::keys::SlicePublicKeys;
use crate::store::{InsertOutcome, SpentKey, SpentTokenStore, StoreError};
use crate::token::SignedToken;
use serde::{Deserialize, Serialize};

/// Slice acceptance window around the current slice. The default accepts
/// exactly the current slice; a grace of 1 tolerates clock skew at
/// boundaries. Advance presentation of the *next* slice's token is handled
/// by staging at the gateway, not by widening this window.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct AcceptanceWindow {
    pub grace_slices: u64,
}

impl AcceptanceWindow {
    pub fn exact() -> AcceptanceWindow {
        AcceptanceWindow { grace_slices: 0 }
    }

    pub fn with_grace(grace_slices: u64) -> AcceptanceWindow {
        AcceptanceWindow { grace_slices }
    }

    pub fn accepts(&self, token_slice: u64, current_slice: u64) -> bool {
        token_slice.abs_diff(current_slice) <= self.grace_slices
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    BadSignature,
    WrongSlice,
    DoubleSpend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyOutcome {
    Accepted,
    Rejected(RejectReason),
}

/// Verify a presented token and spend it atomically.
///
/// Accepted iff the slice index sits in the acceptance window, the signature
/// verifies under the slice key, and the store insert is fresh. A store
/// failure is an explicit error — never a silent accept.
pub fn verify_and_spend(
    signed: &SignedToken,
    keys: &SlicePublicKeys,
    store: &dyn SpentTokenStore,
    current_slice: u64,
    window: AcceptanceWindow,
) -> Result<VerifyOutcome, StoreError> {
    let slice = signed.token.slice_index;
    if !window.accepts(slice, current_slice) || slice >= keys.s {
        return Ok(VerifyOutcome::Rejected(RejectReason::WrongSlice));
    }
    let Some(key) = keys.key_for(slice) else {
        return Ok(VerifyOutcome::Rejected(RejectReason::WrongSlice));
    };
    let message = signed.token.message_bytes();
    if !verify(&message, &signed.signature, &key) {
        return Ok(VerifyOutcome::Rejected(RejectReason::BadSignature));
    }
    let spent_key = SpentKey::from_message(&keys.period_id, slice, &message);
    match store.insert_if_absent(&spent_key)? {
        InsertOutcome::Fresh => Ok(VerifyOutcome::Accepted),
        InsertOutcome::AlreadyPresent => Ok(VerifyOutcome::Rejected(RejectReason::DoubleSpend)),
    }
}
