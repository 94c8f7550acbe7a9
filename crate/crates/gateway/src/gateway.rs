//! The gateway core: a session table keyed by client address, token
//! acceptance through the shared spent store, advance staging of the next
//! slice's token, and the per-packet forwarding decision.
//!
//! The gateway never sees anything but an address and token material; its
//! whole persistent state is addresses, expiries, and (in the spent store)
//! token digests.

use crate::clock::{SliceConfig, TimeSource};
use crate::log::{DecisionEvent, DecisionLog, Event};
use crate::wire::WireDenyReason;
use pgpp_tokens::token::SignedToken;
use pgpp_tokens::{
    verify_and_spend, AcceptanceWindow, RejectReason, SlicePublicKeys, SpentTokenStore,
    VerifyOutcome,
};
use serde::Serialize;
use std::collections::HashMap;
use std::net::IpAddr;
use std::sync::{Arc, RwLock};

#[derive(Debug, Clone)]
pub struct SessionEntry {
    pub client_address: IpAddr,
    /// Epoch second at which authorization lapses (a slice boundary).
    pub authorized_until: u64,
    /// Token staged for the next slice, spent lazily at the boundary.
    pub staged_next: Option<SignedToken>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuthOutcome {
    Authorized { until_epoch_s: u64 },
    Denied { reason: WireDenyReason },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOutcome {
    Staged,
    Denied { reason: WireDenyReason },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Forward,
    Drop,
}

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    pub slice: SliceConfig,
    pub acceptance: AcceptanceWindow,
}

pub struct Gateway {
    cfg: GatewayConfig,
    keys: SlicePublicKeys,
    store: Arc<dyn SpentTokenStore>,
    sessions: RwLock<HashMap<IpAddr, SessionEntry>>,
    clock: Arc<dyn TimeSource>,
    log: DecisionLog,
}

impl Gateway {
    pub fn new(
        cfg: GatewayConfig,
        keys: SlicePublicKeys,
        store: Arc<dyn SpentTokenStore>,
        clock: Arc<dyn TimeSource>,
        log: DecisionLog,
    ) -> Gateway {
        Gateway {
            cfg,
            keys,
            store,
            sessions: RwLock::new(HashMap::new()),
            clock,
            log,
        }
    }

    pub fn period_id(&self) -> &str {
        &self.keys.period_id
    }

    pub fn current_slice(&self) -> u64 {
        self.cfg.slice.slice_of(self.clock.now_epoch_s())
    }

    /// Spend a presented token and open or extend the session for `addr`.
    pub fn authenticate(&self, addr: IpAddr, token: &SignedToken) -> AuthOutcome {
        let now = self.clock.now_epoch_s();
        let current = self.cfg.slice.slice_of(now);
        match verify_and_spend(token, &self.keys, &*self.store, current, self.cfg.acceptance) {
            Ok(VerifyOutcome::Accepted) => {
                let until = self.cfg.slice.end_of_slice(token.token.slice_index);
                let until = {
                    let mut sessions = self.sessions.write().expect("session lock");
                    let entry = sessions.entry(addr).or_insert(SessionEntry {
                        client_address: addr,
                        authorized_until: 0,
                        staged_next: None,
                    });
                    // expiry is monotone: extensions only
                    entry.authorized_until = entry.authorized_until.max(until);
                    entry.authorized_until
                };
                self.log.record(&DecisionEvent {
                    ts_epoch_s: now,
                    address: addr.to_string(),
                    event: Event::AuthOk,
                    reason: None,
                    until_epoch_s: Some(until),
                });
                AuthOutcome::Authorized { until_epoch_s: until }
            }
            Ok(VerifyOutcome::Rejected(r)) => {
                let reason = deny_reason(r);
                self.log_fail(Event::AuthFail, addr, now, reason);
                AuthOutcome::Denied { reason }
            }
            Err(_) => {
                self.log_fail(Event::AuthFail, addr, now, WireDenyReason::StoreUnavailable);
                AuthOutcome::Denied {
                    reason: WireDenyReason::StoreUnavailable,
                }
            }
        }
    }

    /// Stage the next slice's token against the active session. The token is
    /// checked for shape (next slice, valid signature) but only spent at the
    /// slice boundary, so a session continues without a gap.
    pub fn stage(&self, addr: IpAddr, token: &SignedToken) -> StageOutcome {
        let now = self.clock.now_epoch_s();
        self.roll_over(addr, now);
        let mut sessions = self.sessions.write().expect("session lock");
        let Some(entry) = sessions.get_mut(&addr).filter(|e| now < e.authorized_until) else {
            drop(sessions);
            self.log_fail(Event::StageFail, addr, now, WireDenyReason::NoSession);
            return StageOutcome::Denied {
                reason: WireDenyReason::NoSession,
            };
        };
        let expected = self.cfg.slice.slice_of(entry.authorized_until);
        if token.token.slice_index != expected {
            drop(sessions);
            self.log_fail(Event::StageFail, addr, now, WireDenyReason::WrongSlice);
            return StageOutcome::Denied {
                reason: WireDenyReason::WrongSlice,
            };
        }
        let valid = self
            .keys
            .key_for(token.token.slice_index)
            .map(|k| pgpp_tokens::verify(&token.token.message_bytes(), &token.signature, &k))
            .unwrap_or(false);
        if !valid {
            drop(sessions);
            self.log_fail(Event::StageFail, addr, now, WireDenyReason::BadSignature);
            return StageOutcome::Denied {
                reason: WireDenyReason::BadSignature,
            };
        }
        entry.staged_next = Some(token.clone());
        drop(sessions);
        self.log.record(&DecisionEvent {
            ts_epoch_s: now,
            address: addr.to_string(),
            event: Event::StageOk,
            reason: None,
            until_epoch_s: None,
        });
        StageOutcome::Staged
    }

    /// O(1) per-packet check: forward iff an unexpired session covers the
    /// source address. Applies any pending boundary rollover first.
    pub fn forwarding_decision(&self, addr: IpAddr) -> Decision {
        let now = self.clock.now_epoch_s();
        self.roll_over(addr, now);
        let sessions = self.sessions.read().expect("session lock");
        let decision = match sessions.get(&addr) {
            Some(e) if now < e.authorized_until => Decision::Forward,
            _ => Decision::Drop,
        };
        drop(sessions);
        self.log.record(&DecisionEvent {
            ts_epoch_s: now,
            address: addr.to_string(),
            event: match decision {
                Decision::Forward => Event::Forward,
                Decision::Drop => Event::Drop,
            },
            reason: None,
            until_epoch_s: None,
        });
        decision
    }

    /// At (or past) the boundary, spend the staged token and extend the
    /// session; a stale or rejected staged token is discarded.
    fn roll_over(&self, addr: IpAddr, now: u64) {
        let staged = {
            let mut sessions = self.sessions.write().expect("session lock");
            let Some(entry) = sessions.get_mut(&addr) else { return };
            if now < entry.authorized_until || entry.staged_next.is_none() {
                return;
            }
            entry.staged_next.take()
        };
        let Some(token) = staged else { return };
        let current = self.cfg.slice.slice_of(now);
        match verify_and_spend(&token, &self.keys, &*self.store, current, self.cfg.acceptance) {
            Ok(VerifyOutcome::Accepted) => {
                let until = self.cfg.slice.end_of_slice(token.token.slice_index);
                let mut sessions = self.sessions.write().expect("session lock");
                if let Some(entry) = sessions.get_mut(&addr) {
                    entry.authorized_until = entry.authorized_until.max(until);
                }
                drop(sessions);
                self.log.record(&DecisionEvent {
                    ts_epoch_s: now,
                    address: addr.to_string(),
                    event: Event::RolloverOk,
                    reason: None,
                    until_epoch_s: Some(until),
                });
            }
            Ok(VerifyOutcome::Rejected(r)) => {
                self.log_fail(Event::RolloverFail, addr, now, deny_reason(r));
            }
            Err(_) => {
                // keep the token for retry once the store is back
                let mut sessions = self.sessions.write().expect("session lock");
                if let Some(entry) = sessions.get_mut(&addr) {
                    entry.staged_next.get_or_insert(token);
                }
                drop(sessions);
                self.log_fail(Event::RolloverFail, addr, now, WireDenyReason::StoreUnavailable);
            }
        }
    }

    fn log_fail(&self, event: Event, addr: IpAddr, now: u64, reason: WireDenyReason) {
        self.log.record(&DecisionEvent {
            ts_epoch_s: now,
            address: addr.to_string(),
            event,
            reason: Some(format!("{reason:?}")),
            until_epoch_s: None,
        });
    }

    /// The gateway's entire serializable state, for the zero-identity audit:
    /// nothing but addresses, expiries, and a staged-token flag.
    pub fn serialize_state(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct SessionState {
            address: String,
            authorized_until_epoch_s: u64,
            has_staged_token: bool,
        }
        let sessions = self.sessions.read().expect("session lock");
        let mut rows: Vec<SessionState> = sessions
            .values()
            .map(|e| SessionState {
                address: e.client_address.to_string(),
                authorized_until_epoch_s: e.authorized_until,
                has_staged_token: e.staged_next.is_some(),
            })
            .collect();
        rows.sort_by(|a, b| a.address.cmp(&b.address));
        serde_json::json!({
            "period_id": self.keys.period_id,
            "slice_seconds": self.cfg.slice.slice_seconds,
            "period_start_epoch_s": self.cfg.slice.period_start_epoch_s,
            "sessions": rows,
        })
    }
}

fn deny_reason(r: RejectReason) -> WireDenyReason {
    match r {
        RejectReason::BadSignature => WireDenyReason::BadSignature,
        RejectReason::WrongSlice => WireDenyReason::WrongSlice,
        RejectReason::DoubleSpend => WireDenyReason::DoubleSpend,
    }
}
