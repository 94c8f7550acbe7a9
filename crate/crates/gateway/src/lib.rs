//! The gateway that authenticates sessions with anonymous tokens and gates
//! forwarding per client address, sitting between the packet gateway and the
//! Internet.
//!
//! It never learns who a client is: authentication is a blind-signed token,
//! the session table binds nothing but the observed address to a slice
//! expiry, and the decision log carries addresses and outcomes only. Its
//! behavior is akin to a captive portal whose sign-in is automatic.
//!
//! [`gateway`] holds the core session logic, [`wire`] the framed protocol,
//! [`tls`] channel setup, [`server`]/[`client`] the two ends, [`log`] the
//! auditable decision trail, [`clock`] time and slice arithmetic.

pub mod clock;
pub mod client;
pub mod gateway;
pub mod log;
pub mod server;
pub mod tls;
pub mod wire;

pub use clock::{ManualClock, SliceConfig, SystemTimeSource, TimeSource};
pub use client::{Agent, AgentStep, AuthReply, ClientChannel};
pub use gateway::{AuthOutcome, Decision, Gateway, GatewayConfig, SessionEntry, StageOutcome};
pub use log::{audit_decision_log, AuditViolation, DecisionEvent, DecisionLog, Event};
pub use wire::{Message, WireDenyReason, WireError};
