//! Client side: a channel to the gateway over pinned TLS, plus the headless
//! agent that keeps a device authenticated as connectivity comes and goes.

use crate::wire::{read_message, write_message, Message, WireDenyReason, WireError};
use pgpp_tokens::token::{SignedToken, Wallet};
use rustls::pki_types::ServerName;
use std::net::TcpStream;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("connect: {0}")]
    Connect(#[from] std::io::Error),
    #[error("tls: {0}")]
    Tls(String),
    #[error("wire: {0}")]
    Wire(#[from] WireError),
    #[error("unexpected reply from gateway")]
    UnexpectedReply,
    #[error("wallet has no token for slice {0}")]
    MissingToken(u64),
    #[error("wallet: {0}")]
    Wallet(#[from] pgpp_tokens::token::WalletError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuthReply {
    Authorized { until_epoch_s: u64 },
    Denied { reason: WireDenyReason, retryable: bool },
}

/// One TLS connection to the gateway.
pub struct ClientChannel {
    stream: rustls::StreamOwned<rustls::ClientConnection, TcpStream>,
    period_id: String,
}

impl ClientChannel {
    pub fn connect(
        addr: &str,
        server_name: &str,
        tls: Arc<rustls::ClientConfig>,
        period_id: &str,
    ) -> Result<ClientChannel, ClientError> {
        let tcp = TcpStream::connect(addr)?;
        tcp.set_nodelay(true).ok();
        let name = ServerName::try_from(server_name.to_string())
            .map_err(|e| ClientError::Tls(e.to_string()))?;
        let conn = rustls::ClientConnection::new(tls, name)
            .map_err(|e| ClientError::Tls(e.to_string()))?;
        Ok(ClientChannel {
            stream: rustls::StreamOwned::new(conn, tcp),
            period_id: period_id.to_string(),
        })
    }

    pub fn authenticate(&mut self, token: &SignedToken) -> Result<AuthReply, ClientError> {
        write_message(
            &mut self.stream,
            &Message::Auth {
                period_id: self.period_id.clone(),
                token: token.clone(),
            },
        )?;
        match read_message(&mut self.stream)? {
            Message::AuthOk { until_epoch_s } => Ok(AuthReply::Authorized { until_epoch_s }),
            Message::AuthFail { reason } => Ok(AuthReply::Denied {
                reason,
                retryable: reason.retryable(),
            }),
            _ => Err(ClientError::UnexpectedReply),
        }
    }

    /// Present the next slice's token in advance so service continues
    /// seamlessly across the boundary.
    pub fn stage_next(&mut self, token: &SignedToken) -> Result<AuthReply, ClientError> {
        write_message(
            &mut self.stream,
            &Message::Stage {
                period_id: self.period_id.clone(),
                token: token.clone(),
            },
        )?;
        match read_message(&mut self.stream)? {
            Message::StageOk => Ok(AuthReply::Authorized { until_epoch_s: 0 }),
            Message::AuthFail { reason } => Ok(AuthReply::Denied {
                reason,
                retryable: reason.retryable(),
            }),
            _ => Err(ClientError::UnexpectedReply),
        }
    }
}

/// Pick the wallet token for a slice.
pub fn wallet_token_for_slice(wallet: &Wallet, slice: u64) -> Result<SignedToken, ClientError> {
    wallet
        .signed_tokens()?
        .into_iter()
        .find(|t| t.token.slice_index == slice)
        .ok_or(ClientError::MissingToken(slice))
}

/// Headless agent: watches a connectivity signal and (re-)authenticates for
/// the current slice whenever connectivity is present, staging the next
/// slice's token after a successful authentication.
pub struct Agent<'a> {
    pub wallet: &'a Wallet,
    pub gateway_addr: String,
    pub server_name: String,
    pub tls: Arc<rustls::ClientConfig>,
    /// Returns the current slice index (the device's slice clock).
    pub current_slice: Box<dyn Fn() -> u64 + 'a>,
    /// Connectivity signal; authentication runs only while this is true.
    pub connectivity: Box<dyn Fn() -> bool + 'a>,
}

/// What the agent did in one pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentStep {
    Idle,
    Authenticated { until_epoch_s: u64, staged_next: bool },
    Denied { reason: WireDenyReason, retryable: bool },
}

impl<'a> Agent<'a> {
    /// One pass of the agent loop: if connectivity is up, authenticate for
    /// the current slice and stage the next slice's token when available.
    pub fn step(&self) -> Result<AgentStep, ClientError> {
        if !(self.connectivity)() {
            return Ok(AgentStep::Idle);
        }
        let slice = (self.current_slice)();
        let token = wallet_token_for_slice(self.wallet, slice)?;
        let mut channel = ClientChannel::connect(
            &self.gateway_addr,
            &self.server_name,
            Arc::clone(&self.tls),
            &self.wallet.period_id,
        )?;
        match channel.authenticate(&token)? {
            AuthReply::Authorized { until_epoch_s } => {
                let staged_next = match wallet_token_for_slice(self.wallet, slice + 1) {
                    Ok(next) => matches!(
                        channel.stage_next(&next)?,
                        AuthReply::Authorized { .. }
                    ),
                    Err(ClientError::MissingToken(_)) => false,
                    Err(e) => return Err(e),
                };
                Ok(AgentStep::Authenticated {
                    until_epoch_s,
                    staged_next,
                })
            }
            AuthReply::Denied { reason, retryable } => Ok(AgentStep::Denied { reason, retryable }),
        }
    }
}
