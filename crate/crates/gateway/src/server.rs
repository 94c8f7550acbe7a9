//! Threaded TLS front end: one connection per client agent, speaking the
//! framed wire protocol against the gateway core.

use crate::gateway::{AuthOutcome, Gateway, StageOutcome};
use crate::wire::{read_message, write_message, Message, WireDenyReason, WireError};
use std::net::{IpAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

/// Accept and serve connections until `shutdown` flips. Blocks the calling
/// thread; spawns one handler thread per connection.
pub fn serve(
    gateway: Arc<Gateway>,
    listener: TcpListener,
    tls: Arc<rustls::ServerConfig>,
    shutdown: Arc<AtomicBool>,
) -> std::io::Result<()> {
    listener.set_nonblocking(true)?;
    let mut handles = Vec::new();
    while !shutdown.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                let gateway = Arc::clone(&gateway);
                let tls = Arc::clone(&tls);
                handles.push(std::thread::spawn(move || {
                    let _ = handle_connection(gateway, stream, peer.ip(), tls);
                }));
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                std::thread::sleep(Duration::from_millis(10));
            }
            Err(e) => return Err(e),
        }
    }
    for h in handles {
        let _ = h.join();
    }
    Ok(())
}

fn handle_connection(
    gateway: Arc<Gateway>,
    stream: TcpStream,
    peer: IpAddr,
    tls: Arc<rustls::ServerConfig>,
) -> Result<(), WireError> {
    stream.set_nodelay(true).ok();
    let conn = rustls::ServerConnection::new(tls)
        .map_err(|e| WireError::Io(std::io::Error::other(e)))?;
    let mut tls_stream = rustls::StreamOwned::new(conn, stream);
    loop {
        let msg = match read_message(&mut tls_stream) {
            Ok(m) => m,
            Err(WireError::Io(_)) => return Ok(()), // peer went away
            Err(e) => return Err(e),
        };
        let reply = match msg {
            Message::Auth { period_id, token } => {
                if period_id != gateway.period_id() {
                    Message::AuthFail {
                        reason: WireDenyReason::WrongSlice,
                    }
                } else {
                    match gateway.authenticate(peer, &token) {
                        AuthOutcome::Authorized { until_epoch_s } => {
                            Message::AuthOk { until_epoch_s }
                        }
                        AuthOutcome::Denied { reason } => Message::AuthFail { reason },
                    }
                }
            }
            Message::Stage { period_id, token } => {
                if period_id != gateway.period_id() {
                    Message::AuthFail {
                        reason: WireDenyReason::WrongSlice,
                    }
                } else {
                    match gateway.stage(peer, &token) {
                        StageOutcome::Staged => Message::StageOk,
                        StageOutcome::Denied { reason } => Message::AuthFail { reason },
                    }
                }
            }
            // only requests are valid from the client side
            _ => Message::AuthFail {
                reason: WireDenyReason::NoSession,
            },
        };
        write_message(&mut tls_stream, &reply)?;
    }
}
