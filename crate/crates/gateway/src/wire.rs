//! Length-prefixed binary protocol between the client agent and the gateway.
//!
//! Frame: u32 big-endian payload length, then the payload. Payload byte 0 is
//! the protocol version, byte 1 the message type, the rest type-specific.
//! Tokens travel as period id + the 64-byte message + the raw signature.

use pgpp_tokens::token::{SignedToken, Token};
use std::io::{Read, Write};
use thiserror::Error;

pub const WIRE_VERSION: u8 = 1;
/// Generous bound: period ids and RSA-4096 signatures fit with room.
const MAX_FRAME: u32 = 64 * 1024;

const T_AUTH: u8 = 1;
const T_AUTH_OK: u8 = 2;
const T_AUTH_FAIL: u8 = 3;
const T_STAGE: u8 = 4;
const T_STAGE_OK: u8 = 5;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("frame of {0} bytes exceeds the {MAX_FRAME}-byte limit")]
    FrameTooLarge(u32),
    #[error("unsupported protocol version {0}")]
    BadVersion(u8),
    #[error("unknown message type {0}")]
    BadType(u8),
    #[error("truncated or malformed payload")]
    Malformed,
}

/// Why an AUTH or STAGE was denied, as carried on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WireDenyReason {
    BadSignature,
    WrongSlice,
    DoubleSpend,
    StoreUnavailable,
    NoSession,
}

impl WireDenyReason {
    fn code(self) -> u8 {
        match self {
            WireDenyReason::BadSignature => 1,
            WireDenyReason::WrongSlice => 2,
            WireDenyReason::DoubleSpend => 3,
            WireDenyReason::StoreUnavailable => 4,
            WireDenyReason::NoSession => 5,
        }
    }

    fn from_code(c: u8) -> Result<Self, WireError> {
        Ok(match c {
            1 => WireDenyReason::BadSignature,
            2 => WireDenyReason::WrongSlice,
            3 => WireDenyReason::DoubleSpend,
            4 => WireDenyReason::StoreUnavailable,
            5 => WireDenyReason::NoSession,
            other => return Err(WireError::BadType(other)),
        })
    }

    /// Store outages are worth retrying; decision rejections are final.
    pub fn retryable(self) -> bool {
        self == WireDenyReason::StoreUnavailable
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Auth { period_id: String, token: SignedToken },
    AuthOk { until_epoch_s: u64 },
    AuthFail { reason: WireDenyReason },
    Stage { period_id: String, token: SignedToken },
    StageOk,
}

pub fn write_message<W: Write>(w: &mut W, msg: &Message) -> Result<(), WireError> {
    let mut payload = vec![WIRE_VERSION];
    match msg {
        Message::Auth { period_id, token } => {
            payload.push(T_AUTH);
            put_token(&mut payload, period_id, token);
        }
        Message::AuthOk { until_epoch_s } => {
            payload.push(T_AUTH_OK);
            payload.extend_from_slice(&until_epoch_s.to_be_bytes());
        }
        Message::AuthFail { reason } => {
            payload.push(T_AUTH_FAIL);
            payload.push(reason.code());
        }
        Message::Stage { period_id, token } => {
            payload.push(T_STAGE);
            put_token(&mut payload, period_id, token);
        }
        Message::StageOk => payload.push(T_STAGE_OK),
    }
    let len = payload.len() as u32;
    if len > MAX_FRAME {
        return Err(WireError::FrameTooLarge(len));
    }
    w.write_all(&len.to_be_bytes())?;
    w.write_all(&payload)?;
    w.flush()?;
    Ok(())
}

pub fn read_message<R: Read>(r: &mut R) -> Result<Message, WireError> {
    let mut len_buf = [0u8; 4];
    r.read_exact(&mut len_buf)?;
    let len = u32::from_be_bytes(len_buf);
    if len > MAX_FRAME {
        return Err(WireError::FrameTooLarge(len));
    }
    let mut payload = vec![0u8; len as usize];
    r.read_exact(&mut payload)?;
    if payload.len() < 2 {
        return Err(WireError::Malformed);
    }
    if payload[0] != WIRE_VERSION {
        return Err(WireError::BadVersion(payload[0]));
    }
    let body = &payload[2..];
    match payload[1] {
        T_AUTH => {
            let (period_id, token) = take_token(body)?;
            Ok(Message::Auth { period_id, token })
        }
        T_AUTH_OK => {
            let bytes: [u8; 8] = body.try_into().map_err(|_| WireError::Malformed)?;
            Ok(Message::AuthOk {
                until_epoch_s: u64::from_be_bytes(bytes),
            })
        }
        T_AUTH_FAIL => {
            if body.len() != 1 {
                return Err(WireError::Malformed);
            }
            Ok(Message::AuthFail {
                reason: WireDenyReason::from_code(body[0])?,
            })
        }
        T_STAGE => {
            let (period_id, token) = take_token(body)?;
            Ok(Message::Stage { period_id, token })
        }
        T_STAGE_OK => Ok(Message::StageOk),
        other => Err(WireError::BadType(other)),
    }
}

fn put_token(out: &mut Vec<u8>, period_id: &str, token: &SignedToken) {
    out.extend_from_slice(&(period_id.len() as u16).to_be_bytes());
    out.extend_from_slice(period_id.as_bytes());
    out.extend_from_slice(&token.token.message_bytes());
    out.extend_from_slice(&(token.signature.len() as u16).to_be_bytes());
    out.extend_from_slice(&token.signature);
}

fn take_token(body: &[u8]) -> Result<(String, SignedToken), WireError> {
    if body.len() < 2 {
        return Err(WireError::Malformed);
    }
    let pid_len = u16::from_be_bytes([body[0], body[1]]) as usize;
    let rest = &body[2..];
    if rest.len() < pid_len + 64 + 2 {
        return Err(WireError::Malformed);
    }
    let period_id = String::from_utf8(rest[..pid_len].to_vec()).map_err(|_| WireError::Malformed)?;
    let m = &rest[pid_len..pid_len + 64];
    let sig_len_off = pid_len + 64;
    let sig_len = u16::from_be_bytes([rest[sig_len_off], rest[sig_len_off + 1]]) as usize;
    let sig_start = sig_len_off + 2;
    if rest.len() != sig_start + sig_len {
        return Err(WireError::Malformed);
    }
    let token = Token::parse(m).map_err(|_| WireError::Malformed)?;
    Ok((
        period_id,
        SignedToken {
            token,
            signature: rest[sig_start..].to_vec(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn signed_token() -> SignedToken {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        SignedToken {
            token: Token::new(42, &mut rng),
            signature: vec![0xCD; 256],
        }
    }

    #[test]
    fn all_messages_round_trip() {
        let msgs = vec![
            Message::Auth { period_id: "2026-08".into(), token: signed_token() },
            Message::AuthOk { until_epoch_s: 123_456 },
            Message::AuthFail { reason: WireDenyReason::DoubleSpend },
            Message::Stage { period_id: "2026-08".into(), token: signed_token() },
            Message::StageOk,
        ];
        for msg in msgs {
            let mut buf = Vec::new();
            write_message(&mut buf, &msg).unwrap();
            let back = read_message(&mut buf.as_slice()).unwrap();
            assert_eq!(back, msg);
        }
    }

    #[test]
    fn version_byte_is_first() {
        let mut buf = Vec::new();
        write_message(&mut buf, &Message::StageOk).unwrap();
        assert_eq!(buf[4], WIRE_VERSION);
        buf[4] = 99;
        assert!(matches!(
            read_message(&mut buf.as_slice()),
            Err(WireError::BadVersion(99))
        ));
    }

    #[test]
    fn oversized_frame_rejected() {
        let mut buf = Vec::new();
        buf.extend_from_slice(&(MAX_FRAME + 1).to_be_bytes());
        assert!(matches!(
            read_message(&mut buf.as_slice()),
            Err(WireError::FrameTooLarge(_))
        ));
    }

    #[test]
    fn truncated_token_is_malformed() {
        let mut buf = Vec::new();
        write_message(
            &mut buf,
            &Message::Auth { period_id: "p".into(), token: signed_token() },
        )
        .unwrap();
        // chop the signature bytes but fix the frame length
        let cut = buf.len() - 10;
        let mut short = buf[..cut].to_vec();
        let new_len = (cut - 4) as u32;
        short[..4].copy_from_slice(&new_len.to_be_bytes());
        assert!(matches!(
            read_message(&mut short.as_slice()),
            Err(WireError::Malformed)
        ));
    }

    #[test]
    fn only_store_outage_is_retryable() {
        assert!(WireDenyReason::StoreUnavailable.retryable());
        for r in [
            WireDenyReason::BadSignature,
            WireDenyReason::WrongSlice,
            WireDenyReason::DoubleSpend,
            WireDenyReason::NoSession,
        ] {
            assert!(!r.retryable());
        }
    }
}
