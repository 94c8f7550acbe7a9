//! Structured decision log (JSONL) and the audit replayer that proves
//! "no forwarding without an accepted token".

use serde::{Deserialize, Serialize};
use std::io::Write;
use std::sync::{Arc, Mutex};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Event {
    AuthOk,
    AuthFail,
    StageOk,
    StageFail,
    RolloverOk,
    RolloverFail,
    Forward,
    Drop,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionEvent {
    pub ts_epoch_s: u64,
    pub address: String,
    pub event: Event,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Authorization horizon granted by an accepting event.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub until_epoch_s: Option<u64>,
}

/// Append-only JSONL sink; cloneable handle shared by all sessions.
#[derive(Clone)]
pub struct DecisionLog {
    sink: Arc<Mutex<Box<dyn Write + Send>>>,
}

impl DecisionLog {
    pub fn new(sink: Box<dyn Write + Send>) -> DecisionLog {
        DecisionLog {
            sink: Arc::new(Mutex::new(sink)),
        }
    }

    /// Log to an in-memory buffer (tests, audits).
    pub fn in_memory() -> (DecisionLog, Arc<Mutex<Vec<u8>>>) {
        let buf = Arc::new(Mutex::new(Vec::new()));
        let writer = SharedBuf(Arc::clone(&buf));
        (DecisionLog::new(Box::new(writer)), buf)
    }

    pub fn record(&self, event: &DecisionEvent) {
        let mut sink = self.sink.lock().expect("log mutex poisoned");
        // a full log must never block decisions; drop the line on error
        if let Ok(line) = serde_json::to_string(event) {
            let _ = writeln!(sink, "{line}");
            let _ = sink.flush();
        }
    }
}

struct SharedBuf(Arc<Mutex<Vec<u8>>>);

impl Write for SharedBuf {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().expect("buf mutex").extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AuditViolation {
    #[error("line {line}: forward at {ts} for {address} without authorization")]
    ForwardWithoutAuth { line: usize, ts: u64, address: String },
    #[error("line {line}: forward at {ts} for {address} after expiry {until}")]
    ForwardAfterExpiry {
        line: usize,
        ts: u64,
        address: String,
        until: u64,
    },
    #[error("line {line}: unparseable event")]
    BadLine { line: usize },
}

/// Replay a decision log and verify that every `forward` is covered by a
/// prior accepting event whose horizon had not passed.
pub fn audit_decision_log(jsonl: &str) -> Result<(), AuditViolation> {
    use std::collections::HashMap;
    let mut horizon: HashMap<String, u64> = HashMap::new();
    for (i, line) in jsonl.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let ev: DecisionEvent =
            serde_json::from_str(line).map_err(|_| AuditViolation::BadLine { line: i + 1 })?;
        match ev.event {
            Event::AuthOk | Event::RolloverOk => {
                let until = ev.until_epoch_s.ok_or(AuditViolation::BadLine { line: i + 1 })?;
                let h = horizon.entry(ev.address).or_insert(0);
                *h = (*h).max(until);
            }
            Event::Forward => match horizon.get(&ev.address) {
                None => {
                    return Err(AuditViolation::ForwardWithoutAuth {
                        line: i + 1,
                        ts: ev.ts_epoch_s,
                        address: ev.address,
                    })
                }
                Some(&until) if ev.ts_epoch_s >= until => {
                    return Err(AuditViolation::ForwardAfterExpiry {
                        line: i + 1,
                        ts: ev.ts_epoch_s,
                        address: ev.address,
                        until,
                    })
                }
                Some(_) => {}
            },
            _ => {}
        }
    }
    Ok(())
}
