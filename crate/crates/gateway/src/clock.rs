//! Time sources and the slice clock.

use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

pub trait TimeSource: Send + Sync {
    fn now_epoch_s(&self) -> u64;
}

pub struct SystemTimeSource;

impl TimeSource for SystemTimeSource {
    fn now_epoch_s(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .expect("system clock before epoch")
            .as_secs()
    }
}

/// Settable clock for tests and replays.
#[derive(Default)]
pub struct ManualClock {
    now: AtomicU64,
}

impl ManualClock {
    pub fn at(epoch_s: u64) -> ManualClock {
        ManualClock {
            now: AtomicU64::new(epoch_s),
        }
    }

    pub fn set(&self, epoch_s: u64) {
        self.now.store(epoch_s, Ordering::SeqCst);
    }

    pub fn advance(&self, secs: u64) {
        self.now.fetch_add(secs, Ordering::SeqCst);
    }
}

impl TimeSource for ManualClock {
    fn now_epoch_s(&self) -> u64 {
        self.now.load(Ordering::SeqCst)
    }
}

/// Maps wall time onto billing-period slice indices.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SliceConfig {
    pub period_start_epoch_s: u64,
    pub slice_seconds: u64,
}

impl SliceConfig {
    /// Slice index covering `t`; times before the period clamp to slice 0.
    pub fn slice_of(&self, t: u64) -> u64 {
        t.saturating_sub(self.period_start_epoch_s) / self.slice_seconds
    }

    /// First second after `slice` ends.
    pub fn end_of_slice(&self, slice: u64) -> u64 {
        self.period_start_epoch_s + (slice + 1) * self.slice_seconds
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_arithmetic() {
        let cfg = SliceConfig {
            period_start_epoch_s: 1000,
            slice_seconds: 60,
        };
        assert_eq!(cfg.slice_of(999), 0);
        assert_eq!(cfg.slice_of(1000), 0);
        assert_eq!(cfg.slice_of(1059), 0);
        assert_eq!(cfg.slice_of(1060), 1);
        assert_eq!(cfg.end_of_slice(0), 1060);
        assert_eq!(cfg.end_of_slice(2), 1180);
    }

    #[test]
    fn manual_clock() {
        let c = ManualClock::at(5);
        assert_eq!(c.now_epoch_s(), 5);
        c.advance(10);
        assert_eq!(c.now_epoch_s(), 15);
        c.set(3);
        assert_eq!(c.now_epoch_s(), 3);
    }
}
