//! Spent-token stores: the one shared linearization point for double-spend
//! detection.
//!
//! The store keys on a 256-bit digest of the token message, never the token
//! itself, and `insert_if_absent` is an atomic test-and-set: for any number
//! of concurrent presenters of one token, exactly one sees `Fresh`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    /// The backend cannot currently answer; callers must treat this as
    /// retryable and never as an accept.
    #[error("spent-token store unavailable: {0}")]
    Unavailable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    Fresh,
    AlreadyPresent,
}

/// Key of one spent token: period, slice, and the digest of `i ‖ r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpentKey {
    pub period_id: String,
    pub slice_index: u64,
    pub digest_hex: String,
}

impl SpentKey {
    pub fn from_message(period_id: &str, slice_index: u64, message: &[u8]) -> SpentKey {
        let mut h = Sha256::new();
        h.update(b"pgpp-spent-v1");
        h.update(message);
        SpentKey {
            period_id: period_id.to_string(),
            slice_index,
            digest_hex: hex::encode(h.finalize()),
        }
    }
}

pub trait SpentTokenStore: Send + Sync {
    /// Atomic test-and-set; `Fresh` for the first insert of a key,
    /// `AlreadyPresent` for every subsequent one.
    fn insert_if_absent(&self, key: &SpentKey) -> Result<InsertOutcome, StoreError>;

    fn contains(&self, key: &SpentKey) -> Result<bool, StoreError>;

    fn len(&self) -> Result<usize, StoreError>;

    fn is_empty(&self) -> Result<bool, StoreError> {
        Ok(self.len()? == 0)
    }
}

/// Volatile store for tests and simulations.
#[derive(Default)]
pub struct MemoryStore {
    set: Mutex<HashSet<SpentKey>>,
}

impl MemoryStore {
    pub fn new() -> MemoryStore {
        MemoryStore::default()
    }
}

impl SpentTokenStore for MemoryStore {
    fn insert_if_absent(&self, key: &SpentKey) -> Result<InsertOutcome, StoreError> {
        let mut set = self.set.lock().expect("store mutex poisoned");
        Ok(if set.insert(key.clone()) {
            InsertOutcome::Fresh
        } else {
            InsertOutcome::AlreadyPresent
        })
    }

    fn contains(&self, key: &SpentKey) -> Result<bool, StoreError> {
        Ok(self.set.lock().expect("store mutex poisoned").contains(key))
    }

    fn len(&self) -> Result<usize, StoreError> {
        Ok(self.set.lock().expect("store mutex poisoned").len())
    }
}

/// Append-only durable store: one tab-separated line per spent token,
/// flushed on every accept and replayed on open.
pub struct FileStore {
    inner: Mutex<FileStoreInner>,
}

struct FileStoreInner {
    set: HashSet<SpentKey>,
    writer: BufWriter<File>,
}

impl FileStore {
    pub fn open<P: AsRef<Path>>(path: P) -> Result<FileStore, StoreError> {
        let path = path.as_ref();
        let mut set = HashSet::new();
        if path.exists() {
            let file = File::open(path).map_err(|e| StoreError::Unavailable(e.to_string()))?;
            for (lineno, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| StoreError::Unavailable(e.to_string()))?;
                if line.is_empty() {
                    continue;
                }
                let mut parts = line.splitn(3, '\t');
                let (Some(period), Some(slice), Some(digest)) =
                    (parts.next(), parts.next(), parts.next())
                else {
                    return Err(StoreError::Unavailable(format!(
                        "corrupt store line {}",
                        lineno + 1
                    )));
                };
                let slice_index = slice.parse::<u64>().map_err(|e| {
                    StoreError::Unavailable(format!("corrupt store line {}: {e}", lineno + 1))
                })?;
                set.insert(SpentKey {
                    period_id: period.to_string(),
                    slice_index,
                    digest_hex: digest.to_string(),
                });
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| StoreError::Unavailable(e.to_string()))?;
        Ok(FileStore {
            inner: Mutex::new(FileStoreInner {
                set,
                writer: BufWriter::new(file),
            }),
        })
    }
}

impl SpentTokenStore for FileStore {
    fn insert_if_absent(&self, key: &SpentKey) -> Result<InsertOutcome, StoreError> {
        let mut inner = self.inner.lock().expect("store mutex poisoned");
        if inner.set.contains(key) {
            return Ok(InsertOutcome::AlreadyPresent);
        }
        writeln!(
            inner.writer,
            "{}\t{}\t{}",
            key.period_id, key.slice_index, key.digest_hex
        )
        .and_then(|_| inner.writer.flush())
        .map_err(|e| StoreError::Unavailable(e.to_string()))?;
        inner.set.insert(key.clone());
        Ok(InsertOutcome::Fresh)
    }

    fn contains(&self, key: &SpentKey) -> Result<bool, StoreError> {
        Ok(self.inner.lock().expect("store mutex poisoned").set.contains(key))
    }

    fn len(&self) -> Result<usize, StoreError> {
        Ok(self.inner.lock().expect("store mutex poisoned").set.len())
    }
}

/// Store stand-in for an unreachable backend; every call fails retryably.
pub struct UnavailableStore;

impl SpentTokenStore for UnavailableStore {
    fn insert_if_absent(&self, _key: &SpentKey) -> Result<InsertOutcome, StoreError> {
        Err(StoreError::Unavailable("backend partitioned".into()))
    }

    fn contains(&self, _key: &SpentKey) -> Result<bool, StoreError> {
        Err(StoreError::Unavailable("backend partitioned".into()))
    }

    fn len(&self) -> Result<usize, StoreError> {
        Err(StoreError::Unavailable("backend partitioned".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn key(i: u64) -> SpentKey {
        SpentKey::from_message("p", i, &i.to_be_bytes())
    }

    #[test]
    fn memory_test_and_set() {
        let store = MemoryStore::new();
        assert_eq!(store.insert_if_absent(&key(1)).unwrap(), InsertOutcome::Fresh);
        assert_eq!(
            store.insert_if_absent(&key(1)).unwrap(),
            InsertOutcome::AlreadyPresent
        );
        assert!(store.contains(&key(1)).unwrap());
        assert!(!store.contains(&key(2)).unwrap());
    }

    #[test]
    fn concurrent_presenters_one_winner() {
        for &threads in &[2usize, 8, 64] {
            let store = Arc::new(MemoryStore::new());
            let k = key(9);
            let wins: usize = std::thread::scope(|s| {
                let handles: Vec<_> = (0..threads)
                    .map(|_| {
                        let store = Arc::clone(&store);
                        let k = k.clone();
                        s.spawn(move || {
                            matches!(store.insert_if_absent(&k).unwrap(), InsertOutcome::Fresh)
                        })
                    })
                    .collect();
                handles.into_iter().filter_map(|h| h.join().unwrap().then_some(())).count()
            });
            assert_eq!(wins, 1, "threads = {threads}");
        }
    }

    #[test]
    fn file_store_survives_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spent.log");
        {
            let store = FileStore::open(&path).unwrap();
            assert_eq!(store.insert_if_absent(&key(1)).unwrap(), InsertOutcome::Fresh);
            assert_eq!(store.insert_if_absent(&key(2)).unwrap(), InsertOutcome::Fresh);
            assert_eq!(
                store.insert_if_absent(&key(1)).unwrap(),
                InsertOutcome::AlreadyPresent
            );
        }
        let store = FileStore::open(&path).unwrap();
        assert_eq!(store.len().unwrap(), 2);
        assert!(store.contains(&key(1)).unwrap());
        assert_eq!(
            store.insert_if_absent(&key(2)).unwrap(),
            InsertOutcome::AlreadyPresent
        );
        assert_eq!(store.insert_if_absent(&key(3)).unwrap(), InsertOutcome::Fresh);
    }

    #[test]
    fn unavailable_store_never_accepts() {
        let store = UnavailableStore;
        assert!(matches!(
            store.insert_if_absent(&key(1)),
            Err(StoreError::Unavailable(_))
        ));
    }

    #[test]
    fn digest_hides_message_but_is_stable() {
        let a = SpentKey::from_message("p", 1, b"message");
        let b = SpentKey::from_message("p", 1, b"message");
        let c = SpentKey::from_message("p", 1, b"other");
        assert_eq!(a, b);
        assert_ne!(a.digest_hex, c.digest_hex);
        assert!(!a.digest_hex.contains("message"));
    }
}
