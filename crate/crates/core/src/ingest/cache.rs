//! Content-addressed response cache.
//!
//! Each entry lives in `<dir>/<sha256(key)>.json` and holds the request key,
//! the response body verbatim and the fetch time. Entries are written to a
//! temporary file in the same directory and then renamed into place; an
//! existing entry is never replaced.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    /// Seconds since the Unix epoch.
    pub fetched_at: u64,
    pub payload: String,
}

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

/// Request key for a URL fetched from `endpoint`.
pub fn request_key(endpoint: &str, url: &str) -> String {
    format!("{endpoint}\n{url}")
}

pub fn key_hash(key: &str) -> String {
    let digest = Sha256::digest(key.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{}.json", key_hash(key)))
    }

    pub fn get(&self, key: &str) -> Result<Option<CacheEntry>> {
        let path = self.path_for(key);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let entry: CacheEntry = serde_json::from_str(&text).map_err(|e| {
            Error::integrity(format!("corrupt cache entry {}: {e}", path.display()))
        })?;
        if entry.key != key {
            return Err(Error::integrity(format!(
                "cache entry {} belongs to another key",
                path.display()
            )));
        }
        Ok(Some(entry))
    }

    /// Stores `payload` under `key` unless an entry already exists; returns
    /// the entry now on disk.
    pub fn put(&self, key: &str, payload: &str) -> Result<CacheEntry> {
        if let Some(existing) = self.get(key)? {
            return Ok(existing);
        }
        std::fs::create_dir_all(&self.dir)?;
        let fetched_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let entry = CacheEntry {
            key: key.to_string(),
            fetched_at,
            payload: payload.to_string(),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(
            serde_json::to_string(&entry)
                .expect("entry serializes")
                .as_bytes(),
        )?;
        tmp.as_file().sync_all()?;
        match tmp.persist_noclobber(self.path_for(key)) {
            Ok(_) => Ok(entry),
            // Another writer got there first; keep theirs.
            Err(e) if e.error.kind() == std::io::ErrorKind::AlreadyExists => self
                .get(key)?
                .ok_or_else(|| Error::integrity("cache entry vanished")),
            Err(e) => Err(e.error.into()),
        }
    }
}
