//! Append-only on-disk completion cache.
//!
//! Layout: `<cache_dir>/completions.jsonl`, one JSON record per line:
//!
//! ```text
//! {"key":"<sha256>","request_digest":"<sha256>","timestamp":1718000000,"completion":"..."}
//! ```
//!
//! Each record is written with a single `write_all` on a file opened in append
//! mode while holding the writer lock, so concurrent writers in this process
//! never interleave bytes. Lines that fail to parse (e.g. a torn final line
//! after a crash) are ignored on load. Later records win. Eviction is manual:
//! delete the file or edit it.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CACHE_FILE: &str = "completions.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: String,
    pub request_digest: String,
    pub timestamp: u64,
    pub completion: String,
}

#[derive(Debug)]
pub struct ResponseCache {
    path: PathBuf,
    entries: RwLock<HashMap<String, String>>,
    writer: Mutex<()>,
}

impl ResponseCache {
    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(CACHE_FILE);
        let mut entries = HashMap::new();
        if path.exists() {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            for line in text.lines() {
                if let Ok(rec) = serde_json::from_str::<CacheRecord>(line) {
                    entries.insert(rec.key, rec.completion);
                }
            }
        }
        Ok(Self {
            path,
            entries: RwLock::new(entries),
            writer: Mutex::new(()),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.entries.read().ok()?.get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.read().map(|e| e.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn put(&self, record: CacheRecord) -> Result<()> {
        let mut line = serde_json::to_string(&record)?;
        line.push('\n');
        let _guard = self
            .writer
            .lock()
            .map_err(|_| Error::Cache("writer lock poisoned".into()))?;
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::io(&self.path, e))?;
        file.write_all(line.as_bytes())
            .and_then(|_| file.flush())
            .map_err(|e| Error::io(&self.path, e))?;
        self.entries
            .write()
            .map_err(|_| Error::Cache("index lock poisoned".into()))?
            .insert(record.key, record.completion);
        Ok(())
    }
}
