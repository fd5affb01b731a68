//! On-disk result cache keyed by a content hash of the operation, its
//! canonical parameters and the configuration digest. Entries are written
//! to a temporary file and renamed into place.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::hex;
use crate::error::CliResult;
use crate::report::Record;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub record: Record,
    /// Seconds since the Unix epoch at insertion.
    pub timestamp: u64,
}

pub fn cache_key(op: &str, params: &BTreeMap<String, Value>, config_digest: &str) -> String {
    let canonical = serde_json::json!({ "op": op, "params": params, "config": config_digest });
    hex(&Sha256::digest(canonical.to_string().as_bytes()))
}

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn open(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// A readable entry for `key`; unreadable or mismatched files count as
    /// misses.
    pub fn get(&self, key: &str) -> Option<CacheEntry> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        let entry: CacheEntry = serde_json::from_str(&text).ok()?;
        (entry.key == key).then_some(entry)
    }

    pub fn put(&self, key: &str, record: &Record) -> CliResult<()> {
        let entry = CacheEntry {
            key: key.to_string(),
            record: record.clone(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        };
        let tmp = self.dir.join(format!(".{key}.{}.tmp", std::process::id()));
        fs::write(&tmp, serde_json::to_vec(&entry)?)?;
        fs::rename(&tmp, self.path(key))?;
        Ok(())
    }
}
