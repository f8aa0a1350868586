//! On-disk cache of field invariants.
//!
//! One JSON file per key, named after the key. Writers go through a temporary
//! file in the same directory and an atomic rename, so readers never observe a
//! partial entry; entries are deterministic, so racing writers agree.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::FORMAT_VERSION;
use crate::numfield::{ClassGroup, ClassGroupRecord, Field, UnitGroup, UnitGroupRecord};

pub const CACHE_ENV: &str = "TORUSCL_CACHE_DIR";
pub const DEFAULT_CACHE_DIR: &str = ".toruscl-cache";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheKey {
    /// Field identifier, e.g. `-5` or `-5,-1`.
    pub field: String,
    /// The place set, or `-` for data independent of `S`.
    pub s: String,
    pub kind: String,
}

impl CacheKey {
    fn file_name(&self) -> String {
        let raw = format!("{}__{}__{}", self.kind, self.field, self.s);
        let safe: String = raw
            .chars()
            .map(|c| match c {
                'a'..='z' | 'A'..='Z' | '0'..='9' | '_' => c,
                '-' => 'm',
                _ => '.',
            })
            .collect();
        format!("{safe}.json")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub format_version: u32,
    pub key: CacheKey,
    /// Parameters the payload was computed with.
    pub params: Value,
    pub payload: Value,
}

#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    /// `$TORUSCL_CACHE_DIR`, else `./.toruscl-cache`.
    pub fn from_env() -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(d) if !d.is_empty() => Cache::new(d),
            _ => Cache::new(DEFAULT_CACHE_DIR),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// The entry for `key`, or `None` on a miss, a version mismatch, or a damaged file.
    pub fn get(&self, key: &CacheKey) -> Option<CacheEntry> {
        let text = fs::read_to_string(self.dir.join(key.file_name())).ok()?;
        let entry: CacheEntry = serde_json::from_str(&text).ok()?;
        (entry.format_version == FORMAT_VERSION && entry.key == *key).then_some(entry)
    }

    pub fn put(&self, entry: &CacheEntry) -> io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let target = self.dir.join(entry.key.file_name());
        let tmp = self.dir.join(format!(
            ".{}.{}.{}.tmp",
            entry.key.file_name(),
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let text = serde_json::to_string(entry).map_err(io::Error::other)?;
        let mut f = fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
        drop(f);
        fs::rename(&tmp, &target).inspect_err(|_| {
            let _ = fs::remove_file(&tmp);
        })
    }

    /// Removes every cache file; returns how many were removed.
    pub fn clear(&self) -> io::Result<usize> {
        let mut n = 0;
        let entries = match fs::read_dir(&self.dir) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(0),
            Err(e) => return Err(e),
        };
        for e in entries {
            let path = e?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if path.is_file() && (name.ends_with(".json") || name.ends_with(".tmp")) {
                fs::remove_file(&path)?;
                n += 1;
            }
        }
        Ok(n)
    }

    /// Installs cached units and class group into `k`, computing and storing
    /// whatever is missing. Cache I/O failures fall back to computing.
    pub fn prepare_field(&self, k: &Field) -> crate::Result<()> {
        if k.degree() == 1 {
            return Ok(());
        }
        let units_key = CacheKey { field: k.key(), s: "-".into(), kind: "units".into() };
        match self.get(&units_key).and_then(|e| serde_json::from_value::<UnitGroupRecord>(e.payload).ok()) {
            Some(r) => {
                k.seed_units(UnitGroup::from_record(k, &r)?);
            }
            None => {
                let r = k.units()?.record();
                let _ = self.put(&CacheEntry {
                    format_version: FORMAT_VERSION,
                    key: units_key,
                    params: Value::Null,
                    payload: serde_json::to_value(r).expect("record serializes"),
                });
            }
        }
        let cg_key = CacheKey { field: k.key(), s: "-".into(), kind: "class_group".into() };
        match self.get(&cg_key).and_then(|e| serde_json::from_value::<ClassGroupRecord>(e.payload).ok()) {
            Some(r) => {
                k.seed_class_group(ClassGroup::from_record(k, &r)?);
            }
            None => {
                let cg = k.class_group()?;
                let _ = self.put(&CacheEntry {
                    format_version: FORMAT_VERSION,
                    key: cg_key,
                    params: serde_json::json!({ "budget": cg.record().budget, "bound": cg.factor_base_bound() }),
                    payload: serde_json::to_value(cg.record()).expect("record serializes"),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(kind: &str, payload: Value) -> CacheEntry {
        CacheEntry {
            format_version: FORMAT_VERSION,
            key: CacheKey { field: "-5".into(), s: "{inf}".into(), kind: kind.into() },
            params: Value::Null,
            payload,
        }
    }

    #[test]
    fn put_then_get() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path());
        let e = entry("x", serde_json::json!({"a": [1, 2]}));
        c.put(&e).unwrap();
        assert_eq!(c.get(&e.key), Some(e));
    }

    #[test]
    fn version_mismatch_is_a_miss() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path());
        let mut e = entry("x", Value::Null);
        e.format_version = FORMAT_VERSION + 1;
        c.put(&e).unwrap();
        assert_eq!(c.get(&e.key), None);
    }

    #[test]
    fn concurrent_writers_leave_a_valid_entry() {
        let dir = tempfile::tempdir().unwrap();
        let e = entry("x", serde_json::json!({"payload": "same"}));
        std::thread::scope(|s| {
            for _ in 0..8 {
                let c = Cache::new(dir.path());
                let e = e.clone();
                s.spawn(move || {
                    for _ in 0..20 {
                        c.put(&e).unwrap();
                        assert_eq!(c.get(&e.key).as_ref(), Some(&e));
                    }
                });
            }
        });
        let left: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(left.len(), 1);
    }

    #[test]
    fn seeded_field_matches_fresh() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path());
        let cold = Field::quadratic(-23).unwrap();
        c.prepare_field(&cold).unwrap();
        let warm = Field::quadratic(-23).unwrap();
        c.prepare_field(&warm).unwrap();
        assert_eq!(cold.class_group().unwrap().record(), warm.class_group().unwrap().record());
        assert_eq!(cold.units().unwrap().record(), warm.units().unwrap().record());
        assert_eq!(c.clear().unwrap(), 2);
    }
}
