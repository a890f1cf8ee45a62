//! Content-addressed result cache.
//!
//! Keys are SHA-256 digests of a canonical JSON description of the computation with ε left
//! out; each file records the ε it was computed at, and an entry only answers requests at
//! that ε or looser.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const DEFAULT_SUBDIR: &str = ".cache/indef-theta-lab";
pub const ENV_VAR: &str = "MJF_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Hit,
    Miss,
    /// Entry present but computed at a looser ε.
    Stale,
    /// Entry present but unreadable; recomputed.
    Corrupt,
    Disabled,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Hit => "hit",
            Status::Miss => "miss",
            Status::Stale => "stale",
            Status::Corrupt => "corrupt",
            Status::Disabled => "disabled",
        }
    }
}

pub struct Cache {
    dir: Option<PathBuf>,
}

/// flag > MJF_CACHE_DIR > ~/.cache/indef-theta-lab
pub fn resolve_dir(flag: Option<&Path>) -> Option<PathBuf> {
    if let Some(p) = flag {
        return Some(p.to_path_buf());
    }
    if let Some(p) = std::env::var_os(ENV_VAR).filter(|s| !s.is_empty()) {
        return Some(PathBuf::from(p));
    }
    std::env::var_os("HOME").map(|h| PathBuf::from(h).join(DEFAULT_SUBDIR))
}

impl Cache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        // an unwritable directory disables caching rather than failing the command
        let dir = dir.filter(|d| fs::create_dir_all(d).is_ok());
        Cache { dir }
    }

    pub fn disabled() -> Self {
        Cache { dir: None }
    }

    pub fn key(descr: &Value) -> String {
        let canon = serde_json::to_string(descr).expect("serializable");
        format!("{:x}", Sha256::digest(canon.as_bytes()))
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    pub fn lookup(&self, descr: &Value, eps: f64) -> (Option<Value>, Status) {
        let Some(path) = self.path(&Self::key(descr)) else {
            return (None, Status::Disabled);
        };
        let Ok(text) = fs::read_to_string(&path) else {
            return (None, Status::Miss);
        };
        let entry: Option<(f64, Value, Value)> = serde_json::from_str::<Value>(&text).ok().and_then(|v| {
            Some((v.get("eps")?.as_f64()?, v.get("key")?.clone(), v.get("value")?.clone()))
        });
        match entry {
            Some((e, k, v)) if &k == descr => {
                if e <= eps {
                    (Some(v), Status::Hit)
                } else {
                    (None, Status::Stale)
                }
            }
            _ => {
                eprintln!("warning: ignoring corrupt cache file {}", path.display());
                (None, Status::Corrupt)
            }
        }
    }

    pub fn store(&self, descr: &Value, eps: f64, value: &Value) {
        let Some(path) = self.path(&Self::key(descr)) else { return };
        let body = json!({"key": descr, "eps": eps, "value": value});
        let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
        let res = fs::File::create(&tmp)
            .and_then(|mut f| f.write_all(serde_json::to_string(&body).expect("serializable").as_bytes()))
            .and_then(|_| fs::rename(&tmp, &path));
        if let Err(e) = res {
            let _ = fs::remove_file(&tmp);
            eprintln!("warning: cache write failed: {e}");
        }
    }

    fn entries(&self) -> Vec<PathBuf> {
        let Some(d) = &self.dir else { return vec![] };
        let Ok(rd) = fs::read_dir(d) else { return vec![] };
        let mut v: Vec<PathBuf> =
            rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "json")).collect();
        v.sort();
        v
    }

    pub fn stats(&self) -> Value {
        let files = self.entries();
        let bytes: u64 = files.iter().filter_map(|p| fs::metadata(p).ok()).map(|m| m.len()).sum();
        json!({
            "dir": self.dir.as_ref().map(|d| d.display().to_string()),
            "enabled": self.dir.is_some(),
            "entries": files.len(),
            "bytes": bytes,
        })
    }

    pub fn clear(&self) -> std::io::Result<usize> {
        let files = self.entries();
        for f in &files {
            fs::remove_file(f)?;
        }
        Ok(files.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_staleness() {
        let d = tempfile::tempdir().unwrap();
        let c = Cache::new(Some(d.path().to_path_buf()));
        let k = json!({"kind": "t", "x": 1});
        assert_eq!(c.lookup(&k, 1e-10).1, Status::Miss);
        c.store(&k, 1e-10, &json!(42));
        assert_eq!(c.lookup(&k, 1e-10), (Some(json!(42)), Status::Hit));
        assert_eq!(c.lookup(&k, 1e-8).1, Status::Hit);
        assert_eq!(c.lookup(&k, 1e-12).1, Status::Stale);
        assert_eq!(c.stats()["entries"], 1);
        assert_eq!(c.clear().unwrap(), 1);
        assert_eq!(c.lookup(&k, 1e-10).1, Status::Miss);
    }

    #[test]
    fn corrupt_entry_is_reported() {
        let d = tempfile::tempdir().unwrap();
        let c = Cache::new(Some(d.path().to_path_buf()));
        let k = json!({"kind": "t"});
        fs::write(d.path().join(format!("{}.json", Cache::key(&k))), "{not json").unwrap();
        assert_eq!(c.lookup(&k, 1e-10).1, Status::Corrupt);
    }

    #[test]
    fn flag_beats_env() {
        let p = PathBuf::from("/tmp/x");
        assert_eq!(resolve_dir(Some(&p)), Some(p));
    }
}
