//! On-disk cache of stationary mode pairs.
//!
//! An entry is a file named by the SHA-256 of its key. The first line holds
//! the SHA-256 of the body; the body is the JSON encoding of the value. Any
//! entry that fails to read, verify or parse is treated as a miss.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Bumped whenever cached values would change for the same key.
pub const FORMAT_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Stable hash of any serialisable key.
pub fn key_of<K: Serialize>(key: &K) -> String {
    let body = serde_json::to_vec(&(FORMAT_VERSION, key)).expect("keys serialise");
    sha256_hex(&body)
}

#[derive(Debug)]
pub enum Lookup<T> {
    Hit(T),
    Miss,
    /// Present but unusable; the message says why.
    Corrupt(String),
}

#[derive(Debug, Clone)]
pub struct ModeCache {
    dir: PathBuf,
}

impl ModeCache {
    pub fn new(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Lookup<T> {
        let path = self.path(key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Lookup::Miss,
            Err(e) => return Lookup::Corrupt(format!("{}: {e}", path.display())),
        };
        let Some(split) = bytes.iter().position(|&b| b == b'\n') else {
            return Lookup::Corrupt(format!("{}: missing checksum line", path.display()));
        };
        let (head, body) = (&bytes[..split], &bytes[split + 1..]);
        if head != sha256_hex(body).as_bytes() {
            return Lookup::Corrupt(format!("{}: checksum mismatch", path.display()));
        }
        match serde_json::from_slice(body) {
            Ok(v) => Lookup::Hit(v),
            Err(e) => Lookup::Corrupt(format!("{}: {e}", path.display())),
        }
    }

    /// Writes through a temporary file so readers never see partial entries.
    pub fn put<T: Serialize>(&self, key: &str, value: &T) -> std::io::Result<()> {
        let body = serde_json::to_vec(value).map_err(std::io::Error::other)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(sha256_hex(&body).as_bytes())?;
        tmp.write_all(b"\n")?;
        tmp.write_all(&body)?;
        tmp.persist(self.path(key)).map_err(|e| e.error)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let c = ModeCache::new(dir.path()).unwrap();
        let v = vec![0.1f64, 1.0 / 3.0, 2f64.sqrt(), 1e-300, -7.25e17];
        let k = key_of(&("x", 1));
        assert!(matches!(c.get::<Vec<f64>>(&k), Lookup::Miss));
        c.put(&k, &v).unwrap();
        match c.get::<Vec<f64>>(&k) {
            Lookup::Hit(w) => {
                for (a, b) in v.iter().zip(&w) {
                    assert_eq!(a.to_bits(), b.to_bits());
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncated_entry_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let c = ModeCache::new(dir.path()).unwrap();
        let k = key_of(&"y");
        c.put(&k, &vec![1.0f64; 100]).unwrap();
        let p = c.path(&k);
        let b = fs::read(&p).unwrap();
        fs::write(&p, &b[..b.len() / 2]).unwrap();
        assert!(matches!(c.get::<Vec<f64>>(&k), Lookup::Corrupt(_)));
    }

    #[test]
    fn keys_differ() {
        assert_ne!(key_of(&(1.0f64, 2.0f64)), key_of(&(1.0f64, 2.0000000001f64)));
        assert_eq!(key_of(&"a"), key_of(&"a"));
    }
}
