//! Memoised compressed sizes keyed by content digest and compressor key.
//!
//! Persisted as CSV, one `digest,compressor_id,size` record per line. New
//! records are buffered and appended on [`SizeCache::flush`].

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, RwLock};

use super::CompressError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeRecord {
    pub content_digest: String,
    pub compressor_id: String,
    pub size: u64,
}

#[derive(Debug, Default)]
pub struct SizeCache {
    entries: RwLock<HashMap<(String, String), u64>>,
    pending: Mutex<Vec<SizeRecord>>,
    path: Option<PathBuf>,
    computations: AtomicU64,
}

impl SizeCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or prepares to create) a persisted cache. Malformed lines are skipped.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, CompressError> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            for line in BufReader::new(File::open(&path)?).lines() {
                let line = line?;
                let mut fields = line.trim().splitn(3, ',');
                let (Some(d), Some(id), Some(size)) = (fields.next(), fields.next(), fields.next())
                else {
                    continue;
                };
                match size.parse::<u64>() {
                    Ok(size) => {
                        entries.insert((d.to_string(), id.to_string()), size);
                    }
                    Err(_) => log::warn!("skipping malformed cache line in {}", path.display()),
                }
            }
        }
        Ok(Self { entries: RwLock::new(entries), path: Some(path), ..Self::default() })
    }

    pub fn get(&self, digest: &str, compressor_id: &str) -> Option<u64> {
        self.entries
            .read()
            .unwrap()
            .get(&(digest.to_string(), compressor_id.to_string()))
            .copied()
    }

    pub fn insert(&self, digest: String, compressor_id: String, size: u64) {
        let mut entries = self.entries.write().unwrap();
        if entries.insert((digest.clone(), compressor_id.clone()), size).is_none() {
            self.pending.lock().unwrap().push(SizeRecord {
                content_digest: digest,
                compressor_id,
                size,
            });
        }
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn record_computation(&self) {
        self.computations.fetch_add(1, Ordering::Relaxed);
    }

    /// Number of sizes actually computed (cache misses) through this handle.
    pub fn computations(&self) -> u64 {
        self.computations.load(Ordering::Relaxed)
    }

    /// Appends records added since the last flush. A no-op for in-memory caches.
    pub fn flush(&self) -> Result<(), CompressError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let mut pending = self.pending.lock().unwrap();
        if pending.is_empty() {
            return Ok(());
        }
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let mut w = BufWriter::new(file);
        for r in pending.iter() {
            writeln!(w, "{},{},{}", r.content_digest, r.compressor_id, r.size)?;
        }
        w.flush()?;
        pending.clear();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compressor::{compressed_size, CompressorSpec};

    #[test]
    fn second_call_is_a_hit() {
        let cache = SizeCache::in_memory();
        let spec = CompressorSpec::blocksort();
        let data = b"ab".repeat(5000);
        let first = compressed_size(&spec, &data, &cache).unwrap();
        assert_eq!(cache.computations(), 1);
        let second = compressed_size(&spec, &data, &cache).unwrap();
        assert_eq!(first, second);
        assert_eq!(cache.computations(), 1);
        compressed_size(&CompressorSpec::lz(), &data, &cache).unwrap();
        assert_eq!(cache.computations(), 2);
    }

    #[test]
    fn persists_and_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("sizes.csv");
        let spec = CompressorSpec::blocksort();
        {
            let cache = SizeCache::open(&path).unwrap();
            compressed_size(&spec, b"hello", &cache).unwrap();
            compressed_size(&spec, b"world", &cache).unwrap();
            cache.flush().unwrap();
            cache.flush().unwrap();
        }
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().all(|l| l.split(',').count() == 3));

        let cache = SizeCache::open(&path).unwrap();
        assert_eq!(cache.len(), 2);
        compressed_size(&spec, b"hello", &cache).unwrap();
        assert_eq!(cache.computations(), 0);
    }
}
