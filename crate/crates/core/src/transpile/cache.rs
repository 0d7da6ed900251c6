use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::TranspiledCircuit;

pub const DEFAULT_CAPACITY: usize = 1024;

pub type CacheKey = [u8; 32];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub evictions: u64,
    pub entries: usize,
    pub capacity: usize,
}

/// SHA-256 over the concatenated key material.
pub fn content_key(parts: &[&[u8]]) -> CacheKey {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().into()
}

#[derive(Debug, Default)]
struct Inner {
    entries: HashMap<CacheKey, (Arc<TranspiledCircuit>, u64)>,
    by_age: BTreeMap<u64, CacheKey>,
    tick: u64,
    stats: CacheStats,
}

/// Least-recently-used store of transpilation results.
///
/// Lookups and inserts take a single lock; the transpilation itself runs
/// outside it, so two threads missing on the same key may both compute.
#[derive(Debug)]
pub struct TranspileCache {
    capacity: usize,
    inner: Mutex<Inner>,
}

impl Default for TranspileCache {
    fn default() -> Self {
        Self::new(DEFAULT_CAPACITY)
    }
}

impl TranspileCache {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            inner: Mutex::new(Inner::default()),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Looks up `key`, counting a hit or a miss.
    pub fn get(&self, key: &CacheKey) -> Option<Arc<TranspiledCircuit>> {
        let mut inner = self.inner.lock().unwrap();
        inner.tick += 1;
        let tick = inner.tick;
        let found = match inner.entries.get_mut(key) {
            Some((value, age)) => {
                let old = std::mem::replace(age, tick);
                Some((value.clone(), old))
            }
            None => None,
        };
        match found {
            Some((value, old)) => {
                inner.by_age.remove(&old);
                inner.by_age.insert(tick, *key);
                inner.stats.hits += 1;
                Some(value)
            }
            None => {
                inner.stats.misses += 1;
                None
            }
        }
    }

    pub fn insert(&self, key: CacheKey, value: Arc<TranspiledCircuit>) {
        if self.capacity == 0 {
            return;
        }
        let mut inner = self.inner.lock().unwrap();
        inner.tick += 1;
        let tick = inner.tick;
        if let Some((_, old)) = inner.entries.insert(key, (value, tick)) {
            inner.by_age.remove(&old);
        }
        inner.by_age.insert(tick, key);
        while inner.entries.len() > self.capacity {
            let (_, oldest) = inner.by_age.pop_first().expect("age index tracks entries");
            inner.entries.remove(&oldest);
            inner.stats.evictions += 1;
        }
    }

    pub fn stats(&self) -> CacheStats {
        let inner = self.inner.lock().unwrap();
        CacheStats {
            entries: inner.entries.len(),
            capacity: self.capacity,
            ..inner.stats
        }
    }

    pub fn clear(&self) {
        let mut inner = self.inner.lock().unwrap();
        inner.entries.clear();
        inner.by_age.clear();
    }
}
