//! Shared in-memory cache with TTL expiry and LRU eviction.
//!
//! Expiry is lazy: an entry is checked when read and removed once its
//! deadline has passed. Inserting into a full cache first drops expired
//! entries and then, if still full, the least recently used one. Time comes
//! from an injected [`Clock`], so nothing here ever sleeps.
//!
//! Key scheme used by the gateway:
//! `stmt/<YYYY-MM>/<employee_id>` and `hist/<employee_id>/<from>/<to>`.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

pub use bytes::Bytes;
use payroll_core::clock::{Clock, SystemClock};

pub const DEFAULT_CAPACITY: usize = 1024;
pub const DEFAULT_TTL: Duration = Duration::from_secs(300);

pub fn statement_key(period: &str, employee_id: &str) -> String {
    format!("stmt/{period}/{employee_id}")
}

pub fn statement_prefix(period: &str) -> String {
    format!("stmt/{period}/")
}

pub fn history_key(employee_id: &str, from: &str, to: &str) -> String {
    format!("hist/{employee_id}/{from}/{to}")
}

pub const HISTORY_PREFIX: &str = "hist/";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheConfig {
    pub capacity: usize,
    pub default_ttl: Duration,
}

impl Default for CacheConfig {
    fn default() -> Self {
        CacheConfig { capacity: DEFAULT_CAPACITY, default_ttl: DEFAULT_TTL }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lookup {
    Hit,
    Miss,
}

impl Lookup {
    pub fn as_str(&self) -> &'static str {
        match self {
            Lookup::Hit => "HIT",
            Lookup::Miss => "MISS",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub entries: usize,
}

struct Entry {
    value: Bytes,
    expires_at: Duration,
    last_access: u64,
}

#[derive(Default)]
struct Inner {
    entries: HashMap<String, Entry>,
    /// access sequence number -> key, oldest first
    recency: BTreeMap<u64, String>,
    seq: u64,
    /// bumped by every invalidation; read-through fills from an older
    /// generation are dropped
    generation: u64,
}

impl Inner {
    fn touch(&mut self, key: &str) {
        self.seq += 1;
        let seq = self.seq;
        if let Some(entry) = self.entries.get_mut(key) {
            self.recency.remove(&entry.last_access);
            entry.last_access = seq;
            self.recency.insert(seq, key.to_string());
        }
    }

    fn remove(&mut self, key: &str) -> bool {
        match self.entries.remove(key) {
            Some(entry) => {
                self.recency.remove(&entry.last_access);
                true
            }
            None => false,
        }
    }

    fn make_room(&mut self, capacity: usize, now: Duration) {
        if self.entries.len() < capacity {
            return;
        }
        let expired: Vec<String> = self
            .entries
            .iter()
            .filter(|(_, e)| e.expires_at <= now)
            .map(|(k, _)| k.clone())
            .collect();
        for key in expired {
            self.remove(&key);
        }
        while self.entries.len() >= capacity {
            let Some((_, key)) = self.recency.pop_first() else { break };
            self.entries.remove(&key);
        }
    }
}

pub struct Cache {
    config: CacheConfig,
    clock: Arc<dyn Clock>,
    inner: Mutex<Inner>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl Default for Cache {
    fn default() -> Self {
        Cache::new(CacheConfig::default(), Arc::new(SystemClock::default()))
    }
}

impl Cache {
    /// Panics if `config.capacity` is zero.
    pub fn new(config: CacheConfig, clock: Arc<dyn Clock>) -> Self {
        assert!(config.capacity >= 1, "cache capacity must be at least 1");
        Cache {
            config,
            clock,
            inner: Mutex::new(Inner::default()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn config(&self) -> CacheConfig {
        self.config
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Stores `value` under `key` for `ttl`. A zero TTL stores nothing.
    pub fn put(&self, key: &str, value: impl Into<Bytes>, ttl: Duration) {
        let mut inner = self.lock();
        self.insert_locked(&mut inner, key, value.into(), ttl);
    }

    fn insert_locked(&self, inner: &mut Inner, key: &str, value: Bytes, ttl: Duration) {
        if ttl.is_zero() {
            inner.remove(key);
            return;
        }
        let now = self.clock.now();
        if !inner.remove(key) {
            inner.make_room(self.config.capacity, now);
        }
        inner.seq += 1;
        let seq = inner.seq;
        inner.entries.insert(
            key.to_string(),
            Entry { value, expires_at: now + ttl, last_access: seq },
        );
        inner.recency.insert(seq, key.to_string());
    }

    pub fn get(&self, key: &str) -> Option<Bytes> {
        let mut inner = self.lock();
        self.get_locked(&mut inner, key)
    }

    fn get_locked(&self, inner: &mut Inner, key: &str) -> Option<Bytes> {
        let now = self.clock.now();
        let live = match inner.entries.get(key) {
            None => None,
            Some(entry) if entry.expires_at <= now => {
                inner.remove(key);
                None
            }
            Some(entry) => Some(entry.value.clone()),
        };
        match live {
            Some(value) => {
                inner.touch(key);
                self.hits.fetch_add(1, Ordering::Relaxed);
                Some(value)
            }
            None => {
                self.misses.fetch_add(1, Ordering::Relaxed);
                None
            }
        }
    }

    /// Read-through: serves `key` from memory, or calls `load` and caches
    /// its result for the default TTL. A fill is discarded if an
    /// invalidation ran while `load` was in progress.
    pub fn get_or_load<E>(
        &self,
        key: &str,
        load: impl FnOnce() -> Result<Bytes, E>,
    ) -> Result<(Bytes, Lookup), E> {
        let generation = {
            let mut inner = self.lock();
            if let Some(value) = self.get_locked(&mut inner, key) {
                return Ok((value, Lookup::Hit));
            }
            inner.generation
        };
        let value = load()?;
        let mut inner = self.lock();
        if inner.generation == generation {
            self.insert_locked(&mut inner, key, value.clone(), self.config.default_ttl);
        }
        Ok((value, Lookup::Miss))
    }

    /// Removes every key starting with `prefix`; returns how many.
    pub fn invalidate(&self, prefix: &str) -> usize {
        let mut inner = self.lock();
        inner.generation += 1;
        let keys: Vec<String> = inner
            .entries
            .keys()
            .filter(|k| k.starts_with(prefix))
            .cloned()
            .collect();
        for key in &keys {
            inner.remove(key);
        }
        keys.len()
    }

    pub fn len(&self) -> usize {
        self.lock().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            entries: self.len(),
        }
    }
}
