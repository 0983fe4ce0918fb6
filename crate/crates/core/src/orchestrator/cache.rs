//! Context-keyed LRU cache of completions.

use std::num::NonZeroUsize;
use std::sync::Mutex;

use lru::LruCache;
use sha2::{Digest, Sha256};

use crate::backend::Completion;
use crate::prompt::LcmInput;

pub const DEFAULT_CACHE_CAPACITY: usize = 512;

/// SHA-256 over the metadata, before and after context the model sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CacheKey([u8; 32]);

impl CacheKey {
    pub fn new(metadata: &str, before: &str, after: &str) -> Self {
        let mut h = Sha256::new();
        for part in [metadata, before, after] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        Self(h.finalize().into())
    }

    /// Key of a post-truncation model input.
    pub fn of_input(input: &LcmInput) -> Self {
        Self::new(
            &crate::tokenize::detokenize(&input.metadata_tokens),
            &input.before_text(),
            &input.after_text(),
        )
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheEntry {
    pub key: CacheKey,
    pub value: Completion,
    /// Monotonic clock reading at insertion.
    pub inserted_at_ms: u64,
}

/// Thread-safe, capacity-bounded LRU. No TTL.
pub struct CompletionCache {
    inner: Mutex<LruCache<CacheKey, CacheEntry>>,
}

impl CompletionCache {
    pub fn new(capacity: usize) -> Self {
        let cap = NonZeroUsize::new(capacity.max(1)).expect("capacity is at least 1");
        Self {
            inner: Mutex::new(LruCache::new(cap)),
        }
    }

    pub fn lookup(&self, key: &CacheKey) -> Option<Completion> {
        let mut inner = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        inner.get(key).map(|e| e.value.clone())
    }

    pub fn insert(&self, key: CacheKey, value: Completion, now_ms: u64) {
        let mut inner = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        inner.put(
            key,
            CacheEntry {
                key,
                value,
                inserted_at_ms: now_ms,
            },
        );
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for CompletionCache {
    fn default() -> Self {
        Self::new(DEFAULT_CACHE_CAPACITY)
    }
}
