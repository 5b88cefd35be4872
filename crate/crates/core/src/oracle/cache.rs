use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, Ordering};

use lru::LruCache;
use parking_lot::Mutex;

use super::{MaskOracle, MaskQuery, MaskResponse, OracleError};

pub const DEFAULT_CACHE_CAPACITY: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
}

/// Bounded LRU in front of another oracle.
///
/// Entries are keyed by the whole query (tokens, masked positions, targets),
/// so a hit returns exactly what the inner oracle returned. The lock is not
/// held while the inner oracle runs; two threads missing on the same key may
/// both compute it.
pub struct CachedOracle<O> {
    inner: O,
    entries: Mutex<LruCache<MaskQuery, MaskResponse>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl<O: MaskOracle> CachedOracle<O> {
    pub fn new(inner: O) -> Self {
        Self::with_capacity(inner, DEFAULT_CACHE_CAPACITY)
    }

    pub fn with_capacity(inner: O, capacity: usize) -> Self {
        let cap = NonZeroUsize::new(capacity).unwrap_or(NonZeroUsize::MIN);
        Self {
            inner,
            entries: Mutex::new(LruCache::new(cap)),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.entries.lock().clear();
    }
}

impl<O: MaskOracle> MaskOracle for CachedOracle<O> {
    fn query(&self, batch: &[MaskQuery]) -> Result<Vec<MaskResponse>, OracleError> {
        let mut out: Vec<Option<MaskResponse>> = vec![None; batch.len()];
        // distinct missing queries, and which batch slots each one fills
        let mut pending: Vec<MaskQuery> = Vec::new();
        let mut slots: Vec<Vec<usize>> = Vec::new();
        {
            let mut entries = self.entries.lock();
            let mut seen: HashMap<&MaskQuery, usize> = HashMap::new();
            for (i, q) in batch.iter().enumerate() {
                if let Some(r) = entries.get(q) {
                    out[i] = Some(r.clone());
                    continue;
                }
                match seen.get(q) {
                    Some(&j) => slots[j].push(i),
                    None => {
                        seen.insert(q, pending.len());
                        pending.push(q.clone());
                        slots.push(vec![i]);
                    }
                }
            }
        }
        // repeats within the batch count as hits
        let hits = batch.len() - pending.len();
        self.hits.fetch_add(hits as u64, Ordering::Relaxed);
        if !pending.is_empty() {
            self.misses
                .fetch_add(pending.len() as u64, Ordering::Relaxed);
            let fresh = self.inner.query(&pending)?;
            if fresh.len() != pending.len() {
                return Err(OracleError::Protocol(format!(
                    "backend returned {} responses for {} queries",
                    fresh.len(),
                    pending.len()
                )));
            }
            let mut entries = self.entries.lock();
            for ((q, r), targets) in pending.into_iter().zip(fresh).zip(&slots) {
                for &i in targets {
                    out[i] = Some(r.clone());
                }
                entries.put(q, r);
            }
        }
        Ok(out
            .into_iter()
            .map(|r| r.expect("every slot filled"))
            .collect())
    }

    fn max_tokens(&self) -> Option<usize> {
        self.inner.max_tokens()
    }
}
