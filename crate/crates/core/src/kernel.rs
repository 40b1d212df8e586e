//! Kernel evaluation over a training set with a least-recently-used row cache.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{OcsError, Result};
use crate::par;
use crate::types::{Dataset, KernelSpec};

pub const DEFAULT_CACHE_ROWS: usize = 512;

/// A full kernel row `k(xᵢ, ·)`.
pub type KernelRow = Arc<Vec<f64>>;

struct CachedRow {
    row: KernelRow,
    last_used: u64,
}

/// Kernel values for one training matrix.
///
/// `eval` is read-only and may be called from any thread. `row` mutates the
/// cache and needs exclusive access; give each thread its own engine if rows
/// are needed concurrently.
pub struct KernelEngine<'a> {
    spec: KernelSpec,
    data: &'a Dataset,
    diag: Vec<f64>,
    cache: HashMap<usize, CachedRow>,
    capacity: usize,
    clock: u64,
    hits: u64,
    misses: u64,
}

impl<'a> KernelEngine<'a> {
    /// Engine with the default capacity of `min(m, 512)` rows.
    pub fn new(spec: KernelSpec, data: &'a Dataset) -> Self {
        Self::with_capacity(spec, data, DEFAULT_CACHE_ROWS.min(data.len()))
    }

    pub fn with_capacity(spec: KernelSpec, data: &'a Dataset, capacity: usize) -> Self {
        let diag = par::map_range(data.len(), |i| spec.eval(data.row(i), data.row(i)));
        KernelEngine {
            spec,
            data,
            diag,
            cache: HashMap::with_capacity(capacity.max(1)),
            capacity: capacity.max(1),
            clock: 0,
            hits: 0,
            misses: 0,
        }
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// `(hits, misses)` of the row cache so far.
    pub fn cache_stats(&self) -> (u64, u64) {
        (self.hits, self.misses)
    }

    fn check(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(OcsError::IndexOutOfRange {
                index: i,
                len: self.len(),
            })
        }
    }

    /// k(xᵢ, xⱼ).
    pub fn eval(&self, i: usize, j: usize) -> Result<f64> {
        self.check(i)?;
        self.check(j)?;
        Ok(if i == j {
            self.diag[i]
        } else {
            self.spec.eval(self.data.row(i), self.data.row(j))
        })
    }

    /// k(xᵢ, xᵢ) without bounds checking beyond the slice index.
    pub fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    /// The full row `k(xᵢ, xⱼ)` for `j = 0..m`.
    pub fn row(&mut self, i: usize) -> Result<KernelRow> {
        self.check(i)?;
        self.clock += 1;
        if let Some(entry) = self.cache.get_mut(&i) {
            entry.last_used = self.clock;
            self.hits += 1;
            return Ok(Arc::clone(&entry.row));
        }
        self.misses += 1;
        let row = Arc::new(self.compute_row(i));
        if self.cache.len() >= self.capacity {
            if let Some(&victim) = self
                .cache
                .iter()
                .min_by_key(|(_, e)| e.last_used)
                .map(|(k, _)| k)
            {
                self.cache.remove(&victim);
            }
        }
        self.cache.insert(
            i,
            CachedRow {
                row: Arc::clone(&row),
                last_used: self.clock,
            },
        );
        Ok(row)
    }

    fn compute_row(&self, i: usize) -> Vec<f64> {
        let xi = self.data.row(i);
        let spec = self.spec;
        let data = self.data;
        let diag = &self.diag;
        par::map_range(data.len(), |j| {
            if j == i {
                diag[i]
            } else {
                spec.eval(xi, data.row(j))
            }
        })
    }

    /// Σᵢ γᵢ k(xᵢ, x), summed left to right.
    pub fn expansion_score(&self, gamma: &[f64], x: &[f64]) -> Result<f64> {
        if x.len() != self.data.dim() {
            return Err(OcsError::DimensionMismatch {
                expected: self.data.dim(),
                got: x.len(),
            });
        }
        if gamma.len() != self.len() {
            return Err(OcsError::DimensionMismatch {
                expected: self.len(),
                got: gamma.len(),
            });
        }
        Ok(gamma
            .iter()
            .zip(self.data.rows())
            .fold(0.0, |acc, (&g, xi)| acc + g * self.spec.eval(xi, x)))
    }

    /// `scores[i] = Σⱼ γⱼ k(xᵢ, xⱼ)` for every training point, recomputed from
    /// scratch without touching the cache.
    pub fn all_scores(&self, gamma: &[f64]) -> Vec<f64> {
        let data = self.data;
        let spec = self.spec;
        let diag = &self.diag;
        par::map_range(data.len(), |i| {
            let xi = data.row(i);
            gamma.iter().enumerate().fold(0.0, |acc, (j, &g)| {
                let k = if i == j { diag[i] } else { spec.eval(xi, data.row(j)) };
                acc + g * k
            })
        })
    }
}
