//! Indexed families of glue metrics over growing truncations.
//!
//! Order and equivalence verdicts are statements about a whole family, not
//! a single truncation; a [`MetricFamily`] packages the index sweep with a
//! lazy, cached generator so sweeps stay cheap to re-run.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::glue::GlueMetric;

type Generator = dyn Fn(usize) -> GlueMetric + Send + Sync;

/// A sequence of glue metrics indexed by truncation size.
///
/// Members are produced on demand and cached; generation is pure, so
/// evaluating indices in parallel and in any order yields identical
/// families.
pub struct MetricFamily {
    indices: Vec<usize>,
    tag: String,
    generator: Arc<Generator>,
    cache: Mutex<HashMap<usize, Arc<GlueMetric>>>,
}

impl MetricFamily {
    /// Build a family from an index list and a generator rule. Indices must
    /// be strictly increasing and nonempty.
    pub fn from_fn(
        tag: impl Into<String>,
        indices: Vec<usize>,
        generator: impl Fn(usize) -> GlueMetric + Send + Sync + 'static,
    ) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidParameter {
                what: "indices",
                message: "a metric family needs at least one index".into(),
            });
        }
        for w in indices.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParameter {
                    what: "indices",
                    message: format!("not strictly increasing at {} -> {}", w[0], w[1]),
                });
            }
        }
        Ok(Self {
            indices,
            tag: tag.into(),
            generator: Arc::new(generator),
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Wrap explicit members as a family with indices 1..=len.
    pub fn from_members(tag: impl Into<String>, members: Vec<GlueMetric>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidParameter {
                what: "members",
                message: "a metric family needs at least one member".into(),
            });
        }
        let shared: Vec<Arc<GlueMetric>> = members.into_iter().map(Arc::new).collect();
        let indices: Vec<usize> = (1..=shared.len()).collect();
        let lookup = shared.clone();
        let fam = Self {
            indices,
            tag: tag.into(),
            generator: Arc::new(move |n| (*lookup[n - 1]).clone()),
            cache: Mutex::new(HashMap::new()),
        };
        // Pre-seed the cache so explicit members are never re-cloned.
        {
            let mut cache = fam.cache.lock().unwrap();
            for (i, g) in shared.into_iter().enumerate() {
                cache.insert(i + 1, g);
            }
        }
        Ok(fam)
    }

    /// Human-readable name of the infinite model this family truncates.
    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// The member at a given index (must be one of `indices`).
    pub fn member(&self, index: usize) -> Result<Arc<GlueMetric>> {
        if !self.indices.contains(&index) {
            return Err(Error::InvalidParameter {
                what: "index",
                message: format!("{index} is not an index of family {:?}", self.tag),
            });
        }
        let mut cache = self.cache.lock().unwrap();
        if let Some(g) = cache.get(&index) {
            return Ok(g.clone());
        }
        let g = Arc::new((self.generator)(index));
        cache.insert(index, g.clone());
        Ok(g)
    }

    /// All members in index order.
    pub fn members(&self) -> Result<Vec<(usize, Arc<GlueMetric>)>> {
        self.indices
            .iter()
            .map(|&n| Ok((n, self.member(n)?)))
            .collect()
    }
}

impl std::fmt::Debug for MetricFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetricFamily")
            .field("tag", &self.tag)
            .field("indices", &self.indices)
            .finish()
    }
}
