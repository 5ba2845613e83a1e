//! Sticky weighted routing of clients to app versions.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RouteError {
    #[error("no version has a positive weight")]
    NoVersions,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
}

impl RouteError {
    pub fn code(&self) -> &'static str {
        match self {
            RouteError::NoVersions => "NoVersions",
            RouteError::InvalidWeights(_) => "InvalidWeights",
        }
    }
}

/// Version label to weight. Weights are proportional, not percentages.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VersionWeights(BTreeMap<String, i64>);

impl VersionWeights {
    pub fn new(weights: impl IntoIterator<Item = (impl Into<String>, i64)>) -> Self {
        VersionWeights(weights.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn single(label: &str) -> Self {
        VersionWeights::new([(label, 1)])
    }

    pub fn get(&self, label: &str) -> Option<i64> {
        self.0.get(label).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Rejects negative weights, unknown labels and an all-zero table.
    pub fn validate<'a>(&self, known: impl IntoIterator<Item = &'a str>) -> Result<(), RouteError> {
        let known: Vec<&str> = known.into_iter().collect();
        for (label, w) in self.iter() {
            if w < 0 {
                return Err(RouteError::InvalidWeights(format!("{label} has negative weight {w}")));
            }
            if !known.contains(&label) {
                return Err(RouteError::InvalidWeights(format!("unknown version {label:?}")));
            }
        }
        if self.iter().all(|(_, w)| w == 0) {
            return Err(RouteError::InvalidWeights("all weights are zero".into()));
        }
        Ok(())
    }

    /// Picks a version by placing a stable hash of `client_id` in the
    /// cumulative weight space (labels in sorted order).
    pub fn route(&self, client_id: &str) -> Result<&str, RouteError> {
        let total: u128 = self.iter().map(|(_, w)| w.max(0) as u128).sum();
        if total == 0 {
            return Err(RouteError::NoVersions);
        }
        let point = (u128::from(client_hash(client_id)) * total) >> 64;
        let mut upper = 0u128;
        for (label, w) in self.iter() {
            upper += w.max(0) as u128;
            if point < upper {
                return Ok(label);
            }
        }
        unreachable!("point is below the total weight")
    }
}

fn client_hash(client_id: &str) -> u64 {
    let digest = Sha256::digest(client_id.as_bytes());
    u64::from_be_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"))
}

/// Current weights, swapped as a whole so no request sees a partial update.
#[derive(Debug, Default)]
pub struct TrafficTable {
    current: RwLock<Arc<VersionWeights>>,
}

impl TrafficTable {
    pub fn new(weights: VersionWeights) -> Self {
        TrafficTable { current: RwLock::new(Arc::new(weights)) }
    }

    pub fn snapshot(&self) -> Arc<VersionWeights> {
        self.current.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn set(&self, weights: VersionWeights) -> Arc<VersionWeights> {
        let weights = Arc::new(weights);
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = weights.clone();
        weights
    }
}
