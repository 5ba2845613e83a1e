//! Server settings, deserializable from the CLI's config file.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use payroll_core::RuleSet;
use payroll_taskqueue::ScalingPolicy;
use serde::{Deserialize, Serialize};

use crate::auth::Role;
use crate::routing::VersionWeights;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    pub listen: String,
    pub store_dir: PathBuf,
    /// Request log file; requests are not logged when unset.
    pub request_log: Option<PathBuf>,
    /// Bearer token to role (`admin` or `employee:<id>`).
    pub tokens: BTreeMap<String, Role>,
    pub traffic: VersionWeights,
    pub cache: CacheSettings,
    pub queue: QueueSettings,
    pub scaling: ScalingSettings,
    /// Extra rule sets beside the built-in FIG2-NG.
    pub rulesets: Vec<RuleSet>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            listen: "127.0.0.1:8080".into(),
            store_dir: PathBuf::from("payroll-data"),
            request_log: None,
            tokens: BTreeMap::new(),
            traffic: VersionWeights::single("v1"),
            cache: CacheSettings::default(),
            queue: QueueSettings::default(),
            scaling: ScalingSettings::default(),
            rulesets: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CacheSettings {
    pub capacity: usize,
    pub ttl_secs: u64,
}

impl Default for CacheSettings {
    fn default() -> Self {
        CacheSettings {
            capacity: payroll_cache::DEFAULT_CAPACITY,
            ttl_secs: payroll_cache::DEFAULT_TTL.as_secs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueueSettings {
    pub capacity: usize,
    pub max_attempts: u32,
    pub backoff_ms: Vec<u64>,
}

impl Default for QueueSettings {
    fn default() -> Self {
        QueueSettings { capacity: 1024, max_attempts: 3, backoff_ms: vec![0, 100, 400] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSettings {
    pub min_workers: usize,
    /// 0 means the number of available cores.
    pub max_workers: usize,
    pub high_watermark: usize,
    pub low_watermark: usize,
    pub cooldown_ticks: u32,
    pub tick_ms: u64,
}

impl Default for ScalingSettings {
    fn default() -> Self {
        let p = ScalingPolicy::for_cores(1);
        ScalingSettings {
            min_workers: p.min_workers,
            max_workers: 0,
            high_watermark: p.high_watermark,
            low_watermark: p.low_watermark,
            cooldown_ticks: p.cooldown_ticks,
            tick_ms: 1000,
        }
    }
}

impl ScalingSettings {
    pub fn policy(&self) -> ScalingPolicy {
        let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
        ScalingPolicy {
            min_workers: self.min_workers,
            max_workers: if self.max_workers == 0 { cores.max(self.min_workers) } else { self.max_workers },
            high_watermark: self.high_watermark,
            low_watermark: self.low_watermark,
            cooldown_ticks: self.cooldown_ticks,
        }
    }

    pub fn tick(&self) -> Duration {
        Duration::from_millis(self.tick_ms.max(1))
    }
}
