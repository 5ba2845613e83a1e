//! Config file loading and `PAYROLL_*` environment overrides.

use std::path::{Path, PathBuf};

use payroll_gateway::GatewayConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const ENV_PREFIX: &str = "PAYROLL_";
pub const DEFAULT_SERVER: &str = "http://127.0.0.1:8080";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub client: ClientConfig,
    pub server: GatewayConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClientConfig {
    /// Base URL of the gateway.
    pub server: String,
    pub token: Option<String>,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig { server: DEFAULT_SERVER.into(), token: None }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Config::from_toml(&text)
    }

    /// Applies `PAYROLL_<NAME>` variables looked up through `var`.
    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), CliError> {
        let get = |name: &str| var(&format!("{ENV_PREFIX}{name}"));
        fn num<T: std::str::FromStr>(name: &str, raw: String) -> Result<T, CliError> {
            raw.parse()
                .map_err(|_| CliError::Config(format!("{ENV_PREFIX}{name}: not a number: {raw:?}")))
        }
        if let Some(v) = get("SERVER") {
            self.client.server = v;
        }
        if let Some(v) = get("TOKEN") {
            self.client.token = Some(v);
        }
        if let Some(v) = get("LISTEN") {
            self.server.listen = v;
        }
        if let Some(v) = get("STORE_DIR") {
            self.server.store_dir = PathBuf::from(v);
        }
        if let Some(v) = get("REQUEST_LOG") {
            self.server.request_log = Some(PathBuf::from(v));
        }
        if let Some(v) = get("CACHE_CAPACITY") {
            self.server.cache.capacity = num("CACHE_CAPACITY", v)?;
        }
        if let Some(v) = get("CACHE_TTL_SECS") {
            self.server.cache.ttl_secs = num("CACHE_TTL_SECS", v)?;
        }
        if let Some(v) = get("MIN_WORKERS") {
            self.server.scaling.min_workers = num("MIN_WORKERS", v)?;
        }
        if let Some(v) = get("MAX_WORKERS") {
            self.server.scaling.max_workers = num("MAX_WORKERS", v)?;
        }
        if let Some(v) = get("ADMIN_TOKEN") {
            self.server.tokens.insert(v, payroll_gateway::Role::Admin);
        }
        Ok(())
    }
}
