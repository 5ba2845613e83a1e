//! App versions selectable by traffic weight.

use std::collections::BTreeMap;
use std::sync::Arc;

use payroll_core::{render_statement, EarningStatement};
use sha2::{Digest, Sha256};

pub trait AppVersion: Send + Sync {
    fn label(&self) -> &str;

    /// Statement text as served by this version.
    fn render(&self, stmt: &EarningStatement) -> String;
}

/// Plain statement text.
pub struct V1;

impl AppVersion for V1 {
    fn label(&self) -> &str {
        "v1"
    }

    fn render(&self, stmt: &EarningStatement) -> String {
        render_statement(stmt)
    }
}

/// Statement text followed by `SUM|<sha256 hex of the lines above>`.
pub struct V2;

impl AppVersion for V2 {
    fn label(&self) -> &str {
        "v2"
    }

    fn render(&self, stmt: &EarningStatement) -> String {
        let mut text = render_statement(stmt);
        let sum = hex::encode(Sha256::digest(text.as_bytes()));
        text.push_str("SUM|");
        text.push_str(&sum);
        text.push('\n');
        text
    }
}

#[derive(Clone, Default)]
pub struct VersionRegistry {
    versions: BTreeMap<String, Arc<dyn AppVersion>>,
}

impl VersionRegistry {
    /// `v1` and `v2`.
    pub fn builtin() -> Self {
        let mut reg = VersionRegistry::default();
        reg.register(Arc::new(V1));
        reg.register(Arc::new(V2));
        reg
    }

    pub fn register(&mut self, version: Arc<dyn AppVersion>) {
        self.versions.insert(version.label().to_string(), version);
    }

    pub fn get(&self, label: &str) -> Option<Arc<dyn AppVersion>> {
        self.versions.get(label).cloned()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.versions.keys().map(String::as_str)
    }
}
