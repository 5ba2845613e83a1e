//! One JSON line per handled request.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub ts: String,
    /// `admin`, `employee` or `anonymous`
    pub role: String,
    pub method: String,
    pub path: String,
    pub status: u16,
    pub version: Option<String>,
    /// `HIT` or `MISS` on cached endpoints
    pub cache: Option<String>,
}

impl RequestRecord {
    pub fn timestamp(at: DateTime<Utc>) -> String {
        at.to_rfc3339_opts(SecondsFormat::Millis, true)
    }
}

enum Sink {
    File(File),
    Memory(Arc<Mutex<Vec<String>>>),
    Discard,
}

pub struct RequestLog {
    sink: Mutex<Sink>,
}

impl RequestLog {
    /// Appends to `path`, creating it if needed.
    pub fn to_file(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(RequestLog { sink: Mutex::new(Sink::File(file)) })
    }

    /// Collects lines in memory; the returned handle sees every record.
    pub fn in_memory() -> (Self, Arc<Mutex<Vec<String>>>) {
        let lines = Arc::new(Mutex::new(Vec::new()));
        (RequestLog { sink: Mutex::new(Sink::Memory(lines.clone())) }, lines)
    }

    pub fn discard() -> Self {
        RequestLog { sink: Mutex::new(Sink::Discard) }
    }

    pub fn write(&self, record: &RequestRecord) {
        let line = serde_json::to_string(record).expect("record serializes");
        let mut sink = self.sink.lock().unwrap_or_else(|e| e.into_inner());
        match &mut *sink {
            Sink::File(f) => {
                if let Err(e) = writeln!(f, "{line}") {
                    log::error!("request log write failed: {e}");
                }
            }
            Sink::Memory(lines) => lines.lock().unwrap_or_else(|e| e.into_inner()).push(line),
            Sink::Discard => {}
        }
    }
}
