use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::{Result, StoreError};

/// One complete JSON line read back from a ledger file (1-based line number).
pub(crate) struct Loaded {
    pub line: usize,
    pub value: serde_json::Value,
}

/// Append-only handle on one `.jsonl` file.
pub(crate) struct LedgerFile {
    path: PathBuf,
    file: File,
}

impl LedgerFile {
    /// Opens `path`, returning the handle and every complete record.
    ///
    /// An unterminated last line is kept if it parses (and gets its newline
    /// back); otherwise it is a torn write and is truncated away.
    pub fn open(path: PathBuf) -> Result<(LedgerFile, Vec<Loaded>)> {
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;

        let mut records = Vec::new();
        let mut offset = 0usize;
        let mut lineno = 0usize;
        while offset < bytes.len() {
            lineno += 1;
            let rest = &bytes[offset..];
            match rest.iter().position(|&b| b == b'\n') {
                Some(end) => {
                    let value = parse_line(&rest[..end])
                        .map_err(|reason| corrupt(&path, lineno, reason))?;
                    records.push(Loaded { line: lineno, value });
                    offset += end + 1;
                }
                None => {
                    match parse_line(rest) {
                        Ok(value) => {
                            records.push(Loaded { line: lineno, value });
                            file.write_all(b"\n")?;
                        }
                        Err(_) => file.set_len(offset as u64)?,
                    }
                    file.sync_data()?;
                    break;
                }
            }
        }
        Ok((LedgerFile { path, file }, records))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes one record line and syncs it to disk.
    pub fn append_line(&mut self, line: &str) -> Result<()> {
        self.append_lines(std::slice::from_ref(&line))
    }

    /// Writes all lines and syncs once.
    pub fn append_lines(&mut self, lines: &[impl AsRef<str>]) -> Result<()> {
        let mut buf = Vec::with_capacity(lines.iter().map(|l| l.as_ref().len() + 1).sum());
        for line in lines {
            debug_assert!(!line.as_ref().contains('\n'));
            buf.extend_from_slice(line.as_ref().as_bytes());
            buf.push(b'\n');
        }
        let len = self.file.metadata()?.len();
        if let Err(e) = self.file.write_all(&buf).and_then(|_| self.file.sync_data()) {
            // drop whatever part of the record reached the file
            let _ = self.file.set_len(len);
            return Err(e.into());
        }
        Ok(())
    }
}

fn parse_line(bytes: &[u8]) -> std::result::Result<serde_json::Value, String> {
    let text = std::str::from_utf8(bytes).map_err(|e| e.to_string())?;
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if !value.is_object() {
        return Err("record is not a JSON object".into());
    }
    Ok(value)
}

fn corrupt(path: &Path, line: usize, reason: String) -> StoreError {
    StoreError::CorruptStore { file: path.to_path_buf(), line, reason }
}
