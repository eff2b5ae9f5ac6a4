//! Append-only report store backed by one JSONL file.
//!
//! Each line is `{"seq":N,"ingested_at":"...","report":{...}}`. A line is
//! flushed to disk before its sequence number is handed out. On open, a
//! trailing line without its newline (an interrupted append) is dropped and
//! the file truncated back to the last complete record.

use std::fs::{File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock, RwLockReadGuard};

use chrono::{SecondsFormat, Utc};
use qoe_core::report_schema::{self, Violation};
use qoe_core::SessionReport;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredReport {
    pub seq: u64,
    /// RFC 3339, UTC.
    pub ingested_at: String,
    pub report: SessionReport,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O: {0}")]
    Io(#[from] io::Error),
    #[error("{path}: line {line} is corrupt: {reason}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed report: {0}")]
    Malformed(String),
    #[error("report violates {} constraint(s)", .0.len())]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Storage(#[from] StoreError),
}

struct Writer {
    file: File,
    /// Length of the file up to the last acknowledged record.
    committed: u64,
    next_seq: u64,
}

pub struct ReportStore {
    path: PathBuf,
    writer: Mutex<Writer>,
    records: RwLock<Vec<StoredReport>>,
}

impl ReportStore {
    /// Opens or creates the store at `path`, recovering from an interrupted
    /// append if needed.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)?;
        let mut text = String::new();
        file.read_to_string(&mut text)
            .map_err(|e| corrupt(&path, 0, e.to_string()))?;

        let complete = text.rfind('\n').map_or(0, |i| i + 1);
        if complete < text.len() {
            log::warn!(
                "{}: discarding {} byte(s) of an interrupted append",
                path.display(),
                text.len() - complete
            );
            file.set_len(complete as u64)?;
            file.sync_all()?;
        }
        file.seek(SeekFrom::End(0))?;

        let mut records: Vec<StoredReport> = Vec::new();
        for (i, line) in text[..complete].lines().enumerate() {
            let rec: StoredReport =
                serde_json::from_str(line).map_err(|e| corrupt(&path, i + 1, e.to_string()))?;
            if let Some(prev) = records.last() {
                if rec.seq <= prev.seq {
                    return Err(corrupt(
                        &path,
                        i + 1,
                        format!("sequence {} after {}", rec.seq, prev.seq),
                    ));
                }
            }
            records.push(rec);
        }
        let next_seq = records.last().map_or(1, |r| r.seq + 1);
        log::info!("{}: {} report(s) loaded", path.display(), records.len());
        Ok(Self {
            path,
            writer: Mutex::new(Writer {
                file,
                committed: complete as u64,
                next_seq,
            }),
            records: RwLock::new(records),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Parses, validates and durably appends one report.
    pub fn ingest(&self, body: &str) -> Result<u64, IngestError> {
        let report =
            report_schema::parse(body).map_err(|e| IngestError::Malformed(e.to_string()))?;
        self.append(report)
    }

    pub fn append(&self, report: SessionReport) -> Result<u64, IngestError> {
        report_schema::validate(&report).map_err(IngestError::Invalid)?;
        let mut w = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let rec = StoredReport {
            seq: w.next_seq,
            ingested_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            report,
        };
        let mut line =
            serde_json::to_string(&rec).map_err(|e| IngestError::Malformed(e.to_string()))?;
        line.push('\n');
        let written = w
            .file
            .write_all(line.as_bytes())
            .and_then(|()| w.file.sync_data());
        if let Err(e) = written {
            // Roll back so the next append does not land after a torn line.
            if let Err(undo) = w.file.set_len(w.committed) {
                log::error!(
                    "{}: rollback after failed append failed: {undo}",
                    self.path.display()
                );
            }
            return Err(StoreError::from(e).into());
        }
        w.committed += line.len() as u64;
        w.next_seq += 1;
        let seq = rec.seq;
        self.records
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .push(rec);
        Ok(seq)
    }

    /// Read-only view of every acknowledged record, in sequence order.
    pub fn snapshot(&self) -> RwLockReadGuard<'_, Vec<StoredReport>> {
        self.records.read().unwrap_or_else(|e| e.into_inner())
    }

    pub fn get(&self, seq: u64) -> Option<StoredReport> {
        let recs = self.snapshot();
        recs.binary_search_by_key(&seq, |r| r.seq)
            .ok()
            .map(|i| recs[i].clone())
    }

    pub fn len(&self) -> usize {
        self.snapshot().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn reports(&self) -> Vec<SessionReport> {
        self.snapshot().iter().map(|r| r.report.clone()).collect()
    }
}

fn corrupt(path: &Path, line: usize, reason: String) -> StoreError {
    StoreError::Corrupt {
        path: path.to_path_buf(),
        line,
        reason,
    }
}
