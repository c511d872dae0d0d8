//! The line-delimited round log format.
//!
//! A round is a header line (the [`RoundConfig`]), one line per
//! [`RoundEvent`], and, once closed, a [`CloseRecord`] line. A file may hold
//! several rounds back to back.

use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use pva_core::analysis::{CloseRecord, LogError, RoundLog};
use pva_core::{RoundConfig, RoundEvent};
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("no round logs found in {}", .0.display())]
    EmptyInput(PathBuf),
    #[error("{}: round starting at line {line}: {source}", path.display())]
    Invalid {
        path: PathBuf,
        line: usize,
        source: LogError,
    },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Record {
    Header(RoundConfig),
    Event(RoundEvent),
    Close(CloseRecord),
}

impl Record {
    /// Classifies a line by its keys: events carry `seq`, close records
    /// `winner`, headers `payoffs`.
    pub fn parse(line: &str) -> Result<Record, String> {
        let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let Some(obj) = value.as_object() else {
            return Err("expected a JSON object".into());
        };
        let record = if obj.contains_key("seq") {
            serde_json::from_value(value).map(Record::Event)
        } else if obj.contains_key("winner") {
            serde_json::from_value(value).map(Record::Close)
        } else if obj.contains_key("payoffs") {
            serde_json::from_value(value).map(Record::Header)
        } else {
            return Err("not a header, event or close record".into());
        };
        record.map_err(|e| e.to_string())
    }
}

/// One JSON line, newline included.
pub fn to_line<T: Serialize>(record: &T) -> String {
    let mut line = serde_json::to_string(record).expect("log records serialize");
    line.push('\n');
    line
}

pub fn write_log<W: Write>(mut w: W, log: &RoundLog) -> io::Result<()> {
    w.write_all(to_line(log.header()).as_bytes())?;
    for event in log.events() {
        w.write_all(to_line(event).as_bytes())?;
    }
    if let Some(close) = log.close_record() {
        w.write_all(to_line(close).as_bytes())?;
    }
    Ok(())
}

struct Pending {
    line: usize,
    header: RoundConfig,
    events: Vec<RoundEvent>,
    close: Option<CloseRecord>,
}

impl Pending {
    fn finish(self, path: &Path) -> Result<RoundLog, LoadError> {
        RoundLog::new(self.header, self.events, self.close).map_err(|source| LoadError::Invalid {
            path: path.to_owned(),
            line: self.line,
            source,
        })
    }
}

/// Reads every round in `reader`. `path` is only used in errors.
pub fn read_logs<R: BufRead>(reader: R, path: &Path) -> Result<Vec<RoundLog>, LoadError> {
    let parse_err = |line: usize, message: String| LoadError::Parse {
        path: path.to_owned(),
        line,
        message,
    };
    let mut logs = Vec::new();
    let mut pending: Option<Pending> = None;
    for (i, line) in reader.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|source| LoadError::Io {
            path: path.to_owned(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match Record::parse(&line).map_err(|m| parse_err(n, m))? {
            Record::Header(header) => {
                if let Some(done) = pending.take() {
                    logs.push(done.finish(path)?);
                }
                pending = Some(Pending {
                    line: n,
                    header,
                    events: Vec::new(),
                    close: None,
                });
            }
            Record::Event(event) => match &mut pending {
                Some(p) if p.close.is_none() => p.events.push(event),
                Some(_) => return Err(parse_err(n, "event after close record".into())),
                None => return Err(parse_err(n, "event before any header".into())),
            },
            Record::Close(close) => match &mut pending {
                Some(p) if p.close.is_none() => p.close = Some(close),
                Some(_) => return Err(parse_err(n, "second close record".into())),
                None => return Err(parse_err(n, "close record before any header".into())),
            },
        }
    }
    if let Some(done) = pending {
        logs.push(done.finish(path)?);
    }
    Ok(logs)
}

/// Loads a `.jsonl` file, or every `.jsonl` file directly inside a directory
/// in name order.
pub fn load_logs(path: &Path) -> Result<Vec<RoundLog>, LoadError> {
    let io_err = |source| LoadError::Io {
        path: path.to_owned(),
        source,
    };
    let files = if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(io_err)?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "jsonl"))
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_owned()]
    };
    let mut logs = Vec::new();
    for file in files {
        let reader = fs::File::open(&file).map_err(|source| LoadError::Io {
            path: file.clone(),
            source,
        })?;
        logs.extend(read_logs(BufReader::new(reader), &file)?);
    }
    if logs.is_empty() {
        return Err(LoadError::EmptyInput(path.to_owned()));
    }
    Ok(logs)
}
