//! On-disk layout of the round service.
//!
//! Round `{id}` lives in `{id}.jsonl`, an append-only log in the format of
//! [`crate::jsonl`], with a companion `{id}.sessions` file of issued session
//! hashes and idempotent acknowledgements. Every record is written as one
//! `write` of a complete line, so a crash can leave at most a torn final line,
//! which replay drops.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use pva_core::analysis::CloseRecord;
use pva_core::mechanism::ReplayError;
use pva_core::{RoundConfig, RoundEvent, RoundState};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;

use crate::jsonl::{to_line, Record};

#[derive(Debug, Error)]
pub enum ReplayLogError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: corrupt log: {source}", path.display())]
    CorruptLog { path: PathBuf, source: ReplayError },
}

/// A round rebuilt from its log.
#[derive(Clone, Debug)]
pub struct ReplayedRound {
    pub state: RoundState,
    pub closed_at: Option<u64>,
    /// The final line was incomplete and was ignored.
    pub torn_tail: bool,
}

/// Reads lines, tolerating an unterminated final line that does not parse.
fn read_lines<T, F>(path: &Path, mut parse: F) -> Result<(Vec<(usize, T)>, bool), ReplayLogError>
where
    F: FnMut(&str) -> Result<T, String>,
{
    let text = fs::read_to_string(path).map_err(|source| ReplayLogError::Io {
        path: path.to_owned(),
        source,
    })?;
    let terminated = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::with_capacity(lines.len());
    let mut torn = false;
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse(line) {
            Ok(record) => out.push((i + 1, record)),
            Err(_) if i + 1 == lines.len() && !terminated => {
                log::warn!("{}: ignoring torn final line {}", path.display(), i + 1);
                torn = true;
            }
            Err(message) => {
                return Err(ReplayLogError::Parse {
                    path: path.to_owned(),
                    line: i + 1,
                    message,
                })
            }
        }
    }
    Ok((out, torn))
}

/// Rebuilds a single round from its log file.
///
/// The log must start with a header; a close record, if present, must be last
/// and name the winner the replayed round selects.
pub fn replay_log(path: &Path) -> Result<ReplayedRound, ReplayLogError> {
    let (records, torn_tail) = read_lines(path, Record::parse)?;
    let parse_err = |line: usize, message: &str| ReplayLogError::Parse {
        path: path.to_owned(),
        line,
        message: message.to_owned(),
    };
    let corrupt = |source| ReplayLogError::CorruptLog {
        path: path.to_owned(),
        source,
    };

    let mut records = records.into_iter();
    let header = match records.next() {
        Some((_, Record::Header(h))) => h,
        Some((line, _)) => return Err(parse_err(line, "first record is not a header")),
        None => return Err(parse_err(1, "missing header")),
    };
    let mut events = Vec::new();
    let mut close: Option<CloseRecord> = None;
    for (line, record) in records {
        match record {
            Record::Event(_) | Record::Close(_) if close.is_some() => {
                return Err(parse_err(line, "record after close"))
            }
            Record::Event(e) => events.push(e),
            Record::Close(c) => close = Some(c),
            Record::Header(_) => return Err(parse_err(line, "second header in a round log")),
        }
    }
    let mut state = RoundState::replay(header, events).map_err(corrupt)?;
    if let Some(c) = &close {
        state.replay_close(&c.winner).map_err(corrupt)?;
    }
    Ok(ReplayedRound {
        state,
        closed_at: close.map(|c| c.closed_at),
        torn_tail,
    })
}

/// Lines of a `{id}.sessions` file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum SessionRecord {
    Issued {
        session: String,
        token_sha256: String,
        issued_at: u64,
    },
    Ack {
        session: String,
        idempotency_key: String,
        ack: serde_json::Value,
    },
}

pub fn read_sessions(path: &Path) -> Result<Vec<SessionRecord>, ReplayLogError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let (records, _) = read_lines(path, parse_json::<SessionRecord>)?;
    Ok(records.into_iter().map(|(_, r)| r).collect())
}

fn parse_json<T: DeserializeOwned>(line: &str) -> Result<T, String> {
    serde_json::from_str(line).map_err(|e| e.to_string())
}

/// Append handles for one round.
#[derive(Debug)]
pub struct RoundFiles {
    log: File,
    sessions: File,
}

impl RoundFiles {
    pub fn log_path(dir: &Path, id: &str) -> PathBuf {
        dir.join(format!("{id}.jsonl"))
    }

    pub fn sessions_path(dir: &Path, id: &str) -> PathBuf {
        dir.join(format!("{id}.sessions"))
    }

    /// Creates both files; fails if the round already exists.
    pub fn create(dir: &Path, id: &str, header: &RoundConfig) -> io::Result<Self> {
        let mut log = OpenOptions::new()
            .create_new(true)
            .append(true)
            .open(Self::log_path(dir, id))?;
        log.write_all(to_line(header).as_bytes())?;
        log.sync_data()?;
        let sessions = OpenOptions::new()
            .create(true)
            .append(true)
            .open(Self::sessions_path(dir, id))?;
        Ok(RoundFiles { log, sessions })
    }

    pub fn open(dir: &Path, id: &str) -> io::Result<Self> {
        let log = OpenOptions::new().append(true).open(Self::log_path(dir, id))?;
        let sessions = OpenOptions::new()
            .create(true)
            .append(true)
            .open(Self::sessions_path(dir, id))?;
        Ok(RoundFiles { log, sessions })
    }

    pub fn append_event(&mut self, event: &RoundEvent) -> io::Result<()> {
        self.log.write_all(to_line(event).as_bytes())?;
        self.log.flush()
    }

    pub fn append_close(&mut self, close: &CloseRecord) -> io::Result<()> {
        self.log.write_all(to_line(close).as_bytes())?;
        self.log.sync_data()
    }

    pub fn append_session(&mut self, record: &SessionRecord) -> io::Result<()> {
        self.sessions.write_all(to_line(record).as_bytes())?;
        self.sessions.flush()
    }
}
