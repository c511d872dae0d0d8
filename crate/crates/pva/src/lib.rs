//! Log files, the round service and the `pva` command-line tool, on top of
//! [`pva_core`].

pub mod cli;
pub mod http;
pub mod jsonl;
pub mod service;
pub mod store;

pub use jsonl::{load_logs, read_logs, write_log, LoadError, Record};
pub use service::{RoundService, ServiceError};
pub use store::{replay_log, ReplayLogError, ReplayedRound};
