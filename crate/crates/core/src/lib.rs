//! Propose-vote-abstain crowdsourcing rounds.
//!
//! Each arriving worker either proposes a new answer (paid `pi` if it wins),
//! votes for an existing answer (paid `nu` if it wins) or abstains for an
//! unconditional `alpha`. This crate holds everything that does not need an
//! operating system:
//!
//! - [`mechanism`]: the event-sourced round state machine.
//! - [`strategy`]: closed-form dominant strategies and payoff tuning.
//! - [`oracle`]: backward induction and exact plurality enumeration, used to
//!   cross-check [`strategy`].
//! - [`simulator`]: agent-based rounds and payoff sweeps.
//! - [`analysis`]: aggregate reports over finished round logs.
//!
//! The crate is `no_std` and only needs `alloc`. IO, the HTTP service and the
//! command-line tool live in the `pva` crate.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod analysis;
pub mod mechanism;
mod money;
pub mod oracle;
pub mod simulator;
pub mod strategy;

pub use mechanism::{
    ActionKind, Applied, Contribution, ContributionId, DedupPolicy, MechanismError, PayoutReason,
    PayoutRecord, PresentationOrder, RoundConfig, RoundEvent, RoundState, RoundStatus, SessionId,
    StoppingCondition, WorkerAction, WorkerView,
};
pub use money::{Money, PayoffError, PayoffStructure};

/// Exact rational used by the solver reports and the oracle.
pub type Rational = num_rational::Ratio<i128>;
