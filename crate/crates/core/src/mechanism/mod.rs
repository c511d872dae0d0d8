//! The round state machine.
//!
//! A round is an append-only list of [`RoundEvent`]s. Tallies, contributions
//! and status are folds over that list, so replaying the events through
//! [`RoundState::apply_action`] reproduces the state exactly.

mod canonical;
mod payout;
mod round;
mod types;
mod winner;

pub use canonical::canonicalize_votes;
pub use payout::{PayoutReason, PayoutRecord};
pub use round::{Applied, ReplayError, RoundState};
pub use types::{
    ActionKind, Contribution, ContributionId, DedupPolicy, PresentationOrder, RoundConfig,
    RoundEvent, RoundStatus, SessionId, StoppingCondition, ViewOption, WorkerAction, WorkerView,
};
pub use winner::plurality_winner;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MechanismError {
    #[error("round is closed")]
    RoundClosed,
    #[error("round is still open")]
    RoundStillOpen,
    #[error("no contribution with id `{0}`")]
    UnknownContribution(ContributionId),
    #[error("session `{0}` already has a counted vote")]
    DuplicateVote(SessionId),
    #[error("proposal text is empty")]
    EmptyProposal,
    #[error("round has no canonical votes")]
    NoVotes,
    #[error("round cannot close before it has at least one proposal and one vote")]
    NotTerminable,
    #[error("winner `{0}` is not a contribution of this round")]
    WinnerNotInRound(ContributionId),
    #[error("invalid stopping condition: {0}")]
    InvalidStopping(&'static str),
}
