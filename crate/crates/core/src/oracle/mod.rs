//! Independent checks of [`crate::strategy`].
//!
//! [`backward_induction`] solves the same expected-payoff model by brute
//! dynamic programming instead of the closed form. [`enumerate_exact`] drops
//! the "reward divided by number of proposals" simplification and computes
//! exact plurality win probabilities for a fixed action sequence. Everything
//! is exact rational arithmetic.

mod compare;
mod exact;
mod induction;

pub use compare::{compare_policies, AgreementReport, AgreementRow};
pub use exact::{enumerate_exact, ExactOutcome, Slot, MAX_EXACT_PROPOSALS, MAX_EXACT_VOTERS};
pub use induction::{
    backward_induction, HorizonState, OracleMode, OracleState, PolicyEntry, PolicyTable, MAX_FINITE_HORIZON,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("alpha = 0 leaves the indeterminate-horizon game without an abstain ceiling")]
    UnboundedGame,
    #[error("finite horizon must be between 1 and {max}, got {n}")]
    BadHorizon { n: u32, max: u32 },
    #[error("sequence too large for exact enumeration: {voters} voters, {proposals} proposals")]
    TooLarge { voters: usize, proposals: usize },
    #[error("sequence has no vote")]
    NoVote,
    #[error("sequence has no proposal")]
    NoProposal,
    #[error("vote at position {0} has no contribution to vote for")]
    VoteBeforeProposal(usize),
}
