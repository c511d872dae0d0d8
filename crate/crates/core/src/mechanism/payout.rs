use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::round::RoundState;
use super::types::{ContributionId, SessionId, WorkerAction};
use super::MechanismError;
use crate::money::Money;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoutReason {
    Base,
    WinningProposal,
    WinningVote,
    Abstained,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayoutRecord {
    pub session: SessionId,
    pub amount: Money,
    pub reason: PayoutReason,
}

impl RoundState {
    /// One record per session that acted, in order of first appearance.
    /// Each record is base pay plus the bonus earned by the session's
    /// canonical action given `winner`.
    pub fn compute_payouts(&self, winner: &ContributionId) -> Result<Vec<PayoutRecord>, MechanismError> {
        let winning = self
            .contributions()
            .iter()
            .find(|c| &c.id == winner)
            .ok_or_else(|| MechanismError::WinnerNotInRound(winner.clone()))?;
        let p = self.config().payoffs;

        Ok(self
            .sessions()
            .iter()
            .map(|session| {
                let event = self.canonical_event(session).expect("listed sessions have a canonical event");
                let (bonus, reason) = match &event.action {
                    WorkerAction::Propose { .. } if &winning.proposer == session => {
                        (p.propose, PayoutReason::WinningProposal)
                    }
                    WorkerAction::Vote { contribution_id } if contribution_id == winner => {
                        (p.vote, PayoutReason::WinningVote)
                    }
                    WorkerAction::Abstain => (p.abstain, PayoutReason::Abstained),
                    _ => (Money::ZERO, PayoutReason::Base),
                };
                PayoutRecord {
                    session: session.clone(),
                    amount: p.base + bonus,
                    reason,
                }
            })
            .collect())
    }
}
