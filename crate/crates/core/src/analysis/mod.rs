//! Aggregate reports over finished round logs.
//!
//! Every count here is recomputed from the raw events. Nothing relies on the
//! `canonical` flags stored in a log file.

mod bounds;
mod lastshare;
mod overvote;
mod trend;

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mechanism::{ActionKind, ContributionId, ReplayError, RoundConfig, RoundEvent, RoundState, StoppingCondition};
use crate::PayoffStructure;

pub use bounds::{bound_violation_table, BoundRow, BoundViolationTable, BOUND_NAMES};
pub use lastshare::{last_proposal_vote_share, LastShare, LastShareReport, NoVotes};
pub use overvote::{overvote_report, OvervoteReport, OvervoteRow};
pub use trend::{fit_trend, proposal_trend, spearman, TrendError, TrendReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogError {
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

/// The closing line of a round log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CloseRecord {
    pub winner: ContributionId,
    pub closed_at: u64,
}

/// A validated round: header, raw events with recomputed canonical flags, and
/// the close record if the round finished.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundLog {
    header: RoundConfig,
    events: Vec<RoundEvent>,
    close: Option<CloseRecord>,
}

impl RoundLog {
    /// Replays `events` under `header` and checks the recorded winner.
    pub fn new(header: RoundConfig, events: Vec<RoundEvent>, close: Option<CloseRecord>) -> Result<Self, LogError> {
        let mut state = RoundState::replay(header.clone(), events)?;
        if let Some(record) = &close {
            state.replay_close(&record.winner)?;
        }
        Ok(RoundLog {
            header,
            events: state.events().to_vec(),
            close,
        })
    }

    /// Snapshot of a live round. `closed_at` is used only if the round is closed.
    pub fn from_state(state: &RoundState, closed_at: u64) -> Self {
        RoundLog {
            header: state.config().clone(),
            events: state.events().to_vec(),
            close: state.winner().map(|winner| CloseRecord {
                winner: winner.clone(),
                closed_at,
            }),
        }
    }

    pub fn header(&self) -> &RoundConfig {
        &self.header
    }

    pub fn payoffs(&self) -> &PayoffStructure {
        &self.header.payoffs
    }

    pub fn events(&self) -> &[RoundEvent] {
        &self.events
    }

    pub fn close_record(&self) -> Option<&CloseRecord> {
        self.close.as_ref()
    }

    pub fn winner(&self) -> Option<&ContributionId> {
        self.close.as_ref().map(|c| &c.winner)
    }

    /// Rebuilds the round state, closed if the log is.
    pub fn state(&self) -> RoundState {
        let mut state =
            RoundState::replay(self.header.clone(), self.events.iter().cloned()).expect("validated on construction");
        if self.close.is_some() {
            state.close().expect("validated on construction");
        }
        state
    }

    fn canonical(&self, kind: ActionKind) -> u32 {
        self.events
            .iter()
            .filter(|e| e.canonical && e.action.kind() == kind)
            .count() as u32
    }

    pub fn proposals(&self) -> u32 {
        self.canonical(ActionKind::Propose)
    }

    pub fn votes(&self) -> u32 {
        self.canonical(ActionKind::Vote)
    }

    pub fn abstains(&self) -> u32 {
        self.canonical(ActionKind::Abstain)
    }

    /// Every vote event, duplicates included.
    pub fn raw_votes(&self) -> u32 {
        self.events
            .iter()
            .filter(|e| e.action.kind() == ActionKind::Vote)
            .count() as u32
    }

    /// Distinct sessions that acted.
    pub fn workers(&self) -> u32 {
        self.events.iter().map(|e| &e.session).collect::<BTreeSet<_>>().len() as u32
    }

    /// Distinct sessions with at least one vote event.
    pub fn voting_workers(&self) -> u32 {
        self.events
            .iter()
            .filter(|e| e.action.kind() == ActionKind::Vote)
            .map(|e| &e.session)
            .collect::<BTreeSet<_>>()
            .len() as u32
    }

    /// 1-based arrival position of the winning contribution among proposals.
    pub fn winner_ordinal(&self) -> Option<u32> {
        let winner = self.winner()?;
        let mut ordinal = 0;
        for e in self.events.iter().filter(|e| e.canonical) {
            if e.action.kind() == ActionKind::Propose {
                if &ContributionId::from_seq(ordinal) == winner {
                    return Some(ordinal + 1);
                }
                ordinal += 1;
            }
        }
        None
    }
}

/// Orders payoff structures by increasing `nu / pi` (with `pi = 0` last), then
/// by the raw amounts so that distinct structures never compare equal.
pub fn by_vote_ratio(a: &PayoffStructure, b: &PayoffStructure) -> Ordering {
    let key = |p: &PayoffStructure| (u128::from(p.vote.get()), u128::from(p.propose.get()));
    let ((an, ap), (bn, bp)) = (key(a), key(b));
    let ratio = match (ap, bp) {
        (0, 0) => Ordering::Equal,
        (0, _) => Ordering::Greater,
        (_, 0) => Ordering::Less,
        _ => (an * bp).cmp(&(bn * ap)),
    };
    ratio.then_with(|| {
        let raw = |p: &PayoffStructure| (p.propose.get(), p.vote.get(), p.abstain.get(), p.base.get());
        raw(a).cmp(&raw(b))
    })
}

/// Logs grouped by payoff structure, groups ordered by [`by_vote_ratio`], logs
/// within a group in input order.
pub fn group_by_structure(logs: &[RoundLog]) -> Vec<(PayoffStructure, Vec<&RoundLog>)> {
    let mut groups: Vec<(PayoffStructure, Vec<&RoundLog>)> = Vec::new();
    for log in logs {
        match groups.iter_mut().find(|(p, _)| p == log.payoffs()) {
            Some((_, members)) => members.push(log),
            None => groups.push((*log.payoffs(), alloc::vec![log])),
        }
    }
    groups.sort_by(|a, b| by_vote_ratio(&a.0, &b.0));
    groups
}

/// Per-structure action counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ActionTotals {
    pub payoffs: PayoffStructure,
    pub rounds: u32,
    /// Sum of the `max_workers` stopping sizes; `None` if any round used a
    /// different stopping condition.
    pub declared_slots: Option<u32>,
    pub workers: u32,
    pub proposals: u32,
    pub votes: u32,
    pub abstains: u32,
}

impl ActionTotals {
    pub fn actions(&self) -> u32 {
        self.proposals + self.votes + self.abstains
    }

    /// Declared workers per round, when every round declared the same number.
    pub fn workers_per_round(&self) -> Option<u32> {
        let slots = self.declared_slots?;
        (slots % self.rounds == 0).then(|| slots / self.rounds)
    }
}

pub fn action_totals(logs: &[RoundLog]) -> Vec<ActionTotals> {
    group_by_structure(logs)
        .into_iter()
        .map(|(payoffs, members)| {
            let declared_slots = members
                .iter()
                .map(|log| match log.header.stopping {
                    StoppingCondition::MaxWorkers { n } => Some(n),
                    _ => None,
                })
                .sum();
            ActionTotals {
                payoffs,
                rounds: members.len() as u32,
                declared_slots,
                workers: members.iter().map(|l| l.workers()).sum(),
                proposals: members.iter().map(|l| l.proposals()).sum(),
                votes: members.iter().map(|l| l.votes()).sum(),
                abstains: members.iter().map(|l| l.abstains()).sum(),
            }
        })
        .collect()
}

/// A structure whose canonical actions do not add up to its declared workers
/// times rounds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConsistencyWarning {
    pub payoffs: PayoffStructure,
    pub rounds: u32,
    pub declared_slots: u32,
    pub actions: u32,
}

impl fmt::Display for ConsistencyWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "structure {}: {} actions over {} rounds, but declared workers x rounds = {}",
            self.payoffs, self.actions, self.rounds, self.declared_slots
        )
    }
}

pub fn consistency_warnings(totals: &[ActionTotals]) -> Vec<ConsistencyWarning> {
    totals
        .iter()
        .filter_map(|t| {
            let declared_slots = t.declared_slots?;
            (declared_slots != t.actions()).then(|| ConsistencyWarning {
                payoffs: t.payoffs,
                rounds: t.rounds,
                declared_slots,
                actions: t.actions(),
            })
        })
        .collect()
}
