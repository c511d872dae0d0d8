use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::money::PayoffStructure;

use super::MechanismError;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContributionId(pub String);

impl ContributionId {
    /// Ids are assigned from the arrival index: `c0`, `c1`, ...
    pub fn from_seq(seq: u32) -> Self {
        ContributionId(format!("c{seq}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ContributionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ContributionId {
    fn from(s: &str) -> Self {
        ContributionId(s.into())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub String);

impl SessionId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SessionId {
    fn from(s: &str) -> Self {
        SessionId(s.into())
    }
}

impl From<String> for SessionId {
    fn from(s: String) -> Self {
        SessionId(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contribution {
    pub id: ContributionId,
    pub text: String,
    pub proposer: SessionId,
    pub seq: u32,
}

/// What a worker did, without the payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Propose,
    Vote,
    Abstain,
}

impl ActionKind {
    pub fn letter(self) -> char {
        match self {
            ActionKind::Propose => 'P',
            ActionKind::Vote => 'V',
            ActionKind::Abstain => 'A',
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActionKind::Propose => "propose",
            ActionKind::Vote => "vote",
            ActionKind::Abstain => "abstain",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WorkerAction {
    Propose { text: String },
    Vote { contribution_id: ContributionId },
    Abstain,
}

impl WorkerAction {
    pub fn propose(text: impl Into<String>) -> Self {
        WorkerAction::Propose { text: text.into() }
    }

    pub fn vote(id: impl Into<ContributionId>) -> Self {
        WorkerAction::Vote {
            contribution_id: id.into(),
        }
    }

    pub fn kind(&self) -> ActionKind {
        match self {
            WorkerAction::Propose { .. } => ActionKind::Propose,
            WorkerAction::Vote { .. } => ActionKind::Vote,
            WorkerAction::Abstain => ActionKind::Abstain,
        }
    }
}

/// One line of the round event log.
///
/// Serialized flat: `{seq, session, kind, text?, contribution_id?, received_at, canonical}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundEvent {
    pub seq: u64,
    pub session: SessionId,
    #[serde(flatten)]
    pub action: WorkerAction,
    /// Milliseconds since the Unix epoch, or a logical clock in simulations.
    pub received_at: u64,
    pub canonical: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingCondition {
    /// Stop once `n` distinct sessions have acted.
    MaxWorkers { n: u32 },
    /// Stop once any contribution holds `k` canonical votes.
    MinVotesAny { k: u32 },
    /// Only an explicit close ends the round.
    Manual,
}

impl StoppingCondition {
    pub fn validate(&self) -> Result<(), MechanismError> {
        match *self {
            StoppingCondition::MaxWorkers { n: 0 } => {
                Err(MechanismError::InvalidStopping("max_workers n must be at least 1"))
            }
            StoppingCondition::MinVotesAny { k: 0 } => {
                Err(MechanismError::InvalidStopping("min_votes_any k must be at least 1"))
            }
            _ => Ok(()),
        }
    }
}

/// How repeat votes from one session are counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DedupPolicy {
    #[default]
    CountFirst,
    CountLast,
    Reject,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresentationOrder {
    /// Options in arrival order, identical for every worker.
    #[default]
    Arrival,
    /// A per-session permutation derived from the round seed.
    ShuffledPerSession,
}

impl PresentationOrder {
    fn is_default(&self) -> bool {
        *self == PresentationOrder::Arrival
    }
}

/// Everything fixed when a round is created. This is also the header record
/// of the round event log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundConfig {
    pub request: String,
    pub payoffs: PayoffStructure,
    pub stopping: StoppingCondition,
    #[serde(default)]
    pub dedup_policy: DedupPolicy,
    pub rng_seed: u64,
    #[serde(default, skip_serializing_if = "PresentationOrder::is_default")]
    pub presentation: PresentationOrder,
}

impl RoundConfig {
    pub fn new(request: impl Into<String>, payoffs: PayoffStructure, stopping: StoppingCondition) -> Self {
        RoundConfig {
            request: request.into(),
            payoffs,
            stopping,
            dedup_policy: DedupPolicy::default(),
            rng_seed: 0,
            presentation: PresentationOrder::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_dedup(mut self, policy: DedupPolicy) -> Self {
        self.dedup_policy = policy;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum RoundStatus {
    Open,
    Closed { winner: ContributionId },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewOption {
    pub id: ContributionId,
    pub text: String,
}

/// What a worker sees before acting. Carries no tallies and nothing derived
/// from the number of earlier workers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerView {
    pub request: String,
    pub payoffs: PayoffStructure,
    pub options: Vec<ViewOption>,
}
