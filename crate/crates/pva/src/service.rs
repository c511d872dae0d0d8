//! Live rounds: sessions, serialized submission, persistence and auto-close.
//!
//! Each round sits behind its own lock. Submissions take it exclusively, so a
//! round's events are applied in one total order and the close transition
//! happens exactly once.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use pva_core::analysis::CloseRecord;
use pva_core::{
    ContributionId, DedupPolicy, MechanismError, PayoffError, PayoffStructure, PayoutRecord, PresentationOrder,
    RoundConfig, RoundState, SessionId, StoppingCondition, WorkerAction, WorkerView,
};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::store::{read_sessions, replay_log, ReplayLogError, RoundFiles, SessionRecord};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("no round with id `{0}`")]
    UnknownRound(String),
    #[error("invalid or unknown session token")]
    InvalidToken,
    #[error("invalid payoffs: {0}")]
    InvalidPayoffs(#[from] PayoffError),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error("storage: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Replay(#[from] ReplayLogError),
}

/// Payoffs as received; negative amounts are rejected.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PayoffInput {
    #[serde(default)]
    pub base: i64,
    pub pi: i64,
    pub nu: i64,
    pub alpha: i64,
}

impl From<PayoffStructure> for PayoffInput {
    fn from(p: PayoffStructure) -> Self {
        PayoffInput {
            base: p.base.get() as i64,
            pi: p.propose.get() as i64,
            nu: p.vote.get() as i64,
            alpha: p.abstain.get() as i64,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CreateRound {
    pub request: String,
    pub payoffs: PayoffInput,
    pub stopping: StoppingCondition,
    #[serde(default)]
    pub dedup_policy: DedupPolicy,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub presentation: PresentationOrder,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Joined {
    pub token: String,
    pub view: WorkerView,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Submission {
    pub token: String,
    #[serde(flatten)]
    pub action: WorkerAction,
    #[serde(default)]
    pub idempotency_key: Option<String>,
}

/// Returned for every accepted submission. Carries nothing derived from other
/// workers' actions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    /// False when this session had already acted and the action does not count.
    pub canonical: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contribution_id: Option<ContributionId>,
    pub payoff_rule: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyEntry {
    pub id: ContributionId,
    pub text: String,
    pub votes: u32,
}

/// Everything revealed after close.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Results {
    pub round_id: String,
    pub request: String,
    pub payoffs: PayoffStructure,
    pub winner: ContributionId,
    pub closed_at: u64,
    pub tallies: Vec<TallyEntry>,
    pub payouts: Vec<PayoutRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Closed {
    pub winner: ContributionId,
}

struct LiveRound {
    state: RoundState,
    files: RoundFiles,
    sessions: HashMap<SessionId, u64>,
    acks: HashMap<(SessionId, String), Ack>,
    closed_at: Option<u64>,
}

pub struct RoundService {
    data_dir: PathBuf,
    rounds: RwLock<HashMap<String, Arc<RwLock<LiveRound>>>>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn random_hex(bytes: usize) -> String {
    let mut buf = vec![0u8; bytes];
    rand::rng().fill_bytes(&mut buf);
    hex::encode(buf)
}

/// Session id for a token: the first 16 hex digits of its SHA-256.
pub fn session_for(token: &str) -> (SessionId, String) {
    let digest = hex::encode(Sha256::digest(token.as_bytes()));
    (SessionId(digest[..16].to_owned()), digest)
}

fn payoff_rule(action: &WorkerAction, p: &PayoffStructure) -> String {
    match action {
        WorkerAction::Propose { .. } => format!("paid {} if your answer wins, plus base {}", p.propose, p.base),
        WorkerAction::Vote { .. } => format!("paid {} if the answer you voted for wins, plus base {}", p.vote, p.base),
        WorkerAction::Abstain => format!("paid {} unconditionally, plus base {}", p.abstain, p.base),
    }
}

impl RoundService {
    /// Opens `data_dir`, replaying every round found there.
    pub fn open(data_dir: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let data_dir = data_dir.into();
        fs::create_dir_all(&data_dir)?;
        let mut rounds = HashMap::new();
        for entry in fs::read_dir(&data_dir)? {
            let path = entry?.path();
            if path.extension().is_none_or(|e| e != "jsonl") {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_owned) else {
                continue;
            };
            let live = Self::load_round(&data_dir, &id)?;
            rounds.insert(id, Arc::new(RwLock::new(live)));
        }
        log::info!("loaded {} rounds from {}", rounds.len(), data_dir.display());
        Ok(RoundService {
            data_dir,
            rounds: RwLock::new(rounds),
        })
    }

    fn load_round(dir: &Path, id: &str) -> Result<LiveRound, ServiceError> {
        let replayed = replay_log(&RoundFiles::log_path(dir, id))?;
        let mut sessions = HashMap::new();
        let mut acks = HashMap::new();
        for record in read_sessions(&RoundFiles::sessions_path(dir, id))? {
            match record {
                SessionRecord::Issued { session, issued_at, .. } => {
                    sessions.insert(SessionId(session), issued_at);
                }
                SessionRecord::Ack {
                    session,
                    idempotency_key,
                    ack,
                } => {
                    if let Ok(ack) = serde_json::from_value(ack) {
                        acks.insert((SessionId(session), idempotency_key), ack);
                    }
                }
            }
        }
        if replayed.torn_tail {
            log::warn!("round {id}: dropped an incomplete final log line");
        }
        Ok(LiveRound {
            state: replayed.state,
            files: RoundFiles::open(dir, id)?,
            sessions,
            acks,
            closed_at: replayed.closed_at,
        })
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }

    fn round(&self, id: &str) -> Result<Arc<RwLock<LiveRound>>, ServiceError> {
        self.rounds
            .read()
            .expect("round map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownRound(id.to_owned()))
    }

    pub fn create_round(&self, req: CreateRound) -> Result<String, ServiceError> {
        let p = req.payoffs;
        let payoffs = PayoffStructure::from_signed(p.base, p.pi, p.nu, p.alpha)?;
        req.stopping.validate()?;
        let mut config = RoundConfig::new(req.request, payoffs, req.stopping)
            .with_seed(req.seed.unwrap_or_else(rand::random))
            .with_dedup(req.dedup_policy);
        config.presentation = req.presentation;

        let mut rounds = self.rounds.write().expect("round map lock");
        let id = loop {
            let id = format!("r{}", random_hex(8));
            if !rounds.contains_key(&id) {
                break id;
            }
        };
        let files = RoundFiles::create(&self.data_dir, &id, &config)?;
        let live = LiveRound {
            state: RoundState::new(config),
            files,
            sessions: HashMap::new(),
            acks: HashMap::new(),
            closed_at: None,
        };
        rounds.insert(id.clone(), Arc::new(RwLock::new(live)));
        log::info!("created round {id}");
        Ok(id)
    }

    pub fn join_round(&self, id: &str) -> Result<Joined, ServiceError> {
        let round = self.round(id)?;
        let mut live = round.write().expect("round lock");
        if !live.state.is_open() {
            return Err(MechanismError::RoundClosed.into());
        }
        let token = random_hex(16);
        let (session, digest) = session_for(&token);
        let issued_at = now_ms();
        live.files.append_session(&SessionRecord::Issued {
            session: session.0.clone(),
            token_sha256: digest,
            issued_at,
        })?;
        let view = live.state.worker_view(&session)?;
        live.sessions.insert(session, issued_at);
        Ok(Joined { token, view })
    }

    fn authenticate(live: &LiveRound, token: &str) -> Result<SessionId, ServiceError> {
        let (session, _) = session_for(token);
        if live.sessions.contains_key(&session) {
            Ok(session)
        } else {
            Err(ServiceError::InvalidToken)
        }
    }

    pub fn view(&self, id: &str, token: &str) -> Result<WorkerView, ServiceError> {
        let round = self.round(id)?;
        let live = round.read().expect("round lock");
        let session = Self::authenticate(&live, token)?;
        Ok(live.state.worker_view(&session)?)
    }

    pub fn submit_action(&self, id: &str, submission: Submission) -> Result<Ack, ServiceError> {
        let round = self.round(id)?;
        let mut guard = round.write().expect("round lock");
        let live = &mut *guard;
        let session = Self::authenticate(live, &submission.token)?;
        if let Some(key) = &submission.idempotency_key {
            if let Some(ack) = live.acks.get(&(session.clone(), key.clone())) {
                return Ok(ack.clone());
            }
        }

        let rule = payoff_rule(&submission.action, &live.state.config().payoffs);
        let applied = live.state.apply_action(session.clone(), submission.action, now_ms())?;
        let event = live.state.events().last().expect("just applied");
        if let Err(e) = live.files.append_event(event) {
            Self::reload_after_failure(&self.data_dir, id, live);
            return Err(e.into());
        }

        let ack = Ack {
            canonical: applied.canonical,
            contribution_id: applied.contribution,
            payoff_rule: rule,
            note: match (applied.canonical, applied.demoted) {
                (false, _) => Some("this session already acted; the action was recorded but does not count".into()),
                (true, Some(_)) => Some("this vote replaces your earlier vote".into()),
                (true, None) => None,
            },
        };
        if let Some(key) = submission.idempotency_key {
            live.files.append_session(&SessionRecord::Ack {
                session: session.0.clone(),
                idempotency_key: key.clone(),
                ack: serde_json::to_value(&ack).expect("ack serializes"),
            })?;
            live.acks.insert((session, key), ack.clone());
        }

        if live.state.check_stopping() {
            Self::close_locked(&self.data_dir, id, live)?;
        }
        Ok(ack)
    }

    fn close_locked(dir: &Path, id: &str, live: &mut LiveRound) -> Result<ContributionId, ServiceError> {
        let winner = live.state.close()?;
        let closed_at = now_ms();
        let record = CloseRecord {
            winner: winner.clone(),
            closed_at,
        };
        if let Err(e) = live.files.append_close(&record) {
            Self::reload_after_failure(dir, id, live);
            return Err(e.into());
        }
        live.closed_at = Some(closed_at);
        log::info!("round {id} closed, winner {winner}");
        Ok(winner)
    }

    /// Resets in-memory state to what the log holds after a failed write.
    fn reload_after_failure(dir: &Path, id: &str, live: &mut LiveRound) {
        match replay_log(&RoundFiles::log_path(dir, id)) {
            Ok(r) => {
                live.state = r.state;
                live.closed_at = r.closed_at;
            }
            Err(e) => log::error!("round {id}: cannot reload after a failed write: {e}"),
        }
    }

    /// Operator close. Needs the liveness guard but not the stopping condition.
    pub fn close_round(&self, id: &str) -> Result<Closed, ServiceError> {
        let round = self.round(id)?;
        let mut live = round.write().expect("round lock");
        let winner = Self::close_locked(&self.data_dir, id, &mut live)?;
        Ok(Closed { winner })
    }

    pub fn results(&self, id: &str) -> Result<Results, ServiceError> {
        let round = self.round(id)?;
        let live = round.read().expect("round lock");
        let Some(winner) = live.state.winner().cloned() else {
            return Err(MechanismError::RoundStillOpen.into());
        };
        let tallies = live
            .state
            .contributions()
            .iter()
            .map(|c| TallyEntry {
                id: c.id.clone(),
                text: c.text.clone(),
                votes: live.state.tally(&c.id).unwrap_or(0),
            })
            .collect();
        let config = live.state.config();
        Ok(Results {
            round_id: id.to_owned(),
            request: config.request.clone(),
            payoffs: config.payoffs,
            payouts: live.state.compute_payouts(&winner)?,
            winner,
            closed_at: live.closed_at.unwrap_or(0),
            tallies,
        })
    }

    /// A copy of the round's current state.
    pub fn snapshot(&self, id: &str) -> Result<RoundState, ServiceError> {
        Ok(self.round(id)?.read().expect("round lock").state.clone())
    }
}
