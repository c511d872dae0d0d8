use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::types::*;
use super::winner::plurality_winner;
use super::MechanismError;

/// Result of a successful [`RoundState::apply_action`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Applied {
    pub seq: u64,
    pub canonical: bool,
    /// Set when a canonical proposal created a contribution.
    pub contribution: Option<ContributionId>,
    /// Seq of an earlier vote that lost its canonical flag (CountLast).
    pub demoted: Option<u64>,
}

#[derive(Clone, Copy, Debug)]
struct SessionEntry {
    first_kind: ActionKind,
    /// Index into `events` of the session's canonical event.
    canonical_event: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("event seq gap: expected {expected}, found {found}")]
    SeqGap { expected: u64, found: u64 },
    #[error("event {seq}: {source}")]
    Rejected { seq: u64, source: MechanismError },
    #[error("recorded winner `{recorded}` differs from replayed winner `{replayed}`")]
    WinnerMismatch {
        recorded: ContributionId,
        replayed: ContributionId,
    },
    #[error("close record: {0}")]
    Close(MechanismError),
}

/// State of one round. Mutated only through [`apply_action`](Self::apply_action)
/// and [`close`](Self::close); callers serialize access per round.
#[derive(Clone, Debug)]
pub struct RoundState {
    config: RoundConfig,
    contributions: Vec<Contribution>,
    /// Canonical vote count per contribution, same order as `contributions`.
    tallies: Vec<u32>,
    events: Vec<RoundEvent>,
    status: RoundStatus,
    sessions: BTreeMap<SessionId, SessionEntry>,
    /// Sessions in order of first appearance.
    session_order: Vec<SessionId>,
}

impl RoundState {
    pub fn new(config: RoundConfig) -> Self {
        RoundState {
            config,
            contributions: Vec::new(),
            tallies: Vec::new(),
            events: Vec::new(),
            status: RoundStatus::Open,
            sessions: BTreeMap::new(),
            session_order: Vec::new(),
        }
    }

    /// Rebuilds a round from its logged events. The `canonical` flags stored in
    /// the log are ignored and recomputed.
    pub fn replay<I>(config: RoundConfig, events: I) -> Result<Self, ReplayError>
    where
        I: IntoIterator<Item = RoundEvent>,
    {
        let mut state = RoundState::new(config);
        for (expected, event) in (0u64..).zip(events) {
            if event.seq != expected {
                return Err(ReplayError::SeqGap {
                    expected,
                    found: event.seq,
                });
            }
            state
                .apply_action(event.session, event.action, event.received_at)
                .map_err(|source| ReplayError::Rejected {
                    seq: event.seq,
                    source,
                })?;
        }
        Ok(state)
    }

    /// Applies a logged close record, checking that the recorded winner is the
    /// one this round selects.
    pub fn replay_close(&mut self, recorded: &ContributionId) -> Result<(), ReplayError> {
        let replayed = self.close().map_err(ReplayError::Close)?;
        if &replayed != recorded {
            return Err(ReplayError::WinnerMismatch {
                recorded: recorded.clone(),
                replayed,
            });
        }
        Ok(())
    }

    pub fn config(&self) -> &RoundConfig {
        &self.config
    }

    pub fn contributions(&self) -> &[Contribution] {
        &self.contributions
    }

    pub fn events(&self) -> &[RoundEvent] {
        &self.events
    }

    pub fn status(&self) -> &RoundStatus {
        &self.status
    }

    pub fn is_open(&self) -> bool {
        self.status == RoundStatus::Open
    }

    pub fn winner(&self) -> Option<&ContributionId> {
        match &self.status {
            RoundStatus::Closed { winner } => Some(winner),
            RoundStatus::Open => None,
        }
    }

    /// `(contribution, canonical votes)` in arrival order.
    pub fn tallies(&self) -> impl Iterator<Item = (&ContributionId, u32)> + '_ {
        self.contributions
            .iter()
            .zip(&self.tallies)
            .map(|(c, &n)| (&c.id, n))
    }

    pub fn tally(&self, id: &ContributionId) -> Option<u32> {
        self.index_of(id).map(|i| self.tallies[i])
    }

    pub fn canonical_votes(&self) -> u32 {
        self.tallies.iter().sum()
    }

    /// Distinct sessions that have acted at least once.
    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }

    /// Sessions in order of first appearance.
    pub fn sessions(&self) -> &[SessionId] {
        &self.session_order
    }

    /// The session's canonical event, if it has acted.
    pub fn canonical_event(&self, session: &SessionId) -> Option<&RoundEvent> {
        self.sessions
            .get(session)
            .map(|entry| &self.events[entry.canonical_event])
    }

    fn index_of(&self, id: &ContributionId) -> Option<usize> {
        self.contributions.iter().position(|c| &c.id == id)
    }

    /// Appends one worker action.
    ///
    /// A session acts canonically at most once. A repeat vote is handled by the
    /// round's [`DedupPolicy`]; any other repeat is recorded non-canonically.
    /// On error the state is unchanged.
    pub fn apply_action(
        &mut self,
        session: SessionId,
        action: WorkerAction,
        received_at: u64,
    ) -> Result<Applied, MechanismError> {
        if !self.is_open() {
            return Err(MechanismError::RoundClosed);
        }
        let target = match &action {
            WorkerAction::Propose { text } if text.trim().is_empty() => {
                return Err(MechanismError::EmptyProposal)
            }
            WorkerAction::Vote { contribution_id } => Some(
                self.index_of(contribution_id)
                    .ok_or_else(|| MechanismError::UnknownContribution(contribution_id.clone()))?,
            ),
            _ => None,
        };

        let prior = self.sessions.get(&session).copied();
        let mut demoted = None;
        let canonical = match (prior, action.kind()) {
            (None, _) => true,
            (Some(entry), ActionKind::Vote) if entry.first_kind == ActionKind::Vote => {
                match self.config.dedup_policy {
                    DedupPolicy::CountFirst => false,
                    DedupPolicy::Reject => return Err(MechanismError::DuplicateVote(session)),
                    DedupPolicy::CountLast => {
                        demoted = Some(entry.canonical_event);
                        true
                    }
                }
            }
            (Some(_), _) => false,
        };

        let seq = self.events.len() as u64;
        let index = self.events.len();
        let mut contribution = None;

        if let Some(old) = demoted {
            self.events[old].canonical = false;
            if let WorkerAction::Vote { contribution_id } = &self.events[old].action {
                let i = self.index_of(contribution_id).expect("voted contribution exists");
                self.tallies[i] -= 1;
            }
        }

        if canonical {
            match &action {
                WorkerAction::Propose { text } => {
                    let cseq = self.contributions.len() as u32;
                    let id = ContributionId::from_seq(cseq);
                    self.contributions.push(Contribution {
                        id: id.clone(),
                        text: text.clone(),
                        proposer: session.clone(),
                        seq: cseq,
                    });
                    self.tallies.push(0);
                    contribution = Some(id);
                }
                WorkerAction::Vote { .. } => {
                    self.tallies[target.expect("vote target resolved")] += 1;
                }
                WorkerAction::Abstain => {}
            }
            match self.sessions.get_mut(&session) {
                Some(entry) => entry.canonical_event = index,
                None => {
                    self.sessions.insert(
                        session.clone(),
                        SessionEntry {
                            first_kind: action.kind(),
                            canonical_event: index,
                        },
                    );
                    self.session_order.push(session.clone());
                }
            }
        }

        self.events.push(RoundEvent {
            seq,
            session,
            action,
            received_at,
            canonical,
        });

        Ok(Applied {
            seq,
            canonical,
            contribution,
            demoted: demoted.map(|i| i as u64),
        })
    }

    /// The options a worker is shown. Never includes tallies or worker counts.
    pub fn worker_view(&self, session: &SessionId) -> Result<WorkerView, MechanismError> {
        if !self.is_open() {
            return Err(MechanismError::RoundClosed);
        }
        let mut options: Vec<ViewOption> = self
            .contributions
            .iter()
            .map(|c| ViewOption {
                id: c.id.clone(),
                text: c.text.clone(),
            })
            .collect();
        if self.config.presentation == PresentationOrder::ShuffledPerSession {
            let mut rng = ChaCha8Rng::seed_from_u64(self.config.rng_seed ^ fnv1a(session.as_str()));
            options.shuffle(&mut rng);
        }
        Ok(WorkerView {
            request: self.config.request.clone(),
            payoffs: self.config.payoffs,
            options,
        })
    }

    /// At least one contribution and one canonical vote.
    pub fn liveness_guard(&self) -> bool {
        !self.contributions.is_empty() && self.canonical_votes() > 0
    }

    /// True when the configured stopping condition is met and the liveness
    /// guard holds.
    pub fn check_stopping(&self) -> bool {
        let condition = match self.config.stopping {
            StoppingCondition::MaxWorkers { n } => self.sessions.len() >= n as usize,
            StoppingCondition::MinVotesAny { k } => self.tallies.iter().any(|&t| t >= k),
            StoppingCondition::Manual => false,
        };
        condition && self.liveness_guard()
    }

    /// Plurality winner; ties are broken uniformly with a generator seeded by
    /// the round's `rng_seed`.
    pub fn select_winner(&self) -> Result<ContributionId, MechanismError> {
        plurality_winner(&self.tallies, self.config.rng_seed)
            .map(|i| self.contributions[i].id.clone())
            .ok_or(MechanismError::NoVotes)
    }

    /// Closes the round and returns the winner. Requires the liveness guard,
    /// not the stopping condition, so manual closes go through here too.
    pub fn close(&mut self) -> Result<ContributionId, MechanismError> {
        if !self.is_open() {
            return Err(MechanismError::RoundClosed);
        }
        if !self.liveness_guard() {
            return Err(MechanismError::NotTerminable);
        }
        let winner = self.select_winner()?;
        self.status = RoundStatus::Closed {
            winner: winner.clone(),
        };
        Ok(winner)
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::canonicalize_votes;
    use crate::PayoffStructure;

    fn round(policy: DedupPolicy) -> RoundState {
        RoundState::new(
            RoundConfig::new(
                "describe the image",
                PayoffStructure::new(12, 5, 2).with_base(2),
                StoppingCondition::MaxWorkers { n: 20 },
            )
            .with_dedup(policy)
            .with_seed(42),
        )
    }

    fn s(name: &str) -> SessionId {
        SessionId::from(name)
    }

    #[test]
    fn first_proposal_creates_c0() {
        let mut r = round(DedupPolicy::CountFirst);
        let applied = r.apply_action(s("w1"), WorkerAction::propose("gate"), 0).unwrap();
        assert_eq!(applied.contribution, Some(ContributionId::from("c0")));
        assert_eq!(r.contributions().len(), 1);
        assert_eq!(r.contributions()[0].text, "gate");
        assert_eq!(r.canonical_votes(), 0);
    }

    #[test]
    fn vote_for_unknown_contribution() {
        let mut r = round(DedupPolicy::CountFirst);
        r.apply_action(s("w1"), WorkerAction::propose("gate"), 0).unwrap();
        let err = r.apply_action(s("w2"), WorkerAction::vote("c9"), 1).unwrap_err();
        assert_eq!(err, MechanismError::UnknownContribution("c9".into()));
        assert_eq!(r.events().len(), 1);
    }

    #[test]
    fn empty_proposal_rejected() {
        let mut r = round(DedupPolicy::CountFirst);
        assert_eq!(
            r.apply_action(s("w1"), WorkerAction::propose("  "), 0),
            Err(MechanismError::EmptyProposal)
        );
    }

    // Replay by hand: [w1 propose, s vote c0 (canonical), s vote c0 (dup)].
    #[test]
    fn count_first_keeps_earliest_vote() {
        let mut r = round(DedupPolicy::CountFirst);
        r.apply_action(s("w1"), WorkerAction::propose("gate"), 0).unwrap();
        r.apply_action(s("s"), WorkerAction::vote("c0"), 1).unwrap();
        let second = r.apply_action(s("s"), WorkerAction::vote("c0"), 2).unwrap();
        assert!(!second.canonical);
        assert_eq!(r.tally(&"c0".into()), Some(1));
        let votes: Vec<bool> = r
            .events()
            .iter()
            .filter(|e| e.action.kind() == ActionKind::Vote)
            .map(|e| e.canonical)
            .collect();
        assert_eq!(votes, [true, false]);
    }

    #[test]
    fn count_last_demotes_earlier_vote() {
        let mut r = round(DedupPolicy::CountLast);
        r.apply_action(s("w1"), WorkerAction::propose("A"), 0).unwrap();
        r.apply_action(s("w2"), WorkerAction::propose("B"), 1).unwrap();
        r.apply_action(s("s"), WorkerAction::vote("c0"), 2).unwrap();
        let applied = r.apply_action(s("s"), WorkerAction::vote("c1"), 3).unwrap();
        assert_eq!(applied.demoted, Some(2));
        assert_eq!(r.tally(&"c0".into()), Some(0));
        assert_eq!(r.tally(&"c1".into()), Some(1));
        assert!(!r.events()[2].canonical);
        assert!(r.events()[3].canonical);
    }

    #[test]
    fn reject_policy_refuses_second_vote() {
        let mut r = round(DedupPolicy::Reject);
        r.apply_action(s("w1"), WorkerAction::propose("A"), 0).unwrap();
        r.apply_action(s("s"), WorkerAction::vote("c0"), 1).unwrap();
        assert_eq!(
            r.apply_action(s("s"), WorkerAction::vote("c0"), 2),
            Err(MechanismError::DuplicateVote(s("s")))
        );
        assert_eq!(r.events().len(), 2);
    }

    #[test]
    fn different_kind_repeat_is_non_canonical() {
        let mut r = round(DedupPolicy::CountLast);
        r.apply_action(s("w1"), WorkerAction::propose("A"), 0).unwrap();
        let again = r.apply_action(s("w1"), WorkerAction::propose("B"), 1).unwrap();
        assert!(!again.canonical);
        assert_eq!(again.contribution, None);
        let vote = r.apply_action(s("w1"), WorkerAction::vote("c0"), 2).unwrap();
        assert!(!vote.canonical);
        assert_eq!(r.contributions().len(), 1);
        assert_eq!(r.canonical_votes(), 0);
    }

    #[test]
    fn view_hides_tallies() {
        let mut r = round(DedupPolicy::CountFirst);
        r.apply_action(s("w1"), WorkerAction::propose("A"), 0).unwrap();
        r.apply_action(s("w2"), WorkerAction::propose("B"), 1).unwrap();
        for i in 0..3 {
            r.apply_action(SessionId(alloc::format!("v{i}")), WorkerAction::vote("c0"), 2).unwrap();
        }
        r.apply_action(s("v9"), WorkerAction::vote("c1"), 5).unwrap();
        let view = r.worker_view(&s("new")).unwrap();
        let ids: Vec<&str> = view.options.iter().map(|o| o.id.as_str()).collect();
        assert_eq!(ids, ["c0", "c1"]);
        let json = serde_json::to_string(&view).unwrap();
        for forbidden in ["tall", "votes", "count", "workers", "seq", "events"] {
            assert!(!json.contains(forbidden), "{forbidden} leaked in {json}");
        }
    }

    #[test]
    fn empty_round_view_has_no_options() {
        let r = round(DedupPolicy::CountFirst);
        assert!(r.worker_view(&s("w1")).unwrap().options.is_empty());
    }

    #[test]
    fn views_identical_across_sessions() {
        let mut r = round(DedupPolicy::CountFirst);
        r.apply_action(s("w1"), WorkerAction::propose("A"), 0).unwrap();
        r.apply_action(s("w2"), WorkerAction::vote("c0"), 1).unwrap();
        let a = serde_json::to_vec(&r.worker_view(&s("x")).unwrap()).unwrap();
        let b = serde_json::to_vec(&r.worker_view(&s("y")).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shuffled_presentation_is_a_permutation() {
        let mut config = round(DedupPolicy::CountFirst).config().clone();
        config.presentation = PresentationOrder::ShuffledPerSession;
        let mut r = RoundState::new(config);
        for i in 0..6 {
            r.apply_action(SessionId(alloc::format!("p{i}")), WorkerAction::propose("x"), i).unwrap();
        }
        let mut ids: Vec<_> = r.worker_view(&s("z")).unwrap().options.into_iter().map(|o| o.id).collect();
        assert_eq!(r.worker_view(&s("z")).unwrap().options.len(), 6);
        ids.sort();
        assert_eq!(ids, r.contributions().iter().map(|c| c.id.clone()).collect::<Vec<_>>());
    }

    #[test]
    fn closed_round_refuses_actions_and_views() {
        let mut r = round(DedupPolicy::CountFirst);
        r.apply_action(s("w1"), WorkerAction::propose("A"), 0).unwrap();
        r.apply_action(s("w2"), WorkerAction::vote("c0"), 1).unwrap();
        assert_eq!(r.close().unwrap(), ContributionId::from("c0"));
        assert_eq!(r.worker_view(&s("w3")), Err(MechanismError::RoundClosed));
        assert_eq!(
            r.apply_action(s("w3"), WorkerAction::Abstain, 2),
            Err(MechanismError::RoundClosed)
        );
    }

    #[test]
    fn close_requires_guard() {
        let mut r = round(DedupPolicy::CountFirst);
        r.apply_action(s("w1"), WorkerAction::propose("A"), 0).unwrap();
        assert_eq!(r.close(), Err(MechanismError::NotTerminable));
        assert!(r.is_open());
    }

    fn acted(r: &mut RoundState, proposals: usize, votes: usize, abstains: usize) {
        let mut t = 0;
        for i in 0..proposals {
            r.apply_action(SessionId(alloc::format!("p{i}")), WorkerAction::propose("x"), t).unwrap();
            t += 1;
        }
        for i in 0..votes {
            r.apply_action(SessionId(alloc::format!("v{i}")), WorkerAction::vote("c0"), t).unwrap();
            t += 1;
        }
        for i in 0..abstains {
            r.apply_action(SessionId(alloc::format!("a{i}")), WorkerAction::Abstain, t).unwrap();
            t += 1;
        }
    }

    #[test]
    fn stopping_max_workers_met() {
        let mut r = round(DedupPolicy::CountFirst);
        acted(&mut r, 3, 10, 7);
        assert_eq!(r.session_count(), 20);
        assert!(r.check_stopping());
    }

    #[test]
    fn stopping_blocked_by_liveness_guard() {
        let mut r = round(DedupPolicy::CountFirst);
        acted(&mut r, 2, 0, 18);
        assert_eq!(r.session_count(), 20);
        assert!(!r.check_stopping());
    }

    #[test]
    fn stopping_min_votes_any() {
        let mut r = RoundState::new(RoundConfig::new(
            "q",
            PayoffStructure::new(12, 5, 2),
            StoppingCondition::MinVotesAny { k: 5 },
        ));
        acted(&mut r, 2, 4, 0);
        assert!(!r.check_stopping());
        r.apply_action(s("last"), WorkerAction::vote("c0"), 99).unwrap();
        assert_eq!(r.tally(&"c0".into()), Some(5));
        assert!(r.check_stopping());
    }

    #[test]
    fn manual_stopping_never_fires() {
        let mut r = RoundState::new(RoundConfig::new(
            "q",
            PayoffStructure::new(12, 5, 2),
            StoppingCondition::Manual,
        ));
        acted(&mut r, 2, 40, 0);
        assert!(!r.check_stopping());
    }

    #[test]
    fn invalid_stopping() {
        assert!(StoppingCondition::MaxWorkers { n: 0 }.validate().is_err());
        assert!(StoppingCondition::MinVotesAny { k: 0 }.validate().is_err());
        assert!(StoppingCondition::Manual.validate().is_ok());
    }

    #[test]
    fn replay_reproduces_state() {
        let mut r = round(DedupPolicy::CountLast);
        acted(&mut r, 3, 5, 2);
        r.apply_action(s("v1"), WorkerAction::vote("c2"), 50).unwrap();
        r.apply_action(s("p0"), WorkerAction::Abstain, 51).unwrap();
        let replayed = RoundState::replay(r.config().clone(), r.events().iter().cloned()).unwrap();
        assert_eq!(replayed.events(), r.events());
        assert_eq!(replayed.contributions(), r.contributions());
        assert_eq!(replayed.tallies().collect::<Vec<_>>(), r.tallies().collect::<Vec<_>>());
        let canon = canonicalize_votes(r.events(), DedupPolicy::CountLast).unwrap();
        assert_eq!(canon, r.events());
    }

    #[test]
    fn replay_detects_seq_gap() {
        let mut r = round(DedupPolicy::CountFirst);
        acted(&mut r, 1, 2, 0);
        let mut events = r.events().to_vec();
        events.remove(1);
        assert_eq!(
            RoundState::replay(r.config().clone(), events).unwrap_err(),
            ReplayError::SeqGap { expected: 1, found: 2 }
        );
    }
}
