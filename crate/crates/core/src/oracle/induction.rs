use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::OracleError;
use crate::mechanism::ActionKind;
use crate::money::PayoffStructure;
use crate::Rational;

/// Largest horizon accepted by [`OracleMode::FiniteHorizon`].
pub const MAX_FINITE_HORIZON: u32 = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    /// Workers do not know how many others will follow.
    IndeterminateHorizon,
    /// Exactly `n` workers, known to all.
    FiniteHorizon { n: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HorizonState {
    /// Workers still to act, including the current one.
    pub remaining: u32,
    /// Whether any vote has been cast so far.
    pub voted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OracleState {
    pub proposals: u64,
    /// `None` in indeterminate-horizon mode.
    pub horizon: Option<HorizonState>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyEntry {
    pub state: OracleState,
    pub action: ActionKind,
    pub abstain_ev: Rational,
    /// `None` when there is nothing to vote for.
    pub vote_ev: Option<Rational>,
    pub propose_ev: Rational,
    /// Number of proposals the round ends with if play continues optimally
    /// from this state.
    pub final_count: u64,
}

impl PolicyEntry {
    pub fn value(&self) -> Rational {
        match self.action {
            ActionKind::Abstain => self.abstain_ev,
            ActionKind::Vote => self.vote_ev.expect("vote chosen only when available"),
            ActionKind::Propose => self.propose_ev,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyTable {
    pub payoffs: PayoffStructure,
    pub mode: OracleMode,
    /// Sorted by state. Indeterminate mode has one entry per proposal count
    /// `0..=ceiling`.
    pub entries: Vec<PolicyEntry>,
}

impl PolicyTable {
    /// Highest proposal count in the table.
    pub fn ceiling(&self) -> u64 {
        self.entries.iter().map(|e| e.state.proposals).max().unwrap_or(0)
    }

    pub fn entry(&self, state: &OracleState) -> Option<&PolicyEntry> {
        self.entries
            .binary_search_by(|e| e.state.cmp(state))
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Indeterminate-mode action at `m` proposals. States past the ceiling
    /// abstain.
    pub fn action_at(&self, m: u64) -> ActionKind {
        let state = OracleState {
            proposals: m,
            horizon: None,
        };
        self.entry(&state).map_or(ActionKind::Abstain, |e| e.action)
    }

    /// Actions of the first `n` workers when everyone follows the table.
    /// In finite mode `n` is capped at the horizon.
    pub fn worker_actions(&self, n: usize) -> Vec<ActionKind> {
        let mut out = Vec::with_capacity(n);
        let mut m = 0u64;
        match self.mode {
            OracleMode::IndeterminateHorizon => {
                for _ in 0..n {
                    let a = self.action_at(m);
                    if a == ActionKind::Propose {
                        m += 1;
                    }
                    out.push(a);
                }
            }
            OracleMode::FiniteHorizon { n: horizon } => {
                let mut voted = false;
                for remaining in (1..=horizon).rev().take(n) {
                    let state = OracleState {
                        proposals: m,
                        horizon: Some(HorizonState { remaining, voted }),
                    };
                    let a = self.entry(&state).expect("reachable state tabulated").action;
                    match a {
                        ActionKind::Propose => m += 1,
                        ActionKind::Vote => voted = true,
                        ActionKind::Abstain => {}
                    }
                    out.push(a);
                }
            }
        }
        out
    }
}

fn ratio(n: u64, d: u64) -> Rational {
    Rational::new(i128::from(n), i128::from(d))
}

/// Picks the action with the highest expected payoff; equal payoffs prefer
/// abstain, then vote, then propose.
fn choose(abstain: Rational, vote: Option<Rational>, propose: Rational) -> ActionKind {
    let mut best = (ActionKind::Abstain, abstain);
    if let Some(v) = vote {
        if v > best.1 {
            best = (ActionKind::Vote, v);
        }
    }
    if propose > best.1 {
        best = (ActionKind::Propose, propose);
    }
    best.0
}

/// Solves the uninformed-worker game by backward induction.
///
/// Voting at `m` pays `nu / m`, proposing pays `pi / F(m+1)` where `F` is the
/// number of proposals the round ends with when everyone after plays
/// optimally. Play from any state is a run of proposals followed by one
/// action repeated forever; if that action is abstain nobody ever votes, the
/// round never closes and proposing pays nothing. In the indeterminate mode
/// the induction starts at
/// `M = max(ceil(nu/alpha), ceil(pi/alpha)) + 1`, where both bonuses have
/// fallen below `alpha`. The finite mode runs over `(proposals, remaining,
/// voted)`; a proposal in a round that ends without any vote pays nothing.
pub fn backward_induction(p: &PayoffStructure, mode: OracleMode) -> Result<PolicyTable, OracleError> {
    match mode {
        OracleMode::IndeterminateHorizon => indeterminate(p),
        OracleMode::FiniteHorizon { n } => finite(p, n),
    }
}

fn indeterminate(p: &PayoffStructure) -> Result<PolicyTable, OracleError> {
    let (pi, nu, alpha) = p.triple();
    if alpha == 0 {
        return Err(OracleError::UnboundedGame);
    }
    let ceiling = nu.div_ceil(alpha).max(pi.div_ceil(alpha)) + 1;
    let abstain_ev = Rational::from_integer(i128::from(alpha));

    let mut entries = Vec::with_capacity(ceiling as usize + 1);
    // past the ceiling every worker abstains, so the count freezes there and
    // nobody votes
    let mut next_final = ceiling + 1;
    let mut next_voted = false;
    for m in (0..=ceiling).rev() {
        let propose_ev = if next_voted {
            ratio(pi, next_final)
        } else {
            Rational::from_integer(0)
        };
        let vote_ev = (m >= 1).then(|| ratio(nu, m));
        let action = choose(abstain_ev, vote_ev, propose_ev);
        let (final_count, voted) = match action {
            ActionKind::Propose => (next_final, next_voted),
            other => (m, other == ActionKind::Vote),
        };
        entries.push(PolicyEntry {
            state: OracleState {
                proposals: m,
                horizon: None,
            },
            action,
            abstain_ev,
            vote_ev,
            propose_ev,
            final_count,
        });
        next_final = final_count;
        next_voted = voted;
    }
    entries.reverse();
    Ok(PolicyTable {
        payoffs: *p,
        mode: OracleMode::IndeterminateHorizon,
        entries,
    })
}

#[derive(Clone, Copy)]
struct Outcome {
    final_count: u64,
    voted: bool,
}

fn finite(p: &PayoffStructure, n: u32) -> Result<PolicyTable, OracleError> {
    if n == 0 || n > MAX_FINITE_HORIZON {
        return Err(OracleError::BadHorizon {
            n,
            max: MAX_FINITE_HORIZON,
        });
    }
    let (pi, nu, alpha) = p.triple();
    let abstain_ev = Rational::from_integer(i128::from(alpha));
    let n = n as usize;
    // outcome[m][voted] for the layer with one fewer worker remaining
    let mut later: Vec<[Outcome; 2]> = (0..=n)
        .map(|m| {
            let m = m as u64;
            [
                Outcome { final_count: m, voted: false },
                Outcome { final_count: m, voted: true },
            ]
        })
        .collect();
    let mut entries = Vec::new();

    for remaining in 1..=n {
        // with `remaining` workers left, at most n - remaining have acted
        let max_m = n - remaining;
        let mut layer = Vec::with_capacity(max_m + 1);
        for m in 0..=max_m {
            let mut pair = [Outcome { final_count: 0, voted: false }; 2];
            for voted in [false, true] {
                if voted && m == 0 {
                    // no vote can precede the first proposal
                    pair[1] = Outcome { final_count: 0, voted: true };
                    continue;
                }
                let after_propose = later[m + 1][usize::from(voted)];
                let propose_ev = if after_propose.voted {
                    ratio(pi, after_propose.final_count)
                } else {
                    Rational::from_integer(0)
                };
                let after_vote = later[m][1];
                let vote_ev = (m >= 1).then(|| ratio(nu, after_vote.final_count));
                let action = choose(abstain_ev, vote_ev, propose_ev);
                let outcome = match action {
                    ActionKind::Propose => after_propose,
                    ActionKind::Vote => after_vote,
                    ActionKind::Abstain => later[m][usize::from(voted)],
                };
                pair[usize::from(voted)] = outcome;
                entries.push(PolicyEntry {
                    state: OracleState {
                        proposals: m as u64,
                        horizon: Some(HorizonState {
                            remaining: remaining as u32,
                            voted,
                        }),
                    },
                    action,
                    abstain_ev,
                    vote_ev,
                    propose_ev,
                    final_count: outcome.final_count,
                });
            }
            layer.push(pair);
        }
        later = layer;
    }
    entries.sort_by_key(|e| e.state);
    Ok(PolicyTable {
        payoffs: *p,
        mode: OracleMode::FiniteHorizon { n: n as u32 },
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ActionKind::*;

    fn p(pi: u64, nu: u64, alpha: u64) -> PayoffStructure {
        PayoffStructure::new(pi, nu, alpha)
    }

    // Hand induction for (12,5,2): ceiling 7; from m=3 up a proposal leads to a
    // round where everyone abstains and nobody votes, so it pays 0 and m=3..7
    // abstain; m=2 votes 5/2 > 2; m=1 proposes 12/2 > 5.
    #[test]
    fn hand_induction_12_5_2() {
        let t = backward_induction(&p(12, 5, 2), OracleMode::IndeterminateHorizon).unwrap();
        assert_eq!(t.ceiling(), 7);
        let actions: Vec<_> = (0..=7).map(|m| t.action_at(m)).collect();
        assert_eq!(actions, [Propose, Propose, Vote, Abstain, Abstain, Abstain, Abstain, Abstain]);
        assert_eq!(t.entries[0].final_count, 2);
        assert_eq!(t.entries[3].final_count, 3);
        assert_eq!(t.entries[3].propose_ev, Rational::from_integer(0));
    }

    #[test]
    fn abstain_all_regime() {
        let t = backward_induction(&p(10, 1, 2), OracleMode::IndeterminateHorizon).unwrap();
        for e in &t.entries {
            assert_eq!(e.action, Abstain);
            assert_eq!(e.value(), Rational::from_integer(2));
        }
    }

    #[test]
    fn zero_alpha_is_unbounded() {
        assert_eq!(
            backward_induction(&p(12, 5, 0), OracleMode::IndeterminateHorizon),
            Err(OracleError::UnboundedGame)
        );
    }

    // Three workers, (5,12,2): the last mover votes at m=1 (12 > 2); the second
    // votes (12 vs 5/2); the first proposes (5 > 2).
    #[test]
    fn finite_three_workers() {
        let t = backward_induction(&p(5, 12, 2), OracleMode::FiniteHorizon { n: 3 }).unwrap();
        assert_eq!(t.worker_actions(3), [Propose, Vote, Vote]);
    }

    #[test]
    fn finite_last_mover_never_proposes_into_silence() {
        // With one worker there can be no vote after a proposal.
        let t = backward_induction(&p(12, 5, 2), OracleMode::FiniteHorizon { n: 1 }).unwrap();
        assert_eq!(t.worker_actions(1), [Abstain]);
    }

    #[test]
    fn finite_horizon_bounds() {
        assert!(matches!(
            backward_induction(&p(12, 5, 2), OracleMode::FiniteHorizon { n: 0 }),
            Err(OracleError::BadHorizon { .. })
        ));
    }

    #[test]
    fn abstain_ev_and_final_count_invariants() {
        for q in [p(12, 5, 2), p(20, 4, 2), p(5, 12, 2), p(8, 8, 2)] {
            let t = backward_induction(&q, OracleMode::IndeterminateHorizon).unwrap();
            for e in &t.entries {
                assert_eq!(e.abstain_ev, Rational::from_integer(2));
                assert!(e.final_count >= e.state.proposals);
            }
        }
    }
}
