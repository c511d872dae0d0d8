//! Dominant strategies for uninformed workers.
//!
//! The model: every worker treats all options as equally likely to win, and
//! believes everyone else does too, so a worker only observes `m`, the number
//! of proposals so far. Proposing pays `pi / (final number of proposals)`,
//! voting pays `nu / m`, abstaining pays `alpha`. All comparisons here are
//! exact integer cross-multiplications; nothing in this module uses floats.
//!
//! Equal expected payoffs resolve toward the lower-effort action:
//! abstain before vote before propose.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mechanism::ActionKind;
use crate::money::{Money, PayoffStructure};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrategyError {
    #[error("vote states are defined only for pi > nu > alpha > 0, got {0:?}")]
    WrongRegime(Regime),
    #[error("no integer payoff lies strictly inside the target interval at alpha = {alpha}")]
    NoIntegerSolution { alpha: u64 },
    #[error("target proposal count must be at least 1")]
    InvalidTarget,
    #[error("alpha must be at least 1 cent")]
    ZeroAbstain,
}

/// Which comparison of the closed form sits exactly on a boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tie {
    /// `alpha = 0` while proposing and voting pay: no finite vote ceiling.
    ZeroAbstain,
    /// `pi = nu`.
    ProposeEqualsVote,
    /// `nu = multiple * alpha`.
    VoteMultipleOfAbstain { multiple: u64 },
    /// `min(pi, nu) = multiple * alpha`, the propose-vs-abstain boundary.
    MinMultipleOfAbstain { multiple: u64 },
    /// `pi = multiple * nu` with `multiple <= floor(nu / alpha) + 1`.
    ProposeMultipleOfVote { multiple: u64 },
    /// `proposals * pi = nu * vote_state` for a vote state above `proposals`.
    ProposeVoteBoundary { proposals: u64, vote_state: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `alpha >= min(pi, nu)`: everyone abstains.
    AbstainAll,
    /// `pi > nu > alpha`.
    ProposeThenVote,
    /// `nu > pi > alpha`.
    VoteFirst,
    /// One of the strict comparisons is an equality.
    Degenerate(Tie),
}

pub fn classify_regime(p: &PayoffStructure) -> Regime {
    let (pi, nu, alpha) = p.triple();
    let low = pi.min(nu);
    if alpha >= low {
        return Regime::AbstainAll;
    }
    if alpha == 0 {
        return Regime::Degenerate(Tie::ZeroAbstain);
    }
    if pi == nu {
        return Regime::Degenerate(Tie::ProposeEqualsVote);
    }
    if nu % alpha == 0 {
        return Regime::Degenerate(Tie::VoteMultipleOfAbstain { multiple: nu / alpha });
    }
    if low % alpha == 0 {
        return Regime::Degenerate(Tie::MinMultipleOfAbstain { multiple: low / alpha });
    }
    if nu > pi {
        return Regime::VoteFirst;
    }
    let cap = nu / alpha + 1;
    if pi % nu == 0 && pi / nu <= cap {
        return Regime::Degenerate(Tie::ProposeMultipleOfVote { multiple: pi / nu });
    }
    for w in vote_chain(pi, nu, alpha) {
        let num = u128::from(nu) * u128::from(w);
        if num % u128::from(pi) == 0 {
            let proposals = (num / u128::from(pi)) as u64;
            if proposals >= 1 {
                return Regime::Degenerate(Tie::ProposeVoteBoundary {
                    proposals,
                    vote_state: w,
                });
            }
        }
    }
    Regime::ProposeThenVote
}

/// Vote states for `pi >= nu > alpha > 0`, largest first.
///
/// The top state is the largest `m` with `m * alpha < nu`. Below a vote state
/// `w`, proposing beats voting while `m * pi > nu * w`, so the next vote state
/// is `min(w - 1, floor(nu * w / pi))`.
fn vote_chain(pi: u64, nu: u64, alpha: u64) -> Vec<u64> {
    debug_assert!(pi >= nu && nu > alpha && alpha > 0);
    let mut states = Vec::new();
    let mut w = (nu - 1) / alpha;
    while w > 0 {
        states.push(w);
        let next = (u128::from(nu) * u128::from(w) / u128::from(pi)) as u64;
        w = next.min(w - 1);
    }
    states
}

/// Which recurrence generates the vote states.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Recurrence {
    /// `m[i+1] = floor(nu * m[i] / pi)`, decreasing.
    #[default]
    Decreasing,
    /// `m[i+1] = floor(pi * m[i] / nu)`, the legacy increasing form. It grows when
    /// `pi > nu`, so iteration stops at the first value above `m0` or a repeat.
    /// Kept for comparison only.
    Increasing,
}

/// Proposal counts at which voting is the dominant action.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteStateSet {
    /// Ascending.
    pub states: Vec<u64>,
    /// `floor(nu / alpha)`.
    pub m0: u64,
}

impl VoteStateSet {
    pub fn contains(&self, m: u64) -> bool {
        self.states.binary_search(&m).is_ok()
    }
}

pub fn vote_states(p: &PayoffStructure) -> Result<VoteStateSet, StrategyError> {
    vote_states_with(p, Recurrence::Decreasing)
}

/// Requires `pi > nu > alpha > 0`. Boundary structures are accepted: when
/// `alpha` divides `nu`, `m0` pays a voter exactly `alpha` and
/// [`dominant_action`] resolves that state to abstain.
pub fn vote_states_with(p: &PayoffStructure, recurrence: Recurrence) -> Result<VoteStateSet, StrategyError> {
    let (pi, nu, alpha) = p.triple();
    if !(pi > nu && nu > alpha && alpha > 0) {
        return Err(StrategyError::WrongRegime(classify_regime(p)));
    }
    let m0 = nu / alpha;
    let mut states = Vec::new();
    let mut m = m0;
    match recurrence {
        Recurrence::Decreasing => {
            while m > 0 {
                states.push(m);
                m = (u128::from(nu) * u128::from(m) / u128::from(pi)) as u64;
            }
        }
        Recurrence::Increasing => {
            log::warn!("using the legacy increasing vote-state recurrence; tuned structures will not match");
            while m > 0 && m <= m0 && !states.contains(&m) {
                states.push(m);
                m = (u128::from(pi) * u128::from(m) / u128::from(nu)) as u64;
            }
        }
    }
    states.sort_unstable();
    Ok(VoteStateSet { states, m0 })
}

/// The dominant action of a worker facing `m` proposals.
///
/// Total over every payoff structure: boundary cases fall to the lower-effort
/// action. With `nu > pi` and `m >= 1` the worker votes while `nu / m > alpha`.
/// With `alpha = 0` every worker after the first votes.
pub fn dominant_action(p: &PayoffStructure, m: u64) -> ActionKind {
    let (pi, nu, alpha) = p.triple();
    if alpha >= pi.min(nu) {
        return ActionKind::Abstain;
    }
    if m == 0 {
        return ActionKind::Propose;
    }
    if alpha == 0 {
        return ActionKind::Vote;
    }
    let votes_pay = u128::from(nu) > u128::from(m) * u128::from(alpha);
    if nu > pi {
        return if votes_pay { ActionKind::Vote } else { ActionKind::Abstain };
    }
    if !votes_pay {
        return ActionKind::Abstain;
    }
    if vote_chain(pi, nu, alpha).contains(&m) {
        ActionKind::Vote
    } else {
        ActionKind::Propose
    }
}

/// Predicted action sequence of `n` workers who all play the dominant
/// strategy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub actions: Vec<ActionKind>,
    pub final_proposals: u64,
}

impl fmt::Display for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.actions {
            write!(f, "{}", a.letter())?;
        }
        Ok(())
    }
}

pub fn predicted_trajectory(p: &PayoffStructure, n: usize) -> Trajectory {
    let mut actions = Vec::with_capacity(n);
    let mut m = 0u64;
    let mut frozen = None;
    for _ in 0..n {
        let action = match frozen {
            Some(a) => a,
            None => dominant_action(p, m),
        };
        if action == ActionKind::Propose {
            m += 1;
        } else {
            frozen = Some(action);
        }
        actions.push(action);
    }
    Trajectory {
        actions,
        final_proposals: m,
    }
}

/// Whether `p` makes exactly `m` workers propose and everyone after vote:
/// `(m+1)·alpha > nu > m·alpha` and `(m+1)·nu > pi > m·nu`.
pub fn is_tuned(p: &PayoffStructure, m: u64) -> bool {
    if m == 0 {
        return false;
    }
    let (pi, nu, alpha) = p.triple();
    let (pi, nu, alpha, m) = (u128::from(pi), u128::from(nu), u128::from(alpha), u128::from(m));
    (m + 1) * alpha > nu && nu > m * alpha && (m + 1) * nu > pi && pi > m * nu
}

/// Payoffs that make exactly `m` workers propose before everyone votes.
///
/// `nu` is the integer nearest the middle of `(m·alpha, (m+1)·alpha)`, lower on
/// ties, and `pi` likewise inside `(m·nu, (m+1)·nu)`. Base pay is zero.
pub fn tune_payoffs(m: u64, alpha: Money) -> Result<PayoffStructure, StrategyError> {
    if m < 1 {
        return Err(StrategyError::InvalidTarget);
    }
    let a = alpha.get();
    let nu = m * a + a / 2;
    if nu <= m * a {
        return Err(StrategyError::NoIntegerSolution { alpha: a });
    }
    let pi = m * nu + nu / 2;
    if pi <= m * nu {
        return Err(StrategyError::NoIntegerSolution { alpha: a });
    }
    let p = PayoffStructure::new(pi, nu, a);
    debug_assert!(is_tuned(&p, m));
    Ok(p)
}

/// The three proposal-count bounds, exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProposalBounds {
    pub pi_over_alpha: Rational,
    pub nu_over_alpha: Rational,
    /// `min(pi / nu, 1)`; 1 when `nu = 0`.
    pub min_pi_over_nu_1: Rational,
}

impl ProposalBounds {
    /// True when `proposals` strictly exceeds each bound, in field order.
    pub fn exceeded_by(&self, proposals: u64) -> [bool; 3] {
        let n = Rational::from_integer(i128::from(proposals));
        [n > self.pi_over_alpha, n > self.min_pi_over_nu_1, n > self.nu_over_alpha]
    }
}

pub fn proposal_bounds(p: &PayoffStructure) -> Result<ProposalBounds, StrategyError> {
    let (pi, nu, alpha) = p.triple();
    if alpha == 0 {
        return Err(StrategyError::ZeroAbstain);
    }
    let r = |n: u64, d: u64| Rational::new(i128::from(n), i128::from(d));
    let one = Rational::from_integer(1);
    let min_pi_over_nu_1 = if nu == 0 { one } else { r(pi, nu).min(one) };
    Ok(ProposalBounds {
        pi_over_alpha: r(pi, alpha),
        nu_over_alpha: r(nu, alpha),
        min_pi_over_nu_1,
    })
}
