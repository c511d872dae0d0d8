use alloc::vec::Vec;

use serde::Serialize;
use thiserror::Error;

use super::RoundLog;
use crate::mechanism::ActionKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("round has no canonical votes")]
pub struct NoVotes;

/// Canonical votes cast after the round's last proposal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LastShare {
    pub votes_after_last_proposal: u32,
    pub votes: u32,
}

impl LastShare {
    pub fn of(log: &RoundLog) -> Result<Self, NoVotes> {
        let canonical = || log.events().iter().filter(|e| e.canonical);
        let last_proposal = canonical()
            .filter(|e| e.action.kind() == ActionKind::Propose)
            .map(|e| e.seq)
            .next_back();
        let votes = canonical().filter(|e| e.action.kind() == ActionKind::Vote);
        let (Some(last), total) = (last_proposal, votes.clone().count() as u32) else {
            return Err(NoVotes);
        };
        if total == 0 {
            return Err(NoVotes);
        }
        Ok(LastShare {
            votes_after_last_proposal: votes.filter(|e| e.seq > last).count() as u32,
            votes: total,
        })
    }

    pub fn percent(&self) -> f64 {
        100.0 * f64::from(self.votes_after_last_proposal) / f64::from(self.votes)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LastShareReport {
    /// One entry per input round, `None` where the round had no votes.
    pub rounds: Vec<Option<LastShare>>,
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
}

/// Per-round share of canonical votes cast after the last proposal, with a
/// summary over the rounds that had votes. Summary fields are NaN when no
/// round had votes.
pub fn last_proposal_vote_share(logs: &[RoundLog]) -> LastShareReport {
    let rounds: Vec<_> = logs.iter().map(|l| LastShare::of(l).ok()).collect();
    let mut pct: Vec<f64> = rounds.iter().flatten().map(LastShare::percent).collect();
    pct.sort_by(f64::total_cmp);
    let n = pct.len();
    let (min, median, mean, max) = if n == 0 {
        (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    } else {
        let median = if n % 2 == 1 {
            pct[n / 2]
        } else {
            (pct[n / 2 - 1] + pct[n / 2]) / 2.0
        };
        (pct[0], median, pct.iter().sum::<f64>() / n as f64, pct[n - 1])
    };
    LastShareReport {
        rounds,
        min,
        median,
        mean,
        max,
    }
}

#[cfg(test)]
mod tests {
    use super::super::testing::*;
    use super::*;
    use crate::PayoffStructure;

    fn share(script: &str) -> Result<LastShare, NoVotes> {
        LastShare::of(&scripted(PayoffStructure::new(12, 5, 2), script))
    }

    #[test]
    fn interleaved() {
        let s = share("P V0 P V1 V0").unwrap();
        assert_eq!((s.votes_after_last_proposal, s.votes), (2, 3));
        assert!((s.percent() - 200.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_round_is_full() {
        assert_eq!(share("P P V0 V1 V1").unwrap().percent(), 100.0);
    }

    #[test]
    fn trailing_proposal_is_zero() {
        assert_eq!(share("P V0 P").unwrap().percent(), 0.0);
    }

    #[test]
    fn no_votes() {
        assert_eq!(share("P P"), Err(NoVotes));
    }

    #[test]
    fn summary() {
        let p = PayoffStructure::new(12, 5, 2);
        let report = last_proposal_vote_share(&logs(&[(p, "P V0"), (p, "P V0 P"), (p, "P"), (p, "P V0 P V1")]));
        assert_eq!(report.rounds.iter().filter(|r| r.is_none()).count(), 1);
        assert_eq!((report.min, report.median, report.max), (0.0, 50.0, 100.0));
    }
}
