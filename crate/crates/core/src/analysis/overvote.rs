use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;

use super::{group_by_structure, RoundLog};
use crate::PayoffStructure;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OvervoteRow {
    /// `None` on the totals row.
    pub payoffs: Option<PayoffStructure>,
    pub rounds: u32,
    /// Sessions with at least one vote event.
    pub voting_workers: u32,
    pub raw_votes: u32,
    /// Vote events beyond the canonical ones.
    pub overvotes: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OvervoteReport {
    pub rows: Vec<OvervoteRow>,
    pub totals: OvervoteRow,
}

pub fn overvote_report(logs: &[RoundLog]) -> OvervoteReport {
    let mut totals = OvervoteRow::default();
    let rows = group_by_structure(logs)
        .into_iter()
        .map(|(payoffs, members)| {
            let mut row = OvervoteRow {
                payoffs: Some(payoffs),
                rounds: members.len() as u32,
                ..OvervoteRow::default()
            };
            for log in members {
                row.voting_workers += log.voting_workers();
                row.raw_votes += log.raw_votes();
                row.overvotes += log.raw_votes() - log.votes();
            }
            totals.rounds += row.rounds;
            totals.voting_workers += row.voting_workers;
            totals.raw_votes += row.raw_votes;
            totals.overvotes += row.overvotes;
            row
        })
        .collect();
    OvervoteReport { rows, totals }
}

impl fmt::Display for OvervoteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "pi\tnu\talpha\trounds\tvoting_workers\traw_votes\tovervotes")?;
        for row in &self.rows {
            let p = row.payoffs.expect("structure rows carry payoffs");
            writeln!(
                f,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                p.propose.get(),
                p.vote.get(),
                p.abstain.get(),
                row.rounds,
                row.voting_workers,
                row.raw_votes,
                row.overvotes
            )?;
        }
        let t = &self.totals;
        writeln!(f, "total\t\t\t{}\t{}\t{}\t{}", t.rounds, t.voting_workers, t.raw_votes, t.overvotes)
    }
}
