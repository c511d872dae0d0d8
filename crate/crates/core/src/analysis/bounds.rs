use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;

use super::{group_by_structure, RoundLog};
use crate::{PayoffStructure, Rational};

/// Column names, in the order of [`BoundRow::exceeds`].
pub const BOUND_NAMES: [&str; 3] = ["pi/alpha", "min{pi/nu,1}", "nu/alpha"];

/// Rounds of one structure whose proposal count strictly exceeds each bound.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BoundRow {
    /// `None` on the totals row.
    pub payoffs: Option<PayoffStructure>,
    pub rounds: u32,
    pub exceeds: [u32; 3],
    /// Rounds exceeding `max{pi/nu, 1}`, the alternative reading of the
    /// middle column.
    pub exceeds_max_pi_nu_1: u32,
    /// Rounds whose winning proposal was itself beyond the bound, per column.
    pub winners_after: [u32; 3],
    /// Rounds whose winning proposal was beyond at least one bound.
    pub winners_after_any: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundViolationTable {
    pub rows: Vec<BoundRow>,
    pub totals: BoundRow,
    pub footnotes: Vec<String>,
}

/// `[pi/alpha, min{pi/nu,1}, nu/alpha]` and `max{pi/nu,1}`; `None` is an
/// unbounded value (zero denominator).
fn bounds(p: &PayoffStructure) -> ([Option<Rational>; 3], Option<Rational>) {
    let (pi, nu, alpha) = (p.propose.get(), p.vote.get(), p.abstain.get());
    let ratio = |n: u64, d: u64| (d != 0).then(|| Rational::new(i128::from(n), i128::from(d)));
    let one = Rational::from_integer(1);
    let pi_nu = ratio(pi, nu);
    let min = Some(pi_nu.map_or(one, |r| r.min(one)));
    let max = pi_nu.map(|r| r.max(one));
    ([ratio(pi, alpha), min, ratio(nu, alpha)], max)
}

fn exceeds(count: u32, bound: Option<Rational>) -> bool {
    bound.is_some_and(|b| Rational::from_integer(i128::from(count)) > b)
}

pub fn bound_violation_table(logs: &[RoundLog]) -> BoundViolationTable {
    let mut rows = Vec::new();
    let mut totals = BoundRow::default();
    let mut footnotes = Vec::new();

    for (payoffs, members) in group_by_structure(logs) {
        let (bound, max_bound) = bounds(&payoffs);
        let mut row = BoundRow {
            payoffs: Some(payoffs),
            rounds: members.len() as u32,
            ..BoundRow::default()
        };
        for log in members {
            let proposals = log.proposals();
            let winner = log.winner_ordinal();
            let mut any = false;
            #[allow(clippy::needless_range_loop)]
            for i in 0..3 {
                row.exceeds[i] += u32::from(exceeds(proposals, bound[i]));
                if winner.is_some_and(|k| exceeds(k, bound[i])) {
                    row.winners_after[i] += 1;
                    any = true;
                }
            }
            row.exceeds_max_pi_nu_1 += u32::from(exceeds(proposals, max_bound));
            row.winners_after_any += u32::from(any);
        }
        if row.exceeds[1] != row.exceeds_max_pi_nu_1 {
            footnotes.push(format!(
                "{payoffs}: {} of {} rounds exceed min{{pi/nu,1}}, which is at most 1; \
                 reading the bound as max{{pi/nu,1}} gives {}",
                row.exceeds[1], row.rounds, row.exceeds_max_pi_nu_1
            ));
        }
        totals.rounds += row.rounds;
        totals.exceeds_max_pi_nu_1 += row.exceeds_max_pi_nu_1;
        totals.winners_after_any += row.winners_after_any;
        for i in 0..3 {
            totals.exceeds[i] += row.exceeds[i];
            totals.winners_after[i] += row.winners_after[i];
        }
        rows.push(row);
    }

    if totals.exceeds[1] > 0 {
        footnotes.insert(
            0,
            format!(
                "min{{pi/nu,1}} is at most 1, so every round with two or more proposals exceeds it \
                 ({} of {} rounds); the max{{pi/nu,1}} column gives the alternative reading ({} rounds)",
                totals.exceeds[1], totals.rounds, totals.exceeds_max_pi_nu_1
            ),
        );
    }
    BoundViolationTable { rows, totals, footnotes }
}

impl fmt::Display for BoundViolationTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "pi\tnu\talpha\trounds\t{}\t{}\t{}\tmax{{pi/nu,1}}",
            BOUND_NAMES[0], BOUND_NAMES[1], BOUND_NAMES[2]
        )?;
        for row in &self.rows {
            let p = row.payoffs.expect("structure rows carry payoffs");
            writeln!(
                f,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                p.propose.get(),
                p.vote.get(),
                p.abstain.get(),
                row.rounds,
                row.exceeds[0],
                row.exceeds[1],
                row.exceeds[2],
                row.exceeds_max_pi_nu_1
            )?;
        }
        let t = &self.totals;
        writeln!(
            f,
            "total\t\t\t{}\t{}\t{}\t{}\t{}",
            t.rounds, t.exceeds[0], t.exceeds[1], t.exceeds[2], t.exceeds_max_pi_nu_1
        )?;
        writeln!(
            f,
            "winners\t\t\t\t{}\t{}\t{}\t(any: {})",
            t.winners_after[0], t.winners_after[1], t.winners_after[2], t.winners_after_any
        )?;
        for (i, note) in self.footnotes.iter().enumerate() {
            writeln!(f, "[{}] {note}", i + 1)?;
        }
        Ok(())
    }
}
