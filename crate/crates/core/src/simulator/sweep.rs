use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{run_round, SimConfig, SimError};
use crate::analysis::{by_vote_ratio, RoundLog};
use crate::PayoffStructure;

/// Aggregates over the trials of one payoff structure. Means are over the
/// trials that terminated.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub payoffs: PayoffStructure,
    pub trials: u32,
    pub completed: u32,
    pub mean_proposals: f64,
    pub mean_votes: f64,
    pub mean_abstains: f64,
    /// Shannon entropy, in bits, of the winning contribution's arrival index
    /// across completed trials.
    pub winner_entropy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    /// Ordered by increasing `nu / pi`.
    pub rows: Vec<SweepRow>,
}

pub fn sweep(grid: &[PayoffStructure], template: &SimConfig, trials: u32) -> Result<SweepReport, SimError> {
    sweep_with(grid, template, trials, |_, _, _| {})
}

/// Like [`sweep`], handing every trial's outcome to `on_trial(cell, trial, result)`
/// where `cell` indexes `grid`.
///
/// Cell `i` draws its trial seeds from stream `i` of a generator keyed by the
/// template seed, so adding cells never changes existing ones. A trial that does
/// not terminate is counted, not fatal.
pub fn sweep_with<F>(grid: &[PayoffStructure], template: &SimConfig, trials: u32, mut on_trial: F) -> Result<SweepReport, SimError>
where
    F: FnMut(usize, u32, &Result<RoundLog, SimError>),
{
    if trials == 0 {
        return Err(SimError::InvalidConfig("trials must be at least 1"));
    }
    template.validate()?;

    let mut rows = Vec::with_capacity(grid.len());
    for (cell, &payoffs) in grid.iter().enumerate() {
        let mut seeds = ChaCha8Rng::seed_from_u64(template.seed);
        seeds.set_stream(cell as u64);
        let mut config = template.clone();
        config.payoffs = payoffs;

        let (mut completed, mut proposals, mut votes, mut abstains) = (0u32, 0u64, 0u64, 0u64);
        let mut winners: BTreeMap<u32, u32> = BTreeMap::new();
        for trial in 0..trials {
            config.seed = seeds.next_u64();
            let result = run_round(&config);
            on_trial(cell, trial, &result);
            match result {
                Ok(log) => {
                    completed += 1;
                    proposals += u64::from(log.proposals());
                    votes += u64::from(log.votes());
                    abstains += u64::from(log.abstains());
                    if let Some(k) = log.winner_ordinal() {
                        *winners.entry(k).or_default() += 1;
                    }
                }
                Err(SimError::NonTermination { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        let mean = |total: u64| if completed == 0 { 0.0 } else { total as f64 / f64::from(completed) };
        rows.push(SweepRow {
            payoffs,
            trials,
            completed,
            mean_proposals: mean(proposals),
            mean_votes: mean(votes),
            mean_abstains: mean(abstains),
            winner_entropy: entropy_bits(winners.values().copied()),
        });
    }
    rows.sort_by(|a, b| by_vote_ratio(&a.payoffs, &b.payoffs));
    Ok(SweepReport { rows })
}

fn entropy_bits(counts: impl Iterator<Item = u32> + Clone) -> f64 {
    let total: f64 = counts.clone().map(f64::from).sum();
    if total == 0.0 {
        return 0.0;
    }
    let h: f64 = counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = f64::from(c) / total;
            -p * libm::log2(p)
        })
        .sum();
    h.max(0.0)
}

impl fmt::Display for SweepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "pi\tnu\talpha\ttrials\tcompleted\tmean_proposals\tmean_votes\tmean_abstains\twinner_entropy"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
                r.payoffs.propose.get(),
                r.payoffs.vote.get(),
                r.payoffs.abstain.get(),
                r.trials,
                r.completed,
                r.mean_proposals,
                r.mean_votes,
                r.mean_abstains,
                r.winner_entropy
            )?;
        }
        Ok(())
    }
}
