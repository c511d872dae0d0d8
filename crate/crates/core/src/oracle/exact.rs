use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::OracleError;
use crate::money::PayoffStructure;
use crate::Rational;

pub const MAX_EXACT_VOTERS: usize = 12;
pub const MAX_EXACT_PROPOSALS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Propose,
    Vote,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactOutcome {
    pub sequence: Vec<Slot>,
    /// Win probability per contribution, keyed by arrival index.
    pub win_probability: BTreeMap<u32, Rational>,
    /// Probability that a voter's chosen contribution wins, keyed by the
    /// voter's position in `sequence`.
    pub voter_win_probability: BTreeMap<usize, Rational>,
    /// `nu` times the voter's win probability.
    pub voter_ev: BTreeMap<usize, Rational>,
    /// `pi` times the proposal's win probability, keyed by position.
    pub proposer_ev: BTreeMap<usize, Rational>,
}

type Tallies = Vec<u8>;

/// Exact plurality outcome when every voter picks uniformly among the
/// contributions that exist at their position and ties are broken uniformly.
///
/// Equivalent to enumerating every vote assignment, but folds assignments
/// that reach the same tally vector together.
pub fn enumerate_exact(sequence: &[Slot], p: &PayoffStructure) -> Result<ExactOutcome, OracleError> {
    let voters = sequence.iter().filter(|s| **s == Slot::Vote).count();
    let proposals = sequence.len() - voters;
    if voters > MAX_EXACT_VOTERS || proposals > MAX_EXACT_PROPOSALS {
        return Err(OracleError::TooLarge { voters, proposals });
    }
    if proposals == 0 {
        return Err(OracleError::NoProposal);
    }
    if voters == 0 {
        return Err(OracleError::NoVote);
    }
    if sequence[0] == Slot::Vote {
        return Err(OracleError::VoteBeforeProposal(0));
    }

    let mut win_probability: BTreeMap<u32, Rational> =
        (0..proposals as u32).map(|c| (c, Rational::from_integer(0))).collect();
    for (tallies, prob) in distribution(sequence) {
        let (top, tied) = argmax(&tallies);
        let share = prob / Rational::from_integer(tied as i128);
        for (c, &t) in tallies.iter().enumerate() {
            if t == top {
                *win_probability.get_mut(&(c as u32)).expect("known contribution") += share;
            }
        }
    }

    let nu = Rational::from_integer(i128::from(p.vote.get()));
    let pi = Rational::from_integer(i128::from(p.propose.get()));
    let mut voter_win_probability = BTreeMap::new();
    let mut voter_ev = BTreeMap::new();
    for (pos, _) in sequence.iter().enumerate().filter(|(_, s)| **s == Slot::Vote) {
        let mut win = Rational::from_integer(0);
        for ((tallies, choice), prob) in tracked(sequence, pos) {
            let (top, tied) = argmax(&tallies);
            if tallies[choice] == top {
                win += prob / Rational::from_integer(tied as i128);
            }
        }
        voter_win_probability.insert(pos, win);
        voter_ev.insert(pos, nu * win);
    }

    let proposer_ev = sequence
        .iter()
        .enumerate()
        .filter(|(_, s)| **s == Slot::Propose)
        .zip(win_probability.values())
        .map(|((pos, _), w)| (pos, pi * *w))
        .collect();

    Ok(ExactOutcome {
        sequence: sequence.to_vec(),
        win_probability,
        voter_win_probability,
        voter_ev,
        proposer_ev,
    })
}

fn argmax(tallies: &[u8]) -> (u8, usize) {
    let top = tallies.iter().copied().max().unwrap_or(0);
    (top, tallies.iter().filter(|&&t| t == top).count())
}

/// Distribution over final tally vectors. Votes go uniformly over the
/// contributions existing at each position.
fn distribution(sequence: &[Slot]) -> BTreeMap<Tallies, Rational> {
    tracked_inner(sequence, None)
        .into_iter()
        .map(|((t, _), p)| (t, p))
        .fold(BTreeMap::new(), |mut acc, (t, p)| {
            *acc.entry(t).or_insert_with(|| Rational::from_integer(0)) += p;
            acc
        })
}

/// Joint distribution of final tallies and the contribution chosen by the
/// voter at `track`.
fn tracked(sequence: &[Slot], track: usize) -> BTreeMap<(Tallies, usize), Rational> {
    tracked_inner(sequence, Some(track))
}

fn tracked_inner(sequence: &[Slot], track: Option<usize>) -> BTreeMap<(Tallies, usize), Rational> {
    let mut states: BTreeMap<(Tallies, usize), Rational> = BTreeMap::new();
    states.insert((Vec::new(), usize::MAX), Rational::from_integer(1));
    for (pos, slot) in sequence.iter().enumerate() {
        let mut next = BTreeMap::new();
        for ((tallies, choice), prob) in states {
            match slot {
                Slot::Propose => {
                    let mut t = tallies;
                    t.push(0);
                    *next.entry((t, choice)).or_insert_with(|| Rational::from_integer(0)) += prob;
                }
                Slot::Vote => {
                    let k = tallies.len();
                    let each = prob / Rational::from_integer(k as i128);
                    for c in 0..k {
                        let mut t = tallies.clone();
                        t[c] += 1;
                        let choice = if track == Some(pos) { c } else { choice };
                        *next.entry((t, choice)).or_insert_with(|| Rational::from_integer(0)) += each;
                    }
                }
            }
        }
        states = next;
    }
    states
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use Slot::*;

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    /// Independent brute force: walks every vote assignment explicitly.
    fn brute(sequence: &[Slot]) -> (Vec<Rational>, Vec<Rational>) {
        let proposals = sequence.iter().filter(|s| **s == Propose).count();
        let vote_positions: Vec<(usize, usize)> = {
            let mut seen = 0;
            sequence
                .iter()
                .enumerate()
                .filter_map(|(i, s)| match s {
                    Propose => {
                        seen += 1;
                        None
                    }
                    Vote => Some((i, seen)),
                })
                .collect()
        };
        let mut wins = vec![r(0, 1); proposals];
        let mut voter_wins = vec![r(0, 1); vote_positions.len()];
        let mut choice = vec![0usize; vote_positions.len()];
        loop {
            let mut prob = r(1, 1);
            let mut tallies = vec![0u32; proposals];
            for (j, &(_, avail)) in vote_positions.iter().enumerate() {
                prob *= r(1, avail as i128);
                tallies[choice[j]] += 1;
            }
            let top = *tallies.iter().max().unwrap();
            let tied = tallies.iter().filter(|&&t| t == top).count() as i128;
            for c in 0..proposals {
                if tallies[c] == top {
                    wins[c] += prob * r(1, tied);
                }
            }
            for j in 0..vote_positions.len() {
                if tallies[choice[j]] == top {
                    voter_wins[j] += prob * r(1, tied);
                }
            }
            // odometer over choices
            let mut j = 0;
            loop {
                if j == choice.len() {
                    return (wins, voter_wins);
                }
                choice[j] += 1;
                if choice[j] < vote_positions[j].1 {
                    break;
                }
                choice[j] = 0;
                j += 1;
            }
        }
    }

    #[test]
    fn single_option() {
        let out = enumerate_exact(&[Propose, Vote], &PayoffStructure::new(12, 5, 2)).unwrap();
        assert_eq!(out.win_probability[&0], r(1, 1));
        assert_eq!(out.voter_ev[&1], r(5, 1));
    }

    // Four equally likely assignments AA, AB, BA, BB; each voter wins in
    // AA/BB for sure and half the time in the two ties: (1+1/2+1/2+1)/4.
    #[test]
    fn two_by_two_by_hand() {
        let out = enumerate_exact(&[Propose, Propose, Vote, Vote], &PayoffStructure::new(12, 5, 2)).unwrap();
        assert_eq!(out.win_probability[&0], r(1, 2));
        assert_eq!(out.win_probability[&1], r(1, 2));
        assert_eq!(out.voter_win_probability[&2], r(3, 4));
        assert_eq!(out.voter_ev[&3], r(15, 4));
        assert_eq!(out.proposer_ev[&0], r(6, 1));
    }

    #[test]
    fn agrees_with_brute_force() {
        let cases: [&[Slot]; 5] = [
            &[Propose, Vote, Propose, Vote, Vote],
            &[Propose, Propose, Propose, Vote, Vote, Vote, Vote],
            &[Propose, Vote, Vote, Propose, Propose, Vote],
            &[Propose, Propose, Vote, Propose, Vote, Vote, Vote, Propose, Vote],
            &[Propose, Vote, Vote, Vote],
        ];
        for seq in cases {
            let out = enumerate_exact(seq, &PayoffStructure::new(1, 1, 0)).unwrap();
            let (wins, voter_wins) = brute(seq);
            assert_eq!(out.win_probability.values().copied().collect::<Vec<_>>(), wins);
            assert_eq!(out.voter_win_probability.values().copied().collect::<Vec<_>>(), voter_wins);
            let total: Rational = out.win_probability.values().sum();
            assert_eq!(total, r(1, 1));
        }
    }

    #[test]
    fn uniform_when_proposals_first() {
        for m in 1..=5usize {
            let mut seq = vec![Propose; m];
            seq.extend([Vote; 4]);
            let out = enumerate_exact(&seq, &PayoffStructure::new(1, 1, 0)).unwrap();
            for w in out.win_probability.values() {
                assert_eq!(*w, r(1, m as i128));
            }
        }
    }

    #[test]
    fn errors() {
        let q = PayoffStructure::new(12, 5, 2);
        assert_eq!(enumerate_exact(&[Propose], &q), Err(OracleError::NoVote));
        assert_eq!(enumerate_exact(&[Vote, Propose, Vote], &q), Err(OracleError::VoteBeforeProposal(0)));
        let mut big = vec![Propose];
        big.extend([Vote; 13]);
        assert!(matches!(enumerate_exact(&big, &q), Err(OracleError::TooLarge { .. })));
    }
}
