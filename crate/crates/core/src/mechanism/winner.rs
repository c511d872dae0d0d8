use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Index of the plurality winner among `tallies`, or `None` if nobody voted.
///
/// Ties pick uniformly among the tied indices using a ChaCha8 generator
/// seeded with `seed`, so the choice replays exactly.
pub fn plurality_winner(tallies: &[u32], seed: u64) -> Option<usize> {
    let top = *tallies.iter().max()?;
    if top == 0 {
        return None;
    }
    let tied: Vec<usize> = tallies
        .iter()
        .enumerate()
        .filter(|&(_, &t)| t == top)
        .map(|(i, _)| i)
        .collect();
    if tied.len() == 1 {
        return Some(tied[0]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Some(tied[rng.random_range(0..tied.len())])
}
