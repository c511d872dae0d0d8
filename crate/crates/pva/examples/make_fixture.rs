//! Writes `fixtures/experiment_rounds.jsonl`: 25 synthetic rounds whose
//! per-structure aggregates equal the published figures of a five-structure,
//! five-image labelling experiment.
//!
//! Run with `cargo run -p pva --example make_fixture`.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use pva::write_log;
use pva_core::analysis::RoundLog;
use pva_core::{PayoffStructure, RoundConfig, RoundState, SessionId, StoppingCondition, WorkerAction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Per round: proposals, canonical votes, abstains, repeat votes.
type Split = [(u32, u32, u32, u32); 5];

struct Structure {
    pi: u64,
    nu: u64,
    workers: u32,
    rounds: Split,
}

const ALPHA: u64 = 2;
const START_MS: u64 = 1_400_000_000_000;

const STRUCTURES: [Structure; 5] = [
    Structure {
        pi: 20,
        nu: 4,
        workers: 20,
        rounds: [(8, 12, 0, 2), (8, 12, 0, 2), (8, 12, 0, 2), (8, 12, 0, 2), (7, 12, 1, 1)],
    },
    Structure {
        pi: 12,
        nu: 5,
        workers: 33,
        rounds: [(6, 25, 2, 6), (6, 25, 2, 6), (6, 26, 1, 6), (11, 21, 1, 6), (12, 20, 1, 6)],
    },
    Structure {
        pi: 8,
        nu: 8,
        workers: 20,
        rounds: [(3, 17, 0, 1), (3, 17, 0, 1), (3, 17, 0, 1), (2, 18, 0, 1), (2, 17, 1, 0)],
    },
    Structure {
        pi: 5,
        nu: 12,
        workers: 10,
        rounds: [(3, 7, 0, 0), (3, 7, 0, 0), (3, 7, 0, 0), (2, 8, 0, 0), (2, 7, 0, 0)],
    },
    Structure {
        pi: 4,
        nu: 20,
        workers: 18,
        rounds: [(2, 16, 1, 10), (2, 16, 1, 9), (2, 15, 1, 9), (2, 16, 0, 9), (5, 13, 0, 9)],
    },
];

/// Session kinds in arrival order: the first worker proposes, the remaining
/// proposals are spread over the first two thirds of the round, abstains sit
/// near the end.
fn schedule(proposals: u32, votes: u32, abstains: u32) -> Vec<char> {
    let n = (proposals + votes + abstains) as usize;
    let mut kinds = vec!['V'; n];
    let span = (2 * n / 3).max(proposals as usize);
    for i in 0..proposals as usize {
        kinds[i * span / proposals as usize] = 'P';
    }
    let mut placed = 0;
    for slot in (0..n).rev().step_by(2).chain((0..n).rev()) {
        if placed == abstains {
            break;
        }
        if kinds[slot] == 'V' {
            kinds[slot] = 'A';
            placed += 1;
        }
    }
    kinds
}

fn build_round(s: &Structure, image: usize, split: (u32, u32, u32, u32), seed: u64) -> RoundLog {
    let (proposals, votes, abstains, repeats) = split;
    let payoffs = PayoffStructure::new(s.pi, s.nu, ALPHA);
    let config = RoundConfig::new(format!("IMG{}", image + 1), payoffs, StoppingCondition::MaxWorkers { n: s.workers })
        .with_seed(seed);
    let mut state = RoundState::new(config);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clock = START_MS + seed * 86_400_000;
    let mut tick = |rng: &mut ChaCha8Rng| {
        clock += rng.random_range(5_000..90_000);
        clock
    };

    let kinds = schedule(proposals, votes, abstains);
    let voter_count = kinds.iter().filter(|&&k| k == 'V').count() as u32;
    let mut repeats_left = repeats;
    let mut voter_index = 0;
    let mut contributions = 0u32;
    for (k, kind) in kinds.into_iter().enumerate() {
        let session = SessionId(format!("s{:02}-{image}-{k:02}", s.pi));
        match kind {
            'P' => {
                let text = format!("description {} of IMG{}", contributions + 1, image + 1);
                state.apply_action(session, WorkerAction::propose(text), tick(&mut rng)).unwrap();
                contributions += 1;
            }
            'A' => {
                state.apply_action(session, WorkerAction::Abstain, tick(&mut rng)).unwrap();
            }
            _ => {
                // Earlier contributions draw more votes.
                let pick = rng.random_range(0..contributions * (contributions + 1) / 2);
                let mut target = 0;
                let mut acc = contributions;
                while pick >= acc {
                    target += 1;
                    acc += contributions - target;
                }
                let action = WorkerAction::vote(format!("c{target}").as_str());
                state.apply_action(session.clone(), action.clone(), tick(&mut rng)).unwrap();
                // Spread repeat votes evenly over the voters.
                let voters_left = voter_count - voter_index;
                let extra = repeats_left.div_ceil(voters_left);
                for _ in 0..extra {
                    state.apply_action(session.clone(), action.clone(), tick(&mut rng)).unwrap();
                }
                repeats_left -= extra;
                voter_index += 1;
            }
        }
    }
    assert_eq!(repeats_left, 0);
    state.close().unwrap();
    let closed_at = tick(&mut rng);
    RoundLog::from_state(&state, closed_at)
}

fn main() -> std::io::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/experiment_rounds.jsonl");
    let mut out = BufWriter::new(File::create(&path)?);
    let mut seed = 1;
    for s in &STRUCTURES {
        for (image, split) in s.rounds.iter().enumerate() {
            write_log(&mut out, &build_round(s, image, *split, seed))?;
            seed += 1;
        }
    }
    println!("wrote {}", path.display());
    Ok(())
}
