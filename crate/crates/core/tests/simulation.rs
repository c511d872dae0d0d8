use pva_core::analysis::{
    action_totals, bound_violation_table, last_proposal_vote_share, overvote_report, RoundLog,
};
use pva_core::simulator::{run_round, sweep, sweep_with, BeliefModel, SimConfig, SimError};
use pva_core::strategy::predicted_trajectory;
use pva_core::{ActionKind, PayoffStructure, RoundState, StoppingCondition};
use proptest::prelude::*;

const FIVE: [(u64, u64); 5] = [(20, 4), (12, 5), (8, 8), (5, 12), (4, 20)];

fn five(alpha: u64) -> Vec<PayoffStructure> {
    FIVE.iter().map(|&(pi, nu)| PayoffStructure::new(pi, nu, alpha)).collect()
}

/// Structures whose dominant-strategy play reaches a vote.
fn voting_structure() -> impl Strategy<Value = PayoffStructure> {
    (1u64..60, 1u64..60, 1u64..20)
        .prop_map(|(pi, nu, a)| PayoffStructure::new(pi, nu, a))
        .prop_filter("play must reach a vote", |p| {
            predicted_trajectory(p, 64).actions.contains(&ActionKind::Vote)
        })
}

fn letters(log: &RoundLog) -> String {
    log.events().iter().map(|e| e.action.kind().letter()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn freeloaders_play_the_trajectory(p in voting_structure(), n in 1u32..40, seed in any::<u64>()) {
        let expected = predicted_trajectory(&p, 64);
        let proposals = expected.final_proposals as u32;
        let n = n.max(proposals + 1);
        let log = run_round(&SimConfig::uniform(p, n, BeliefModel::Freeloader, seed)).unwrap();
        prop_assert_eq!(letters(&log), predicted_trajectory(&p, n as usize).to_string());
        prop_assert_eq!(log.proposals(), proposals);

        let share = last_proposal_vote_share(std::slice::from_ref(&log));
        prop_assert_eq!(share.max, 100.0);
        prop_assert_eq!(share.min, 100.0);
    }

    #[test]
    fn bound_table_ignores_scale(seed in any::<u64>(), k in prop::sample::select(vec![2u64, 3, 10])) {
        let model = BeliefModel::UniformRandom;
        let logs: Vec<RoundLog> = five(2)
            .into_iter()
            .filter_map(|p| run_round(&SimConfig::uniform(p, 12, model, seed)).ok())
            .collect();
        let scaled: Vec<RoundLog> = logs.iter().map(|log| rescale(log, k)).collect();
        let a = bound_violation_table(&logs);
        let b = bound_violation_table(&scaled);
        prop_assert_eq!(&a.totals, &b.totals);
        let counts = |t: &pva_core::analysis::BoundViolationTable| {
            t.rows.iter().map(|r| (r.rounds, r.exceeds, r.winners_after)).collect::<Vec<_>>()
        };
        prop_assert_eq!(counts(&a), counts(&b));
    }
}

/// The same events under bonuses multiplied by `k`.
fn rescale(log: &RoundLog, k: u64) -> RoundLog {
    let mut header = log.header().clone();
    header.payoffs = header.payoffs.scaled(k);
    RoundLog::new(header, log.events().to_vec(), log.close_record().cloned()).unwrap()
}

#[test]
fn simulated_logs_replay() {
    let config = SimConfig::uniform(PayoffStructure::new(12, 5, 2), 20, BeliefModel::UniformRandom, 5);
    let log = run_round(&config).unwrap();
    let state = RoundState::replay(log.header().clone(), log.events().iter().cloned()).unwrap();
    assert_eq!(state.events(), log.events());
    assert_eq!(log.state().winner(), log.winner());
    assert_eq!(log.workers(), 20);
}

#[test]
fn same_seed_same_round() {
    let config = SimConfig::uniform(PayoffStructure::new(5, 12, 2), 20, BeliefModel::confidence_weighted(), 77);
    assert_eq!(run_round(&config), run_round(&config));
}

#[test]
fn sweep_is_reproducible() {
    let template = SimConfig::uniform(PayoffStructure::new(1, 1, 0), 20, BeliefModel::confidence_weighted(), 2024);
    let a = sweep(&five(2), &template, 25).unwrap();
    let b = sweep(&five(2), &template, 25).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_string(), b.to_string());

    // appending a structure leaves the existing cells alone
    let mut grid = five(2);
    grid.push(PayoffStructure::new(10, 10, 3));
    let c = sweep(&grid, &template, 25).unwrap();
    for row in &a.rows {
        assert!(c.rows.contains(row));
    }
}

#[test]
fn sweep_counts_stuck_rounds() {
    let template = SimConfig::uniform(PayoffStructure::new(1, 1, 0), 4, BeliefModel::Freeloader, 1);
    let mut stuck = 0;
    let report = sweep_with(&[PayoffStructure::new(10, 1, 2)], &template, 3, |_, _, r| {
        stuck += u32::from(matches!(r, Err(SimError::NonTermination { .. })));
    })
    .unwrap();
    assert_eq!(stuck, 3);
    assert_eq!(report.rows[0].completed, 0);
}

#[test]
fn reports_agree_with_each_other() {
    let mut logs = Vec::new();
    for (i, p) in five(2).into_iter().enumerate() {
        for seed in 0..6 {
            let mut config = SimConfig::uniform(p, 15, BeliefModel::UniformRandom, seed * 10 + i as u64);
            config.stopping = StoppingCondition::MaxWorkers { n: 15 };
            logs.push(run_round(&config).unwrap());
        }
    }
    let totals = action_totals(&logs);
    let over = overvote_report(&logs);
    assert_eq!(totals.len(), 5);
    assert_eq!(over.rows.len(), 5);
    let votes: u32 = totals.iter().map(|t| t.votes).sum();
    assert_eq!(over.totals.voting_workers, votes);
    // one session acts once in simulation
    assert_eq!(over.totals.overvotes, 0);
    assert!(totals.iter().all(|t| t.actions() == t.rounds * 15));
}
