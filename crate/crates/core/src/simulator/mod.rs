//! Agent-based rounds.
//!
//! Workers arrive one at a time, each drawing a [`BeliefModel`] from the
//! population mix and acting on the [`WorkerView`] the round would show them.

mod sweep;

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::RoundLog;
use crate::mechanism::{
    ActionKind, MechanismError, RoundConfig, RoundState, SessionId, StoppingCondition, WorkerAction, WorkerView,
};
use crate::strategy::dominant_action;
use crate::PayoffStructure;

pub use sweep::{sweep, sweep_with, SweepReport, SweepRow};

/// A distribution on `[0, 1]`. Samples are clamped into the interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UnitDistribution {
    Uniform { lo: f64, hi: f64 },
    Beta { a: f64, b: f64 },
    Constant { value: f64 },
}

impl Default for UnitDistribution {
    fn default() -> Self {
        UnitDistribution::Uniform { lo: 0.0, hi: 1.0 }
    }
}

impl UnitDistribution {
    pub fn validate(&self) -> Result<(), SimError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        let ok = match *self {
            UnitDistribution::Uniform { lo, hi } => unit(lo) && unit(hi) && lo <= hi,
            UnitDistribution::Beta { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
            UnitDistribution::Constant { value } => unit(value),
        };
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidConfig("distribution parameters out of range"))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = match *self {
            UnitDistribution::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            UnitDistribution::Beta { a, b } => Beta::new(a, b).expect("validated").sample(rng),
            UnitDistribution::Constant { value } => value,
        };
        x.clamp(0.0, 1.0)
    }
}

/// How a simulated worker decides.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum BeliefModel {
    /// Plays the dominant action for the number of options shown; votes
    /// uniformly when voting.
    Freeloader,
    /// Picks an action kind uniformly (among those available) and votes
    /// uniformly.
    UniformRandom,
    /// Draws a confidence `w_i` for every option and `w'` for its own answer,
    /// then maximizes expected payoff treating `w_i / sum(w)` as the chance
    /// option `i` wins.
    ConfidenceWeighted {
        #[serde(default)]
        weight_dist: UnitDistribution,
        #[serde(default)]
        own_conf_dist: UnitDistribution,
    },
}

impl BeliefModel {
    pub fn confidence_weighted() -> Self {
        BeliefModel::ConfidenceWeighted {
            weight_dist: UnitDistribution::default(),
            own_conf_dist: UnitDistribution::default(),
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        if let BeliefModel::ConfidenceWeighted {
            weight_dist,
            own_conf_dist,
        } = self
        {
            weight_dist.validate()?;
            own_conf_dist.validate()?;
        }
        Ok(())
    }
}

/// A decision over the options of a view, by index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Choice {
    Propose,
    Vote(usize),
    Abstain,
}

/// Expected-payoff choice of a confidence-weighted worker.
///
/// Propose pays `pi·w'/(sum(w)+w')`, voting for `i` pays `nu·w_i/sum(w)`,
/// abstaining pays `alpha`. Equal values go to the lower-effort action:
/// abstain, then vote, then propose; among equal votes the first option wins.
pub fn confidence_choice(p: &PayoffStructure, weights: &[f64], own: f64) -> Choice {
    let (pi, nu, alpha) = (p.propose.get() as f64, p.vote.get() as f64, p.abstain.get() as f64);
    let total: f64 = weights.iter().sum();
    let share = |w: f64, of: f64| if of > 0.0 { w / of } else { 0.0 };

    let mut best = Choice::Abstain;
    let mut best_ev = alpha;
    let mut best_vote: Option<(usize, f64)> = None;
    for (i, &w) in weights.iter().enumerate() {
        let ev = nu * share(w, total);
        if best_vote.is_none_or(|(_, v)| ev > v) {
            best_vote = Some((i, ev));
        }
    }
    if let Some((i, ev)) = best_vote {
        if ev > best_ev {
            best = Choice::Vote(i);
            best_ev = ev;
        }
    }
    if pi * share(own, total + own) > best_ev {
        best = Choice::Propose;
    }
    best
}

fn proposal_text<R: RngCore + ?Sized>(rng: &mut R) -> WorkerAction {
    WorkerAction::propose(format!("answer-{:08x}", rng.next_u32()))
}

/// One worker's action under `model`.
pub fn sample_action<R: Rng + ?Sized>(model: &BeliefModel, view: &WorkerView, rng: &mut R) -> WorkerAction {
    let options = &view.options;
    let vote_uniform = |rng: &mut R| WorkerAction::Vote {
        contribution_id: options[rng.random_range(0..options.len())].id.clone(),
    };
    match model {
        BeliefModel::Freeloader => match dominant_action(&view.payoffs, options.len() as u64) {
            ActionKind::Vote if !options.is_empty() => vote_uniform(rng),
            ActionKind::Abstain => WorkerAction::Abstain,
            _ => proposal_text(rng),
        },
        BeliefModel::UniformRandom => {
            let kinds = if options.is_empty() { 2 } else { 3 };
            match rng.random_range(0..kinds) {
                0 => proposal_text(rng),
                1 => WorkerAction::Abstain,
                _ => vote_uniform(rng),
            }
        }
        BeliefModel::ConfidenceWeighted {
            weight_dist,
            own_conf_dist,
        } => {
            let weights: Vec<f64> = options.iter().map(|_| weight_dist.sample(rng)).collect();
            let own = own_conf_dist.sample(rng);
            match confidence_choice(&view.payoffs, &weights, own) {
                Choice::Propose => proposal_text(rng),
                Choice::Vote(i) => WorkerAction::Vote {
                    contribution_id: options[i].id.clone(),
                },
                Choice::Abstain => WorkerAction::Abstain,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(&'static str),
    #[error("round did not terminate within {workers} workers")]
    NonTermination { workers: u64 },
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub payoffs: PayoffStructure,
    pub n_workers: u32,
    /// `(model, proportion)`; proportions sum to 1.
    pub population: Vec<(BeliefModel, f64)>,
    pub stopping: StoppingCondition,
    pub seed: u64,
}

impl SimConfig {
    /// A single-model population stopping after `n_workers` workers.
    pub fn uniform(payoffs: PayoffStructure, n_workers: u32, model: BeliefModel, seed: u64) -> Self {
        SimConfig {
            payoffs,
            n_workers,
            population: alloc::vec![(model, 1.0)],
            stopping: StoppingCondition::MaxWorkers { n: n_workers },
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_workers == 0 {
            return Err(SimError::InvalidConfig("n_workers must be at least 1"));
        }
        if self.population.is_empty() {
            return Err(SimError::InvalidConfig("population is empty"));
        }
        if self.population.iter().any(|(_, w)| !(w.is_finite() && *w >= 0.0)) {
            return Err(SimError::InvalidConfig("proportions must be non-negative"));
        }
        let total: f64 = self.population.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(SimError::InvalidConfig("proportions must sum to 1"));
        }
        for (model, _) in &self.population {
            model.validate()?;
        }
        self.stopping.validate()?;
        Ok(())
    }

    fn draw_model<R: Rng + ?Sized>(&self, rng: &mut R) -> &BeliefModel {
        if self.population.len() == 1 {
            return &self.population[0].0;
        }
        let mut u = rng.random::<f64>();
        for (model, w) in &self.population {
            if u < *w {
                return model;
            }
            u -= w;
        }
        &self.population.last().expect("non-empty").0
    }
}

/// Workers tried before a round is declared non-terminating, per configured
/// worker.
pub const NON_TERMINATION_FACTOR: u64 = 100;

/// Runs one round to completion.
///
/// Worker `k` acts as session `w{k}` at logical time `k`. The round closes once
/// its stopping condition and the liveness guard hold; a manual round closes
/// once `n_workers` workers have acted and the guard holds.
pub fn run_round(config: &SimConfig) -> Result<RoundLog, SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let round = RoundConfig::new("simulated request", config.payoffs, config.stopping).with_seed(rng.next_u64());
    let mut state = RoundState::new(round);
    let cap = NON_TERMINATION_FACTOR * u64::from(config.n_workers);

    for k in 0..cap {
        let session = SessionId(format!("w{k}"));
        let view = state.worker_view(&session)?;
        let model = config.draw_model(&mut rng);
        let action = sample_action(model, &view, &mut rng);
        state.apply_action(session, action, k)?;

        let done = match config.stopping {
            StoppingCondition::Manual => k + 1 >= u64::from(config.n_workers) && state.liveness_guard(),
            _ => state.check_stopping(),
        };
        if done {
            state.close()?;
            return Ok(RoundLog::from_state(&state, k));
        }
    }
    Err(SimError::NonTermination { workers: cap })
}
