use alloc::vec::Vec;
use core::fmt;

use super::induction::{backward_induction, OracleMode};
use super::OracleError;
use crate::mechanism::ActionKind;
use crate::money::PayoffStructure;
use crate::strategy::{dominant_action, predicted_trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AgreementRow {
    pub proposals: u64,
    pub strategy: ActionKind,
    pub oracle: ActionKind,
    /// Visited from `m = 0` by either solver's own play.
    pub reachable: bool,
}

impl AgreementRow {
    pub fn agrees(&self) -> bool {
        self.strategy == self.oracle
    }
}

/// Closed-form strategy versus backward induction, state by state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgreementReport {
    pub payoffs: PayoffStructure,
    pub ceiling: u64,
    pub rows: Vec<AgreementRow>,
    pub strategy_trajectory: Vec<ActionKind>,
    pub oracle_trajectory: Vec<ActionKind>,
}

impl AgreementReport {
    pub fn reachable_agreement(&self) -> bool {
        self.strategy_trajectory == self.oracle_trajectory
            && self.rows.iter().filter(|r| r.reachable).all(AgreementRow::agrees)
    }

    pub fn full_agreement(&self) -> bool {
        self.rows.iter().all(AgreementRow::agrees)
    }

    pub fn disagreements(&self) -> impl Iterator<Item = &AgreementRow> + '_ {
        self.rows.iter().filter(|r| !r.agrees())
    }
}

/// Compares both solvers on every state `0..=ceiling` and on the trajectory
/// of `n` workers.
pub fn compare_policies(p: &PayoffStructure, n: usize) -> Result<AgreementReport, OracleError> {
    let table = backward_induction(p, OracleMode::IndeterminateHorizon)?;
    let ceiling = table.ceiling();
    let freeze = |act: &dyn Fn(u64) -> ActionKind| {
        (0..=ceiling).find(|&m| act(m) != ActionKind::Propose).unwrap_or(ceiling)
    };
    let reach = freeze(&|m| dominant_action(p, m)).max(freeze(&|m| table.action_at(m)));
    let rows = (0..=ceiling)
        .map(|m| AgreementRow {
            proposals: m,
            strategy: dominant_action(p, m),
            oracle: table.action_at(m),
            reachable: m <= reach,
        })
        .collect();
    Ok(AgreementReport {
        payoffs: *p,
        ceiling,
        rows,
        strategy_trajectory: predicted_trajectory(p, n).actions,
        oracle_trajectory: table.worker_actions(n),
    })
}

impl fmt::Display for AgreementReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let yes = |b: bool| if b { "yes" } else { "no" };
        writeln!(f, "payoffs {}  ceiling {}", self.payoffs, self.ceiling)?;
        writeln!(f, "{:>4}  {:<8}  {:<8}  {:<9}  agree", "m", "strategy", "oracle", "reachable")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>4}  {:<8}  {:<8}  {:<9}  {}",
                r.proposals,
                alloc::format!("{}", r.strategy),
                alloc::format!("{}", r.oracle),
                yes(r.reachable),
                yes(r.agrees())
            )?;
        }
        let letters = |a: &[ActionKind]| a.iter().map(|x| x.letter()).collect::<alloc::string::String>();
        writeln!(f, "strategy trajectory  {}", letters(&self.strategy_trajectory))?;
        writeln!(f, "oracle trajectory    {}", letters(&self.oracle_trajectory))?;
        writeln!(f, "reachable agreement  {}", yes(self.reachable_agreement()))?;
        let agreeing = self.rows.iter().filter(|r| r.agrees()).count();
        write!(f, "full-state agreement {}/{}", agreeing, self.rows.len())?;
        let diffs: Vec<u64> = self.disagreements().map(|r| r.proposals).collect();
        if !diffs.is_empty() {
            write!(f, "; disagreements at m = {diffs:?}")?;
        }
        writeln!(f)
    }
}
