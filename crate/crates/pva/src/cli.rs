//! The `pva` command line.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pva_core::analysis::{
    action_totals, bound_violation_table, consistency_warnings, last_proposal_vote_share, overvote_report,
    proposal_trend, RoundLog,
};
use pva_core::oracle::{backward_induction, compare_policies, OracleMode};
use pva_core::simulator::{run_round, sweep_with, BeliefModel, SimConfig, UnitDistribution};
use pva_core::strategy::{
    classify_regime, dominant_action, predicted_trajectory, proposal_bounds, tune_payoffs, vote_states_with, Recurrence,
};
use pva_core::{Money, PayoffStructure, StoppingCondition};
use serde_json::json;

use crate::jsonl::{load_logs, write_log};
use crate::service::RoundService;

#[derive(Parser, Debug)]
#[command(name = "pva", version, about = "Propose-vote-abstain rounds: solver, simulator, analysis and service")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the HTTP round service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Where round logs are kept. PVA_DATA_DIR overrides the default.
        #[arg(long, env = "PVA_DATA_DIR", default_value = "pva-data")]
        data_dir: PathBuf,
    },
    /// Dominant strategy, vote states and bounds for a payoff structure.
    Solve {
        #[command(flatten)]
        payoffs: PayoffArgs,
        /// Workers in the predicted trajectory.
        #[arg(long, default_value_t = 20)]
        workers: usize,
        /// Generate vote states with the legacy increasing recurrence.
        #[arg(long)]
        increasing_recurrence: bool,
    },
    /// Payoffs that make exactly `m` workers propose before everyone votes.
    Tune {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        alpha: u64,
    },
    /// Backward-induction policy table.
    Oracle {
        #[command(flatten)]
        payoffs: PayoffArgs,
        /// Solve for a known number of workers instead of an open-ended round.
        #[arg(long)]
        horizon: Option<u32>,
    },
    /// Closed-form strategy versus backward induction, state by state.
    Compare {
        #[command(flatten)]
        payoffs: PayoffArgs,
        #[arg(long, default_value_t = 20)]
        workers: usize,
    },
    /// Simulate one round and write its log.
    Simulate {
        #[command(flatten)]
        payoffs: PayoffArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Log file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate many rounds per payoff structure.
    Sweep {
        /// Structures as `pi,nu,alpha`, space or `;` separated.
        #[arg(long, default_value = "20,4,2;12,5,2;8,8,2;5,12,2;4,20,2")]
        grid: String,
        #[arg(long, default_value_t = 200)]
        trials: u32,
        #[command(flatten)]
        sim: SimArgs,
        /// Directory for `sweep.tsv` and one log file per structure.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reports over round logs.
    Analyze {
        /// A `.jsonl` file or a directory of them.
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = Report::All)]
        report: Report,
        /// Also write the selected reports as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone, Copy)]
pub struct PayoffArgs {
    #[arg(long)]
    pub pi: u64,
    #[arg(long)]
    pub nu: u64,
    #[arg(long)]
    pub alpha: u64,
    #[arg(long, default_value_t = 0)]
    pub base: u64,
}

impl PayoffArgs {
    fn structure(&self) -> PayoffStructure {
        PayoffStructure::new(self.pi, self.nu, self.alpha).with_base(self.base)
    }
}

#[derive(Args, Debug, Clone)]
pub struct SimArgs {
    #[arg(long, default_value_t = 20)]
    pub workers: u32,
    /// `model=share` pairs, comma separated. Models: freeloader,
    /// uniform-random, confidence-weighted.
    #[arg(long, default_value = "confidence-weighted")]
    pub population: String,
    /// Confidence in existing options: `uniform:lo:hi`, `beta:a:b` or `const:x`.
    #[arg(long, default_value = "uniform:0:1")]
    pub weight_dist: String,
    /// Confidence in the worker's own answer, same syntax.
    #[arg(long, default_value = "uniform:0:1")]
    pub own_conf_dist: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Report {
    Bounds,
    Overvotes,
    Lastshare,
    Trend,
    All,
}

pub fn parse_distribution(s: &str) -> Result<UnitDistribution> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize| -> Result<f64> {
        parts
            .get(i)
            .with_context(|| format!("distribution `{s}` is missing a parameter"))?
            .parse()
            .with_context(|| format!("bad number in distribution `{s}`"))
    };
    let dist = match parts[0] {
        "uniform" => UnitDistribution::Uniform { lo: num(1)?, hi: num(2)? },
        "beta" => UnitDistribution::Beta { a: num(1)?, b: num(2)? },
        "const" => UnitDistribution::Constant { value: num(1)? },
        other => bail!("unknown distribution `{other}`"),
    };
    dist.validate()?;
    Ok(dist)
}

pub fn parse_population(s: &str, weight_dist: UnitDistribution, own_conf_dist: UnitDistribution) -> Result<Vec<(BeliefModel, f64)>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        let (name, share) = match item.split_once('=') {
            Some((n, w)) => (n, w.parse::<f64>().with_context(|| format!("bad share in `{item}`"))?),
            None => (item, 1.0),
        };
        let model = match name {
            "freeloader" => BeliefModel::Freeloader,
            "uniform-random" => BeliefModel::UniformRandom,
            "confidence-weighted" => BeliefModel::ConfidenceWeighted {
                weight_dist,
                own_conf_dist,
            },
            other => bail!("unknown belief model `{other}`"),
        };
        out.push((model, share));
    }
    if out.is_empty() {
        bail!("empty population");
    }
    Ok(out)
}

pub fn parse_grid(s: &str) -> Result<Vec<PayoffStructure>> {
    s.split([';', ' '])
        .filter(|c| !c.trim().is_empty())
        .map(|cell| {
            let v: Vec<u64> = cell
                .split(',')
                .map(|x| x.trim().parse())
                .collect::<Result<_, _>>()
                .with_context(|| format!("bad grid cell `{cell}`"))?;
            match v[..] {
                [pi, nu, alpha] => Ok(PayoffStructure::new(pi, nu, alpha)),
                _ => bail!("grid cell `{cell}` needs pi,nu,alpha"),
            }
        })
        .collect()
}

impl SimArgs {
    fn config(&self, payoffs: PayoffStructure) -> Result<SimConfig> {
        let population = parse_population(
            &self.population,
            parse_distribution(&self.weight_dist)?,
            parse_distribution(&self.own_conf_dist)?,
        )?;
        let config = SimConfig {
            payoffs,
            n_workers: self.workers,
            population,
            stopping: StoppingCondition::MaxWorkers { n: self.workers },
            seed: self.seed,
        };
        config.validate()?;
        Ok(config)
    }
}

fn letters(actions: &[pva_core::ActionKind]) -> String {
    actions.iter().map(|a| a.letter()).collect()
}

fn solve(out: &mut dyn Write, p: PayoffStructure, workers: usize, increasing: bool) -> Result<()> {
    writeln!(out, "payoffs\t{p}")?;
    writeln!(out, "regime\t{:?}", classify_regime(&p))?;
    let recurrence = if increasing {
        Recurrence::Increasing
    } else {
        Recurrence::Decreasing
    };
    match vote_states_with(&p, recurrence) {
        Ok(set) => writeln!(out, "vote_states\t{:?}\t(m0 = {})", set.states, set.m0)?,
        Err(e) => writeln!(out, "vote_states\t-\t({e})")?,
    }
    match proposal_bounds(&p) {
        Ok(b) => writeln!(
            out,
            "bounds\tpi/alpha = {}\tmin{{pi/nu,1}} = {}\tnu/alpha = {}",
            b.pi_over_alpha, b.min_pi_over_nu_1, b.nu_over_alpha
        )?,
        Err(e) => writeln!(out, "bounds\t-\t({e})")?,
    }
    let t = predicted_trajectory(&p, workers);
    writeln!(out, "trajectory\t{t}\t({} proposals)", t.final_proposals)?;
    writeln!(out, "m\taction")?;
    let top = (t.final_proposals + 2).max(p.vote.get().checked_div(p.abstain.get()).unwrap_or(0) + 1);
    for m in 0..=top {
        writeln!(out, "{m}\t{:?}", dominant_action(&p, m))?;
    }
    Ok(())
}

fn oracle(out: &mut dyn Write, p: PayoffStructure, horizon: Option<u32>) -> Result<()> {
    let mode = match horizon {
        Some(n) => OracleMode::FiniteHorizon { n },
        None => OracleMode::IndeterminateHorizon,
    };
    let table = backward_induction(&p, mode)?;
    writeln!(out, "proposals\tremaining\tvoted\taction\tabstain_ev\tvote_ev\tpropose_ev\tfinal_count")?;
    for e in &table.entries {
        let (remaining, voted) = e
            .state
            .horizon
            .map_or(("-".to_string(), "-".to_string()), |h| (h.remaining.to_string(), h.voted.to_string()));
        let vote = e.vote_ev.map_or("-".to_string(), |v| v.to_string());
        writeln!(
            out,
            "{}\t{remaining}\t{voted}\t{:?}\t{}\t{vote}\t{}\t{}",
            e.state.proposals, e.action, e.abstain_ev, e.propose_ev, e.final_count
        )?;
    }
    let workers = horizon.map_or(20, |n| n as usize);
    writeln!(out, "trajectory\t{}", letters(&table.worker_actions(workers)))?;
    Ok(())
}

fn analyze(out: &mut dyn Write, path: &Path, report: Report, json_out: Option<&Path>) -> Result<()> {
    let logs = load_logs(path)?;
    let totals = action_totals(&logs);
    for w in consistency_warnings(&totals) {
        log::warn!("{w}");
    }
    let want = |r: Report| report == Report::All || report == r;
    let mut json = serde_json::Map::new();

    writeln!(out, "rounds\t{}", logs.len())?;
    writeln!(out, "pi\tnu\talpha\trounds\tworkers/round\tproposals\tvotes\tabstains")?;
    for t in &totals {
        let per_round = t.workers_per_round().map_or("-".into(), |w| w.to_string());
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{per_round}\t{}\t{}\t{}",
            t.payoffs.propose.get(),
            t.payoffs.vote.get(),
            t.payoffs.abstain.get(),
            t.rounds,
            t.proposals,
            t.votes,
            t.abstains
        )?;
    }
    json.insert("totals".into(), serde_json::to_value(&totals)?);
    json.insert("warnings".into(), serde_json::to_value(consistency_warnings(&totals))?);

    if want(Report::Bounds) {
        let table = bound_violation_table(&logs);
        writeln!(out, "\n# bounds (rounds whose proposal count exceeds)\n{table}")?;
        json.insert("bounds".into(), serde_json::to_value(&table)?);
    }
    if want(Report::Overvotes) {
        let r = overvote_report(&logs);
        writeln!(out, "\n# overvotes\n{r}")?;
        json.insert("overvotes".into(), serde_json::to_value(&r)?);
    }
    if want(Report::Lastshare) {
        let r = last_proposal_vote_share(&logs);
        writeln!(out, "\n# votes cast after the last proposal (%)")?;
        writeln!(out, "round\tpi\tnu\talpha\tpercent")?;
        for (i, (log, share)) in logs.iter().zip(&r.rounds).enumerate() {
            let p = log.payoffs();
            let pct = share.map_or("-".into(), |s| format!("{:.1}", s.percent()));
            writeln!(out, "{i}\t{}\t{}\t{}\t{pct}", p.propose.get(), p.vote.get(), p.abstain.get())?;
        }
        writeln!(
            out,
            "min {:.1}\tmedian {:.1}\tmean {:.1}\tmax {:.1}",
            r.min, r.median, r.mean, r.max
        )?;
        json.insert("lastshare".into(), serde_json::to_value(&r)?);
    }
    if want(Report::Trend) {
        match proposal_trend(&logs) {
            Ok(t) => {
                writeln!(out, "\n# proposals per round against ln(nu/pi)\n{t}")?;
                json.insert("trend".into(), serde_json::to_value(&t)?);
            }
            Err(e) => {
                writeln!(out, "\n# trend: {e}")?;
                json.insert("trend".into(), json!({ "error": e.to_string() }));
            }
        }
    }
    if let Some(path) = json_out {
        fs::write(path, serde_json::to_string_pretty(&json)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn sweep_cmd(out: &mut dyn Write, grid: &str, trials: u32, sim: &SimArgs, dir: Option<&Path>) -> Result<()> {
    let grid = parse_grid(grid)?;
    if grid.is_empty() {
        bail!("empty grid");
    }
    let template = sim.config(grid[0])?;
    let mut writers = match dir {
        Some(dir) => {
            fs::create_dir_all(dir.join("logs"))?;
            grid.iter()
                .map(|p| {
                    let name = format!("{}-{}-{}.jsonl", p.propose.get(), p.vote.get(), p.abstain.get());
                    File::create(dir.join("logs").join(name)).map(|f| Some(BufWriter::new(f)))
                })
                .collect::<io::Result<Vec<_>>>()?
        }
        None => grid.iter().map(|_| None).collect(),
    };
    let mut io_error = None;
    let report = sweep_with(&grid, &template, trials, |cell, _, result| {
        if let (Some(w), Ok(log)) = (writers[cell].as_mut(), result) {
            if let Err(e) = write_log(w, log) {
                io_error.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    for w in writers.iter_mut().flatten() {
        w.flush()?;
    }
    write!(out, "{report}")?;
    if let Some(dir) = dir {
        fs::write(dir.join("sweep.tsv"), report.to_string())?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Serve { port, host, data_dir } => {
            let service = Arc::new(RoundService::open(&data_dir)?);
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port)).await?;
                crate::http::serve(service, listener).await
            })?;
        }
        Command::Solve {
            payoffs,
            workers,
            increasing_recurrence,
        } => solve(&mut out, payoffs.structure(), workers, increasing_recurrence)?,
        Command::Tune { m, alpha } => {
            let p = tune_payoffs(m, Money(alpha))?;
            writeln!(out, "pi\tnu\talpha\n{}\t{}\t{}", p.propose.get(), p.vote.get(), p.abstain.get())?;
            writeln!(out, "trajectory\t{}", predicted_trajectory(&p, m as usize + 10))?;
        }
        Command::Oracle { payoffs, horizon } => oracle(&mut out, payoffs.structure(), horizon)?,
        Command::Compare { payoffs, workers } => {
            let report = compare_policies(&payoffs.structure(), workers)?;
            write!(out, "{report}")?;
        }
        Command::Simulate { payoffs, sim, out: path } => {
            let log: RoundLog = run_round(&sim.config(payoffs.structure())?)?;
            match path {
                Some(path) => write_log(BufWriter::new(File::create(&path)?), &log)?,
                None => write_log(&mut out, &log)?,
            }
            let kinds: Vec<_> = log.events().iter().map(|e| e.action.kind()).collect();
            eprintln!(
                "{} proposals, {} votes, {} abstains; sequence {}; winner {}",
                log.proposals(),
                log.votes(),
                log.abstains(),
                letters(&kinds),
                log.winner().map_or("-".into(), |w| w.to_string())
            );
        }
        Command::Sweep { grid, trials, sim, out: dir } => sweep_cmd(&mut out, &grid, trials, &sim, dir.as_deref())?,
        Command::Analyze { path, report, out: json } => analyze(&mut out, &path, report, json.as_deref())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_grid("20,4,2;12,5,2 8,8,2").unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g[1], PayoffStructure::new(12, 5, 2));
        assert!(parse_grid("1,2").is_err());
    }

    #[test]
    fn population_parsing() {
        let d = UnitDistribution::default();
        let pop = parse_population("freeloader=0.25,uniform-random=0.75", d, d).unwrap();
        assert_eq!(pop, vec![(BeliefModel::Freeloader, 0.25), (BeliefModel::UniformRandom, 0.75)]);
        assert!(parse_population("psychic", d, d).is_err());
    }

    #[test]
    fn distribution_parsing() {
        assert_eq!(parse_distribution("beta:2:5").unwrap(), UnitDistribution::Beta { a: 2.0, b: 5.0 });
        assert!(parse_distribution("uniform:0.5:2").is_err());
        assert!(parse_distribution("const").is_err());
    }

    #[test]
    fn cli_definition() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
