//! Configured experiment runs and their CSV reports.
//!
//! Trials run in parallel and are merged in trial order, so every column
//! except the wall-clock ones (`*time_s`) is reproducible from the config.

use std::fmt::Display;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::bench::check::{run_all, CheckOutcome};
use crate::bench::config::{
    CheckSettings, ExamSettings, Experiment, ExperimentConfig, ExpertSettings, HullSettings,
    PortfolioSettings,
};
use crate::bench::market::{load_price_relatives, synthetic_market};
use crate::bench::synth::{
    benchmark_query, sample_hypercube_hull, synthesize_exam_scores, uniform_losses, ExamParameters,
};
use crate::error::{Error, Result};
use crate::linalg::distance;
use crate::objectives::{ExamWeightingProblem, Objective, Partition, TargetDensity, TruncatedNormalKernel};
use crate::online::{
    expert_learning_rate, expert_regret_bound, play_adaptive, punish_heaviest, reward_lightest,
    run_expert_game, run_portfolio_backtest, Backtest, BacktestOptions, Comparator, LossSequence,
    PriceRelativeSeries, RegretReport,
};
use crate::simplex::{kkt_raw, SimplexPoint};
use crate::solvers::{Method, Solver, SolverTrace, StepSizeRule, Termination, TerminationRule};

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_owned(),
            header: header.iter().map(|h| (*h).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn is_timing_column(name: &str) -> bool {
        name.ends_with("time_s")
    }

    /// Rows with wall-clock columns replaced by `*`.
    pub fn masked_rows(&self) -> Vec<Vec<String>> {
        let timing: Vec<bool> = self.header.iter().map(|h| Self::is_timing_column(h)).collect();
        self.rows
            .iter()
            .map(|r| {
                r.iter()
                    .zip(&timing)
                    .map(|(v, &t)| if t { "*".to_owned() } else { v.clone() })
                    .collect()
            })
            .collect()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
        let csv_err = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub kind: &'static str,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Writes `<name>.csv` for every table into `dir`, creating it.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for t in &self.tables {
            t.write_csv(&dir.join(format!("{}.csv", t.name)))?;
        }
        Ok(())
    }
}

fn s(v: impl Display) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(s).unwrap_or_default()
}

struct Stats {
    mean: f64,
    std: f64,
    min: f64,
    max: f64,
}

fn stats(values: &[f64]) -> Stats {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Stats {
        mean,
        std: var.sqrt(),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let tables = match &config.experiment {
        Experiment::Hull(h) => run_hull(config, h)?,
        Experiment::Exam(e) => run_exam(config, e)?,
        Experiment::Experts(x) => run_experts(config, x)?,
        Experiment::Portfolio(p) => run_portfolio(config, p)?,
        Experiment::Check(c) => run_checks(config, c)?,
    };
    Ok(Report {
        kind: config.experiment.kind(),
        tables,
    })
}

fn solve(
    config: &ExperimentConfig,
    method: Method,
    default_rule: StepSizeRule,
    stop: TerminationRule,
    objective: &dyn Objective,
    w0: SimplexPoint,
) -> Result<SolverTrace> {
    let rule = config.step_rule.unwrap_or(default_rule);
    Solver::new(method).step_rule(rule).termination(stop).run(&objective, w0)
}

fn kkt_columns(objective: &dyn Objective, w: &SimplexPoint) -> [String; 2] {
    let (_, g) = objective.value_grad(w);
    let k = kkt_raw(w, &g);
    [s(k.stationarity_residual), s(k.dual_feasibility_violation)]
}

struct HullRow {
    dim: usize,
    solver: Method,
    converged: bool,
    iterations: usize,
    seconds: f64,
    cells: Vec<String>,
}

fn run_hull(config: &ExperimentConfig, h: &HullSettings) -> Result<Vec<Table>> {
    let solvers = config.solvers_or_default();
    let tol = config.tolerance.unwrap_or(1e-5);
    let max_iter = config.max_iterations.unwrap_or(10_000);
    let hulls = h
        .dims
        .iter()
        .map(|&d| sample_hypercube_hull(d, h.per_surface, config.seed))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, u64)> = (0..h.dims.len())
        .flat_map(|k| (0..h.queries as u64).map(move |q| (k, q)))
        .collect();
    let results: Vec<Vec<HullRow>> = jobs
        .par_iter()
        .map(|&(k, q)| {
            let inst = benchmark_query(&hulls[k], config.seed, q)?;
            let problem = inst.problem()?;
            let n = problem.dim();
            solvers
                .iter()
                .map(|&m| {
                    let stop = TerminationRule::new(max_iter).target(inst.y_true.clone(), tol);
                    let trace = solve(config, m, m.default_rule(), stop, &problem, SimplexPoint::uniform(n)?)?;
                    let w = trace.solution();
                    let err = distance(&problem.points().combine_rows(w), &inst.y_true);
                    let converged = trace.termination == Termination::TargetRadius;
                    let seconds = trace.elapsed().as_secs_f64();
                    let [stat, dual] = kkt_columns(&problem, w);
                    Ok(HullRow {
                        dim: h.dims[k],
                        solver: m,
                        converged,
                        iterations: trace.iterations(),
                        seconds,
                        cells: vec![
                            s(h.dims[k]),
                            s(q),
                            s(inst.surface.id()),
                            s(m),
                            s(trace.iterations()),
                            s(&trace.termination),
                            s(converged),
                            s(err),
                            s(trace.final_objective()),
                            stat,
                            dual,
                            s(seconds),
                        ],
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut trials = Table::new(
        "trials",
        &[
            "dim", "query", "surface", "solver", "iterations", "termination", "converged",
            "distance_to_truth", "final_objective", "kkt_stationarity", "dual_violation",
            "wall_time_s",
        ],
    );
    let rows: Vec<HullRow> = results.into_iter().flatten().collect();
    for r in &rows {
        trials.push(r.cells.clone());
    }
    let mut summary = Table::new(
        "summary",
        &[
            "dim", "solver", "queries", "converged", "mean_iterations", "min_iterations",
            "max_iterations", "mean_time_s", "min_time_s", "max_time_s",
        ],
    );
    let mut plot_iters = Table::new("plot_iterations", &["dim", "solver", "mean", "min", "max"]);
    let mut plot_time = Table::new("plot_time", &["dim", "solver", "mean_time_s", "min_time_s", "max_time_s"]);
    for &d in &h.dims {
        for &m in &solvers {
            let group: Vec<&HullRow> = rows.iter().filter(|r| r.dim == d && r.solver == m).collect();
            let iters: Vec<f64> = group.iter().map(|r| r.iterations as f64).collect();
            let secs: Vec<f64> = group.iter().map(|r| r.seconds).collect();
            let (it, tm) = (stats(&iters), stats(&secs));
            let converged = group.iter().filter(|r| r.converged).count();
            summary.push(vec![
                s(d), s(m), s(group.len()), s(converged), s(it.mean), s(it.min), s(it.max),
                s(tm.mean), s(tm.min), s(tm.max),
            ]);
            plot_iters.push(vec![s(d), s(m), s(it.mean), s(it.min), s(it.max)]);
            plot_time.push(vec![s(d), s(m), s(tm.mean), s(tm.min), s(tm.max)]);
        }
    }
    Ok(vec![trials, summary, plot_iters, plot_time])
}

pub fn exam_problem(e: &ExamSettings, seed: u64) -> Result<ExamWeightingProblem> {
    let scores = synthesize_exam_scores(&ExamParameters::scaled(e.questions, e.students), seed)?;
    ExamWeightingProblem::new(
        scores,
        TruncatedNormalKernel::unit_interval(e.bandwidth),
        TargetDensity::TruncatedNormal {
            mean: e.target_mean,
            std: e.target_std,
        },
        Partition::uniform(0.0, 1.0, e.partition)?,
    )
}

struct ExamRun {
    cells: Vec<String>,
    objectives: Vec<f64>,
    seconds: f64,
}

fn run_exam(config: &ExperimentConfig, e: &ExamSettings) -> Result<Vec<Table>> {
    let solvers = config.solvers_or_default();
    let iterations = config.max_iterations.unwrap_or(e.iterations);
    let tol = config.tolerance.unwrap_or(0.0);
    let runs: Vec<Vec<ExamRun>> = (0..e.trials as u64)
        .into_par_iter()
        .map(|t| {
            let problem = exam_problem(e, config.seed.wrapping_add(t))?;
            solvers
                .iter()
                .map(|&m| {
                    let stop = TerminationRule::new(iterations).variance_tolerance(tol);
                    let w0 = SimplexPoint::new(vec![0.01; problem.dim()])?;
                    let trace = solve(config, m, StepSizeRule::backtracking(), stop, &problem, w0)?;
                    let w = trace.solution();
                    let (mean, std) = problem.score_mean_std(w);
                    let [stat, dual] = kkt_columns(&problem, w);
                    let seconds = trace.elapsed().as_secs_f64();
                    Ok(ExamRun {
                        cells: vec![
                            s(t),
                            s(m),
                            s(trace.iterations()),
                            s(&trace.termination),
                            s(trace.final_objective()),
                            s(mean),
                            s(std),
                            stat,
                            dual,
                            s(seconds),
                        ],
                        objectives: trace.objectives().collect(),
                        seconds,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut trials = Table::new(
        "trials",
        &[
            "trial", "solver", "iterations", "termination", "final_objective", "score_mean",
            "score_std", "kkt_stationarity", "dual_violation", "wall_time_s",
        ],
    );
    for run in runs.iter().flatten() {
        trials.push(run.cells.clone());
    }
    let mut summary = Table::new(
        "summary",
        &["solver", "trials", "mean_objective", "std_objective", "mean_time_s", "std_time_s"],
    );
    let mut plot = Table::new("plot_objective", &["solver", "iteration", "mean", "min", "max"]);
    for (k, &m) in solvers.iter().enumerate() {
        let group: Vec<&ExamRun> = runs.iter().map(|r| &r[k]).collect();
        let finals: Vec<f64> = group.iter().map(|r| *r.objectives.last().unwrap_or(&f64::NAN)).collect();
        let secs: Vec<f64> = group.iter().map(|r| r.seconds).collect();
        let (f, tm) = (stats(&finals), stats(&secs));
        summary.push(vec![s(m), s(group.len()), s(f.mean), s(f.std), s(tm.mean), s(tm.std)]);
        let longest = group.iter().map(|r| r.objectives.len()).max().unwrap_or(0);
        for i in 0..longest {
            // Runs that stopped early hold their final value.
            let at: Vec<f64> = group
                .iter()
                .filter_map(|r| r.objectives.get(i).or(r.objectives.last()).copied())
                .collect();
            let st = stats(&at);
            plot.push(vec![s(m), s(i), s(st.mean), s(st.min), s(st.max)]);
        }
    }
    Ok(vec![trials, summary, plot])
}

pub const LOSS_KINDS: [&str; 4] = ["iid", "punish-heaviest", "reward-lightest", "constant"];

/// Plays one expert game of the given kind at the theory rate.
pub fn expert_game(kind: &str, experts: usize, rounds: usize, seed: u64) -> Result<(f64, RegretReport)> {
    let eta = expert_learning_rate(experts, rounds)?;
    let report = match kind {
        "iid" => run_expert_game(&uniform_losses(rounds, experts, seed)?, eta)?.1,
        "punish-heaviest" => play_adaptive(experts, rounds, eta, punish_heaviest)?.2,
        "reward-lightest" => play_adaptive(experts, rounds, eta, reward_lightest)?.2,
        "constant" => {
            let day = uniform_losses(1, experts, seed)?;
            let rows: Vec<Vec<f64>> = vec![day.round(0).to_vec(); rounds];
            let losses = LossSequence::new(crate::linalg::Matrix::from_rows(&rows)?)?;
            run_expert_game(&losses, eta)?.1
        }
        other => {
            return Err(Error::Config(format!(
                "unknown loss kind `{other}`; valid: {}",
                LOSS_KINDS.join(", ")
            )))
        }
    };
    // Report against the closed-form bound at the theory rate.
    let bound = expert_regret_bound(experts, rounds);
    Ok((eta, RegretReport { bound, ..report }))
}

fn run_experts(config: &ExperimentConfig, x: &ExpertSettings) -> Result<Vec<Table>> {
    let jobs: Vec<(usize, u64, &str)> = x
        .experts
        .iter()
        .flat_map(|&n| (0..x.trials as u64).flat_map(move |t| LOSS_KINDS.iter().map(move |k| (n, t, *k))))
        .collect();
    let rows: Vec<(usize, &str, RegretReport, Vec<String>)> = jobs
        .par_iter()
        .map(|&(n, t, kind)| {
            let start = Instant::now();
            let (eta, report) = expert_game(kind, n, x.rounds, config.seed.wrapping_add(t))?;
            let seconds = start.elapsed().as_secs_f64();
            let best = match report.comparator {
                Comparator::BestExpert(i) => i,
                _ => unreachable!("expert games compare against experts"),
            };
            let cells = vec![
                s(n), s(x.rounds), s(t), s(kind), s(eta), s(report.regret), s(report.bound),
                s(report.within_bound()), s(best), s(seconds),
            ];
            Ok((n, kind, report, cells))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut trials = Table::new(
        "trials",
        &[
            "experts", "rounds", "trial", "losses", "eta", "regret", "bound", "within_bound",
            "best_expert", "wall_time_s",
        ],
    );
    let mut summary = Table::new(
        "summary",
        &["experts", "losses", "trials", "mean_regret", "max_regret", "bound", "violations"],
    );
    for r in &rows {
        trials.push(r.3.clone());
    }
    for &n in &x.experts {
        for kind in LOSS_KINDS {
            let group: Vec<&RegretReport> = rows.iter().filter(|r| r.0 == n && r.1 == kind).map(|r| &r.2).collect();
            let regrets: Vec<f64> = group.iter().map(|r| r.regret).collect();
            let st = stats(&regrets);
            let violations = group.iter().filter(|r| !r.within_bound()).count();
            summary.push(vec![
                s(n), s(kind), s(group.len()), s(st.mean), s(st.max),
                s(expert_regret_bound(n, x.rounds)), s(violations),
            ]);
        }
    }
    Ok(vec![trials, summary])
}

fn run_portfolio(config: &ExperimentConfig, p: &PortfolioSettings) -> Result<Vec<Table>> {
    let markets: Vec<PriceRelativeSeries> = match &p.data {
        Some(path) => vec![load_price_relatives(path)?],
        None => (0..p.synthetic.trials as u64)
            .map(|t| {
                let m = &p.synthetic;
                synthetic_market(m.assets, m.days, m.variability, config.seed.wrapping_add(t))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let options = BacktestOptions {
        market_variability: p.market_variability,
        risk_free: p.risk_free,
        grid_resolution: p.grid_resolution,
        comparator: None,
    };
    let runs: Vec<Vec<(Backtest, f64)>> = markets
        .par_iter()
        .map(|series| {
            p.strategies
                .iter()
                .map(|&st| {
                    let start = Instant::now();
                    let b = run_portfolio_backtest(series, st, None, &options)?;
                    Ok((b, start.elapsed().as_secs_f64()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut trials = Table::new(
        "trials",
        &[
            "trial", "strategy", "days", "assets", "market_variability", "eta", "total_return",
            "apy", "sharpe", "daily_return_std", "log_wealth", "log_regret", "bound",
            "within_bound", "comparator", "wall_time_s",
        ],
    );
    for (t, (series, row)) in markets.iter().zip(&runs).enumerate() {
        let a = p.market_variability.unwrap_or_else(|| series.market_variability());
        for (b, seconds) in row {
            let m = &b.metrics;
            let r = b.regret.as_ref();
            trials.push(vec![
                s(t),
                s(b.strategy.name()),
                s(series.days()),
                s(series.assets()),
                s(a),
                s(b.eta),
                s(m.total_return),
                s(m.apy),
                opt(m.sharpe),
                s(m.daily_return_std),
                s(b.log_wealth),
                opt(r.map(|r| r.regret)),
                opt(r.map(|r| r.bound)),
                r.map(|r| s(r.within_bound())).unwrap_or_default(),
                r.map(|r| s(&r.comparator)).unwrap_or_default(),
                s(seconds),
            ]);
        }
    }
    let mut summary = Table::new(
        "summary",
        &["strategy", "trials", "mean_apy", "mean_sharpe", "max_log_regret", "violations"],
    );
    for (k, st) in p.strategies.iter().enumerate() {
        let group: Vec<&Backtest> = runs.iter().map(|r| &r[k].0).collect();
        let apy = stats(&group.iter().map(|b| b.metrics.apy).collect::<Vec<_>>());
        let sharpes: Vec<f64> = group.iter().filter_map(|b| b.metrics.sharpe).collect();
        let regrets: Vec<f64> = group.iter().filter_map(|b| b.regret.as_ref().map(|r| r.regret)).collect();
        let violations = group
            .iter()
            .filter(|b| b.regret.as_ref().is_some_and(|r| !r.within_bound()))
            .count();
        summary.push(vec![
            s(st.name()),
            s(group.len()),
            s(apy.mean),
            if sharpes.is_empty() { String::new() } else { s(stats(&sharpes).mean) },
            if regrets.is_empty() { String::new() } else { s(stats(&regrets).max) },
            s(violations),
        ]);
    }
    let mut plot = Table::new("plot_wealth", &["day", "strategy", "wealth"]);
    if let Some(first) = runs.first() {
        for (b, _) in first {
            for (day, w) in b.wealth.iter().enumerate() {
                plot.push(vec![s(day + 1), s(b.strategy.name()), s(w)]);
            }
        }
    }
    Ok(vec![trials, summary, plot])
}

fn run_checks(config: &ExperimentConfig, c: &CheckSettings) -> Result<Vec<Table>> {
    let outcomes: Vec<CheckOutcome> = run_all(c.cases, c.instances, config.seed)?;
    let mut table = Table::new("checks", &["check", "cases", "violations", "worst", "tolerance", "passed"]);
    for o in &outcomes {
        table.push(vec![s(&o.name), s(o.cases), s(o.violations), s(o.worst), s(o.tolerance), s(o.passed())]);
    }
    Ok(vec![table])
}

/// True if any solver run in the report ended in a numerical failure.
pub fn has_numerical_failure(report: &Report) -> bool {
    let Some(t) = report.table("trials") else {
        return false;
    };
    let Some(col) = t.column("termination") else {
        return false;
    };
    let failure = Termination::NumericalFailure(String::new());
    t.rows.iter().any(|r| r[col].starts_with(failure.name()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::config::SyntheticMarket;

    fn hull_config(queries: usize) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(Experiment::Hull(HullSettings {
            dims: vec![3],
            queries,
            per_surface: 5,
        }));
        c.seed = 4;
        c
    }

    #[test]
    fn hull_report_has_one_row_per_solver_and_query() {
        let r = run_experiment(&hull_config(4)).unwrap();
        let trials = r.table("trials").unwrap();
        assert_eq!(trials.rows.len(), 12);
        let conv = trials.column("converged").unwrap();
        assert!(trials.rows.iter().all(|row| row[conv] == "true"));
        assert_eq!(r.table("summary").unwrap().rows.len(), 3);
        let again = run_experiment(&hull_config(4)).unwrap();
        assert_eq!(trials.masked_rows(), again.table("trials").unwrap().masked_rows());
        assert!(!has_numerical_failure(&r));
    }

    #[test]
    fn constant_market_has_zero_apy() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("flat.csv");
        std::fs::write(&path, "date,A,B\n2020-01-02,1,1\n2020-01-03,1,1\n2020-01-06,1,1\n").unwrap();
        let c = ExperimentConfig::new(Experiment::Portfolio(PortfolioSettings {
            data: Some(path),
            ..Default::default()
        }));
        let r = run_experiment(&c).unwrap();
        let t = r.table("trials").unwrap();
        let apy = t.column("apy").unwrap();
        assert_eq!(t.rows.len(), 3);
        assert!(t.rows.iter().all(|row| row[apy] == "0"));
        r.write(&dir.path().join("out")).unwrap();
        assert!(dir.path().join("out/summary.csv").exists());
    }

    #[test]
    fn synthetic_portfolio_and_experts_respect_their_bounds() {
        let mut c = ExperimentConfig::new(Experiment::Portfolio(PortfolioSettings {
            synthetic: SyntheticMarket {
                days: 100,
                trials: 2,
                ..Default::default()
            },
            grid_resolution: 200,
            ..Default::default()
        }));
        let r = run_experiment(&c).unwrap();
        let t = r.table("trials").unwrap();
        let ok = t.column("within_bound").unwrap();
        assert!(t.rows.iter().all(|row| row[ok] == "true"));

        c.experiment = Experiment::Experts(ExpertSettings {
            experts: vec![2, 5],
            rounds: 50,
            trials: 2,
        });
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.table("trials").unwrap().rows.len(), 2 * 2 * LOSS_KINDS.len());
        let summary = r.table("summary").unwrap();
        assert!(summary.rows.iter().all(|row| row[6] == "0"));
        assert!(expert_game("nope", 2, 5, 0).is_err());
    }
}
