use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use simplex_opt::bench::config::{
    CheckSettings, ExamSettings, Experiment, ExperimentConfig, ExpertSettings, HullSettings,
    PortfolioSettings,
};
use simplex_opt::bench::run::{has_numerical_failure, run_experiment, Report, Table};
use simplex_opt::online::Strategy;
use simplex_opt::solvers::Method;
use simplex_opt::{Error, Result};

/// Seeded simplex-optimization experiments with CSV reports.
///
/// Exit codes: 0 success, 1 configuration error, 2 data validation error,
/// 3 numerical failure or a failed check.
#[derive(Parser)]
#[command(name = "simplex-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// cs, cs-exp, egd, pgd, fw or pfw; repeatable.
    #[arg(long = "solver", global = true, value_parser = parse_method)]
    solvers: Vec<Method>,
    #[arg(long = "max-iter", global = true)]
    max_iter: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Directory for the CSV tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML experiment config; flags given on the command line override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Nearest points in hypercube hulls, one query per trial.
    Hull {
        #[arg(long = "dim")]
        dims: Vec<usize>,
        #[arg(long)]
        queries: Option<usize>,
        #[arg(long = "per-surface")]
        per_surface: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Question weighting toward a target score distribution.
    Exam {
        #[arg(long)]
        students: Option<usize>,
        #[arg(long)]
        questions: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        bandwidth: Option<f64>,
        #[arg(long)]
        partition: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Prediction with expert advice against several loss sequences.
    Experts {
        #[arg(long = "experts")]
        experts: Vec<usize>,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Portfolio backtests on a price-relative CSV or synthetic markets.
    Portfolio {
        #[arg(long)]
        data: Option<PathBuf>,
        /// cs, egd or bh; repeatable.
        #[arg(long = "strategy", value_parser = parse_strategy)]
        strategies: Vec<Strategy>,
        #[arg(long = "market-variability")]
        market_variability: Option<f64>,
        /// Annual risk-free rate for the Sharpe ratio [default: 0.04].
        #[arg(long = "risk-free")]
        risk_free: Option<f64>,
        /// Synthetic markets to generate when no data file is given.
        #[arg(long)]
        trials: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// The invariant and diagnostic suite.
    Check {
        #[arg(long)]
        cases: Option<usize>,
        #[arg(long)]
        instances: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn base_config(common: &Common, default: Experiment) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => {
            let loaded = ExperimentConfig::load(path)?;
            if loaded.experiment.kind() != default.kind() {
                return Err(Error::Config(format!(
                    "config describes a `{}` experiment, not `{}`",
                    loaded.experiment.kind(),
                    default.kind()
                )));
            }
            loaded
        }
        None => ExperimentConfig::new(default),
    };
    set(&mut config.seed, common.seed);
    if !common.solvers.is_empty() {
        config.solvers = common.solvers.clone();
    }
    config.max_iterations = common.max_iter.or(config.max_iterations);
    config.tolerance = common.tol.or(config.tolerance);
    config.out = common.out.clone().or(config.out);
    Ok(config)
}

fn build(command: Command) -> Result<ExperimentConfig> {
    let nonempty = |v: Vec<usize>| (!v.is_empty()).then_some(v);
    let config = match command {
        Command::Hull { dims, queries, per_surface, common } => {
            let mut c = base_config(&common, Experiment::Hull(HullSettings::default()))?;
            if let Experiment::Hull(h) = &mut c.experiment {
                set(&mut h.dims, nonempty(dims));
                set(&mut h.queries, queries);
                set(&mut h.per_surface, per_surface);
            }
            c
        }
        Command::Exam { students, questions, iters, bandwidth, partition, trials, common } => {
            let mut c = base_config(&common, Experiment::Exam(ExamSettings::default()))?;
            if let Experiment::Exam(e) = &mut c.experiment {
                set(&mut e.students, students);
                set(&mut e.questions, questions);
                set(&mut e.iterations, iters);
                set(&mut e.bandwidth, bandwidth);
                set(&mut e.partition, partition);
                set(&mut e.trials, trials);
            }
            c
        }
        Command::Experts { experts, rounds, trials, common } => {
            let mut c = base_config(&common, Experiment::Experts(ExpertSettings::default()))?;
            if let Experiment::Experts(x) = &mut c.experiment {
                set(&mut x.experts, nonempty(experts));
                set(&mut x.rounds, rounds);
                set(&mut x.trials, trials);
            }
            c
        }
        Command::Portfolio { data, strategies, market_variability, risk_free, trials, common } => {
            let mut c = base_config(&common, Experiment::Portfolio(PortfolioSettings::default()))?;
            if let Experiment::Portfolio(p) = &mut c.experiment {
                p.data = data.or(p.data.take());
                if !strategies.is_empty() {
                    p.strategies = strategies;
                }
                p.market_variability = market_variability.or(p.market_variability);
                set(&mut p.risk_free, risk_free);
                set(&mut p.synthetic.trials, trials);
            }
            c
        }
        Command::Check { cases, instances, common } => {
            let mut c = base_config(&common, Experiment::Check(CheckSettings::default()))?;
            if let Experiment::Check(k) = &mut c.experiment {
                set(&mut k.cases, cases);
                set(&mut k.instances, instances);
            }
            c
        }
    };
    config.validate()?;
    Ok(config)
}

fn print_table(t: &Table) {
    let widths: Vec<usize> = (0..t.header.len())
        .map(|c| {
            t.rows
                .iter()
                .map(|r| r[c].len())
                .chain([t.header[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        println!("{}", padded.join("  "));
    };
    line(&t.header);
    for r in &t.rows {
        line(r);
    }
}

fn execute(config: &ExperimentConfig) -> Result<Report> {
    let report = run_experiment(config)?;
    if let Some(dir) = &config.out {
        report.write(dir)?;
    }
    let shown = report.table("summary").or_else(|| report.table("checks"));
    if let Some(t) = shown {
        print_table(t);
    }
    Ok(report)
}

fn failed_checks(report: &Report) -> bool {
    report.table("checks").is_some_and(|t| {
        let col = t.column("passed").expect("checks table has a passed column");
        t.rows.iter().any(|r| r[col] != "true")
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { 1 } else { 0 };
            return ExitCode::from(code);
        }
    };
    match build(cli.command).and_then(|c| execute(&c)) {
        Ok(report) if has_numerical_failure(&report) || failed_checks(&report) => ExitCode::from(3),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
