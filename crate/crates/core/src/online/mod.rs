//! Online learning with the Cauchy-Simplex update: prediction with expert
//! advice and universal portfolios.

mod experts;
mod metrics;
mod portfolio;

pub use experts::{
    expert_learning_rate, expert_regret_bound, expert_regret_bound_at, hedge_cs_update,
    play_adaptive, punish_heaviest, reward_lightest, run_expert_game, LossSequence,
};
pub use metrics::{
    annualized_percentage_yield, daily_return_std, sharpe_ratio, PortfolioMetrics,
    TRADING_DAYS_PER_YEAR,
};
pub use portfolio::{
    best_crp_oracle, buy_and_hold, default_rate, egd_portfolio_rate, helmbold_egd_update,
    portfolio_cs_update, portfolio_gradient, portfolio_learning_rate, portfolio_regret_bound,
    run_portfolio_backtest, Backtest, BacktestOptions, PriceRelativeSeries, Strategy,
    MAX_ORACLE_ASSETS,
};

#[derive(Clone, Debug, PartialEq)]
pub enum Comparator {
    BestExpert(usize),
    GridCrp(Vec<f64>),
    Supplied(Vec<f64>),
}

impl std::fmt::Display for Comparator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let join = |u: &[f64]| u.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" ");
        match self {
            Comparator::BestExpert(i) => write!(f, "expert {i}"),
            Comparator::GridCrp(u) => write!(f, "grid crp [{}]", join(u)),
            Comparator::Supplied(u) => write!(f, "supplied [{}]", join(u)),
        }
    }
}

/// Regret of a strategy against a comparator: cumulative loss for the expert
/// game, log-wealth for portfolios.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretReport {
    pub regret: f64,
    pub bound: f64,
    pub comparator: Comparator,
    pub strategy_value: f64,
    pub comparator_value: f64,
}

impl RegretReport {
    pub fn within_bound(&self) -> bool {
        self.regret <= self.bound
    }
}
