use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, Matrix};
use crate::online::metrics::{annualized_percentage_yield, sharpe_ratio, PortfolioMetrics};
use crate::online::{Comparator, RegretReport};
use crate::simplex::SimplexPoint;

/// Daily price relatives `x^t_i = C^t_i / C^{t−1}_i`, one row per day.
#[derive(Clone, Debug, PartialEq)]
pub struct PriceRelativeSeries {
    relatives: Matrix,
    asset_names: Vec<String>,
    dates: Vec<String>,
}

impl PriceRelativeSeries {
    /// Every entry must be strictly positive.
    pub fn new(asset_names: Vec<String>, relatives: Matrix) -> Result<Self> {
        let dates = (1..=relatives.rows()).map(|t| t.to_string()).collect();
        Self::with_dates(asset_names, dates, relatives)
    }

    pub fn with_dates(asset_names: Vec<String>, dates: Vec<String>, relatives: Matrix) -> Result<Self> {
        if relatives.rows() == 0 || relatives.cols() == 0 {
            return Err(Error::Empty);
        }
        check_len(relatives.cols(), asset_names.len())?;
        check_len(relatives.rows(), dates.len())?;
        for (row, r) in relatives.iter_rows().enumerate() {
            check_relatives(r).map_err(|e| match e {
                Error::NoJunkBond { column, value, .. } => Error::NoJunkBond { row, column, value },
                other => other,
            })?;
        }
        Ok(Self {
            relatives,
            asset_names,
            dates,
        })
    }

    /// A market with unnamed assets `a0, a1, …`.
    pub fn from_matrix(relatives: Matrix) -> Result<Self> {
        let names = (0..relatives.cols()).map(|i| format!("a{i}")).collect();
        Self::new(names, relatives)
    }

    pub fn days(&self) -> usize {
        self.relatives.rows()
    }

    pub fn assets(&self) -> usize {
        self.relatives.cols()
    }

    pub fn day(&self, t: usize) -> &[f64] {
        self.relatives.row(t)
    }

    pub fn asset_names(&self) -> &[String] {
        &self.asset_names
    }

    pub fn dates(&self) -> &[String] {
        &self.dates
    }

    pub fn relatives(&self) -> &Matrix {
        &self.relatives
    }

    /// `a = min_{i,t} x^t_i`.
    pub fn market_variability(&self) -> f64 {
        self.relatives
            .as_slice()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Each day divided by its largest relative, so the best asset of every
    /// day has relative 1. Log-regret and the Cauchy-Simplex trajectory are
    /// unchanged.
    pub fn rescaled(&self) -> Self {
        let mut relatives = self.relatives.clone();
        for t in 0..relatives.rows() {
            let row = relatives.row_mut(t);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            row.iter_mut().for_each(|v| *v /= max);
        }
        Self {
            relatives,
            asset_names: self.asset_names.clone(),
            dates: self.dates.clone(),
        }
    }
}

fn check_relatives(x: &[f64]) -> Result<()> {
    match x.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        Some((column, &value)) => Err(Error::NoJunkBond {
            row: 0,
            column,
            value,
        }),
        None => Ok(()),
    }
}

/// `∇f = −x / (w·x)` for the per-day loss `f(w) = −log(w·x)`.
pub fn portfolio_gradient(w: &[f64], x: &[f64]) -> Vec<f64> {
    let wealth = dot(w, x);
    x.iter().map(|xi| -xi / wealth).collect()
}

/// Cauchy-Simplex step on `−log(w·x)`. Since `w·∇f = −1` it reads
/// `w'_i = w_i(1 + η(x_i/(w·x) − 1))`.
pub fn portfolio_cs_update(w: &SimplexPoint, x: &[f64], eta: f64) -> Result<SimplexPoint> {
    check_len(w.len(), x.len())?;
    check_relatives(x)?;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "portfolio learning rate must lie in (0, 1], got {eta}"
        )));
    }
    let wealth = dot(w, x);
    let next = w
        .iter()
        .zip(x)
        .map(|(wi, xi)| wi * (1.0 + eta * (xi / wealth - 1.0)))
        .collect();
    w.successor(next)
}

fn check_variability(a: f64) -> Result<()> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "market variability must lie in (0, 1], got {a}"
        )));
    }
    Ok(())
}

/// `a√(2 log N) / (a√(2 log N) + √T)`.
pub fn portfolio_learning_rate(assets: usize, days: usize, a: f64) -> Result<f64> {
    check_variability(a)?;
    if assets < 2 || days == 0 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 assets and 1 day, got {assets} and {days}"
        )));
    }
    let num = a * (2.0 * (assets as f64).ln()).sqrt();
    Ok(num / (num + (days as f64).sqrt()))
}

/// `√(2T log N)/a + log N`.
pub fn portfolio_regret_bound(assets: usize, days: usize, a: f64) -> f64 {
    let log_n = (assets as f64).ln();
    (2.0 * days as f64 * log_n).sqrt() / a + log_n
}

/// `w' ∝ w exp(η x / (w·x))`.
pub fn helmbold_egd_update(w: &SimplexPoint, x: &[f64], eta: f64) -> Result<SimplexPoint> {
    check_len(w.len(), x.len())?;
    check_relatives(x)?;
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter(format!("EGD rate must be nonnegative, got {eta}")));
    }
    let wealth = dot(w, x);
    let exponents: Vec<f64> = x.iter().map(|xi| eta * xi / wealth).collect();
    let shift = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let next = w
        .iter()
        .zip(&exponents)
        .map(|(wi, e)| wi * (e - shift).exp())
        .collect();
    w.successor(next)
}

/// `2a√(2 log N / T)`.
pub fn egd_portfolio_rate(assets: usize, days: usize, a: f64) -> Result<f64> {
    check_variability(a)?;
    if assets < 1 || days == 0 {
        return Err(Error::InvalidParameter("need at least 1 asset and 1 day".into()));
    }
    Ok(2.0 * a * (2.0 * (assets as f64).ln() / days as f64).sqrt())
}

/// Wealth after each day of an equal split left untouched:
/// `wealth_t = (1/N) Σ_i Π_{s≤t} x^s_i`.
pub fn buy_and_hold(series: &PriceRelativeSeries) -> Vec<f64> {
    let n = series.assets() as f64;
    let mut holdings = vec![1.0 / n; series.assets()];
    (0..series.days())
        .map(|t| {
            holdings
                .iter_mut()
                .zip(series.day(t))
                .for_each(|(h, x)| *h *= x);
            holdings.iter().sum()
        })
        .collect()
}

pub const MAX_ORACLE_ASSETS: usize = 3;

/// Best constant rebalanced portfolio on the grid `{k/resolution}` of the
/// simplex, maximizing `Σ_t log(u·x^t)` (lowest grid index wins ties).
pub fn best_crp_oracle(series: &PriceRelativeSeries, grid_resolution: usize) -> Result<(SimplexPoint, f64)> {
    let n = series.assets();
    if n > MAX_ORACLE_ASSETS {
        return Err(Error::OracleScale {
            max: MAX_ORACLE_ASSETS,
            found: n,
        });
    }
    if grid_resolution < 100 {
        return Err(Error::InvalidParameter(format!(
            "grid resolution must be at least 100, got {grid_resolution}"
        )));
    }
    let log_wealth = |u: &[f64]| -> f64 { (0..series.days()).map(|t| dot(u, series.day(t)).ln()).sum() };
    let r = grid_resolution;
    let mut best = (f64::NEG_INFINITY, vec![1.0; n]);
    let mut consider = |u: Vec<f64>| {
        let v = log_wealth(&u);
        if v > best.0 {
            best = (v, u);
        }
    };
    match n {
        1 => consider(vec![1.0]),
        2 => (0..=r).for_each(|i| consider(vec![i as f64 / r as f64, (r - i) as f64 / r as f64])),
        _ => {
            for i in 0..=r {
                for j in 0..=r - i {
                    let k = r - i - j;
                    consider(vec![i as f64 / r as f64, j as f64 / r as f64, k as f64 / r as f64]);
                }
            }
        }
    }
    let (value, u) = best;
    Ok((SimplexPoint::with_tolerance(u, 0.0)?, value))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Cs,
    Egd,
    Bh,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Cs => "cs",
            Strategy::Egd => "egd",
            Strategy::Bh => "bh",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cs" => Ok(Strategy::Cs),
            "egd" => Ok(Strategy::Egd),
            "bh" => Ok(Strategy::Bh),
            _ => Err(Error::Config(format!("unknown strategy `{s}`; valid: cs, egd, bh"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BacktestOptions {
    /// Overrides the dataset's minimum relative when deriving rates and bounds.
    pub market_variability: Option<f64>,
    pub risk_free: f64,
    pub grid_resolution: usize,
    /// Comparator for the log-regret; defaults to the grid CRP when `N ≤ 3`.
    pub comparator: Option<SimplexPoint>,
}

impl Default for BacktestOptions {
    fn default() -> Self {
        Self {
            market_variability: None,
            risk_free: 0.04,
            grid_resolution: 10_000,
            comparator: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Backtest {
    pub strategy: Strategy,
    pub eta: f64,
    /// Weights held on each day (the drifting weights for buy-and-hold).
    pub weights: Vec<SimplexPoint>,
    /// Wealth after each day, starting from 1.
    pub wealth: Vec<f64>,
    pub daily_returns: Vec<f64>,
    pub log_wealth: f64,
    pub metrics: PortfolioMetrics,
    pub regret: Option<RegretReport>,
}

/// The rate the theory prescribes for `strategy` on `series` (0 for buy-and-hold).
pub fn default_rate(series: &PriceRelativeSeries, strategy: Strategy, a: f64) -> Result<f64> {
    match strategy {
        Strategy::Cs => portfolio_learning_rate(series.assets(), series.days(), a),
        Strategy::Egd => egd_portfolio_rate(series.assets(), series.days(), a),
        Strategy::Bh => Ok(0.0),
    }
}

/// Runs `strategy` through the series. `eta = None` uses [`default_rate`].
pub fn run_portfolio_backtest(
    series: &PriceRelativeSeries,
    strategy: Strategy,
    eta: Option<f64>,
    options: &BacktestOptions,
) -> Result<Backtest> {
    let n = series.assets();
    let a = options
        .market_variability
        .unwrap_or_else(|| series.market_variability());
    let eta = match eta {
        Some(e) => e,
        None if n == 1 => 0.0,
        None => default_rate(series, strategy, a.min(1.0))?,
    };
    let mut w = SimplexPoint::with_tolerance(vec![1.0; n], 0.0)?;
    let mut weights = Vec::with_capacity(series.days());
    let mut wealth = Vec::with_capacity(series.days());
    let mut daily_returns = Vec::with_capacity(series.days());
    let mut log_wealth = 0.0;
    for t in 0..series.days() {
        let x = series.day(t);
        let gain = dot(&w, x);
        log_wealth += gain.ln();
        wealth.push(log_wealth.exp());
        daily_returns.push(gain - 1.0);
        let next = match strategy {
            _ if n == 1 => w.clone(),
            Strategy::Cs => portfolio_cs_update(&w, x, eta)?,
            Strategy::Egd => helmbold_egd_update(&w, x, eta)?,
            Strategy::Bh => {
                let drifted = w.iter().zip(x).map(|(wi, xi)| wi * xi).collect();
                w.successor(drifted)?
            }
        };
        weights.push(std::mem::replace(&mut w, next));
    }

    let total_return = log_wealth.exp();
    let apy = annualized_percentage_yield(total_return, series.days())?;
    let sharpe = sharpe_ratio(apy, &daily_returns, options.risk_free).ok();
    let metrics = PortfolioMetrics::new(total_return, apy, sharpe, &daily_returns, options.risk_free);

    let comparator = match (&options.comparator, n <= MAX_ORACLE_ASSETS) {
        (Some(u), _) => {
            check_len(n, u.len())?;
            let value = (0..series.days()).map(|t| dot(u, series.day(t)).ln()).sum();
            Some((Comparator::Supplied(u.to_vec()), value))
        }
        (None, true) => {
            let (u, value) = best_crp_oracle(series, options.grid_resolution)?;
            Some((Comparator::GridCrp(u.into_weights()), value))
        }
        (None, false) => None,
    };
    let regret = comparator.map(|(comparator, value)| RegretReport {
        regret: value - log_wealth,
        bound: portfolio_regret_bound(n, series.days(), a),
        comparator,
        strategy_value: log_wealth,
        comparator_value: value,
    });

    Ok(Backtest {
        strategy,
        eta,
        weights,
        wealth,
        daily_returns,
        log_wealth,
        metrics,
        regret,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(rows: &[Vec<f64>]) -> PriceRelativeSeries {
        PriceRelativeSeries::from_matrix(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn junk_bonds_are_rejected_with_their_cell() {
        let err = PriceRelativeSeries::from_matrix(
            Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoJunkBond { row: 1, column: 1, .. }));
    }

    #[test]
    fn cs_update_examples() {
        let w = SimplexPoint::uniform(2).unwrap();
        let next = portfolio_cs_update(&w, &[1.0, 0.5], 0.3).unwrap();
        assert!((next[0] - 0.55).abs() < 1e-15 && (next[1] - 0.45).abs() < 1e-15);
        assert_eq!(portfolio_cs_update(&w, &[1.3, 1.3], 0.3).unwrap(), w);
        assert!(portfolio_cs_update(&w, &[1.0, -0.1], 0.3).is_err());
        assert!((dot(&w, &[1.0, 0.5]) - 0.75).abs() < 1e-15);
        // Same as the generic Cauchy-Simplex step on ∇f = −x/(w·x).
        let g = crate::GradientVector::new(portfolio_gradient(&w, &[1.0, 0.5])).unwrap();
        let generic = crate::solvers::cs_step_linear(&w, &g, 0.3).unwrap();
        assert!((generic[0] - next[0]).abs() < 1e-15);
    }

    #[test]
    fn rate_examples() {
        assert!((portfolio_learning_rate(2, 100, 1.0).unwrap() - 0.105338).abs() < 1e-6);
        assert!((portfolio_learning_rate(2, 100, 0.5).unwrap() - 0.05559).abs() < 1e-5);
        assert!(portfolio_learning_rate(2, 100, 1e-12).unwrap() < 1e-12);
        assert!(portfolio_learning_rate(2, 100, 0.0).is_err());
        assert!((egd_portfolio_rate(2, 100, 0.5).unwrap() - 0.11774).abs() < 1e-5);
        assert!((portfolio_regret_bound(2, 500, 0.5) - 53.3).abs() < 0.05);
    }

    #[test]
    fn helmbold_example() {
        let w = SimplexPoint::uniform(2).unwrap();
        let next = helmbold_egd_update(&w, &[1.0, 0.5], 0.3).unwrap();
        assert!((next[0] - 0.549834).abs() < 1e-6 && (next[1] - 0.450166).abs() < 1e-6);
        assert_eq!(helmbold_egd_update(&w, &[2.0, 2.0], 0.3).unwrap(), w);
    }

    #[test]
    fn buy_and_hold_examples() {
        assert_eq!(buy_and_hold(&series(&vec![vec![1.0, 1.0]; 3])), vec![1.0; 3]);
        assert_eq!(buy_and_hold(&series(&[vec![2.0], vec![1.5]])), vec![2.0, 3.0]);
        assert_eq!(buy_and_hold(&series(&[vec![2.0, 1.0]])), vec![1.5]);
    }

    #[test]
    fn crp_oracle_examples() {
        let (u, v) = best_crp_oracle(&series(&[vec![1.1], vec![0.9]]), 100).unwrap();
        assert_eq!(u.weights(), &[1.0]);
        assert!((v - (1.1f64.ln() + 0.9f64.ln())).abs() < 1e-15);

        let (u, v) = best_crp_oracle(&series(&[vec![1.0, 0.5], vec![0.5, 1.0]]), 100).unwrap();
        assert_eq!(u.weights(), &[0.5, 0.5]);
        assert!((v - 2.0 * 0.75f64.ln()).abs() < 1e-12);
        assert!((v + 0.57536).abs() < 1e-5);

        let (_, v) = best_crp_oracle(&series(&vec![vec![1.0; 3]; 4]), 100).unwrap();
        assert!(v.abs() < 1e-12);
        assert!(matches!(
            best_crp_oracle(&series(&[vec![1.0; 4]]), 100),
            Err(Error::OracleScale { .. })
        ));
        assert!(best_crp_oracle(&series(&[vec![1.0; 2]]), 99).is_err());
    }

    #[test]
    fn constant_market_backtests_are_flat() {
        let s = series(&vec![vec![1.0, 1.0]; 20]);
        for strategy in [Strategy::Cs, Strategy::Egd, Strategy::Bh] {
            let b = run_portfolio_backtest(&s, strategy, None, &BacktestOptions::default()).unwrap();
            assert!(b.metrics.apy.abs() < 1e-12);
            assert!(b.regret.unwrap().regret.abs() < 1e-12);
            assert!(b.metrics.sharpe.is_none());
        }
    }

    #[test]
    fn buy_and_hold_backtest_matches_the_closed_form() {
        let s = series(&[vec![2.0, 1.0], vec![0.5, 1.2], vec![1.1, 0.9]]);
        let b = run_portfolio_backtest(&s, Strategy::Bh, None, &BacktestOptions::default()).unwrap();
        for (got, want) in b.wealth.iter().zip(buy_and_hold(&s)) {
            assert!((got - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn rescaling_keeps_the_cs_trajectory() {
        let s = series(&[vec![1.2, 0.9], vec![0.7, 1.1], vec![1.05, 1.0]]);
        let opts = BacktestOptions::default();
        let a = run_portfolio_backtest(&s, Strategy::Cs, Some(0.4), &opts).unwrap();
        let b = run_portfolio_backtest(&s.rescaled(), Strategy::Cs, Some(0.4), &opts).unwrap();
        for (u, v) in a.weights.iter().zip(&b.weights) {
            assert!((u[0] - v[0]).abs() < 1e-12);
        }
        let (ra, rb) = (a.regret.unwrap(), b.regret.unwrap());
        assert!((ra.regret - rb.regret).abs() < 1e-10);
        assert!(s.rescaled().market_variability() <= 1.0);
    }
}
