use crate::error::{Error, Result};

pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

/// `R^{252/T} − 1`.
pub fn annualized_percentage_yield(total_return: f64, days: usize) -> Result<f64> {
    if !(total_return > 0.0 && total_return.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "total return must be positive, got {total_return}"
        )));
    }
    if days == 0 {
        return Err(Error::InvalidParameter("need at least one trading day".into()));
    }
    Ok(total_return.powf(TRADING_DAYS_PER_YEAR / days as f64) - 1.0)
}

/// Population standard deviation.
pub fn daily_return_std(returns: &[f64]) -> f64 {
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    (returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n).sqrt()
}

/// `(APY − R_f) / σ` with `σ` the standard deviation of the daily returns.
pub fn sharpe_ratio(apy: f64, daily_returns: &[f64], risk_free: f64) -> Result<f64> {
    if daily_returns.len() < 2 {
        return Err(Error::InvalidParameter("need at least two daily returns".into()));
    }
    let sigma = daily_return_std(daily_returns);
    if sigma == 0.0 {
        return Err(Error::UndefinedSharpe);
    }
    Ok((apy - risk_free) / sigma)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PortfolioMetrics {
    pub total_return: f64,
    pub apy: f64,
    /// `None` when the daily returns have zero spread.
    pub sharpe: Option<f64>,
    pub daily_return_std: f64,
    pub risk_free_rate: f64,
}

impl PortfolioMetrics {
    pub fn new(total_return: f64, apy: f64, sharpe: Option<f64>, daily_returns: &[f64], risk_free_rate: f64) -> Self {
        Self {
            total_return,
            apy,
            sharpe,
            daily_return_std: daily_return_std(daily_returns),
            risk_free_rate,
        }
    }
}
