//! Portfolio backtests on a synthetic market saved to and reloaded from CSV.
//! Pass a price-relative file as the first argument to use it instead.
//!
//! The synthetic relatives lie in `[a, 1]`, so that market only falls; the
//! log-regret is unaffected because it is invariant under rescaling each day.

use simplex_opt::bench::market::{load_price_relatives, synthetic_market, write_price_relatives};
use simplex_opt::online::{run_portfolio_backtest, BacktestOptions, Strategy};

fn main() -> simplex_opt::Result<()> {
    let series = match std::env::args().nth(1) {
        Some(path) => load_price_relatives(path)?,
        None => {
            let path = std::env::temp_dir().join("simplex_opt_market.csv");
            write_price_relatives(&synthetic_market(3, 500, 0.5, 11)?, &path)?;
            load_price_relatives(&path)?
        }
    };
    println!(
        "{} days, {} assets, market variability {:.4}",
        series.days(),
        series.assets(),
        series.market_variability()
    );
    let options = BacktestOptions {
        grid_resolution: 300,
        ..Default::default()
    };
    for strategy in [Strategy::Cs, Strategy::Egd, Strategy::Bh] {
        let b = run_portfolio_backtest(&series, strategy, None, &options)?;
        let m = &b.metrics;
        print!(
            "{:>3}: η {:.4}, wealth {:.4e}, APY {:.4}, Sharpe {}",
            strategy.name(),
            b.eta,
            m.total_return,
            m.apy,
            m.sharpe.map_or("undefined".to_owned(), |s| format!("{s:.3}"))
        );
        match &b.regret {
            Some(r) => println!(", log-regret {:.3} ≤ {:.3} vs {}", r.regret, r.bound, r.comparator),
            None => println!(),
        }
    }
    Ok(())
}
