//! Periodic re-optimization with buy-and-hold drift between rebalances.
//!
//! Rebalance dates step `rebalance_every_days` calendar days from the first
//! rebalance and snap forward to the next panel date. A decision on date `d`
//! sees only panel data up to and including `d`, and the trade executes at
//! that date's close. The first allocation counts as a trade out of an
//! all-benchmark holding.

use chrono::{Days, NaiveDate};
use rayon::prelude::*;

use crate::analytics;
use crate::error::{Error, Result};
use crate::optimizer::{self, BoundSet, WeightVector};
use crate::signal::ExcessReturns;
use crate::timeseries::{AlignedPanel, PriceSeries, ReturnSeries};
use crate::DAYS_PER_YEAR;

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyConfig {
    /// Calendar-day lookback `T` of the excess-return statistics.
    pub lookback_days: u32,
    pub rebalance_every_days: u32,
    /// Annual tracking-error budget.
    pub sigma_annual: f64,
    pub bounds: BoundSet,
    /// One-way proportional cost per unit of weight traded.
    pub cost_spread: f64,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.start >= self.end {
            return Err(Error::Config(format!(
                "start {} must precede end {}",
                self.start, self.end
            )));
        }
        if self.lookback_days < 2 {
            return Err(Error::Config("lookback_days must be at least 2".into()));
        }
        if self.rebalance_every_days < 1 {
            return Err(Error::Config(
                "rebalance_every_days must be at least 1".into(),
            ));
        }
        if !(self.sigma_annual.is_finite() && self.sigma_annual > 0.0) {
            return Err(Error::Config("sigma_annual must be positive".into()));
        }
        if !(self.cost_spread.is_finite() && self.cost_spread >= 0.0) {
            return Err(Error::Config("cost_spread must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Daily path of a backtest.
///
/// `weights_history[k]` holds the weights at the close of `dates[k]` after
/// drift and before that day's trade. On the first date, where the portfolio
/// is created, it holds the initial allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestResult {
    pub names: Vec<String>,
    pub dates: Vec<NaiveDate>,
    /// Gross strategy NAV, 1.0 on the first date.
    pub nav: Vec<f64>,
    /// Strategy NAV after trading costs.
    pub nav_net: Vec<f64>,
    pub benchmark_nav: Vec<f64>,
    /// Daily benchmark returns taken from the panel levels.
    pub benchmark_daily_returns: Vec<f64>,
    /// Gross daily returns `Σ w_i(t-1) r_i(t)`, one fewer than `dates`.
    pub daily_returns: Vec<f64>,
    pub weights_history: Vec<Vec<f64>>,
    pub rebalance_dates: Vec<NaiveDate>,
    /// Target weights set on each rebalance date.
    pub targets: Vec<WeightVector>,
    /// Two-sided `Σ|Δw|` per rebalance.
    pub per_rebalance_turnover: Vec<f64>,
    pub cost_spread: f64,
}

impl BacktestResult {
    fn series(&self, name: &str, values: Vec<f64>) -> Result<ReturnSeries> {
        ReturnSeries::new(name, self.dates[1..].to_vec(), values)
    }

    pub fn strategy_returns(&self) -> Result<ReturnSeries> {
        self.series("strategy", self.daily_returns.clone())
    }

    pub fn net_returns(&self) -> Result<ReturnSeries> {
        self.series("strategy_net", nav_returns(&self.nav_net))
    }

    pub fn benchmark_returns(&self) -> Result<ReturnSeries> {
        self.series("benchmark", self.benchmark_daily_returns.clone())
    }

    pub fn strategy_nav(&self) -> Result<PriceSeries> {
        PriceSeries::from_parts("strategy", self.dates.clone(), self.nav.clone())
    }

    pub fn benchmark_nav_series(&self) -> Result<PriceSeries> {
        PriceSeries::from_parts("benchmark", self.dates.clone(), self.benchmark_nav.clone())
    }

    pub fn days_elapsed(&self) -> i64 {
        match (self.dates.first(), self.dates.last()) {
            (Some(a), Some(b)) => (*b - *a).num_days(),
            _ => 0,
        }
    }

    /// Total turnover scaled to one year of calendar time.
    pub fn annualized_turnover(&self) -> f64 {
        annualize_turnover(&self.per_rebalance_turnover, self.days_elapsed())
    }

    pub fn ter(&self) -> f64 {
        analytics::ter(self.annualized_turnover(), self.cost_spread)
    }
}

/// `Σ turnover × 365.25 / days`.
pub fn annualize_turnover(turnover: &[f64], days_elapsed: i64) -> f64 {
    if days_elapsed <= 0 {
        return 0.0;
    }
    turnover.iter().sum::<f64>() * DAYS_PER_YEAR / days_elapsed as f64
}

fn nav_returns(nav: &[f64]) -> Vec<f64> {
    nav.windows(2).map(|w| w[1] / w[0] - 1.0).collect()
}

/// Runs the timing strategy: two-stage optimization on every rebalance date.
pub fn run_backtest(panel: &AlignedPanel, config: &StrategyConfig) -> Result<BacktestResult> {
    config.validate()?;
    check_bounds(panel, &config.bounds)?;
    let excess = ExcessReturns::from_panel(panel)?;
    let names = panel.names();
    simulate(panel, config, |date| {
        let stats = excess.stats_at(date, config.lookback_days)?;
        let outcome = optimizer::solve(&stats, &config.bounds, config.sigma_annual)?;
        Ok(outcome.weights.weights().to_vec())
    })
    .map(|mut r| {
        r.names = names;
        r
    })
}

/// Same engine with constant target weights.
pub fn run_static_backtest(
    panel: &AlignedPanel,
    weights: &WeightVector,
    config: &StrategyConfig,
) -> Result<BacktestResult> {
    config.validate()?;
    if weights.names() != panel.names().as_slice() {
        return Err(Error::Validation(format!(
            "weights are for {:?}, panel has {:?}",
            weights.names(),
            panel.names()
        )));
    }
    let target = weights.weights().to_vec();
    simulate(panel, config, |_| Ok(target.clone())).map(|mut r| {
        r.names = panel.names();
        r
    })
}

/// Per-position arithmetic mean of the daily weights, renormalized to sum to one.
pub fn mean_weights(result: &BacktestResult) -> Result<WeightVector> {
    let first = result
        .weights_history
        .first()
        .ok_or_else(|| Error::EmptyInput("backtest has no weight history".into()))?;
    let count = result.weights_history.len() as f64;
    let mut mean = vec![0.0; first.len()];
    for day in &result.weights_history {
        for (m, w) in mean.iter_mut().zip(day) {
            *m += w / count;
        }
    }
    let total: f64 = mean.iter().sum();
    mean.iter_mut().for_each(|m| *m /= total);
    WeightVector::new(result.names.clone(), mean)
}

fn check_bounds(panel: &AlignedPanel, bounds: &BoundSet) -> Result<()> {
    if bounds.len() != panel.n_indices() + 1 {
        return Err(Error::Config(format!(
            "{} bounds for a panel of {} indices plus benchmark",
            bounds.len(),
            panel.n_indices()
        )));
    }
    bounds.check_feasible()
}

/// Panel positions of the first rebalance and the last simulated date.
fn simulation_span(panel: &AlignedPanel, config: &StrategyConfig) -> Result<(usize, usize)> {
    let dates = panel.dates();
    let first_date = dates[0];
    let lookback = Days::new(u64::from(config.lookback_days));
    let first = dates.iter().position(|d| {
        *d >= config.start
            && d.checked_sub_days(lookback)
                .is_some_and(|c| c >= first_date)
    });
    let last = dates.partition_point(|d| *d <= config.end);
    match first {
        Some(first) if last > first + 1 => Ok((first, last - 1)),
        _ => Err(Error::InsufficientData {
            what: format!(
                "panel dates in [{}, {}] with a full {}-day lookback before the first rebalance",
                config.start, config.end, config.lookback_days
            ),
            found: dates
                .iter()
                .filter(|d| **d >= config.start && **d <= config.end)
                .count(),
            needed: 2,
        }),
    }
}

/// Rebalance positions: calendar steps from the first rebalance, each snapped
/// forward to the next panel date.
fn rebalance_positions(dates: &[NaiveDate], first: usize, last: usize, every: u32) -> Vec<usize> {
    let mut positions = vec![first];
    let mut step = 1u64;
    while let Some(scheduled) = dates[first].checked_add_days(Days::new(step * u64::from(every))) {
        let pos = dates.partition_point(|d| *d < scheduled);
        if pos > last {
            break;
        }
        if positions.last() != Some(&pos) {
            positions.push(pos);
        }
        step += 1;
    }
    positions
}

fn simulate<F>(panel: &AlignedPanel, config: &StrategyConfig, decide: F) -> Result<BacktestResult>
where
    F: Fn(NaiveDate) -> Result<Vec<f64>> + Sync,
{
    let dates = panel.dates();
    let (first, last) = simulation_span(panel, config)?;
    let schedule = rebalance_positions(dates, first, last, config.rebalance_every_days);

    // decisions only read data up to their own date, so they are independent
    let targets: Vec<Vec<f64>> = schedule
        .par_iter()
        .map(|&k| decide(dates[k]).map_err(|e| e.on(dates[k])))
        .collect::<Result<_>>()?;

    let levels: Vec<&[f64]> = panel.series().map(PriceSeries::levels).collect();
    let names = panel.names();
    let width = levels.len();
    let span = last - first + 1;

    let mut nav = Vec::with_capacity(span);
    let mut nav_net = Vec::with_capacity(span);
    let mut benchmark_nav = Vec::with_capacity(span);
    let mut daily_returns = Vec::with_capacity(span - 1);
    let mut benchmark_daily_returns = Vec::with_capacity(span - 1);
    let mut weights_history = Vec::with_capacity(span);
    let mut turnover = Vec::with_capacity(schedule.len());
    let mut target_vectors = Vec::with_capacity(schedule.len());

    let mut held = vec![0.0; width];
    held[0] = 1.0;
    let (mut gross, mut net) = (1.0_f64, 1.0_f64);
    let mut next_rebalance = 0usize;

    for k in first..=last {
        if k > first {
            let asset_returns: Vec<f64> = levels.iter().map(|l| l[k] / l[k - 1] - 1.0).collect();
            let ret: f64 = held.iter().zip(&asset_returns).map(|(w, r)| w * r).sum();
            let growth = 1.0 + ret;
            if growth <= 0.0 {
                return Err(Error::Validation("portfolio value fell to zero".into()).on(dates[k]));
            }
            for (w, r) in held.iter_mut().zip(&asset_returns) {
                *w *= (1.0 + r) / growth;
            }
            gross *= growth;
            net *= growth;
            daily_returns.push(ret);
            benchmark_daily_returns.push(asset_returns[0]);
        }

        let mut recorded = held.clone();
        if schedule.get(next_rebalance) == Some(&k) {
            let target = &targets[next_rebalance];
            let traded: f64 = target.iter().zip(&held).map(|(t, w)| (t - w).abs()).sum();
            net *= 1.0 - config.cost_spread * traded;
            if net <= 0.0 {
                return Err(
                    Error::Validation("trading costs exhausted the portfolio".into()).on(dates[k]),
                );
            }
            held.clone_from(target);
            if k == first {
                recorded.clone_from(target);
            }
            turnover.push(traded);
            target_vectors.push(WeightVector::new(names.clone(), target.clone())?);
            next_rebalance += 1;
        }

        nav.push(gross);
        nav_net.push(net);
        benchmark_nav.push(levels[0][k] / levels[0][first]);
        weights_history.push(recorded);
    }

    Ok(BacktestResult {
        names,
        dates: dates[first..=last].to_vec(),
        nav,
        nav_net,
        benchmark_nav,
        benchmark_daily_returns,
        daily_returns,
        weights_history,
        rebalance_dates: schedule.iter().map(|&k| dates[k]).collect(),
        targets: target_vectors,
        per_rebalance_turnover: turnover,
        cost_spread: config.cost_spread,
    })
}
