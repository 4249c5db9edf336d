//! Annualized performance statistics.
//!
//! Every figure is computed from daily arithmetic returns: means scale by
//! 365.25 and standard deviations by √365.25, whatever the spacing of the
//! observations. Volatility and tracking error use the population estimator;
//! the significance test uses the sample estimator.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::backtest::{mean_weights, BacktestResult};
use crate::error::{Error, Result};
use crate::optimizer::WeightVector;
use crate::timeseries::{AlignedPanel, PriceSeries, ReturnSeries};
use crate::DAYS_PER_YEAR;

/// Annual tracking errors at or below this are treated as zero.
const ZERO_TE: f64 = 1e-12;
const MIN_TEST_OBSERVATIONS: usize = 30;

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn population_std(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Mean daily return × 365.25.
pub fn annualized_return(daily: &ReturnSeries) -> Result<f64> {
    if daily.is_empty() {
        return Err(Error::EmptyInput(format!("return series {}", daily.name())));
    }
    Ok(mean(daily.values()) * DAYS_PER_YEAR)
}

/// Population standard deviation of daily returns × √365.25.
pub fn annualized_vol(daily: &ReturnSeries) -> Result<f64> {
    if daily.len() < 2 {
        return Err(Error::InsufficientData {
            what: format!("volatility of {}", daily.name()),
            found: daily.len(),
            needed: 2,
        });
    }
    Ok(population_std(daily.values()) * DAYS_PER_YEAR.sqrt())
}

/// Annualized return over annualized volatility.
pub fn sharpe_ratio(daily: &ReturnSeries) -> Result<f64> {
    ratio(
        annualized_return(daily)?,
        annualized_vol(daily)?,
        daily.name(),
    )
}

fn ratio(numerator: f64, denominator: f64, what: &str) -> Result<f64> {
    if denominator > ZERO_TE {
        Ok(numerator / denominator)
    } else if numerator == 0.0 {
        Ok(0.0)
    } else {
        Err(Error::DegenerateRatio(format!(
            "{what}: {numerator} over zero dispersion"
        )))
    }
}

fn differences(strategy: &ReturnSeries, reference: &ReturnSeries) -> Result<Vec<f64>> {
    if strategy.dates() != reference.dates() {
        return Err(Error::Alignment(format!(
            "{} and {} are not on identical dates",
            strategy.name(),
            reference.name()
        )));
    }
    Ok(strategy
        .values()
        .iter()
        .zip(reference.values())
        .map(|(s, r)| s - r)
        .collect())
}

/// Annualized alpha and tracking error of the daily differences, and their ratio.
pub fn alpha_te(strategy: &ReturnSeries, benchmark: &ReturnSeries) -> Result<(f64, f64)> {
    let d = differences(strategy, benchmark)?;
    if d.is_empty() {
        return Err(Error::EmptyInput("no overlapping returns".into()));
    }
    let alpha = mean(&d) * DAYS_PER_YEAR;
    let te = population_std(&d) * DAYS_PER_YEAR.sqrt();
    Ok((alpha, if te > ZERO_TE { te } else { 0.0 }))
}

/// `(alpha_annual, te_annual, ir)`.
pub fn alpha_and_te(strategy: &ReturnSeries, benchmark: &ReturnSeries) -> Result<(f64, f64, f64)> {
    let (alpha, te) = alpha_te(strategy, benchmark)?;
    let ir = ratio(alpha, te, "information ratio")?;
    Ok((alpha, te, ir))
}

/// Deepest peak-to-trough fall of the strategy/benchmark NAV ratio.
pub fn mrdd(strategy_nav: &PriceSeries, benchmark_nav: &PriceSeries) -> Result<f64> {
    if strategy_nav.dates() != benchmark_nav.dates() {
        return Err(Error::Alignment(
            "NAV series are not on identical dates".into(),
        ));
    }
    let mut peak = f64::NEG_INFINITY;
    let mut worst = 0.0_f64;
    for (s, b) in strategy_nav.levels().iter().zip(benchmark_nav.levels()) {
        let relative = s / b;
        peak = peak.max(relative);
        worst = worst.min(relative / peak - 1.0);
    }
    Ok(worst)
}

/// Annual cost estimate: annualized turnover × one-way spread.
pub fn ter(turnover_annual: f64, cost_spread: f64) -> f64 {
    turnover_annual * cost_spread
}

/// One-sided p-value for a positive mean daily difference (one-sample t-test).
pub fn alpha_significance(strategy: &ReturnSeries, reference: &ReturnSeries) -> Result<f64> {
    let d = differences(strategy, reference)?;
    if d.len() < MIN_TEST_OBSERVATIONS {
        return Err(Error::InsufficientData {
            what: "daily differences for the significance test".into(),
            found: d.len(),
            needed: MIN_TEST_OBSERVATIONS,
        });
    }
    if d.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateTest(
            "differences are identically zero".into(),
        ));
    }
    let n = d.len() as f64;
    let m = mean(&d);
    let sample_var = d.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    if sample_var == 0.0 {
        return Ok(if m > 0.0 { 0.0 } else { 1.0 });
    }
    let t = m / (sample_var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 1.0)
        .map_err(|e| Error::DegenerateTest(format!("t distribution: {e}")))?;
    Ok(dist.sf(t).clamp(0.0, 1.0))
}

/// Annualized mean of `r_i - r_0` for every position (zero for the benchmark)
/// over the return dates of `dates`.
pub fn annualized_excess_returns(
    panel: &AlignedPanel,
    dates: &[chrono::NaiveDate],
) -> Result<Vec<f64>> {
    let first = dates
        .first()
        .and_then(|d| panel.position(*d))
        .ok_or_else(|| Error::EmptyInput("no backtest dates on the panel".into()))?;
    let span = dates.len();
    if span < 2 || panel.dates().get(first..first + span) != Some(dates) {
        return Err(Error::Alignment(
            "backtest dates are not a contiguous stretch of the panel".into(),
        ));
    }
    let bench = panel.benchmark().levels();
    Ok(panel
        .series()
        .map(|s| {
            let lv = s.levels();
            let total: f64 = (first + 1..first + span)
                .map(|k| (lv[k] / lv[k - 1] - 1.0) - (bench[k] / bench[k - 1] - 1.0))
                .sum();
            total / (span - 1) as f64 * DAYS_PER_YEAR
        })
        .collect())
}

/// Splits alpha into the part explained by mean weights times average index
/// excess returns (allocation) and the remainder (active).
pub fn allocation_active_split(
    result: &BacktestResult,
    panel: &AlignedPanel,
) -> Result<(f64, f64)> {
    let weights = mean_weights(result)?;
    let (alpha, _) = alpha_te(&result.strategy_returns()?, &result.benchmark_returns()?)?;
    split_alpha(
        alpha,
        &weights,
        &annualized_excess_returns(panel, &result.dates)?,
    )
}

/// `(allocation, alpha - allocation)` for given mean weights and annualized
/// per-position excess returns.
pub fn split_alpha(alpha: f64, weights: &WeightVector, excess: &[f64]) -> Result<(f64, f64)> {
    if weights.len() != excess.len() {
        return Err(Error::Dimension(format!(
            "{} weights for {} excess returns",
            weights.len(),
            excess.len()
        )));
    }
    let allocation: f64 = weights
        .weights()
        .iter()
        .zip(excess)
        .map(|(w, e)| w * e)
        .sum();
    Ok((allocation, alpha - allocation))
}

/// Comparison of the strategy against a reference strategy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VsReference {
    pub alpha_annual: f64,
    pub te_annual: f64,
    pub ir: f64,
    /// `None` when the differences are identically zero.
    pub alpha_pvalue: Option<f64>,
    pub reference_return: f64,
}

impl VsReference {
    pub fn compute(strategy: &ReturnSeries, reference: &ReturnSeries) -> Result<Self> {
        let (alpha_annual, te_annual, ir) = alpha_and_te(strategy, reference)?;
        Ok(Self {
            alpha_annual,
            te_annual,
            ir,
            alpha_pvalue: optional_pvalue(alpha_significance(strategy, reference))?,
            reference_return: annualized_return(reference)?,
        })
    }
}

fn optional_pvalue(p: Result<f64>) -> Result<Option<f64>> {
    match p {
        Ok(p) => Ok(Some(p)),
        Err(Error::DegenerateTest(_) | Error::InsufficientData { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerformanceReport {
    pub annual_return: f64,
    pub annual_vol: f64,
    pub sharpe: f64,
    pub benchmark_return: f64,
    pub benchmark_vol: f64,
    pub benchmark_sharpe: f64,
    pub alpha_annual: f64,
    pub te_annual: f64,
    pub ir: f64,
    pub mrdd: f64,
    pub ter: f64,
    pub turnover_annual: f64,
    /// Significance of alpha against the benchmark; `None` when degenerate.
    pub alpha_pvalue: Option<f64>,
    pub mean_weights: WeightVector,
    pub allocation_component: f64,
    pub active_component: f64,
    pub vs_mean: Option<VsReference>,
}

impl PerformanceReport {
    /// Gross-of-cost statistics; costs appear only through `ter`.
    pub fn compute(
        result: &BacktestResult,
        panel: &AlignedPanel,
        static_mean: Option<&BacktestResult>,
    ) -> Result<Self> {
        let strategy = result.strategy_returns()?;
        let benchmark = result.benchmark_returns()?;
        let (alpha_annual, te_annual, ir) = alpha_and_te(&strategy, &benchmark)?;
        let mean_weights = mean_weights(result)?;
        let excess = annualized_excess_returns(panel, &result.dates)?;
        let (allocation_component, active_component) =
            split_alpha(alpha_annual, &mean_weights, &excess)?;
        let turnover_annual = result.annualized_turnover();
        let vs_mean = static_mean
            .map(|s| VsReference::compute(&strategy, &s.strategy_returns()?))
            .transpose()?;
        Ok(Self {
            annual_return: annualized_return(&strategy)?,
            annual_vol: annualized_vol(&strategy)?,
            sharpe: sharpe_ratio(&strategy)?,
            benchmark_return: annualized_return(&benchmark)?,
            benchmark_vol: annualized_vol(&benchmark)?,
            benchmark_sharpe: sharpe_ratio(&benchmark)?,
            alpha_annual,
            te_annual,
            ir,
            mrdd: mrdd(&result.strategy_nav()?, &result.benchmark_nav_series()?)?,
            ter: ter(turnover_annual, result.cost_spread),
            turnover_annual,
            alpha_pvalue: optional_pvalue(alpha_significance(&strategy, &benchmark))?,
            mean_weights,
            allocation_component,
            active_component,
            vs_mean,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Days, NaiveDate};

    fn returns(values: &[f64]) -> ReturnSeries {
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let dates = (0..values.len() as u64)
            .map(|k| start + Days::new(k))
            .collect();
        ReturnSeries::new("r", dates, values.to_vec()).unwrap()
    }

    fn levels(values: &[f64]) -> PriceSeries {
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let dates = (0..values.len() as u64)
            .map(|k| start + Days::new(k))
            .collect();
        PriceSeries::from_parts("p", dates, values.to_vec()).unwrap()
    }

    #[test]
    fn annualized_return_examples() {
        assert!((annualized_return(&returns(&[0.0001; 10])).unwrap() - 0.036525).abs() < 1e-15);
        assert_eq!(annualized_return(&returns(&[0.0; 5])).unwrap(), 0.0);
        assert_eq!(annualized_return(&returns(&[0.01, -0.01])).unwrap(), 0.0);
        assert!(matches!(
            annualized_return(&returns(&[])),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn annualized_vol_examples() {
        assert!(annualized_vol(&returns(&[0.003; 8])).unwrap() < 1e-15);
        let alternating: Vec<f64> = (0..1000)
            .map(|k| if k % 2 == 0 { 0.01 } else { -0.01 })
            .collect();
        assert!((annualized_vol(&returns(&alternating)).unwrap() - 0.191115).abs() < 5e-7);
        assert!(matches!(
            annualized_vol(&returns(&[0.01])),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn alpha_and_te_examples() {
        let x = returns(&[0.01, -0.02, 0.005]);
        assert_eq!(alpha_and_te(&x, &x).unwrap(), (0.0, 0.0, 0.0));
        let s = returns(&[0.0101, -0.0199, 0.0051]);
        let b = returns(&[0.01, -0.02, 0.005]);
        let (alpha, te) = alpha_te(&s, &b).unwrap();
        assert!((alpha - 0.036525).abs() < 1e-12);
        assert_eq!(te, 0.0);
        assert!(matches!(
            alpha_and_te(&s, &b),
            Err(Error::DegenerateRatio(_))
        ));
        let other = ReturnSeries::new("o", vec![NaiveDate::MIN], vec![0.0]).unwrap();
        assert!(matches!(alpha_and_te(&x, &other), Err(Error::Alignment(_))));
    }

    #[test]
    fn reported_information_ratio_is_consistent() {
        // 4.0% alpha over 4.5% tracking error rounds to the reported 0.90 within table precision
        assert!((0.040_f64 / 0.045 - 0.90).abs() < 0.015);
    }

    #[test]
    fn mrdd_examples() {
        let ones = levels(&[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(mrdd(&levels(&[1.0, 1.1, 1.1, 1.3]), &ones).unwrap(), 0.0);
        let got = mrdd(&levels(&[1.0, 1.1, 0.99, 1.05]), &ones).unwrap();
        assert!((got - (0.99 / 1.1 - 1.0)).abs() < 1e-15);
        assert!((got + 0.1).abs() < 1e-12);
    }

    #[test]
    fn ter_examples() {
        assert!((ter(11.47, 0.0005) - 0.0057).abs() < 5e-5);
        assert!((ter(9.65, 0.0005) - 0.0048).abs() < 5e-5);
        assert_eq!(ter(0.0, 0.0005), 0.0);
    }

    #[test]
    fn significance_orientation_and_errors() {
        let base: Vec<f64> = (0..200)
            .map(|k| 0.01 * ((k * 37 % 11) as f64 - 5.0) / 5.0)
            .collect();
        let zero = returns(&vec![0.0; 200]);
        let shifted = |c: f64| returns(&base.iter().map(|v| v + c).collect::<Vec<_>>());
        let centered_mean = mean(&base);
        assert!(alpha_significance(&shifted(-centered_mean - 0.001), &zero).unwrap() > 0.5);
        assert!(alpha_significance(&shifted(1.0), &zero).unwrap() < 1e-12);
        assert!(matches!(
            alpha_significance(&zero, &zero),
            Err(Error::DegenerateTest(_))
        ));
        assert!(matches!(
            alpha_significance(&returns(&[0.01; 10]), &returns(&[0.0; 10])),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn split_is_exact() {
        let w = WeightVector::new(vec!["b".into(), "x".into()], vec![0.25, 0.75]).unwrap();
        let (alloc, active) = split_alpha(0.03, &w, &[0.0, 0.02]).unwrap();
        assert!((alloc - 0.015).abs() < 1e-15);
        assert_eq!(alloc + active, 0.03);
    }
}
