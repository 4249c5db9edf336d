#![allow(dead_code)]

use std::path::Path;

use chrono::NaiveDate;
use serde_json::Value;
use xsalpha_core::analytics::{
    alpha_and_te, alpha_significance, annualized_excess_returns, annualized_return, annualized_vol,
    mrdd, sharpe_ratio, split_alpha, ter,
};
use xsalpha_core::backtest::annualize_turnover;
use xsalpha_core::{AlignedPanel, PriceSeries, ReturnSeries, WeightVector};

/// A series file read back from disk.
pub struct Series {
    pub names: Vec<String>,
    pub dates: Vec<NaiveDate>,
    pub nav_gross: Vec<f64>,
    pub nav_net: Vec<f64>,
    pub benchmark_nav: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
}

fn rows(path: &Path) -> (Vec<String>, Vec<(NaiveDate, Vec<f64>)>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect();
    let body = lines
        .map(|line| {
            let mut cells = line.split(',');
            let date = cells.next().unwrap().parse().unwrap();
            (date, cells.map(|c| c.parse().unwrap()).collect())
        })
        .collect();
    (header, body)
}

impl Series {
    pub fn read(path: &Path) -> Self {
        let (header, body) = rows(path);
        assert_eq!(
            header[..4],
            ["date", "nav_gross", "nav_net", "benchmark_nav"]
        );
        let names = header[4..]
            .iter()
            .map(|h| h.strip_prefix("w_").unwrap().to_string())
            .collect();
        Self {
            names,
            dates: body.iter().map(|(d, _)| *d).collect(),
            nav_gross: body.iter().map(|(_, v)| v[0]).collect(),
            nav_net: body.iter().map(|(_, v)| v[1]).collect(),
            benchmark_nav: body.iter().map(|(_, v)| v[2]).collect(),
            weights: body.iter().map(|(_, v)| v[3..].to_vec()).collect(),
        }
    }

    fn returns(&self, nav: &[f64]) -> ReturnSeries {
        let values = nav.windows(2).map(|w| w[1] / w[0] - 1.0).collect();
        ReturnSeries::new("r", self.dates[1..].to_vec(), values).unwrap()
    }

    pub fn strategy_returns(&self) -> ReturnSeries {
        self.returns(&self.nav_gross)
    }

    pub fn benchmark_returns(&self) -> ReturnSeries {
        self.returns(&self.benchmark_nav)
    }

    pub fn mean_weights(&self) -> WeightVector {
        let count = self.weights.len() as f64;
        let mut mean = vec![0.0; self.names.len()];
        for day in &self.weights {
            for (m, w) in mean.iter_mut().zip(day) {
                *m += w / count;
            }
        }
        let total: f64 = mean.iter().sum();
        WeightVector::new(self.names.clone(), mean.iter().map(|m| m / total).collect()).unwrap()
    }
}

pub fn read_turnover(path: &Path) -> Vec<f64> {
    let (header, body) = rows(path);
    assert_eq!(header[..2], ["date", "turnover"]);
    body.iter().map(|(_, v)| v[0]).collect()
}

/// Report fields recomputed from the emitted files, keyed by JSON pointer.
pub fn recompute(
    series: &Series,
    static_series: Option<&Series>,
    turnover: &[f64],
    panel: &AlignedPanel,
    cost_spread: f64,
) -> Vec<(String, Option<f64>)> {
    let s = series.strategy_returns();
    let b = series.benchmark_returns();
    let (alpha, te, ir) = alpha_and_te(&s, &b).unwrap();
    let weights = series.mean_weights();
    let excess = annualized_excess_returns(panel, &series.dates).unwrap();
    let (allocation, active) = split_alpha(alpha, &weights, &excess).unwrap();
    let days = (*series.dates.last().unwrap() - series.dates[0]).num_days();
    let turnover_annual = annualize_turnover(turnover, days);
    let nav = |v: &[f64]| PriceSeries::from_parts("n", series.dates.clone(), v.to_vec()).unwrap();

    let mut out: Vec<(String, Option<f64>)> = vec![
        (
            "/strategy/annual_return".into(),
            Some(annualized_return(&s).unwrap()),
        ),
        (
            "/strategy/annual_vol".into(),
            Some(annualized_vol(&s).unwrap()),
        ),
        ("/strategy/sharpe".into(), Some(sharpe_ratio(&s).unwrap())),
        (
            "/strategy/benchmark_return".into(),
            Some(annualized_return(&b).unwrap()),
        ),
        (
            "/strategy/benchmark_vol".into(),
            Some(annualized_vol(&b).unwrap()),
        ),
        (
            "/strategy/benchmark_sharpe".into(),
            Some(sharpe_ratio(&b).unwrap()),
        ),
        ("/strategy/alpha_annual".into(), Some(alpha)),
        ("/strategy/te_annual".into(), Some(te)),
        ("/strategy/ir".into(), Some(ir)),
        (
            "/strategy/mrdd".into(),
            Some(mrdd(&nav(&series.nav_gross), &nav(&series.benchmark_nav)).unwrap()),
        ),
        ("/strategy/turnover_annual".into(), Some(turnover_annual)),
        (
            "/strategy/ter".into(),
            Some(ter(turnover_annual, cost_spread)),
        ),
        (
            "/strategy/alpha_pvalue".into(),
            alpha_significance(&s, &b).ok(),
        ),
        ("/strategy/allocation_component".into(), Some(allocation)),
        ("/strategy/active_component".into(), Some(active)),
    ];
    for (i, w) in weights.weights().iter().enumerate() {
        out.push((format!("/strategy/mean_weights/weights/{i}"), Some(*w)));
    }
    if let Some(st) = static_series {
        let r = st.strategy_returns();
        let (a, t, i) = alpha_and_te(&s, &r).unwrap();
        out.push(("/strategy/vs_mean/alpha_annual".into(), Some(a)));
        out.push(("/strategy/vs_mean/te_annual".into(), Some(t)));
        out.push(("/strategy/vs_mean/ir".into(), Some(i)));
        out.push((
            "/strategy/vs_mean/alpha_pvalue".into(),
            alpha_significance(&s, &r).ok(),
        ));
        out.push((
            "/strategy/vs_mean/reference_return".into(),
            Some(annualized_return(&r).unwrap()),
        ));
        out.push((
            "/static_mean/annual_return".into(),
            Some(annualized_return(&r).unwrap()),
        ));
        out.push((
            "/static_mean/annual_vol".into(),
            Some(annualized_vol(&r).unwrap()),
        ));
        out.push((
            "/static_mean/sharpe".into(),
            Some(sharpe_ratio(&r).unwrap()),
        ));
    }
    out
}

/// Fields whose reported and recomputed values differ by more than `tol`.
pub fn mismatches(report: &Value, recomputed: &[(String, Option<f64>)], tol: f64) -> Vec<String> {
    recomputed
        .iter()
        .filter_map(|(pointer, want)| {
            let got = report.pointer(pointer)?.as_f64();
            let ok = match (got, want) {
                (Some(g), Some(w)) => (g - w).abs() <= tol,
                (None, None) => true,
                _ => false,
            };
            (!ok).then(|| format!("{pointer}: report {got:?}, recomputed {want:?}"))
        })
        .chain(
            recomputed
                .iter()
                .filter(|(p, _)| report.pointer(p).is_none())
                .map(|(p, _)| format!("{p}: missing from report")),
        )
        .collect()
}
