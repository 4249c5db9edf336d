//! Report rendering and output files.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Serialize;
use xsalpha_core::analytics;
use xsalpha_core::{BacktestResult, PerformanceReport, Result as CoreResult, StrategyConfig};

/// Headline statistics of the static mean-weight portfolio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaticSummary {
    pub annual_return: f64,
    pub annual_vol: f64,
    pub sharpe: f64,
    pub alpha_annual: f64,
    pub te_annual: f64,
}

impl StaticSummary {
    pub fn compute(result: &BacktestResult) -> CoreResult<Self> {
        let returns = result.strategy_returns()?;
        let (alpha_annual, te_annual) =
            analytics::alpha_te(&returns, &result.benchmark_returns()?)?;
        Ok(Self {
            annual_return: analytics::annualized_return(&returns)?,
            annual_vol: analytics::annualized_vol(&returns)?,
            sharpe: analytics::sharpe_ratio(&returns)?,
            alpha_annual,
            te_annual,
        })
    }
}

/// Contents of the JSON report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument {
    pub name: String,
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
    pub rebalances: usize,
    pub lookback_days: u32,
    pub rebalance_every_days: u32,
    pub sigma_annual: f64,
    pub cost_spread: f64,
    pub strategy: PerformanceReport,
    pub static_mean: Option<StaticSummary>,
}

impl ReportDocument {
    pub fn new(
        name: &str,
        config: &StrategyConfig,
        result: &BacktestResult,
        strategy: PerformanceReport,
        static_mean: Option<StaticSummary>,
    ) -> Self {
        Self {
            name: name.to_string(),
            first_date: result.dates[0],
            last_date: result.dates[result.dates.len() - 1],
            rebalances: result.rebalance_dates.len(),
            lookback_days: config.lookback_days,
            rebalance_every_days: config.rebalance_every_days,
            sigma_annual: config.sigma_annual,
            cost_spread: config.cost_spread,
            strategy,
            static_mean,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// Human-readable table; percentages to one decimal place.
    pub fn to_text(&self) -> String {
        let r = &self.strategy;
        let s = self.static_mean.as_ref();
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.name);
        let _ = writeln!(
            out,
            "{} to {}, {} rebalances every {} days, lookback {} days, TE target {}, spread {} bp",
            self.first_date,
            self.last_date,
            self.rebalances,
            self.rebalance_every_days,
            self.lookback_days,
            percent(self.sigma_annual),
            fixed(self.cost_spread * 1e4, 1),
        );
        let _ = writeln!(out);

        let mut table = Table::new(s.is_some());
        table.row(
            "",
            ["Strategy", "Benchmark", "Static mean"].map(String::from),
        );
        table.row(
            "Return",
            [
                percent(r.annual_return),
                percent(r.benchmark_return),
                s.map_or(String::new(), |s| percent(s.annual_return)),
            ],
        );
        table.row(
            "VOL",
            [
                percent(r.annual_vol),
                percent(r.benchmark_vol),
                s.map_or(String::new(), |s| percent(s.annual_vol)),
            ],
        );
        table.row(
            "SR",
            [
                ratio(r.sharpe),
                ratio(r.benchmark_sharpe),
                s.map_or(String::new(), |s| ratio(s.sharpe)),
            ],
        );
        table.row(
            "Alpha",
            [
                percent(r.alpha_annual),
                String::new(),
                s.map_or(String::new(), |s| percent(s.alpha_annual)),
            ],
        );
        table.row(
            "TE",
            [
                percent(r.te_annual),
                String::new(),
                s.map_or(String::new(), |s| percent(s.te_annual)),
            ],
        );
        table.single("IR", ratio(r.ir));
        table.single("MRDD", percent(r.mrdd));
        table.single("Mean Weights", String::new());
        for (name, w) in r.mean_weights.names().iter().zip(r.mean_weights.weights()) {
            table.single(&format!("  {name}"), percent(*w));
        }
        table.single("Allocation", percent(r.allocation_component));
        table.single("Active", percent(r.active_component));
        table.single("TER", percent(r.ter));
        table.single("Turnover", percent(r.turnover_annual));
        if let Some(v) = &r.vs_mean {
            table.single("Alpha vs. Mean", percent(v.alpha_annual));
            table.single("TE vs. Mean", percent(v.te_annual));
            table.single("IR vs. Mean", ratio(v.ir));
        }
        table.single("p-value Alpha", pvalue(r.alpha_pvalue));
        if let Some(v) = &r.vs_mean {
            table.single("p-value vs. Mean", pvalue(v.alpha_pvalue));
        }
        out.push_str(&table.render());
        out
    }
}

struct Table {
    rows: Vec<(String, Vec<String>)>,
    columns: usize,
}

impl Table {
    fn new(with_static: bool) -> Self {
        Self {
            rows: Vec::new(),
            columns: if with_static { 3 } else { 2 },
        }
    }

    fn row(&mut self, label: &str, cells: [String; 3]) {
        let cells = cells.into_iter().take(self.columns).collect();
        self.rows.push((label.to_string(), cells));
    }

    fn single(&mut self, label: &str, cell: String) {
        self.rows.push((label.to_string(), vec![cell]));
    }

    fn render(&self) -> String {
        let label_width = self.rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
        let cell_width = self
            .rows
            .iter()
            .flat_map(|(_, c)| c.iter().map(String::len))
            .max()
            .unwrap_or(0);
        let mut out = String::new();
        for (label, cells) in &self.rows {
            let mut line = format!("{label:<label_width$}");
            for cell in cells {
                let _ = write!(line, "  {cell:>cell_width$}");
            }
            let _ = writeln!(out, "{}", line.trim_end());
        }
        out
    }
}

fn percent(x: f64) -> String {
    fixed(x * 100.0, 1) + "%"
}

fn ratio(x: f64) -> String {
    fixed(x, 2)
}

fn pvalue(p: Option<f64>) -> String {
    p.map_or_else(|| "n/a".to_string(), |p| fixed(p, 3))
}

/// Fixed-point formatting without a negative sign on values that round to zero.
fn fixed(x: f64, decimals: usize) -> String {
    let text = format!("{x:.decimals$}");
    match text.strip_prefix('-') {
        Some(rest) if rest.chars().all(|c| c == '0' || c == '.') => rest.to_string(),
        _ => text,
    }
}

/// `date,nav_gross,nav_net,benchmark_nav,w_<name>...` with the pre-trade
/// weights of each day; values use the shortest exact decimal form.
pub fn series_csv(result: &BacktestResult) -> String {
    let mut out = String::from("date,nav_gross,nav_net,benchmark_nav");
    for name in &result.names {
        let _ = write!(out, ",w_{name}");
    }
    out.push('\n');
    for k in 0..result.dates.len() {
        let _ = write!(
            out,
            "{},{},{},{}",
            result.dates[k], result.nav[k], result.nav_net[k], result.benchmark_nav[k]
        );
        for w in &result.weights_history[k] {
            let _ = write!(out, ",{w}");
        }
        out.push('\n');
    }
    out
}

/// `date,turnover,target_<name>...`, one row per rebalance.
pub fn trades_csv(result: &BacktestResult) -> String {
    let mut out = String::from("date,turnover");
    for name in &result.names {
        let _ = write!(out, ",target_{name}");
    }
    out.push('\n');
    for ((date, turnover), target) in result
        .rebalance_dates
        .iter()
        .zip(&result.per_rebalance_turnover)
        .zip(&result.targets)
    {
        let _ = write!(out, "{date},{turnover}");
        for w in target.weights() {
            let _ = write!(out, ",{w}");
        }
        out.push('\n');
    }
    out
}

/// `<dir>/<stem><suffix>` for a sibling output of `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut file = tempfile::NamedTempFile::new_in(dir)?;
    file.write_all(contents)?;
    file.as_file().sync_all()?;
    file.persist(path).map_err(|e| e.error)?;
    Ok(())
}
