//! Configuration-driven runner for the timing backtest.
//!
//! [`run`] loads or generates a panel, backtests the strategy and (optionally)
//! its static mean-weight counterpart, and writes:
//!
//! - the text report at `report_path` and a JSON copy next to it (`.json`);
//! - the daily series at `series_path`;
//! - `<series stem>.trades.csv` with every rebalance;
//! - `<series stem>.static.csv` with the static portfolio's series.
//!
//! Every report value can be recomputed from the series files and the panel.

pub mod config;
pub mod report;

use std::path::{Path, PathBuf};

use thiserror::Error;
use xsalpha_core::backtest::{mean_weights, run_backtest, run_static_backtest};
use xsalpha_core::timeseries::{load_panel_columns, write_panel};
use xsalpha_core::{datagen, AlignedPanel, PerformanceReport, StrategyConfig};

pub use config::{BoundMode, ConfigError, DataSource, RunConfig};
pub use report::{ReportDocument, StaticSummary};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Data {
        context: String,
        #[source]
        source: xsalpha_core::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data {
                source: xsalpha_core::Error::Config(_),
                ..
            } => 2,
            _ => 1,
        }
    }

    fn data(context: impl Into<String>) -> impl FnOnce(xsalpha_core::Error) -> Self {
        let context = context.into();
        move |source| CliError::Data { context, source }
    }

    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Self + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Files written by one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub document: ReportDocument,
    pub written: Vec<PathBuf>,
}

/// Generates the synthetic panel of `config` and saves it to `panel_out`.
pub fn synth(config: &RunConfig) -> Result<PathBuf, CliError> {
    let DataSource::Synth { spec, panel_out } = &config.source else {
        return Err(ConfigError::Missing("synth.seed").into());
    };
    let path = panel_out
        .as_ref()
        .ok_or(ConfigError::Missing("panel_out"))?;
    let panel = datagen::generate(spec).map_err(CliError::data("synthetic panel"))?;
    save_panel(&panel, path)?;
    Ok(path.clone())
}

pub fn run(config: &RunConfig) -> Result<RunOutput, CliError> {
    let rebalance_every_days = config
        .rebalance_every_days
        .ok_or(ConfigError::Missing("rebalance_every_days"))?;
    let sigma_annual = config
        .sigma_annual
        .ok_or(ConfigError::Missing("sigma_annual"))?;
    let mut written = Vec::new();

    let panel = match &config.source {
        DataSource::Panel {
            path,
            benchmark_column,
            index_columns,
        } => {
            let file = std::fs::File::open(path).map_err(CliError::io(path))?;
            load_panel_columns(
                std::io::BufReader::new(file),
                benchmark_column,
                Some(index_columns),
            )
            .map_err(CliError::data(path.display().to_string()))?
        }
        DataSource::Synth { spec, panel_out } => {
            let panel = datagen::generate(spec).map_err(CliError::data("synthetic panel"))?;
            if let Some(path) = panel_out {
                save_panel(&panel, path)?;
                written.push(path.clone());
            }
            panel
        }
    };

    let dates = panel.dates();
    let strategy = StrategyConfig {
        lookback_days: config.lookback_days,
        rebalance_every_days,
        sigma_annual,
        bounds: config.bound_mode.bounds(panel.n_indices())?,
        cost_spread: config.cost_spread,
        start: config.start.unwrap_or(dates[0]),
        end: config.end.unwrap_or(dates[dates.len() - 1]),
    };

    let result = run_backtest(&panel, &strategy).map_err(CliError::data("strategy backtest"))?;
    let static_result = if config.compare_static_mean {
        let weights = mean_weights(&result).map_err(CliError::data("mean weights"))?;
        Some(
            run_static_backtest(&panel, &weights, &strategy)
                .map_err(CliError::data("static mean-weight backtest"))?,
        )
    } else {
        None
    };

    let performance = PerformanceReport::compute(&result, &panel, static_result.as_ref())
        .map_err(CliError::data("strategy report"))?;
    let static_summary = static_result
        .as_ref()
        .map(StaticSummary::compute)
        .transpose()
        .map_err(CliError::data("static mean-weight report"))?;
    let document = ReportDocument::new(
        &config.name,
        &strategy,
        &result,
        performance,
        static_summary,
    );

    let mut files = vec![
        (config.series_path.clone(), report::series_csv(&result)),
        (
            report::sibling(&config.series_path, ".trades.csv"),
            report::trades_csv(&result),
        ),
    ];
    if let Some(s) = &static_result {
        files.push((
            report::sibling(&config.series_path, ".static.csv"),
            report::series_csv(s),
        ));
    }
    files.push((
        report::sibling(&config.report_path, ".json"),
        document.to_json(),
    ));
    files.push((config.report_path.clone(), document.to_text()));
    for (path, contents) in files {
        report::write_atomic(&path, contents.as_bytes()).map_err(CliError::io(&path))?;
        written.push(path);
    }
    Ok(RunOutput { document, written })
}

fn save_panel(panel: &AlignedPanel, path: &Path) -> Result<(), CliError> {
    let mut buffer = Vec::new();
    write_panel(panel, &mut buffer).map_err(CliError::data(path.display().to_string()))?;
    report::write_atomic(path, &buffer).map_err(CliError::io(path))
}
