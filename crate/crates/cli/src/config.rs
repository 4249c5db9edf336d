//! Run configuration: a flat `key = value` file.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown or repeated
//! keys are errors. Relative paths resolve against the configuration file's
//! directory, or against `--out-dir` for output files when it is given.
//!
//! | key | meaning |
//! |-----|---------|
//! | `panel_path` | CSV panel (`date,<series>...`) |
//! | `benchmark_column` | benchmark column of the panel |
//! | `index_columns` | comma-separated index columns, in order |
//! | `synth.seed`, `synth.days`, `synth.n_indices` | synthetic universe size and seed |
//! | `synth.benchmark_drift`, `synth.benchmark_vol` | daily benchmark drift and volatility |
//! | `synth.excess_drift`, `synth.excess_vol`, `synth.excess_ar1` | one value for all indices or a comma-separated list |
//! | `synth.correlation` | one off-diagonal value, or rows separated by `;` |
//! | `synth.start_date` | first synthetic date |
//! | `panel_out` | where to save the synthetic panel |
//! | `lookback_days` | window `T` in calendar days (default 91) |
//! | `rebalance_every_days` | calendar days between rebalances |
//! | `sigma_annual` | annual tracking-error budget |
//! | `bound_mode` | `long-only` (default), `long-short` or `explicit` |
//! | `lower_bounds`, `upper_bounds` | benchmark first, for `explicit` |
//! | `cost_spread` | one-way cost per unit traded (default 0.0005) |
//! | `start`, `end` | backtest date range (default: whole panel) |
//! | `report_path`, `series_path` | output files (default `<config stem>.report.txt`, `<config stem>.series.csv`) |
//! | `compare_static_mean` | also run the static mean-weight portfolio (default true) |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use thiserror::Error;
use xsalpha_core::{BoundSet, SynthSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: cannot read configuration: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{key}` on line {line}")]
    UnknownKey { key: String, line: usize },
    #[error("key `{key}` appears twice (lines {first} and {second})")]
    Duplicate {
        key: String,
        first: usize,
        second: usize,
    },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("key `{key}`: {message}")]
    Invalid { key: String, message: String },
}

const KEYS: &[&str] = &[
    "panel_path",
    "benchmark_column",
    "index_columns",
    "synth.seed",
    "synth.days",
    "synth.n_indices",
    "synth.benchmark_drift",
    "synth.benchmark_vol",
    "synth.excess_drift",
    "synth.excess_vol",
    "synth.excess_ar1",
    "synth.correlation",
    "synth.start_date",
    "panel_out",
    "lookback_days",
    "rebalance_every_days",
    "sigma_annual",
    "bound_mode",
    "lower_bounds",
    "upper_bounds",
    "cost_spread",
    "start",
    "end",
    "report_path",
    "series_path",
    "compare_static_mean",
];

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Panel {
        path: PathBuf,
        benchmark_column: String,
        index_columns: Vec<String>,
    },
    Synth {
        spec: SynthSpec,
        panel_out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundMode {
    LongOnly,
    LongShort,
    Explicit { lower: Vec<f64>, upper: Vec<f64> },
}

impl BoundMode {
    pub fn bounds(&self, n_indices: usize) -> Result<BoundSet, ConfigError> {
        match self {
            BoundMode::LongOnly => Ok(BoundSet::long_only(n_indices)),
            BoundMode::LongShort => Ok(BoundSet::long_short(n_indices)),
            BoundMode::Explicit { lower, upper } => {
                if lower.len() != n_indices + 1 || upper.len() != n_indices + 1 {
                    return Err(ConfigError::Invalid {
                        key: "lower_bounds".into(),
                        message: format!(
                            "explicit bounds need {} entries (benchmark first), got {} and {}",
                            n_indices + 1,
                            lower.len(),
                            upper.len()
                        ),
                    });
                }
                BoundSet::new(lower.clone(), upper.clone()).map_err(|e| ConfigError::Invalid {
                    key: "lower_bounds".into(),
                    message: e.to_string(),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// File stem of the configuration, used as the report title.
    pub name: String,
    pub source: DataSource,
    pub lookback_days: u32,
    pub rebalance_every_days: Option<u32>,
    pub sigma_annual: Option<f64>,
    pub bound_mode: BoundMode,
    pub cost_spread: f64,
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    /// Text report; the JSON report goes next to it with a `.json` extension.
    pub report_path: PathBuf,
    /// Daily series; static-comparison series and trades go next to it.
    pub series_path: PathBuf,
    pub compare_static_mean: bool,
}

impl RunConfig {
    pub fn load(path: &Path, out_dir: Option<&Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        Self::parse(&text, &name, base, out_dir)
    }

    /// Parses configuration text. Input paths resolve against `base`, output
    /// paths against `out_dir` if given and `base` otherwise.
    pub fn parse(
        text: &str,
        name: &str,
        base: &Path,
        out_dir: Option<&Path>,
    ) -> Result<Self, ConfigError> {
        let mut entries = Entries::parse(text)?;
        let input = |p: String| resolve(base, p);
        let output = |p: String| resolve(out_dir.unwrap_or(base), p);

        let has_synth = entries.values.keys().any(|k| k.starts_with("synth."));
        let source = match (entries.take("panel_path"), has_synth) {
            (Some(_), true) => {
                return Err(ConfigError::Invalid {
                    key: "panel_path".into(),
                    message: "give either panel_path or synth.* keys, not both".into(),
                })
            }
            (None, false) => return Err(ConfigError::Missing("panel_path")),
            (Some(path), false) => {
                if entries.contains("panel_out") {
                    return Err(ConfigError::Invalid {
                        key: "panel_out".into(),
                        message: "only valid with a synthetic panel".into(),
                    });
                }
                let benchmark_column = entries
                    .take("benchmark_column")
                    .ok_or(ConfigError::Missing("benchmark_column"))?;
                let index_columns = entries
                    .take("index_columns")
                    .ok_or(ConfigError::Missing("index_columns"))?;
                let index_columns: Vec<String> =
                    split_list(&index_columns).map(str::to_string).collect();
                if index_columns.is_empty() || index_columns.iter().any(String::is_empty) {
                    return Err(ConfigError::Invalid {
                        key: "index_columns".into(),
                        message: "needs at least one non-empty column name".into(),
                    });
                }
                if index_columns.contains(&benchmark_column) {
                    return Err(ConfigError::Invalid {
                        key: "index_columns".into(),
                        message: format!("includes the benchmark column `{benchmark_column}`"),
                    });
                }
                DataSource::Panel {
                    path: input(path),
                    benchmark_column,
                    index_columns,
                }
            }
            (None, true) => {
                for key in ["benchmark_column", "index_columns"] {
                    if entries.contains(key) {
                        return Err(ConfigError::Invalid {
                            key: key.into(),
                            message: "not used with a synthetic panel".into(),
                        });
                    }
                }
                DataSource::Synth {
                    spec: synth_spec(&mut entries)?,
                    panel_out: entries.take("panel_out").map(output),
                }
            }
        };

        let bound_mode = match entries.take("bound_mode").as_deref() {
            None | Some("long-only") => BoundMode::LongOnly,
            Some("long-short") => BoundMode::LongShort,
            Some("explicit") => BoundMode::Explicit {
                lower: entries
                    .take_list("lower_bounds")?
                    .ok_or(ConfigError::Missing("lower_bounds"))?,
                upper: entries
                    .take_list("upper_bounds")?
                    .ok_or(ConfigError::Missing("upper_bounds"))?,
            },
            Some(other) => {
                return Err(ConfigError::Invalid {
                    key: "bound_mode".into(),
                    message: format!("`{other}` is not one of long-only, long-short, explicit"),
                })
            }
        };
        for key in ["lower_bounds", "upper_bounds"] {
            if entries.contains(key) {
                return Err(ConfigError::Invalid {
                    key: key.into(),
                    message: "only valid with bound_mode = explicit".into(),
                });
            }
        }

        let config = Self {
            name: name.to_string(),
            source,
            lookback_days: entries.take_parsed("lookback_days")?.unwrap_or(91),
            rebalance_every_days: entries.take_parsed("rebalance_every_days")?,
            sigma_annual: entries.take_parsed("sigma_annual")?,
            bound_mode,
            cost_spread: entries.take_parsed("cost_spread")?.unwrap_or(0.0005),
            start: entries.take_parsed("start")?,
            end: entries.take_parsed("end")?,
            report_path: output(
                entries
                    .take("report_path")
                    .unwrap_or_else(|| format!("{name}.report.txt")),
            ),
            series_path: output(
                entries
                    .take("series_path")
                    .unwrap_or_else(|| format!("{name}.series.csv")),
            ),
            compare_static_mean: entries.take_parsed("compare_static_mean")?.unwrap_or(true),
        };
        if config.report_path.extension().is_some_and(|e| e == "json") {
            return Err(ConfigError::Invalid {
                key: "report_path".into(),
                message: "the `.json` name is reserved for the machine-readable report".into(),
            });
        }
        debug_assert!(
            entries.values.is_empty(),
            "unconsumed keys: {:?}",
            entries.values
        );
        Ok(config)
    }
}

fn synth_spec(entries: &mut Entries) -> Result<SynthSpec, ConfigError> {
    let seed = entries
        .take_parsed("synth.seed")?
        .ok_or(ConfigError::Missing("synth.seed"))?;
    let days = entries
        .take_parsed("synth.days")?
        .ok_or(ConfigError::Missing("synth.days"))?;
    let n: usize = entries
        .take_parsed("synth.n_indices")?
        .ok_or(ConfigError::Missing("synth.n_indices"))?;
    let mut spec = SynthSpec::uniform(seed, days, n, 0.0, 0.0, 0.0);
    if let Some(v) = entries.take_parsed("synth.benchmark_drift")? {
        spec.benchmark_drift = v;
    }
    if let Some(v) = entries.take_parsed("synth.benchmark_vol")? {
        spec.benchmark_vol = v;
    }
    for (key, field) in [
        ("synth.excess_drift", &mut spec.excess_drift),
        ("synth.excess_vol", &mut spec.excess_vol),
        ("synth.excess_ar1", &mut spec.excess_ar1),
    ] {
        if let Some(values) = entries.take_list(key)? {
            *field = match values.as_slice() {
                [single] => vec![*single; n],
                _ => values,
            };
        }
    }
    if let Some(text) = entries.take("synth.correlation") {
        let rows: Vec<Vec<f64>> = text
            .split(';')
            .map(|row| parse_list("synth.correlation", row))
            .collect::<Result<_, _>>()?;
        spec = match rows.as_slice() {
            [row] if row.len() == 1 => spec.with_equicorrelation(row[0]),
            _ => SynthSpec {
                correlation: rows,
                ..spec
            },
        };
    }
    if let Some(date) = entries.take_parsed("synth.start_date")? {
        spec.start = date;
    }
    spec.validate().map_err(|e| ConfigError::Invalid {
        key: "synth".into(),
        message: e.to_string(),
    })?;
    Ok(spec)
}

fn resolve(base: &Path, path: String) -> PathBuf {
    let path = PathBuf::from(path);
    if path.is_absolute() {
        path
    } else {
        base.join(path)
    }
}

fn split_list(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim)
}

fn parse_list(key: &str, text: &str) -> Result<Vec<f64>, ConfigError> {
    split_list(text)
        .map(|item| {
            item.parse::<f64>().map_err(|e| ConfigError::Invalid {
                key: key.into(),
                message: format!("`{item}`: {e}"),
            })
        })
        .collect()
}

struct Entries {
    values: BTreeMap<String, String>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        let mut lines_of: BTreeMap<String, usize> = BTreeMap::new();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, found `{trimmed}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    key: key.into(),
                    line,
                });
            }
            if value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("key `{key}` has an empty value"),
                });
            }
            if let Some(&first) = lines_of.get(key) {
                return Err(ConfigError::Duplicate {
                    key: key.into(),
                    first,
                    second: line,
                });
            }
            lines_of.insert(key.to_string(), line);
            values.insert(key.to_string(), value.to_string());
        }
        Ok(Self { values })
    }

    fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    fn take_parsed<T>(&mut self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.take(key)
            .map(|v| {
                v.parse::<T>().map_err(|e| ConfigError::Invalid {
                    key: key.into(),
                    message: format!("`{v}`: {e}"),
                })
            })
            .transpose()
    }

    fn take_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.take(key).map(|v| parse_list(key, &v)).transpose()
    }
}
