//! Excess-return timing toolkit.
//!
//! The pipeline runs from a date-aligned panel of total-return index levels
//! ([`timeseries`]) through windowed excess-return statistics ([`signal`]) and
//! a two-stage tracking-error-constrained allocation ([`optimizer`]) into a
//! drift-aware rebalancing engine ([`backtest`]) whose output feeds the
//! performance statistics in [`analytics`]. [`datagen`] produces seeded
//! synthetic universes with controllable excess-return momentum.

pub mod analytics;
pub mod backtest;
pub mod datagen;
mod error;
pub mod optimizer;
pub mod signal;
pub mod timeseries;

pub use analytics::{PerformanceReport, VsReference};
pub use backtest::{BacktestResult, StrategyConfig};
pub use datagen::{SynthSpec, SynthUniverse};
pub use error::{Error, Result};
pub use optimizer::{BoundSet, SolveOutcome, StageStatus, WeightVector};
pub use signal::ExcessStats;
pub use timeseries::{AlignedPanel, PriceSeries, ReturnSeries};

/// Calendar days per year used by every annualization.
pub const DAYS_PER_YEAR: f64 = 365.25;
