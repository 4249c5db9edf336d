//! Windowed mean and covariance of daily excess returns.
//!
//! Row and column 0 belong to the benchmark and are identically zero: the
//! benchmark has no excess return over itself.

use chrono::{Days, NaiveDate};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::timeseries::{daily_excess_returns, excess_ratio, AlignedPanel};

/// Eigenvalues of the covariance below `-PSD_TOLERANCE` are rejected; those in
/// `(-PSD_TOLERANCE, 0)` are lifted to zero with a diagonal shift.
pub const PSD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ExcessStats {
    as_of: NaiveDate,
    names: Vec<String>,
    delta: DVector<f64>,
    omega: DMatrix<f64>,
    window_days: u32,
    sample_count: usize,
}

impl ExcessStats {
    /// Validates the benchmark convention, symmetry and positive semidefiniteness.
    pub fn new(
        as_of: NaiveDate,
        names: Vec<String>,
        delta: DVector<f64>,
        omega: DMatrix<f64>,
        window_days: u32,
        sample_count: usize,
    ) -> Result<Self> {
        let dim = delta.len();
        if dim < 2 || names.len() != dim || omega.shape() != (dim, dim) {
            return Err(Error::Dimension(format!(
                "need n+1 >= 2 consistent entries: {} names, delta {}, omega {:?}",
                names.len(),
                dim,
                omega.shape()
            )));
        }
        if sample_count < 2 {
            return Err(Error::InsufficientData {
                what: "excess-return observations".into(),
                found: sample_count,
                needed: 2,
            });
        }
        if delta.iter().chain(omega.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite excess statistics".into()));
        }
        if delta[0] != 0.0
            || omega
                .row(0)
                .iter()
                .chain(omega.column(0).iter())
                .any(|&v| v != 0.0)
        {
            return Err(Error::Validation(
                "benchmark mean and covariance entries must be zero".into(),
            ));
        }
        let scale = omega.amax().max(f64::MIN_POSITIVE);
        if (&omega - omega.transpose()).amax() > 1e-12 * scale {
            return Err(Error::Validation("covariance is not symmetric".into()));
        }
        let omega = repair_psd(omega)?;
        Ok(Self {
            as_of,
            names,
            delta,
            omega,
            window_days,
            sample_count,
        })
    }

    pub fn as_of(&self) -> NaiveDate {
        self.as_of
    }

    /// Labels, benchmark first.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Daily mean excess returns; entry 0 is the benchmark.
    pub fn delta(&self) -> &DVector<f64> {
        &self.delta
    }

    /// Daily excess-return covariance; row/column 0 is the benchmark.
    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn window_days(&self) -> u32 {
        self.window_days
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }
}

/// Daily excess returns of every index against the benchmark, indexed by panel
/// position. Position 0 has no return.
#[derive(Debug, Clone)]
pub struct ExcessReturns {
    dates: Vec<NaiveDate>,
    names: Vec<String>,
    // alphas[i][k - 1] is index i's excess return dated at panel position k.
    alphas: Vec<Vec<f64>>,
}

impl ExcessReturns {
    pub fn from_panel(panel: &AlignedPanel) -> Result<Self> {
        let alphas = panel
            .indices()
            .iter()
            .map(|s| {
                let ratio = excess_ratio(s, panel.benchmark())?;
                Ok(daily_excess_returns(&ratio)?.values().to_vec())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dates: panel.dates().to_vec(),
            names: panel.names(),
            alphas,
        })
    }

    /// Statistics over return observations dated in `(as_of - window_days, as_of]`.
    pub fn stats_at(&self, as_of: NaiveDate, window_days: u32) -> Result<ExcessStats> {
        let end = self
            .dates
            .binary_search(&as_of)
            .map_err(|_| Error::UnknownDate(as_of))?;
        let cutoff = as_of
            .checked_sub_days(Days::new(u64::from(window_days)))
            .ok_or_else(|| Error::Validation("window start before calendar range".into()))?;
        // first return position strictly after the cutoff; returns start at position 1
        let start = self.dates.partition_point(|d| *d <= cutoff).max(1);
        let count = (end + 1).saturating_sub(start);
        if count < 2 {
            return Err(Error::InsufficientData {
                what: format!("excess returns in the {window_days}-day window ending {as_of}"),
                found: count,
                needed: 2,
            });
        }

        let n = self.alphas.len();
        let samples: Vec<&[f64]> = self.alphas.iter().map(|a| &a[start - 1..end]).collect();
        let count_f = count as f64;
        let means: Vec<f64> = samples
            .iter()
            .map(|s| s.iter().sum::<f64>() / count_f)
            .collect();

        let mut delta = DVector::zeros(n + 1);
        let mut omega = DMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            delta[i + 1] = means[i];
            for j in 0..=i {
                let cov = samples[i]
                    .iter()
                    .zip(samples[j])
                    .map(|(a, b)| (a - means[i]) * (b - means[j]))
                    .sum::<f64>()
                    / count_f;
                omega[(i + 1, j + 1)] = cov;
                omega[(j + 1, i + 1)] = cov;
            }
        }
        ExcessStats::new(as_of, self.names.clone(), delta, omega, window_days, count)
    }
}

/// Mean excess return vector and population covariance over the calendar window
/// `(as_of - window_days, as_of]`.
pub fn compute_excess_stats(
    panel: &AlignedPanel,
    as_of: NaiveDate,
    window_days: u32,
) -> Result<ExcessStats> {
    if panel.position(as_of).is_none() {
        return Err(Error::UnknownDate(as_of));
    }
    ExcessReturns::from_panel(panel)?.stats_at(as_of, window_days)
}

fn repair_psd(mut omega: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = omega.nrows() - 1;
    let block = omega.view((1, 1), (n, n)).clone_owned();
    let min_eigen = SymmetricEigen::new(block).eigenvalues.min();
    if min_eigen < -PSD_TOLERANCE {
        return Err(Error::Validation(format!(
            "covariance has eigenvalue {min_eigen:e} below -{PSD_TOLERANCE:e}"
        )));
    }
    if min_eigen < 0.0 {
        for i in 1..=n {
            omega[(i, i)] -= min_eigen;
        }
    }
    Ok(omega)
}
