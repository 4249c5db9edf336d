//! Seeded synthetic universes with AR(1) excess returns.
//!
//! The benchmark follows a geometric random walk. Each index is the benchmark
//! times an excess ratio compounded from its own AR(1) daily excess returns, so
//! the excess dynamics visible to [`crate::signal`] are exactly the simulated
//! ones. Dates are consecutive calendar days.

use chrono::{Days, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::timeseries::{AlignedPanel, PriceSeries};

const INITIAL_LEVEL: f64 = 100.0;
const CORRELATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    /// Number of observations per series.
    pub days: usize,
    pub n_indices: usize,
    /// Mean daily arithmetic benchmark return.
    pub benchmark_drift: f64,
    pub benchmark_vol: f64,
    /// Per-index mean daily excess return.
    pub excess_drift: Vec<f64>,
    pub excess_vol: Vec<f64>,
    pub excess_ar1: Vec<f64>,
    /// Correlation of the excess-return shocks, `n_indices × n_indices`.
    pub correlation: Vec<Vec<f64>>,
    pub start: NaiveDate,
}

impl SynthSpec {
    /// Identical independent indices with the given excess parameters.
    pub fn uniform(
        seed: u64,
        days: usize,
        n_indices: usize,
        excess_drift: f64,
        excess_vol: f64,
        excess_ar1: f64,
    ) -> Self {
        Self {
            seed,
            days,
            n_indices,
            benchmark_drift: 0.0003,
            benchmark_vol: 0.01,
            excess_drift: vec![excess_drift; n_indices],
            excess_vol: vec![excess_vol; n_indices],
            excess_ar1: vec![excess_ar1; n_indices],
            correlation: identity(n_indices),
            start: NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date"),
        }
    }

    /// Same correlation `rho` between every pair of shocks.
    pub fn with_equicorrelation(mut self, rho: f64) -> Self {
        let n = self.n_indices;
        self.correlation = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { rho }).collect())
            .collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_indices;
        if self.days < 2 {
            return Err(Error::Validation(format!(
                "need at least 2 days, got {}",
                self.days
            )));
        }
        if n == 0 {
            return Err(Error::Validation("need at least one index".into()));
        }
        for (label, v) in [
            ("excess_drift", &self.excess_drift),
            ("excess_vol", &self.excess_vol),
            ("excess_ar1", &self.excess_ar1),
        ] {
            if v.len() != n {
                return Err(Error::Validation(format!(
                    "{label} has {} entries for {n} indices",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation(format!("{label} must be finite")));
            }
        }
        if !(self.benchmark_drift.is_finite() && self.benchmark_vol.is_finite()) {
            return Err(Error::Validation(
                "benchmark parameters must be finite".into(),
            ));
        }
        if self.benchmark_vol < 0.0 || self.excess_vol.iter().any(|&v| v < 0.0) {
            return Err(Error::Validation("volatilities must be nonnegative".into()));
        }
        if let Some(phi) = self.excess_ar1.iter().find(|p| p.abs() >= 1.0) {
            return Err(Error::Validation(format!(
                "|ar1| must be below 1, got {phi}"
            )));
        }
        if self.correlation.len() != n || self.correlation.iter().any(|r| r.len() != n) {
            return Err(Error::Validation(format!("correlation must be {n}×{n}")));
        }
        for i in 0..n {
            if (self.correlation[i][i] - 1.0).abs() > CORRELATION_TOL {
                return Err(Error::Validation("correlation diagonal must be 1".into()));
            }
            for j in 0..i {
                let c = self.correlation[i][j];
                if !c.is_finite() || (c - self.correlation[j][i]).abs() > CORRELATION_TOL {
                    return Err(Error::Validation("correlation must be symmetric".into()));
                }
            }
        }
        cholesky(&self.correlation)?;
        self.start
            .checked_add_days(Days::new(self.days as u64))
            .ok_or_else(|| Error::Validation("date range overflows".into()))?;
        Ok(())
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect()
}

/// Lower-triangular factor of a PSD matrix; columns with a vanishing pivot are
/// left at zero.
fn cholesky(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let pivot = a[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if pivot < -CORRELATION_TOL {
            return Err(Error::Validation(
                "correlation is not positive semidefinite".into(),
            ));
        }
        if pivot <= CORRELATION_TOL {
            for i in j + 1..n {
                let residual = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
                if residual.abs() > 1e-8 {
                    return Err(Error::Validation(
                        "correlation is not positive semidefinite".into(),
                    ));
                }
            }
            continue;
        }
        let d = pivot.sqrt();
        l[j][j] = d;
        for i in j + 1..n {
            l[i][j] = (a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>()) / d;
        }
    }
    Ok(l)
}

/// A generated panel together with the excess returns used to build it.
#[derive(Debug, Clone)]
pub struct SynthUniverse {
    pub panel: AlignedPanel,
    /// `excess_returns[i][t - 1]` is index `i`'s excess return from day `t - 1` to `t`.
    pub excess_returns: Vec<Vec<f64>>,
}

pub fn generate(spec: &SynthSpec) -> Result<AlignedPanel> {
    Ok(generate_universe(spec)?.panel)
}

pub fn generate_universe(spec: &SynthSpec) -> Result<SynthUniverse> {
    spec.validate()?;
    let n = spec.n_indices;
    let chol = cholesky(&spec.correlation)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };

    let dates: Vec<NaiveDate> = (0..spec.days as u64)
        .map(|k| spec.start + Days::new(k))
        .collect();
    let mut bench = Vec::with_capacity(spec.days);
    let mut ratios = vec![Vec::with_capacity(spec.days); n];
    let mut excess = vec![Vec::with_capacity(spec.days - 1); n];
    bench.push(INITIAL_LEVEL);
    for r in &mut ratios {
        r.push(1.0);
    }

    let drift_correction = spec.benchmark_drift - 0.5 * spec.benchmark_vol * spec.benchmark_vol;
    let mut z = vec![0.0; n];
    let correlated = |z: &mut [f64], normal: &mut dyn FnMut() -> f64| {
        let raw: Vec<f64> = (0..n).map(|_| normal()).collect();
        for i in 0..n {
            z[i] = (0..=i).map(|k| chol[i][k] * raw[k]).sum();
        }
    };

    // pre-sample state drawn from the stationary distribution
    correlated(&mut z, &mut normal);
    let mut state: Vec<f64> = (0..n)
        .map(|i| {
            let phi = spec.excess_ar1[i];
            spec.excess_drift[i] + spec.excess_vol[i] * z[i] / (1.0 - phi * phi).sqrt()
        })
        .collect();

    for t in 1..spec.days {
        let shock = normal();
        let prev = bench[t - 1];
        bench.push(prev * (drift_correction + spec.benchmark_vol * shock).exp());
        correlated(&mut z, &mut normal);
        for i in 0..n {
            let mu = spec.excess_drift[i];
            let alpha = mu + spec.excess_ar1[i] * (state[i] - mu) + spec.excess_vol[i] * z[i];
            state[i] = alpha;
            excess[i].push(alpha);
            let prev = ratios[i][t - 1];
            ratios[i].push(prev * (1.0 + alpha));
        }
    }

    let indices = ratios
        .iter()
        .enumerate()
        .map(|(i, ratio)| {
            let name = format!("idx{}", i + 1);
            if let Some(t) = ratio.iter().position(|&r| !(r > 0.0 && r.is_finite())) {
                return Err(Error::Validation(format!(
                    "{name} level is not positive on day {t}; excess volatility too large"
                )));
            }
            let levels = ratio.iter().zip(&bench).map(|(r, b)| r * b).collect();
            PriceSeries::from_parts(name, dates.clone(), levels)
        })
        .collect::<Result<Vec<_>>>()?;
    let benchmark = PriceSeries::from_parts("benchmark", dates, bench)?;
    Ok(SynthUniverse {
        panel: AlignedPanel::new(benchmark, indices)?,
        excess_returns: excess,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::{daily_excess_returns, excess_ratio, write_panel};

    fn lag1_autocorrelation(x: &[f64]) -> f64 {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let num: f64 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
        let den: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
        num / den
    }

    #[test]
    fn zero_vol_zero_drift_is_constant() {
        let mut spec = SynthSpec::uniform(1, 50, 3, 0.0, 0.0, 0.3);
        spec.benchmark_drift = 0.0;
        spec.benchmark_vol = 0.0;
        let panel = generate(&spec).unwrap();
        for s in panel.series() {
            assert!(s.levels().iter().all(|&v| v == INITIAL_LEVEL));
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let spec = SynthSpec::uniform(42, 300, 4, 0.0001, 0.003, 0.1).with_equicorrelation(0.3);
        let write = |p: &AlignedPanel| {
            let mut buf = Vec::new();
            write_panel(p, &mut buf).unwrap();
            buf
        };
        assert_eq!(
            write(&generate(&spec).unwrap()),
            write(&generate(&spec).unwrap())
        );
        let other = SynthSpec {
            seed: 43,
            ..spec.clone()
        };
        assert_ne!(
            write(&generate(&spec).unwrap()),
            write(&generate(&other).unwrap())
        );
    }

    #[test]
    fn recovers_ar1_coefficient() {
        let spec = SynthSpec::uniform(7, 10_001, 1, 0.0, 0.004, 0.2);
        let u = generate_universe(&spec).unwrap();
        let rho = lag1_autocorrelation(&u.excess_returns[0]);
        assert!((rho - 0.2).abs() < 0.05, "{rho}");
    }

    #[test]
    fn level_round_trip_matches_draws() {
        let spec = SynthSpec::uniform(9, 500, 3, 0.0002, 0.005, -0.4).with_equicorrelation(-0.2);
        let u = generate_universe(&spec).unwrap();
        for (i, idx) in u.panel.indices().iter().enumerate() {
            let ratio = excess_ratio(idx, u.panel.benchmark()).unwrap();
            let alpha = daily_excess_returns(&ratio).unwrap();
            for (got, want) in alpha.values().iter().zip(&u.excess_returns[i]) {
                assert!(
                    (got - want).abs() <= 1e-10 * want.abs().max(1e-3),
                    "{got} {want}"
                );
            }
        }
    }

    #[test]
    fn rejects_invalid_specs() {
        let base = SynthSpec::uniform(1, 10, 2, 0.0, 0.01, 0.1);
        let bad = [
            SynthSpec {
                days: 1,
                ..base.clone()
            },
            SynthSpec {
                excess_ar1: vec![1.0, 0.0],
                ..base.clone()
            },
            SynthSpec {
                excess_vol: vec![-0.1, 0.0],
                ..base.clone()
            },
            SynthSpec {
                excess_drift: vec![0.0],
                ..base.clone()
            },
            base.clone().with_equicorrelation(1.5),
            SynthSpec {
                correlation: vec![vec![1.0, 0.2], vec![0.3, 1.0]],
                ..base.clone()
            },
        ];
        for spec in bad {
            assert!(
                matches!(generate(&spec), Err(Error::Validation(_))),
                "{spec:?}"
            );
        }
        // perfectly correlated shocks are PSD and allowed
        assert!(generate(&base.with_equicorrelation(1.0)).is_ok());
    }
}
