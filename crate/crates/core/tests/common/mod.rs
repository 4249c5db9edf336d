#![allow(dead_code)]

use chrono::{Days, NaiveDate};
use nalgebra::{DMatrix, DVector};
use xsalpha_core::{AlignedPanel, ExcessStats, PriceSeries};

pub fn day(k: u64) -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 1, 1).unwrap() + Days::new(k)
}

/// Panel on consecutive days whose indices carry exactly the given daily
/// excess returns on top of the benchmark path.
pub fn panel_from_excess(bench_returns: &[f64], excess: &[Vec<f64>]) -> AlignedPanel {
    let days = bench_returns.len() + 1;
    let dates: Vec<NaiveDate> = (0..days as u64).map(day).collect();
    let mut bench = vec![100.0];
    for r in bench_returns {
        let last = *bench.last().unwrap();
        bench.push(last * (1.0 + r));
    }
    let indices = excess
        .iter()
        .enumerate()
        .map(|(i, alpha)| {
            let mut ratio = 1.0;
            let mut levels = vec![bench[0]];
            for (t, a) in alpha.iter().enumerate() {
                ratio *= 1.0 + a;
                levels.push(bench[t + 1] * ratio);
            }
            PriceSeries::from_parts(format!("idx{}", i + 1), dates.clone(), levels).unwrap()
        })
        .collect();
    let benchmark = PriceSeries::from_parts("benchmark", dates, bench).unwrap();
    AlignedPanel::new(benchmark, indices).unwrap()
}

/// Statistics with a zero benchmark row and column around the index block.
pub fn stats(delta_indices: &[f64], omega_indices: &DMatrix<f64>) -> ExcessStats {
    let n = delta_indices.len();
    let mut delta = DVector::zeros(n + 1);
    let mut omega = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        delta[i + 1] = delta_indices[i];
        for j in 0..n {
            omega[(i + 1, j + 1)] = omega_indices[(i, j)];
        }
    }
    let names = std::iter::once("benchmark".to_string())
        .chain((1..=n).map(|i| format!("idx{i}")))
        .collect();
    ExcessStats::new(day(0), names, delta, omega, 91, 91).unwrap()
}

/// Symmetric PSD matrix `B Bᵀ + ridge·I` from a flat list of factor entries.
pub fn psd(n: usize, factors: &[f64], ridge: f64) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |i, j| factors[i * n + j]);
    let m = &b * b.transpose() + DMatrix::identity(n, n) * ridge;
    (&m + m.transpose()) * 0.5
}
