//! Exhaustive grid search over index weights, for checking [`super::solve`]
//! on small universes. The benchmark takes whatever weight is left over.

use crate::error::{Error, Result};
use crate::signal::ExcessStats;

use super::{
    daily_te_budget, te_variance, validate_inputs, BoundSet, SolveOutcome, StageStatus,
    WeightVector,
};

const MAX_INDICES: usize = 4;
const MAX_INTERVALS: f64 = 200.0;

/// Grid optimum: largest `x·Δ`, then smallest `x'Ωx` among ties. At most four
/// indices and 200 grid intervals per axis.
pub fn brute_force_solve(
    stats: &ExcessStats,
    bounds: &BoundSet,
    sigma_annual: f64,
    grid_step: f64,
) -> Result<SolveOutcome> {
    let n = stats.delta().len() - 1;
    if n > MAX_INDICES {
        return Err(Error::Dimension(format!(
            "grid oracle handles at most {MAX_INDICES} indices, got {n}"
        )));
    }
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(Error::Validation(format!(
            "grid step must be positive, got {grid_step}"
        )));
    }
    validate_inputs(stats, bounds, sigma_annual)?;

    let axes = (1..=n)
        .map(|i| axis(bounds.lower()[i], bounds.upper()[i], grid_step))
        .collect::<Result<Vec<_>>>()?;
    let budget = daily_te_budget(sigma_annual);
    let delta = stats.delta();
    let tie_tol = 1e-12 * delta.amax();
    let (bench_lo, bench_hi) = (bounds.lower()[0], bounds.upper()[0]);

    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    let mut counter = vec![0usize; n];
    let mut weights = vec![0.0; n + 1];
    let total: usize = axes.iter().map(Vec::len).product();
    for _ in 0..total {
        for i in 0..n {
            weights[i + 1] = axes[i][counter[i]];
        }
        let invested: f64 = weights[1..].iter().sum();
        weights[0] = 1.0 - invested;
        if weights[0] >= bench_lo - 1e-12 && weights[0] <= bench_hi + 1e-12 {
            let variance = te_variance(stats.omega(), &weights);
            if variance <= budget {
                let ret: f64 = weights.iter().zip(delta.iter()).map(|(w, d)| w * d).sum();
                let better = match &best {
                    None => true,
                    Some((m, v, _)) => ret > m + tie_tol || (ret >= m - tie_tol && variance < *v),
                };
                if better {
                    best = Some((ret, variance, weights.clone()));
                }
            }
        }
        // odometer increment
        for i in 0..n {
            counter[i] += 1;
            if counter[i] < axes[i].len() {
                break;
            }
            counter[i] = 0;
        }
    }

    let (max_excess_return, realized_te_variance, weights) = best.ok_or_else(|| {
        Error::Infeasible("no grid point satisfies the bounds and tracking-error budget".into())
    })?;
    let status = StageStatus::Grid { points: total };
    Ok(SolveOutcome {
        weights: WeightVector::new(stats.names().to_vec(), weights)?,
        max_excess_return,
        realized_te_variance,
        stage1_status: status,
        stage2_status: status,
    })
}

/// Multiples of `step` inside `[lower, upper]` plus both endpoints.
fn axis(lower: f64, upper: f64, step: f64) -> Result<Vec<f64>> {
    if (upper - lower) / step > MAX_INTERVALS + 1e-9 {
        return Err(Error::Dimension(format!(
            "grid step {step} gives more than {MAX_INTERVALS} intervals on [{lower}, {upper}]"
        )));
    }
    let first = (lower / step).ceil() as i64;
    let last = (upper / step).floor() as i64;
    let mut points = vec![lower];
    points.extend(
        (first..=last)
            .map(|k| k as f64 * step)
            .filter(|&v| v > lower && v < upper),
    );
    if upper > lower {
        points.push(upper);
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::tests::stats;

    #[test]
    fn axis_includes_zero_and_endpoints() {
        let a = axis(-0.25, 0.5, 0.2).unwrap();
        assert_eq!(a.first(), Some(&-0.25));
        assert_eq!(a.last(), Some(&0.5));
        assert!(a.contains(&0.0));
        assert_eq!(axis(0.0, 0.0, 0.1).unwrap(), vec![0.0]);
        assert!(axis(0.0, 1.0, 0.001).is_err());
    }

    #[test]
    fn single_index_example() {
        let s = stats(&[0.0, 0.001], &[&[0.0, 0.0], &[0.0, 1e-4]]);
        let sigma = (4e-4_f64 * crate::DAYS_PER_YEAR).sqrt();
        let out = brute_force_solve(&s, &BoundSet::long_only(1), sigma, 0.01).unwrap();
        assert_eq!(out.weights.weights(), &[0.0, 1.0]);
        assert_eq!(out.max_excess_return, 0.001);
    }

    #[test]
    fn zero_delta_gives_zero_variance() {
        let s = stats(
            &[0.0, 0.0, 0.0],
            &[&[0.0, 0.0, 0.0], &[0.0, 1e-4, 0.0], &[0.0, 0.0, 1e-4]],
        );
        let out = brute_force_solve(&s, &BoundSet::long_short(2), 0.04, 0.1).unwrap();
        assert_eq!(out.max_excess_return, 0.0);
        assert_eq!(out.realized_te_variance, 0.0);
    }

    #[test]
    fn empty_grid_is_infeasible() {
        let s = stats(&[0.0, 0.001], &[&[0.0, 0.0], &[0.0, 1e-4]]);
        let b = BoundSet::new(vec![0.0, 0.0], vec![0.5, 0.3]).unwrap();
        assert!(matches!(
            brute_force_solve(&s, &b, 0.04, 0.05),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn rejects_large_universes() {
        let delta = vec![0.0; 6];
        let rows: Vec<Vec<f64>> = vec![vec![0.0; 6]; 6];
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let s = stats(&delta, &refs);
        assert!(matches!(
            brute_force_solve(&s, &BoundSet::long_only(5), 0.04, 0.1),
            Err(Error::Dimension(_))
        ));
    }
}
