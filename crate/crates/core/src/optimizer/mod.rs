//! Two-stage tracking-error-constrained allocation.
//!
//! Over the admissible set
//!
//! ```text
//!     S = { x : sum x_i = 1,  l_i <= x_i <= u_i,  x'Ωx <= σ_daily² }
//! ```
//!
//! stage one finds the largest window excess return `m_T = max x·Δ` and stage
//! two returns the minimum-variance point among `{x in S : x·Δ >= m_T - ε}`.
//! Entry 0 is the benchmark; its mean and covariance entries are zero, so
//! benchmark weight never contributes to `x'Ωx`.
//!
//! Both stages run on a rescaled problem (`Δ / max|Δ|`, `Ω / σ_daily²`), so
//! the tracking-error budget is the unit ellipsoid and `ε` is relative to the
//! largest mean excess return. The linear-program optimum comes from a greedy
//! fill in decreasing order of `Δ` (lowest position first among equal means).
//! If the least-variance point with that return fits the budget, the budget
//! does not bind. Otherwise stage one searches the return level at which the
//! least attainable variance meets the budget.

mod oracle;
mod qp;

use std::fmt;
use std::time::Duration;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::signal::ExcessStats;
use crate::DAYS_PER_YEAR;

pub use oracle::brute_force_solve;

use qp::{Budget, QpFailure, Row};

/// Tie-set relaxation of stage two, in units of the largest `|Δ_i|`.
pub const TIE_RELAXATION: f64 = 1e-9;
/// Per-stage iteration allowance.
pub const MAX_ITERATIONS: usize = 10_000;
/// Per-stage wall-clock allowance.
pub const MAX_STAGE_TIME: Duration = Duration::from_secs(5);

const FEASIBILITY_TOL: f64 = 1e-8;
const TE_TOL: f64 = 1e-10;
/// Stage-one gap between the bracket top and the best feasible rescaled return
/// at which the search stops.
const RETURN_TOL: f64 = 1e-12;
const MAX_BRACKET_STEPS: usize = 200;

/// Per-position weight limits, benchmark first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoundSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.len() < 2 {
            return Err(Error::Dimension(format!(
                "bounds need n+1 >= 2 entries on both sides, got {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite()) || l > u {
                return Err(Error::Validation(format!("bound {i}: [{l}, {u}] is empty")));
            }
            if i > 0 && (*l > 0.0 || *u < 0.0) {
                return Err(Error::Validation(format!(
                    "index bound {i}: [{l}, {u}] must contain 0"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Every index in `[0, 1]`, benchmark in `[0, 1]`.
    pub fn long_only(n_indices: usize) -> Self {
        Self {
            lower: vec![0.0; n_indices + 1],
            upper: vec![1.0; n_indices + 1],
        }
    }

    /// Every index in `[-1, 1]`, benchmark in `[0, 1]`.
    pub fn long_short(n_indices: usize) -> Self {
        let mut lower = vec![-1.0; n_indices + 1];
        lower[0] = 0.0;
        Self {
            lower,
            upper: vec![1.0; n_indices + 1],
        }
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn contains(&self, weights: &[f64], tol: f64) -> bool {
        weights.len() == self.len()
            && weights
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(w, (l, u))| *w >= l - tol && *w <= u + tol)
    }

    /// Rejects bounds that admit no fully invested allocation, and bounds that
    /// exclude the all-benchmark allocation.
    pub fn check_feasible(&self) -> Result<()> {
        let low: f64 = self.lower.iter().sum();
        let high: f64 = self.upper.iter().sum();
        if low > 1.0 + 1e-12 || high < 1.0 - 1e-12 {
            return Err(Error::Infeasible(format!(
                "no allocation summing to 1 fits the bounds (sum of lower {low}, upper {high})"
            )));
        }
        if self.lower[0] > 1.0 || self.upper[0] < 1.0 {
            return Err(Error::Infeasible(format!(
                "the all-benchmark allocation violates benchmark bounds [{}, {}]",
                self.lower[0], self.upper[0]
            )));
        }
        Ok(())
    }
}

/// Portfolio fractions, benchmark first, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector {
    names: Vec<String>,
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(names: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if names.len() != weights.len() || names.is_empty() {
            return Err(Error::Dimension(format!(
                "{} names for {} weights",
                names.len(),
                weights.len()
            )));
        }
        let total: f64 = weights.iter().sum();
        if !total.is_finite() || (total - 1.0).abs() > FEASIBILITY_TOL {
            return Err(Error::Validation(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { names, weights })
    }

    /// All weight on the benchmark.
    pub fn benchmark_only(names: Vec<String>) -> Self {
        let mut weights = vec![0.0; names.len()];
        weights[0] = 1.0;
        Self { names, weights }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.weights[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StageStatus {
    /// Closed-form answer; no iterations needed.
    Trivial,
    /// Converged active-set solve.
    Optimal { iterations: usize, te_active: bool },
    /// Exhaustive grid enumeration.
    Grid { points: usize },
}

impl fmt::Display for StageStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StageStatus::Trivial => f.write_str("trivial"),
            StageStatus::Optimal {
                iterations,
                te_active,
            } => write!(
                f,
                "optimal after {iterations} iterations (tracking-error budget {})",
                if *te_active { "active" } else { "inactive" }
            ),
            StageStatus::Grid { points } => write!(f, "grid optimum over {points} points"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveOutcome {
    pub weights: WeightVector,
    /// Largest attainable window mean excess return `m_T`, daily units.
    pub max_excess_return: f64,
    /// `x'Ωx` of the returned weights, daily variance.
    pub realized_te_variance: f64,
    pub stage1_status: StageStatus,
    pub stage2_status: StageStatus,
}

/// Daily tracking-error variance budget for an annual tracking error.
pub fn daily_te_budget(sigma_annual: f64) -> f64 {
    sigma_annual * sigma_annual / DAYS_PER_YEAR
}

/// `x'Ωx`.
pub fn te_variance(omega: &DMatrix<f64>, weights: &[f64]) -> f64 {
    let x = DVector::from_column_slice(weights);
    (x.transpose() * omega * &x)[(0, 0)]
}

/// Maximizes window excess return under the tracking-error budget, then
/// minimizes tracking-error variance among the maximizers.
pub fn solve(stats: &ExcessStats, bounds: &BoundSet, sigma_annual: f64) -> Result<SolveOutcome> {
    let problem = Problem::new(stats, bounds, sigma_annual)?;
    problem.solve()
}

pub(crate) fn validate_inputs(
    stats: &ExcessStats,
    bounds: &BoundSet,
    sigma_annual: f64,
) -> Result<()> {
    if !(sigma_annual.is_finite() && sigma_annual > 0.0) {
        return Err(Error::Validation(format!(
            "tracking error must be positive, got {sigma_annual}"
        )));
    }
    if bounds.len() != stats.delta().len() {
        return Err(Error::Dimension(format!(
            "{} bounds for {} positions",
            bounds.len(),
            stats.delta().len()
        )));
    }
    bounds.check_feasible()
}

struct Problem<'a> {
    stats: &'a ExcessStats,
    bounds: &'a BoundSet,
    sigma_annual: f64,
    delta_scale: f64,
    delta: DVector<f64>,
    omega: DMatrix<f64>,
    hessian: DMatrix<f64>,
    rows: Vec<Row>,
}

impl<'a> Problem<'a> {
    fn new(stats: &'a ExcessStats, bounds: &'a BoundSet, sigma_annual: f64) -> Result<Self> {
        validate_inputs(stats, bounds, sigma_annual)?;
        let budget = daily_te_budget(sigma_annual);
        let delta_scale = stats.delta().amax();
        let delta = if delta_scale > 0.0 {
            stats.delta() / delta_scale
        } else {
            stats.delta().clone()
        };
        let omega = stats.omega() / budget;
        let hessian = &omega * 2.0;
        Ok(Self {
            stats,
            bounds,
            sigma_annual,
            delta_scale,
            delta,
            omega,
            hessian,
            rows: polytope_rows(bounds),
        })
    }

    fn variance(&self, x: &DVector<f64>) -> f64 {
        (x.transpose() * &self.omega * x)[(0, 0)]
    }

    fn solve(&self) -> Result<SolveOutcome> {
        let n = self.delta.len();
        let mut stage1 = Budget::new(MAX_ITERATIONS, MAX_STAGE_TIME);
        let (vertex, vertex_return) = self.greedy_vertex();

        if self.delta_scale == 0.0 {
            // every admissible point attains m_T = 0; only stage two matters
            let start = benchmark_point(n);
            let (x, status) = self.stage_two(start, 0.0)?;
            return self.finish(x, 0.0, StageStatus::Trivial, status);
        }

        // budget inactive when the least-variance linear-program maximizer fits
        let (probe, probe_status) = self.stage_two(vertex.clone(), vertex_return)?;
        if self.variance(&probe) <= 1.0 {
            let status = StageStatus::Optimal {
                iterations: 0,
                te_active: false,
            };
            return self.finish(probe, vertex_return, status, probe_status);
        }

        let (peak, peak_return) =
            self.binding_stage_one(&vertex, vertex_return, self.variance(&probe), &mut stage1)?;
        let status = StageStatus::Optimal {
            iterations: stage1.used(),
            te_active: true,
        };
        let (x, stage2_status) = self.stage_two(peak, peak_return)?;
        self.finish(x, peak_return, status, stage2_status)
    }

    /// Maximizer of `x·Δ` over the polytope: start at the lower bounds and fill
    /// positions in decreasing order of `Δ` until the weights sum to one.
    fn greedy_vertex(&self) -> (DVector<f64>, f64) {
        let lower = self.bounds.lower();
        let upper = self.bounds.upper();
        let mut x = DVector::from_column_slice(lower);
        let mut remaining = 1.0 - lower.iter().sum::<f64>();
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&a, &b| self.delta[b].total_cmp(&self.delta[a]));
        for i in order {
            if remaining <= 0.0 {
                break;
            }
            let fill = (upper[i] - lower[i]).min(remaining);
            x[i] += fill;
            remaining -= fill;
        }
        let value = self.delta.dot(&x);
        (x, value)
    }

    /// Stage one when the tracking-error budget binds. The least variance
    /// `f(m)` among points returning at least `m` is convex and nondecreasing
    /// in `m`, and unique even where the minimizer is not, so the largest `m`
    /// with `f(m) <= 1` lies between the benchmark (`m = 0`) and the
    /// linear-program optimum. The search runs on `√f - 1`, which is close to
    /// linear in `m`. Any point over budget becomes feasible by shrinking it
    /// toward the benchmark, so both sides of the bracket supply candidates.
    fn binding_stage_one(
        &self,
        vertex: &DVector<f64>,
        vertex_return: f64,
        vertex_variance: f64,
        budget: &mut Budget,
    ) -> Result<(DVector<f64>, f64)> {
        let (mut lo, mut hi) = (0.0_f64, vertex_return);
        let (mut g_lo, mut g_hi) = (-1.0_f64, vertex_variance.sqrt() - 1.0);
        let mut best = self.shrink_to_budget(vertex.clone());
        let mut best_return = self.delta.dot(&best);
        let mut previous: Option<(f64, f64)> = None;
        let mut latest = (hi, g_hi);

        for _ in 0..MAX_BRACKET_STEPS {
            if hi - best_return <= RETURN_TOL {
                break;
            }
            let inside = |m: f64| m > lo && m < hi;
            let mut m = match previous {
                Some((m0, g0)) if latest.1 != g0 => {
                    latest.0 - latest.1 * (latest.0 - m0) / (latest.1 - g0)
                }
                _ => f64::NAN,
            };
            if !inside(m) {
                m = hi - g_hi * (hi - lo) / (g_hi - g_lo);
            }
            if !inside(m) {
                m = 0.5 * (lo + hi);
            }

            // feasible start: on the segment from the best point to the vertex
            let share = ((m - best_return) / (vertex_return - best_return)).clamp(0.0, 1.0);
            let start = &best + (vertex - &best) * share;
            let x = self.min_variance(start, m, budget, "stage 1")?;
            let g = self.variance(&x).sqrt() - 1.0;
            let candidate = if g <= 0.0 {
                lo = m;
                g_lo = g;
                x
            } else {
                hi = m;
                g_hi = g;
                self.shrink_to_budget(x)
            };
            let candidate_return = self.delta.dot(&candidate);
            if candidate_return > best_return {
                best = candidate;
                best_return = candidate_return;
            }
            previous = Some(latest);
            latest = (m, g);
        }
        Ok((best, best_return))
    }

    /// Moves `x` toward the benchmark until `x'Ωx <= 1`; returns scale by the
    /// same factor because the benchmark's mean excess return is zero.
    fn shrink_to_budget(&self, x: DVector<f64>) -> DVector<f64> {
        let v = self.variance(&x);
        if v <= 1.0 {
            return x;
        }
        let anchor = benchmark_point(x.len());
        let mut scale = 1.0 / v.sqrt();
        loop {
            let y = &anchor + (&x - &anchor) * scale;
            if self.variance(&y) <= 1.0 {
                return y;
            }
            scale *= 1.0 - 1e-15;
        }
    }

    /// Least-variance point of the polytope with `x·Δ >= floor`, from a
    /// feasible `start`.
    fn min_variance(
        &self,
        start: DVector<f64>,
        floor: f64,
        budget: &mut Budget,
        stage: &'static str,
    ) -> Result<DVector<f64>> {
        let mut rows = self.rows.clone();
        rows.push(Row {
            coeffs: self.delta.clone(),
            rhs: floor,
            equality: false,
            bound_of: None,
        });
        let zero = DVector::zeros(start.len());
        let warm: Vec<usize> = (0..rows.len()).collect();
        qp::minimize(&self.hessian, &zero, &rows, start, &warm, budget)
            .map(|sol| sol.x)
            .map_err(|f| convergence(stage, budget, f))
    }

    /// Minimum variance over the polytope intersected with
    /// `x·Δ >= target - TIE_RELAXATION`, starting from a feasible `start`.
    fn stage_two(&self, start: DVector<f64>, target: f64) -> Result<(DVector<f64>, StageStatus)> {
        let mut budget = Budget::new(MAX_ITERATIONS, MAX_STAGE_TIME);
        let floor = if self.delta_scale > 0.0 {
            target - TIE_RELAXATION
        } else {
            f64::NEG_INFINITY
        };
        let x = self.min_variance(start, floor, &mut budget, "stage 2")?;
        let status = StageStatus::Optimal {
            iterations: budget.used(),
            te_active: self.variance(&x) >= 1.0 - 1e-9,
        };
        Ok((x, status))
    }

    fn finish(
        &self,
        x: DVector<f64>,
        scaled_return: f64,
        stage1_status: StageStatus,
        stage2_status: StageStatus,
    ) -> Result<SolveOutcome> {
        let weights: Vec<f64> = x.iter().copied().collect();
        let variance = te_variance(self.stats.omega(), &weights);
        let total: f64 = weights.iter().sum();
        let budget = daily_te_budget(self.sigma_annual);
        if !self.bounds.contains(&weights, FEASIBILITY_TOL)
            || (total - 1.0).abs() > FEASIBILITY_TOL
            || variance > budget + TE_TOL
        {
            return Err(Error::Convergence {
                stage: "stage 2",
                iterations: 0,
                status: format!(
                    "solution violates constraints (sum {total}, variance {variance:e} vs budget {budget:e})"
                ),
                best: weights,
            });
        }
        Ok(SolveOutcome {
            weights: WeightVector::new(self.stats.names().to_vec(), weights)?,
            max_excess_return: scaled_return * self.delta_scale,
            realized_te_variance: variance,
            stage1_status,
            stage2_status,
        })
    }
}

fn benchmark_point(n: usize) -> DVector<f64> {
    let mut x = DVector::zeros(n);
    x[0] = 1.0;
    x
}

fn polytope_rows(bounds: &BoundSet) -> Vec<Row> {
    let n = bounds.len();
    let mut rows = vec![Row {
        coeffs: DVector::from_element(n, 1.0),
        rhs: 1.0,
        equality: true,
        bound_of: None,
    }];
    for i in 0..n {
        let (l, u) = (bounds.lower()[i], bounds.upper()[i]);
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        if l == u {
            rows.push(Row {
                coeffs: e,
                rhs: l,
                equality: true,
                bound_of: Some(i),
            });
            continue;
        }
        rows.push(Row {
            coeffs: e.clone(),
            rhs: l,
            equality: false,
            bound_of: Some(i),
        });
        rows.push(Row {
            coeffs: -e,
            rhs: -u,
            equality: false,
            bound_of: Some(i),
        });
    }
    rows
}

fn convergence(stage: &'static str, budget: &Budget, failure: QpFailure) -> Error {
    Error::Convergence {
        stage,
        iterations: budget.used(),
        status: failure.status,
        best: failure.best.iter().copied().collect(),
    }
}
