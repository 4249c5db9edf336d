//! Primal active-set method for small dense convex quadratic programs
//!
//! ```text
//!     minimize    ½ x'Hx + c'x
//!     subject to  a_k'x  = b_k   (equality rows)
//!                 a_k'x >= b_k   (inequality rows)
//! ```
//!
//! `H` only needs to be positive semidefinite. Directions of zero curvature
//! inside the working set's null space are followed as rays until a
//! constraint blocks them, so the feasible region must be bounded. The
//! iterate always stays feasible; the caller supplies a feasible start.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Consecutive zero-length steps after which the smallest-index rule is used
/// for dropping constraints.
const STALL_LIMIT: usize = 50;
/// Newton steps shorter than this (in weight units) are rounding noise.
const STEP_TOL: f64 = 1e-11;
/// Reduced gradients below this fraction of the full gradient count as zero.
const REDUCED_GRADIENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub coeffs: DVector<f64>,
    pub rhs: f64,
    pub equality: bool,
    /// `Some(i)` when the row is `±x_i` against a bound; used to snap exactly.
    pub bound_of: Option<usize>,
}

impl Row {
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.coeffs.dot(x)
    }
}

/// Iteration and wall-clock allowance shared by every solve of one stage.
#[derive(Debug)]
pub(crate) struct Budget {
    max_iterations: usize,
    used: usize,
    deadline: Instant,
}

impl Budget {
    pub fn new(max_iterations: usize, time: Duration) -> Self {
        Self {
            max_iterations,
            used: 0,
            deadline: Instant::now() + time,
        }
    }

    pub fn used(&self) -> usize {
        self.used
    }

    fn tick(&mut self) -> Result<(), &'static str> {
        self.used += 1;
        if self.used > self.max_iterations {
            Err("iteration budget exhausted")
        } else if self.used % 64 == 0 && Instant::now() > self.deadline {
            Err("time budget exhausted")
        } else {
            Ok(())
        }
    }
}

#[derive(Debug)]
pub(crate) struct QpFailure {
    pub status: String,
    pub best: DVector<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct QpSolution {
    pub x: DVector<f64>,
}

enum Step {
    Stationary,
    Newton(DVector<f64>),
    Ray(DVector<f64>),
}

/// Runs the active-set iteration from the feasible point `x0`. Inequality rows
/// in `warm` that are active at `x0` seed the working set.
pub(crate) fn minimize(
    hessian: &DMatrix<f64>,
    linear: &DVector<f64>,
    rows: &[Row],
    x0: DVector<f64>,
    warm: &[usize],
    budget: &mut Budget,
) -> Result<QpSolution, QpFailure> {
    let mut x = x0;
    let mut working: Vec<usize> = (0..rows.len()).filter(|&k| rows[k].equality).collect();
    for &k in warm {
        let row = &rows[k];
        if !row.equality
            && (row.value(&x) - row.rhs).abs() <= 1e-12
            && !working.contains(&k)
            && independent(rows, &working, k)
        {
            working.push(k);
        }
    }
    let mut stalled = 0usize;

    loop {
        if let Err(status) = budget.tick() {
            return Err(QpFailure {
                status: status.into(),
                best: x,
            });
        }
        let gradient = hessian * &x + linear;
        let step = eqp_step(hessian, &gradient, rows, &working);

        let (direction, max_step) = match step {
            Step::Newton(p) if p.amax() > STEP_TOL => (p, 1.0),
            Step::Ray(p) => (p, f64::INFINITY),
            _ => match release_candidate(&gradient, rows, &working, stalled > STALL_LIMIT) {
                None => return Ok(QpSolution { x }),
                Some(pos) => {
                    working.remove(pos);
                    continue;
                }
            },
        };

        let mut blocking: Option<(usize, f64)> = None;
        for (k, row) in rows.iter().enumerate() {
            if row.equality || working.contains(&k) {
                continue;
            }
            let rate = row.coeffs.dot(&direction);
            if rate >= -1e-15 * row.coeffs.amax() * direction.amax() {
                continue;
            }
            let slack = (row.value(&x) - row.rhs).max(0.0);
            let ratio = slack / -rate;
            if blocking.is_none_or(|(_, best)| ratio < best) {
                blocking = Some((k, ratio));
            }
        }

        match blocking {
            Some((k, ratio)) if ratio <= max_step => {
                x.axpy(ratio, &direction, 1.0);
                snap_bounds(&mut x, rows, k);
                working.push(k);
                stalled = if ratio == 0.0 { stalled + 1 } else { 0 };
            }
            _ if max_step.is_finite() => {
                x.axpy(max_step, &direction, 1.0);
                stalled = 0;
            }
            _ => {
                return Err(QpFailure {
                    status: "unbounded direction of zero curvature".into(),
                    best: x,
                })
            }
        }
    }
}

/// Puts the blocking bound, and any other bound reached within rounding, exactly
/// on its limit.
fn snap_bounds(x: &mut DVector<f64>, rows: &[Row], blocking: usize) {
    for (k, row) in rows.iter().enumerate() {
        if let Some(i) = row.bound_of {
            let limit = row.rhs / row.coeffs[i];
            if k == blocking || (x[i] - limit).abs() <= 1e-14 * limit.abs().max(1.0) {
                x[i] = limit;
            }
        }
    }
}

/// Whether row `k` is linearly independent of the rows in `working`.
fn independent(rows: &[Row], working: &[usize], k: usize) -> bool {
    let n = rows[k].coeffs.len();
    if working.len() >= n {
        return false;
    }
    let mut a = DMatrix::zeros(working.len() + 1, n);
    for (r, &j) in working.iter().chain(std::iter::once(&k)).enumerate() {
        a.set_row(r, &rows[j].coeffs.transpose());
    }
    a.rank(1e-10 * a.amax()) == working.len() + 1
}

fn curvature_tolerance(eigenvalues: &DVector<f64>) -> f64 {
    1e-12 * eigenvalues.amax().max(1.0)
}

fn eqp_step(
    hessian: &DMatrix<f64>,
    gradient: &DVector<f64>,
    rows: &[Row],
    working: &[usize],
) -> Step {
    let n = gradient.len();
    let z = null_space(rows, working, n);
    if z.ncols() == 0 {
        return Step::Stationary;
    }
    let reduced = z.transpose() * hessian * &z;
    let reduced_gradient = z.transpose() * gradient;
    if reduced_gradient.amax() <= REDUCED_GRADIENT_TOL * gradient.amax() {
        return Step::Stationary;
    }
    let eigen = SymmetricEigen::new(reduced);
    let tol = curvature_tolerance(&eigen.eigenvalues);
    let coords = eigen.eigenvectors.transpose() * reduced_gradient;
    let grad_tol = 1e-13 * gradient.amax().max(1.0);

    let mut ray = DVector::zeros(coords.len());
    let mut newton = DVector::zeros(coords.len());
    let mut has_ray = false;
    for j in 0..coords.len() {
        if eigen.eigenvalues[j] <= tol {
            if coords[j].abs() > grad_tol {
                ray[j] = -coords[j];
                has_ray = true;
            }
        } else {
            newton[j] = -coords[j] / eigen.eigenvalues[j];
        }
    }
    if has_ray {
        Step::Ray(&z * (&eigen.eigenvectors * ray))
    } else {
        Step::Newton(&z * (&eigen.eigenvectors * newton))
    }
}

/// Orthonormal basis of `{p : a_k'p = 0, k in working}`, from the QR
/// factorization of `[A_W' | I]`.
fn null_space(rows: &[Row], working: &[usize], n: usize) -> DMatrix<f64> {
    let m = working.len();
    if m == 0 {
        return DMatrix::identity(n, n);
    }
    if m >= n {
        return DMatrix::zeros(n, 0);
    }
    let mut augmented = DMatrix::zeros(n, m + n);
    for (col, &k) in working.iter().enumerate() {
        augmented.set_column(col, &rows[k].coeffs);
    }
    for i in 0..n {
        augmented[(i, m + i)] = 1.0;
    }
    let q = augmented.qr().q();
    q.columns(m, n - m).clone_owned()
}

/// Position in `working` of the inequality to release, if any multiplier is negative.
fn release_candidate(
    gradient: &DVector<f64>,
    rows: &[Row],
    working: &[usize],
    smallest_index: bool,
) -> Option<usize> {
    if working.is_empty() {
        return None;
    }
    let n = gradient.len();
    let m = working.len();
    let mut a = DMatrix::zeros(m, n);
    for (r, &k) in working.iter().enumerate() {
        a.set_row(r, &rows[k].coeffs.transpose());
    }
    // least-squares multipliers of A'λ = g
    let multipliers = a
        .transpose()
        .svd(true, true)
        .solve(gradient, 1e-14 * a.amax())
        .expect("singular vectors were requested");
    let tol = 1e-12 * gradient.amax().max(1.0);
    let candidates = (0..m).filter(|&r| !rows[working[r]].equality && multipliers[r] < -tol);
    if smallest_index {
        candidates.min_by_key(|&r| working[r])
    } else {
        candidates.min_by(|&p, &q| multipliers[p].total_cmp(&multipliers[q]))
    }
}
