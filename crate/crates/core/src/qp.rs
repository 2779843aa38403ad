//! Dense convex quadratic programming.
//!
//! Solves
//!
//! ```text
//!     minimize    1/2 x' P x + q' x
//!     subject to  lo <= C x <= hi
//! ```
//!
//! with `P` symmetric positive semidefinite, by operator splitting (ADMM)
//! with per-row step sizes and an active-set polish step once the iterates
//! have converged. Equality constraints are encoded as rows with `lo == hi`.
//! Problem sizes here are small (tens of variables), so everything is dense
//! and refactorization is cheap.


use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};
#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Regularization added to the Hessian diagonal on construction.
const HESSIAN_REG: f64 = 1e-9;
/// Step-size multiplier for equality rows.
const RHO_EQ_SCALE: f64 = 1e3;
/// Tolerance for the primal-infeasibility certificate.
const EPS_INFEAS: f64 = 1e-9;

/// Construction-time validation failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QpError {
    DimensionMismatch,
    NonFiniteData,
    InvalidBounds,
}

impl fmt::Display for QpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QpError::DimensionMismatch => write!(f, "inconsistent problem dimensions"),
            QpError::NonFiniteData => write!(f, "P, q or C contains a non-finite entry"),
            QpError::InvalidBounds => write!(f, "bounds contain NaN or wrong-signed infinities"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for QpError {}

/// Dense QP data. The Hessian is symmetrized and lightly regularized on
/// construction; `lo > hi` rows are legal here and reported as `Infeasible`
/// by the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    p: DMatrix<f64>,
    q: DVector<f64>,
    c: DMatrix<f64>,
    lo: DVector<f64>,
    hi: DVector<f64>,
}

impl QpProblem {
    pub fn new(
        p: DMatrix<f64>,
        q: DVector<f64>,
        c: DMatrix<f64>,
        lo: DVector<f64>,
        hi: DVector<f64>,
    ) -> Result<Self, QpError> {
        let n = q.len();
        let k = c.nrows();
        if p.nrows() != n || p.ncols() != n || c.ncols() != n || lo.len() != k || hi.len() != k {
            return Err(QpError::DimensionMismatch);
        }
        if p.iter().any(|v| !v.is_finite())
            || q.iter().any(|v| !v.is_finite())
            || c.iter().any(|v| !v.is_finite())
        {
            return Err(QpError::NonFiniteData);
        }
        // bounds may be infinite but only on the open side
        for i in 0..k {
            if lo[i].is_nan() || hi[i].is_nan() || lo[i] == f64::INFINITY || hi[i] == f64::NEG_INFINITY
            {
                return Err(QpError::InvalidBounds);
            }
        }
        let p = (&p + p.transpose()) * 0.5 + DMatrix::identity(n, n) * HESSIAN_REG;
        Ok(Self { p, q, c, lo, hi })
    }

    /// Unconstrained problem (`k = 0`).
    pub fn unconstrained(p: DMatrix<f64>, q: DVector<f64>) -> Result<Self, QpError> {
        let n = q.len();
        Self::new(p, q, DMatrix::zeros(0, n), DVector::zeros(0), DVector::zeros(0))
    }

    pub fn num_vars(&self) -> usize {
        self.q.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.c.nrows()
    }

    /// Objective value 1/2 x'Px + q'x (including the regularization).
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * (&self.p * x).dot(x) + self.q.dot(x)
    }

    pub fn constraint_values(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.c * x
    }
}

/// Termination status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Solved,
    MaxIter,
    Infeasible,
}

/// Primal/dual result. When `status == Solved` both residuals are below the
/// configured tolerance; `y` holds the constraint multipliers (positive on
/// upper-active rows, negative on lower-active ones).
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub status: QpStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// Lightweight per-solve summary kept by the controllers for telemetry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpStats {
    pub status: QpStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

impl QpStats {
    /// Placeholder before the first solve.
    pub fn empty() -> Self {
        Self { status: QpStatus::Solved, iterations: 0, primal_residual: 0.0, dual_residual: 0.0 }
    }

    /// Marker for a solve that never reached the solver (bad data).
    pub fn failed() -> Self {
        Self {
            status: QpStatus::MaxIter,
            iterations: 0,
            primal_residual: f64::INFINITY,
            dual_residual: f64::INFINITY,
        }
    }

    pub fn kkt_residual(&self) -> f64 {
        self.primal_residual.max(self.dual_residual)
    }
}

impl From<&QpSolution> for QpStats {
    fn from(s: &QpSolution) -> Self {
        Self {
            status: s.status,
            iterations: s.iterations,
            primal_residual: s.primal_residual,
            dual_residual: s.dual_residual,
        }
    }
}

/// Solver tuning. The defaults meet the controllers' 1e-6 KKT contract.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpSettings {
    /// Absolute KKT tolerance (infinity norm of both residuals).
    pub eps: f64,
    pub max_iter: usize,
    /// ADMM proximal weight on x.
    pub sigma: f64,
    /// Over-relaxation factor.
    pub alpha: f64,
    /// Initial constraint step size.
    pub rho: f64,
    /// Iterations between step-size adaptations (0 disables).
    pub adaptive_rho_interval: usize,
    /// Solve the active-set KKT system after convergence for a high-accuracy
    /// primal/dual pair.
    pub polish: bool,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            max_iter: 4000,
            sigma: 1e-6,
            alpha: 1.6,
            rho: 0.1,
            adaptive_rho_interval: 50,
            polish: true,
        }
    }
}

/// Reusable solver holding settings and scratch state. One instance per
/// controller; instances are independent.
#[derive(Debug, Clone, Default)]
pub struct QpSolver {
    pub settings: QpSettings,
}

impl QpSolver {
    pub fn new(settings: QpSettings) -> Self {
        Self { settings }
    }

    /// Solve the QP, optionally warm-starting the primal iterate. The result
    /// is a pure function of `(problem, warm)`; warm starting changes the
    /// iteration count, not the answer beyond tolerance.
    pub fn solve(&mut self, prob: &QpProblem, warm: Option<&DVector<f64>>) -> QpSolution {
        let n = prob.num_vars();
        let k = prob.num_constraints();
        let s = self.settings;

        for i in 0..k {
            if prob.lo[i] > prob.hi[i] {
                return QpSolution {
                    x: DVector::zeros(n),
                    y: DVector::zeros(k),
                    status: QpStatus::Infeasible,
                    iterations: 0,
                    primal_residual: f64::INFINITY,
                    dual_residual: f64::INFINITY,
                };
            }
        }

        let mut rho: DVector<f64> = DVector::from_fn(k, |i, _| {
            if prob.lo[i] == prob.hi[i] {
                s.rho * RHO_EQ_SCALE
            } else {
                s.rho
            }
        });

        let mut x = match warm {
            Some(w) if w.len() == n => w.clone(),
            _ => DVector::zeros(n),
        };
        let mut z = clamp(&(&prob.c * &x), &prob.lo, &prob.hi);
        let mut y = DVector::zeros(k);

        let mut chol = factorize(prob, &rho, s.sigma);
        let mut best = Candidate::evaluate(prob, &x, &y);
        let mut iterations = 0;

        for iter in 1..=s.max_iter {
            iterations = iter;

            // x-update: (P + sigma I + C' diag(rho) C) x~ = sigma x - q + C'(rho z - y)
            let rhs = {
                let mut rz = z.component_mul(&rho);
                rz -= &y;
                &x * s.sigma - &prob.q + prob.c.transpose() * rz
            };
            let x_tilde = chol.solve(&rhs);
            let z_tilde = &prob.c * &x_tilde;

            x = &x_tilde * s.alpha + &x * (1.0 - s.alpha);
            let z_relaxed = &z_tilde * s.alpha + &z * (1.0 - s.alpha);
            let z_next = clamp(&(&z_relaxed + y.component_div(&rho)), &prob.lo, &prob.hi);
            let dy = (z_relaxed - &z_next).component_mul(&rho);
            y += &dy;
            z = z_next;

            if k > 0 && primal_infeasibility_certificate(prob, &dy) {
                return QpSolution {
                    x,
                    y,
                    status: QpStatus::Infeasible,
                    iterations,
                    primal_residual: f64::INFINITY,
                    dual_residual: f64::INFINITY,
                };
            }

            let cand = Candidate::evaluate(prob, &x, &y);
            if cand.score() < best.score() {
                best = cand;
            }
            if best.primal <= s.eps && best.dual <= s.eps {
                break;
            }

            if s.adaptive_rho_interval > 0 && iter % s.adaptive_rho_interval == 0 {
                if let Some(scale) = rho_rescale(prob, &x, &z, &y) {
                    rho *= scale;
                    for i in 0..k {
                        rho[i] = rho[i].clamp(1e-6, 1e6);
                    }
                    chol = factorize(prob, &rho, s.sigma);
                }
            }
        }

        let converged = best.primal <= s.eps && best.dual <= s.eps;
        let mut out = best;
        if s.polish {
            if let Some(p) = polish(prob, &out) {
                if p.score() <= out.score() {
                    out = p;
                }
            }
        }
        QpSolution {
            x: out.x,
            y: out.y,
            status: if converged { QpStatus::Solved } else { QpStatus::MaxIter },
            iterations,
            primal_residual: out.primal,
            dual_residual: out.dual,
        }
    }
}

/// Iterate with its KKT residuals.
struct Candidate {
    x: DVector<f64>,
    y: DVector<f64>,
    primal: f64,
    dual: f64,
}

impl Candidate {
    fn evaluate(prob: &QpProblem, x: &DVector<f64>, y: &DVector<f64>) -> Self {
        let cx = &prob.c * x;
        let primal = (0..prob.c.nrows())
            .map(|i| (cx[i] - cx[i].clamp(prob.lo[i], prob.hi[i])).abs())
            .fold(0.0, f64::max);
        let grad = &prob.p * x + &prob.q + prob.c.transpose() * y;
        let dual = grad.amax();
        Self { x: x.clone(), y: y.clone(), primal, dual }
    }

    fn score(&self) -> f64 {
        self.primal.max(self.dual)
    }
}

fn clamp(v: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(v.len(), |i, _| v[i].clamp(lo[i], hi[i]))
}

fn factorize(prob: &QpProblem, rho: &DVector<f64>, sigma: f64) -> nalgebra::Cholesky<f64, nalgebra::Dyn> {
    let n = prob.num_vars();
    let mut m = prob.p.clone() + DMatrix::identity(n, n) * sigma;
    if prob.num_constraints() > 0 {
        let mut scaled = prob.c.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= rho[i];
        }
        m += prob.c.transpose() * scaled;
    }
    // P is PSD and sigma > 0, so this cannot fail except through severe
    // rounding; fall back to a heavier diagonal then.
    nalgebra::Cholesky::new(m.clone()).unwrap_or_else(|| {
        nalgebra::Cholesky::new(m + DMatrix::identity(n, n) * 1e-6)
            .expect("regularized normal matrix must be positive definite")
    })
}

/// OSQP-style certificate: a dual direction `dy` proving `lo <= Cx <= hi`
/// has no solution.
fn primal_infeasibility_certificate(prob: &QpProblem, dy: &DVector<f64>) -> bool {
    let norm = dy.amax();
    if norm <= 1e-14 {
        return false;
    }
    let ct_dy = (prob.c.transpose() * dy).amax();
    if ct_dy > EPS_INFEAS * norm {
        return false;
    }
    let mut support = 0.0;
    for i in 0..dy.len() {
        let d = dy[i];
        if d > EPS_INFEAS * norm {
            if prob.hi[i] == f64::INFINITY {
                return false;
            }
            support += prob.hi[i] * d;
        } else if d < -EPS_INFEAS * norm {
            if prob.lo[i] == f64::NEG_INFINITY {
                return false;
            }
            support += prob.lo[i] * d;
        }
    }
    support < -EPS_INFEAS * norm
}

/// Residual-balancing step-size update; `None` means keep the current rho.
fn rho_rescale(
    prob: &QpProblem,
    x: &DVector<f64>,
    z: &DVector<f64>,
    y: &DVector<f64>,
) -> Option<f64> {
    let cx = &prob.c * x;
    let r_prim = (&cx - z).amax();
    let prim_scale = cx.amax().max(z.amax()).max(1e-12);
    let px = (&prob.p * x).amax();
    let cty = (prob.c.transpose() * y).amax();
    let r_dual = (&prob.p * x + &prob.q + prob.c.transpose() * y).amax();
    let dual_scale = px.max(cty).max(prob.q.amax()).max(1e-12);

    let ratio = ((r_prim / prim_scale) / (r_dual / dual_scale).max(1e-16)).sqrt();
    if ratio > 5.0 || ratio < 0.2 {
        Some(ratio)
    } else {
        None
    }
}

/// Solve the equality-KKT system on the active set identified by the signs
/// of `y`, the same refinement OSQP performs after convergence.
fn polish(prob: &QpProblem, raw: &Candidate) -> Option<Candidate> {
    let n = prob.num_vars();
    let k = prob.num_constraints();

    let mut active: Vec<(usize, f64)> = Vec::new(); // (row, bound value)
    let cx = &prob.c * &raw.x;
    for i in 0..k {
        let lo_finite = prob.lo[i].is_finite();
        let hi_finite = prob.hi[i].is_finite();
        let near_lo = lo_finite && (cx[i] - prob.lo[i]).abs() < 1e-9;
        let near_hi = hi_finite && (prob.hi[i] - cx[i]).abs() < 1e-9;
        if prob.lo[i] == prob.hi[i] {
            active.push((i, prob.lo[i]));
        } else if (raw.y[i] < -1e-12 && lo_finite) || near_lo {
            active.push((i, prob.lo[i]));
        } else if (raw.y[i] > 1e-12 && hi_finite) || near_hi {
            active.push((i, prob.hi[i]));
        }
    }
    let m = active.len();

    let mut kkt = DMatrix::zeros(n + m, n + m);
    kkt.view_mut((0, 0), (n, n)).copy_from(&prob.p);
    for (j, &(row, _)) in active.iter().enumerate() {
        for col in 0..n {
            kkt[(col, n + j)] = prob.c[(row, col)];
            kkt[(n + j, col)] = prob.c[(row, col)];
        }
        kkt[(n + j, n + j)] = -1e-12;
    }
    let mut rhs = DVector::zeros(n + m);
    for i in 0..n {
        rhs[i] = -prob.q[i];
    }
    for (j, &(_, b)) in active.iter().enumerate() {
        rhs[n + j] = b;
    }

    let lu = kkt.full_piv_lu();
    let sol = lu.solve(&rhs)?;

    let x = DVector::from_fn(n, |i, _| sol[i]);
    let mut y = DVector::zeros(k);
    for (j, &(row, _)) in active.iter().enumerate() {
        y[row] = sol[n + j];
    }
    // reject sign-inconsistent multipliers: they mean the guessed active set
    // is not the optimal one
    for &(row, b) in &active {
        if prob.lo[row] == prob.hi[row] {
            continue;
        }
        let at_lower = b == prob.lo[row];
        if at_lower && y[row] > 1e-8 {
            return None;
        }
        if !at_lower && y[row] < -1e-8 {
            return None;
        }
    }
    Some(Candidate::evaluate(prob, &x, &y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn solve(prob: &QpProblem) -> QpSolution {
        QpSolver::default().solve(prob, None)
    }

    #[test]
    fn unconstrained_stationary_point() {
        let prob = QpProblem::unconstrained(
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![-1.0, -1.0]),
        )
        .unwrap();
        let sol = solve(&prob);
        assert_eq!(sol.status, QpStatus::Solved);
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-6);
        assert_relative_eq!(sol.x[1], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn active_upper_bound() {
        let prob = QpProblem::new(
            DMatrix::identity(1, 1),
            DVector::from_vec(vec![-10.0]),
            DMatrix::identity(1, 1),
            DVector::from_vec(vec![0.0]),
            DVector::from_vec(vec![1.0]),
        )
        .unwrap();
        let sol = solve(&prob);
        assert_eq!(sol.status, QpStatus::Solved);
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-8);
        assert!(sol.y[0] > 0.0, "upper-active multiplier should be positive");
    }

    #[test]
    fn equality_row() {
        // min 1/2 (x0^2 + x1^2) s.t. x0 + x1 = 1  ->  (0.5, 0.5)
        let prob = QpProblem::new(
            DMatrix::identity(2, 2),
            DVector::zeros(2),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_vec(vec![1.0]),
            DVector::from_vec(vec![1.0]),
        )
        .unwrap();
        let sol = solve(&prob);
        assert_eq!(sol.status, QpStatus::Solved);
        assert_relative_eq!(sol.x[0], 0.5, epsilon = 1e-7);
        assert_relative_eq!(sol.x[1], 0.5, epsilon = 1e-7);
    }

    #[test]
    fn crossed_bounds_report_infeasible() {
        let prob = QpProblem::new(
            DMatrix::identity(1, 1),
            DVector::zeros(1),
            DMatrix::identity(1, 1),
            DVector::from_vec(vec![2.0]),
            DVector::from_vec(vec![1.0]),
        )
        .unwrap();
        assert_eq!(solve(&prob).status, QpStatus::Infeasible);
    }

    #[test]
    fn contradictory_equalities_certified_infeasible() {
        // x = 0 and x = 1 cannot both hold
        let prob = QpProblem::new(
            DMatrix::identity(1, 1),
            DVector::zeros(1),
            DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            DVector::from_vec(vec![0.0, 1.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        )
        .unwrap();
        assert_eq!(solve(&prob).status, QpStatus::Infeasible);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let err = QpProblem::new(
            DMatrix::identity(2, 2),
            DVector::zeros(3),
            DMatrix::zeros(0, 2),
            DVector::zeros(0),
            DVector::zeros(0),
        )
        .unwrap_err();
        assert_eq!(err, QpError::DimensionMismatch);
    }

    #[test]
    fn one_sided_rows_with_infinite_bounds() {
        // min 1/2 x^2 - x  s.t. x <= 0.3
        let prob = QpProblem::new(
            DMatrix::identity(1, 1),
            DVector::from_vec(vec![-1.0]),
            DMatrix::identity(1, 1),
            DVector::from_vec(vec![f64::NEG_INFINITY]),
            DVector::from_vec(vec![0.3]),
        )
        .unwrap();
        let sol = solve(&prob);
        assert_eq!(sol.status, QpStatus::Solved);
        assert_relative_eq!(sol.x[0], 0.3, epsilon = 1e-8);
    }
}
