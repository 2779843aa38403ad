//! Contact-optimizer MPC: picks the pushing force `f_c` (along the object's
//! body x axis) and the contact offset `d` (along body y on the rear face)
//! that drive the object's planar pose to its reference.
//!
//! The object model is
//!
//! ```text
//!   psi_dot = omega_z
//!   p_dot   = v
//!   omega_dot = -(f_c0 / I_z) d          (f_c frozen at the previous value)
//!   vx_dot  = (cos psi / m) f_c - mu g sgn(vx)
//!   vy_dot  = (sin psi / m) f_c - mu g sgn(vy)
//! ```
//!
//! with the friction term handed to the QP as a known affine drift (zero
//! inside a stiction band) and the heading frozen at the measured value, so
//! the horizon problem stays a convex QP with simple input bounds.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Matrix6x2, Vector2, Vector6};

use crate::condense::{condense, CondenseInput, StepModel};
use crate::qp::{QpProblem, QpSolver, QpStats, QpStatus};
use crate::reference::ReferenceTrajectory;
use crate::state::{ObjectParams, ObjectState, ParamError};
use crate::math::wrap_angle;

/// Velocity magnitude below which the friction drift is treated as zero.
pub const STICTION_BAND: f64 = 0.01;

/// Horizon output of the contact optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactPlan {
    /// Pushing force along object body +x per step, N.
    pub f_c: Vec<f64>,
    /// Contact offset along object body y per step, m.
    pub d: Vec<f64>,
    /// Controller tick that produced the plan.
    pub stamp: u64,
}

impl ContactPlan {
    pub fn constant(f_c: f64, d: f64, len: usize, stamp: u64) -> Self {
        Self { f_c: vec![f_c; len], d: vec![d; len], stamp }
    }

    pub fn len(&self) -> usize {
        self.f_c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f_c.is_empty()
    }

    /// Plan advanced by one tick: drop the first step, repeat the last.
    pub fn shifted(&self, stamp: u64) -> Self {
        let n = self.len();
        let mut f_c = Vec::with_capacity(n);
        let mut d = Vec::with_capacity(n);
        f_c.extend_from_slice(&self.f_c[1.min(n - 1)..]);
        d.extend_from_slice(&self.d[1.min(n - 1)..]);
        f_c.push(self.f_c[n - 1]);
        d.push(self.d[n - 1]);
        f_c.truncate(n);
        d.truncate(n);
        Self { f_c, d, stamp }
    }
}

/// Weights, horizon and input limits of the contact optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectMpcConfig {
    pub horizon: usize,
    pub dt: f64,
    /// State weights on (psi, x, y, omega_z, vx, vy).
    pub q: Vector6<f64>,
    /// Input weights on (f_c, d).
    pub r: Vector2<f64>,
    /// Pushing-force upper bound, N.
    pub f_max: f64,
    /// Margin subtracted from the face half width: `d_max = half_width - d_margin`.
    pub d_margin: f64,
}

impl Default for ObjectMpcConfig {
    fn default() -> Self {
        Self {
            horizon: 10,
            dt: 0.003,
            q: Vector6::new(50.0, 10.0, 10.0, 1.0, 1.0, 1.0),
            r: Vector2::new(1e-6, 1e-2),
            f_max: 40.0,
            d_margin: 0.02,
        }
    }
}

impl ObjectMpcConfig {
    pub fn d_max(&self, params: &ObjectParams) -> f64 {
        params.half_width - self.d_margin
    }

    pub fn validate(&self, params: &ObjectParams) -> Result<(), ParamError> {
        if self.horizon == 0 {
            return Err(ParamError::new("object MPC horizon must be >= 1"));
        }
        if !(self.dt > 0.0) {
            return Err(ParamError::new("object MPC dt must be positive"));
        }
        if self.q.iter().any(|v| *v < 0.0) || self.r.iter().any(|v| *v < 0.0) {
            return Err(ParamError::new("object MPC weights must be non-negative"));
        }
        if !(self.f_max > params.breakaway_force()) {
            return Err(ParamError::new("f_max must exceed the breakaway force mu m g"));
        }
        if !(self.d_margin >= 0.0 && self.d_margin < params.half_width) {
            return Err(ParamError::new("need 0 <= d_margin < half_width"));
        }
        Ok(())
    }
}

fn sgn_banded(v: f64) -> f64 {
    if v > STICTION_BAND {
        1.0
    } else if v < -STICTION_BAND {
        -1.0
    } else {
        0.0
    }
}

/// Continuous-time object model linearized about the current heading, the
/// previous pushing force and the current velocity signs. Returns `(A, B,
/// affine)` with state (psi, x, y, omega_z, vx, vy) and input (f_c, d).
pub fn build_object_model(
    state: &ObjectState,
    params: &ObjectParams,
    f_c0: f64,
) -> (nalgebra::Matrix6<f64>, Matrix6x2<f64>, Vector6<f64>) {
    debug_assert!(f_c0 >= 0.0);
    let mut a = nalgebra::Matrix6::zeros();
    a[(0, 3)] = 1.0;
    a[(1, 4)] = 1.0;
    a[(2, 5)] = 1.0;

    let mut b = Matrix6x2::zeros();
    b[(3, 1)] = -f_c0 / params.inertia_z;
    let (s, c) = {
        #[cfg(not(feature = "std"))]
        use num_traits::Float;
        state.psi.sin_cos()
    };
    b[(4, 0)] = c / params.mass;
    b[(5, 0)] = s / params.mass;

    let drag = params.mu_ground * params.gravity;
    let mut affine = Vector6::zeros();
    affine[4] = -drag * sgn_banded(state.vel.x);
    affine[5] = -drag * sgn_banded(state.vel.y);

    (a, b, affine)
}

fn state_vector(state: &ObjectState) -> Vector6<f64> {
    Vector6::new(
        state.psi,
        state.pos.x,
        state.pos.y,
        state.omega_z,
        state.vel.x,
        state.vel.y,
    )
}

/// Solve the condensed horizon QP and return the full input sequence. The
/// returned plan always satisfies the bounds exactly; on solver failure the
/// warm plan is time-shifted and reused.
#[allow(clippy::too_many_arguments)]
pub fn solve_contact_mpc(
    state: &ObjectState,
    reference: &ReferenceTrajectory,
    t: f64,
    f_c0: f64,
    params: &ObjectParams,
    cfg: &ObjectMpcConfig,
    warm: Option<&ContactPlan>,
) -> (ContactPlan, QpStats) {
    let n = cfg.horizon;
    let stamp = warm.map_or(0, |w| w.stamp + 1);
    let d_max = cfg.d_max(params);

    let (a, b, affine) = build_object_model(state, params, f_c0);
    let nx = 6;
    let a_d = DMatrix::identity(nx, nx) + DMatrix::from_column_slice(nx, nx, a.as_slice()) * cfg.dt;
    let b_d = DMatrix::from_column_slice(nx, 2, b.as_slice()) * cfg.dt;
    let c_d = DVector::from_column_slice(affine.as_slice()) * cfg.dt;

    let steps: Vec<StepModel> = (0..n)
        .map(|_| StepModel { a: a_d.clone(), b: b_d.clone(), c: c_d.clone() })
        .collect();

    // reference per prediction step, heading unwrapped to stay near the state
    let x_ref: Vec<DVector<f64>> = (1..=n)
        .map(|i| {
            let r = reference.sample(t + cfg.dt * i as f64);
            let psi = state.psi + wrap_angle(r.psi - state.psi);
            DVector::from_vec(vec![psi, r.pos.x, r.pos.y, r.omega, r.vel.x, r.vel.y])
        })
        .collect();

    let q_diag = DVector::from_column_slice(cfg.q.as_slice());
    let r_diag = vec![DVector::from_column_slice(cfg.r.as_slice()); n];
    let u_ref = vec![DVector::zeros(2); n];
    let x0 = DVector::from_column_slice(state_vector(state).as_slice());

    let mut cost = condense(&CondenseInput {
        steps: &steps,
        q_diag: &q_diag,
        r_diag: &r_diag,
        u_ref: &u_ref,
        x0: &x0,
        x_ref: &x_ref,
    });
    crate::condense::normalize_cost(&mut cost);

    let m = cost.total_inputs;
    let offsets = cost.offsets.clone();
    let mut lo = DVector::zeros(m);
    let mut hi = DVector::zeros(m);
    for &o in &offsets {
        lo[o] = 0.0;
        hi[o] = cfg.f_max;
        lo[o + 1] = -d_max;
        hi[o + 1] = d_max;
    }

    let fallback = |stats: QpStats| {
        let plan = match warm {
            Some(w) => w.shifted(stamp),
            None => ContactPlan::constant(
                f_c0.clamp(0.0, cfg.f_max),
                0.0,
                n,
                stamp,
            ),
        };
        (plan, stats)
    };

    let prob = match QpProblem::new(cost.p, cost.q, DMatrix::identity(m, m), lo, hi) {
        Ok(p) => p,
        Err(_) => return fallback(QpStats::failed()),
    };

    let warm_vec = warm.map(|w| {
        let shifted = w.shifted(stamp);
        DVector::from_fn(m, |i, _| {
            let step = i / 2;
            if i % 2 == 0 {
                shifted.f_c[step.min(shifted.len() - 1)]
            } else {
                shifted.d[step.min(shifted.len() - 1)]
            }
        })
    });

    let sol = QpSolver::default().solve(&prob, warm_vec.as_ref());
    let stats = QpStats::from(&sol);
    if sol.status != QpStatus::Solved {
        return fallback(stats);
    }

    let mut f_c = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for &o in &offsets {
        f_c.push(sol.x[o].clamp(0.0, cfg.f_max));
        d.push(sol.x[o + 1].clamp(-d_max, d_max));
    }
    (ContactPlan { f_c, d, stamp }, stats)
}

/// Stateful wrapper carrying the warm-start plan and the frozen previous
/// force `f_c0` across ticks. One instance per run, called once per tick.
#[derive(Debug, Clone)]
pub struct ObjectMpc {
    pub cfg: ObjectMpcConfig,
    prev: Option<ContactPlan>,
    f_c0: f64,
    last_stats: QpStats,
}

impl ObjectMpc {
    /// `f_c0` starts at the breakaway force so the torque input row is
    /// non-degenerate on the very first solve.
    pub fn new(cfg: ObjectMpcConfig, params: &ObjectParams) -> Result<Self, ParamError> {
        cfg.validate(params)?;
        Ok(Self { cfg, prev: None, f_c0: params.breakaway_force(), last_stats: QpStats::empty() })
    }

    pub fn update(
        &mut self,
        state: &ObjectState,
        reference: &ReferenceTrajectory,
        t: f64,
        params: &ObjectParams,
    ) -> ContactPlan {
        let (plan, stats) = solve_contact_mpc(
            state,
            reference,
            t,
            self.f_c0,
            params,
            &self.cfg,
            self.prev.as_ref(),
        );
        self.f_c0 = plan.f_c[0];
        self.last_stats = stats;
        self.prev = Some(plan.clone());
        plan
    }

    pub fn last_stats(&self) -> &QpStats {
        &self.last_stats
    }

    pub fn previous_force(&self) -> f64 {
        self.f_c0
    }
}
