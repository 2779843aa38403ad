//! Loco-manipulation MPC: a convex single-rigid-body-dynamics MPC producing
//! four foot-force vectors, with the object interaction force injected as a
//! known body-frame longitudinal disturbance.
//!
//! The model is the yaw-frozen 12-state SRBD linearization
//!
//! ```text
//!   Theta_dot = Rz(yaw)' omega
//!   p_dot     = v
//!   omega_dot = I_hat^-1 sum_i (r_i - p) x f_i
//!   v_dot     = sum_i f_i / m - g z_hat - Rz(yaw) (f_c, 0, 0) / m
//! ```
//!
//! with `I_hat = Rz I_body Rz'`. The pushing force enters translation only;
//! its moment on the robot is left out of the rotational rows. Swing feet
//! carry no decision variables at all, and stance forces are constrained to
//! a friction pyramid with vertical-force bounds.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix, SVector, Vector3};

use crate::condense::{condense, normalize_cost, CondenseInput, StepModel};
use crate::gait::RobotReference;
use crate::math::{rotz, skew, wrap_angle};
use crate::object_mpc::ContactPlan;
use crate::qp::{QpProblem, QpSolver, QpStats, QpStatus};
use crate::state::{ParamError, RobotParams, RobotState};

const NX: usize = 12;

/// Weights and horizon of the loco-manipulation MPC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocoMpcConfig {
    pub horizon: usize,
    pub dt: f64,
    /// State weights ordered (roll, pitch, yaw, x, y, z, wx, wy, wz, vx, vy, vz).
    pub q: SVector<f64, 12>,
    /// Force weight (deviation from the nominal gravity split).
    pub r_f: f64,
    /// Foot-ground friction coefficient for the pyramid.
    pub mu_foot: f64,
}

impl Default for LocoMpcConfig {
    fn default() -> Self {
        Self {
            horizon: 10,
            dt: 0.003,
            q: SVector::<f64, 12>::from_column_slice(&[
                100.0, 100.0, 50.0, 400.0, 400.0, 100.0, 1.0, 1.0, 1.0, 4.0, 4.0, 4.0,
            ]),
            r_f: 1e-6,
            mu_foot: 0.6,
        }
    }
}

impl LocoMpcConfig {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.horizon == 0 {
            return Err(ParamError::new("loco MPC horizon must be >= 1"));
        }
        if !(self.dt > 0.0) {
            return Err(ParamError::new("loco MPC dt must be positive"));
        }
        if self.q.iter().any(|v| *v < 0.0) || self.r_f < 0.0 {
            return Err(ParamError::new("loco MPC weights must be non-negative"));
        }
        // tracking a relative position: position gains stay well above
        // velocity gains
        for i in 0..3 {
            if self.q[3 + i] < 10.0 * self.q[9 + i] {
                return Err(ParamError::new("position weights must be >= 10x velocity weights"));
            }
        }
        if !(self.mu_foot > 0.0) {
            return Err(ParamError::new("mu_foot must be positive"));
        }
        Ok(())
    }
}

/// Horizon of world-frame foot forces; swing entries are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FootForcePlan {
    pub forces: Vec<[Vector3<f64>; 4]>,
}

impl FootForcePlan {
    pub fn first(&self) -> [Vector3<f64>; 4] {
        self.forces[0]
    }
}

/// 12-state vector of the robot with the angular velocity in world frame.
pub fn robot_state_vector(state: &RobotState) -> SVector<f64, 12> {
    let mut x = SVector::<f64, 12>::zeros();
    x.fixed_rows_mut::<3>(0).copy_from(&state.rpy);
    x.fixed_rows_mut::<3>(3).copy_from(&state.pos);
    x.fixed_rows_mut::<3>(6).copy_from(&state.omega_world());
    x.fixed_rows_mut::<3>(9).copy_from(&state.vel);
    x
}

/// Per-step discrete SRBD model with all four feet as input columns (12
/// inputs); the solver drops swing columns. `contact_plan` supplies the
/// known pushing force per step.
pub fn build_srbd_model(
    state: &RobotState,
    params: &RobotParams,
    foot_pos_horizon: &[[Vector3<f64>; 4]],
    contact_plan: &ContactPlan,
    dt: f64,
) -> Vec<StepModel> {
    let n = foot_pos_horizon.len();
    assert!(contact_plan.len() >= n, "contact plan shorter than the horizon");
    let yaw = state.yaw();
    let rz = rotz(yaw);
    let inertia_world = rz * params.inertia_body * rz.transpose();
    let inertia_inv = inertia_world.try_inverse().expect("inertia is SPD");

    let mut a = SMatrix::<f64, 12, 12>::zeros();
    a.fixed_view_mut::<3, 3>(0, 6).copy_from(&rz.transpose());
    a.fixed_view_mut::<3, 3>(3, 9).copy_from(&Matrix3::identity());
    let a_d = DMatrix::identity(NX, NX) + DMatrix::from_column_slice(NX, NX, a.as_slice()) * dt;

    (0..n)
        .map(|i| {
            let mut b = DMatrix::zeros(NX, 12);
            for foot in 0..4 {
                let arm = foot_pos_horizon[i][foot] - state.pos;
                let torque = inertia_inv * skew(arm);
                for r in 0..3 {
                    for c in 0..3 {
                        b[(6 + r, 3 * foot + c)] = torque[(r, c)] * dt;
                        b[(9 + r, 3 * foot + c)] =
                            if r == c { dt / params.mass } else { 0.0 };
                    }
                }
            }
            let f_c = contact_plan.f_c[i];
            let push_world = rz * Vector3::new(f_c, 0.0, 0.0);
            let mut c = DVector::zeros(NX);
            c[9] = -push_world.x / params.mass * dt;
            c[10] = -push_world.y / params.mass * dt;
            c[11] = (-push_world.z / params.mass - params.gravity) * dt;
            StepModel { a: a_d.clone(), b, c }
        })
        .collect()
}

/// Decision-variable layout: one (step, foot) pair per stance flag.
struct Layout {
    /// (step, foot) per 3-wide variable block.
    blocks: Vec<(usize, usize)>,
}

impl Layout {
    fn build(flags: &[[bool; 4]]) -> Self {
        let mut blocks = Vec::new();
        for (i, step) in flags.iter().enumerate() {
            for (foot, stance) in step.iter().enumerate() {
                if *stance {
                    blocks.push((i, foot));
                }
            }
        }
        Self { blocks }
    }
}

/// Solve the horizon QP for stance-foot forces. Returns the full plan (zeros
/// on swing feet) and the QP statistics; fallbacks are handled by [`LocoMpc`].
pub fn solve_loco_mpc(
    state: &RobotState,
    robot_ref: &[RobotReference],
    flags: &[[bool; 4]],
    contact_plan: &ContactPlan,
    params: &RobotParams,
    cfg: &LocoMpcConfig,
) -> Option<(FootForcePlan, QpStats)> {
    let n = cfg.horizon;
    assert_eq!(robot_ref.len(), n);
    assert_eq!(flags.len(), n);
    if flags.iter().any(|step| step.iter().all(|s| !s)) {
        return None; // full-flight step: nothing to solve
    }

    // predicted foot positions: stance feet hold their current position
    // (sufficient over a 30 ms horizon)
    let foot_pos_horizon: Vec<[Vector3<f64>; 4]> = vec![state.foot_pos; n];
    let full_steps = build_srbd_model(state, params, &foot_pos_horizon, contact_plan, cfg.dt);

    let layout = Layout::build(flags);
    let steps: Vec<StepModel> = full_steps
        .iter()
        .enumerate()
        .map(|(i, step)| {
            let cols: Vec<usize> = layout
                .blocks
                .iter()
                .filter(|(s, _)| *s == i)
                .flat_map(|(_, foot)| 3 * foot..3 * foot + 3)
                .collect();
            let mut b = DMatrix::zeros(NX, cols.len());
            for (j, &col) in cols.iter().enumerate() {
                b.set_column(j, &step.b.column(col));
            }
            StepModel { a: step.a.clone(), b, c: step.c.clone() }
        })
        .collect();

    let yaw = state.yaw();
    let x_ref: Vec<DVector<f64>> = robot_ref
        .iter()
        .map(|r| {
            let mut v = r.to_vector();
            v[2] = yaw + wrap_angle(r.rpy.z - yaw);
            DVector::from_column_slice(v.as_slice())
        })
        .collect();

    let q_diag = DVector::from_column_slice(cfg.q.as_slice());
    let mut r_diag = Vec::with_capacity(n);
    let mut u_ref = Vec::with_capacity(n);
    for step in flags {
        let stance_count = step.iter().filter(|s| **s).count();
        let width = 3 * stance_count;
        r_diag.push(DVector::from_element(width, cfg.r_f));
        let mut ur = DVector::zeros(width);
        // nominal gravity split keeps the force penalty centered on static
        // equilibrium instead of dragging the robot downward
        let fz_nom = params.mass * params.gravity / stance_count as f64;
        for j in 0..stance_count {
            ur[3 * j + 2] = fz_nom;
        }
        u_ref.push(ur);
    }

    let x0 = DVector::from_column_slice(robot_state_vector(state).as_slice());
    let mut cost = condense(&CondenseInput {
        steps: &steps,
        q_diag: &q_diag,
        r_diag: &r_diag,
        u_ref: &u_ref,
        x0: &x0,
        x_ref: &x_ref,
    });
    normalize_cost(&mut cost);

    // per stance foot: fz bounds plus a four-sided friction pyramid
    let m = cost.total_inputs;
    let n_rows = 5 * layout.blocks.len();
    let mut con = DMatrix::zeros(n_rows, m);
    let mut lo = DVector::zeros(n_rows);
    let mut hi = DVector::zeros(n_rows);
    let mu = cfg.mu_foot;
    for (blk, _) in layout.blocks.iter().enumerate() {
        let base = 3 * blk;
        let row = 5 * blk;
        con[(row, base + 2)] = 1.0;
        lo[row] = params.fz_min;
        hi[row] = params.fz_max;
        for (k, axis) in [0usize, 1].iter().enumerate() {
            let r_hi = row + 1 + 2 * k;
            con[(r_hi, base + axis)] = 1.0;
            con[(r_hi, base + 2)] = -mu;
            lo[r_hi] = f64::NEG_INFINITY;
            hi[r_hi] = 0.0;
            let r_lo = row + 2 + 2 * k;
            con[(r_lo, base + axis)] = 1.0;
            con[(r_lo, base + 2)] = mu;
            lo[r_lo] = 0.0;
            hi[r_lo] = f64::INFINITY;
        }
    }

    let prob = QpProblem::new(cost.p, cost.q, con, lo, hi).ok()?;
    // gravity split as the initial iterate
    let mut warm = DVector::zeros(m);
    for (blk, &(step, _)) in layout.blocks.iter().enumerate() {
        let stance_count = flags[step].iter().filter(|s| **s).count();
        warm[3 * blk + 2] = params.mass * params.gravity / stance_count as f64;
    }

    let sol = QpSolver::default().solve(&prob, Some(&warm));
    let stats = QpStats::from(&sol);
    if sol.status != QpStatus::Solved {
        return Some((emergency_plan(params, n), stats));
    }

    let mut forces = vec![[Vector3::zeros(); 4]; n];
    for (blk, &(step, foot)) in layout.blocks.iter().enumerate() {
        let base = 3 * blk;
        let fz = sol.x[base + 2].clamp(params.fz_min, params.fz_max);
        let fx = sol.x[base].clamp(-mu * fz, mu * fz);
        let fy = sol.x[base + 1].clamp(-mu * fz, mu * fz);
        forces[step][foot] = Vector3::new(fx, fy, fz);
    }
    Some((FootForcePlan { forces }, stats))
}

/// Gravity compensation split equally over all four feet.
fn emergency_plan(params: &RobotParams, n: usize) -> FootForcePlan {
    let fz = params.mass * params.gravity / 4.0;
    FootForcePlan { forces: vec![[Vector3::new(0.0, 0.0, fz); 4]; n] }
}

/// Stateful wrapper with the spec'd failure policy: reuse the previous
/// first-step forces when the solver runs out of iterations, fall back to an
/// equal-split emergency stance when the problem is infeasible or degenerate.
#[derive(Debug, Clone)]
pub struct LocoMpc {
    pub cfg: LocoMpcConfig,
    prev_first: Option<[Vector3<f64>; 4]>,
    last_stats: QpStats,
}

impl LocoMpc {
    pub fn new(cfg: LocoMpcConfig) -> Result<Self, ParamError> {
        cfg.validate()?;
        Ok(Self { cfg, prev_first: None, last_stats: QpStats::empty() })
    }

    pub fn update(
        &mut self,
        state: &RobotState,
        robot_ref: &[RobotReference],
        flags: &[[bool; 4]],
        contact_plan: &ContactPlan,
        params: &RobotParams,
    ) -> FootForcePlan {
        match solve_loco_mpc(state, robot_ref, flags, contact_plan, params, &self.cfg) {
            Some((plan, stats)) => {
                self.last_stats = stats;
                if stats.status == QpStatus::Solved {
                    self.prev_first = Some(plan.first());
                    plan
                } else if stats.status == QpStatus::MaxIter {
                    if let Some(prev) = self.prev_first {
                        FootForcePlan { forces: vec![prev; self.cfg.horizon] }
                    } else {
                        plan
                    }
                } else {
                    plan // infeasible: emergency stance from the solver path
                }
            }
            None => {
                self.last_stats = QpStats::failed();
                emergency_plan(params, self.cfg.horizon)
            }
        }
    }

    pub fn last_stats(&self) -> &QpStats {
        &self.last_stats
    }
}
