//! Trot gait scheduling, footstep placement, swing-foot interpolation and
//! the object-to-robot reference offset.

use alloc::vec::Vec;

use nalgebra::{Vector2, Vector3};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::math::{rot2, wrap_angle};
use crate::object_mpc::ContactPlan;
use crate::reference::ReferenceTrajectory;
use crate::state::{ObjectParams, ObjectState, RobotParams, RobotState};

/// Periodic stance/swing schedule. Feet are FL, FR, RL, RR; a trot puts the
/// diagonal pairs half a period apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitTable {
    /// Full gait cycle, s.
    pub period: f64,
    /// Stance fraction of the cycle.
    pub duty: f64,
    /// Per-foot phase offsets in [0, 1).
    pub phase_offsets: [f64; 4],
}

impl GaitTable {
    pub fn trot(period: f64, duty: f64) -> Self {
        Self { period, duty, phase_offsets: [0.0, 0.5, 0.5, 0.0] }
    }

    /// Cycle phase of one foot at time `t`, in [0, 1).
    pub fn phase(&self, foot: usize, t: f64) -> f64 {
        let p = t / self.period + self.phase_offsets[foot];
        p - p.floor()
    }

    pub fn in_stance(&self, foot: usize, t: f64) -> bool {
        self.phase(foot, t) < self.duty
    }

    /// Progress through the current swing, in [0, 1); 0 when in stance.
    pub fn swing_progress(&self, foot: usize, t: f64) -> f64 {
        let p = self.phase(foot, t);
        if p < self.duty || self.duty >= 1.0 {
            0.0
        } else {
            (p - self.duty) / (1.0 - self.duty)
        }
    }

    pub fn stance_duration(&self) -> f64 {
        self.duty * self.period
    }

    pub fn swing_duration(&self) -> f64 {
        (1.0 - self.duty) * self.period
    }
}

impl Default for GaitTable {
    fn default() -> Self {
        Self::trot(0.36, 0.5)
    }
}

/// Stance flags over an N-step horizon starting at time `t`.
pub fn contact_flags(gait: &GaitTable, t: f64, n: usize, dt: f64) -> Vec<[bool; 4]> {
    (0..n)
        .map(|i| {
            let ti = t + i as f64 * dt;
            [0, 1, 2, 3].map(|f| gait.in_stance(f, ti))
        })
        .collect()
}

/// Velocity-feedback gain of the touchdown heuristic, s.
const RAIBERT_KV: f64 = 0.03;

/// Touchdown targets: hip ground projection advanced by half a stance of
/// commanded motion, corrected by the velocity tracking error.
pub fn plan_footholds(
    state: &RobotState,
    vel_cmd: Vector2<f64>,
    gait: &GaitTable,
    params: &RobotParams,
) -> [Vector3<f64>; 4] {
    let r = rot2(state.yaw());
    let vel_xy = state.vel.xy();
    core::array::from_fn(|i| {
        let hip = state.pos.xy() + r * params.hip_offsets[i];
        let p = hip + vel_cmd * (gait.stance_duration() / 2.0) + (vel_xy - vel_cmd) * RAIBERT_KV;
        Vector3::new(p.x, p.y, 0.0)
    })
}

/// Swing interpolation: smoothstep in the ground plane, half-sine in z with
/// the apex at mid-swing. Exact at both endpoints.
pub fn swing_foot_pos(
    phase: f64,
    liftoff: Vector3<f64>,
    touchdown: Vector3<f64>,
    apex_h: f64,
) -> Vector3<f64> {
    debug_assert!((0.0..=1.0).contains(&phase));
    let s = phase * phase * (3.0 - 2.0 * phase);
    let mut p = liftoff + (touchdown - liftoff) * s;
    p.z += apex_h * (core::f64::consts::PI * phase).sin();
    p
}

/// One step of the robot reference produced from the offset object
/// trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotReference {
    pub rpy: Vector3<f64>,
    pub pos: Vector3<f64>,
    pub omega: Vector3<f64>,
    pub vel: Vector3<f64>,
}

impl RobotReference {
    pub fn to_vector(&self) -> nalgebra::SVector<f64, 12> {
        let mut v = nalgebra::SVector::<f64, 12>::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.rpy);
        v.fixed_rows_mut::<3>(3).copy_from(&self.pos);
        v.fixed_rows_mut::<3>(6).copy_from(&self.omega);
        v.fixed_rows_mut::<3>(9).copy_from(&self.vel);
        v
    }
}

/// Robot references for prediction steps 1..=N at times `t + i dt`: the box
/// reference shifted behind the push face by `half_length + head_offset` and
/// sideways by the planned contact offset `d_i`, with the robot yaw equal to
/// the box reference heading.
#[allow(clippy::too_many_arguments)]
pub fn offset_robot_reference(
    obj_ref: &ReferenceTrajectory,
    plan: &ContactPlan,
    box_state: &ObjectState,
    obj_params: &ObjectParams,
    robot_params: &RobotParams,
    t: f64,
    n: usize,
    dt: f64,
) -> Vec<RobotReference> {
    assert!(plan.len() >= n, "contact plan shorter than the loco horizon");
    let back = obj_params.half_length + robot_params.head_offset;
    (0..n)
        .map(|i| {
            let r = obj_ref.sample(t + dt * (i + 1) as f64);
            // keep the heading continuous around the measured box heading
            let psi = box_state.psi + wrap_angle(r.psi - box_state.psi);
            let offset = rot2(r.psi) * Vector2::new(-back, plan.d[i]);
            let p = r.pos + offset;
            RobotReference {
                rpy: Vector3::new(0.0, 0.0, psi),
                pos: Vector3::new(p.x, p.y, robot_params.stand_height),
                omega: Vector3::new(0.0, 0.0, r.omega),
                vel: Vector3::new(r.vel.x, r.vel.y, 0.0),
            }
        })
        .collect()
}
