//! Comparison controllers: a fixed-contact-location plan for the plain
//! locomotion MPC, and the heuristic lateral-velocity policy that slides the
//! contact point based on the heading error toward the target.

use nalgebra::Vector2;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::math::wrap_angle;
use crate::object_mpc::ContactPlan;
use crate::reference::ReferenceTrajectory;
use crate::state::ObjectState;

/// Parameters of the heuristic lateral policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicConfig {
    /// Commanded lateral speed magnitude, m/s.
    pub v_y_des: f64,
    /// Heading-error half width inside which no correction is issued, rad.
    pub deadband: f64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self { v_y_des: 0.1, deadband: 0.05 }
    }
}

impl HeuristicConfig {
    pub fn validate(&self) -> Result<(), crate::state::ParamError> {
        if !(self.v_y_des > 0.0) {
            return Err(crate::state::ParamError::new("v_y_des must be positive"));
        }
        if !(self.deadband >= 0.0) {
            return Err(crate::state::ParamError::new("deadband must be non-negative"));
        }
        Ok(())
    }
}

/// Open-loop contact plan for the baseline controller: centered contact
/// point and a constant push force, independent of the box state.
pub fn fixed_contact_plan(
    _reference: &ReferenceTrajectory,
    _t: f64,
    n: usize,
    f_push: f64,
) -> ContactPlan {
    ContactPlan::constant(f_push, 0.0, n, 0)
}

/// Heuristic lateral velocity (robot frame): slide toward the side that
/// rotates the box heading onto the bearing of the target, with a deadband
/// instead of a bare sign to reduce chattering.
pub fn heuristic_lateral(object: &ObjectState, target: Vector2<f64>, cfg: &HeuristicConfig) -> f64 {
    let to_target = target - object.pos;
    let psi_target = to_target.y.atan2(to_target.x);
    let err = wrap_angle(object.psi - psi_target);
    if err.abs() <= cfg.deadband {
        0.0
    } else {
        cfg.v_y_des * err.signum()
    }
}
