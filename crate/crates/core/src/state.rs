//! Domain state and parameter types shared by controllers and plant.

use core::fmt;

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::math::wrap_angle;

/// Planar pose and twist of the pushed object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectState {
    /// Heading angle, rad, wrapped to (-pi, pi].
    pub psi: f64,
    /// World position of the center of mass, m.
    pub pos: Vector2<f64>,
    /// Yaw rate, rad/s.
    pub omega_z: f64,
    /// World velocity, m/s.
    pub vel: Vector2<f64>,
}

impl ObjectState {
    pub fn new(psi: f64, pos: Vector2<f64>, omega_z: f64, vel: Vector2<f64>) -> Self {
        Self { psi: wrap_angle(psi), pos, omega_z, vel }
    }

    /// Object at rest at the given planar pose.
    pub fn at_rest(psi: f64, pos: Vector2<f64>) -> Self {
        Self::new(psi, pos, 0.0, Vector2::zeros())
    }
}

/// Inertial and contact-geometry parameters of the pushed object.
///
/// The push face is the body-frame `x = -half_length` face; the contact
/// offset `d` runs along body y and is bounded by `half_width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectParams {
    pub mass: f64,
    /// Yaw inertia about the COM vertical axis, kg m^2.
    pub inertia_z: f64,
    /// COM to push face along body x, m.
    pub half_length: f64,
    /// Push-face half extent along body y, m.
    pub half_width: f64,
    /// Object-ground Coulomb friction coefficient.
    pub mu_ground: f64,
    /// Gravitational acceleration, m/s^2.
    pub gravity: f64,
}

impl ObjectParams {
    /// Uniform-density box of the given planar dimensions.
    pub fn uniform_box(mass: f64, half_length: f64, half_width: f64, mu_ground: f64) -> Self {
        let (a, b) = (2.0 * half_length, 2.0 * half_width);
        Self {
            mass,
            inertia_z: mass * (a * a + b * b) / 12.0,
            half_length,
            half_width,
            mu_ground,
            gravity: 9.81,
        }
    }

    /// Ground-friction breakaway force mu * m * g, N.
    pub fn breakaway_force(&self) -> f64 {
        self.mu_ground * self.mass * self.gravity
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.mass > 0.0) {
            return Err(ParamError::new("object mass must be positive"));
        }
        if !(self.inertia_z > 0.0) {
            return Err(ParamError::new("object inertia_z must be positive"));
        }
        if !(self.half_length > 0.0) || !(self.half_width > 0.0) {
            return Err(ParamError::new("object half extents must be positive"));
        }
        if !(self.mu_ground >= 0.0) {
            return Err(ParamError::new("mu_ground must be non-negative"));
        }
        if !(self.gravity > 0.0) {
            return Err(ParamError::new("gravity must be positive"));
        }
        Ok(())
    }
}

/// Single-rigid-body state of the robot plus its four foot positions.
///
/// Feet are ordered FL, FR, RL, RR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    /// Body orientation as ZYX Euler angles (roll, pitch, yaw), rad.
    pub rpy: Vector3<f64>,
    /// World position of the COM, m.
    pub pos: Vector3<f64>,
    /// Angular velocity in the body frame, rad/s.
    pub omega_body: Vector3<f64>,
    /// World linear velocity, m/s.
    pub vel: Vector3<f64>,
    /// World foot positions, m.
    pub foot_pos: [Vector3<f64>; 4],
}

impl RobotState {
    /// Yaw wrapped to (-pi, pi].
    pub fn yaw(&self) -> f64 {
        wrap_angle(self.rpy.z)
    }

    /// Angular velocity expressed in the world frame.
    pub fn omega_world(&self) -> Vector3<f64> {
        crate::math::rot_rpy(self.rpy) * self.omega_body
    }
}

/// Robot inertial parameters, hip layout and force limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotParams {
    pub mass: f64,
    /// Body-frame inertia tensor, kg m^2.
    pub inertia_body: Matrix3<f64>,
    /// Body-frame hip positions (FL, FR, RL, RR), m.
    pub hip_offsets: [Vector2<f64>; 4],
    /// Body-frame x distance from the COM to the head contact point, m.
    pub head_offset: f64,
    /// Foot-ground friction coefficient for the pyramid constraints.
    pub mu_foot: f64,
    /// Per-foot vertical force bounds, N.
    pub fz_min: f64,
    pub fz_max: f64,
    /// Nominal standing height of the COM, m.
    pub stand_height: f64,
    /// Gravitational acceleration, m/s^2.
    pub gravity: f64,
}

impl RobotParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.mass > 0.0) {
            return Err(ParamError::new("robot mass must be positive"));
        }
        let i = &self.inertia_body;
        if (i - i.transpose()).norm() > 1e-9 {
            return Err(ParamError::new("inertia_body must be symmetric"));
        }
        if i.symmetric_eigenvalues().min() <= 0.0 {
            return Err(ParamError::new("inertia_body must be positive definite"));
        }
        if !(self.fz_min >= 0.0) || !(self.fz_max > self.fz_min) {
            return Err(ParamError::new("need 0 <= fz_min < fz_max"));
        }
        if !(self.mu_foot > 0.0) {
            return Err(ParamError::new("mu_foot must be positive"));
        }
        if !(self.head_offset > 0.0) || !(self.stand_height > 0.0) {
            return Err(ParamError::new("head_offset and stand_height must be positive"));
        }
        if !(self.gravity > 0.0) {
            return Err(ParamError::new("gravity must be positive"));
        }
        Ok(())
    }

    /// World position of the head contact point for a given body pose.
    pub fn head_point(&self, state: &RobotState) -> Vector2<f64> {
        let r = crate::math::rot2(state.yaw());
        state.pos.xy() + r * Vector2::new(self.head_offset, 0.0)
    }
}

/// Invalid parameter or configuration value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamError {
    what: &'static str,
}

impl ParamError {
    pub(crate) fn new(what: &'static str) -> Self {
        Self { what }
    }
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid parameter: {}", self.what)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ParamError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_inertia_matches_plate_formula() {
        let p = ObjectParams::uniform_box(5.0, 0.2, 0.2, 0.5);
        approx::assert_relative_eq!(p.inertia_z, 5.0 * (0.16 + 0.16) / 12.0, epsilon = 1e-12);
        approx::assert_relative_eq!(p.breakaway_force(), 0.5 * 5.0 * 9.81, epsilon = 1e-12);
        p.validate().unwrap();
    }

    #[test]
    fn object_state_wraps_heading() {
        let s = ObjectState::at_rest(4.0, Vector2::zeros());
        assert!(s.psi > -core::f64::consts::PI && s.psi <= core::f64::consts::PI);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let mut p = ObjectParams::uniform_box(5.0, 0.2, 0.2, 0.5);
        p.mass = 0.0;
        assert!(p.validate().is_err());
    }
}
