//! Ground-truth physics: penalty-based unilateral head contact, planar box
//! with Coulomb friction (translational and torsional, with stiction), and
//! the robot single rigid body driven by stance-foot forces. Unlike the MPC
//! models, the plant applies the head-force moment to the robot and lets the
//! head separate from or slide off the push face.

use nalgebra::{Vector2, Vector3};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::math::{cross2, euler_rate_matrix, rot2, rot_rpy, wrap_angle};
use crate::state::{ObjectParams, ObjectState, RobotParams, RobotState};

/// Effective torsional friction arm as a fraction of the face half width
/// (uniform pressure approximation).
pub const TORSION_ARM_FACTOR: f64 = 0.4;

/// Contact state between the robot head and the box rear face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactKind {
    InContact,
    Separated,
    SlidOffFace,
}

/// Result of the head-face contact resolution. Forces act on the box;
/// the robot receives the opposite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactEvent {
    pub kind: ContactKind,
    /// Contact location along the face from the COM projection, m (body y).
    pub point_offset: f64,
    /// Force along the face inward normal (box body +x), N; never negative.
    pub normal_force: f64,
    /// Friction force along the face (box body +y), N, acting on the box.
    pub tangential_force: f64,
    /// Total contact force on the box in world coordinates, N.
    pub force_world: Vector2<f64>,
    /// World position of the contact point, m.
    pub point_world: Vector2<f64>,
    /// Head-to-face-plane gap, m; negative when penetrating.
    pub gap: f64,
}

impl ContactEvent {
    pub fn separated(point_offset: f64, gap: f64, point_world: Vector2<f64>) -> Self {
        Self {
            kind: ContactKind::Separated,
            point_offset,
            normal_force: 0.0,
            tangential_force: 0.0,
            force_world: Vector2::zeros(),
            point_world,
            gap,
        }
    }
}

/// Plant stepping and contact parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantConfig {
    /// Physics step, s; at or below the controller tick.
    pub dt: f64,
    /// Contact normal stiffness, N/m.
    pub k_n: f64,
    /// Contact normal damping, N s/m.
    pub c_n: f64,
    /// Head-face friction coefficient.
    pub mu_head: f64,
    /// Sliding speed below which friction is treated as static, m/s.
    pub stiction_tol: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self { dt: 1e-3, k_n: 5000.0, c_n: 50.0, mu_head: 0.1, stiction_tol: 0.01 }
    }
}

impl PlantConfig {
    pub fn validate(&self, control_dt: f64) -> Result<(), crate::state::ParamError> {
        if !(self.dt > 0.0 && self.dt <= control_dt) {
            return Err(crate::state::ParamError::new("plant dt must be in (0, control dt]"));
        }
        if !(self.k_n > 0.0 && self.c_n > 0.0) {
            return Err(crate::state::ParamError::new("contact stiffness/damping must be positive"));
        }
        if !(self.mu_head >= 0.0) {
            return Err(crate::state::ParamError::new("mu_head must be non-negative"));
        }
        if !(self.stiction_tol > 0.0) {
            return Err(crate::state::ParamError::new("stiction_tol must be positive"));
        }
        Ok(())
    }
}

/// Resolve the unilateral head-face contact: spring-damper normal force when
/// the head point is behind the face plane and inside the face extent,
/// regularized Coulomb friction along the face.
pub fn head_contact(
    robot: &RobotState,
    object: &ObjectState,
    obj_params: &ObjectParams,
    robot_params: &RobotParams,
    cfg: &PlantConfig,
) -> ContactEvent {
    let r_box = rot2(object.psi);
    let head = robot_params.head_point(robot);
    let head_b = r_box.transpose() * (head - object.pos);
    let depth = head_b.x + obj_params.half_length; // > 0 when past the face plane
    let s = head_b.y;

    if depth <= 0.0 {
        return ContactEvent::separated(s, -depth, head);
    }
    if s.abs() > obj_params.half_width {
        return ContactEvent {
            kind: ContactKind::SlidOffFace,
            point_offset: s,
            normal_force: 0.0,
            tangential_force: 0.0,
            force_world: Vector2::zeros(),
            point_world: head,
            gap: -depth,
        };
    }

    // relative velocity of the head against the box material point under it
    let omega_r = robot.omega_world().z;
    let r_head = head - robot.pos.xy();
    let v_head = robot.vel.xy() + omega_r * Vector2::new(-r_head.y, r_head.x);
    let r_contact = head - object.pos;
    let v_box = object.vel + object.omega_z * Vector2::new(-r_contact.y, r_contact.x);
    let rel = r_box.transpose() * (v_head - v_box);

    let f_n = (cfg.k_n * depth + cfg.c_n * rel.x).max(0.0);
    let slide = rel.y;
    let f_t = cfg.mu_head * f_n * (slide / cfg.stiction_tol).clamp(-1.0, 1.0);

    ContactEvent {
        kind: ContactKind::InContact,
        point_offset: s,
        normal_force: f_n,
        tangential_force: f_t,
        force_world: r_box * Vector2::new(f_n, f_t),
        point_world: head,
        gap: -depth,
    }
}

/// Semi-implicit Euler step of the box under the contact force and ground
/// Coulomb friction with stiction in both translation and rotation.
pub fn box_step(
    object: &ObjectState,
    contact: &ContactEvent,
    params: &ObjectParams,
    cfg: &PlantConfig,
    dt: f64,
) -> ObjectState {
    debug_assert!(dt > 0.0);
    let applied = contact.force_world;
    let breakaway = params.breakaway_force();

    let speed = object.vel.norm();
    let vel = if speed > cfg.stiction_tol {
        let friction = -object.vel / speed * breakaway;
        object.vel + (applied + friction) * (dt / params.mass)
    } else if applied.norm() <= breakaway {
        Vector2::zeros()
    } else {
        let friction = -applied / applied.norm() * breakaway;
        object.vel + (applied + friction) * (dt / params.mass)
    };

    let arm = contact.point_world - object.pos;
    let torque = cross2(arm, applied);
    let torque_max = TORSION_ARM_FACTOR * params.half_width * breakaway;
    let omega_tol = cfg.stiction_tol / params.half_width;
    let omega = if object.omega_z.abs() > omega_tol {
        object.omega_z + (torque - torque_max * object.omega_z.signum()) * (dt / params.inertia_z)
    } else if torque.abs() <= torque_max {
        0.0
    } else {
        object.omega_z + (torque - torque_max * torque.signum()) * (dt / params.inertia_z)
    };

    ObjectState {
        psi: wrap_angle(object.psi + omega * dt),
        pos: object.pos + vel * dt,
        omega_z: omega,
        vel,
    }
}

/// Semi-implicit Euler step of the robot single rigid body. Stance feet stay
/// pinned; swing feet are placed kinematically at `swing_targets`. The head
/// reaction (including its moment) is applied at the contact point.
pub fn robot_step(
    robot: &RobotState,
    foot_forces: &[Vector3<f64>; 4],
    contact: &ContactEvent,
    stance: &[bool; 4],
    swing_targets: &[Vector3<f64>; 4],
    params: &RobotParams,
    dt: f64,
) -> RobotState {
    debug_assert!(dt > 0.0);
    let mut force = Vector3::new(0.0, 0.0, -params.mass * params.gravity);
    let mut torque_world = Vector3::zeros();
    for i in 0..4 {
        if stance[i] {
            force += foot_forces[i];
            torque_world += (robot.foot_pos[i] - robot.pos).cross(&foot_forces[i]);
        }
    }
    let head_react = Vector3::new(-contact.force_world.x, -contact.force_world.y, 0.0);
    force += head_react;
    let r = rot_rpy(robot.rpy);
    let head_arm = r * Vector3::new(params.head_offset, 0.0, 0.0);
    torque_world += head_arm.cross(&head_react);

    let vel = robot.vel + force * (dt / params.mass);
    let pos = robot.pos + vel * dt;

    let torque_body = r.transpose() * torque_world;
    let omega = robot.omega_body;
    let omega_dot = params
        .inertia_body
        .try_inverse()
        .expect("inertia is SPD")
        * (torque_body - omega.cross(&(params.inertia_body * omega)));
    let omega_body = omega + omega_dot * dt;
    let rpy = robot.rpy + euler_rate_matrix(robot.rpy) * omega_body * dt;

    let foot_pos = core::array::from_fn(|i| {
        if stance[i] {
            robot.foot_pos[i]
        } else {
            swing_targets[i]
        }
    });

    RobotState { rpy, pos, omega_body, vel, foot_pos }
}

/// Circular obstacle on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub center: Vector2<f64>,
    pub radius: f64,
}

/// True when the box footprint overlaps any obstacle disc.
pub fn check_obstacles(
    object: &ObjectState,
    params: &ObjectParams,
    obstacles: &[Obstacle],
) -> bool {
    let r = rot2(object.psi);
    obstacles.iter().any(|obs| {
        let local = r.transpose() * (obs.center - object.pos);
        let closest = Vector2::new(
            local.x.clamp(-params.half_length, params.half_length),
            local.y.clamp(-params.half_width, params.half_width),
        );
        (local - closest).norm() <= obs.radius
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Matrix3;

    fn box_params() -> ObjectParams {
        ObjectParams::uniform_box(5.0, 0.2, 0.2, 0.5)
    }

    fn robot_params() -> RobotParams {
        RobotParams {
            mass: 12.0,
            inertia_body: Matrix3::from_diagonal(&Vector3::new(0.017, 0.057, 0.064)),
            hip_offsets: [
                Vector2::new(0.183, 0.132),
                Vector2::new(0.183, -0.132),
                Vector2::new(-0.183, 0.132),
                Vector2::new(-0.183, -0.132),
            ],
            head_offset: 0.30,
            mu_foot: 0.6,
            fz_min: 0.5,
            fz_max: 120.0,
            stand_height: 0.27,
            gravity: 9.81,
        }
    }

    /// Robot posed so its head sits at depth `depth` behind the face center
    /// of a box at the origin.
    fn robot_at_depth(depth: f64, p: &RobotParams, obj: &ObjectParams) -> RobotState {
        RobotState {
            rpy: Vector3::zeros(),
            pos: Vector3::new(-obj.half_length + depth - p.head_offset, 0.0, p.stand_height),
            omega_body: Vector3::zeros(),
            vel: Vector3::zeros(),
            foot_pos: core::array::from_fn(|i| {
                Vector3::new(p.hip_offsets[i].x, p.hip_offsets[i].y, 0.0)
            }),
        }
    }

    #[test]
    fn gap_gives_separated_with_zero_forces() {
        let obj = box_params();
        let p = robot_params();
        let object = ObjectState::at_rest(0.0, Vector2::zeros());
        let robot = robot_at_depth(-0.01, &p, &obj);
        let e = head_contact(&robot, &object, &obj, &p, &PlantConfig::default());
        assert_eq!(e.kind, ContactKind::Separated);
        assert_eq!(e.normal_force, 0.0);
        assert_eq!(e.tangential_force, 0.0);
        assert_relative_eq!(e.gap, 0.01, epsilon = 1e-12);
    }

    #[test]
    fn spring_force_matches_stiffness_times_depth() {
        let obj = box_params();
        let p = robot_params();
        let object = ObjectState::at_rest(0.0, Vector2::zeros());
        let robot = robot_at_depth(0.001, &p, &obj);
        let e = head_contact(&robot, &object, &obj, &p, &PlantConfig::default());
        assert_eq!(e.kind, ContactKind::InContact);
        assert_relative_eq!(e.normal_force, 5.0, epsilon = 1e-9);
        assert_relative_eq!(e.point_offset, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn lateral_overrun_slides_off_the_face() {
        let obj = box_params();
        let p = robot_params();
        let object = ObjectState::at_rest(0.0, Vector2::zeros());
        let mut robot = robot_at_depth(0.001, &p, &obj);
        robot.pos.y = obj.half_width + 0.001;
        let e = head_contact(&robot, &object, &obj, &p, &PlantConfig::default());
        assert_eq!(e.kind, ContactKind::SlidOffFace);
        assert_eq!(e.normal_force, 0.0);
    }

    fn pushed_event(force: f64, obj: &ObjectParams) -> ContactEvent {
        ContactEvent {
            kind: ContactKind::InContact,
            point_offset: 0.0,
            normal_force: force,
            tangential_force: 0.0,
            force_world: Vector2::new(force, 0.0),
            point_world: Vector2::new(-obj.half_length, 0.0),
            gap: -1e-3,
        }
    }

    #[test]
    fn stiction_holds_below_breakaway() {
        let obj = box_params();
        let cfg = PlantConfig::default();
        let mut state = ObjectState::at_rest(0.0, Vector2::zeros());
        let contact = pushed_event(20.0, &obj); // < mu m g = 24.525 N
        for _ in 0..1000 {
            state = box_step(&state, &contact, &obj, &cfg, cfg.dt);
        }
        assert_eq!(state.vel, Vector2::zeros());
        assert_eq!(state.pos, Vector2::zeros());
    }

    #[test]
    fn coulomb_deceleration_stops_in_expected_time() {
        let obj = box_params();
        let cfg = PlantConfig::default();
        let mut state = ObjectState::new(0.0, Vector2::zeros(), 0.0, Vector2::new(0.5, 0.0));
        let free = ContactEvent::separated(0.0, 0.1, Vector2::new(-0.2, 0.0));
        let mut t = 0.0;
        while state.vel.norm() > 0.0 && t < 1.0 {
            state = box_step(&state, &free, &obj, &cfg, cfg.dt);
            t += cfg.dt;
        }
        // v / (mu g) = 0.5 / 4.905 = 0.1019 s
        assert!((t - 0.102).abs() < 0.01, "stopped at t = {t}");
    }

    #[test]
    fn constant_push_accelerates_at_net_force_over_mass() {
        let obj = box_params();
        let cfg = PlantConfig::default();
        let mut state = ObjectState::at_rest(0.0, Vector2::zeros());
        let contact = pushed_event(30.0, &obj);
        for _ in 0..1000 {
            state = box_step(&state, &contact, &obj, &cfg, cfg.dt);
        }
        // (30 - 24.525)/5 = 1.095 m/s^2 for 1 s
        assert_relative_eq!(state.vel.x, 1.095, epsilon = 2e-3);
    }

    #[test]
    fn offset_contact_torques_the_box() {
        let obj = box_params();
        let cfg = PlantConfig::default();
        let mut state = ObjectState::at_rest(0.0, Vector2::zeros());
        // push on the right rear corner region: d < 0 gives positive torque
        let contact = ContactEvent {
            kind: ContactKind::InContact,
            point_offset: -0.15,
            normal_force: 30.0,
            tangential_force: 0.0,
            force_world: Vector2::new(30.0, 0.0),
            point_world: Vector2::new(-obj.half_length, -0.15),
            gap: -1e-3,
        };
        for _ in 0..300 {
            state = box_step(&state, &contact, &obj, &cfg, cfg.dt);
        }
        assert!(state.omega_z > 0.0, "expected left turn, omega = {}", state.omega_z);
        assert!(state.psi > 0.0);
    }

    #[test]
    fn friction_dissipates_kinetic_energy_every_step() {
        let obj = box_params();
        let cfg = PlantConfig::default();
        let mut state = ObjectState::new(0.3, Vector2::zeros(), 1.5, Vector2::new(0.4, -0.2));
        let free = ContactEvent::separated(0.0, 0.1, Vector2::zeros());
        let ke = |s: &ObjectState| {
            0.5 * obj.mass * s.vel.norm_squared() + 0.5 * obj.inertia_z * s.omega_z * s.omega_z
        };
        let mut last = ke(&state);
        for _ in 0..1200 {
            state = box_step(&state, &free, &obj, &cfg, cfg.dt);
            let now = ke(&state);
            assert!(now <= last + 1e-12);
            last = now;
        }
        assert!(last < 1e-9, "box should come to rest, KE = {last}");
    }

    #[test]
    fn balanced_robot_stays_put() {
        let p = robot_params();
        let mut r = robot_at_depth(-0.05, &p, &box_params());
        r.pos = Vector3::new(0.0, 0.0, p.stand_height);
        let fz = p.mass * p.gravity / 4.0;
        let forces = [Vector3::new(0.0, 0.0, fz); 4];
        let no_contact = ContactEvent::separated(0.0, 0.1, Vector2::zeros());
        let stance = [true; 4];
        let targets = r.foot_pos;
        let next = robot_step(&r, &forces, &no_contact, &stance, &targets, &p, 1e-3);
        assert!((next.pos - r.pos).norm() < 1e-9);
        assert!((next.vel - r.vel).norm() < 1e-9);
        assert!((next.rpy - r.rpy).norm() < 1e-9);
    }

    #[test]
    fn unsupported_robot_free_falls() {
        let p = robot_params();
        let r = robot_at_depth(-0.05, &p, &box_params());
        let forces = [Vector3::zeros(); 4];
        let no_contact = ContactEvent::separated(0.0, 0.1, Vector2::zeros());
        let next =
            robot_step(&r, &forces, &no_contact, &[false; 4], &r.foot_pos, &p, 1e-3);
        assert_relative_eq!(next.vel.z, -p.gravity * 1e-3, epsilon = 1e-12);
    }

    #[test]
    fn swing_feet_follow_targets_stance_feet_pin() {
        let p = robot_params();
        let r = robot_at_depth(-0.05, &p, &box_params());
        let targets = [
            r.foot_pos[0],
            Vector3::new(0.5, -0.1, 0.03),
            Vector3::new(-0.1, 0.2, 0.05),
            r.foot_pos[3],
        ];
        let next = robot_step(
            &r,
            &[Vector3::new(0.0, 0.0, 30.0); 4],
            &ContactEvent::separated(0.0, 0.1, Vector2::zeros()),
            &[true, false, false, true],
            &targets,
            &p,
            1e-3,
        );
        assert_eq!(next.foot_pos[0], r.foot_pos[0]);
        assert_eq!(next.foot_pos[1], targets[1]);
        assert_eq!(next.foot_pos[2], targets[2]);
        assert_eq!(next.foot_pos[3], r.foot_pos[3]);
    }

    #[test]
    fn obstacle_checks() {
        let obj = box_params();
        let state = ObjectState::at_rest(0.0, Vector2::zeros());
        assert!(!check_obstacles(&state, &obj, &[]));
        assert!(check_obstacles(
            &state,
            &obj,
            &[Obstacle { center: Vector2::zeros(), radius: 0.05 }]
        ));
        // along the diagonal, just beyond half diagonal + radius
        let half_diag = (obj.half_length.powi(2) + obj.half_width.powi(2)).sqrt();
        let dir = Vector2::new(1.0, 1.0).normalize();
        let near = Obstacle { center: dir * (half_diag + 0.1 - 0.01), radius: 0.1 };
        let far = Obstacle { center: dir * (half_diag + 0.1 + 0.01), radius: 0.1 };
        assert!(check_obstacles(&state, &obj, &[near]));
        assert!(!check_obstacles(&state, &obj, &[far]));
    }

    #[test]
    fn unilateral_contact_normal_force_never_negative() {
        let obj = box_params();
        let p = robot_params();
        let cfg = PlantConfig::default();
        // approaching and receding head velocities
        for vx in [-0.5, -0.1, 0.0, 0.1, 0.5] {
            let object = ObjectState::at_rest(0.0, Vector2::zeros());
            let mut robot = robot_at_depth(0.0005, &p, &obj);
            robot.vel.x = vx;
            let e = head_contact(&robot, &object, &obj, &p, &cfg);
            assert!(e.normal_force >= 0.0);
        }
    }
}
