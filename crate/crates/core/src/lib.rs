//! Core algorithms for quadruped planar pushing with hierarchical MPC.
//!
//! A contact-optimizer MPC chooses the pushing force and the contact location
//! on the object face, and a loco-manipulation MPC turns the resulting
//! interaction force into foot reaction forces for a trotting quadruped. The
//! crate also carries the rigid-body plant (Coulomb-friction box, SRBD robot,
//! unilateral head contact) used to exercise the controllers in closed loop,
//! plus the two comparison controllers (fixed contact point, heuristic
//! lateral policy).
//!
//! Everything here is pure computation on value types: no IO, no clocks, no
//! global state. The crate is `no_std`-compatible (with `alloc`) so the
//! controller stack can run on an onboard computer; the companion `sim` crate
//! carries scenarios, CSV output and the CLI.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod baselines;
pub mod gait;
pub mod loco_mpc;
pub mod math;
pub mod object_mpc;
pub mod plant;
pub mod qp;
pub mod reference;
pub mod state;

mod condense;

pub use baselines::{fixed_contact_plan, heuristic_lateral, HeuristicConfig};
pub use gait::{
    contact_flags, offset_robot_reference, plan_footholds, swing_foot_pos, GaitTable,
    RobotReference,
};
pub use loco_mpc::{build_srbd_model, FootForcePlan, LocoMpc, LocoMpcConfig};
pub use object_mpc::{build_object_model, ContactPlan, ObjectMpc, ObjectMpcConfig};
pub use plant::{
    box_step, check_obstacles, head_contact, robot_step, ContactEvent, ContactKind, Obstacle,
    PlantConfig,
};
pub use qp::{QpProblem, QpSettings, QpSolution, QpSolver, QpStatus};
pub use reference::{RefPoint, ReferenceTrajectory};
pub use state::{ObjectParams, ObjectState, ParamError, RobotParams, RobotState};
