//! Model, controller, and simulation harness for a tendon-driven soft wrist.
//!
//! The wrist is a flexible backbone bending as a circular arc (constant
//! curvature) with three peripheral tendons at radius `r`. The crate provides:
//!
//! - [`kinematics`]: arc geometry, backbone frames, tendon lengths and rates.
//! - [`dynamics`]: lumped energy model, the planar equation of motion
//!   `M(a)·a'' + C(a)·a'^2 + K·a = D·F`, and a fixed-step RK4 integrator.
//! - [`qp`]: a dense convex QP solver (dual active-set with warm starting)
//!   plus a brute-force enumeration oracle used for self-tests.
//! - [`mpc`]: receding-horizon controller over the feedback-linearized
//!   double-integrator model, with soft position and hard rate constraints.
//! - [`sim`]: closed-loop scenario runner and tracking metrics.

pub mod dynamics;
pub mod kinematics;
pub mod mpc;
pub mod qp;
pub mod sim;

pub use dynamics::{PlanarCoefficients, WristParams};
pub use kinematics::{CurvatureState, WristGeometry};
pub use mpc::{ControllerState, MpcConfig};
pub use qp::{QpProblem, QpSolution, QpStatus};
pub use sim::{Disturbance, Metrics, Scenario, Trajectory};
