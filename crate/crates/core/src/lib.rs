//! Worst-case, game-theoretic time-to-collision for traffic snapshots.
//!
//! Each other agent is treated in turn as the single adversary of the
//! subject vehicle (SV). For every look-ahead step the pair's worst-case
//! end-of-horizon distance is the value of a constrained minimax quadratic
//! program; the model predictive time-to-collision is the first step at which
//! that distance drops to the collision radius.
//!
//! ```
//! use mprism::{mprttc, Agent, EvalParams, Snapshot, VehicleState};
//!
//! let sv = Agent::vehicle("sv", "ev-like", VehicleState::new(0.0, 0.0, 10.0, 0.0).unwrap());
//! let far = Agent::vehicle("far", "ev-like", VehicleState::new(500.0, 0.0, 10.0, 0.0).unwrap());
//! let snapshot = Snapshot::new(0.0, sv, vec![far]).unwrap();
//! let result = mprttc(&snapshot, &EvalParams::default()).unwrap();
//! assert!(result.safe);
//! assert!((result.tau - 1.0).abs() < 1e-12);
//! ```

pub mod action_space;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod kinematics;
pub mod minimax_qp;
pub mod mprttc;
pub mod parallel;
pub mod scenario;

pub use action_space::{AccelProfile, ActionPolytope, Breakpoints, ProfileSet};
pub use error::{Error, Result};
pub use kinematics::{Agent, AgentBody, PedestrianState, VehicleState};
pub use minimax_qp::{MinimaxQP, SaddleResult, SolverSettings};
pub use mprttc::{dominant_agent, h_star, mprttc, EvalParams, MprttcResult, Snapshot};
pub use scenario::{evaluate_trace, parse_trace, ScenarioReport, ScenarioTrace};
