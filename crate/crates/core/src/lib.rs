//! Constrained control of an underactuated boom crane.
//!
//! A linear-quadratic regulator pre-stabilizes the nonlinear 4-DoF crane
//! around a boom reference `v = [pitch, yaw]`. An explicit reference governor
//! moves `v` towards the operator target `r` only as fast as Lyapunov level-set
//! certificates allow, so that joint limits, swing bounds and obstacle
//! clearances are never violated.
//!
//! Modules, bottom-up:
//! - [`model`]: equations of motion, kinematics, gravity compensation.
//! - [`linearize`]: finite-difference linear models about equilibria.
//! - [`synthesis`]: Lyapunov/Riccati solvers and level-set certificates.
//! - [`constraints`]: joint limits, obstacle boxes and their half-plane embeddings.
//! - [`erg`]: dynamic safety margin, navigation field, governor update.
//! - [`sim`]: closed-loop integration, logging and metrics.
//! - [`config`]: TOML configuration.
//! - [`cli`]: subcommands behind the `crane-erg` binary.

pub mod cli;
pub mod config;
pub mod constraints;
pub mod erg;
pub mod error;
pub mod linearize;
pub mod model;
pub mod sim;
pub mod synthesis;

pub use error::{Error, Result};

/// Full state `x = [q, q̇]`.
pub type StateVector = nalgebra::SVector<f64, 8>;
pub type StateMatrix = nalgebra::SMatrix<f64, 8, 8>;
pub type InputMatrix = nalgebra::SMatrix<f64, 8, 2>;
/// State-feedback gain `u = −K δx`.
pub type Gain = nalgebra::SMatrix<f64, 2, 8>;

/// Feedback gain reported for the inner loop in the original crane study.
#[rustfmt::skip]
pub const REFERENCE_GAIN: [[f64; 8]; 2] = [
    [-106.1665, 0.0, 89.6362, 0.0, -11.28, 0.0, 68.877, 0.0],
    [0.0, -91.3357, 0.0, 31.6228, 0.0, -7.8488, 0.0, 52.3688],
];

pub fn reference_gain() -> Gain {
    Gain::from_fn(|i, j| REFERENCE_GAIN[i][j])
}
