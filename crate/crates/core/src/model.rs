//! Nonlinear boom crane model.
//!
//! Generalized coordinates `q = [θ1, θ2, θ3, θ4]`: payload radial swing,
//! payload tangential swing, boom pitch (measured from the vertical) and boom
//! yaw. Only pitch and yaw are actuated. The equations of motion are
//!
//! ```text
//! M(q) q̈ + c(q, q̇) + g(q) = [0, 0, u3, u4]ᵀ
//! ```
//!
//! where `c = C(q, q̇) q̇` is evaluated directly from the grouped velocity
//! terms, never as a matrix.

use nalgebra::{Vector2, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::StateVector;

/// Largest accepted condition estimate of the mass matrix.
const MASS_COND_LIMIT: f64 = 1e12;

/// Physical constants of the crane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CraneParams {
    /// Boom mass `M` (kg).
    pub boom_mass: f64,
    /// Payload mass `m` (kg).
    pub payload_mass: f64,
    /// Ballast mass `M1` (kg).
    pub ballast_mass: f64,
    /// Boom length `L` (m).
    pub boom_length: f64,
    /// Rope length `l` (m).
    pub rope_length: f64,
    /// Ballast arm length `L1` (m).
    pub ballast_length: f64,
    /// Boom moments of inertia (kg·m²).
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    /// Ballast moment of inertia about the slewing axis (kg·m²).
    pub ballast_inertia: f64,
    /// Gravitational acceleration (m/s²).
    pub gravity: f64,
}

impl Default for CraneParams {
    fn default() -> Self {
        Self::with_default_inertias(2.5, 3.5, 6.0, 2.0, 1.0, 0.5, 9.81)
    }
}

impl CraneParams {
    /// Builds parameters with slender-rod boom inertias `Jy = Jz = M L²/3`,
    /// `Jx = 0` and a point-mass ballast `Ib = M1 L1²`.
    pub fn with_default_inertias(
        boom_mass: f64,
        payload_mass: f64,
        ballast_mass: f64,
        boom_length: f64,
        rope_length: f64,
        ballast_length: f64,
        gravity: f64,
    ) -> Self {
        let rod = boom_mass * boom_length * boom_length / 3.0;
        Self {
            boom_mass,
            payload_mass,
            ballast_mass,
            boom_length,
            rope_length,
            ballast_length,
            jx: 0.0,
            jy: rod,
            jz: rod,
            ballast_inertia: ballast_mass * ballast_length * ballast_length,
            gravity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("boom_mass", self.boom_mass),
            ("payload_mass", self.payload_mass),
            ("ballast_mass", self.ballast_mass),
            ("boom_length", self.boom_length),
            ("rope_length", self.rope_length),
            ("ballast_length", self.ballast_length),
            ("gravity", self.gravity),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "crane.{name} must be positive, got {value}"
                )));
            }
        }
        let non_negative = [
            ("jx", self.jx),
            ("jy", self.jy),
            ("jz", self.jz),
            ("ballast_inertia", self.ballast_inertia),
        ];
        for (name, value) in non_negative {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "crane.{name} must be non-negative, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Static moment `½ M L + m L − ½ M1 L1` multiplying `g sin θ3`.
    pub fn pitch_static_moment(&self) -> f64 {
        0.5 * self.boom_mass * self.boom_length + self.payload_mass * self.boom_length
            - 0.5 * self.ballast_mass * self.ballast_length
    }
}

/// Configuration and velocity of the crane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CraneState {
    pub q: Vector4<f64>,
    pub qdot: Vector4<f64>,
}

impl CraneState {
    pub fn new(q: Vector4<f64>, qdot: Vector4<f64>) -> Self {
        Self { q, qdot }
    }

    pub fn from_vector(x: &StateVector) -> Self {
        Self {
            q: x.fixed_rows::<4>(0).into_owned(),
            qdot: x.fixed_rows::<4>(4).into_owned(),
        }
    }

    pub fn to_vector(&self) -> StateVector {
        let mut x = StateVector::zeros();
        x.fixed_rows_mut::<4>(0).copy_from(&self.q);
        x.fixed_rows_mut::<4>(4).copy_from(&self.qdot);
        x
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qdot.iter()).all(|v| v.is_finite())
    }
}

/// Pitch and yaw torques `[u3, u4]` (N·m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput(pub Vector2<f64>);

impl ControlInput {
    pub fn new(pitch: f64, yaw: f64) -> Self {
        Self(Vector2::new(pitch, yaw))
    }

    pub fn pitch(&self) -> f64 {
        self.0[0]
    }

    pub fn yaw(&self) -> f64 {
        self.0[1]
    }
}

pub fn mass_matrix(q: &Vector4<f64>, p: &CraneParams) -> nalgebra::Matrix4<f64> {
    let (t1, t2, t3) = (q[0], q[1], q[2]);
    let (m, l, big_l) = (p.payload_mass, p.rope_length, p.boom_length);
    let (s3, c3) = t3.sin_cos();
    let ml2 = m * l * l;
    let mll = m * l * big_l;

    let m11 = ml2 * (1.0 + t1 * t1);
    let m12 = ml2 * t1 * t2;
    let m13 = mll * (c3 - t1 * s3);
    let m14 = -ml2 * t2;
    let m22 = ml2 * (1.0 + t2 * t2);
    let m23 = -mll * t2 * s3;
    let m24 = ml2 * t1 + mll * s3;
    let m33 = m * big_l * big_l + p.jy;
    let m34 = -mll * t2 * c3;
    let m44 = m * big_l * big_l * s3 * s3
        + ml2 * (t1 * t1 + t2 * t2)
        + 2.0 * mll * t1 * s3
        + p.ballast_inertia
        + p.jx * s3 * s3
        + p.jz * c3 * c3;

    #[rustfmt::skip]
    let mm = nalgebra::Matrix4::new(
        m11, m12, m13, m14,
        m12, m22, m23, m24,
        m13, m23, m33, m34,
        m14, m24, m34, m44,
    );
    mm
}

/// Centripetal and Coriolis contributions `C(q, q̇) q̇`.
pub fn velocity_terms(q: &Vector4<f64>, qdot: &Vector4<f64>, p: &CraneParams) -> Vector4<f64> {
    let (t1, t2, t3) = (q[0], q[1], q[2]);
    let (d1, d2, d3, d4) = (qdot[0], qdot[1], qdot[2], qdot[3]);
    let (m, l, big_l) = (p.payload_mass, p.rope_length, p.boom_length);
    let (s3, c3) = t3.sin_cos();
    let s23 = (2.0 * t3).sin();
    let ml2 = m * l * l;
    let mll = m * l * big_l;
    let swing_rate_sq = d1 * d1 + d2 * d2;

    let c1 = ml2 * t1 * swing_rate_sq
        - mll * (s3 + t1 * c3) * d3 * d3
        - m * l * (l * t1 + big_l * s3) * d4 * d4
        - 2.0 * ml2 * d2 * d4;
    let c2 = ml2 * t2 * swing_rate_sq - mll * t2 * c3 * d3 * d3 - ml2 * t2 * d4 * d4
        + 2.0 * ml2 * d1 * d4
        + 2.0 * mll * d3 * d4 * c3;
    let c3_term = -mll * s3 * swing_rate_sq
        - (0.5 * (p.jx - p.jz) * s23 + mll * t1 * c3 + 0.5 * m * big_l * big_l * s23) * d4 * d4
        - 2.0 * mll * d2 * d4 * c3;
    let c4 = (m * big_l * big_l * d3 * s23
        + 2.0 * ml2 * (t1 * d1 + t2 * d2)
        + 2.0 * mll * (d1 * s3 + t1 * d3 * c3)
        + (p.jx - p.jz) * d3 * s23)
        * d4
        + mll * t2 * d3 * d3 * s3;

    Vector4::new(c1, c2, c3_term, c4)
}

pub fn gravity_vector(q: &Vector4<f64>, p: &CraneParams) -> Vector4<f64> {
    let mgl = p.payload_mass * p.gravity * p.rope_length;
    Vector4::new(
        mgl * q[0],
        mgl * q[1],
        -p.gravity * p.pitch_static_moment() * q[2].sin(),
        0.0,
    )
}

/// Joint accelerations `q̈ = M⁻¹ (S u − c − g)`.
pub fn forward_dynamics(
    state: &CraneState,
    u: &ControlInput,
    p: &CraneParams,
) -> Result<Vector4<f64>> {
    let mm = mass_matrix(&state.q, p);
    let rhs = Vector4::new(0.0, 0.0, u.pitch(), u.yaw())
        - velocity_terms(&state.q, &state.qdot, p)
        - gravity_vector(&state.q, p);

    let singular = |cond: f64| Error::SingularMassMatrix {
        q: [state.q[0], state.q[1], state.q[2], state.q[3]],
        cond,
    };
    let chol = mm.cholesky().ok_or_else(|| singular(f64::INFINITY))?;
    let diag = chol.l_dirty().diagonal();
    let ratio = diag.max() / diag.min();
    let cond = ratio * ratio;
    if !(cond < MASS_COND_LIMIT) {
        return Err(singular(cond));
    }
    Ok(chol.solve(&rhs))
}

/// First-order form `ẋ = [q̇; q̈]` of the dynamics.
pub fn state_derivative(x: &StateVector, u: &ControlInput, p: &CraneParams) -> Result<StateVector> {
    let state = CraneState::from_vector(x);
    let qddot = forward_dynamics(&state, u, p)?;
    let mut dx = StateVector::zeros();
    dx.fixed_rows_mut::<4>(0).copy_from(&state.qdot);
    dx.fixed_rows_mut::<4>(4).copy_from(&qddot);
    Ok(dx)
}

/// Gravity compensation holding the boom at pitch `theta3`.
pub fn equilibrium_input(theta3: f64, p: &CraneParams) -> ControlInput {
    ControlInput::new(-p.gravity * p.pitch_static_moment() * theta3.sin(), 0.0)
}

/// Steady state `x̄(v) = [0, 0, v3, v4, 0, 0, 0, 0]` for a boom reference `v`.
pub fn equilibrium_state(v: &Vector2<f64>) -> CraneState {
    CraneState::new(Vector4::new(0.0, 0.0, v[0], v[1]), Vector4::zeros())
}

/// Same as [`equilibrium_state`], as a flat state vector.
pub fn equilibrium_vector(v: &Vector2<f64>) -> StateVector {
    let mut x = StateVector::zeros();
    x[2] = v[0];
    x[3] = v[1];
    x
}

/// Payload position `(x, y, z)` relative to the boom pivot.
pub fn forward_kinematics(q: &Vector4<f64>, p: &CraneParams) -> Vector3<f64> {
    let (t1, t2, t3, t4) = (q[0], q[1], q[2], q[3]);
    let (big_l, l) = (p.boom_length, p.rope_length);
    let (s3, c3) = t3.sin_cos();
    let (s4, c4) = t4.sin_cos();
    Vector3::new(
        big_l * s3 * c4 + l * t1 * c4 - l * t2 * s4,
        big_l * s3 * s4 + l * t1 * s4 + l * t2 * c4,
        big_l * c3 - l * (t1 * t1 + t2 * t2).sqrt().cos(),
    )
}

/// Total mechanical energy `½ q̇ᵀ M q̇ + ½ m g l (θ1² + θ2²) + g (½ML + mL − ½M1L1) cos θ3`.
pub fn total_energy(state: &CraneState, p: &CraneParams) -> f64 {
    let kinetic = 0.5 * state.qdot.dot(&(mass_matrix(&state.q, p) * state.qdot));
    let swing = 0.5
        * p.payload_mass
        * p.gravity
        * p.rope_length
        * (state.q[0] * state.q[0] + state.q[1] * state.q[1]);
    let boom = p.gravity * p.pitch_static_moment() * state.q[2].cos();
    kinetic + swing + boom
}
