//! Central finite-difference linearization about a boom equilibrium.

use nalgebra::{SMatrix, Vector2};

use crate::error::{Error, Result};
use crate::model::{equilibrium_input, equilibrium_vector, state_derivative, ControlInput, CraneParams};
use crate::{InputMatrix, StateMatrix, StateVector};

/// Default finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Residual above which the requested point is not treated as an equilibrium.
const EQUILIBRIUM_TOL: f64 = 1e-6;

/// `δẋ = A δx + B δu` about `(x_eq, u_eq)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub a: StateMatrix,
    pub b: InputMatrix,
    pub x_eq: StateVector,
    pub u_eq: Vector2<f64>,
}

impl LinearModel {
    /// `A − B K`.
    pub fn closed_loop(&self, gain: &SMatrix<f64, 2, 8>) -> StateMatrix {
        self.a - self.b * gain
    }
}

pub fn linearize(v: &Vector2<f64>, p: &CraneParams, h: f64) -> Result<LinearModel> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("finite-difference step must be positive, got {h}")));
    }
    let x_eq = equilibrium_vector(v);
    let u_eq = equilibrium_input(v[0], p);

    let f0 = state_derivative(&x_eq, &u_eq, p)?;
    let residual = f0.amax();
    if residual >= EQUILIBRIUM_TOL {
        return Err(Error::EquilibriumResidual { v: [v[0], v[1]], residual });
    }

    let mut a = StateMatrix::zeros();
    for j in 0..8 {
        let mut dx = StateVector::zeros();
        dx[j] = h;
        let fp = state_derivative(&(x_eq + dx), &u_eq, p)?;
        let fm = state_derivative(&(x_eq - dx), &u_eq, p)?;
        a.set_column(j, &((fp - fm) / (2.0 * h)));
    }

    let mut b = InputMatrix::zeros();
    for j in 0..2 {
        let mut du = Vector2::zeros();
        du[j] = h;
        let fp = state_derivative(&x_eq, &ControlInput(u_eq.0 + du), p)?;
        let fm = state_derivative(&x_eq, &ControlInput(u_eq.0 - du), p)?;
        b.set_column(j, &((fp - fm) / (2.0 * h)));
    }

    Ok(LinearModel { a, b, x_eq, u_eq: u_eq.0 })
}
