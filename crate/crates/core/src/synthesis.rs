//! Small dense control-synthesis problems.
//!
//! Everything here works on matrices of at most 8×8, so the Lyapunov equation
//! is solved directly through its Kronecker form (a 64×64 LU) with one step
//! of iterative refinement.

use nalgebra::{DMatrix, DVector, SMatrix, SVector, Vector2};

use crate::error::{Error, Result};
use crate::linearize::LinearModel;
use crate::model::equilibrium_vector;
use crate::{Gain, StateMatrix, StateVector};

/// Cap on Kleinman iterations.
pub const KLEINMAN_MAX_ITER: usize = 50;
/// Riccati residual accepted as converged.
pub const RICCATI_TOL: f64 = 1e-8;
/// Extra floor added when scaling a level-set matrix above `ββᵀ/‖β‖²`.
pub const LEVEL_SET_FLOOR_EPS: f64 = 1e-9;

/// Solves `aᵀP + Pa + q = 0` without checking definiteness.
fn lyapunov_kron<const N: usize>(
    a: &SMatrix<f64, N, N>,
    q: &SMatrix<f64, N, N>,
) -> Option<SMatrix<f64, N, N>> {
    let at = DMatrix::from_column_slice(N, N, a.transpose().as_slice());
    let eye = DMatrix::<f64>::identity(N, N);
    // column-major vec: vec(AᵀP) = (I ⊗ Aᵀ) vec P, vec(PA) = (Aᵀ ⊗ I) vec P
    let op = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = -DVector::from_column_slice(q.as_slice());

    let lu = op.clone().lu();
    let mut sol = lu.solve(&rhs)?;
    let correction = lu.solve(&(&rhs - &op * &sol))?;
    sol += correction;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let p = SMatrix::<f64, N, N>::from_column_slice(sol.as_slice());
    Some((p + p.transpose()) * 0.5)
}

fn is_positive_definite<const N: usize>(m: &SMatrix<f64, N, N>) -> bool {
    m.cholesky().is_some()
}

/// Largest real part of the eigenvalues of a square matrix.
pub fn spectral_abscissa<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    let d = DMatrix::from_column_slice(N, N, m.as_slice());
    d.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Solution `P` of `AclᵀP + P Acl + Q = 0` for Hurwitz `Acl` and SPD `Q`.
pub fn solve_lyapunov<const N: usize>(
    acl: &SMatrix<f64, N, N>,
    q: &SMatrix<f64, N, N>,
) -> Result<SMatrix<f64, N, N>> {
    if (q - q.transpose()).amax() > 1e-12 * q.amax().max(1.0) || !is_positive_definite(q) {
        return Err(Error::InvalidParameter("Q must be symmetric positive definite".into()));
    }
    let p = lyapunov_kron(acl, q)
        .ok_or_else(|| Error::NotHurwitz("Lyapunov operator is singular".into()))?;
    if !is_positive_definite(&p) {
        return Err(Error::NotHurwitz("Lyapunov solution is not positive definite".into()));
    }
    Ok(p)
}

/// `‖AᵀP + PA − P B R⁻¹ Bᵀ P + Q‖_max`.
pub fn riccati_residual<const N: usize, const M: usize>(
    a: &SMatrix<f64, N, N>,
    b: &SMatrix<f64, N, M>,
    q: &SMatrix<f64, N, N>,
    r: &SMatrix<f64, M, M>,
    p: &SMatrix<f64, N, N>,
) -> f64 {
    let r_inv = r.try_inverse().unwrap_or_else(SMatrix::zeros);
    (a.transpose() * p + p * a - p * b * r_inv * b.transpose() * p + q).amax()
}

#[derive(Debug, Clone)]
pub struct LqrSolution<const N: usize, const M: usize> {
    pub gain: SMatrix<f64, M, N>,
    /// Stabilizing Riccati solution.
    pub p: SMatrix<f64, N, N>,
    pub riccati_residual: f64,
    pub iterations: usize,
    /// `trace(P_i)` of every Kleinman iterate.
    pub trace_history: Vec<f64>,
}

/// Kleinman iteration for the continuous-time algebraic Riccati equation.
pub fn kleinman<const N: usize, const M: usize>(
    a: &SMatrix<f64, N, N>,
    b: &SMatrix<f64, N, M>,
    q: &SMatrix<f64, N, N>,
    r: &SMatrix<f64, M, M>,
    k0: &SMatrix<f64, M, N>,
) -> Result<LqrSolution<N, M>> {
    let r_inv = r
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("R must be invertible".into()))?;
    let abscissa = spectral_abscissa(&(a - b * k0));
    if !(abscissa < 0.0) {
        return Err(Error::NonStabilizingGain(abscissa));
    }

    let mut gain = *k0;
    let mut trace_history = Vec::new();
    let mut residual = f64::INFINITY;
    for iteration in 1..=KLEINMAN_MAX_ITER {
        let acl = a - b * gain;
        let cost = q + gain.transpose() * r * gain;
        let mut p = lyapunov_kron(&acl, &cost)
            .ok_or_else(|| Error::NotHurwitz("Kleinman iterate lost stability".into()))?;
        trace_history.push(p.trace());
        let next = r_inv * b.transpose() * p;
        let step = (next - gain).amax();
        gain = next;
        residual = riccati_residual(a, b, q, r, &p);
        if residual < RICCATI_TOL || step < 1e-13 * gain.amax().max(1.0) {
            // one more Lyapunov solve so that P matches the returned gain
            let acl = a - b * gain;
            if let Some(pf) = lyapunov_kron(&acl, &(q + gain.transpose() * r * gain)) {
                let rf = riccati_residual(a, b, q, r, &pf);
                if rf <= residual {
                    p = pf;
                    residual = rf;
                    trace_history.push(p.trace());
                }
            }
            if residual < RICCATI_TOL {
                return Ok(LqrSolution {
                    gain,
                    p,
                    riccati_residual: residual,
                    iterations: iteration,
                    trace_history,
                });
            }
        }
    }
    Err(Error::RiccatiNotConverged {
        iterations: KLEINMAN_MAX_ITER,
        residual,
    })
}

/// LQR gain for the crane linear model, started from a stabilizing `k0`.
pub fn lqr_gain(
    model: &LinearModel,
    q: &StateMatrix,
    r: &nalgebra::Matrix2<f64>,
    k0: &Gain,
) -> Result<LqrSolution<8, 2>> {
    kleinman(&model.a, &model.b, q, r, k0)
}

/// Stabilizing gain by pole shifting (Bass' method).
///
/// Solves `(A + μI) Z + Z (A + μI)ᵀ = 2 B Bᵀ` and returns `K = Bᵀ Z⁻¹`, which
/// places the closed-loop spectrum left of `−μ`. `μ` starts above `‖A‖` and
/// is halved while the result stays stabilizing, keeping the gain moderate.
pub fn pole_shift_gain<const N: usize, const M: usize>(
    a: &SMatrix<f64, N, N>,
    b: &SMatrix<f64, N, M>,
) -> Result<SMatrix<f64, M, N>> {
    let eye = SMatrix::<f64, N, N>::identity();
    let bbt2 = b * b.transpose() * 2.0;
    let attempt = |mu: f64| -> Option<SMatrix<f64, M, N>> {
        let shifted = -(a + eye * mu).transpose();
        let z = lyapunov_kron(&shifted, &bbt2)?;
        let z_inv = z.cholesky()?.inverse();
        let k = b.transpose() * z_inv;
        (spectral_abscissa(&(a - b * k)) < 0.0).then_some(k)
    };

    let mut mu = a.norm() + 1.0;
    let mut best = attempt(mu).ok_or_else(|| {
        Error::NonStabilizingGain(spectral_abscissa(a))
    })?;
    for _ in 0..20 {
        mu *= 0.5;
        match attempt(mu) {
            Some(k) => best = k,
            None => break,
        }
    }
    Ok(best)
}

/// Level-set matrix for one half-space constraint `βᵀx ≤ d` together with
/// the eigenvalue margins that certify it.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetCertificate {
    pub p: StateMatrix,
    pub constraint_id: usize,
    /// `λ_max(AclᵀP + P Acl)`; negative for a strict Lyapunov decrease.
    pub lyap_residual_max_eig: f64,
    /// `λ_min(P − ββᵀ/‖β‖²)`; positive when the floor constraint holds.
    pub floor_margin_min_eig: f64,
    beta_pinv_beta: f64,
}

impl LevelSetCertificate {
    /// Evaluates both margins for an arbitrary `P`.
    pub fn evaluate(p: StateMatrix, constraint_id: usize, acl: &StateMatrix, beta: &StateVector) -> Result<Self> {
        let chol = p
            .cholesky()
            .ok_or_else(|| Error::InvalidParameter("level-set matrix is not positive definite".into()))?;
        let beta_pinv_beta = beta.dot(&chol.solve(beta));
        let lyap = acl.transpose() * p + p * acl;
        let floor = p - beta * beta.transpose() / beta.norm_squared();
        Ok(Self {
            p,
            constraint_id,
            lyap_residual_max_eig: lyap.symmetric_eigenvalues().max(),
            floor_margin_min_eig: floor.symmetric_eigenvalues().min(),
            beta_pinv_beta,
        })
    }

    pub fn is_valid(&self) -> bool {
        self.lyap_residual_max_eig < 0.0 && self.floor_margin_min_eig > 0.0
    }

    /// `βᵀ P⁻¹ β` for the constraint the certificate was built for.
    pub fn beta_pinv_beta(&self) -> f64 {
        self.beta_pinv_beta
    }

    /// Lyapunov level `(x − x̄(v))ᵀ P (x − x̄(v))`.
    pub fn level(&self, x: &StateVector, v: &Vector2<f64>) -> f64 {
        let e = x - equilibrium_vector(v);
        e.dot(&(self.p * e))
    }

    /// Signed threshold `Γ(v)` using the cached `βᵀP⁻¹β`.
    pub fn threshold(&self, v: &Vector2<f64>, beta: &StateVector, d: f64) -> f64 {
        let s = d - beta.dot(&equilibrium_vector(v));
        s.signum() * s * s / self.beta_pinv_beta
    }
}

/// Feasible level-set matrix for `βᵀx ≤ d` under the closed loop `Acl`.
///
/// `P₀` solves the Lyapunov equation with `Q = I`; it is then scaled by the
/// smallest `c ≥ 1` such that `c P₀ ⪰ ββᵀ/‖β‖² + εI`.
pub fn level_set_matrix(acl: &StateMatrix, beta: &StateVector, constraint_id: usize) -> Result<LevelSetCertificate> {
    if beta.norm() == 0.0 {
        return Err(Error::InvalidParameter("constraint normal must be non-zero".into()));
    }
    let p0 = solve_lyapunov(acl, &StateMatrix::identity())?;
    let floor = beta * beta.transpose() / beta.norm_squared() + StateMatrix::identity() * LEVEL_SET_FLOOR_EPS;

    // c = λ_max(L⁻¹ F L⁻ᵀ) with P₀ = L Lᵀ
    let l = p0
        .cholesky()
        .ok_or_else(|| Error::NotHurwitz("Lyapunov solution is not positive definite".into()))?
        .unpack();
    let l_inv = l
        .try_inverse()
        .ok_or_else(|| Error::NotHurwitz("Lyapunov solution is singular".into()))?;
    let scaled = l_inv * floor * l_inv.transpose();
    let scaled = (scaled + scaled.transpose()) * 0.5;
    let c = (scaled.symmetric_eigenvalues().max() * (1.0 + 1e-9)).max(1.0);

    let cert = LevelSetCertificate::evaluate(p0 * c, constraint_id, acl, beta)?;
    if !cert.is_valid() {
        return Err(Error::NotHurwitz(format!(
            "certificate margins failed: lyap {:.3e}, floor {:.3e}",
            cert.lyap_residual_max_eig, cert.floor_margin_min_eig
        )));
    }
    Ok(cert)
}

/// Signed threshold `Γ(v) = sign(s) s² / (βᵀ P⁻¹ β)` with `s = d − βᵀ x̄(v)`.
pub fn gamma_threshold(v: &Vector2<f64>, beta: &StateVector, d: f64, p: &StateMatrix) -> f64 {
    let s = d - beta.dot(&equilibrium_vector(v));
    let quad = match p.cholesky() {
        Some(chol) => beta.dot(&chol.solve(beta)),
        None => return f64::NEG_INFINITY,
    };
    s.signum() * s * s / quad
}

/// Maximum of `βᵀx` over the ellipsoid `{(x − x̄(v))ᵀ P (x − x̄(v)) ≤ Γ}`.
pub fn ellipsoid_support(v: &Vector2<f64>, beta: &StateVector, gamma: f64, beta_pinv_beta: f64) -> f64 {
    beta.dot(&equilibrium_vector(v)) + (gamma.max(0.0) * beta_pinv_beta).sqrt()
}

/// Convenience conversion for diagonal weights.
pub fn diagonal<const N: usize>(d: &[f64; N]) -> SMatrix<f64, N, N> {
    SMatrix::from_diagonal(&SVector::<f64, N>::from_column_slice(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix1, Matrix2};

    #[test]
    fn lyapunov_of_negative_identity() {
        let p = solve_lyapunov(&(-Matrix2::identity()), &Matrix2::identity()).unwrap();
        assert!((p - Matrix2::identity() * 0.5).amax() < 1e-14);
    }

    #[test]
    fn lyapunov_residual_small() {
        let a = Matrix2::new(0.0, 1.0, -1.0, -1.0);
        let q = Matrix2::identity();
        let p = solve_lyapunov(&a, &q).unwrap();
        assert!((a.transpose() * p + p * a + q).amax() < 1e-10);
        assert_eq!(p, p.transpose());
    }

    #[test]
    fn lyapunov_rejects_unstable() {
        let err = solve_lyapunov(&Matrix2::identity(), &Matrix2::identity());
        assert!(matches!(err, Err(Error::NotHurwitz(_))));
    }

    #[test]
    fn lyapunov_rejects_indefinite_weight() {
        let q = Matrix2::new(1.0, 0.0, 0.0, -1.0);
        assert!(solve_lyapunov(&(-Matrix2::identity()), &q).is_err());
    }

    #[test]
    fn scalar_riccati() {
        let one = Matrix1::new(1.0);
        let sol = kleinman(&Matrix1::new(0.0), &one, &one, &one, &one).unwrap();
        assert!((sol.gain[0] - 1.0).abs() < 1e-10);
        assert!((sol.p[0] - 1.0).abs() < 1e-10);
        assert!(sol.riccati_residual < RICCATI_TOL);
    }

    #[test]
    fn kleinman_rejects_destabilizing_start() {
        let one = Matrix1::new(1.0);
        let err = kleinman(&Matrix1::new(0.0), &one, &one, &one, &Matrix1::new(-1.0));
        assert!(matches!(err, Err(Error::NonStabilizingGain(_))));
    }

    #[test]
    fn pole_shift_stabilizes_double_integrator() {
        let a = Matrix2::new(0.0, 1.0, 0.0, 0.0);
        let b = nalgebra::Vector2::new(0.0, 1.0);
        let k = pole_shift_gain(&a, &b).unwrap();
        assert!(spectral_abscissa(&(a - b * k)) < 0.0);
    }

    #[test]
    fn gamma_is_quadratic_in_margin() {
        let p = StateMatrix::identity() * 2.0;
        let mut beta = StateVector::zeros();
        beta[2] = 1.0;
        let v = Vector2::new(1.0, 0.0);
        assert_eq!(gamma_threshold(&v, &beta, 1.0, &p), 0.0);
        let g1 = gamma_threshold(&v, &beta, 1.1, &p);
        let g2 = gamma_threshold(&v, &beta, 1.2, &p);
        assert!((g2 / g1 - 4.0).abs() < 1e-9);
        assert!(gamma_threshold(&v, &beta, 0.9, &p) < 0.0);
    }
}
