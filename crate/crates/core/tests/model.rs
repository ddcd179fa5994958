use std::f64::consts::PI;

mod common;

use crane_erg::model::{
    equilibrium_input, equilibrium_state, forward_dynamics, forward_kinematics, gravity_vector,
    mass_matrix, total_energy, velocity_terms, ControlInput, CraneParams, CraneState,
};
use crane_erg::sim::rk4_step;
use crane_erg::StateVector;
use nalgebra::{Vector2, Vector4};
use proptest::prelude::*;

use common::{admissible_state, scalar_residuals};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matrix_form_matches_scalar_equations((q, dq, u) in admissible_state()) {
        let p = CraneParams::default();
        let u = ControlInput(u);
        let state = CraneState::new(q, dq);
        let ddq = forward_dynamics(&state, &u, &p).unwrap();
        let r = scalar_residuals(&q, &dq, &ddq, &u, &p);
        for (i, ri) in r.iter().enumerate() {
            prop_assert!(ri.abs() < 1e-10, "equation {} residual {:e}", i + 1, ri);
        }
    }

    #[test]
    fn mass_matrix_is_symmetric((q, _, _) in admissible_state()) {
        let m = mass_matrix(&q, &CraneParams::default());
        prop_assert!((m - m.transpose()).amax() < 1e-12);
    }
}

#[test]
fn mass_matrix_positive_definite_on_grid() {
    let p = CraneParams::default();
    let n = 9;
    let lin = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let q = Vector4::new(
                    lin(-PI / 36.0, PI / 36.0, i),
                    lin(-PI / 36.0, PI / 36.0, j),
                    lin(PI / 18.0, 8.0 * PI / 9.0, k),
                    0.3,
                );
                let min_eig = mass_matrix(&q, &p).symmetric_eigenvalues().min();
                assert!(min_eig > 0.0, "q = {q:?}, λmin = {min_eig}");
            }
        }
    }
}

#[test]
fn mass_matrix_examples() {
    let p = CraneParams::default();
    let m = mass_matrix(&Vector4::new(0.0, 0.0, PI / 3.0, 0.0), &p);
    assert!((m[(0, 0)] - 3.5).abs() < 1e-12);
    let m = mass_matrix(&Vector4::new(0.0, 0.0, PI / 2.0, 0.0), &p);
    assert!(m[(0, 2)].abs() < 1e-12);
}

#[test]
fn velocity_terms_examples() {
    let p = CraneParams::default();
    let q = Vector4::new(0.02, -0.01, 1.0, 0.5);
    assert_eq!(velocity_terms(&q, &Vector4::zeros(), &p), Vector4::zeros());
    let c = velocity_terms(&Vector4::zeros(), &Vector4::new(0.0, 0.0, 0.0, 1.3), &p);
    assert!(c.amax() < 1e-14);
}

#[test]
fn gravity_examples() {
    let p = CraneParams::default();
    assert_eq!(gravity_vector(&Vector4::zeros(), &p), Vector4::zeros());
    let g = gravity_vector(&Vector4::new(0.01, 0.02, PI / 3.0, 1.0), &p);
    let expected = -9.81 * 8.0 * (PI / 3.0).sin();
    assert!((g[2] - expected).abs() < 1e-12);
    assert!((expected + 67.97).abs() < 0.01);
    assert_eq!(g[3], 0.0);
}

#[test]
fn equilibrium_sweep() {
    let p = CraneParams::default();
    for i in 0..100 {
        let v3 = PI / 18.0 + (8.0 * PI / 9.0 - PI / 18.0) * i as f64 / 99.0;
        let v = Vector2::new(v3, -1.0 + 0.02 * i as f64);
        let qdd = forward_dynamics(&equilibrium_state(&v), &equilibrium_input(v3, &p), &p).unwrap();
        assert!(qdd.amax() < 1e-9, "v3 = {v3}: {qdd:?}");
    }
}

#[test]
fn pitch_torque_excess_accelerates_pitch() {
    let p = CraneParams::default();
    let v = Vector2::new(PI / 3.0, 0.0);
    for eps in [1e-3, -1e-3] {
        let u = ControlInput(equilibrium_input(v[0], &p).0 + Vector2::new(eps, 0.0));
        let qdd = forward_dynamics(&equilibrium_state(&v), &u, &p).unwrap();
        assert_eq!(qdd[2].signum(), eps.signum());
    }
}

#[test]
fn unforced_energy_is_conserved() {
    let p = CraneParams::default();
    let mut x = StateVector::from([0.04, -0.03, 1.1, 0.0, 0.05, -0.02, 0.1, 0.2]);
    let e0 = total_energy(&CraneState::from_vector(&x), &p);
    let u = ControlInput::new(0.0, 0.0);
    for _ in 0..10_000 {
        x = rk4_step(&x, &u, 1e-4, &p).unwrap();
    }
    let e1 = total_energy(&CraneState::from_vector(&x), &p);
    let drift = ((e1 - e0) / e0).abs();
    assert!(drift < 1e-6, "relative drift {drift:e}");
}

#[test]
fn forward_kinematics_examples() {
    let p = CraneParams::default();
    let fk = forward_kinematics(&Vector4::new(0.0, 0.0, PI / 2.0, 0.0), &p);
    assert!((fk - nalgebra::Vector3::new(2.0, 0.0, -1.0)).amax() < 1e-12);
    for t3 in [0.2, 1.0, 2.5] {
        assert!(forward_kinematics(&Vector4::new(0.0, 0.0, t3, 0.0), &p)[1].abs() < 1e-15);
    }
    let fk = forward_kinematics(&Vector4::new(0.0, 0.0, PI / 2.0, PI / 4.0), &p);
    assert!((fk[0] - 2f64.sqrt()).abs() < 1e-12 && (fk[1] - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn singular_mass_matrix_is_reported() {
    let mut p = CraneParams::default();
    p.jx = 0.0;
    p.jz = 0.0;
    p.ballast_inertia = 0.0;
    let state = CraneState::new(Vector4::zeros(), Vector4::zeros());
    let err = forward_dynamics(&state, &ControlInput::new(0.0, 0.0), &p).unwrap_err();
    assert!(matches!(err, crane_erg::Error::SingularMassMatrix { .. }));
}
