#![allow(dead_code)]

use std::f64::consts::PI;

use crane_erg::model::{ControlInput, CraneParams};
use nalgebra::{Vector2, Vector4};
use proptest::prelude::*;

/// Term-by-term evaluation of the four scalar equations of motion, written
/// out independently of the matrix form. Returns the left-hand sides minus
/// `[0, 0, u3, u4]`.
pub fn scalar_residuals(q: &Vector4<f64>, dq: &Vector4<f64>, ddq: &Vector4<f64>, u: &ControlInput, p: &CraneParams) -> [f64; 4] {
    let (t1, t2, t3) = (q[0], q[1], q[2]);
    let (d1, d2, d3, d4) = (dq[0], dq[1], dq[2], dq[3]);
    let (a1, a2, a3, a4) = (ddq[0], ddq[1], ddq[2], ddq[3]);
    let (m, l, bl, g) = (p.payload_mass, p.rope_length, p.boom_length, p.gravity);
    let (big_m, m1, l1) = (p.boom_mass, p.ballast_mass, p.ballast_length);
    let (jx, jy, jz, ib) = (p.jx, p.jy, p.jz, p.ballast_inertia);
    let (s3, c3) = (t3.sin(), t3.cos());
    let s23 = (2.0 * t3).sin();

    let e1 = m * l * l * (1.0 + t1 * t1) * a1 + m * l * l * t1 * t2 * a2
        + m * l * bl * (-t1 * s3 + c3) * a3
        - m * l * l * t2 * a4
        + m * l * l * t1 * (d1 * d1 + d2 * d2)
        - m * l * bl * (s3 + t1 * c3) * d3 * d3
        - m * l * (l * t1 + bl * s3) * d4 * d4
        - 2.0 * m * l * l * d2 * d4
        + m * g * l * t1;

    // the Coriolis term 2ml²θ̇1θ̇4 enters once
    let e2 = m * l * l * t1 * t2 * a1 + m * l * l * (1.0 + t2 * t2) * a2 - m * l * bl * t2 * s3 * a3
        + (m * l * l * t1 + m * l * bl * s3) * a4
        + m * l * l * t2 * (d1 * d1 + d2 * d2)
        - m * l * bl * t2 * c3 * d3 * d3
        - m * l * l * t2 * d4 * d4
        + 2.0 * m * l * l * d1 * d4
        + 2.0 * m * l * bl * d3 * d4 * c3
        + m * g * l * t2;

    let e3 = m * l * bl * (c3 - t1 * s3) * a1 - m * l * bl * t2 * s3 * a2
        + (m * bl * bl + jy) * a3
        - m * l * bl * t2 * c3 * a4
        - m * l * bl * s3 * (d1 * d1 + d2 * d2)
        - (0.5 * (jx - jz) * s23 + m * l * bl * t1 * c3 + 0.5 * m * bl * bl * s23) * d4 * d4
        - 2.0 * m * l * bl * d2 * d4 * c3
        - g * (0.5 * big_m * bl + m * bl - 0.5 * m1 * l1) * s3
        - u.pitch();

    let e4 = -m * l * l * t2 * a1 + (m * l * l * t1 + m * l * bl * s3) * a2 - m * l * bl * t2 * c3 * a3
        + (m * bl * bl * s3 * s3 + m * l * l * (t1 * t1 + t2 * t2) + 2.0 * m * bl * t1 * s3 + ib
            + jx * s3 * s3
            + jz * c3 * c3)
            * a4
        + (m * bl * bl * d3 * s23
            + 2.0 * m * l * l * (t1 * d1 + t2 * d2)
            + 2.0 * m * bl * (d1 * s3 + t1 * d3 * c3)
            + (jx - jz) * d3 * s23)
            * d4
        + m * l * bl * t2 * d3 * d3 * s3
        - u.yaw();

    [e1, e2, e3, e4]
}

pub fn admissible_state() -> impl Strategy<Value = (Vector4<f64>, Vector4<f64>, Vector2<f64>)> {
    let swing = -PI / 36.0..PI / 36.0;
    (
        swing.clone(),
        swing,
        PI / 18.0..8.0 * PI / 9.0,
        -PI..PI,
        prop::array::uniform4(-1.0..1.0f64),
        prop::array::uniform2(-100.0..100.0f64),
    )
        .prop_map(|(t1, t2, t3, t4, dq, u)| {
            (Vector4::new(t1, t2, t3, t4), Vector4::from(dq), Vector2::from(u))
        })
}
