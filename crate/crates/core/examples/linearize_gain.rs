//! Linearize about several boom pitches and compare the stored reference
//! gain with an LQR gain synthesized by Kleinman iteration.

use std::f64::consts::PI;

use crane_erg::linearize::{linearize, DEFAULT_STEP};
use crane_erg::model::CraneParams;
use crane_erg::synthesis::{diagonal, lqr_gain, pole_shift_gain, spectral_abscissa};
use nalgebra::{Matrix2, Vector2};

fn main() -> crane_erg::Result<()> {
    let p = CraneParams::default();
    let design = linearize(&Vector2::new(PI / 3.0, 0.0), &p, DEFAULT_STEP)?;

    let q = diagonal(&[10.0, 10.0, 100.0, 100.0, 1.0, 1.0, 10.0, 10.0]);
    let r = Matrix2::identity();
    let k0 = pole_shift_gain(&design.a, &design.b)?;
    let lqr = lqr_gain(&design, &q, &r, &k0)?;
    println!(
        "LQR: {} Kleinman iterations, Riccati residual {:.2e}",
        lqr.iterations, lqr.riccati_residual
    );
    println!("K_lqr = {:.4}", lqr.gain);

    let reference = crane_erg::reference_gain();
    println!("{:>8} {:>16} {:>16}", "pitch", "max Re (ref K)", "max Re (LQR K)");
    for deg in [10.0, 20.0, 45.0, 60.0, 90.0, 105.0, 135.0, 160.0] {
        let m = linearize(&Vector2::new(f64::to_radians(deg), 0.0), &p, DEFAULT_STEP)?;
        println!(
            "{:>8.1} {:>+16.4e} {:>+16.4e}",
            deg,
            spectral_abscissa(&m.closed_loop(&reference)),
            spectral_abscissa(&m.closed_loop(&lqr.gain))
        );
    }
    Ok(())
}
