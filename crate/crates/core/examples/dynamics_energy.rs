//! Unforced swing of the crane: the total energy stays constant while the
//! payload and boom exchange momentum.

use crane_erg::model::{total_energy, CraneParams, CraneState, ControlInput};
use crane_erg::sim::rk4_step;
use crane_erg::StateVector;

fn main() -> crane_erg::Result<()> {
    let p = CraneParams::default();
    let mut x = StateVector::from([0.05, -0.03, 1.0, 0.2, 0.0, 0.1, 0.3, -0.2]);
    let u = ControlInput::new(0.0, 0.0);
    let e0 = total_energy(&CraneState::from_vector(&x), &p);
    let dt = 1e-4;

    println!("{:>6} {:>10} {:>10} {:>10} {:>12}", "t", "th1", "th2", "th3", "rel dE");
    for k in 1..=20_000 {
        x = rk4_step(&x, &u, dt, &p)?;
        if k % 2_000 == 0 {
            let e = total_energy(&CraneState::from_vector(&x), &p);
            println!(
                "{:>6.2} {:>10.5} {:>10.5} {:>10.5} {:>12.3e}",
                k as f64 * dt,
                x[0],
                x[1],
                x[2],
                (e - e0) / e0.abs()
            );
        }
    }
    Ok(())
}
