//! A few governor updates by hand, starting at rest below the target.

use crane_erg::config::Config;
use crane_erg::erg::{erg_step, evaluate_dsm, GovernorState};
use crane_erg::model::equilibrium_vector;
use crane_erg::sim::closed_loop_step;
use nalgebra::Vector2;

fn main() -> crane_erg::Result<()> {
    let config = Config::bundled();
    let setup = config.build()?;
    let cl = &setup.closed_loop;
    let gp = cl.governor;
    let substeps = (gp.ts / config.integration.dt_int).round() as usize;
    let propagate = |x: &_, v: &Vector2<f64>| {
        let mut x = *x;
        for _ in 0..substeps {
            x = closed_loop_step(&x, v, &cl.gain, config.integration.dt_int, &cl.params)?;
        }
        Ok(x)
    };

    let mut g = GovernorState {
        v: Vector2::new(1.2, 0.0),
        r: Vector2::new(1.0, 0.3),
    };
    let mut x = equilibrium_vector(&g.v);
    for k in 0..10 {
        let out = erg_step(&x, &g, propagate, &cl.constraints, &gp)?;
        let applied = out.state.v;
        x = match out.predicted {
            Some(xn) => xn,
            None => propagate(&x, &applied)?,
        };
        println!(
            "k = {k}: Δ = {:.4}  v = ({:.5}, {:.5})  accepted = {}",
            out.dsm.value(),
            applied[0],
            applied[1],
            out.accepted
        );
        g = out.state;
    }
    let report = evaluate_dsm(&x, &g.v, &cl.constraints, &gp);
    println!("active tangents: {:?}", report.active_tangents);
    Ok(())
}
