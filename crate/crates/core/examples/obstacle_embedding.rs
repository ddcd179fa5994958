//! Map the bundled obstacle boxes into the boom joint space and print the
//! hull and the supporting lines of each image.

use crane_erg::constraints::build_obstacle;
use crane_erg::config::Config;
use nalgebra::Vector2;

fn main() -> crane_erg::Result<()> {
    let config = Config::bundled();
    let bounds = config.constraints.bounds();
    let probes = [
        ("x0", Vector2::new(config.scenario.x0[2], config.scenario.x0[3])),
        ("r1", Vector2::from(config.scenario.references[0].r)),
        ("r2", Vector2::from(config.scenario.references[1].r)),
    ];

    for obstacle in &config.obstacles {
        let Some(oc) = build_obstacle(
            obstacle,
            &config.crane,
            &bounds,
            config.constraints.grid_n,
            config.constraints.n_tangents,
        )?
        else {
            println!("{}: unreachable", obstacle.label);
            continue;
        };
        println!("{} ({} hull vertices)", oc.label, oc.hull.len());
        for (k, h) in oc.halfplanes.iter().enumerate() {
            println!(
                "  [{k}] n = ({:+.3}, {:+.3})  offset {:+.4}",
                h.normal[0], h.normal[1], h.offset
            );
        }
        for (name, v) in &probes {
            println!(
                "  {name}: steady margin {:+.2} deg, {} of {} half-planes satisfied",
                oc.steady_margin(v).to_degrees(),
                oc.satisfied_count(v),
                oc.halfplanes.len()
            );
        }
    }
    Ok(())
}
