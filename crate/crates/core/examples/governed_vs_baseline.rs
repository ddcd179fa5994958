//! The same scenario with and without the reference governor.

use crane_erg::config::Config;
use crane_erg::sim::{metrics, Mode};

fn main() -> crane_erg::Result<()> {
    let config = Config::bundled();
    let setup = config.build()?;
    let scenario = config.scenario();

    let governed = setup.closed_loop.run(&scenario, Mode::Governed)?;
    let baseline = setup.closed_loop.run(&scenario, Mode::Ungoverned)?;
    let (mg, mb) = (metrics(&governed), metrics(&baseline));

    println!("{:<16} {:>12} {:>12}", "", "governed", "ungoverned");
    println!(
        "{:<16} {:>12.3} {:>12.3}",
        "max |th1| [deg]",
        mg.max_abs_theta1.to_degrees(),
        mb.max_abs_theta1.to_degrees()
    );
    println!(
        "{:<16} {:>12.3} {:>12.3}",
        "max |th2| [deg]",
        mg.max_abs_theta2.to_degrees(),
        mb.max_abs_theta2.to_degrees()
    );
    println!("{:<16} {:>12.3} {:>12.3}", "max |u3| [N m]", mg.max_abs_u3, mb.max_abs_u3);
    println!("{:<16} {:>12.3} {:>12.3}", "max |u4| [N m]", mg.max_abs_u4, mb.max_abs_u4);
    if let Some((label, t)) = &baseline.first_violation {
        println!("ungoverned run first violates `{label}` at t = {t:.3} s");
    }
    Ok(())
}
