//! Governed pick-and-place around the wall, bricks and mason. Writes the
//! trajectory to `case_study.csv` in the current directory.

use std::fs::File;
use std::io::BufWriter;

use crane_erg::config::Config;
use crane_erg::sim::{metrics, Mode};

fn main() -> crane_erg::Result<()> {
    let config = Config::bundled();
    let setup = config.build()?;
    let log = setup.closed_loop.run(&config.scenario(), Mode::Governed)?;

    print!("{}", metrics(&log).to_text());
    let last = log.last().expect("non-empty log");
    println!(
        "final boom angles: ({:.3}, {:.3}) deg",
        last.x[2].to_degrees(),
        last.x[3].to_degrees()
    );
    log.write_csv(BufWriter::new(File::create("case_study.csv")?))?;
    Ok(())
}
