//! Subcommand implementations shared by the `crane-erg` binary and the tests.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use nalgebra::Vector2;

use crate::config::{initial_gain, parse_config, Config, Setup};
use crate::erg::evaluate_dsm;
use crate::error::{Error, Result};
use crate::sim::{gnuplot_script, metrics, Metrics, Mode, TrajectoryLog};
use crate::synthesis::{diagonal, lqr_gain, spectral_abscissa, LevelSetCertificate};

pub const LOG_FILE: &str = "log.csv";
pub const METRICS_FILE: &str = "metrics.txt";
pub const PLOT_FILE: &str = "plot.gp";

fn write_log(log: &TrajectoryLog, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    log.write_csv(BufWriter::new(File::create(dir.join(LOG_FILE))?))?;
    fs::write(dir.join(PLOT_FILE), gnuplot_script(LOG_FILE))?;
    Ok(())
}

/// Runs one scenario and writes `log.csv`, `metrics.txt` and `plot.gp` to `out`.
pub fn simulate(config_path: &Path, out: &Path, baseline: bool) -> Result<Metrics> {
    let config = parse_config(config_path)?;
    let setup = config.build()?;
    let mode = if baseline { Mode::Ungoverned } else { Mode::Governed };
    let log = setup.closed_loop.run(&config.scenario(), mode)?;
    let m = metrics(&log);
    write_log(&log, out)?;
    let mut text = m.to_text();
    let _ = writeln!(text, "rejected_steps = {}", log.rejected_steps);
    if let Some((label, t)) = &log.first_violation {
        let _ = writeln!(text, "first_violation = {label} at t = {t:.4}");
    }
    fs::write(out.join(METRICS_FILE), text)?;
    Ok(m)
}

fn certificate_line(out: &mut String, label: &str, cert: &LevelSetCertificate) {
    let _ = writeln!(
        out,
        "  {label:<28} lyap_max_eig = {:+.6e}  floor_min_eig = {:+.6e}  beta_Pinv_beta = {:.6e}",
        cert.lyap_residual_max_eig,
        cert.floor_margin_min_eig,
        cert.beta_pinv_beta()
    );
}

fn matrix_rows(out: &mut String, name: &str, k: &crate::Gain) {
    let _ = writeln!(out, "{name} = [");
    for i in 0..2 {
        let row: Vec<String> = (0..8).map(|j| format!("{:+.6e}", k[(i, j)])).collect();
        let _ = writeln!(out, "  [{}],", row.join(", "));
    }
    let _ = writeln!(out, "]");
}

/// Gain, Riccati residual and every level-set certificate as text.
pub fn synthesize_report(config: &Config, setup: &Setup) -> Result<String> {
    let mut out = String::new();
    let cl = &setup.closed_loop;
    let [p3, p4] = config.lqr.design_point;
    let _ = writeln!(out, "design_point = [{p3:.9}, {p4:.9}]");
    matrix_rows(&mut out, "K", &cl.gain);
    let acl = setup.model.closed_loop(&cl.gain);
    let _ = writeln!(out, "closed_loop_max_real_eig = {:+.6e}", spectral_abscissa(&acl));

    match &setup.lqr {
        Some(sol) => {
            let _ = writeln!(out, "gain_source = lqr");
            let _ = writeln!(out, "riccati_residual = {:.6e}", sol.riccati_residual);
            let _ = writeln!(out, "kleinman_iterations = {}", sol.iterations);
        }
        None => {
            // explicit gain: report the configured LQR problem for comparison
            let _ = writeln!(out, "gain_source = explicit");
            let k0 = initial_gain(&setup.model)?;
            let q = diagonal(&config.lqr.q_diag);
            let r = nalgebra::Matrix2::from_diagonal(&Vector2::from(config.lqr.r_diag));
            let sol = lqr_gain(&setup.model, &q, &r, &k0)?;
            let _ = writeln!(out, "riccati_residual = {:.6e} (configured Q, R)", sol.riccati_residual);
            matrix_rows(&mut out, "K_lqr", &sol.gain);
        }
    }

    let _ = writeln!(out, "certificates:");
    for (c, cert) in cl.constraints.linear.iter().zip(&cl.constraints.linear_certificates) {
        certificate_line(&mut out, &c.label, cert);
    }
    for o in &cl.constraints.obstacles {
        for (i, cert) in o.certificates.iter().enumerate() {
            certificate_line(&mut out, &format!("{}[{i}]", o.label), cert);
        }
    }
    for label in &setup.unreachable_obstacles {
        let _ = writeln!(out, "  {label:<28} unreachable, no constraint");
    }
    Ok(out)
}

pub fn synthesize(config_path: &Path) -> Result<String> {
    let config = parse_config(config_path)?;
    let setup = config.build()?;
    synthesize_report(&config, &setup)
}

/// Static feasibility audit: the initial state and every reference must be
/// admissible and the governor must start from a non-negative margin.
pub fn audit(config: &Config, setup: &Setup) -> Result<String> {
    let cl = &setup.closed_loop;
    let set = &cl.constraints;
    let scenario = config.scenario();
    let mut out = String::new();

    for c in &set.linear {
        let m = c.margin(&scenario.x0);
        if m < 0.0 {
            return Err(Error::ReferenceInadmissible(format!(
                "initial state violates `{}` by {:.4e}",
                c.label, -m
            )));
        }
    }
    let v0 = Vector2::new(scenario.x0[2], scenario.x0[3]);
    set.check_steady_admissible(&v0)
        .map_err(|reason| Error::ReferenceInadmissible(format!("initial boom angles: {reason}")))?;
    let dsm0 = evaluate_dsm(&scenario.x0, &v0, set, &cl.governor).raw;
    if dsm0 < 0.0 {
        return Err(Error::InfeasibleStart(dsm0));
    }
    let _ = writeln!(out, "x0: ok (steady margin {:.6e}, dsm {:.6e})", set.min_steady_margin(&v0), dsm0);

    for (i, target) in scenario.references.iter().enumerate() {
        set.check_steady_admissible(&target.r).map_err(|reason| {
            Error::ReferenceInadmissible(format!("references[{i}] = [{:.6}, {:.6}]: {reason}", target.r[0], target.r[1]))
        })?;
        let _ = writeln!(out, "references[{i}]: ok (steady margin {:.6e})", set.min_steady_margin(&target.r));
    }
    for label in &setup.unreachable_obstacles {
        let _ = writeln!(out, "obstacle `{label}`: unreachable by the payload, ignored");
    }
    Ok(out)
}

/// Writes `hulls.csv` (`label,vertex,th3,th4`) and `tangents.csv`
/// (`label,index,n3,n4,offset`).
pub fn write_obstacle_csv(setup: &Setup, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut hulls = String::from("label,vertex,th3,th4\n");
    let mut tangents = String::from("label,index,n3,n4,offset\n");
    for o in &setup.closed_loop.constraints.obstacles {
        for (i, p) in o.hull.iter().enumerate() {
            let _ = writeln!(hulls, "{},{i},{:.16e},{:.16e}", o.label, p[0], p[1]);
        }
        for (i, h) in o.halfplanes.iter().enumerate() {
            let _ = writeln!(
                tangents,
                "{},{i},{:.16e},{:.16e},{:.16e}",
                o.label, h.normal[0], h.normal[1], h.offset
            );
        }
    }
    fs::write(dir.join("hulls.csv"), hulls)?;
    fs::write(dir.join("tangents.csv"), tangents)?;
    Ok(())
}

pub fn check(config_path: &Path, out: Option<&Path>) -> Result<String> {
    let config = parse_config(config_path)?;
    let setup = config.build()?;
    if let Some(dir) = out {
        write_obstacle_csv(&setup, dir)?;
    }
    audit(&config, &setup)
}

/// Runs the governed scenario and the ungoverned baseline side by side.
pub fn compare(config_path: &Path, out: &Path) -> Result<(Metrics, Metrics)> {
    let config = parse_config(config_path)?;
    let setup = config.build()?;
    let scenario = config.scenario();
    let cl = &setup.closed_loop;
    let (governed, baseline) = std::thread::scope(|s| {
        let g = s.spawn(|| cl.run(&scenario, Mode::Governed));
        let b = cl.run(&scenario, Mode::Ungoverned);
        (g.join().expect("governed run panicked"), b)
    });
    let (governed, baseline) = (governed?, baseline?);
    write_log(&governed, &out.join("governed"))?;
    write_log(&baseline, &out.join("ungoverned"))?;

    let (mg, mb) = (metrics(&governed), metrics(&baseline));
    fs::write(out.join(METRICS_FILE), comparison_table(&mg, &mb, &baseline))?;
    Ok((mg, mb))
}

pub fn comparison_table(governed: &Metrics, baseline: &Metrics, baseline_log: &TrajectoryLog) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "{:<18} {:>16} {:>16}", "metric", "governed", "ungoverned");
    let mut row = |name: &str, a: f64, b: f64| {
        let _ = writeln!(t, "{name:<18} {a:>16.6e} {b:>16.6e}");
    };
    row("max_swing", governed.max_swing(), baseline.max_swing());
    row("max_abs_theta1", governed.max_abs_theta1, baseline.max_abs_theta1);
    row("max_abs_theta2", governed.max_abs_theta2, baseline.max_abs_theta2);
    row("min_dsm", governed.min_dsm, baseline.min_dsm);
    row("min_margin", governed.min_margin, baseline.min_margin);
    row("max_abs_u3", governed.max_abs_u3, baseline.max_abs_u3);
    row("max_abs_u4", governed.max_abs_u4, baseline.max_abs_u4);
    row("final_error", governed.final_error, baseline.final_error);
    let n = governed.settling_times.len().max(baseline.settling_times.len());
    let fmt = |s: Option<&Option<f64>>| match s {
        Some(Some(x)) => format!("{x:.4}"),
        _ => "none".to_string(),
    };
    for i in 0..n {
        let _ = writeln!(
            t,
            "{:<18} {:>16} {:>16}",
            format!("settling_time_{i}"),
            fmt(governed.settling_times.get(i)),
            fmt(baseline.settling_times.get(i))
        );
    }
    if let Some((label, time)) = &baseline_log.first_violation {
        let _ = writeln!(t, "ungoverned first violation: {label} at t = {time:.4}");
    }
    t
}
