//! Closed-loop simulation of the crane under LQR feedback and the governor.

use std::fmt::Write as _;
use std::io::Write;

use nalgebra::{Vector2, Vector3};

use crate::constraints::{boom_payload_position, ConstraintSet, LinearConstraint};
use crate::erg::{evaluate_dsm, Governor, GovernorParams};
use crate::error::{Error, Result};
use crate::model::{
    equilibrium_input, equilibrium_vector, state_derivative, ControlInput, CraneParams,
};
use crate::{Gain, StateVector};

/// Column header of the trajectory CSV.
pub const CSV_COLUMNS: [&str; 20] = [
    "t", "th1", "th2", "th3", "th4", "dth1", "dth2", "dth3", "dth4", "v3", "v4", "r3", "r4", "u3",
    "u4", "dsm", "margin", "ee_x", "ee_y", "ee_z",
];

/// `u = −K (x − x̄(v)) + u_eq(v3)`.
pub fn control_law(x: &StateVector, v: &Vector2<f64>, gain: &Gain, p: &CraneParams) -> ControlInput {
    let feedback = -gain * (x - equilibrium_vector(v));
    ControlInput(equilibrium_input(v[0], p).0 + feedback)
}

/// Classical fourth-order Runge-Kutta step of `ẋ = f(x)`.
pub fn rk4<F>(x: &StateVector, dt: f64, mut f: F) -> Result<StateVector>
where
    F: FnMut(&StateVector) -> Result<StateVector>,
{
    let k1 = f(x)?;
    let k2 = f(&(x + k1 * (0.5 * dt)))?;
    let k3 = f(&(x + k2 * (0.5 * dt)))?;
    let k4 = f(&(x + k3 * dt))?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// RK4 step of the plant with the input held constant.
pub fn rk4_step(x: &StateVector, u: &ControlInput, dt: f64, p: &CraneParams) -> Result<StateVector> {
    rk4(x, dt, |s| state_derivative(s, u, p))
}

/// RK4 step of the plant in closed loop with the state feedback.
pub fn closed_loop_step(
    x: &StateVector,
    v: &Vector2<f64>,
    gain: &Gain,
    dt: f64,
    p: &CraneParams,
) -> Result<StateVector> {
    rk4(x, dt, |s| state_derivative(s, &control_law(s, v, gain, p), p))
}

/// When to move on from a reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwitchRule {
    /// Switch once the simulation clock reaches this time (s).
    AtTime(f64),
    /// Switch once both the applied reference and the boom angles are within
    /// this distance (rad) of the target.
    OnConvergence(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceTarget {
    pub r: Vector2<f64>,
    pub switch: SwitchRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub x0: StateVector,
    pub references: Vec<ReferenceTarget>,
    pub duration: f64,
    pub dt_int: f64,
}

impl Scenario {
    pub fn validate(&self, ts: f64) -> Result<()> {
        if self.references.is_empty() {
            return Err(Error::InvalidParameter("scenario needs at least one reference".into()));
        }
        if !(self.dt_int > 0.0 && self.dt_int <= ts) {
            return Err(Error::InvalidParameter(format!(
                "integration step {} must be positive and not exceed Ts = {ts}",
                self.dt_int
            )));
        }
        let ratio = ts / self.dt_int;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "Ts = {ts} must be an integer multiple of dt_int = {}",
                self.dt_int
            )));
        }
        if !(self.duration >= 0.0) || self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("invalid duration or initial state".into()));
        }
        Ok(())
    }
}

/// One logged sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRecord {
    pub t: f64,
    pub x: StateVector,
    pub v: Vector2<f64>,
    pub r: Vector2<f64>,
    pub u: Vector2<f64>,
    /// Signed margin `Δ` at `(x, v)`, before clamping.
    pub dsm: f64,
    /// Smallest steady-state constraint margin of `x̄(v)`.
    pub margin: f64,
    /// Payload position with the swing angles set to zero.
    pub ee: Vector3<f64>,
    /// Index of the active reference.
    pub reference_index: usize,
}

impl LogRecord {
    pub fn boom(&self) -> Vector2<f64> {
        Vector2::new(self.x[2], self.x[3])
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryLog {
    pub records: Vec<LogRecord>,
    /// Number of governor candidates that were rejected.
    pub rejected_steps: usize,
    /// First linear-constraint violation seen in a run that does not abort.
    pub first_violation: Option<(String, f64)>,
}

impl TrajectoryLog {
    pub fn last(&self) -> Option<&LogRecord> {
        self.records.last()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", CSV_COLUMNS.join(","))?;
        let mut line = String::with_capacity(512);
        for rec in &self.records {
            line.clear();
            let fields = [rec.t]
                .into_iter()
                .chain(rec.x.iter().copied())
                .chain(rec.v.iter().copied())
                .chain(rec.r.iter().copied())
                .chain(rec.u.iter().copied())
                .chain([rec.dsm, rec.margin])
                .chain(rec.ee.iter().copied());
            for (i, value) in fields.enumerate() {
                if i > 0 {
                    line.push(',');
                }
                write!(line, "{value:.16e}").expect("writing to a String");
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Whether the governor shapes the reference or the target is applied directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Governed,
    /// `v ≡ r`; constraint violations are recorded instead of aborting.
    Ungoverned,
}

/// Everything a run needs besides the scenario.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub params: CraneParams,
    pub gain: Gain,
    pub constraints: ConstraintSet,
    pub governor: GovernorParams,
}

impl ClosedLoop {
    /// Propagates one sampling period with the reference frozen, checking the
    /// linear constraints after every integration step.
    fn propagate(
        &self,
        x: &StateVector,
        v: &Vector2<f64>,
        dt: f64,
        substeps: usize,
        t0: f64,
        violations: &mut Option<(String, f64)>,
        abort: bool,
    ) -> Result<StateVector> {
        let mut x = *x;
        for i in 0..substeps {
            x = closed_loop_step(&x, v, &self.gain, dt, &self.params)?;
            if let Some(c) = first_violated(&self.constraints.linear, &x) {
                let t = t0 + dt * (i + 1) as f64;
                if abort {
                    return Err(Error::ConstraintViolation {
                        label: c.label.clone(),
                        t,
                        value: c.beta.dot(&x),
                        bound: c.d,
                    });
                }
                violations.get_or_insert_with(|| (c.label.clone(), t));
            }
        }
        Ok(x)
    }

    fn record(&self, t: f64, x: &StateVector, v: &Vector2<f64>, r: &Vector2<f64>, index: usize) -> LogRecord {
        LogRecord {
            t,
            x: *x,
            v: *v,
            r: *r,
            u: control_law(x, v, &self.gain, &self.params).0,
            dsm: evaluate_dsm(x, v, &self.constraints, &self.governor).raw,
            margin: self.constraints.min_steady_margin(v),
            ee: boom_payload_position(&Vector2::new(x[2], x[3]), &self.params),
            reference_index: index,
        }
    }

    pub fn run(&self, scenario: &Scenario, mode: Mode) -> Result<TrajectoryLog> {
        let ts = self.governor.ts;
        scenario.validate(ts)?;
        let substeps = (ts / scenario.dt_int).round() as usize;
        let dt = scenario.dt_int;
        let abort = mode == Mode::Governed;

        if mode == Mode::Governed {
            for target in &scenario.references {
                self.constraints
                    .check_steady_admissible(&target.r)
                    .map_err(|reason| {
                        Error::ReferenceInadmissible(format!("[{:.6}, {:.6}]: {reason}", target.r[0], target.r[1]))
                    })?;
            }
        }

        let mut x = scenario.x0;
        let v0 = Vector2::new(x[2], x[3]);
        let mut index = 0;
        let mut governor = Governor::new(self.governor, v0, scenario.references[0].r)?;
        let mut v = match mode {
            Mode::Governed => v0,
            Mode::Ungoverned => scenario.references[0].r,
        };

        let steps = (scenario.duration / ts).round() as usize;
        let mut log = TrajectoryLog::default();
        log.records.reserve(steps + 1);
        if let Some(c) = first_violated(&self.constraints.linear, &x) {
            if abort {
                return Err(Error::ConstraintViolation {
                    label: c.label.clone(),
                    t: 0.0,
                    value: c.beta.dot(&x),
                    bound: c.d,
                });
            }
            log.first_violation = Some((c.label.clone(), 0.0));
        }

        for k in 0..=steps {
            let t = ts * k as f64;
            // advance the reference list before the update at this sample
            if index + 1 < scenario.references.len() {
                let target = &scenario.references[index];
                let boom = Vector2::new(x[2], x[3]);
                let done = match target.switch {
                    SwitchRule::AtTime(ts_switch) => t >= ts_switch,
                    SwitchRule::OnConvergence(tol) => {
                        (v - target.r).norm() <= tol && (boom - target.r).norm() <= tol
                    }
                };
                if done {
                    index += 1;
                    governor.set_target(scenario.references[index].r);
                    if mode == Mode::Ungoverned {
                        v = scenario.references[index].r;
                    }
                }
            }
            let r = scenario.references[index].r;

            let mut next = None;
            if mode == Mode::Governed {
                let mut violations = None;
                let outcome = governor.step(
                    &x,
                    |xs, vc| self.propagate(xs, vc, dt, substeps, t, &mut violations, true),
                    &self.constraints,
                );
                let outcome = match outcome {
                    Ok(o) => o,
                    // a candidate whose prediction leaves the constraints is refused
                    Err(Error::ConstraintViolation { .. }) => crate::erg::StepOutcome {
                        state: governor.state,
                        accepted: false,
                        rejected: true,
                        predicted: None,
                        dsm: evaluate_dsm(&x, &v, &self.constraints, &self.governor),
                    },
                    Err(e) => return Err(e),
                };
                log.rejected_steps += usize::from(outcome.rejected);
                v = outcome.state.v;
                next = outcome.predicted;
            }

            log.records.push(self.record(t, &x, &v, &r, index));
            if k == steps {
                break;
            }
            x = match next {
                Some(xn) => xn,
                None => self.propagate(&x, &v, dt, substeps, t, &mut log.first_violation, abort)?,
            };
        }
        Ok(log)
    }
}

fn first_violated<'a>(constraints: &'a [LinearConstraint], x: &StateVector) -> Option<&'a LinearConstraint> {
    constraints.iter().find(|c| c.margin(x) < 0.0)
}

/// Summary statistics of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub max_abs_theta1: f64,
    pub max_abs_theta2: f64,
    /// Time from activation until the boom stays within the settling band,
    /// per reference; `None` if it never settles while active.
    pub settling_times: Vec<Option<f64>>,
    pub min_dsm: f64,
    pub min_margin: f64,
    pub max_abs_u3: f64,
    pub max_abs_u4: f64,
    /// Boom angle error to the last active reference at the end of the run.
    pub final_error: f64,
}

impl Metrics {
    pub fn max_swing(&self) -> f64 {
        self.max_abs_theta1.max(self.max_abs_theta2)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "max_abs_theta1 = {:.9e}", self.max_abs_theta1);
        let _ = writeln!(s, "max_abs_theta2 = {:.9e}", self.max_abs_theta2);
        for (i, st) in self.settling_times.iter().enumerate() {
            match st {
                Some(t) => {
                    let _ = writeln!(s, "settling_time_{i} = {t:.4}");
                }
                None => {
                    let _ = writeln!(s, "settling_time_{i} = none");
                }
            }
        }
        let _ = writeln!(s, "min_dsm = {:.9e}", self.min_dsm);
        let _ = writeln!(s, "min_margin = {:.9e}", self.min_margin);
        let _ = writeln!(s, "max_abs_u3 = {:.9e}", self.max_abs_u3);
        let _ = writeln!(s, "max_abs_u4 = {:.9e}", self.max_abs_u4);
        let _ = writeln!(s, "final_error = {:.9e}", self.final_error);
        s
    }
}

/// Settling band used by [`metrics`] (rad).
pub const SETTLING_BAND: f64 = 2e-2;

pub fn metrics(log: &TrajectoryLog) -> Metrics {
    let recs = &log.records;
    let fold_max = |f: &dyn Fn(&LogRecord) -> f64| recs.iter().map(f).fold(0.0, f64::max);
    let fold_min = |f: &dyn Fn(&LogRecord) -> f64| recs.iter().map(f).fold(f64::INFINITY, f64::min);

    let n_refs = recs.iter().map(|r| r.reference_index + 1).max().unwrap_or(0);
    let settling_times = (0..n_refs)
        .map(|i| {
            let first = recs.iter().position(|r| r.reference_index == i)?;
            let end = recs[first..]
                .iter()
                .position(|r| r.reference_index != i)
                .map_or(recs.len(), |n| first + n + 1);
            // the sample that triggered a switch is logged under the next reference
            let target = recs[first].r;
            let segment = &recs[first..end];
            match segment
                .iter()
                .rposition(|r| (r.boom() - target).amax() > SETTLING_BAND)
            {
                None => Some(0.0),
                Some(j) if j + 1 < segment.len() => Some(segment[j + 1].t - segment[0].t),
                Some(_) => None,
            }
        })
        .collect();

    Metrics {
        max_abs_theta1: fold_max(&|r| r.x[0].abs()),
        max_abs_theta2: fold_max(&|r| r.x[1].abs()),
        settling_times,
        min_dsm: fold_min(&|r| r.dsm),
        min_margin: fold_min(&|r| r.margin),
        max_abs_u3: fold_max(&|r| r.u[0].abs()),
        max_abs_u4: fold_max(&|r| r.u[1].abs()),
        final_error: recs.last().map(|r| (r.boom() - r.r).norm()).unwrap_or(0.0),
    }
}

/// Gnuplot script plotting a trajectory CSV produced by [`TrajectoryLog::write_csv`].
pub fn gnuplot_script(csv_name: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set multiplot layout 3,1\n\
         set ylabel 'swing [rad]'\n\
         plot '{csv_name}' using 1:2 with lines, '' using 1:3 with lines\n\
         set ylabel 'boom [rad]'\n\
         plot '{csv_name}' using 1:4 with lines, '' using 1:5 with lines, '' using 1:10 with lines, '' using 1:11 with lines\n\
         set ylabel 'torque [N m]'\n\
         set xlabel 't [s]'\n\
         plot '{csv_name}' using 1:14 with lines, '' using 1:15 with lines\n\
         unset multiplot\n"
    )
}
