//! Explicit reference governor.
//!
//! The applied reference `v` moves along the navigation field `ρ(r, v)` at a
//! speed proportional to the dynamic safety margin `Δ(x, v)`:
//!
//! ```text
//! v⁺ = v + Ts · Δ(x, v) · ρ(r, v)
//! ```
//!
//! `Δ` compares the Lyapunov level of the current state around `x̄(v)` with
//! the largest level that keeps the frozen-reference transient inside each
//! constraint. For an obstacle, whose safe set is a union of half-planes, the
//! best (largest) half-plane margin counts. A candidate update is applied only
//! if the closed loop, propagated one sampling period under the candidate,
//! still has a non-negative margin.

use nalgebra::Vector2;

use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::model::equilibrium_vector;
use crate::{StateMatrix, StateVector};

/// Governor tuning. Distances (`zeta`, `delta_rep`) are in radians of the
/// reference plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GovernorParams {
    /// Margin gain (1/s).
    pub k: f64,
    /// Attraction smoothing radius.
    pub eta: f64,
    /// Repulsion influence distance.
    pub zeta: f64,
    /// Distance at which a repulsion term reaches unit weight.
    pub delta_rep: f64,
    /// Sampling period (s).
    pub ts: f64,
}

impl GovernorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) {
            return Err(Error::InvalidParameter(format!("k must be positive, got {}", self.k)));
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParameter(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.delta_rep > 0.0 && self.zeta > self.delta_rep) {
            return Err(Error::InvalidParameter(format!(
                "need zeta > delta > 0, got zeta = {}, delta = {}",
                self.zeta, self.delta_rep
            )));
        }
        if !(self.ts > 0.0) {
            return Err(Error::InvalidParameter(format!("Ts must be positive, got {}", self.ts)));
        }
        Ok(())
    }
}

/// Applied reference and operator target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GovernorState {
    pub v: Vector2<f64>,
    pub r: Vector2<f64>,
}

/// `(x − x̄(v))ᵀ P (x − x̄(v))`.
pub fn lyap_value(x: &StateVector, v: &Vector2<f64>, p: &StateMatrix) -> f64 {
    let e = x - equilibrium_vector(v);
    e.dot(&(p * e))
}

/// Breakdown of one dynamic-safety-margin evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct DsmReport {
    /// `k · min(...)` before clamping; negative when some level set is exceeded.
    pub raw: f64,
    /// Index of the best half-plane of every obstacle (lowest index on ties).
    pub active_tangents: Vec<usize>,
}

impl DsmReport {
    /// Margin actually used to move the reference.
    pub fn value(&self) -> f64 {
        self.raw.max(0.0)
    }
}

pub fn evaluate_dsm(x: &StateVector, v: &Vector2<f64>, set: &ConstraintSet, gp: &GovernorParams) -> DsmReport {
    let mut tightest = f64::INFINITY;
    for (c, cert) in set.linear.iter().zip(&set.linear_certificates) {
        let margin = cert.threshold(v, &c.beta, c.d) - cert.level(x, v);
        tightest = tightest.min(margin);
    }
    let mut active_tangents = Vec::with_capacity(set.obstacles.len());
    for o in &set.obstacles {
        let mut best = f64::NEG_INFINITY;
        let mut best_idx = 0;
        for (l, (h, cert)) in o.halfplanes.iter().zip(&o.certificates).enumerate() {
            let margin = cert.threshold(v, &h.beta(), h.d()) - cert.level(x, v);
            if margin > best {
                best = margin;
                best_idx = l;
            }
        }
        active_tangents.push(best_idx);
        tightest = tightest.min(best);
    }
    DsmReport {
        raw: gp.k * tightest,
        active_tangents,
    }
}

/// Dynamic safety margin `Δ(x, v) ≥ 0`.
pub fn dsm(x: &StateVector, v: &Vector2<f64>, set: &ConstraintSet, gp: &GovernorParams) -> f64 {
    evaluate_dsm(x, v, set, gp).value()
}

/// `(r − v) / max(‖r − v‖, η)`.
pub fn nav_attraction(r: &Vector2<f64>, v: &Vector2<f64>, gp: &GovernorParams) -> Vector2<f64> {
    attraction_with_radius(r, v, gp.eta)
}

fn attraction_with_radius(r: &Vector2<f64>, v: &Vector2<f64>, radius: f64) -> Vector2<f64> {
    let dv = r - v;
    dv / dv.norm().max(radius)
}

/// Weight `max((ζ − s)/(ζ − δ), 0)` of one repulsion term at distance `s`.
pub fn repulsion_weight(s: f64, gp: &GovernorParams) -> f64 {
    ((gp.zeta - s) / (gp.zeta - gp.delta_rep)).max(0.0)
}

/// Repulsion from the linear constraints and from the active half-plane of
/// each obstacle, using steady-state distances of `x̄(v)` in the `(θ3, θ4)`
/// plane. Constraints that do not involve pitch or yaw contribute nothing.
pub fn nav_repulsion(
    v: &Vector2<f64>,
    set: &ConstraintSet,
    active_tangents: &[usize],
    gp: &GovernorParams,
) -> Vector2<f64> {
    let mut rho = Vector2::zeros();
    let mut push = |beta: &StateVector, d: f64| {
        let n = Vector2::new(beta[2], beta[3]);
        let norm = n.norm();
        if norm == 0.0 {
            return;
        }
        let s = (d - beta.dot(&equilibrium_vector(v))) / norm;
        rho -= repulsion_weight(s, gp) * n / norm;
    };
    for c in &set.linear {
        push(&c.beta, c.d);
    }
    for (o, &l) in set.obstacles.iter().zip(active_tangents) {
        if let Some(h) = o.halfplanes.get(l) {
            push(&h.beta(), h.d());
        }
    }
    rho
}

/// Outcome of one governor update.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: GovernorState,
    /// Whether a candidate different from the previous `v` was applied.
    pub accepted: bool,
    /// Whether a candidate was computed and then refused by the one-step check.
    pub rejected: bool,
    /// Closed-loop state one period ahead under the applied candidate, when
    /// it was computed and accepted.
    pub predicted: Option<StateVector>,
    /// Margin at the state and reference the step started from.
    pub dsm: DsmReport,
}

/// One discrete governor update.
///
/// `propagate(x, v)` must return the closed-loop state one sampling period
/// ahead with the reference frozen at `v`.
///
/// The attraction radius is raised to `Ts·Δ` so that a single step never
/// carries `v` past `r`.
pub fn erg_step<F>(
    x: &StateVector,
    g: &GovernorState,
    mut propagate: F,
    set: &ConstraintSet,
    gp: &GovernorParams,
) -> Result<StepOutcome>
where
    F: FnMut(&StateVector, &Vector2<f64>) -> Result<StateVector>,
{
    let report = evaluate_dsm(x, &g.v, set, gp);
    let delta = report.value();
    let hold = |report: DsmReport| StepOutcome {
        state: *g,
        accepted: false,
        rejected: false,
        predicted: None,
        dsm: report,
    };
    if delta == 0.0 {
        return Ok(hold(report));
    }

    let attraction = attraction_with_radius(&g.r, &g.v, gp.eta.max(gp.ts * delta));
    let rho = attraction + nav_repulsion(&g.v, set, &report.active_tangents, gp);
    let candidate = g.v + gp.ts * delta * rho;
    if candidate == g.v {
        return Ok(hold(report));
    }

    let predicted = propagate(x, &candidate)?;
    if evaluate_dsm(&predicted, &candidate, set, gp).raw >= 0.0 {
        Ok(StepOutcome {
            state: GovernorState { v: candidate, r: g.r },
            accepted: true,
            rejected: false,
            predicted: Some(predicted),
            dsm: report,
        })
    } else {
        Ok(StepOutcome {
            rejected: true,
            ..hold(report)
        })
    }
}

/// Stateful wrapper that refuses to start from a negative margin.
#[derive(Debug, Clone)]
pub struct Governor {
    pub params: GovernorParams,
    pub state: GovernorState,
    started: bool,
}

impl Governor {
    pub fn new(params: GovernorParams, v0: Vector2<f64>, r: Vector2<f64>) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            state: GovernorState { v: v0, r },
            started: false,
        })
    }

    pub fn set_target(&mut self, r: Vector2<f64>) {
        self.state.r = r;
    }

    pub fn step<F>(&mut self, x: &StateVector, propagate: F, set: &ConstraintSet) -> Result<StepOutcome>
    where
        F: FnMut(&StateVector, &Vector2<f64>) -> Result<StateVector>,
    {
        if !self.started {
            let raw = evaluate_dsm(x, &self.state.v, set, &self.params).raw;
            if raw < 0.0 {
                return Err(Error::InfeasibleStart(raw));
            }
            self.started = true;
        }
        let outcome = erg_step(x, &self.state, propagate, set, &self.params)?;
        self.state = outcome.state;
        Ok(outcome)
    }
}
