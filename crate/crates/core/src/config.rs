//! TOML configuration.
//!
//! Every section and field is optional; missing values take the defaults
//! below and are materialized in [`Config`], so a parsed config serializes to
//! a complete file. Angles are in radians except `erg.zeta` and `erg.delta`,
//! which are in degrees.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::constraints::{
    build_obstacle, default_safety_margin, joint_limit_constraints, ConstraintSet, JointBounds,
    ObstacleBox,
};
use crate::erg::GovernorParams;
use crate::error::{Error, Result};
use crate::linearize::{linearize, LinearModel, DEFAULT_STEP};
use crate::model::CraneParams;
use crate::sim::{ClosedLoop, ReferenceTarget, Scenario, SwitchRule};
use crate::synthesis::{diagonal, lqr_gain, pole_shift_gain, spectral_abscissa, LqrSolution};
use crate::{Gain, StateVector};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub crane: CraneParams,
    pub lqr: LqrConfig,
    pub erg: ErgConfig,
    pub constraints: ConstraintsConfig,
    pub obstacles: Vec<ObstacleBox>,
    pub scenario: ScenarioConfig,
    pub integration: IntegrationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LqrConfig {
    pub q_diag: [f64; 8],
    pub r_diag: [f64; 2],
    /// Explicit gain rows; when present no synthesis takes place.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<[[f64; 8]; 2]>,
    /// Equilibrium `[pitch, yaw]` used for linearization.
    pub design_point: [f64; 2],
    pub fd_step: f64,
}

impl Default for LqrConfig {
    fn default() -> Self {
        Self {
            q_diag: [10.0, 10.0, 100.0, 100.0, 1.0, 1.0, 10.0, 10.0],
            r_diag: [1.0, 1.0],
            k: None,
            design_point: [PI / 3.0, 0.0],
            fd_step: DEFAULT_STEP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErgConfig {
    pub k: f64,
    pub eta: f64,
    /// Repulsion influence distance (degrees).
    pub zeta: f64,
    /// Repulsion saturation distance (degrees).
    pub delta: f64,
    #[serde(rename = "Ts")]
    pub ts: f64,
    /// Accepted and stored; no part of the update uses it.
    pub omega: f64,
}

impl Default for ErgConfig {
    fn default() -> Self {
        Self {
            k: 30.0,
            eta: 1e-4,
            zeta: 10.0,
            delta: 0.09,
            ts: 0.01,
            omega: 0.6,
        }
    }
}

impl ErgConfig {
    pub fn governor_params(&self) -> GovernorParams {
        GovernorParams {
            k: self.k,
            eta: self.eta,
            zeta: self.zeta.to_radians(),
            delta_rep: self.delta.to_radians(),
            ts: self.ts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintsConfig {
    pub pitch_min: f64,
    pub pitch_max: f64,
    pub swing_max: f64,
    /// Bounding radius of the payload (m), part of the default obstacle margin.
    pub payload_radius: f64,
    /// Grid resolution per axis for sampling obstacle images.
    pub grid_n: usize,
    /// Supporting lines per obstacle.
    pub n_tangents: usize,
}

impl Default for ConstraintsConfig {
    fn default() -> Self {
        let b = JointBounds::default();
        Self {
            pitch_min: b.pitch_min,
            pitch_max: b.pitch_max,
            swing_max: b.swing_max,
            payload_radius: 0.1,
            grid_n: 241,
            n_tangents: 8,
        }
    }
}

impl ConstraintsConfig {
    pub fn bounds(&self) -> JointBounds {
        JointBounds {
            pitch_min: self.pitch_min,
            pitch_max: self.pitch_max,
            swing_max: self.swing_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    /// Target `[pitch, yaw]`.
    pub r: [f64; 2],
    /// Switch to the next reference at this time (s).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at_time: Option<f64>,
    /// Switch once within this distance (rad). Default when `at_time` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

/// Convergence tolerance used when a reference gives no switch rule.
pub const DEFAULT_SWITCH_TOL: f64 = 2e-2;

impl ReferenceConfig {
    pub fn switch_rule(&self) -> SwitchRule {
        match (self.at_time, self.tol) {
            (Some(t), _) => SwitchRule::AtTime(t),
            (None, tol) => SwitchRule::OnConvergence(tol.unwrap_or(DEFAULT_SWITCH_TOL)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub x0: [f64; 8],
    pub references: Vec<ReferenceConfig>,
    pub duration: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            x0: [0.0, 0.0, 105f64.to_radians(), PI / 2.0, 0.0, 0.0, 0.0, 0.0],
            references: vec![
                ReferenceConfig {
                    r: [59f64.to_radians(), (-48f64).to_radians()],
                    at_time: None,
                    tol: Some(DEFAULT_SWITCH_TOL),
                },
                ReferenceConfig {
                    r: [88f64.to_radians(), (-58f64).to_radians()],
                    at_time: None,
                    tol: Some(DEFAULT_SWITCH_TOL),
                },
            ],
            duration: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationConfig {
    pub dt_int: f64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self { dt_int: 1e-3 }
    }
}

// Raw file layout: everything optional.

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    crane: Option<RawCrane>,
    lqr: Option<RawLqr>,
    erg: Option<RawErg>,
    constraints: Option<RawConstraints>,
    obstacles: Option<Vec<RawObstacle>>,
    scenario: Option<RawScenario>,
    integration: Option<RawIntegration>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCrane {
    boom_mass: Option<f64>,
    payload_mass: Option<f64>,
    ballast_mass: Option<f64>,
    boom_length: Option<f64>,
    rope_length: Option<f64>,
    ballast_length: Option<f64>,
    jx: Option<f64>,
    jy: Option<f64>,
    jz: Option<f64>,
    ballast_inertia: Option<f64>,
    gravity: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLqr {
    q_diag: Option<[f64; 8]>,
    r_diag: Option<[f64; 2]>,
    k: Option<[[f64; 8]; 2]>,
    design_point: Option<[f64; 2]>,
    fd_step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawErg {
    k: Option<f64>,
    eta: Option<f64>,
    zeta: Option<f64>,
    delta: Option<f64>,
    #[serde(rename = "Ts")]
    ts: Option<f64>,
    omega: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstraints {
    pitch_min: Option<f64>,
    pitch_max: Option<f64>,
    swing_max: Option<f64>,
    payload_radius: Option<f64>,
    grid_n: Option<usize>,
    n_tangents: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObstacle {
    label: String,
    center: [f64; 3],
    half_extents: [f64; 3],
    margin: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    x0: Option<[f64; 8]>,
    references: Option<Vec<ReferenceConfig>>,
    duration: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegration {
    dt_int: Option<f64>,
}

impl RawConfig {
    fn materialize(self) -> Config {
        let c = self.crane.unwrap_or_default();
        let d = CraneParams::default();
        let mut crane = CraneParams::with_default_inertias(
            c.boom_mass.unwrap_or(d.boom_mass),
            c.payload_mass.unwrap_or(d.payload_mass),
            c.ballast_mass.unwrap_or(d.ballast_mass),
            c.boom_length.unwrap_or(d.boom_length),
            c.rope_length.unwrap_or(d.rope_length),
            c.ballast_length.unwrap_or(d.ballast_length),
            c.gravity.unwrap_or(d.gravity),
        );
        crane.jx = c.jx.unwrap_or(crane.jx);
        crane.jy = c.jy.unwrap_or(crane.jy);
        crane.jz = c.jz.unwrap_or(crane.jz);
        crane.ballast_inertia = c.ballast_inertia.unwrap_or(crane.ballast_inertia);

        let l = self.lqr.unwrap_or_default();
        let ld = LqrConfig::default();
        let lqr = LqrConfig {
            q_diag: l.q_diag.unwrap_or(ld.q_diag),
            r_diag: l.r_diag.unwrap_or(ld.r_diag),
            k: l.k,
            design_point: l.design_point.unwrap_or(ld.design_point),
            fd_step: l.fd_step.unwrap_or(ld.fd_step),
        };

        let e = self.erg.unwrap_or_default();
        let ed = ErgConfig::default();
        let erg = ErgConfig {
            k: e.k.unwrap_or(ed.k),
            eta: e.eta.unwrap_or(ed.eta),
            zeta: e.zeta.unwrap_or(ed.zeta),
            delta: e.delta.unwrap_or(ed.delta),
            ts: e.ts.unwrap_or(ed.ts),
            omega: e.omega.unwrap_or(ed.omega),
        };

        let k = self.constraints.unwrap_or_default();
        let kd = ConstraintsConfig::default();
        let constraints = ConstraintsConfig {
            pitch_min: k.pitch_min.unwrap_or(kd.pitch_min),
            pitch_max: k.pitch_max.unwrap_or(kd.pitch_max),
            swing_max: k.swing_max.unwrap_or(kd.swing_max),
            payload_radius: k.payload_radius.unwrap_or(kd.payload_radius),
            grid_n: k.grid_n.unwrap_or(kd.grid_n),
            n_tangents: k.n_tangents.unwrap_or(kd.n_tangents),
        };

        let default_margin =
            default_safety_margin(&crane, constraints.swing_max, constraints.payload_radius);
        let obstacles = self
            .obstacles
            .unwrap_or_default()
            .into_iter()
            .map(|o| ObstacleBox {
                label: o.label,
                center: o.center,
                half_extents: o.half_extents,
                safety_margin: o.margin.unwrap_or(default_margin),
            })
            .collect();

        let s = self.scenario.unwrap_or_default();
        let sd = ScenarioConfig::default();
        let scenario = ScenarioConfig {
            x0: s.x0.unwrap_or(sd.x0),
            references: s.references.unwrap_or(sd.references),
            duration: s.duration.unwrap_or(sd.duration),
        };

        let integration = IntegrationConfig {
            dt_int: self
                .integration
                .and_then(|i| i.dt_int)
                .unwrap_or(IntegrationConfig::default().dt_int),
        };

        Config {
            crane,
            lqr,
            erg,
            constraints,
            obstacles,
            scenario,
            integration,
        }
    }
}

impl Default for Config {
    fn default() -> Self {
        RawConfig::default().materialize()
    }
}

/// `line L, column C, section.key: message` for a TOML error.
fn one_line(text: &str, e: &toml::de::Error) -> String {
    let message = e.message().trim().replace('\n', " ");
    let Some(span) = e.span() else {
        return message;
    };
    let before = &text[..span.start.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    let lines: Vec<&str> = text.lines().collect();
    let key = lines
        .get(line - 1)
        .and_then(|l| l.split_once('='))
        .map(|(k, _)| k.trim())
        .filter(|k| !k.is_empty());
    let section = lines[..(line - 1).min(lines.len())]
        .iter()
        .rev()
        .map(|l| l.trim())
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']'));
    match (section, key) {
        (Some(s), Some(k)) => format!("line {line}, column {column}, {s}.{k}: {message}"),
        (None, Some(k)) => format!("line {line}, column {column}, {k}: {message}"),
        _ => format!("line {line}, column {column}: {message}"),
    }
}

fn invariant(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

/// Text of the bundled case-study scenario.
pub const BUNDLED_SCENARIO: &str = include_str!("../scenarios/case_study.toml");

impl Config {
    /// The bundled case-study scenario.
    pub fn bundled() -> Self {
        Self::from_toml_str(BUNDLED_SCENARIO).expect("bundled scenario parses")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(one_line(text, &e)))?;
        let config = raw.materialize();
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks cross-field invariants; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        self.crane
            .validate()
            .map_err(|e| Error::Config(format!("[crane] {e}")))?;
        let e = &self.erg;
        invariant(e.k > 0.0, || format!("erg.k must be positive, got {}", e.k))?;
        invariant(e.eta > 0.0, || format!("erg.eta must be positive, got {}", e.eta))?;
        invariant(e.delta > 0.0, || format!("erg.delta must be positive, got {}", e.delta))?;
        invariant(e.zeta > e.delta, || {
            format!("erg.zeta ({}) must exceed erg.delta ({})", e.zeta, e.delta)
        })?;
        invariant(e.ts > 0.0, || format!("erg.Ts must be positive, got {}", e.ts))?;

        let l = &self.lqr;
        invariant(l.q_diag.iter().all(|q| *q > 0.0), || "lqr.q_diag entries must be positive".into())?;
        invariant(l.r_diag.iter().all(|r| *r > 0.0), || "lqr.r_diag entries must be positive".into())?;
        invariant(l.fd_step > 0.0, || format!("lqr.fd_step must be positive, got {}", l.fd_step))?;
        if let Some(k) = &l.k {
            invariant(k.iter().flatten().all(|v| v.is_finite()), || "lqr.k must be finite".into())?;
        }

        let c = &self.constraints;
        self.constraints
            .bounds()
            .validate()
            .map_err(|e| Error::Config(format!("[constraints] {e}")))?;
        invariant(c.grid_n >= 8, || format!("constraints.grid_n must be at least 8, got {}", c.grid_n))?;
        invariant(c.n_tangents >= 3, || {
            format!("constraints.n_tangents must be at least 3, got {}", c.n_tangents)
        })?;
        invariant(c.payload_radius >= 0.0, || "constraints.payload_radius must be non-negative".into())?;
        for (i, o) in self.obstacles.iter().enumerate() {
            o.validate()
                .map_err(|e| Error::Config(format!("obstacles[{i}]: {e}")))?;
        }

        let s = &self.scenario;
        invariant(!s.references.is_empty(), || "scenario.references must not be empty".into())?;
        invariant(s.duration >= 0.0, || format!("scenario.duration must be non-negative, got {}", s.duration))?;
        for (i, r) in s.references.iter().enumerate() {
            invariant(r.at_time.is_none() || r.tol.is_none(), || {
                format!("scenario.references[{i}]: give either at_time or tol, not both")
            })?;
            invariant(r.tol.map_or(true, |t| t > 0.0), || {
                format!("scenario.references[{i}].tol must be positive")
            })?;
        }
        let dt = self.integration.dt_int;
        invariant(dt > 0.0 && dt <= e.ts, || {
            format!("integration.dt_int ({dt}) must be positive and at most erg.Ts ({})", e.ts)
        })?;
        let ratio = e.ts / dt;
        invariant((ratio - ratio.round()).abs() < 1e-9, || {
            format!("erg.Ts ({}) must be a multiple of integration.dt_int ({dt})", e.ts)
        })?;
        Ok(())
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            x0: StateVector::from(self.scenario.x0),
            references: self
                .scenario
                .references
                .iter()
                .map(|r| ReferenceTarget {
                    r: Vector2::from(r.r),
                    switch: r.switch_rule(),
                })
                .collect(),
            duration: self.scenario.duration,
            dt_int: self.integration.dt_int,
        }
    }

    pub fn linear_model(&self) -> Result<LinearModel> {
        linearize(&Vector2::from(self.lqr.design_point), &self.crane, self.lqr.fd_step)
    }

    /// Builds the gain, certificates and constraint set described by the file.
    pub fn build(&self) -> Result<Setup> {
        let model = self.linear_model()?;
        let (gain, lqr) = match &self.lqr.k {
            Some(rows) => (Gain::from_fn(|i, j| rows[i][j]), None),
            None => {
                let k0 = initial_gain(&model)?;
                let q = diagonal(&self.lqr.q_diag);
                let r = Matrix2::from_diagonal(&Vector2::from(self.lqr.r_diag));
                let sol = lqr_gain(&model, &q, &r, &k0)?;
                (sol.gain, Some(sol))
            }
        };
        let acl = model.closed_loop(&gain);
        let abscissa = spectral_abscissa(&acl);
        if !(abscissa < 0.0) {
            return Err(Error::NotHurwitz(format!(
                "A − BK at the design point has an eigenvalue with real part {abscissa:.4e}"
            )));
        }

        let bounds = self.constraints.bounds();
        let mut obstacles = Vec::new();
        let mut unreachable = Vec::new();
        for o in &self.obstacles {
            match build_obstacle(o, &self.crane, &bounds, self.constraints.grid_n, self.constraints.n_tangents)? {
                Some(oc) => obstacles.push(oc),
                None => unreachable.push(o.label.clone()),
            }
        }
        let constraints = ConstraintSet::certify(joint_limit_constraints(&bounds), obstacles, &acl)?;
        Ok(Setup {
            closed_loop: ClosedLoop {
                params: self.crane,
                gain,
                constraints,
                governor: self.erg.governor_params(),
            },
            model,
            lqr,
            unreachable_obstacles: unreachable,
        })
    }
}

/// Stabilizing starting gain for Kleinman iteration: the reference gain when
/// it stabilizes `model`, a pole-shifting gain otherwise.
pub fn initial_gain(model: &LinearModel) -> Result<Gain> {
    let reference = crate::reference_gain();
    if spectral_abscissa(&model.closed_loop(&reference)) < 0.0 {
        Ok(reference)
    } else {
        pole_shift_gain(&model.a, &model.b)
    }
}

/// Everything derived from a config before simulation.
#[derive(Debug, Clone)]
pub struct Setup {
    pub closed_loop: ClosedLoop,
    pub model: LinearModel,
    /// Synthesis result, absent when the gain was given explicitly.
    pub lqr: Option<LqrSolution<8, 2>>,
    /// Obstacles whose inflated box no boom configuration can reach.
    pub unreachable_obstacles: Vec<String>,
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<Config> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Config::from_toml_str(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
