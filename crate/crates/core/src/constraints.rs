//! State constraints: joint ranges, swing bounds and obstacles.
//!
//! Obstacles are boxes in the operational space. With the swing bounded, the
//! payload stays within `l sin θmax` of its rest position, so each box is
//! inflated by that amount (plus the payload radius) and mapped into the
//! `(θ3, θ4)` plane at zero swing. The image is enclosed in a polygon made of
//! `n_t` supporting lines; the safe set is the union of their outer sides.

use std::f64::consts::PI;

use nalgebra::{Vector2, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{equilibrium_vector, forward_kinematics, CraneParams};
use crate::synthesis::{level_set_matrix, LevelSetCertificate};
use crate::{StateMatrix, StateVector};

/// Offset added to the supporting lines of a collinear point set.
const DEGENERATE_THICKNESS: f64 = 1e-6;

/// Half-space `βᵀx ≤ d` on the full state.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub beta: StateVector,
    pub d: f64,
    pub label: String,
}

impl LinearConstraint {
    pub fn new(beta: StateVector, d: f64, label: impl Into<String>) -> Self {
        Self { beta, d, label: label.into() }
    }

    /// `d − βᵀx`; non-negative when satisfied.
    pub fn margin(&self, x: &StateVector) -> f64 {
        self.d - self.beta.dot(x)
    }

    /// Margin of the steady state `x̄(v)`.
    pub fn steady_margin(&self, v: &Vector2<f64>) -> f64 {
        self.margin(&equilibrium_vector(v))
    }

    /// Component of `β` in the `(θ3, θ4)` reference plane.
    pub fn reference_normal(&self) -> Vector2<f64> {
        Vector2::new(self.beta[2], self.beta[3])
    }
}

/// Joint ranges enforced as linear state constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointBounds {
    pub pitch_min: f64,
    pub pitch_max: f64,
    /// Bound on `|θ1|` and `|θ2|`.
    pub swing_max: f64,
}

impl Default for JointBounds {
    fn default() -> Self {
        Self {
            pitch_min: PI / 18.0,
            pitch_max: 8.0 * PI / 9.0,
            swing_max: PI / 36.0,
        }
    }
}

impl JointBounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.pitch_min < self.pitch_max) {
            return Err(Error::InvalidParameter(format!(
                "pitch_min ({}) must be below pitch_max ({})",
                self.pitch_min, self.pitch_max
            )));
        }
        if !(self.swing_max > 0.0) {
            return Err(Error::InvalidParameter("swing_max must be positive".into()));
        }
        Ok(())
    }
}

fn unit(index: usize, sign: f64) -> StateVector {
    let mut b = StateVector::zeros();
    b[index] = sign;
    b
}

/// The six half-spaces bounding pitch and both swing angles.
pub fn joint_limit_constraints(bounds: &JointBounds) -> Vec<LinearConstraint> {
    vec![
        LinearConstraint::new(unit(2, 1.0), bounds.pitch_max, "pitch_max"),
        LinearConstraint::new(unit(2, -1.0), -bounds.pitch_min, "pitch_min"),
        LinearConstraint::new(unit(0, 1.0), bounds.swing_max, "radial_swing_pos"),
        LinearConstraint::new(unit(0, -1.0), bounds.swing_max, "radial_swing_neg"),
        LinearConstraint::new(unit(1, 1.0), bounds.swing_max, "tangential_swing_pos"),
        LinearConstraint::new(unit(1, -1.0), bounds.swing_max, "tangential_swing_neg"),
    ]
}

/// Axis-aligned obstacle box in the operational space (m).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleBox {
    pub label: String,
    pub center: [f64; 3],
    pub half_extents: [f64; 3],
    /// Inflation applied on every side.
    #[serde(rename = "margin")]
    pub safety_margin: f64,
}

impl ObstacleBox {
    pub fn validate(&self) -> Result<()> {
        if self.half_extents.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "obstacle `{}` needs positive half extents",
                self.label
            )));
        }
        if !(self.safety_margin >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "obstacle `{}` needs a non-negative margin",
                self.label
            )));
        }
        Ok(())
    }

    /// Membership in the box grown by its safety margin.
    pub fn contains_inflated(&self, point: &Vector3<f64>) -> bool {
        (0..3).all(|i| (point[i] - self.center[i]).abs() <= self.half_extents[i] + self.safety_margin)
    }
}

/// Safety margin covering the swing envelope: `l sin(θmax) + payload radius`.
pub fn default_safety_margin(p: &CraneParams, swing_max: f64, payload_radius: f64) -> f64 {
    p.rope_length * swing_max.sin() + payload_radius
}

/// Zero-swing payload position for a boom configuration.
pub fn boom_payload_position(theta: &Vector2<f64>, p: &CraneParams) -> Vector3<f64> {
    forward_kinematics(&Vector4::new(0.0, 0.0, theta[0], theta[1]), p)
}

/// Joint-space grid used to sample obstacle images.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointGrid {
    pub pitch: (f64, f64),
    pub yaw: (f64, f64),
    pub n: usize,
}

impl JointGrid {
    pub fn new(bounds: &JointBounds, n: usize) -> Self {
        Self {
            pitch: (bounds.pitch_min, bounds.pitch_max),
            yaw: (-PI, PI),
            n,
        }
    }

    pub fn cell(&self) -> Vector2<f64> {
        let k = (self.n - 1) as f64;
        Vector2::new((self.pitch.1 - self.pitch.0) / k, (self.yaw.1 - self.yaw.0) / k)
    }

    pub fn points(&self) -> impl Iterator<Item = Vector2<f64>> + '_ {
        let cell = self.cell();
        (0..self.n).flat_map(move |i| {
            (0..self.n).map(move |j| {
                Vector2::new(
                    self.pitch.0 + cell[0] * i as f64,
                    self.yaw.0 + cell[1] * j as f64,
                )
            })
        })
    }
}

/// Samples of `(θ3, θ4)` whose zero-swing payload lies in the inflated box.
pub fn obstacle_to_joint_space(
    obstacle: &ObstacleBox,
    p: &CraneParams,
    bounds: &JointBounds,
    grid_n: usize,
) -> Result<Vec<Vector2<f64>>> {
    if grid_n < 8 {
        return Err(Error::InvalidParameter(format!("grid_n must be at least 8, got {grid_n}")));
    }
    let grid = JointGrid::new(bounds, grid_n);
    Ok(grid
        .points()
        .filter(|theta| obstacle.contains_inflated(&boom_payload_position(theta, p)))
        .collect())
}

fn cross(o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull in counter-clockwise order (monotone chain). Collinear
/// input yields the two extreme points.
pub fn convex_hull(points: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
    let mut pts: Vec<Vector2<f64>> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vector2<f64>> = Vec::with_capacity(2 * pts.len());
    for p in pts.iter() {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower_len = hull.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    hull
}

/// One supporting line `n·θ = offset` of an obstacle image; the safe side is
/// `n·θ ≥ offset`, stored as the state half-space `βᵀx ≤ d` with
/// `β = −n` on the pitch/yaw components and `d = −offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfPlane {
    pub normal: Vector2<f64>,
    pub offset: f64,
}

impl HalfPlane {
    pub fn beta(&self) -> StateVector {
        let mut b = StateVector::zeros();
        b[2] = -self.normal[0];
        b[3] = -self.normal[1];
        b
    }

    pub fn d(&self) -> f64 {
        -self.offset
    }

    /// Signed distance of a boom configuration from the line, positive on
    /// the safe side.
    pub fn margin(&self, theta: &Vector2<f64>) -> f64 {
        self.normal.dot(theta) - self.offset
    }

    pub fn satisfied_by(&self, theta: &Vector2<f64>) -> bool {
        self.margin(theta) >= 0.0
    }
}

/// Obstacle safe set as a union of half-planes, each with its own
/// level-set certificate once [`attach_certificates`] has run.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleConstraint {
    pub label: String,
    pub halfplanes: Vec<HalfPlane>,
    pub certificates: Vec<LevelSetCertificate>,
    /// Hull of the sampled joint-space image.
    pub hull: Vec<Vector2<f64>>,
}

impl ObstacleConstraint {
    pub fn satisfied_count(&self, theta: &Vector2<f64>) -> usize {
        self.halfplanes.iter().filter(|h| h.satisfied_by(theta)).count()
    }

    pub fn is_safe(&self, theta: &Vector2<f64>) -> bool {
        self.halfplanes.iter().any(|h| h.satisfied_by(theta))
    }

    /// Largest half-plane margin; positive iff `theta` lies in the safe union.
    pub fn steady_margin(&self, theta: &Vector2<f64>) -> f64 {
        self.halfplanes
            .iter()
            .map(|h| h.margin(theta))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pushes every supporting line outwards by `pad`.
    pub fn padded(mut self, pad: f64) -> Self {
        for h in &mut self.halfplanes {
            h.offset += pad;
        }
        self
    }

    pub fn is_certified(&self) -> bool {
        !self.halfplanes.is_empty() && self.certificates.len() == self.halfplanes.len()
    }
}

/// Encloses a joint-space point set with `n_t` supporting lines whose normals
/// are equally spaced in angle, starting along `+θ3`.
pub fn tangent_embedding(points: &[Vector2<f64>], n_t: usize, label: &str) -> Result<ObstacleConstraint> {
    if points.is_empty() {
        return Err(Error::DegenerateHull(format!("obstacle `{label}` has no joint-space samples")));
    }
    if n_t < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 tangents, got {n_t}")));
    }
    let hull = convex_hull(points);
    let thickness = if hull.len() < 3 { DEGENERATE_THICKNESS } else { 0.0 };
    let halfplanes = (0..n_t)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / n_t as f64;
            let normal = Vector2::new(phi.cos(), phi.sin());
            let offset = hull
                .iter()
                .map(|p| normal.dot(p))
                .fold(f64::NEG_INFINITY, f64::max);
            HalfPlane { normal, offset: offset + thickness }
        })
        .collect();
    Ok(ObstacleConstraint {
        label: label.to_string(),
        halfplanes,
        certificates: Vec::new(),
        hull,
    })
}

/// Samples, embeds and pads one obstacle box.
///
/// The zero-swing payload position is `L`-Lipschitz in each coordinate, so
/// sampling against the box grown by `L · pad` puts every point of the true
/// image within `pad` (half a grid cell diagonal) of a sample. Pushing the
/// supporting lines out by `pad` then covers the whole image.
pub fn build_obstacle(
    obstacle: &ObstacleBox,
    p: &CraneParams,
    bounds: &JointBounds,
    grid_n: usize,
    n_t: usize,
) -> Result<Option<ObstacleConstraint>> {
    obstacle.validate()?;
    let pad = 0.5 * JointGrid::new(bounds, grid_n).cell().norm();
    let mut sampled = obstacle.clone();
    sampled.safety_margin += p.boom_length * pad;
    let points = obstacle_to_joint_space(&sampled, p, bounds, grid_n)?;
    if points.is_empty() {
        return Ok(None);
    }
    Ok(Some(tangent_embedding(&points, n_t, &obstacle.label)?.padded(pad)))
}

/// One level-set certificate per half-plane.
pub fn attach_certificates(mut oc: ObstacleConstraint, acl: &StateMatrix) -> Result<ObstacleConstraint> {
    oc.certificates = oc
        .halfplanes
        .iter()
        .enumerate()
        .map(|(i, h)| level_set_matrix(acl, &h.beta(), i))
        .collect::<Result<_>>()?;
    Ok(oc)
}

/// All constraints with their certificates, ready for the governor.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    pub linear: Vec<LinearConstraint>,
    pub linear_certificates: Vec<LevelSetCertificate>,
    pub obstacles: Vec<ObstacleConstraint>,
}

impl ConstraintSet {
    pub fn certify(
        linear: Vec<LinearConstraint>,
        obstacles: Vec<ObstacleConstraint>,
        acl: &StateMatrix,
    ) -> Result<Self> {
        let linear_certificates = linear
            .iter()
            .enumerate()
            .map(|(i, c)| level_set_matrix(acl, &c.beta, i))
            .collect::<Result<_>>()?;
        let obstacles = obstacles
            .into_iter()
            .map(|o| attach_certificates(o, acl))
            .collect::<Result<_>>()?;
        Ok(Self {
            linear,
            linear_certificates,
            obstacles,
        })
    }

    /// Smallest steady-state margin of `x̄(v)` over all constraints.
    pub fn min_steady_margin(&self, v: &Vector2<f64>) -> f64 {
        let linear = self.linear.iter().map(|c| c.steady_margin(v));
        let obstacles = self.obstacles.iter().map(|o| o.steady_margin(v));
        linear.chain(obstacles).fold(f64::INFINITY, f64::min)
    }

    /// Ok when `x̄(v)` strictly satisfies every constraint.
    pub fn check_steady_admissible(&self, v: &Vector2<f64>) -> std::result::Result<(), String> {
        for c in &self.linear {
            let s = c.steady_margin(v);
            if !(s > 0.0) {
                return Err(format!("`{}` steady margin {s:.4e}", c.label));
            }
        }
        for o in &self.obstacles {
            let s = o.steady_margin(v);
            if !(s > 0.0) {
                return Err(format!("inside obstacle `{}` (margin {s:.4e})", o.label));
            }
        }
        Ok(())
    }
}
