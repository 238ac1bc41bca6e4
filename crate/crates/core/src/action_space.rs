//! Per-step admissible action sets.
//!
//! Vehicles get a speed-dependent 12-sided polygon approximating the
//! acceleration ellipse in the `(a_x, a_y)` plane of their heading frame;
//! pedestrians get a fixed box in `(v, gamma)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{closest_on_segment, Point};
use crate::kinematics::PEDESTRIAN_MAX_SPEED;

pub const PEDESTRIAN_MAX_TURN_RATE: f64 = 0.3;

/// Piecewise-linear speed -> acceleration table. Speeds outside the table
/// clamp to the nearest breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakpoints {
    pub v: Vec<f64>,
    pub a: Vec<f64>,
}

impl Breakpoints {
    pub fn constant(a: f64) -> Self {
        Self { v: vec![0.0], a: vec![a] }
    }

    pub fn linear(v0: f64, a0: f64, v1: f64, a1: f64) -> Self {
        Self {
            v: vec![v0, v1],
            a: vec![a0, a1],
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.v.is_empty() || self.v.len() != self.a.len() {
            return Err(Error::InvalidProfile(format!(
                "{what}: need matching, non-empty speed and acceleration lists"
            )));
        }
        if self.v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidProfile(format!("{what}: speeds must be strictly increasing")));
        }
        if self.v.iter().chain(&self.a).any(|x| !x.is_finite()) {
            return Err(Error::InvalidProfile(format!("{what}: non-finite entry")));
        }
        if self.a.iter().any(|&a| a <= 0.0) {
            return Err(Error::InvalidProfile(format!("{what}: accelerations must be positive")));
        }
        Ok(())
    }

    pub fn eval(&self, v: f64) -> f64 {
        let n = self.v.len();
        if v <= self.v[0] {
            return self.a[0];
        }
        if v >= self.v[n - 1] {
            return self.a[n - 1];
        }
        let k = self.v.partition_point(|&x| x <= v) - 1;
        let t = (v - self.v[k]) / (self.v[k + 1] - self.v[k]);
        self.a[k] + t * (self.a[k + 1] - self.a[k])
    }
}

/// Speed-dependent acceleration capability of one vehicle type. `ax_min` is
/// the braking magnitude (stored positive); the lateral bound is symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccelProfile {
    pub id: String,
    pub ax_max: Breakpoints,
    pub ax_min: Breakpoints,
    pub ay_max: Breakpoints,
}

impl AccelProfile {
    pub fn new(id: impl Into<String>, ax_max: Breakpoints, ax_min: Breakpoints, ay_max: Breakpoints) -> Result<Self> {
        let p = Self {
            id: id.into(),
            ax_max,
            ax_min,
            ay_max,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::InvalidProfile("empty profile id".into()));
        }
        self.ax_max.validate(&format!("{}.ax_max", self.id))?;
        self.ax_min.validate(&format!("{}.ax_min", self.id))?;
        self.ay_max.validate(&format!("{}.ay_max", self.id))
    }

    /// Placeholder battery-electric profile (not fitted to measured data).
    pub fn ev_like() -> Self {
        Self {
            id: "ev-like".into(),
            ax_max: Breakpoints::linear(0.0, 6.0, 40.0, 2.0),
            ax_min: Breakpoints::constant(8.0),
            ay_max: Breakpoints::constant(6.0),
        }
    }

    /// Placeholder combustion-engine profile (not fitted to measured data).
    pub fn ice_like() -> Self {
        Self {
            id: "ice-like".into(),
            ax_max: Breakpoints::linear(0.0, 4.0, 40.0, 2.5),
            ax_min: Breakpoints::constant(8.0),
            ay_max: Breakpoints::constant(6.0),
        }
    }

    /// `(ax_max, ax_min, ay_max)` at speed `v`.
    pub fn bounds_at(&self, v: f64) -> (f64, f64, f64) {
        (self.ax_max.eval(v), self.ax_min.eval(v), self.ay_max.eval(v))
    }
}

#[derive(Debug, Deserialize)]
struct ProfileFile {
    #[serde(default)]
    profile: Vec<AccelProfile>,
}

/// Named acceleration profiles available to an evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSet {
    profiles: BTreeMap<String, AccelProfile>,
}

pub const DEFAULT_PROFILE: &str = "ev-like";

impl Default for ProfileSet {
    fn default() -> Self {
        let mut set = Self {
            profiles: BTreeMap::new(),
        };
        set.insert(AccelProfile::ev_like());
        set.insert(AccelProfile::ice_like());
        set
    }
}

impl ProfileSet {
    pub fn empty() -> Self {
        Self {
            profiles: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, profile: AccelProfile) {
        self.profiles.insert(profile.id.clone(), profile);
    }

    pub fn get(&self, id: &str) -> Result<&AccelProfile> {
        self.profiles
            .get(id)
            .ok_or_else(|| Error::InvalidProfile(format!("unknown profile `{id}`")))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.profiles.keys().map(String::as_str)
    }

    /// Parses a profile file. Entries are `[[profile]]` tables with `id` and
    /// `ax_max` / `ax_min` / `ay_max` sub-tables holding `v` and `a` lists.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ProfileFile =
            toml::from_str(text).map_err(|e| Error::InvalidProfile(format!("profile file: {e}")))?;
        let mut set = Self::empty();
        for p in file.profile {
            p.validate()?;
            set.insert(p);
        }
        Ok(set)
    }

    /// Default profiles overridden (or extended) by the ones in `text`.
    pub fn defaults_with_overrides(text: &str) -> Result<Self> {
        let mut set = Self::default();
        for (_, p) in Self::from_toml_str(text)?.profiles {
            set.insert(p);
        }
        Ok(set)
    }
}

/// Convex polygon `L u <= b` with its counter-clockwise vertex list.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionPolytope {
    rows: Vec<[f64; 2]>,
    b: Vec<f64>,
    vertices: Vec<Point>,
}

impl ActionPolytope {
    /// Builds the inequality description from counter-clockwise vertices.
    pub fn from_vertices(vertices: Vec<Point>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::invalid("polytope needs at least three vertices"));
        }
        let mut rows = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for k in 0..n {
            let e = vertices[(k + 1) % n] - vertices[k];
            let len = e.norm();
            if len == 0.0 {
                return Err(Error::invalid("repeated polytope vertex"));
            }
            let normal = Point::new(e.y, -e.x) / len;
            rows.push([normal.x, normal.y]);
            b.push(normal.dot(&vertices[k]));
        }
        let poly = Self { rows, b, vertices };
        if poly.vertices.iter().any(|v| !poly.contains(v, 1e-9)) {
            return Err(Error::invalid("polytope vertices are not convex and counter-clockwise"));
        }
        Ok(poly)
    }

    pub fn rectangle(lo: Point, hi: Point) -> Result<Self> {
        if !(hi.x > lo.x && hi.y > lo.y) {
            return Err(Error::invalid("empty rectangle"));
        }
        Ok(Self {
            rows: vec![[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]],
            b: vec![hi.x, -lo.x, hi.y, -lo.y],
            vertices: vec![
                Point::new(lo.x, lo.y),
                Point::new(hi.x, lo.y),
                Point::new(hi.x, hi.y),
                Point::new(lo.x, hi.y),
            ],
        })
    }

    pub fn rows(&self) -> &[[f64; 2]] {
        &self.rows
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// `L` as an `r x 2` matrix.
    pub fn l_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows.len(), 2, |i, j| self.rows[i][j])
    }

    pub fn contains(&self, u: &Point, tol: f64) -> bool {
        self.rows
            .iter()
            .zip(&self.b)
            .all(|(row, &b)| row[0] * u.x + row[1] * u.y <= b + tol)
    }

    /// Same polytope with every bound multiplied by `factor` (a homothety
    /// about the origin).
    pub fn with_scaled_bounds(&self, factor: f64) -> Self {
        Self {
            rows: self.rows.clone(),
            b: self.b.iter().map(|b| b * factor).collect(),
            vertices: self.vertices.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn vertex_mean(&self) -> Point {
        self.vertices.iter().fold(Point::zeros(), |acc, v| acc + v) / self.vertices.len() as f64
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }
}

/// Euclidean projection of `u` onto the polygon.
pub fn project_onto(polytope: &ActionPolytope, u: &Point) -> Point {
    if polytope.contains(u, 0.0) {
        return *u;
    }
    let verts = polytope.vertices();
    let n = verts.len();
    let mut best = verts[0];
    let mut best_d = f64::INFINITY;
    for k in 0..n {
        let c = closest_on_segment(u, &verts[k], &verts[(k + 1) % n]);
        let d = (u - c).norm_squared();
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

pub fn vehicle_polytope(profile: &AccelProfile, v: f64) -> Result<ActionPolytope> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::invalid(format!("vehicle speed {v} must be finite and non-negative")));
    }
    let (ax_max, ax_min, ay_max) = profile.bounds_at(v);
    if !(ax_max > 0.0 && ax_min > 0.0 && ay_max > 0.0) {
        return Err(Error::InvalidProfile(format!(
            "profile `{}` has non-positive bounds at v = {v}",
            profile.id
        )));
    }

    let kx_min = 6.0 / (5.0 * ax_min);
    let kx_max = 6.0 / (5.0 * ax_max);
    let ky = 1.0 / ay_max;
    let angles = [7.0 * PI / 12.0, 9.0 * PI / 12.0, 11.0 * PI / 12.0];

    let mut rows = Vec::with_capacity(12);
    for (sx, kx) in [(1.0, kx_min), (-1.0, kx_max)] {
        for sy in [1.0, -1.0] {
            for th in angles {
                rows.push([sx * kx * th.cos(), sy * ky * th.sin()]);
            }
        }
    }
    let bound = (5.0 * PI / 12.0).sin();
    let b = vec![bound; 12];

    // Adjacent faces in order of their normal direction meet at the vertices.
    let mut order: Vec<usize> = (0..12).collect();
    order.sort_by(|&i, &j| {
        let ai = rows[i][1].atan2(rows[i][0]);
        let aj = rows[j][1].atan2(rows[j][0]);
        ai.total_cmp(&aj)
    });
    let mut vertices = Vec::with_capacity(12);
    for k in 0..12 {
        let r1 = rows[order[k]];
        let r2 = rows[order[(k + 1) % 12]];
        let det = r1[0] * r2[1] - r1[1] * r2[0];
        let x = (bound * r2[1] - r1[1] * bound) / det;
        let y = (r1[0] * bound - bound * r2[0]) / det;
        vertices.push(Point::new(x, y));
    }

    Ok(ActionPolytope { rows, b, vertices })
}

/// Box `[0, 3] x [-0.3, 0.3]` over `(v, gamma)`.
pub fn pedestrian_polytope() -> ActionPolytope {
    ActionPolytope::rectangle(
        Point::new(0.0, -PEDESTRIAN_MAX_TURN_RATE),
        Point::new(PEDESTRIAN_MAX_SPEED, PEDESTRIAN_MAX_TURN_RATE),
    )
    .expect("pedestrian box is non-empty")
}
