//! Reduction of the pair game to planar reach sets.
//!
//! With block-diagonal constraints, the attacker's terminal displacement
//! `X = M_i u_i` ranges over the Minkowski sum `K_i` of the per-step images of
//! its action polygon, and likewise `Y = M_0 u_0` over `K_0`. For a fixed SV
//! displacement the attacker's best response is the Euclidean projection of
//! `Y - a` onto `K_i`, so the game value is the maximum of
//! `g(Y) = dist^2(Y - a, K_i)` over `K_0`. `g` is convex, hence the maximum is
//! attained at a vertex of `K_0`, and every such vertex is a sum of per-step
//! polygon vertices.

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::action_space::ActionPolytope;
use crate::error::{Error, Result};
use crate::geometry::{cross, perp, ConvexPolygon, Point};

use super::{gram_lambda_max, project_blocks, MinimaxQP};

/// Image of one step's action polygon in displacement space. `vertices[j]`
/// is the image of `actions[j]`; both lists are counter-clockwise.
#[derive(Debug, Clone)]
pub(crate) struct StepImage {
    pub vertices: Vec<Point>,
    pub actions: Vec<Point>,
}

/// Polygon whose vertices remember which per-step vertex produced them.
#[derive(Debug, Clone)]
pub(crate) struct TaggedPolygon {
    pub vertices: Vec<Point>,
    /// `tags[v][s]` is the vertex index used at the `s`-th step of the sum.
    pub tags: Vec<Vec<u16>>,
}

impl TaggedPolygon {
    fn origin() -> Self {
        Self {
            vertices: vec![Point::zeros()],
            tags: vec![Vec::new()],
        }
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

fn bottom_index(v: &[Point]) -> usize {
    let mut best = 0;
    for k in 1..v.len() {
        if v[k].y < v[best].y || (v[k].y == v[best].y && v[k].x < v[best].x) {
            best = k;
        }
    }
    best
}

/// Minkowski sum of a step image (prepended as the first step) and a tagged
/// polygon, by merging edges in angular order.
fn prepend_step(step: &StepImage, rest: &TaggedPolygon) -> TaggedPolygon {
    let a = &step.vertices;
    if rest.vertices.len() < 3 || a.len() < 3 {
        let mut vertices = Vec::with_capacity(a.len() * rest.vertices.len());
        let mut tags = Vec::with_capacity(vertices.capacity());
        for (j, va) in a.iter().enumerate() {
            for (vb, tb) in rest.vertices.iter().zip(&rest.tags) {
                vertices.push(va + vb);
                let mut t = Vec::with_capacity(tb.len() + 1);
                t.push(j as u16);
                t.extend_from_slice(tb);
                tags.push(t);
            }
        }
        return TaggedPolygon { vertices, tags };
    }

    let b = &rest.vertices;
    let (n, m) = (a.len(), b.len());
    let (ia, ib) = (bottom_index(a), bottom_index(b));
    let mut vertices = Vec::with_capacity(n + m);
    let mut tags = Vec::with_capacity(n + m);
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        let (ka, kb) = ((ia + i) % n, (ib + j) % m);
        vertices.push(a[ka] + b[kb]);
        let mut t = Vec::with_capacity(rest.tags[kb].len() + 1);
        t.push(ka as u16);
        t.extend_from_slice(&rest.tags[kb]);
        tags.push(t);

        if i == n {
            j += 1;
            continue;
        }
        if j == m {
            i += 1;
            continue;
        }
        let ea = a[(ka + 1) % n] - a[ka];
        let eb = b[(kb + 1) % m] - b[kb];
        let c = cross(&ea, &eb);
        let eps = 1e-12 * ea.norm() * eb.norm();
        if c > eps {
            i += 1;
        } else if c < -eps {
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    TaggedPolygon { vertices, tags }
}

fn step_images(map: &DMatrix<f64>, polytope: &ActionPolytope, steps: usize) -> Result<Vec<StepImage>> {
    let mut out = Vec::with_capacity(steps);
    for k in 0..steps {
        let block = Matrix2::new(map[(0, 2 * k)], map[(0, 2 * k + 1)], map[(1, 2 * k)], map[(1, 2 * k + 1)]);
        let det = block.determinant();
        if !(det.abs() > 1e-12 * block.norm_squared()) {
            return Err(Error::SingularSystem);
        }
        let mut actions: Vec<Point> = polytope.vertices().to_vec();
        let mut vertices: Vec<Point> = actions.iter().map(|u| block * u).collect();
        if det < 0.0 {
            actions.reverse();
            vertices.reverse();
        }
        out.push(StepImage { vertices, actions });
    }
    Ok(out)
}

fn suffix_sums(steps: &[StepImage]) -> Vec<TaggedPolygon> {
    let mut suffix = vec![TaggedPolygon::origin(); steps.len() + 1];
    for k in (0..steps.len()).rev() {
        suffix[k] = prepend_step(&steps[k], &suffix[k + 1]);
    }
    suffix
}

/// Planar form of one [`MinimaxQP`].
#[derive(Debug, Clone)]
pub struct PlanarGame {
    offset: Point,
    h: f64,
    attacker_map: DMatrix<f64>,
    sv_map: DMatrix<f64>,
    attacker_polytope: ActionPolytope,
    attacker_lmax: f64,
    attacker_steps: Vec<StepImage>,
    attacker_reach: ConvexPolygon,
    attacker_center: Point,
    attacker_center_action: Point,
    pub(crate) sv_steps: Vec<StepImage>,
    /// `sv_suffix[k]` is the reach set of SV steps `k..T`; the last entry is
    /// the origin.
    pub(crate) sv_suffix: Vec<TaggedPolygon>,
    pub(crate) sv_suffix_box: Vec<(Point, Point)>,
}

impl PlanarGame {
    pub fn new(qp: &MinimaxQP) -> Result<Self> {
        if qp.attacker_map.ncols() != 2 * qp.steps || qp.sv_map.ncols() != 2 * qp.steps {
            return Err(Error::invalid("planar reduction needs two actions per step"));
        }
        let attacker_steps = step_images(&qp.attacker_map, &qp.attacker_constraints, qp.steps)?;
        let sv_steps = step_images(&qp.sv_map, &qp.sv_constraints, qp.steps)?;

        let attacker_sum = suffix_sums(&attacker_steps).swap_remove(0);
        let attacker_reach = ConvexPolygon::hull(&attacker_sum.vertices);
        let attacker_center_action = qp.attacker_constraints.vertex_mean();
        let attacker_center = {
            let u = DVector::from_fn(2 * qp.steps, |r, _| attacker_center_action[r % 2]);
            let x = &qp.attacker_map * u;
            Point::new(x[0], x[1])
        };

        let sv_suffix = suffix_sums(&sv_steps);
        let sv_suffix_box = sv_suffix.iter().map(TaggedPolygon::bounding_box).collect();

        Ok(Self {
            offset: qp.offset,
            h: qp.h,
            attacker_map: qp.attacker_map.clone(),
            sv_map: qp.sv_map.clone(),
            attacker_polytope: qp.attacker_constraints.clone(),
            attacker_lmax: gram_lambda_max(&qp.attacker_map),
            attacker_steps,
            attacker_reach,
            attacker_center,
            attacker_center_action,
            sv_steps,
            sv_suffix,
            sv_suffix_box,
        })
    }

    pub fn steps(&self) -> usize {
        self.sv_steps.len()
    }

    /// Attacker reach set `K_i` (terminal displacement from its zero-input
    /// prediction).
    pub fn attacker_reach(&self) -> &ConvexPolygon {
        &self.attacker_reach
    }

    /// Vertices of the SV reach set `K_0`.
    pub fn sv_reach_vertices(&self) -> &[Point] {
        &self.sv_suffix[0].vertices
    }

    /// Squared distance the attacker can keep when the SV displacement is `y`.
    pub fn sv_value(&self, y: &Point) -> f64 {
        self.attacker_reach.distance_sq(&(y - self.offset))
    }

    pub fn sv_displacement(&self, u0: &DVector<f64>) -> Point {
        let y = &self.sv_map * u0;
        Point::new(y[0], y[1])
    }

    pub fn attacker_displacement(&self, ui: &DVector<f64>) -> Point {
        let x = &self.attacker_map * ui;
        Point::new(x[0], x[1])
    }

    /// Best SV reach-set vertex: `(g, vertex index)`.
    pub fn best_sv_vertex(&self) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, y) in self.sv_suffix[0].vertices.iter().enumerate() {
            let g = self.sv_value(y);
            if g > best.0 {
                best = (g, k);
            }
        }
        best
    }

    /// Stacked SV actions realizing vertex `index` of `K_0`.
    pub fn sv_vertex_actions(&self, index: usize) -> DVector<f64> {
        self.actions_from_tags(&self.sv_suffix[0].tags[index])
    }

    pub(crate) fn actions_from_tags(&self, tags: &[u16]) -> DVector<f64> {
        let mut u = DVector::zeros(2 * tags.len());
        for (k, &t) in tags.iter().enumerate() {
            let a = self.sv_steps[k].actions[t as usize];
            u[2 * k] = a.x;
            u[2 * k + 1] = a.y;
        }
        u
    }

    /// Largest squared separation the SV can force against a fixed attacker
    /// displacement `x`.
    pub fn upper_for_attacker(&self, x: &Point) -> f64 {
        let base = self.offset + x;
        self.sv_suffix[0]
            .vertices
            .iter()
            .map(|y| (base - y).norm_squared())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whether a candidate pair is a saddle up to a relative gap of 1e-9.
    pub fn certifies(&self, ui: &DVector<f64>, u0: &DVector<f64>) -> bool {
        let upper = self.upper_for_attacker(&self.attacker_displacement(ui));
        let lower = self.sv_value(&self.sv_displacement(u0));
        upper - lower <= 1e-9 * (1.0 + self.h)
    }

    /// Attacker best response to SV displacement `y`: the geometric squared
    /// distance and a feasible stacked action sequence attaining it.
    pub fn attacker_response(&self, y: &Point) -> (f64, DVector<f64>) {
        let z = y - self.offset;
        let target = self.attacker_reach.closest_point(&z);
        let d2 = (z - target).norm_squared();
        let lifted = self.lift(&target);
        let realized = (self.attacker_displacement(&lifted) - z).norm_squared();
        if realized - d2 <= 1e-12 * (1.0 + self.h) {
            return (d2, lifted);
        }
        let polished = self.polish(&z, lifted);
        (d2, polished)
    }

    /// Feasible stacked actions whose displacement is `x`, for `x` in `K_i`.
    fn lift(&self, x: &Point) -> DVector<f64> {
        let t = self.attacker_steps.len();
        let centre = DVector::from_fn(2 * t, |r, _| self.attacker_center_action[r % 2]);
        let dir = x - self.attacker_center;
        let scale = self.attacker_reach.vertices().iter().fold(0.0_f64, |m, v| m.max((v - self.attacker_center).norm()));
        if dir.norm() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            return centre;
        }
        let Some((t_exit, normal)) = self.attacker_reach.ray_exit(&self.attacker_center, &dir) else {
            return centre;
        };
        if t_exit <= 0.0 {
            return centre;
        }
        let exit = self.attacker_center + dir * t_exit;
        let boundary = self.lift_boundary(&exit, &normal);
        let s = (1.0 / t_exit).min(1.0);
        let mut u = &centre + (boundary - &centre) * s;
        for k in 0..t {
            // Guard against rounding just outside a face.
            let p = Point::new(u[2 * k], u[2 * k + 1]);
            if !self.attacker_polytope.contains(&p, 0.0) {
                let q = crate::action_space::project_onto(&self.attacker_polytope, &p);
                u[2 * k] = q.x;
                u[2 * k + 1] = q.y;
            }
        }
        u
    }

    /// Decomposes a boundary point with outward normal `n` into per-step
    /// points on each step image's supporting face.
    fn lift_boundary(&self, x: &Point, n: &Point) -> DVector<f64> {
        let tangent = perp(n);
        let mut base = Point::zeros();
        let mut span = Point::zeros();
        let mut faces = Vec::with_capacity(self.attacker_steps.len());
        for step in &self.attacker_steps {
            let scale = step.vertices.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
            let support = step.vertices.iter().map(|v| n.dot(v)).fold(f64::NEG_INFINITY, f64::max);
            let mut start = usize::MAX;
            let mut end = usize::MAX;
            for (j, v) in step.vertices.iter().enumerate() {
                if n.dot(v) < support - 1e-9 * scale {
                    continue;
                }
                let tv = tangent.dot(v);
                if start == usize::MAX || tv < tangent.dot(&step.vertices[start]) {
                    start = j;
                }
                if end == usize::MAX || tv > tangent.dot(&step.vertices[end]) {
                    end = j;
                }
            }
            base += step.vertices[start];
            span += step.vertices[end] - step.vertices[start];
            faces.push((start, end));
        }
        let along = tangent.dot(&span);
        let alpha = if along > 1e-15 * (1.0 + base.norm()) {
            (tangent.dot(&(x - base)) / along).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let mut u = DVector::zeros(2 * faces.len());
        for (k, (step, &(s, e))) in self.attacker_steps.iter().zip(&faces).enumerate() {
            let a = step.actions[s] + (step.actions[e] - step.actions[s]) * alpha;
            u[2 * k] = a.x;
            u[2 * k + 1] = a.y;
        }
        u
    }

    /// Accelerated projected gradient on `|M_i u - z|^2` starting from `u`.
    fn polish(&self, z: &Point, mut u: DVector<f64>) -> DVector<f64> {
        let lip = 2.0 * self.attacker_lmax;
        if lip <= 0.0 {
            return u;
        }
        let f = |u: &DVector<f64>| (self.attacker_displacement(u) - z).norm_squared();
        let mut best = u.clone();
        let mut best_f = f(&u);
        let mut prev = u.clone();
        let mut y = u.clone();
        let mut t = 1.0_f64;
        for _ in 0..500 {
            let r = self.attacker_displacement(&y) - z;
            let g = self.attacker_map.tr_mul(&nalgebra::Vector2::new(2.0 * r.x, 2.0 * r.y));
            u = project_blocks(&self.attacker_polytope, &(&y - g / lip));
            let fu = f(&u);
            if fu < best_f {
                best_f = fu;
                best.copy_from(&u);
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            y = &u + (&u - &prev) * ((t - 1.0) / t_next);
            let moved = (&u - &prev).norm();
            prev.copy_from(&u);
            t = t_next;
            if moved < 1e-10 {
                break;
            }
        }
        best
    }
}
