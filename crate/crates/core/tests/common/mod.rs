//! Shared builders and independent reference solutions for the integration
//! tests. Nothing here uses the solver's planar reduction.

#![allow(dead_code)]

use std::sync::Arc;

use mprism::action_space::{AccelProfile, Breakpoints, ProfileSet};
use mprism::geometry::Point;
use mprism::minimax_qp::{assemble_qp, MinimaxQP, PlayerModel};
use mprism::{Agent, EvalParams, PedestrianState, VehicleState};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RAIL: &str = "rail";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vehicle(id: &str, p: f64, q: f64, v: f64, phi: f64) -> Agent {
    Agent::vehicle(id, "ev-like", VehicleState::new(p, q, v, phi).unwrap())
}

pub fn vehicle_with(id: &str, profile: &str, p: f64, q: f64, v: f64, phi: f64) -> Agent {
    Agent::vehicle(id, profile, VehicleState::new(p, q, v, phi).unwrap())
}

pub fn pedestrian(id: &str, p: f64, q: f64, phi: f64, speed: f64) -> Agent {
    Agent::pedestrian(id, PedestrianState::new(p, q, phi, speed).unwrap())
}

/// Default profiles plus `rail`: ev-like longitudinally, with (almost) no
/// lateral authority, so head-on games reduce to one dimension.
pub fn rail_profiles() -> ProfileSet {
    let mut set = ProfileSet::default();
    let ev = AccelProfile::ev_like();
    set.insert(AccelProfile::new(RAIL, ev.ax_max, ev.ax_min, Breakpoints::constant(1e-6)).unwrap());
    set
}

pub fn rail_params() -> EvalParams {
    EvalParams {
        profiles: Arc::new(rail_profiles()),
        ..EvalParams::default()
    }
}

pub fn pair_qp(sv: &Agent, other: &Agent, steps: usize, params: &EvalParams) -> MinimaxQP {
    let p0 = PlayerModel::for_agent(sv, &params.profiles, params.delta, params.v_floor, steps).unwrap();
    let pi = PlayerModel::for_agent(other, &params.profiles, params.delta, params.v_floor, steps).unwrap();
    assemble_qp(&p0, &pi, steps, params.solver.lambda).unwrap()
}

/// Geometric part of `J`: squared separation without regularization.
pub fn sep_sq(qp: &MinimaxQP, ui: &DVector<f64>, u0: &DVector<f64>) -> f64 {
    let d = &qp.attacker_map * ui - &qp.sv_map * u0;
    (qp.offset + Point::new(d[0], d[1])).norm_squared()
}

/// Random vehicle pair whose zero-input predictions after `steps` steps are
/// within `spread` metres of each other.
pub fn random_vehicle_pair(r: &mut ChaCha8Rng, steps: usize, spread: f64) -> (Agent, Agent) {
    let profiles = ["ev-like", "ice-like"];
    let dt = 0.1 * steps as f64;
    let v0 = r.gen_range(0.0..30.0);
    let h0: f64 = r.gen_range(-3.1..3.1);
    let vi = r.gen_range(0.0..30.0);
    let hi: f64 = r.gen_range(-3.1..3.1);
    let x0 = Point::new(r.gen_range(-50.0..50.0), r.gen_range(-50.0..50.0));
    let end0 = x0 + Point::new(h0.cos(), h0.sin()) * v0 * dt;
    let jitter = Point::new(r.gen_range(-spread..spread), r.gen_range(-spread..spread));
    let xi = end0 + jitter - Point::new(hi.cos(), hi.sin()) * vi * dt;
    let sv = vehicle_with("sv", profiles[r.gen_range(0..2)], x0.x, x0.y, v0, h0);
    let other = vehicle_with("other", profiles[r.gen_range(0..2)], xi.x, xi.y, vi, hi);
    (sv, other)
}

/// Reference value for a one-step game: the SV maximizes exactly over its 12
/// polygon vertices; the attacker minimizes over an `n x n` grid of its
/// bounding box, keeping feasible points only. Returns the grid value and a
/// certified bound on its excess over the true value.
pub fn grid_oracle_t1(qp: &MinimaxQP, n: usize) -> (f64, f64) {
    assert_eq!(qp.steps, 1);
    let poly = &qp.attacker_constraints;
    let (lo, hi) = poly.bounding_box();
    let hx = (hi.x - lo.x) / (n - 1) as f64;
    let hy = (hi.y - lo.y) / (n - 1) as f64;
    let mi = &qp.attacker_map;
    let mut images = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let u = Point::new(lo.x + a as f64 * hx, lo.y + b as f64 * hy);
            if poly.contains(&u, 0.0) {
                images.push(Point::new(mi[(0, 0)] * u.x + mi[(0, 1)] * u.y, mi[(1, 0)] * u.x + mi[(1, 1)] * u.y));
            }
        }
    }

    let m0 = &qp.sv_map;
    let mut best = f64::NEG_INFINITY;
    let mut best_d = 0.0;
    for v in qp.sv_constraints.vertices() {
        let y = Point::new(m0[(0, 0)] * v.x + m0[(0, 1)] * v.y, m0[(1, 0)] * v.x + m0[(1, 1)] * v.y);
        let c = qp.offset - y;
        let inner = images.iter().map(|x| (c + x).norm_squared()).fold(f64::INFINITY, f64::min);
        if inner > best {
            best = inner;
        }
        best_d = f64::max(best_d, inner.sqrt());
    }

    // Every feasible action is within `delta` of a feasible grid point.
    let centre = poly.vertex_mean();
    let inradius = poly
        .rows()
        .iter()
        .zip(poly.b())
        .map(|(row, b)| (b - row[0] * centre.x - row[1] * centre.y) / (row[0].hypot(row[1])))
        .fold(f64::INFINITY, f64::min);
    let outradius = poly.vertices().iter().map(|v| (v - centre).norm()).fold(0.0, f64::max);
    let h = hx.max(hy);
    let delta = h * std::f64::consts::FRAC_1_SQRT_2 * (1.0 + outradius / inradius);
    let m_norm = mi.norm();
    let eps = 2.0 * m_norm * best_d * delta + m_norm * m_norm * delta * delta;
    (best, eps)
}

/// Exact minimum of `|c + M x|^2` over the box `lo <= x <= hi` with a 2-row
/// `M`. Some minimizer has at most two free coordinates, so every face with
/// at most two free coordinates is solved in closed form.
pub fn box_least_squares(c: Point, m: &DMatrix<f64>, lo: &[f64], hi: &[f64]) -> f64 {
    let n = lo.len();
    let mut best = f64::INFINITY;
    // state per coordinate: 0 = lower, 1 = upper, 2 = free
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut states = vec![0; n];
        let mut rem = code;
        for s in states.iter_mut() {
            *s = rem % 3;
            rem /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&k| states[k] == 2).collect();
        if free.len() > 2 {
            continue;
        }
        let mut x = vec![0.0; n];
        let mut r = c;
        for k in 0..n {
            if states[k] != 2 {
                x[k] = if states[k] == 0 { lo[k] } else { hi[k] };
                r += Point::new(m[(0, k)], m[(1, k)]) * x[k];
            }
        }
        let cols: Vec<Point> = free.iter().map(|&k| Point::new(m[(0, k)], m[(1, k)])).collect();
        let sol: Option<Vec<f64>> = match cols.len() {
            0 => Some(vec![]),
            1 => {
                let g = cols[0].norm_squared();
                (g > 1e-300).then(|| vec![-cols[0].dot(&r) / g])
            }
            _ => {
                let (a, b, d) = (cols[0].norm_squared(), cols[0].dot(&cols[1]), cols[1].norm_squared());
                let det = a * d - b * b;
                if det.abs() <= 1e-14 * a * d {
                    None
                } else {
                    let (r0, r1) = (-cols[0].dot(&r), -cols[1].dot(&r));
                    Some(vec![(d * r0 - b * r1) / det, (a * r1 - b * r0) / det])
                }
            }
        };
        let Some(sol) = sol else { continue };
        let mut ok = true;
        let mut res = r;
        for (j, &k) in free.iter().enumerate() {
            if sol[j] < lo[k] - 1e-12 || sol[j] > hi[k] + 1e-12 {
                ok = false;
            }
            res += cols[j] * sol[j];
        }
        if ok {
            best = best.min(res.norm_squared());
        }
    }
    best
}

/// Reference value for a two-step game with a pedestrian attacker (box action
/// set) and a vehicle SV: exhaustive over the SV's 12 x 12 vertex pairs, exact
/// box-constrained least squares for the attacker.
pub fn pedestrian_t2_oracle(qp: &MinimaxQP) -> f64 {
    assert_eq!(qp.steps, 2);
    let (blo, bhi) = qp.attacker_constraints.bounding_box();
    let lo = [blo.x, blo.y, blo.x, blo.y];
    let hi = [bhi.x, bhi.y, bhi.x, bhi.y];
    let verts = qp.sv_constraints.vertices();
    let mut best = f64::NEG_INFINITY;
    for v1 in verts {
        for v2 in verts {
            let u0 = DVector::from_vec(vec![v1.x, v1.y, v2.x, v2.y]);
            let y = &qp.sv_map * u0;
            let c = qp.offset - Point::new(y[0], y[1]);
            best = best.max(box_least_squares(c, &qp.attacker_map, &lo, &hi));
        }
    }
    best
}

/// Dense Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Stationary point of the quadratic objective from its coefficient
/// matrices, by dense elimination.
pub fn dense_critical_point(qp: &MinimaxQP) -> (DVector<f64>, DVector<f64>) {
    let n = qp.action_len();
    let mut a = vec![vec![0.0; 2 * n]; 2 * n];
    let mut b = vec![0.0; 2 * n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = qp.p[(i, j)] + qp.p[(j, i)];
            a[i][n + j] = qp.r[(i, j)];
            a[n + i][j] = qp.r[(j, i)];
            a[n + i][n + j] = qp.q[(i, j)] + qp.q[(j, i)];
        }
        b[i] = -qp.u[i];
        b[n + i] = -qp.v[i];
    }
    let x = gauss_solve(a, b);
    (DVector::from_column_slice(&x[..n]), DVector::from_column_slice(&x[n..]))
}

/// Head-on pair on rails: SV at the origin heading +x at `v0`, attacker
/// `gap` metres ahead heading -x at `vi`.
pub fn head_on(gap: f64, v0: f64, vi: f64) -> (Agent, Agent) {
    (
        vehicle_with("sv", RAIL, 0.0, 0.0, v0, 0.0),
        vehicle_with("attacker", RAIL, gap, 0.0, vi, std::f64::consts::PI),
    )
}

/// Effective longitudinal bounds of the dodecagon: 5/6 of the nominal ones.
pub fn effective_accel(profile: &AccelProfile, v: f64) -> (f64, f64) {
    let (ax_max, ax_min, _) = profile.bounds_at(v);
    (5.0 / 6.0 * ax_max, 5.0 / 6.0 * ax_min)
}

/// Worst-case gap of the 1-D head-on game after `t` seconds: the attacker
/// accelerates toward the SV at full authority while the SV brakes fully.
pub fn head_on_gap(gap: f64, v0: f64, vi: f64, t: f64) -> f64 {
    let rail = AccelProfile::ev_like();
    let (attack, _) = effective_accel(&rail, vi);
    let (_, brake) = effective_accel(&rail, v0);
    gap - (v0 + vi) * t - 0.5 * (attack - brake) * t * t
}

/// First time the worst-case gap reaches `c`, by bisection on `[0, t_max]`.
pub fn head_on_contact_time(gap: f64, v0: f64, vi: f64, c: f64, t_max: f64) -> Option<f64> {
    if head_on_gap(gap, v0, vi, t_max) > c {
        return None;
    }
    let (mut a, mut b) = (0.0, t_max);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if head_on_gap(gap, v0, vi, m) > c {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Gap whose worst-case contact happens exactly at `t` (gap decreasing on
/// the horizon).
pub fn gap_for_contact_time(t: f64, v0: f64, vi: f64, c: f64) -> f64 {
    c - head_on_gap(0.0, v0, vi, t)
}
