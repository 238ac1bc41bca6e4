//! Pairwise worst-case distance game as a constrained minimax QP.
//!
//! The squared end-of-horizon separation between an attacker `i` and the
//! subject vehicle is
//!
//! ```text
//! J(u_i, u_0) = |a + M_i u_i - M_0 u_0|^2 + lambda (|u_i|^2 + |u_0|^2)
//! ```
//!
//! where `a` is the difference of the zero-input predictions and `M_*` map a
//! stacked action sequence to a world displacement. The SV maximizes, the
//! attacker minimizes. The value reported is the SV-commits-first value
//! `max_{u_0} min_{u_i} J`; it coincides with the saddle value whenever one
//! exists and is never larger than it.

mod agd;
mod assemble;
mod bnb;
mod planar;

use std::time::Duration;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub use agd::{solve_agd, AgdOptions};
pub use assemble::{assemble_qp, PlayerModel};
pub use bnb::solve_bnb;
pub use planar::PlanarGame;

use crate::action_space::{project_onto, ActionPolytope};
use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Debug, Clone)]
pub struct MinimaxQP {
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub h: f64,
    /// Per-step polytope of the attacker, applied to every step.
    pub attacker_constraints: ActionPolytope,
    pub sv_constraints: ActionPolytope,
    pub steps: usize,
    pub regularization: f64,
    /// `M_i`, 2 x T*M.
    pub attacker_map: DMatrix<f64>,
    /// `M_0`, 2 x T*M.
    pub sv_map: DMatrix<f64>,
    /// `a`, relative zero-input displacement.
    pub offset: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    IterationLimit,
    BnbTimeLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GameCase {
    /// Unconstrained critical point infeasible: the saddle sits on the boundary.
    ConvexBoundary,
    /// Critical point feasible: the inner maximization is non-convex.
    NonconvexBnb,
}

#[derive(Debug, Clone)]
pub struct SaddleResult {
    pub attacker_actions: DVector<f64>,
    pub sv_actions: DVector<f64>,
    /// Squared worst-case distance, including the regularization term.
    pub value: f64,
    pub status: SolveStatus,
    pub case: GameCase,
    pub iterations: usize,
    pub kkt_residual: f64,
}

impl MinimaxQP {
    pub fn action_len(&self) -> usize {
        self.p.nrows()
    }

    /// Quadratic form of the objective.
    pub fn objective(&self, ui: &DVector<f64>, u0: &DVector<f64>) -> f64 {
        ui.dot(&(&self.p * ui)) + u0.dot(&(&self.q * u0)) + ui.dot(&(&self.r * u0)) + self.u.dot(ui) + self.v.dot(u0) + self.h
    }

    /// `a + M_i u_i - M_0 u_0`.
    pub fn separation(&self, ui: &DVector<f64>, u0: &DVector<f64>) -> Point {
        let d = &self.attacker_map * ui - &self.sv_map * u0;
        self.offset + Point::new(d[0], d[1])
    }

    pub fn regularization_term(&self, ui: &DVector<f64>, u0: &DVector<f64>) -> f64 {
        self.regularization * (ui.norm_squared() + u0.norm_squared())
    }

    pub fn grad_attacker(&self, ui: &DVector<f64>, u0: &DVector<f64>) -> DVector<f64> {
        2.0 * (&self.p * ui) + &self.r * u0 + &self.u
    }

    pub fn grad_sv(&self, ui: &DVector<f64>, u0: &DVector<f64>) -> DVector<f64> {
        2.0 * (&self.q * u0) + self.r.transpose() * ui + &self.v
    }

    /// Both gradients through the rank-2 factorization; equal to
    /// [`grad_attacker`](Self::grad_attacker) and [`grad_sv`](Self::grad_sv)
    /// but linear rather than quadratic in the action length.
    pub(crate) fn gradients_fast(&self, ui: &DVector<f64>, u0: &DVector<f64>) -> (DVector<f64>, DVector<f64>, Point) {
        let s = self.separation(ui, u0);
        let sv = nalgebra::Vector2::new(2.0 * s.x, 2.0 * s.y);
        let gi = self.attacker_map.tr_mul(&sv) + 2.0 * self.regularization * ui;
        let g0 = -self.sv_map.tr_mul(&sv) + 2.0 * self.regularization * u0;
        (gi, g0, s)
    }

    pub fn project_attacker(&self, u: &DVector<f64>) -> DVector<f64> {
        project_blocks(&self.attacker_constraints, u)
    }

    pub fn project_sv(&self, u: &DVector<f64>) -> DVector<f64> {
        project_blocks(&self.sv_constraints, u)
    }

    pub fn attacker_feasible(&self, u: &DVector<f64>, tol: f64) -> bool {
        blocks_feasible(&self.attacker_constraints, u, tol)
    }

    pub fn sv_feasible(&self, u: &DVector<f64>, tol: f64) -> bool {
        blocks_feasible(&self.sv_constraints, u, tol)
    }
}

/// Joint projection onto `T` copies of a planar polytope: one independent
/// projection per step.
pub fn project_blocks(polytope: &ActionPolytope, u: &DVector<f64>) -> DVector<f64> {
    let mut out = u.clone();
    for k in 0..u.len() / 2 {
        let p = project_onto(polytope, &Point::new(u[2 * k], u[2 * k + 1]));
        out[2 * k] = p.x;
        out[2 * k + 1] = p.y;
    }
    out
}

pub fn blocks_feasible(polytope: &ActionPolytope, u: &DVector<f64>, tol: f64) -> bool {
    (0..u.len() / 2).all(|k| polytope.contains(&Point::new(u[2 * k], u[2 * k + 1]), tol))
}

/// Unconstrained stationary point of `J` in both players.
pub fn critical_point(qp: &MinimaxQP) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = qp.action_len();
    let mut k = DMatrix::zeros(2 * n, 2 * n);
    k.view_mut((0, 0), (n, n)).copy_from(&(2.0 * &qp.p));
    k.view_mut((n, n), (n, n)).copy_from(&(2.0 * &qp.q));
    k.view_mut((0, n), (n, n)).copy_from(&qp.r);
    k.view_mut((n, 0), (n, n)).copy_from(&qp.r.transpose());
    let mut rhs = DVector::zeros(2 * n);
    rhs.rows_mut(0, n).copy_from(&(-&qp.u));
    rhs.rows_mut(n, n).copy_from(&(-&qp.v));

    // J is jointly convex, so the stationarity system is symmetric positive
    // semidefinite and definite once regularized.
    let x = match k.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => k.clone().lu().solve(&rhs).ok_or(Error::SingularSystem)?,
    };
    let residual = (&k * &x - &rhs).norm();
    if !x.iter().all(|v| v.is_finite()) || residual > 1e-8 * (1.0 + rhs.norm()) {
        return Err(Error::SingularSystem);
    }
    Ok((x.rows(0, n).into_owned(), x.rows(n, n).into_owned()))
}

pub fn case_split(qp: &MinimaxQP) -> Result<GameCase> {
    let (ui, u0) = critical_point(qp)?;
    if qp.attacker_feasible(&ui, 1e-9) && qp.sv_feasible(&u0, 1e-9) {
        Ok(GameCase::NonconvexBnb)
    } else {
        Ok(GameCase::ConvexBoundary)
    }
}

/// Solver knobs shared by [`solve_pair`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverSettings {
    pub lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub momentum: bool,
    pub bnb_time_limit: Duration,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            lambda: 1e-8,
            tol: 1e-7,
            max_iter: 2000,
            momentum: false,
            bnb_time_limit: Duration::from_millis(50),
        }
    }
}

/// Case split followed by the matching solver. A Case 1 result is accepted
/// only when its duality gap certifies it; otherwise the pair is re-solved
/// by branch-and-bound seeded with the gradient solution.
pub fn solve_pair(qp: &MinimaxQP, settings: &SolverSettings) -> Result<SaddleResult> {
    let game = PlanarGame::new(qp)?;
    // Without regularization the critical point need not be unique; the
    // exhaustive search does not depend on it.
    let case = match case_split(qp) {
        Err(Error::SingularSystem) => GameCase::NonconvexBnb,
        other => other?,
    };
    match case {
        GameCase::ConvexBoundary => {
            let opts = AgdOptions {
                tol: settings.tol,
                max_iter: settings.max_iter,
                momentum: settings.momentum,
                ..AgdOptions::default()
            };
            let mut agd = solve_agd(qp, &opts)?;
            agd.case = case;
            if game.certifies(&agd.attacker_actions, &agd.sv_actions) {
                return Ok(agd);
            }
            let mut res = bnb::solve_with_game(qp, &game, settings.bnb_time_limit, Some(&agd.sv_actions));
            res.case = case;
            Ok(res)
        }
        GameCase::NonconvexBnb => Ok(bnb::solve_with_game(qp, &game, settings.bnb_time_limit, None)),
    }
}

/// Largest eigenvalue of `M M^T` for a 2-row matrix, i.e. of `M^T M`.
pub(crate) fn gram_lambda_max(m: &DMatrix<f64>) -> f64 {
    let g = m * m.transpose();
    let (a, b, d) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    mid + rad
}

/// Norm of the projected-gradient map for both players.
pub(crate) fn gradient_mapping_norm(qp: &MinimaxQP, ui: &DVector<f64>, u0: &DVector<f64>, rho: f64, mu: f64) -> f64 {
    let (gi, g0, _) = qp.gradients_fast(ui, u0);
    let di = qp.project_attacker(&(ui - rho * gi)) - ui;
    let d0 = qp.project_sv(&(u0 + mu * g0)) - u0;
    (di.norm_squared() / (rho * rho) + d0.norm_squared() / (mu * mu)).sqrt()
}
