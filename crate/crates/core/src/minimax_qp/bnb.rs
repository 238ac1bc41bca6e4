//! Branch-and-bound over per-step SV vertex assignments.
//!
//! Nodes fix the SV's vertex for a prefix of steps. A node is bounded first
//! by the corners of the bounding box of everything the remaining steps can
//! add, then by the vertices of the remaining steps' exact reach polygon;
//! both are valid because the attacker's best-response distance is convex in
//! the SV displacement.

use std::time::{Duration, Instant};

use nalgebra::DVector;

use super::planar::PlanarGame;
use super::{gram_lambda_max, GameCase, MinimaxQP, SaddleResult, SolveStatus};
use crate::error::Result;
use crate::geometry::Point;

pub fn solve_bnb(qp: &MinimaxQP, time_limit: Duration) -> Result<SaddleResult> {
    let game = PlanarGame::new(qp)?;
    Ok(solve_with_game(qp, &game, time_limit, None))
}

struct Search<'a> {
    game: &'a PlanarGame,
    deadline: Instant,
    best: f64,
    best_u0: DVector<f64>,
    assignment: Vec<u16>,
    nodes: usize,
    timed_out: bool,
}

impl Search<'_> {
    fn slack(&self) -> f64 {
        1e-12 * (1.0 + self.best.abs())
    }

    fn box_bound(&self, k: usize, y: &Point) -> f64 {
        let (lo, hi) = self.game.sv_suffix_box[k];
        [
            Point::new(lo.x, lo.y),
            Point::new(hi.x, lo.y),
            Point::new(lo.x, hi.y),
            Point::new(hi.x, hi.y),
        ]
        .iter()
        .map(|c| self.game.sv_value(&(y + c)))
        .fold(f64::NEG_INFINITY, f64::max)
    }

    fn polygon_bound(&self, k: usize, y: &Point) -> f64 {
        self.game.sv_suffix[k]
            .vertices
            .iter()
            .map(|s| self.game.sv_value(&(y + s)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn dfs(&mut self, k: usize, y: Point) {
        self.nodes += 1;
        if self.nodes.is_multiple_of(64) && Instant::now() >= self.deadline {
            self.timed_out = true;
        }
        if self.timed_out {
            return;
        }
        let steps = self.game.steps();
        if k == steps {
            let value = self.game.sv_value(&y);
            if value > self.best {
                self.best = value;
                self.best_u0 = self.game.actions_from_tags(&self.assignment);
            }
            return;
        }

        let mut children: Vec<(f64, usize, Point)> = Vec::new();
        for (j, v) in self.game.sv_steps[k].vertices.iter().enumerate() {
            let child = y + v;
            let threshold = self.best + self.slack();
            if self.box_bound(k + 1, &child) <= threshold {
                continue;
            }
            let bound = self.polygon_bound(k + 1, &child);
            if bound <= threshold {
                continue;
            }
            children.push((bound, j, child));
        }
        children.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (bound, j, child) in children {
            if bound <= self.best + self.slack() {
                continue;
            }
            self.assignment[k] = j as u16;
            self.dfs(k + 1, child);
            if self.timed_out {
                return;
            }
        }
    }
}

/// Runs the search on a prepared planar game. The incumbent starts at the
/// best vertex of the SV reach set (and at `seed` when that is better).
pub(crate) fn solve_with_game(qp: &MinimaxQP, game: &PlanarGame, time_limit: Duration, seed: Option<&DVector<f64>>) -> SaddleResult {
    let (vertex_value, vertex) = game.best_sv_vertex();
    let mut search = Search {
        game,
        deadline: Instant::now() + time_limit,
        best: vertex_value,
        best_u0: game.sv_vertex_actions(vertex),
        assignment: vec![0; game.steps()],
        nodes: 0,
        timed_out: false,
    };
    if let Some(u0) = seed {
        let value = game.sv_value(&game.sv_displacement(u0));
        if value > search.best {
            search.best = value;
            search.best_u0 = u0.clone();
        }
    }
    let root = search.polygon_bound(0, &Point::zeros());
    if root > search.best + search.slack() {
        search.dfs(0, Point::zeros());
    } else {
        search.nodes = 1;
    }

    let u0 = search.best_u0;
    let (_, ui) = game.attacker_response(&game.sv_displacement(&u0));
    let value = qp.objective(&ui, &u0);

    let rho = 1.0 / (2.0 * (gram_lambda_max(&qp.attacker_map) + qp.regularization)).max(f64::MIN_POSITIVE);
    let (gi, _, _) = qp.gradients_fast(&ui, &u0);
    let kkt_residual = (qp.project_attacker(&(&ui - &gi * rho)) - &ui).norm() / rho;

    SaddleResult {
        attacker_actions: ui,
        sv_actions: u0,
        value,
        status: if search.timed_out {
            SolveStatus::BnbTimeLimit
        } else {
            SolveStatus::Converged
        },
        case: GameCase::NonconvexBnb,
        iterations: search.nodes,
        kkt_residual,
    }
}
