use nalgebra::DVector;

use super::{gradient_mapping_norm, gram_lambda_max, GameCase, MinimaxQP, SaddleResult, SolveStatus};
use crate::error::{Error, Result};

/// Options for [`solve_agd`]. Step sizes left at `None` are set to the
/// reciprocal Lipschitz constants of each player's gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgdOptions {
    pub rho: Option<f64>,
    pub mu: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub momentum: bool,
}

impl Default for AgdOptions {
    fn default() -> Self {
        Self {
            rho: None,
            mu: None,
            tol: 1e-7,
            max_iter: 2000,
            momentum: false,
        }
    }
}

fn default_step(lmax: f64) -> f64 {
    if lmax > 0.0 {
        1.0 / (2.0 * lmax)
    } else {
        1.0
    }
}

/// Projected alternating gradient descent (attacker) / ascent (SV).
pub fn solve_agd(qp: &MinimaxQP, opts: &AgdOptions) -> Result<SaddleResult> {
    let lambda = qp.regularization;
    let rho = opts.rho.unwrap_or_else(|| default_step(gram_lambda_max(&qp.attacker_map) + lambda));
    let mu = opts.mu.unwrap_or_else(|| default_step(gram_lambda_max(&qp.sv_map) + lambda));
    if !(rho > 0.0 && mu > 0.0 && rho.is_finite() && mu.is_finite()) {
        return Err(Error::invalid("step sizes must be positive and finite"));
    }

    let n = qp.action_len();
    let mut ui = DVector::zeros(n);
    let mut u0 = DVector::zeros(n);
    let mut ui_prev = ui.clone();
    let mut u0_prev = u0.clone();
    let mut status = SolveStatus::IterationLimit;
    let mut iterations = 0;

    for it in 1..=opts.max_iter {
        iterations = it;
        let (yi, y0) = if opts.momentum && it > 1 {
            let beta = (it as f64 - 1.0) / (it as f64 + 2.0);
            (&ui + (&ui - &ui_prev) * beta, &u0 + (&u0 - &u0_prev) * beta)
        } else {
            (ui.clone(), u0.clone())
        };

        let (gi, _, _) = qp.gradients_fast(&yi, &y0);
        let ui_next = qp.project_attacker(&(&yi - gi * rho));
        let (_, g0, _) = qp.gradients_fast(&ui_next, &y0);
        let u0_next = qp.project_sv(&(&y0 + g0 * mu));

        let value = qp.separation(&ui_next, &u0_next).norm_squared() + qp.regularization_term(&ui_next, &u0_next);
        if !value.is_finite() {
            return Err(Error::Divergence { iteration: it });
        }
        let moved = ((&ui_next - &ui).norm_squared() + (&u0_next - &u0).norm_squared()).sqrt();
        ui_prev = std::mem::replace(&mut ui, ui_next);
        u0_prev = std::mem::replace(&mut u0, u0_next);
        if moved < opts.tol {
            status = SolveStatus::Converged;
            break;
        }
    }

    Ok(SaddleResult {
        value: qp.objective(&ui, &u0),
        kkt_residual: gradient_mapping_norm(qp, &ui, &u0, rho, mu),
        attacker_actions: ui,
        sv_actions: u0,
        status,
        case: GameCase::ConvexBoundary,
        iterations,
    })
}
