use nalgebra::{DMatrix, DVector};

use super::MinimaxQP;
use crate::action_space::{pedestrian_polytope, vehicle_polytope, ActionPolytope, ProfileSet};
use crate::error::{Error, Result};
use crate::kinematics::{stack_model, Agent, AgentBody, StackedModel};

/// One player of the pairwise game: its stacked motion model and per-step
/// action set.
#[derive(Debug, Clone)]
pub struct PlayerModel {
    pub stacked: StackedModel,
    pub polytope: ActionPolytope,
}

impl PlayerModel {
    pub fn for_agent(agent: &Agent, profiles: &ProfileSet, delta: f64, v_floor: f64, steps: usize) -> Result<Self> {
        let model = agent.linearize(delta, v_floor)?;
        let stacked = stack_model(&model, steps)?;
        let polytope = match &agent.body {
            AgentBody::Vehicle { profile, state } => vehicle_polytope(profiles.get(profile)?, state.v)?,
            AgentBody::Pedestrian(_) => pedestrian_polytope(),
        };
        Ok(Self { stacked, polytope })
    }
}

pub fn assemble_qp(sv: &PlayerModel, other: &PlayerModel, steps: usize, lambda: f64) -> Result<MinimaxQP> {
    if sv.stacked.steps != steps || other.stacked.steps != steps {
        return Err(Error::invalid(format!(
            "stacked horizons {} and {} do not match T = {steps}",
            sv.stacked.steps, other.stacked.steps
        )));
    }
    let (d0, di) = (sv.stacked.base.delta, other.stacked.base.delta);
    if d0 != di {
        return Err(Error::invalid(format!("step sizes differ: {d0} vs {di}")));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::invalid(format!("regularization {lambda} must be non-negative")));
    }
    if sv.stacked.action_len() != other.stacked.action_len() {
        return Err(Error::invalid("players have different action dimensions"));
    }

    let mi = other.stacked.world_input_map();
    let m0 = sv.stacked.world_input_map();
    let a = other.stacked.zero_input_position() - sv.stacked.zero_input_position();
    let av = DVector::from_column_slice(a.as_slice());
    let n = mi.ncols();
    let reg = DMatrix::<f64>::identity(n, n) * lambda;

    Ok(MinimaxQP {
        p: mi.tr_mul(&mi) + &reg,
        q: m0.tr_mul(&m0) + &reg,
        r: -2.0 * mi.tr_mul(&m0),
        u: 2.0 * mi.tr_mul(&av),
        v: -2.0 * m0.tr_mul(&av),
        h: a.norm_squared(),
        attacker_constraints: other.polytope.clone(),
        sv_constraints: sv.polytope.clone(),
        steps,
        regularization: lambda,
        attacker_map: mi,
        sv_map: m0,
        offset: a,
    })
}
