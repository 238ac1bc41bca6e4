//! Per-snapshot model predictive time-to-collision.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use nalgebra::Matrix2;
use serde::Serialize;

use crate::action_space::ProfileSet;
use crate::error::{Error, Result};
use crate::kinematics::{Agent, AgentBody};
use crate::minimax_qp::{assemble_qp, solve_pair, GameCase, MinimaxQP, PlayerModel, SaddleResult, SolveStatus, SolverSettings};
use crate::parallel::par_map;

#[derive(Debug, Clone)]
pub struct EvalParams {
    /// Collision radius `C` (m).
    pub radius: f64,
    /// Step size (s).
    pub delta: f64,
    /// Look-ahead steps `T`.
    pub horizon: usize,
    pub v_floor: f64,
    pub solver: SolverSettings,
    /// Upper bound on concurrently evaluated agents / frames.
    pub workers: usize,
    /// Seed for randomized generators; the solvers themselves are deterministic.
    pub seed: u64,
    pub profiles: Arc<ProfileSet>,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            radius: 2.0,
            delta: 0.1,
            horizon: 10,
            v_floor: 0.1,
            solver: SolverSettings::default(),
            workers: 1,
            seed: 42,
            profiles: Arc::new(ProfileSet::default()),
        }
    }
}

impl EvalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::invalid(format!("collision radius {} must be positive", self.radius)));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::invalid(format!("step size {} must be positive", self.delta)));
        }
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be at least one step"));
        }
        if !(self.v_floor.is_finite() && self.v_floor > 0.0) {
            return Err(Error::invalid(format!("speed floor {} must be positive", self.v_floor)));
        }
        if !(self.solver.lambda.is_finite() && self.solver.lambda >= 0.0) {
            return Err(Error::invalid("regularization must be non-negative"));
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err(Error::invalid("solver tolerance and iteration limit must be positive"));
        }
        if self.workers == 0 {
            return Err(Error::invalid("worker count must be at least one"));
        }
        Ok(())
    }

    /// Time value of a step count.
    pub fn tau_of(&self, steps: usize) -> f64 {
        steps as f64 * self.delta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub timestamp: f64,
    pub sv: Agent,
    pub others: Vec<Agent>,
}

impl Snapshot {
    pub fn new(timestamp: f64, sv: Agent, others: Vec<Agent>) -> Result<Self> {
        let s = Self { timestamp, sv, others };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.timestamp.is_finite() {
            return Err(Error::invalid("snapshot timestamp must be finite"));
        }
        let mut seen = HashSet::new();
        for a in std::iter::once(&self.sv).chain(&self.others) {
            if !seen.insert(a.id.as_str()) {
                return Err(Error::invalid(format!("duplicate agent id `{}`", a.id)));
            }
        }
        Ok(())
    }
}

/// Summary of one pairwise solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDiagnostic {
    pub agent: String,
    pub steps: usize,
    pub case: Option<GameCase>,
    pub status: Option<SolveStatus>,
    pub iterations: usize,
    pub kkt_residual: f64,
    /// Worst-case distance `h*` (m), when the solve succeeded.
    pub distance: Option<f64>,
    pub error: Option<String>,
}

impl PairDiagnostic {
    /// Whether this solve degraded (error or time limit).
    pub fn is_issue(&self) -> bool {
        self.error.is_some() || self.status == Some(SolveStatus::BnbTimeLimit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MprttcResult {
    pub tau: f64,
    pub tau_steps: usize,
    pub per_agent: BTreeMap<String, f64>,
    pub per_agent_steps: BTreeMap<String, usize>,
    pub dominant: Option<String>,
    pub safe: bool,
    pub diagnostics: Vec<PairDiagnostic>,
}

impl MprttcResult {
    pub fn has_solver_issues(&self) -> bool {
        self.diagnostics.iter().any(PairDiagnostic::is_issue)
    }
}

fn find_agent(snapshot: &Snapshot, index: usize) -> Result<&Agent> {
    snapshot
        .others
        .get(index)
        .ok_or_else(|| Error::invalid(format!("agent index {index} out of range ({} others)", snapshot.others.len())))
}

fn pair_qp(sv: &Agent, other: &Agent, steps: usize, params: &EvalParams) -> Result<MinimaxQP> {
    let p0 = PlayerModel::for_agent(sv, &params.profiles, params.delta, params.v_floor, steps)?;
    let pi = PlayerModel::for_agent(other, &params.profiles, params.delta, params.v_floor, steps)?;
    assemble_qp(&p0, &pi, steps, params.solver.lambda)
}

/// Distance implied by a solve, with the regularization term removed.
pub fn distance_of(qp: &MinimaxQP, result: &SaddleResult) -> f64 {
    let reg = qp.regularization_term(&result.attacker_actions, &result.sv_actions);
    (result.value - reg).max(0.0).sqrt()
}

/// Worst-case distance between the SV and `others[agent_index]` after `steps`
/// steps, with the solver result that produced it.
pub fn h_star_detailed(snapshot: &Snapshot, agent_index: usize, steps: usize, params: &EvalParams) -> Result<(f64, SaddleResult)> {
    params.validate()?;
    if steps == 0 || steps > params.horizon {
        return Err(Error::invalid(format!("step count {steps} outside 1..={}", params.horizon)));
    }
    let other = find_agent(snapshot, agent_index)?;
    let qp = pair_qp(&snapshot.sv, other, steps, params)?;
    let result = solve_pair(&qp, &params.solver)?;
    Ok((distance_of(&qp, &result), result))
}

pub fn h_star(snapshot: &Snapshot, agent_index: usize, steps: usize, params: &EvalParams) -> Result<f64> {
    h_star_detailed(snapshot, agent_index, steps, params).map(|(h, _)| h)
}

/// Lower bound on `h*` from the sizes of both reach sets.
fn reach_lower_bound(qp: &MinimaxQP) -> f64 {
    let radius = |map: &nalgebra::DMatrix<f64>, poly: &crate::action_space::ActionPolytope| {
        let umax = poly.vertices().iter().fold(0.0_f64, |m, v| m.max(v.norm()));
        (0..qp.steps)
            .map(|k| {
                Matrix2::new(map[(0, 2 * k)], map[(0, 2 * k + 1)], map[(1, 2 * k)], map[(1, 2 * k + 1)]).norm() * umax
            })
            .sum::<f64>()
    };
    qp.offset.norm() - radius(&qp.attacker_map, &qp.attacker_constraints) - radius(&qp.sv_map, &qp.sv_constraints)
}

struct AgentOutcome {
    id: String,
    steps: usize,
    distance: f64,
    diagnostics: Vec<PairDiagnostic>,
}

fn agent_tau(sv: &Agent, other: &Agent, params: &EvalParams) -> AgentOutcome {
    let distance = (other.position() - sv.position()).norm();
    let mut out = AgentOutcome {
        id: other.id.clone(),
        steps: params.horizon,
        distance,
        diagnostics: Vec::new(),
    };
    if distance <= params.radius {
        out.steps = 0;
        return out;
    }
    for j in 1..=params.horizon {
        let solved = pair_qp(sv, other, j, params).and_then(|qp| {
            if reach_lower_bound(&qp) > params.radius {
                return Ok(None);
            }
            solve_pair(&qp, &params.solver).map(|r| Some((distance_of(&qp, &r), r)))
        });
        match solved {
            Ok(None) => {}
            Ok(Some((h, r))) => {
                out.diagnostics.push(PairDiagnostic {
                    agent: other.id.clone(),
                    steps: j,
                    case: Some(r.case),
                    status: Some(r.status),
                    iterations: r.iterations,
                    kkt_residual: r.kkt_residual,
                    distance: Some(h),
                    error: None,
                });
                if h <= params.radius {
                    out.steps = j;
                    return out;
                }
            }
            Err(e) => {
                // No usable bound: count it as contact at this step.
                out.diagnostics.push(PairDiagnostic {
                    agent: other.id.clone(),
                    steps: j,
                    case: None,
                    status: None,
                    iterations: 0,
                    kkt_residual: f64::NAN,
                    distance: None,
                    error: Some(e.to_string()),
                });
                out.steps = j;
                return out;
            }
        }
    }
    out
}

fn check_profiles(snapshot: &Snapshot, profiles: &ProfileSet) -> Result<()> {
    for a in std::iter::once(&snapshot.sv).chain(&snapshot.others) {
        if let AgentBody::Vehicle { profile, .. } = &a.body {
            profiles.get(profile)?;
        }
    }
    Ok(())
}

pub fn mprttc(snapshot: &Snapshot, params: &EvalParams) -> Result<MprttcResult> {
    params.validate()?;
    snapshot.validate()?;
    check_profiles(snapshot, &params.profiles)?;

    let outcomes = par_map(params.workers, &snapshot.others, |o| agent_tau(&snapshot.sv, o, params));

    let tau_steps = outcomes.iter().map(|o| o.steps).min().unwrap_or(params.horizon);
    let safe = tau_steps == params.horizon;
    let dominant = if safe {
        None
    } else {
        outcomes
            .iter()
            .min_by(|a, b| a.steps.cmp(&b.steps).then(a.distance.total_cmp(&b.distance)).then(a.id.cmp(&b.id)))
            .map(|o| o.id.clone())
    };

    let mut per_agent = BTreeMap::new();
    let mut per_agent_steps = BTreeMap::new();
    let mut diagnostics = Vec::new();
    for o in outcomes {
        per_agent.insert(o.id.clone(), params.tau_of(o.steps));
        per_agent_steps.insert(o.id, o.steps);
        diagnostics.extend(o.diagnostics);
    }

    Ok(MprttcResult {
        tau: params.tau_of(tau_steps),
        tau_steps,
        per_agent,
        per_agent_steps,
        dominant,
        safe,
        diagnostics,
    })
}

pub fn dominant_agent(result: &MprttcResult) -> Option<&str> {
    result.dominant.as_deref()
}
