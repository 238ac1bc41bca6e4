//! Agent states and their discrete linearized motion models.
//!
//! Every agent is linearized in its own heading-aligned frame: the local
//! position and heading deviation start at zero and the model's predictions
//! are rotated back by `frame` and shifted by `origin` to obtain world
//! coordinates. This keeps the small-course-angle approximation valid for
//! any world heading.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector, Rotation2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub p: f64,
    pub q: f64,
    pub v: f64,
    pub phi: f64,
}

impl VehicleState {
    pub fn new(p: f64, q: f64, v: f64, phi: f64) -> Result<Self> {
        let state = Self { p, q, v, phi };
        state.validate()?;
        Ok(Self {
            phi: normalize_angle(phi),
            ..state
        })
    }

    fn validate(&self) -> Result<()> {
        if ![self.p, self.q, self.v, self.phi].iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("vehicle state has non-finite fields"));
        }
        if self.v < 0.0 {
            return Err(Error::invalid(format!("vehicle speed {} is negative", self.v)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PedestrianState {
    pub p: f64,
    pub q: f64,
    pub phi: f64,
    /// Observed walking speed, only used as the linearization constant.
    pub speed_estimate: f64,
}

pub const PEDESTRIAN_MAX_SPEED: f64 = 3.0;

impl PedestrianState {
    pub fn new(p: f64, q: f64, phi: f64, speed_estimate: f64) -> Result<Self> {
        let state = Self {
            p,
            q,
            phi,
            speed_estimate,
        };
        state.validate()?;
        Ok(Self {
            phi: normalize_angle(phi),
            ..state
        })
    }

    fn validate(&self) -> Result<()> {
        if ![self.p, self.q, self.phi, self.speed_estimate].iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("pedestrian state has non-finite fields"));
        }
        if !(0.0..=PEDESTRIAN_MAX_SPEED).contains(&self.speed_estimate) {
            return Err(Error::invalid(format!(
                "pedestrian speed estimate {} outside [0, {PEDESTRIAN_MAX_SPEED}]",
                self.speed_estimate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AgentBody {
    Vehicle { profile: String, state: VehicleState },
    Pedestrian(PedestrianState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: String,
    pub body: AgentBody,
}

impl Agent {
    pub fn vehicle(id: impl Into<String>, profile: impl Into<String>, state: VehicleState) -> Self {
        Self {
            id: id.into(),
            body: AgentBody::Vehicle {
                profile: profile.into(),
                state,
            },
        }
    }

    pub fn pedestrian(id: impl Into<String>, state: PedestrianState) -> Self {
        Self {
            id: id.into(),
            body: AgentBody::Pedestrian(state),
        }
    }

    pub fn position(&self) -> Point {
        match &self.body {
            AgentBody::Vehicle { state, .. } => Point::new(state.p, state.q),
            AgentBody::Pedestrian(state) => Point::new(state.p, state.q),
        }
    }

    pub fn heading(&self) -> f64 {
        match &self.body {
            AgentBody::Vehicle { state, .. } => state.phi,
            AgentBody::Pedestrian(state) => state.phi,
        }
    }

    pub fn speed(&self) -> f64 {
        match &self.body {
            AgentBody::Vehicle { state, .. } => state.v,
            AgentBody::Pedestrian(state) => state.speed_estimate,
        }
    }

    pub fn is_vehicle(&self) -> bool {
        matches!(self.body, AgentBody::Vehicle { .. })
    }

    pub fn linearize(&self, delta: f64, v_floor: f64) -> Result<DiscreteLinearModel> {
        match &self.body {
            AgentBody::Vehicle { state, .. } => linearize_vehicle(state, delta, v_floor),
            AgentBody::Pedestrian(state) => linearize_pedestrian(state, delta, v_floor),
        }
    }

    /// Same agent moved by a rigid transform of the world: rotate by `angle`
    /// about the origin, then translate by `offset`.
    pub fn transformed(&self, angle: f64, offset: Point) -> Self {
        let rot = Rotation2::new(angle);
        let pos = rot * self.position() + offset;
        let body = match &self.body {
            AgentBody::Vehicle { profile, state } => AgentBody::Vehicle {
                profile: profile.clone(),
                state: VehicleState {
                    p: pos.x,
                    q: pos.y,
                    v: state.v,
                    phi: normalize_angle(state.phi + angle),
                },
            },
            AgentBody::Pedestrian(state) => AgentBody::Pedestrian(PedestrianState {
                p: pos.x,
                q: pos.y,
                phi: normalize_angle(state.phi + angle),
                speed_estimate: state.speed_estimate,
            }),
        };
        Self {
            id: self.id.clone(),
            body,
        }
    }
}

/// One-step model `x' = A x + B u`, expressed in the agent's heading frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLinearModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub delta: f64,
    /// 2 x N selector of the planar position rows.
    pub pos_selector: DMatrix<f64>,
    pub v_tilde: f64,
    /// Rotation angle of the local frame with respect to the world frame.
    pub frame: f64,
    /// World position of the local frame origin.
    pub origin: Point,
    /// Initial state in local coordinates.
    pub initial: DVector<f64>,
}

impl DiscreteLinearModel {
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn action_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    pub fn to_world(&self, local_position: &Point) -> Point {
        Rotation2::new(self.frame) * local_position + self.origin
    }
}

fn check_step(delta: f64, v_floor: f64) -> Result<()> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::invalid(format!("step size {delta} must be positive")));
    }
    if !(v_floor.is_finite() && v_floor > 0.0) {
        return Err(Error::invalid(format!("speed floor {v_floor} must be positive")));
    }
    Ok(())
}

fn position_selector(n: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(2, n);
    s[(0, 0)] = 1.0;
    s[(1, 1)] = 1.0;
    s
}

pub fn linearize_vehicle(state: &VehicleState, delta: f64, v_floor: f64) -> Result<DiscreteLinearModel> {
    state.validate()?;
    check_step(delta, v_floor)?;
    let vt = state.v.max(v_floor);

    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(4, 4, &[
        1.0, 0.0, delta, 0.0,
        0.0, 1.0, 0.0, vt * delta,
        0.0, 0.0, 1.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
    ]);
    let half = delta * delta / 2.0;
    #[rustfmt::skip]
    let b = DMatrix::from_row_slice(4, 2, &[
        half, 0.0,
        0.0, half,
        delta, 0.0,
        0.0, delta / vt,
    ]);

    Ok(DiscreteLinearModel {
        a,
        b,
        delta,
        pos_selector: position_selector(4),
        v_tilde: vt,
        frame: normalize_angle(state.phi),
        origin: Point::new(state.p, state.q),
        initial: DVector::from_vec(vec![0.0, 0.0, state.v, 0.0]),
    })
}

pub fn linearize_pedestrian(state: &PedestrianState, delta: f64, v_floor: f64) -> Result<DiscreteLinearModel> {
    state.validate()?;
    check_step(delta, v_floor)?;
    let vt = state.speed_estimate.max(v_floor);

    #[rustfmt::skip]
    let b = DMatrix::from_row_slice(3, 2, &[
        delta, 0.0,
        0.0, vt * delta * delta / 2.0,
        0.0, delta,
    ]);

    Ok(DiscreteLinearModel {
        a: DMatrix::identity(3, 3),
        b,
        delta,
        pos_selector: position_selector(3),
        v_tilde: vt,
        frame: normalize_angle(state.phi),
        origin: Point::new(state.p, state.q),
        initial: DVector::zeros(3),
    })
}

/// T-step propagation `x_T = A_hat x_0 + B_hat u_bar`.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedModel {
    pub a_hat: DMatrix<f64>,
    pub b_hat: DMatrix<f64>,
    pub steps: usize,
    pub base: DiscreteLinearModel,
}

pub fn stack_model(model: &DiscreteLinearModel, steps: usize) -> Result<StackedModel> {
    if steps == 0 {
        return Err(Error::invalid("horizon must be at least one step"));
    }
    let n = model.state_dim();
    let m = model.action_dim();
    let mut b_hat = DMatrix::zeros(n, steps * m);
    // Fill from the right: the last block is B, each block to its left is A times its neighbour.
    let mut block = model.b.clone();
    for k in (0..steps).rev() {
        b_hat.view_mut((0, k * m), (n, m)).copy_from(&block);
        block = &model.a * block;
    }
    let mut a_hat = DMatrix::identity(n, n);
    for _ in 0..steps {
        a_hat = &model.a * a_hat;
    }
    Ok(StackedModel {
        a_hat,
        b_hat,
        steps,
        base: model.clone(),
    })
}

impl StackedModel {
    pub fn action_len(&self) -> usize {
        self.steps * self.base.action_dim()
    }

    fn rotation(&self) -> DMatrix<f64> {
        let r = Rotation2::new(self.base.frame);
        let m = r.matrix();
        DMatrix::from_row_slice(2, 2, &[m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]])
    }

    /// World-frame map from the stacked action vector to the terminal position
    /// (2 x T*M): rotation * pos_selector * B_hat.
    pub fn world_input_map(&self) -> DMatrix<f64> {
        self.rotation() * &self.base.pos_selector * &self.b_hat
    }

    /// Terminal world position when every action is zero.
    pub fn zero_input_position(&self) -> Point {
        let x = &self.a_hat * &self.base.initial;
        let local = &self.base.pos_selector * x;
        self.base.to_world(&Point::new(local[0], local[1]))
    }
}

/// World-frame terminal position for a local initial state and a stacked
/// action sequence.
pub fn world_displacement(stacked: &StackedModel, state: &DVector<f64>, actions: &DVector<f64>) -> Result<Point> {
    if state.len() != stacked.base.state_dim() {
        return Err(Error::invalid(format!(
            "state has {} entries, model expects {}",
            state.len(),
            stacked.base.state_dim()
        )));
    }
    if actions.len() != stacked.action_len() {
        return Err(Error::invalid(format!(
            "action sequence has {} entries, expected {}",
            actions.len(),
            stacked.action_len()
        )));
    }
    let x = &stacked.a_hat * state + &stacked.b_hat * actions;
    let local = &stacked.base.pos_selector * x;
    Ok(stacked.base.to_world(&Point::new(local[0], local[1])))
}
