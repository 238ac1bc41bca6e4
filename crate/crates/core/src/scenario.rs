//! Scenario traces, per-trace statistics and parameter sweeps.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::kinematics::{normalize_angle, Agent, AgentBody, PedestrianState, VehicleState};
use crate::mprttc::{mprttc, EvalParams, MprttcResult, Snapshot};
use crate::parallel::par_map;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTrace {
    pub name: String,
    /// Informational only; durations come from timestamps.
    pub frame_rate: f64,
    pub frames: Vec<Snapshot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTrace {
    pub trace: ScenarioTrace,
    /// Unknown fields that were ignored.
    pub warnings: Vec<String>,
}

const AGENT_FIELDS: &[&str] = &["id", "kind", "profile", "p", "q", "v", "phi", "speed_estimate"];
const FRAME_FIELDS: &[&str] = &["t", "sv", "others"];
const TRACE_FIELDS: &[&str] = &["name", "frame_rate", "frames"];

fn warn_unknown(obj: &Map<String, Value>, known: &[&str], at: &str, warnings: &mut Vec<String>) {
    for key in obj.keys() {
        if !known.contains(&key.as_str()) {
            warnings.push(format!("{at}: unknown field `{key}` ignored"));
        }
    }
}

fn as_object<'a>(v: &'a Value, frame: Option<usize>, at: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| Error::parse(frame, at, "expected an object"))
}

fn number(obj: &Map<String, Value>, key: &str, frame: Option<usize>, at: &str) -> Result<f64> {
    let field = format!("{at}.{key}");
    let v = obj.get(key).ok_or_else(|| Error::parse(frame, &field, "missing"))?;
    let x = v.as_f64().ok_or_else(|| Error::parse(frame, &field, "expected a number"))?;
    if !x.is_finite() {
        return Err(Error::parse(frame, &field, "not finite"));
    }
    Ok(x)
}

fn optional_number(obj: &Map<String, Value>, key: &str, frame: Option<usize>, at: &str) -> Result<Option<f64>> {
    if obj.contains_key(key) {
        number(obj, key, frame, at).map(Some)
    } else {
        Ok(None)
    }
}

fn string(obj: &Map<String, Value>, key: &str, frame: Option<usize>, at: &str) -> Result<String> {
    let field = format!("{at}.{key}");
    obj.get(key)
        .ok_or_else(|| Error::parse(frame, &field, "missing"))?
        .as_str()
        .map(str::to_owned)
        .ok_or_else(|| Error::parse(frame, &field, "expected a string"))
}

fn parse_agent(v: &Value, frame: Option<usize>, at: &str, warnings: &mut Vec<String>) -> Result<Agent> {
    let obj = as_object(v, frame, at)?;
    warn_unknown(obj, AGENT_FIELDS, at, warnings);
    let id = string(obj, "id", frame, at)?;
    if id.is_empty() {
        return Err(Error::parse(frame, format!("{at}.id"), "empty id"));
    }
    let kind = string(obj, "kind", frame, at)?;
    let p = number(obj, "p", frame, at)?;
    let q = number(obj, "q", frame, at)?;
    let phi = number(obj, "phi", frame, at)?;
    match kind.as_str() {
        "vehicle" => {
            let profile = string(obj, "profile", frame, at)?;
            let v = number(obj, "v", frame, at)?;
            let state = VehicleState::new(p, q, v, phi).map_err(|e| Error::parse(frame, format!("{at}.v"), e.to_string()))?;
            Ok(Agent::vehicle(id, profile, state))
        }
        "pedestrian" => {
            let speed = optional_number(obj, "speed_estimate", frame, at)?.unwrap_or(0.0);
            let state = PedestrianState::new(p, q, phi, speed)
                .map_err(|e| Error::parse(frame, format!("{at}.speed_estimate"), e.to_string()))?;
            Ok(Agent::pedestrian(id, state))
        }
        other => Err(Error::parse(
            frame,
            format!("{at}.kind"),
            format!("unknown kind `{other}` (expected `vehicle` or `pedestrian`)"),
        )),
    }
}

fn parse_frame(v: &Value, frame: Option<usize>, at: &str, warnings: &mut Vec<String>) -> Result<Snapshot> {
    let obj = as_object(v, frame, at)?;
    warn_unknown(obj, FRAME_FIELDS, at, warnings);
    let t = optional_number(obj, "t", frame, at)?;
    let t = match (t, frame) {
        (Some(t), _) => t,
        (None, None) => 0.0,
        (None, Some(_)) => return Err(Error::parse(frame, format!("{at}.t"), "missing")),
    };
    let sv = parse_agent(
        obj.get("sv").ok_or_else(|| Error::parse(frame, format!("{at}.sv"), "missing"))?,
        frame,
        &format!("{at}.sv"),
        warnings,
    )?;
    let others = match obj.get("others") {
        None => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(k, a)| parse_agent(a, frame, &format!("{at}.others[{k}]"), warnings))
            .collect::<Result<_>>()?,
        Some(_) => return Err(Error::parse(frame, format!("{at}.others"), "expected an array")),
    };
    Snapshot::new(t, sv, others).map_err(|e| Error::parse(frame, format!("{at}.others"), e.to_string()))
}

fn parse_json(bytes: &[u8]) -> Result<Value> {
    serde_json::from_slice(bytes).map_err(|e| Error::parse(None, "document", e.to_string()))
}

pub fn parse_trace(bytes: &[u8]) -> Result<ParsedTrace> {
    let doc = parse_json(bytes)?;
    let obj = as_object(&doc, None, "document")?;
    let mut warnings = Vec::new();
    warn_unknown(obj, TRACE_FIELDS, "document", &mut warnings);

    let name = match obj.get("name") {
        None => String::new(),
        Some(v) => v.as_str().map(str::to_owned).ok_or_else(|| Error::parse(None, "name", "expected a string"))?,
    };
    let frame_rate = match obj.get("frame_rate") {
        None => 0.0,
        Some(_) => {
            let r = number(obj, "frame_rate", None, "document")?;
            if r < 0.0 {
                return Err(Error::parse(None, "frame_rate", "must be non-negative"));
            }
            r
        }
    };
    let frames_v = obj
        .get("frames")
        .ok_or_else(|| Error::parse(None, "frames", "missing"))?
        .as_array()
        .ok_or_else(|| Error::parse(None, "frames", "expected an array"))?;

    let mut frames: Vec<Snapshot> = Vec::with_capacity(frames_v.len());
    for (k, f) in frames_v.iter().enumerate() {
        let snap = parse_frame(f, Some(k), &format!("frames[{k}]"), &mut warnings)?;
        if let Some(prev) = frames.last() {
            if !(snap.timestamp > prev.timestamp) {
                return Err(Error::parse(
                    Some(k),
                    format!("frames[{k}].t"),
                    format!("timestamp {} does not increase (previous {})", snap.timestamp, prev.timestamp),
                ));
            }
        }
        frames.push(snap);
    }
    Ok(ParsedTrace {
        trace: ScenarioTrace { name, frame_rate, frames },
        warnings,
    })
}

/// Parses a single-frame document (`{ t?, sv, others }`).
pub fn parse_snapshot(bytes: &[u8]) -> Result<(Snapshot, Vec<String>)> {
    let doc = parse_json(bytes)?;
    let mut warnings = Vec::new();
    let snap = parse_frame(&doc, None, "snapshot", &mut warnings)?;
    Ok((snap, warnings))
}

pub fn agent_to_value(agent: &Agent) -> Value {
    match &agent.body {
        AgentBody::Vehicle { profile, state } => json!({
            "id": agent.id,
            "kind": "vehicle",
            "profile": profile,
            "p": state.p,
            "q": state.q,
            "v": state.v,
            "phi": state.phi,
        }),
        AgentBody::Pedestrian(state) => json!({
            "id": agent.id,
            "kind": "pedestrian",
            "p": state.p,
            "q": state.q,
            "phi": state.phi,
            "speed_estimate": state.speed_estimate,
        }),
    }
}

pub fn snapshot_to_value(snapshot: &Snapshot) -> Value {
    json!({
        "t": snapshot.timestamp,
        "sv": agent_to_value(&snapshot.sv),
        "others": snapshot.others.iter().map(agent_to_value).collect::<Vec<_>>(),
    })
}

pub fn serialize_trace(trace: &ScenarioTrace) -> String {
    let doc = json!({
        "name": trace.name,
        "frame_rate": trace.frame_rate,
        "frames": trace.frames.iter().map(snapshot_to_value).collect::<Vec<_>>(),
    });
    serde_json::to_string_pretty(&doc).expect("trace values are finite")
}

/// Evaluation parameters as echoed in reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamsEcho {
    pub radius: f64,
    pub delta: f64,
    pub horizon: usize,
    pub v_floor: f64,
    pub lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub momentum: bool,
    pub bnb_ms: f64,
    pub workers: usize,
    pub seed: u64,
    pub profiles: Vec<String>,
}

impl From<&EvalParams> for ParamsEcho {
    fn from(p: &EvalParams) -> Self {
        Self {
            radius: p.radius,
            delta: p.delta,
            horizon: p.horizon,
            v_floor: p.v_floor,
            lambda: p.solver.lambda,
            tol: p.solver.tol,
            max_iter: p.solver.max_iter,
            momentum: p.solver.momentum,
            bnb_ms: p.solver.bnb_time_limit.as_secs_f64() * 1e3,
            workers: p.workers,
            seed: p.seed,
            profiles: p.profiles.ids().map(str::to_owned).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameRecord {
    pub t: f64,
    pub tau: f64,
    pub tau_steps: usize,
    pub safe: bool,
    pub dominant: Option<String>,
    pub per_agent: BTreeMap<String, f64>,
    /// Frame duration used for the unsafe-time total (s).
    pub duration: f64,
    /// SV longitudinal acceleration estimate (m/s^2).
    pub sv_ax: f64,
    pub solver_issues: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub series: Vec<FrameRecord>,
    pub total_unsafe_time: f64,
    pub unsafe_frame_count: usize,
    /// `None` when no frame is unsafe.
    pub mean_ax_when_unsafe: Option<f64>,
    pub min_tau: f64,
    pub dominant_histogram: BTreeMap<String, usize>,
    pub params: ParamsEcho,
}

impl ScenarioReport {
    pub fn has_solver_issues(&self) -> bool {
        self.series.iter().any(|f| f.solver_issues > 0)
    }

    /// `t,tau,dominant,safe` rows with a header line.
    pub fn rows(&self) -> String {
        let mut out = String::from("t,tau,dominant,safe\n");
        for f in &self.series {
            out.push_str(&format!("{},{},{},{}\n", f.t, f.tau, f.dominant.as_deref().unwrap_or(""), f.safe));
        }
        out
    }
}

/// Frame durations: gap to the next timestamp, the last frame reusing the
/// preceding gap. A lone frame lasts one frame period, or one step when the
/// frame rate is unknown.
pub fn frame_durations(times: &[f64], frame_rate: f64, delta: f64) -> Vec<f64> {
    match times.len() {
        0 => Vec::new(),
        1 => vec![if frame_rate > 0.0 { 1.0 / frame_rate } else { delta }],
        n => (0..n).map(|k| if k + 1 < n { times[k + 1] - times[k] } else { times[k] - times[k - 1] }).collect(),
    }
}

/// Finite-difference derivative of `values` over `times`, central where
/// possible and one-sided at the ends.
pub fn finite_difference(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = times.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|k| {
            let (a, b) = if k == 0 {
                (0, 1)
            } else if k + 1 == n {
                (n - 2, n - 1)
            } else {
                (k - 1, k + 1)
            };
            (values[b] - values[a]) / (times[b] - times[a])
        })
        .collect()
}

pub fn evaluate_trace(trace: &ScenarioTrace, params: &EvalParams) -> Result<ScenarioReport> {
    params.validate()?;
    if trace.frames.is_empty() {
        return Err(Error::invalid("trace has no frames"));
    }
    let times: Vec<f64> = trace.frames.iter().map(|f| f.timestamp).collect();
    if let Some(k) = times.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(format!("timestamps do not increase at frame {}", k + 1)));
    }

    let results = par_map(params.workers, &trace.frames, |f| mprttc(f, params));
    let results: Vec<MprttcResult> = results.into_iter().collect::<Result<_>>()?;

    let durations = frame_durations(&times, trace.frame_rate, params.delta);
    let speeds: Vec<f64> = trace.frames.iter().map(|f| f.sv.speed()).collect();
    let ax = finite_difference(&times, &speeds);

    let mut series = Vec::with_capacity(results.len());
    let mut total_unsafe_time = 0.0;
    let mut unsafe_frame_count = 0;
    let mut ax_sum = 0.0;
    let mut min_tau = f64::INFINITY;
    let mut dominant_histogram = BTreeMap::new();
    for (k, r) in results.into_iter().enumerate() {
        if !r.safe {
            total_unsafe_time += durations[k];
            unsafe_frame_count += 1;
            ax_sum += ax[k];
            if let Some(d) = &r.dominant {
                *dominant_histogram.entry(d.clone()).or_insert(0) += 1;
            }
        }
        min_tau = min_tau.min(r.tau);
        series.push(FrameRecord {
            t: times[k],
            tau: r.tau,
            tau_steps: r.tau_steps,
            safe: r.safe,
            solver_issues: r.diagnostics.iter().filter(|d| d.is_issue()).count(),
            dominant: r.dominant,
            per_agent: r.per_agent,
            duration: durations[k],
            sv_ax: ax[k],
        });
    }

    Ok(ScenarioReport {
        name: trace.name.clone(),
        series,
        total_unsafe_time,
        unsafe_frame_count,
        mean_ax_when_unsafe: (unsafe_frame_count > 0).then(|| ax_sum / unsafe_frame_count as f64),
        min_tau,
        dominant_histogram,
        params: ParamsEcho::from(params),
    })
}

pub const DEFAULT_SWEEP_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepVariable {
    /// `sv.<field>`, `others.<id>.<field>` or `others[<index>].<field>`.
    pub path: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: Snapshot,
    pub variables: Vec<SweepVariable>,
    pub params: EvalParams,
    pub cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub values: Vec<f64>,
    pub result: MprttcResult,
}

/// Sweep results in row-major order (last variable varies fastest).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub variables: Vec<String>,
    pub shape: Vec<usize>,
    pub points: Vec<SweepPoint>,
}

impl SweepGrid {
    pub fn has_solver_issues(&self) -> bool {
        self.points.iter().any(|p| p.result.has_solver_issues())
    }

    pub fn rows(&self) -> String {
        let mut out = String::new();
        for v in &self.variables {
            out.push_str(v);
            out.push(',');
        }
        out.push_str("tau,dominant,safe\n");
        for p in &self.points {
            for v in &p.values {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!(
                "{},{},{}\n",
                p.result.tau,
                p.result.dominant.as_deref().unwrap_or(""),
                p.result.safe
            ));
        }
        out
    }

    /// Point at a multi-index into the grid.
    pub fn at(&self, index: &[usize]) -> Option<&SweepPoint> {
        if index.len() != self.shape.len() || index.iter().zip(&self.shape).any(|(i, n)| i >= n) {
            return None;
        }
        let flat = index.iter().zip(&self.shape).fold(0, |acc, (i, n)| acc * n + i);
        self.points.get(flat)
    }
}

fn set_field(agent: &mut Agent, field: &str, value: f64, path: &str) -> Result<()> {
    let bad = |msg: &str| Error::invalid(format!("sweep path `{path}`: {msg}"));
    match &mut agent.body {
        AgentBody::Vehicle { state, .. } => {
            let mut s = *state;
            match field {
                "p" => s.p = value,
                "q" => s.q = value,
                "v" => s.v = value,
                "phi" => s.phi = value,
                _ => return Err(bad("vehicles have fields p, q, v, phi")),
            }
            *state = VehicleState::new(s.p, s.q, s.v, s.phi).map_err(|e| bad(&e.to_string()))?;
        }
        AgentBody::Pedestrian(state) => {
            let mut s = *state;
            match field {
                "p" => s.p = value,
                "q" => s.q = value,
                "phi" => s.phi = normalize_angle(value),
                "speed_estimate" => s.speed_estimate = value,
                _ => return Err(bad("pedestrians have fields p, q, phi, speed_estimate")),
            }
            *state = PedestrianState::new(s.p, s.q, s.phi, s.speed_estimate).map_err(|e| bad(&e.to_string()))?;
        }
    }
    Ok(())
}

/// Sets the state field addressed by `path` to `value`.
pub fn apply_path(snapshot: &mut Snapshot, path: &str, value: f64) -> Result<()> {
    let unknown = || Error::invalid(format!("sweep path `{path}` does not address an agent field"));
    if let Some(field) = path.strip_prefix("sv.") {
        return set_field(&mut snapshot.sv, field, value, path);
    }
    if let Some(rest) = path.strip_prefix("others[") {
        let (index, field) = rest.split_once("].").ok_or_else(unknown)?;
        let index: usize = index.parse().map_err(|_| unknown())?;
        let agent = snapshot.others.get_mut(index).ok_or_else(unknown)?;
        return set_field(agent, field, value, path);
    }
    if let Some(rest) = path.strip_prefix("others.") {
        let (id, field) = rest.rsplit_once('.').ok_or_else(unknown)?;
        let agent = snapshot.others.iter_mut().find(|a| a.id == id).ok_or_else(unknown)?;
        return set_field(agent, field, value, path);
    }
    Err(unknown())
}

pub fn sweep(spec: &SweepSpec) -> Result<SweepGrid> {
    spec.params.validate()?;
    let shape: Vec<usize> = spec.variables.iter().map(|v| v.values.len()).collect();
    if let Some(v) = spec.variables.iter().find(|v| v.values.is_empty()) {
        return Err(Error::invalid(format!("sweep variable `{}` has an empty grid", v.path)));
    }
    let required = shape.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n)).unwrap_or(usize::MAX);
    if required > spec.cap {
        return Err(Error::SweepCap {
            required,
            cap: spec.cap,
        });
    }

    let mut grid = Vec::with_capacity(required);
    for flat in 0..required {
        let mut rem = flat;
        let mut values = vec![0.0; shape.len()];
        for d in (0..shape.len()).rev() {
            values[d] = spec.variables[d].values[rem % shape[d]];
            rem /= shape[d];
        }
        let mut snap = spec.base.clone();
        for (var, &value) in spec.variables.iter().zip(&values) {
            apply_path(&mut snap, &var.path, value)?;
        }
        grid.push((values, snap));
    }

    let results = par_map(spec.params.workers, &grid, |(_, snap)| mprttc(snap, &spec.params));
    let mut points = Vec::with_capacity(required);
    for ((values, _), result) in grid.into_iter().zip(results) {
        points.push(SweepPoint { values, result: result? });
    }
    Ok(SweepGrid {
        variables: spec.variables.iter().map(|v| v.path.clone()).collect(),
        shape,
        points,
    })
}

/// Parses a sweep document: `{ base: FRAME, variables: [ { path, values } |
/// { path, start, stop, count } ], cap? }`.
pub fn parse_sweep(bytes: &[u8], params: EvalParams) -> Result<(SweepSpec, Vec<String>)> {
    let doc = parse_json(bytes)?;
    let obj = as_object(&doc, None, "document")?;
    let mut warnings = Vec::new();
    warn_unknown(obj, &["base", "variables", "cap"], "document", &mut warnings);
    let base = parse_frame(
        obj.get("base").ok_or_else(|| Error::parse(None, "base", "missing"))?,
        None,
        "base",
        &mut warnings,
    )?;
    let vars_v = obj
        .get("variables")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::parse(None, "variables", "expected an array"))?;
    let mut variables = Vec::with_capacity(vars_v.len());
    for (k, v) in vars_v.iter().enumerate() {
        let at = format!("variables[{k}]");
        let o = as_object(v, None, &at)?;
        warn_unknown(o, &["path", "values", "start", "stop", "count"], &at, &mut warnings);
        let path = string(o, "path", None, &at)?;
        let values = if let Some(list) = o.get("values") {
            list.as_array()
                .ok_or_else(|| Error::parse(None, format!("{at}.values"), "expected an array"))?
                .iter()
                .map(|x| {
                    x.as_f64()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| Error::parse(None, format!("{at}.values"), "expected finite numbers"))
                })
                .collect::<Result<Vec<f64>>>()?
        } else {
            let start = number(o, "start", None, &at)?;
            let stop = number(o, "stop", None, &at)?;
            let count = number(o, "count", None, &at)?;
            if count < 1.0 || count.fract() != 0.0 {
                return Err(Error::parse(None, format!("{at}.count"), "must be a positive integer"));
            }
            linspace(start, stop, count as usize)
        };
        variables.push(SweepVariable { path, values });
    }
    let cap = match obj.get("cap") {
        None => DEFAULT_SWEEP_CAP,
        Some(v) => v.as_u64().ok_or_else(|| Error::parse(None, "cap", "expected a non-negative integer"))? as usize,
    };
    Ok((
        SweepSpec {
            base,
            variables,
            params,
            cap,
        },
        warnings,
    ))
}

pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        n => (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Snapshot templates for the sweep studies.
pub mod templates {
    use super::*;
    use crate::action_space::DEFAULT_PROFILE;

    fn vehicle(id: &str, p: f64, q: f64, v: f64) -> Agent {
        Agent::vehicle(id, DEFAULT_PROFILE, VehicleState::new(p, q, v, 0.0).expect("template state is valid"))
    }

    /// SV at the origin following a lead vehicle `gap` metres ahead in the
    /// same lane, both heading along +x.
    pub fn lead_following(gap: f64, sv_speed: f64, lead_speed: f64) -> Snapshot {
        Snapshot::new(0.0, vehicle("sv", 0.0, 0.0, sv_speed), vec![vehicle("lead", gap, 0.0, lead_speed)])
            .expect("template ids are distinct")
    }

    /// SV surrounded by a lead, a follower and two side vehicles, all at
    /// `pov_speed` along +x; the SV is displaced by `(dx, dy)` from the
    /// centre of the box.
    pub fn boxed_in(dx: f64, dy: f64, sv_speed: f64, pov_speed: f64) -> Snapshot {
        Snapshot::new(
            0.0,
            vehicle("sv", dx, dy, sv_speed),
            vec![
                vehicle("lead", 20.0, 0.0, pov_speed),
                vehicle("rear", -20.0, 0.0, pov_speed),
                vehicle("left", 0.0, 3.5, pov_speed),
                vehicle("right", 0.0, -3.5, pov_speed),
            ],
        )
        .expect("template ids are distinct")
    }

    /// Gap x SV-speed grid behind a lead at 20 m/s.
    pub fn lead_following_sweep(params: EvalParams) -> SweepSpec {
        SweepSpec {
            base: lead_following(20.0, 20.0, 20.0),
            variables: vec![
                SweepVariable {
                    path: "others.lead.p".into(),
                    values: linspace(5.0, 40.0, 8),
                },
                SweepVariable {
                    path: "sv.v".into(),
                    values: linspace(10.0, 40.0, 7),
                },
            ],
            params,
            cap: DEFAULT_SWEEP_CAP,
        }
    }

    /// Position-offset grid with the SV matching the box's speed and heading.
    pub fn boxed_in_sweep(params: EvalParams) -> SweepSpec {
        SweepSpec {
            base: boxed_in(0.0, 0.0, 25.0, 25.0),
            variables: vec![
                SweepVariable {
                    path: "sv.p".into(),
                    values: linspace(-4.0, 4.0, 9),
                },
                SweepVariable {
                    path: "sv.q".into(),
                    values: linspace(-1.0, 1.0, 5),
                },
            ],
            params,
            cap: DEFAULT_SWEEP_CAP,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn durations_and_differences() {
        assert_eq!(frame_durations(&[0.0, 0.1, 0.3], 10.0, 0.1), vec![0.1, 0.19999999999999998, 0.19999999999999998]);
        assert_eq!(frame_durations(&[5.0], 20.0, 0.1), vec![0.05]);
        assert_eq!(frame_durations(&[5.0], 0.0, 0.1), vec![0.1]);
        let d = finite_difference(&[0.0, 1.0, 2.0], &[0.0, 1.0, 4.0]);
        assert_eq!(d, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn paths_address_fields() {
        let mut s = templates::boxed_in(0.0, 0.0, 10.0, 10.0);
        apply_path(&mut s, "sv.v", 12.0).unwrap();
        apply_path(&mut s, "others.lead.p", 30.0).unwrap();
        apply_path(&mut s, "others[1].q", 0.5).unwrap();
        assert_eq!(s.sv.speed(), 12.0);
        assert_eq!(s.others[0].position().x, 30.0);
        assert_eq!(s.others[1].position().y, 0.5);
        assert!(apply_path(&mut s, "others.nobody.p", 1.0).is_err());
        assert!(apply_path(&mut s, "sv.speed_estimate", 1.0).is_err());
        assert!(apply_path(&mut s, "sv.v", -1.0).is_err());
        assert!(apply_path(&mut s, "others[9].p", 1.0).is_err());
    }

    #[test]
    fn grid_indexing_is_row_major() {
        let grid = SweepGrid {
            variables: vec!["a".into(), "b".into()],
            shape: vec![2, 3],
            points: Vec::new(),
        };
        assert!(grid.at(&[1, 3]).is_none());
        assert!(grid.at(&[0]).is_none());
    }
}
