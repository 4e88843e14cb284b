//! Discrete robot description: joints, quantized kinematic states and actions.
//!
//! Positions live on a grid of integer multiples of `delta_q` anchored at
//! angle 0 and clipped to the joint limits. Velocities use the same scheme
//! with resolution `delta_v = delta_q / delta_t`. Two states are equal iff all
//! their grid indices are equal.

use std::fmt;

use num_bigint::BigUint;
use num_traits::Pow;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when checking that grid points fit the joint limits.
pub const GRID_FIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub name: String,
    /// Radians.
    pub q_min: f64,
    pub q_max: f64,
    pub delta_q: f64,
    /// Radians per second.
    pub v_min: f64,
    pub v_max: f64,
    pub mass: f64,
    pub length: f64,
    /// Newton-meters, strictly increasing, contains 0.
    pub torques: Vec<f64>,
}

impl JointSpec {
    /// Builds a joint from degree-valued limits. This is the single place
    /// where degrees are converted to radians.
    #[allow(clippy::too_many_arguments)]
    pub fn from_degrees(
        name: impl Into<String>,
        q_min_deg: f64,
        q_max_deg: f64,
        delta_q_deg: f64,
        v_min_deg_s: f64,
        v_max_deg_s: f64,
        mass: f64,
        length: f64,
        torques: Vec<f64>,
    ) -> Result<Self> {
        let joint = JointSpec {
            name: name.into(),
            q_min: q_min_deg.to_radians(),
            q_max: q_max_deg.to_radians(),
            delta_q: delta_q_deg.to_radians(),
            v_min: v_min_deg_s.to_radians(),
            v_max: v_max_deg_s.to_radians(),
            mass,
            length,
            torques,
        };
        // the grid-fit check is done on the degree values so that the
        // conversion rounding does not leak into it
        check_grid_fit(&joint.name, q_max_deg - q_min_deg, delta_q_deg)?;
        joint.validate()?;
        Ok(joint)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidSpec(format!("joint {:?}: {msg}", self.name)));
        let finite = [
            self.q_min,
            self.q_max,
            self.delta_q,
            self.v_min,
            self.v_max,
            self.mass,
            self.length,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return bad("non-finite parameter");
        }
        if self.q_min >= self.q_max {
            return bad("q_min must be below q_max");
        }
        if self.v_min >= self.v_max {
            return bad("v_min must be below v_max");
        }
        if self.delta_q <= 0.0 {
            return bad("delta_q must be positive");
        }
        if self.mass <= 0.0 || self.length <= 0.0 {
            return bad("mass and length must be positive");
        }
        if self.torques.is_empty() {
            return bad("torque list is empty");
        }
        if self.torques.iter().any(|u| !u.is_finite()) {
            return bad("non-finite torque");
        }
        if self.torques.windows(2).any(|w| w[0] >= w[1]) {
            return bad("torques must be strictly increasing");
        }
        if !self.torques.contains(&0.0) {
            return bad("torque list must contain the null torque 0");
        }
        check_grid_fit(&self.name, self.q_max - self.q_min, self.delta_q)
    }

    /// Inclusive range of position grid indices inside the joint limits.
    pub fn pos_range(&self) -> (i64, i64) {
        index_range(self.q_min, self.q_max, self.delta_q)
    }

    pub fn null_torque_index(&self) -> usize {
        self.torques
            .iter()
            .position(|&u| u == 0.0)
            .expect("validated joint has a null torque")
    }

    /// Number of grid cells between the joint limits, `(q_max - q_min) / delta_q`.
    pub fn grid_span(&self) -> i64 {
        ((self.q_max - self.q_min) / self.delta_q).round() as i64
    }
}

fn check_grid_fit(name: &str, span: f64, delta: f64) -> Result<()> {
    let cells = span / delta;
    if (cells - cells.round()).abs() > GRID_FIT_TOLERANCE {
        return Err(Error::InvalidSpec(format!(
            "joint {name:?}: range is {cells} resolution steps, not an integer"
        )));
    }
    Ok(())
}

fn index_range(lo: f64, hi: f64, step: f64) -> (i64, i64) {
    let first = (lo / step - GRID_FIT_TOLERANCE).ceil() as i64;
    let last = (hi / step + GRID_FIT_TOLERANCE).floor() as i64;
    (first, last)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotSpec {
    pub joints: Vec<JointSpec>,
    /// Seconds.
    pub delta_t: f64,
    /// Meters per second squared.
    pub gravity: f64,
}

pub const DEFAULT_GRAVITY: f64 = 9.81;

impl RobotSpec {
    pub fn new(joints: Vec<JointSpec>, delta_t: f64, gravity: f64) -> Result<Self> {
        let robot = RobotSpec {
            joints,
            delta_t,
            gravity,
        };
        robot.validate()?;
        Ok(robot)
    }

    pub fn validate(&self) -> Result<()> {
        if self.joints.is_empty() {
            return Err(Error::InvalidSpec("robot needs at least one joint".into()));
        }
        if !(self.delta_t.is_finite() && self.delta_t > 0.0) {
            return Err(Error::InvalidSpec("delta_t must be positive".into()));
        }
        if !(self.gravity.is_finite() && self.gravity >= 0.0) {
            return Err(Error::InvalidSpec("gravity must be finite and non-negative".into()));
        }
        for joint in &self.joints {
            joint.validate()?;
        }
        Ok(())
    }

    pub fn n_joints(&self) -> usize {
        self.joints.len()
    }

    /// Velocity resolution of joint `i`: one position cell per time step.
    pub fn delta_v(&self, i: usize) -> f64 {
        self.joints[i].delta_q / self.delta_t
    }

    pub fn vel_range(&self, i: usize) -> (i64, i64) {
        let j = &self.joints[i];
        index_range(j.v_min, j.v_max, self.delta_v(i))
    }

    pub fn quantize(&self, state: &ContinuousState) -> Result<QuantizedState> {
        let n = self.n_joints();
        if state.q.len() != n || state.v.len() != n {
            return Err(Error::Domain(format!(
                "continuous state has {}/{} entries, robot has {n} joints",
                state.q.len(),
                state.v.len()
            )));
        }
        let mut pos = Vec::with_capacity(n);
        let mut vel = Vec::with_capacity(n);
        for i in 0..n {
            let (q, v) = (state.q[i], state.v[i]);
            if !(q.is_finite() && v.is_finite()) {
                return Err(Error::NumericalOverflow(format!("joint {i} state ({q}, {v})")));
            }
            let p = round_index(q / self.joints[i].delta_q)?;
            let w = round_index(v / self.delta_v(i))?;
            pos.push(p);
            vel.push(w);
        }
        let s = QuantizedState { pos, vel };
        self.check_state(&s)?;
        Ok(s)
    }

    pub fn representative(&self, state: &QuantizedState) -> ContinuousState {
        ContinuousState {
            q: state
                .pos
                .iter()
                .zip(&self.joints)
                .map(|(&p, j)| p as f64 * j.delta_q)
                .collect(),
            v: state
                .vel
                .iter()
                .enumerate()
                .map(|(i, &w)| w as f64 * self.delta_v(i))
                .collect(),
        }
    }

    /// Checks dimension and limit invariants of a grid state.
    pub fn check_state(&self, s: &QuantizedState) -> Result<()> {
        let n = self.n_joints();
        if s.pos.len() != n || s.vel.len() != n {
            return Err(Error::Domain(format!(
                "state {s} has wrong dimension for a {n}-joint robot"
            )));
        }
        for i in 0..n {
            let (plo, phi) = self.joints[i].pos_range();
            let (vlo, vhi) = self.vel_range(i);
            if s.pos[i] < plo || s.pos[i] > phi {
                return Err(Error::OutOfRange(format!(
                    "joint {i} position index {} outside [{plo}, {phi}]",
                    s.pos[i]
                )));
            }
            if s.vel[i] < vlo || s.vel[i] > vhi {
                return Err(Error::OutOfRange(format!(
                    "joint {i} velocity index {} outside [{vlo}, {vhi}]",
                    s.vel[i]
                )));
            }
        }
        Ok(())
    }

    pub fn check_action(&self, a: &Action) -> Result<()> {
        if a.torque_idx.len() != self.n_joints() {
            return Err(Error::Domain(format!(
                "action has {} torque indices, robot has {} joints",
                a.torque_idx.len(),
                self.n_joints()
            )));
        }
        for (i, (&k, j)) in a.torque_idx.iter().zip(&self.joints).enumerate() {
            if k >= j.torques.len() {
                return Err(Error::Domain(format!(
                    "joint {i} torque index {k} out of range (have {})",
                    j.torques.len()
                )));
            }
        }
        Ok(())
    }

    /// `|S|`: product over joints of position count times velocity count.
    pub fn state_space_size(&self) -> BigUint {
        (0..self.n_joints())
            .map(|i| {
                let (plo, phi) = self.joints[i].pos_range();
                let (vlo, vhi) = self.vel_range(i);
                BigUint::from(count(plo, phi)) * BigUint::from(count(vlo, vhi))
            })
            .product()
    }

    /// `|A|`: product of the per-joint torque-list lengths.
    pub fn action_space_size(&self) -> BigUint {
        self.joints.iter().map(|j| BigUint::from(j.torques.len())).product()
    }

    /// `|S| * |A|^m`.
    pub fn trajectory_upper_bound(&self, m: u32) -> BigUint {
        self.state_space_size() * Pow::pow(self.action_space_size(), m)
    }

    /// Every time-atomic action, torque indices in lexicographic order.
    pub fn all_actions(&self) -> Vec<Action> {
        let sizes: Vec<usize> = self.joints.iter().map(|j| j.torques.len()).collect();
        odometer(&sizes)
            .into_iter()
            .map(|torque_idx| Action { torque_idx })
            .collect()
    }

    pub fn null_action(&self) -> Action {
        Action {
            torque_idx: self.joints.iter().map(|j| j.null_torque_index()).collect(),
        }
    }

    /// Every valid grid state, positions before velocities, lexicographic.
    pub fn all_states(&self) -> impl Iterator<Item = QuantizedState> + '_ {
        let n = self.n_joints();
        let mut lows = Vec::with_capacity(2 * n);
        let mut sizes = Vec::with_capacity(2 * n);
        for i in 0..n {
            let (lo, hi) = self.joints[i].pos_range();
            lows.push(lo);
            sizes.push(count(lo, hi) as usize);
        }
        for i in 0..n {
            let (lo, hi) = self.vel_range(i);
            lows.push(lo);
            sizes.push(count(lo, hi) as usize);
        }
        odometer(&sizes).into_iter().map(move |idx| {
            let full: Vec<i64> = idx.iter().zip(&lows).map(|(&k, &lo)| lo + k as i64).collect();
            QuantizedState {
                pos: full[..n].to_vec(),
                vel: full[n..].to_vec(),
            }
        })
    }

    /// Joins two robots sharing one clock into one with both joint lists.
    pub fn concat(&self, other: &RobotSpec) -> Result<RobotSpec> {
        if self.delta_t != other.delta_t {
            return Err(Error::InvalidSpec("robots must share delta_t".into()));
        }
        let mut joints = self.joints.clone();
        joints.extend(other.joints.iter().cloned());
        RobotSpec::new(joints, self.delta_t, self.gravity)
    }

    /// Position of each joint of `s` in radians.
    pub fn configuration(&self, s: &QuantizedState) -> Vec<f64> {
        s.pos
            .iter()
            .zip(&self.joints)
            .map(|(&p, j)| p as f64 * j.delta_q)
            .collect()
    }
}

fn count(lo: i64, hi: i64) -> u64 {
    if hi < lo {
        0
    } else {
        (hi - lo + 1) as u64
    }
}

fn round_index(x: f64) -> Result<i64> {
    // f64::round is half away from zero
    let r = x.round();
    if r.abs() > (1i64 << 52) as f64 {
        return Err(Error::NumericalOverflow(format!("grid index {x} too large")));
    }
    Ok(r as i64)
}

/// All index vectors `v` with `v[i] < sizes[i]`, last position fastest.
pub(crate) fn odometer(sizes: &[usize]) -> Vec<Vec<usize>> {
    if sizes.contains(&0) {
        return Vec::new();
    }
    let total: usize = sizes.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut cur = vec![0usize; sizes.len()];
    loop {
        out.push(cur.clone());
        let mut k = sizes.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            cur[k] += 1;
            if cur[k] < sizes[k] {
                break;
            }
            cur[k] = 0;
        }
    }
}

/// Grid coordinates of a kinematic state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuantizedState {
    pub pos: Vec<i64>,
    pub vel: Vec<i64>,
}

impl QuantizedState {
    pub fn new(pos: Vec<i64>, vel: Vec<i64>) -> Self {
        QuantizedState { pos, vel }
    }

    pub fn origin(n: usize) -> Self {
        QuantizedState {
            pos: vec![0; n],
            vel: vec![0; n],
        }
    }

    pub fn n_joints(&self) -> usize {
        self.pos.len()
    }

    /// Parses `"p1,..,pn,v1,..,vn"`; spaces also separate values, so the
    /// `Display` form `"p1 p2,v1 v2"` reads back.
    pub fn parse(text: &str, n_joints: usize) -> Result<Self> {
        let values: Vec<i64> = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|e| Error::Parse(format!("state {text:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        if values.len() != 2 * n_joints {
            return Err(Error::Parse(format!(
                "state {text:?} needs {} comma-separated integers (positions then velocities)",
                2 * n_joints
            )));
        }
        Ok(QuantizedState {
            pos: values[..n_joints].to_vec(),
            vel: values[n_joints..].to_vec(),
        })
    }
}

impl fmt::Display for QuantizedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[i64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        write!(f, "{},{}", join(&self.pos), join(&self.vel))
    }
}

/// Continuous representative used between quantization events.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousState {
    pub q: Vec<f64>,
    pub v: Vec<f64>,
}

impl ContinuousState {
    pub fn zeros(n: usize) -> Self {
        ContinuousState {
            q: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.v).all(|x| x.is_finite())
    }
}

/// A torque vector held for one time step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Action {
    pub torque_idx: Vec<usize>,
}

impl Action {
    pub fn new(torque_idx: Vec<usize>) -> Self {
        Action { torque_idx }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionSequence {
    pub steps: Vec<Action>,
}

impl ActionSequence {
    pub fn new(steps: Vec<Action>) -> Self {
        ActionSequence { steps }
    }

    pub fn repeat(action: Action, times: usize) -> Self {
        ActionSequence {
            steps: vec![action; times],
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn duration(&self, delta_t: f64) -> f64 {
        self.steps.len() as f64 * delta_t
    }

    /// Run-length summary such as `2*3 4`, multi-joint vectors as `(0,4)`.
    pub fn summary(&self) -> String {
        let label = |a: &Action| {
            if a.torque_idx.len() == 1 {
                a.torque_idx[0].to_string()
            } else {
                let inner: Vec<String> = a.torque_idx.iter().map(|k| k.to_string()).collect();
                format!("({})", inner.join(","))
            }
        };
        let mut parts = Vec::new();
        let mut i = 0;
        while i < self.steps.len() {
            let mut j = i + 1;
            while j < self.steps.len() && self.steps[j] == self.steps[i] {
                j += 1;
            }
            let run = j - i;
            if run == 1 {
                parts.push(label(&self.steps[i]));
            } else {
                parts.push(format!("{}*{run}", label(&self.steps[i])));
            }
            i = j;
        }
        parts.join(" ")
    }
}

impl From<Vec<Action>> for ActionSequence {
    fn from(steps: Vec<Action>) -> Self {
        ActionSequence { steps }
    }
}

/// The Example-1 joint: a 1 m, 1 kg pendulum limited to ±135° with 2°
/// resolution, ±180°/s and five torque levels.
pub fn example_joint(name: &str) -> JointSpec {
    JointSpec::from_degrees(
        name,
        -135.0,
        135.0,
        2.0,
        -180.0,
        180.0,
        1.0,
        1.0,
        vec![-50.0, -25.0, 0.0, 25.0, 50.0],
    )
    .expect("example joint is valid")
}

/// Single-joint robot with the Example-1 joint and a 40 ms clock.
pub fn example_robot() -> RobotSpec {
    RobotSpec::new(vec![example_joint("j1")], 0.040, DEFAULT_GRAVITY).expect("valid")
}
