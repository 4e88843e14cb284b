//! Trajectories over a transition table: exhaustive enumeration, exact walk
//! counting and greedy tracking of a desired joint trajectory.

use std::io::Read;

use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::act_sequence;
use crate::error::{Error, Result};
use crate::model::{ActionSequence, QuantizedState, RobotSpec};
use crate::transitions::TransitionTable;

pub const DEFAULT_MAX_TRAJECTORIES: u64 = 10_000_000;

/// Offsets within this many resolution units of 1 count as a full step.
const OFFSET_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    /// `(state, t)` with `t` the elapsed time in δt steps.
    pub waypoints: Vec<(QuantizedState, u64)>,
    /// Transition indices linking consecutive waypoints.
    pub edges: Vec<usize>,
}

/// Number of `n_steps`-hop walks starting at each state, aligned with
/// `table.states()`.
pub fn count_trajectories(table: &TransitionTable, n_steps: usize) -> Vec<BigUint> {
    let n = table.states().len();
    let mut counts = vec![BigUint::from(1u32); n];
    for _ in 0..n_steps {
        counts = (0..n)
            .into_par_iter()
            .map(|i| {
                table
                    .outgoing(i)
                    .iter()
                    .fold(BigUint::zero(), |acc, &k| acc + &counts[table.target_index(k)])
            })
            .collect();
    }
    counts
}

/// Number of walks from each state whose transitions last exactly
/// `n_steps` time steps in total. Transitions leaving a state never extend
/// one another, so distinct walks use distinct torque sequences and the sum
/// is at most `|S|·|A|^n_steps`.
pub fn count_trajectories_by_duration(table: &TransitionTable, n_steps: usize) -> Vec<BigUint> {
    let n = table.states().len();
    // by_time[t][i]: walks from state i lasting exactly t steps
    let mut by_time: Vec<Vec<BigUint>> = vec![vec![BigUint::from(1u32); n]];
    for t in 1..=n_steps {
        let layer = (0..n)
            .into_par_iter()
            .map(|i| {
                table.outgoing(i).iter().fold(BigUint::zero(), |acc, &k| {
                    let len = table.transitions()[k].steps();
                    if len > t {
                        acc
                    } else {
                        acc + &by_time[t - len][table.target_index(k)]
                    }
                })
            })
            .collect();
        by_time.push(layer);
    }
    by_time.pop().expect("layer 0")
}

/// Lazily yields every walk of exactly `n_steps` hops from each start, in
/// start order and then lexicographically by transition index.
pub fn enumerate_trajectories<'a>(
    table: &'a TransitionTable,
    starts: &[QuantizedState],
    n_steps: usize,
    max_trajectories: u64,
) -> Result<Trajectories<'a>> {
    let starts = starts
        .iter()
        .map(|s| table.state_index(s).ok_or_else(|| Error::UnknownState(s.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let counts = count_trajectories(table, n_steps);
    let total: BigUint = starts.iter().map(|&i| &counts[i]).sum();
    if total > BigUint::from(max_trajectories) {
        return Err(Error::BudgetExceeded(format!(
            "{total} trajectories exceed the limit of {max_trajectories}"
        )));
    }
    Ok(Trajectories {
        table,
        starts,
        next_start: 0,
        n_steps,
        active: None,
        edges: Vec::new(),
        cursors: Vec::new(),
    })
}

pub struct Trajectories<'a> {
    table: &'a TransitionTable,
    starts: Vec<usize>,
    next_start: usize,
    n_steps: usize,
    active: Option<usize>,
    edges: Vec<usize>,
    cursors: Vec<usize>,
}

impl Trajectories<'_> {
    fn build(&self, start: usize) -> Trajectory {
        let states = self.table.states();
        let mut waypoints = vec![(states[start].clone(), 0)];
        let mut t = 0u64;
        for &k in &self.edges {
            let tr = &self.table.transitions()[k];
            t += tr.steps() as u64;
            waypoints.push((tr.to.clone(), t));
        }
        Trajectory {
            waypoints,
            edges: self.edges.clone(),
        }
    }
}

impl Iterator for Trajectories<'_> {
    type Item = Trajectory;

    fn next(&mut self) -> Option<Trajectory> {
        loop {
            let start = match self.active {
                Some(s) => s,
                None => {
                    let s = *self.starts.get(self.next_start)?;
                    self.next_start += 1;
                    if self.n_steps == 0 {
                        return Some(self.build(s));
                    }
                    self.active = Some(s);
                    self.cursors = vec![0];
                    self.edges.clear();
                    s
                }
            };
            let depth = self.edges.len();
            if depth == self.n_steps {
                let out = self.build(start);
                self.edges.pop();
                self.cursors.pop();
                return Some(out);
            }
            let node = match self.edges.last() {
                Some(&k) => self.table.target_index(k),
                None => start,
            };
            let out = self.table.outgoing(node);
            let c = self.cursors[depth];
            if c < out.len() {
                self.cursors[depth] += 1;
                self.edges.push(out[c]);
                self.cursors.push(0);
            } else {
                self.cursors.pop();
                if self.edges.pop().is_none() {
                    self.active = None;
                }
            }
        }
    }
}

/// Target configurations (radians) sampled every δt, starting at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DesiredTrajectory {
    pub waypoints: Vec<(Vec<f64>, f64)>,
}

impl DesiredTrajectory {
    pub fn new(waypoints: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let first = waypoints
            .first()
            .ok_or_else(|| Error::Domain("desired trajectory is empty".into()))?;
        if first.1 != 0.0 {
            return Err(Error::Domain(format!(
                "desired trajectory starts at t = {}, not 0",
                first.1
            )));
        }
        let n = first.0.len();
        for w in &waypoints {
            if w.0.len() != n {
                return Err(Error::Domain("waypoints have different numbers of joints".into()));
            }
            if !w.1.is_finite() || w.0.iter().any(|q| !q.is_finite()) {
                return Err(Error::Domain("waypoint values must be finite".into()));
            }
        }
        if waypoints.windows(2).any(|p| p[1].1 <= p[0].1) {
            return Err(Error::Domain("waypoint times must be strictly increasing".into()));
        }
        Ok(DesiredTrajectory { waypoints })
    }

    /// Reads CSV with header `t_s,q1_deg[,q2_deg,...]`.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let header = reader.headers()?.clone();
        let expected: Vec<String> = std::iter::once("t_s".to_string())
            .chain((1..header.len()).map(|i| format!("q{i}_deg")))
            .collect();
        if header.len() < 2 || header.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::Parse(format!(
                "desired trajectory header must be t_s,q1_deg[,q2_deg,...], got {}",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut waypoints = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let values = record
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("row {}: {f:?} is not a number", line + 2)))
                })
                .collect::<Result<Vec<_>>>()?;
            let q = values[1..].iter().map(|d| d.to_radians()).collect();
            waypoints.push((q, values[0]));
        }
        Self::new(waypoints)
    }

    /// Ramp from `a` to `b` (radians) over `n_steps` steps of `delta_t`.
    pub fn ramp(a: &[f64], b: &[f64], n_steps: usize, delta_t: f64) -> Result<Self> {
        let waypoints = (0..=n_steps)
            .map(|k| {
                let f = if n_steps == 0 { 0.0 } else { k as f64 / n_steps as f64 };
                let q = a.iter().zip(b).map(|(x, y)| x + f * (y - x)).collect();
                (q, k as f64 * delta_t)
            })
            .collect();
        Self::new(waypoints)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub sequences: Vec<ActionSequence>,
    /// Table index of each chosen transition.
    pub transitions: Vec<usize>,
    /// Start state followed by the endpoint of each chosen transition.
    pub visited: Vec<QuantizedState>,
    pub final_state: QuantizedState,
    /// Final configuration minus the last target, radians per joint.
    pub miss: Vec<f64>,
    /// Some joint misses the last target by more than its δq.
    pub target_missed: bool,
}

#[derive(Serialize)]
struct PlanJson<'a> {
    sequences: &'a [ActionSequence],
    final_state: &'a QuantizedState,
    miss_deg: Vec<f64>,
}

impl PlanResult {
    pub fn to_json(&self) -> Result<String> {
        let doc = PlanJson {
            sequences: &self.sequences,
            final_state: &self.final_state,
            miss_deg: self.miss.iter().map(|m| m.to_degrees()).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }
}

/// `max_i |q_i(s) - target_i| / δq_i`.
pub fn chebyshev_offset(robot: &RobotSpec, s: &QuantizedState, target: &[f64]) -> f64 {
    robot
        .configuration(s)
        .iter()
        .zip(target)
        .zip(&robot.joints)
        .map(|((q, t), j)| (q - t).abs() / j.delta_q)
        .fold(0.0, f64::max)
}

/// Table state matching the configuration `q`: at rest if listed, else the
/// first listed state with that configuration.
pub fn start_state_for(table: &TransitionTable, robot: &RobotSpec, q: &[f64]) -> Result<QuantizedState> {
    let pos: Vec<i64> = q
        .iter()
        .zip(&robot.joints)
        .map(|(x, j)| (x / j.delta_q).round() as i64)
        .collect();
    let rest = QuantizedState::new(pos.clone(), vec![0; pos.len()]);
    if table.contains(&rest) {
        return Ok(rest);
    }
    table
        .states()
        .iter()
        .find(|s| s.pos == pos)
        .cloned()
        .ok_or_else(|| Error::UnknownState(format!("no table state at configuration {pos:?}")))
}

/// Greedy tracking of `desired`. Whenever the next target is at least one
/// δq away from the current configuration, the transition of duration
/// `pass_counter·δt` ending closest to it (Chebyshev, in δq units) is taken;
/// otherwise `pass_counter` grows by one.
pub fn plan_action_sequence(
    table: &TransitionTable,
    desired: &DesiredTrajectory,
    robot: &RobotSpec,
    start: Option<QuantizedState>,
) -> Result<PlanResult> {
    let n = robot.n_joints();
    if desired.waypoints[0].0.len() != n {
        return Err(Error::Domain(format!(
            "desired trajectory has {} joints, robot has {n}",
            desired.waypoints[0].0.len()
        )));
    }
    for (k, (_, t)) in desired.waypoints.iter().enumerate() {
        if (t - k as f64 * robot.delta_t).abs() > 1e-6 {
            return Err(Error::Domain(format!(
                "waypoint {k} is at t = {t} s, expected {} s (one waypoint per time step)",
                k as f64 * robot.delta_t
            )));
        }
    }
    let mut current = match start {
        Some(s) => {
            if !table.contains(&s) {
                return Err(Error::UnknownState(s.to_string()));
            }
            s
        }
        None => start_state_for(table, robot, &desired.waypoints[0].0)?,
    };

    let mut result = PlanResult {
        sequences: Vec::new(),
        transitions: Vec::new(),
        visited: vec![current.clone()],
        final_state: current.clone(),
        miss: Vec::new(),
        target_missed: false,
    };
    let mut pass_counter = 1usize;
    for (step, (target, _)) in desired.waypoints.iter().enumerate().skip(1) {
        if chebyshev_offset(robot, &current, target) < 1.0 - OFFSET_EPS {
            pass_counter += 1;
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for &k in table.outgoing_of(&current)? {
            let t = &table.transitions()[k];
            if t.steps() != pass_counter {
                continue;
            }
            let off = chebyshev_offset(robot, &t.to, target);
            if best.is_none_or(|(_, b)| off < b) {
                best = Some((k, off));
            }
        }
        let (k, _) = best.ok_or_else(|| Error::NoFeasibleTransition {
            step,
            reason: format!("no transition of {pass_counter} step(s) leaves {current}"),
        })?;
        let t = &table.transitions()[k];
        result.sequences.push(t.actions.clone());
        result.transitions.push(k);
        current = t.to.clone();
        result.visited.push(current.clone());
        pass_counter = 1;
    }

    let last = &desired.waypoints.last().expect("non-empty").0;
    let reached = robot.configuration(&current);
    result.miss = reached.iter().zip(last).map(|(q, t)| q - t).collect();
    result.target_missed = result
        .miss
        .iter()
        .zip(&robot.joints)
        .any(|(m, j)| m.abs() > j.delta_q * (1.0 + OFFSET_EPS));
    result.final_state = current;
    Ok(result)
}

/// Follows transition indices through the table from `start`, checking
/// that each one leaves the current state.
pub fn replay_by_graph(
    table: &TransitionTable,
    start: &QuantizedState,
    edges: &[usize],
) -> Result<Vec<QuantizedState>> {
    let mut cur = start.clone();
    let mut out = vec![cur.clone()];
    for &k in edges {
        let t = table
            .transitions()
            .get(k)
            .ok_or_else(|| Error::Domain(format!("transition {k} is not in the table")))?;
        if t.from != cur {
            return Err(Error::Domain(format!(
                "transition {k} starts at {}, not at {cur}",
                t.from
            )));
        }
        cur = t.to.clone();
        out.push(cur.clone());
    }
    Ok(out)
}

/// Re-simulates each sequence from the quantized state reached by the
/// previous one.
pub fn replay_by_physics(
    robot: &RobotSpec,
    start: &QuantizedState,
    sequences: &[ActionSequence],
) -> Result<Vec<QuantizedState>> {
    let mut cur = start.clone();
    let mut out = vec![cur.clone()];
    for seq in sequences {
        cur = act_sequence(&cur, seq, robot)?.0;
        out.push(cur.clone());
    }
    Ok(out)
}
