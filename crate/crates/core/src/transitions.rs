//! Breadth-first discovery of atomic transitions and the reachable state set.
//!
//! For every state in a growing work list, action sequences are explored in
//! breadth-first order starting from all single time-atomic actions. A
//! sequence whose quantized endpoint differs from the state ends as a
//! transition; one that leaves the state unchanged is extended by every
//! torque vector until it reaches `nal` steps, at which point it is recorded
//! as a static self-loop. Sequences that leave the joint limits are dropped.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::integrate_step;
use crate::error::{Error, Result};
use crate::model::{Action, ActionSequence, ContinuousState, QuantizedState, RobotSpec};

pub const DEFAULT_NAL: usize = 25;
pub const DEFAULT_MAX_STATES: usize = 1_000_000;
pub const DEFAULT_MAX_SEQUENCES: u64 = 10_000_000;

pub const TRANSITIONS_FORMAT: &str = "dtraj-transitions";
pub const TRANSITIONS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub from: QuantizedState,
    pub actions: ActionSequence,
    /// Seconds; equals `actions.len() * delta_t`.
    pub duration: f64,
    pub to: QuantizedState,
}

impl Transition {
    pub fn steps(&self) -> usize {
        self.actions.len()
    }

    pub fn is_static(&self) -> bool {
        self.from == self.to
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dedup {
    /// Record every sequence, as the search finds them.
    #[default]
    All,
    /// Keep only the first (shortest) sequence per `(from, to)` pair.
    Shortest,
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub nal: usize,
    pub dedup: Dedup,
    pub max_states: usize,
    pub max_sequences: u64,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            nal: DEFAULT_NAL,
            dedup: Dedup::All,
            max_states: DEFAULT_MAX_STATES,
            max_sequences: DEFAULT_MAX_SEQUENCES,
            workers: 0,
        }
    }
}

/// States in canonical (discovery) order plus all transitions grouped by
/// source state.
#[derive(Debug, Clone)]
pub struct TransitionTable {
    states: Vec<QuantizedState>,
    transitions: Vec<Transition>,
    index: HashMap<QuantizedState, usize>,
    outgoing: Vec<Vec<usize>>,
}

impl PartialEq for TransitionTable {
    fn eq(&self, other: &Self) -> bool {
        self.states == other.states && self.transitions == other.transitions
    }
}

impl TransitionTable {
    /// Builds a table, checking that states are unique and every transition
    /// endpoint is listed.
    pub fn new(states: Vec<QuantizedState>, transitions: Vec<Transition>) -> Result<Self> {
        let mut index = HashMap::with_capacity(states.len());
        for (i, s) in states.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::Domain(format!("duplicate state {s}")));
            }
        }
        let mut outgoing = vec![Vec::new(); states.len()];
        for (k, t) in transitions.iter().enumerate() {
            let from = *index
                .get(&t.from)
                .ok_or_else(|| Error::UnknownState(t.from.to_string()))?;
            if !index.contains_key(&t.to) {
                return Err(Error::UnknownState(t.to.to_string()));
            }
            if t.actions.is_empty() {
                return Err(Error::Domain(format!("transition {k} has no actions")));
            }
            outgoing[from].push(k);
        }
        Ok(TransitionTable {
            states,
            transitions,
            index,
            outgoing,
        })
    }

    /// Builds a table whose states are listed in order of first appearance
    /// (source before target) in `transitions`.
    pub fn from_transitions(transitions: Vec<Transition>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut states = Vec::new();
        for t in &transitions {
            for s in [&t.from, &t.to] {
                if seen.insert(s.clone()) {
                    states.push(s.clone());
                }
            }
        }
        Self::new(states, transitions)
    }

    pub fn states(&self) -> &[QuantizedState] {
        &self.states
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn state_index(&self, s: &QuantizedState) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn contains(&self, s: &QuantizedState) -> bool {
        self.index.contains_key(s)
    }

    /// Indices of transitions leaving state number `i`, in table order.
    pub fn outgoing(&self, i: usize) -> &[usize] {
        &self.outgoing[i]
    }

    pub fn outgoing_of(&self, s: &QuantizedState) -> Result<&[usize]> {
        let i = self.state_index(s).ok_or_else(|| Error::UnknownState(s.to_string()))?;
        Ok(&self.outgoing[i])
    }

    /// Index of the state a transition ends in.
    pub fn target_index(&self, k: usize) -> usize {
        self.index[&self.transitions[k].to]
    }

    pub fn n_joints(&self) -> Option<usize> {
        self.states.first().map(|s| s.n_joints())
    }

    /// Keeps the first `k` states and the transitions among them.
    pub fn restrict(&self, k: usize) -> TransitionTable {
        let keep: Vec<QuantizedState> = self.states.iter().take(k).cloned().collect();
        let set: HashSet<&QuantizedState> = keep.iter().collect();
        let transitions = self
            .transitions
            .iter()
            .filter(|t| set.contains(&t.from) && set.contains(&t.to))
            .cloned()
            .collect();
        TransitionTable::new(keep, transitions).expect("restriction stays closed")
    }
}

/// Number of outgoing transitions (atomic actions) recorded for `state`.
pub fn atomic_action_count(table: &TransitionTable, state: &QuantizedState) -> Result<usize> {
    Ok(table.outgoing_of(state)?.len())
}

struct Outcome {
    actions: ActionSequence,
    to: QuantizedState,
}

struct Exploration {
    outcomes: Vec<Outcome>,
    simulated: u64,
}

/// Explores all atomic action sequences from one state. Gives up once more
/// than `budget` sequences have been simulated.
fn explore(robot: &RobotSpec, s: &QuantizedState, nal: usize, actions: &[Action], budget: u64) -> Result<Exploration> {
    let start = robot.representative(s);
    let mut simulated = 0u64;
    let mut outcomes = Vec::new();
    let mut queue: VecDeque<(Vec<Action>, ContinuousState)> = VecDeque::new();

    let mut push = |queue: &mut VecDeque<(Vec<Action>, ContinuousState)>,
                    prefix: &[Action],
                    from: &ContinuousState,
                    a: &Action|
     -> Result<()> {
        simulated += 1;
        if simulated > budget {
            return Err(Error::BudgetExceeded(format!("more than {budget} simulated sequences")));
        }
        // divergence simply invalidates the sequence
        if let Ok(next) = integrate_step(from, a, robot) {
            let mut seq = prefix.to_vec();
            seq.push(a.clone());
            queue.push_back((seq, next));
        }
        Ok(())
    };

    for a in actions {
        push(&mut queue, &[], &start, a)?;
    }
    while let Some((seq, cont)) = queue.pop_front() {
        // earlier steps were validated before the sequence was extended
        if !within_limits(&cont, robot) {
            continue;
        }
        let Ok(end) = robot.quantize(&cont) else {
            continue;
        };
        if end != *s {
            outcomes.push(Outcome {
                actions: ActionSequence::new(seq),
                to: end,
            });
        } else if seq.len() < nal {
            for a in actions {
                push(&mut queue, &seq, &cont, a)?;
            }
        } else {
            outcomes.push(Outcome {
                actions: ActionSequence::new(seq),
                to: end,
            });
        }
    }
    Ok(Exploration { outcomes, simulated })
}

fn within_limits(s: &ContinuousState, robot: &RobotSpec) -> bool {
    crate::dynamics::validation_check(std::slice::from_ref(s), robot)
}

/// Discovers every atomic transition reachable from `start`.
///
/// States are expanded in work-list order; batches of pending states are
/// explored in parallel and merged back in list order, so the table does not
/// depend on the number of workers.
pub fn find_transitions(robot: &RobotSpec, start: &QuantizedState, config: &SearchConfig) -> Result<TransitionTable> {
    if config.nal == 0 {
        return Err(Error::Domain("nal must be at least 1".into()));
    }
    robot.check_state(start)?;
    let actions = robot.all_actions();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::ResourceLimit(format!("thread pool: {e}")))?;

    let mut states = vec![start.clone()];
    let mut seen: HashSet<QuantizedState> = HashSet::from([start.clone()]);
    let mut transitions = Vec::new();
    let mut simulated = 0u64;
    let mut next = 0usize;

    while next < states.len() {
        let batch: Vec<QuantizedState> = states[next..].to_vec();
        next = states.len();
        let remaining = config.max_sequences - simulated;
        let results: Vec<Result<Exploration>> = pool.install(|| {
            batch
                .par_iter()
                .map(|s| explore(robot, s, config.nal, &actions, remaining))
                .collect()
        });
        for (s, result) in batch.iter().zip(results) {
            let exploration = result?;
            simulated += exploration.simulated;
            if simulated > config.max_sequences {
                return Err(Error::BudgetExceeded(format!(
                    "more than {} simulated sequences",
                    config.max_sequences
                )));
            }
            let mut targets = HashSet::new();
            for outcome in exploration.outcomes {
                if config.dedup == Dedup::Shortest && !targets.insert(outcome.to.clone()) {
                    continue;
                }
                if seen.insert(outcome.to.clone()) {
                    states.push(outcome.to.clone());
                    if states.len() > config.max_states {
                        return Err(Error::BudgetExceeded(format!("more than {} states", config.max_states)));
                    }
                }
                transitions.push(Transition {
                    from: s.clone(),
                    duration: outcome.actions.duration(robot.delta_t),
                    actions: outcome.actions,
                    to: outcome.to,
                });
            }
        }
    }
    TransitionTable::new(states, transitions)
}

/// Directed graph in DOT syntax, one node per state, one edge per transition.
pub fn export_dot(table: &TransitionTable) -> String {
    let mut out = String::from("digraph transitions {\n");
    for (i, s) in table.states().iter().enumerate() {
        let _ = writeln!(out, "  n{i} [label=\"{s}\"];");
    }
    for (k, t) in table.transitions().iter().enumerate() {
        let from = table.state_index(&t.from).expect("closed table");
        let to = table.target_index(k);
        let _ = writeln!(out, "  n{from} -> n{to} [label=\"{}\"];", t.actions.summary());
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    robot_hash: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    from: QuantizedState,
    torque_idx_seq: Vec<Vec<usize>>,
    duration_s: f64,
    to: QuantizedState,
}

/// Writes the JSONL transition file: a header line, then one transition per
/// line in table order.
pub fn write_jsonl<W: Write>(table: &TransitionTable, robot_hash: &str, mut out: W) -> Result<()> {
    let header = Header {
        format: TRANSITIONS_FORMAT.into(),
        version: TRANSITIONS_VERSION,
        robot_hash: robot_hash.into(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for t in table.transitions() {
        let record = Record {
            from: t.from.clone(),
            torque_idx_seq: t.actions.steps.iter().map(|a| a.torque_idx.clone()).collect(),
            duration_s: t.duration,
            to: t.to.clone(),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a JSONL transition file. Returns the table and the robot hash
/// from the header.
pub fn read_jsonl<R: BufRead>(input: R) -> Result<(TransitionTable, String)> {
    let mut lines = input.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Parse("empty transitions file".into()))??;
    let header: Header = serde_json::from_str(&header_line)?;
    if header.format != TRANSITIONS_FORMAT || header.version != TRANSITIONS_VERSION {
        return Err(Error::Parse(format!(
            "unsupported transitions format {:?} version {}",
            header.format, header.version
        )));
    }
    let mut transitions = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: Record = serde_json::from_str(&line).map_err(|e| Error::Parse(format!("line {}: {e}", n + 2)))?;
        transitions.push(Transition {
            from: r.from,
            actions: ActionSequence::new(r.torque_idx_seq.into_iter().map(Action::new).collect()),
            duration: r.duration_s,
            to: r.to,
        });
    }
    Ok((TransitionTable::from_transitions(transitions)?, header.robot_hash))
}
