//! Python bindings: robots, transition tables, trajectory counts, the
//! greedy planner and lattice corridor counts.

use num_bigint::BigUint;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyOverflowError, PyValueError};
use pyo3::prelude::*;

use dtraj_core::config::RobotConfig;
use dtraj_core::lattice::{self, CorridorSpec, NdMethod, PathCount};
use dtraj_core::model::{ContinuousState, QuantizedState, RobotSpec};
use dtraj_core::{trajectory, transitions, Error};

create_exception!(dtraj, BudgetExceeded, PyException);
create_exception!(dtraj, NoFeasibleTransition, PyException);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::BudgetExceeded(_) | Error::ResourceLimit(_) => BudgetExceeded::new_err(e.to_string()),
        Error::NoFeasibleTransition { .. } => NoFeasibleTransition::new_err(e.to_string()),
        Error::NumericalOverflow(_) => PyOverflowError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

type State = (Vec<i64>, Vec<i64>);

fn state(s: &QuantizedState) -> State {
    (s.pos.clone(), s.vel.clone())
}

fn qstate(s: State) -> QuantizedState {
    QuantizedState::new(s.0, s.1)
}

/// Quantized robot built from a JSON configuration.
#[pyclass(frozen, module = "dtraj")]
struct Robot {
    spec: RobotSpec,
    hash: String,
}

impl Robot {
    fn from_config(config: RobotConfig) -> PyResult<Self> {
        let spec = config.to_robot().map_err(py_err)?;
        Ok(Robot {
            spec,
            hash: config.content_hash(),
        })
    }
}

#[pymethods]
impl Robot {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Robot::from_config(RobotConfig::from_json(text).map_err(py_err)?)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Robot::from_config(RobotConfig::load(path).map_err(py_err)?)
    }

    /// The one-joint pendulum with a 40 ms step and five torque levels.
    #[staticmethod]
    fn example() -> PyResult<Self> {
        Robot::from_config(RobotConfig::example())
    }

    #[getter]
    fn n_joints(&self) -> usize {
        self.spec.n_joints()
    }

    #[getter]
    fn delta_t(&self) -> f64 {
        self.spec.delta_t
    }

    #[getter]
    fn config_hash(&self) -> &str {
        &self.hash
    }

    fn state_space_size(&self) -> BigUint {
        self.spec.state_space_size()
    }

    fn action_space_size(&self) -> BigUint {
        self.spec.action_space_size()
    }

    fn trajectory_upper_bound(&self, steps: u32) -> BigUint {
        self.spec.trajectory_upper_bound(steps)
    }

    /// Grid cell of a continuous state (radians, rad/s).
    fn quantize(&self, q: Vec<f64>, v: Vec<f64>) -> PyResult<State> {
        self.spec
            .quantize(&ContinuousState { q, v })
            .map(|s| state(&s))
            .map_err(py_err)
    }

    /// Joint angles (radians) of a grid cell.
    fn configuration(&self, s: State) -> PyResult<Vec<f64>> {
        let s = qstate(s);
        self.spec.check_state(&s).map_err(py_err)?;
        Ok(self.spec.configuration(&s))
    }

    /// Grid cell reached by holding torque indices for one step from the
    /// cell representative.
    fn act(&self, s: State, torque_idx: Vec<usize>) -> PyResult<State> {
        let a = dtraj_core::model::Action::new(torque_idx);
        dtraj_core::dynamics::act(&qstate(s), &a, &self.spec)
            .map(|s| state(&s))
            .map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Robot(n_joints={}, delta_t={})",
            self.spec.n_joints(),
            self.spec.delta_t
        )
    }
}

/// Atomic transitions reachable from a start state.
#[pyclass(frozen, module = "dtraj")]
struct TransitionTable {
    table: transitions::TransitionTable,
    hash: String,
}

#[pymethods]
impl TransitionTable {
    #[staticmethod]
    #[pyo3(signature = (robot, start=None, nal=transitions::DEFAULT_NAL, dedup="all",
        max_states=transitions::DEFAULT_MAX_STATES, workers=0))]
    fn find(
        py: Python<'_>,
        robot: &Robot,
        start: Option<State>,
        nal: usize,
        dedup: &str,
        max_states: usize,
        workers: usize,
    ) -> PyResult<Self> {
        let start = start
            .map(qstate)
            .unwrap_or_else(|| QuantizedState::origin(robot.spec.n_joints()));
        let dedup = match dedup {
            "all" => transitions::Dedup::All,
            "shortest" => transitions::Dedup::Shortest,
            other => {
                return Err(PyValueError::new_err(format!(
                    "dedup must be 'all' or 'shortest', not {other:?}"
                )))
            }
        };
        let config = transitions::SearchConfig {
            nal,
            dedup,
            max_states,
            workers,
            ..Default::default()
        };
        let spec = &robot.spec;
        let table = py
            .detach(|| transitions::find_transitions(spec, &start, &config))
            .map_err(py_err)?;
        Ok(TransitionTable {
            table,
            hash: robot.hash.clone(),
        })
    }

    #[staticmethod]
    fn from_jsonl(text: &str) -> PyResult<Self> {
        let (table, hash) = transitions::read_jsonl(text.as_bytes()).map_err(py_err)?;
        Ok(TransitionTable { table, hash })
    }

    fn to_jsonl(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        transitions::write_jsonl(&self.table, &self.hash, &mut buf).map_err(py_err)?;
        Ok(String::from_utf8(buf).expect("JSON is UTF-8"))
    }

    fn to_dot(&self) -> String {
        transitions::export_dot(&self.table)
    }

    #[getter]
    fn robot_hash(&self) -> &str {
        &self.hash
    }

    fn __len__(&self) -> usize {
        self.table.transitions().len()
    }

    fn states(&self) -> Vec<State> {
        self.table.states().iter().map(state).collect()
    }

    /// `(from, torque index sequence, duration_s, to)` per transition.
    fn transitions(&self) -> Vec<(State, Vec<Vec<usize>>, f64, State)> {
        self.table
            .transitions()
            .iter()
            .map(|t| {
                let seq = t.actions.steps.iter().map(|a| a.torque_idx.clone()).collect();
                (state(&t.from), seq, t.duration, state(&t.to))
            })
            .collect()
    }

    /// Trajectories of `hops` transitions from each state, in state order.
    fn count_trajectories(&self, py: Python<'_>, hops: usize) -> Vec<BigUint> {
        py.detach(|| trajectory::count_trajectories(&self.table, hops))
    }

    /// Trajectories lasting exactly `steps` time steps from each state.
    fn count_trajectories_by_duration(&self, py: Python<'_>, steps: usize) -> Vec<BigUint> {
        py.detach(|| trajectory::count_trajectories_by_duration(&self.table, steps))
    }

    /// Every trajectory of `hops` transitions from `start`, as lists of
    /// `(state, step)` waypoints.
    #[pyo3(signature = (start, hops, max_trajectories=trajectory::DEFAULT_MAX_TRAJECTORIES))]
    fn enumerate(&self, start: State, hops: usize, max_trajectories: u64) -> PyResult<Vec<Vec<(State, u64)>>> {
        let it = trajectory::enumerate_trajectories(&self.table, &[qstate(start)], hops, max_trajectories)
            .map_err(py_err)?;
        Ok(it
            .map(|t| t.waypoints.iter().map(|(s, k)| (state(s), *k)).collect())
            .collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "TransitionTable(states={}, transitions={})",
            self.table.states().len(),
            self.table.transitions().len()
        )
    }
}

/// Greedy plan through `waypoints`, a list of `(t_s, [q_rad, ...])`
/// spaced at multiples of the robot step.
///
/// Returns a dict with `sequences` (torque index lists per chosen
/// transition), `visited`, `final_state`, `miss_rad` and `target_missed`.
#[pyfunction]
#[pyo3(signature = (table, robot, waypoints, start=None))]
fn plan<'py>(
    py: Python<'py>,
    table: &TransitionTable,
    robot: &Robot,
    waypoints: Vec<(f64, Vec<f64>)>,
    start: Option<State>,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let desired =
        trajectory::DesiredTrajectory::new(waypoints.into_iter().map(|(t, q)| (q, t)).collect()).map_err(py_err)?;
    let r = trajectory::plan_action_sequence(&table.table, &desired, &robot.spec, start.map(qstate)).map_err(py_err)?;
    let out = pyo3::types::PyDict::new(py);
    let seqs: Vec<Vec<Vec<usize>>> = r
        .sequences
        .iter()
        .map(|s| s.steps.iter().map(|a| a.torque_idx.clone()).collect())
        .collect();
    out.set_item("sequences", seqs)?;
    out.set_item("visited", r.visited.iter().map(state).collect::<Vec<_>>())?;
    out.set_item("final_state", state(&r.final_state))?;
    out.set_item("miss_rad", r.miss)?;
    out.set_item("target_missed", r.target_missed)?;
    Ok(out)
}

fn path_count(py: Python<'_>, c: PathCount) -> PyResult<Py<PyAny>> {
    Ok(match c {
        PathCount::Exact(n) => n.into_pyobject(py)?.into_any().unbind(),
        PathCount::Approx { log10 } => 10f64.powf(log10).into_pyobject(py)?.into_any().unbind(),
    })
}

/// 1-D 3-way corridor count from the closed form; an int when the
/// rounding bound pins it down, otherwise a float.
#[pyfunction]
fn corridor_count_1d(py: Python<'_>, d: i64, a: i64, b: i64, steps: u32) -> PyResult<Py<PyAny>> {
    let c = lattice::corridor_count_1d(d, a, b, steps).map_err(py_err)?;
    path_count(py, c.to_path_count())
}

/// Exact corridor count by dynamic programming over the full grid.
#[pyfunction]
#[pyo3(signature = (d, a, b, steps, move_set="full"))]
fn corridor_count_exact(d: Vec<i64>, a: Vec<i64>, b: Vec<i64>, steps: u32, move_set: &str) -> PyResult<BigUint> {
    let ms = if move_set == "full" {
        lattice::MoveSet::full(d.len()).map_err(py_err)?
    } else {
        lattice::MoveSet::parse(move_set).map_err(py_err)?
    };
    let spec = CorridorSpec::new(d, ms).map_err(py_err)?;
    lattice::corridor_count_dp(&spec, &a, &b, steps).map_err(py_err)
}

/// n-D corridor count with the full diagonal move set.
///
/// `method` is "auto", "factorized" or "direct". Returns
/// `(count, error_bound, method_used)`.
#[pyfunction]
#[pyo3(signature = (d, a, b, steps, method="auto", max_terms=lattice::ndim::MAX_DIRECT_TERMS))]
fn corridor_count_nd(
    py: Python<'_>,
    d: Vec<i64>,
    a: Vec<i64>,
    b: Vec<i64>,
    steps: u32,
    method: &str,
    max_terms: u64,
) -> PyResult<(Py<PyAny>, f64, &'static str)> {
    let method = match method {
        "auto" => NdMethod::Auto,
        "factorized" => NdMethod::Factorized,
        "direct" => NdMethod::Direct,
        other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    };
    let spec = CorridorSpec::full(d).map_err(py_err)?;
    let c = py
        .detach(|| lattice::corridor_count_nd(&spec, &a, &b, steps, method, max_terms))
        .map_err(py_err)?;
    Ok((
        path_count(py, c.value.to_path_count())?,
        c.value.error_bound(),
        c.method.as_str(),
    ))
}

/// Exact n-D count as the product of per-axis exact counts.
#[pyfunction]
fn corridor_count_factorized_exact(d: Vec<i64>, a: Vec<i64>, b: Vec<i64>, steps: u32) -> PyResult<BigUint> {
    let spec = CorridorSpec::full(d).map_err(py_err)?;
    lattice::corridor_count_factorized_exact(&spec, &a, &b, steps).map_err(py_err)
}

#[pymodule]
fn dtraj(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("BudgetExceeded", m.py().get_type::<BudgetExceeded>())?;
    m.add("NoFeasibleTransition", m.py().get_type::<NoFeasibleTransition>())?;
    m.add_class::<Robot>()?;
    m.add_class::<TransitionTable>()?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(corridor_count_1d, m)?)?;
    m.add_function(wrap_pyfunction!(corridor_count_exact, m)?)?;
    m.add_function(wrap_pyfunction!(corridor_count_nd, m)?)?;
    m.add_function(wrap_pyfunction!(corridor_count_factorized_exact, m)?)?;
    Ok(())
}
