//! Forward dynamics of independently actuated pendulum joints and the grid
//! actuation maps built on top of it.

use crate::error::{Error, Result};
use crate::model::{Action, ActionSequence, ContinuousState, QuantizedState, RobotSpec};

/// RK4 substeps per time step.
pub const RK4_SUBSTEPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumParams {
    pub mass: f64,
    pub length: f64,
    pub gravity: f64,
}

impl PendulumParams {
    pub fn of_joint(robot: &RobotSpec, i: usize) -> Self {
        PendulumParams {
            mass: robot.joints[i].mass,
            length: robot.joints[i].length,
            gravity: robot.gravity,
        }
    }

    /// Kinetic plus potential energy, zero at the hanging rest position.
    pub fn energy(&self, q: f64, v: f64) -> f64 {
        let ml2 = self.mass * self.length * self.length;
        0.5 * ml2 * v * v + self.mass * self.gravity * self.length * (1.0 - q.cos())
    }
}

/// `q'' = -(g/l) sin q + u / (m l^2)`; q = 0 is the hanging equilibrium.
pub fn pendulum_accel(q: f64, _v: f64, u: f64, p: &PendulumParams) -> f64 {
    -(p.gravity / p.length) * q.sin() + u / (p.mass * p.length * p.length)
}

/// Integrates one joint over `dt` under constant torque `u` with classical
/// RK4 using `substeps` equal substeps.
pub fn integrate_joint(q: f64, v: f64, u: f64, p: &PendulumParams, dt: f64, substeps: usize) -> (f64, f64) {
    let h = dt / substeps as f64;
    let (mut q, mut v) = (q, v);
    for _ in 0..substeps {
        let k1q = v;
        let k1v = pendulum_accel(q, v, u, p);
        let k2q = v + 0.5 * h * k1v;
        let k2v = pendulum_accel(q + 0.5 * h * k1q, k2q, u, p);
        let k3q = v + 0.5 * h * k2v;
        let k3v = pendulum_accel(q + 0.5 * h * k2q, k3q, u, p);
        let k4q = v + h * k3v;
        let k4v = pendulum_accel(q + h * k3q, k4q, u, p);
        q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    (q, v)
}

/// Advances every joint by one time step under the action's torques.
pub fn integrate_step(s: &ContinuousState, a: &Action, robot: &RobotSpec) -> Result<ContinuousState> {
    robot.check_action(a)?;
    let n = robot.n_joints();
    if s.q.len() != n || s.v.len() != n {
        return Err(Error::Domain(format!(
            "continuous state dimension does not match {n} joints"
        )));
    }
    let mut next = ContinuousState::zeros(n);
    for i in 0..n {
        let u = robot.joints[i].torques[a.torque_idx[i]];
        let p = PendulumParams::of_joint(robot, i);
        let (q, v) = integrate_joint(s.q[i], s.v[i], u, &p, robot.delta_t, RK4_SUBSTEPS);
        next.q[i] = q;
        next.v[i] = v;
    }
    if !next.is_finite() {
        return Err(Error::NumericalOverflow(format!(
            "integration diverged applying {:?}",
            a.torque_idx
        )));
    }
    Ok(next)
}

/// Grid-level actuation: quantize the result of one integration step
/// started from the cell representative.
pub fn act(s: &QuantizedState, a: &Action, robot: &RobotSpec) -> Result<QuantizedState> {
    robot.check_state(s)?;
    let next = integrate_step(&robot.representative(s), a, robot)?;
    robot.quantize(&next)
}

/// Continuous states after each action of `seq`, starting from `start`.
pub fn simulate(start: &ContinuousState, seq: &ActionSequence, robot: &RobotSpec) -> Result<Vec<ContinuousState>> {
    let mut trace = Vec::with_capacity(seq.len());
    let mut cur = start.clone();
    for a in &seq.steps {
        cur = integrate_step(&cur, a, robot)?;
        trace.push(cur.clone());
    }
    Ok(trace)
}

/// Applies a whole sequence. The continuous state is carried between steps;
/// only the endpoint is quantized.
pub fn act_sequence(
    s0: &QuantizedState,
    seq: &ActionSequence,
    robot: &RobotSpec,
) -> Result<(QuantizedState, Vec<ContinuousState>)> {
    if seq.is_empty() {
        return Err(Error::Domain("action sequence must not be empty".into()));
    }
    robot.check_state(s0)?;
    let trace = simulate(&robot.representative(s0), seq, robot)?;
    let end = robot.quantize(trace.last().expect("non-empty"))?;
    Ok((end, trace))
}

/// True iff every traced state is finite and within the joint position and
/// velocity limits.
pub fn validation_check(trace: &[ContinuousState], robot: &RobotSpec) -> bool {
    trace.iter().all(|s| {
        s.q.len() == robot.n_joints()
            && s.v.len() == robot.n_joints()
            && robot.joints.iter().enumerate().all(|(i, j)| {
                let (q, v) = (s.q[i], s.v[i]);
                q.is_finite() && v.is_finite() && q >= j.q_min && q <= j.q_max && v >= j.v_min && v <= j.v_max
            })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::example_robot;

    fn unit() -> PendulumParams {
        PendulumParams {
            mass: 1.0,
            length: 1.0,
            gravity: 9.81,
        }
    }

    fn a(k: usize) -> Action {
        Action::new(vec![k])
    }

    #[test]
    fn accel_examples() {
        let p = unit();
        assert_eq!(pendulum_accel(0.0, 0.0, 0.0, &p), 0.0);
        assert_eq!(pendulum_accel(0.0, 0.0, 50.0, &p), 50.0);
        assert!((pendulum_accel(std::f64::consts::FRAC_PI_2, 0.0, 0.0, &p) + 9.81).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_is_fixed() {
        let robot = example_robot();
        let s = integrate_step(&ContinuousState::zeros(1), &a(2), &robot).unwrap();
        assert_eq!(s, ContinuousState::zeros(1));
        assert_eq!(
            act(&QuantizedState::origin(1), &a(2), &robot).unwrap(),
            QuantizedState::origin(1)
        );
    }

    // Frozen from an independent RK4 run with 10^5 substeps:
    // q = 0.039947710347955794 rad (2.2888°), v = 1.994772700499835 rad/s (114.29°/s).
    #[test]
    fn full_torque_step_matches_fine_reference() {
        let robot = example_robot();
        let s = integrate_step(&ContinuousState::zeros(1), &a(4), &robot).unwrap();
        assert!((s.q[0] - 0.039947710347955794).abs() < 1e-9, "{}", s.q[0]);
        assert!((s.v[0] - 1.994772700499835).abs() < 1e-9, "{}", s.v[0]);
        let (q_ref, v_ref) = integrate_joint(0.0, 0.0, 50.0, &unit(), 0.04, 10_000);
        assert!((s.q[0] - q_ref).abs() < 1e-9);
        assert!((s.v[0] - v_ref).abs() < 1e-9);
    }

    #[test]
    fn act_example_and_limits() {
        let robot = example_robot();
        let s = act(&QuantizedState::origin(1), &a(4), &robot).unwrap();
        assert_eq!(s, QuantizedState::new(vec![1], vec![2]));

        let (_, hi) = robot.joints[0].pos_range();
        let top = QuantizedState::new(vec![hi], vec![0]);
        assert!(matches!(act(&top, &a(4), &robot), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn act_sequence_basics() {
        let robot = example_robot();
        let seq = ActionSequence::repeat(a(2), 4);
        let (end, trace) = act_sequence(&QuantizedState::origin(1), &seq, &robot).unwrap();
        assert_eq!(end, QuantizedState::origin(1));
        assert_eq!(trace, vec![ContinuousState::zeros(1); 4]);

        let single = ActionSequence::new(vec![a(3)]);
        let s = QuantizedState::new(vec![10], vec![-1]);
        let (end, _) = act_sequence(&s, &single, &robot).unwrap();
        assert_eq!(end, act(&s, &a(3), &robot).unwrap());

        assert!(act_sequence(&s, &ActionSequence::new(vec![]), &robot).is_err());
    }

    #[test]
    fn validation_examples() {
        let robot = example_robot();
        assert!(validation_check(&[ContinuousState::zeros(1)], &robot));
        let fast = ContinuousState {
            q: vec![0.0],
            v: vec![181f64.to_radians()],
        };
        assert!(!validation_check(&[ContinuousState::zeros(1), fast], &robot));
        let trace = simulate(&ContinuousState::zeros(1), &ActionSequence::new(vec![a(4)]), &robot).unwrap();
        assert!(validation_check(&trace, &robot));
    }

    #[test]
    fn bad_action_rejected() {
        let robot = example_robot();
        assert!(integrate_step(&ContinuousState::zeros(1), &a(5), &robot).is_err());
        assert!(integrate_step(&ContinuousState::zeros(1), &Action::new(vec![0, 0]), &robot).is_err());
    }

    #[test]
    fn deterministic() {
        let robot = example_robot();
        let s = ContinuousState {
            q: vec![0.3],
            v: vec![-1.1],
        };
        let x = integrate_step(&s, &a(1), &robot).unwrap();
        let y = integrate_step(&s, &a(1), &robot).unwrap();
        assert_eq!(x.q[0].to_bits(), y.q[0].to_bits());
        assert_eq!(x.v[0].to_bits(), y.v[0].to_bits());
    }
}
