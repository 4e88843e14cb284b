use dtraj_core::model::*;
use dtraj_core::trajectory::*;
use dtraj_core::transitions::*;
use num_bigint::BigUint;
use proptest::prelude::*;

fn st(p: i64) -> QuantizedState {
    QuantizedState::new(vec![p], vec![0])
}

fn graph() -> impl Strategy<Value = TransitionTable> {
    (1usize..=8).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, 1usize..4), 0..=30).prop_map(move |edges| {
            let states: Vec<_> = (0..n as i64).map(st).collect();
            let transitions = edges
                .into_iter()
                .map(|(a, b, len)| Transition {
                    from: st(a as i64),
                    actions: ActionSequence::repeat(Action::new(vec![2]), len),
                    duration: len as f64 * 0.04,
                    to: st(b as i64),
                })
                .collect();
            TransitionTable::new(states, transitions).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn enumeration_matches_count(table in graph(), n in 0usize..=6) {
        let counts = count_trajectories(&table, n);
        for (i, s) in table.states().iter().enumerate() {
            let walks: Vec<_> = match enumerate_trajectories(&table, std::slice::from_ref(s), n, 200_000) {
                Ok(it) => it.collect(),
                Err(dtraj_core::Error::BudgetExceeded(_)) => {
                    prop_assert!(counts[i] > BigUint::from(200_000u32));
                    continue;
                }
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            prop_assert_eq!(BigUint::from(walks.len()), counts[i].clone());
            for w in &walks {
                prop_assert_eq!(w.edges.len(), n);
                prop_assert_eq!(&w.waypoints[0].0, s);
                let visited = replay_by_graph(&table, s, &w.edges).unwrap();
                let listed: Vec<_> = w.waypoints.iter().map(|p| p.0.clone()).collect();
                prop_assert_eq!(visited, listed);
                prop_assert!(w.waypoints.windows(2).all(|p| p[1].1 > p[0].1));
            }
            // canonical order is lexicographic in the edge lists
            prop_assert!(walks.windows(2).all(|p| p[0].edges < p[1].edges));
        }
    }
}

#[test]
fn example_table_enumeration_and_bound() {
    let robot = example_robot();
    let full = find_transitions(&robot, &QuantizedState::origin(1), &SearchConfig::default()).unwrap();
    let table = full.restrict(20);
    for n in 0..=4 {
        let counts = count_trajectories(&table, n);
        let enumerated = enumerate_trajectories(&table, table.states(), n, 10_000_000)
            .unwrap()
            .count();
        let total: BigUint = counts.iter().sum();
        assert_eq!(total, BigUint::from(enumerated), "n={n}");
    }
    for m in 0..=6u32 {
        let total: BigUint = count_trajectories_by_duration(&full, m as usize).iter().sum();
        assert!(total <= robot.trajectory_upper_bound(m), "m={m}");
    }
    // hop counts are not bounded this way: one hop may last many steps
    let hops: BigUint = count_trajectories(&full, 1).iter().sum();
    assert_eq!(hops, BigUint::from(full.transitions().len()));
    assert!(hops > robot.trajectory_upper_bound(1));
}

/// Positions -10..=10 at rest; one-step moves by -2..=2 cells and a
/// two-step stay.
fn hand_table() -> TransitionTable {
    let states: Vec<_> = (-10..=10).map(st).collect();
    let mut t = Vec::new();
    for p in -10..=10i64 {
        for (k, dp) in (-2..=2i64).enumerate() {
            if (-10..=10).contains(&(p + dp)) && dp != 0 {
                t.push(Transition {
                    from: st(p),
                    actions: ActionSequence::new(vec![Action::new(vec![k])]),
                    duration: 0.04,
                    to: st(p + dp),
                });
            }
        }
        t.push(Transition {
            from: st(p),
            actions: ActionSequence::repeat(Action::new(vec![2]), 2),
            duration: 0.08,
            to: st(p),
        });
    }
    TransitionTable::new(states, t).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn planner_is_locally_optimal(deltas in prop::collection::vec(-3.0f64..3.0, 1..12)) {
        let robot = example_robot();
        let dq = robot.joints[0].delta_q;
        let table = hand_table();
        let mut q = 0.0f64;
        let mut waypoints = vec![(vec![0.0], 0.0)];
        for (k, d) in deltas.iter().enumerate() {
            q = (q + d * dq).clamp(-9.0 * dq, 9.0 * dq);
            waypoints.push((vec![q], (k + 1) as f64 * 0.04));
        }
        let desired = DesiredTrajectory::new(waypoints).unwrap();
        let plan = match plan_action_sequence(&table, &desired, &robot, None) {
            Ok(p) => p,
            Err(dtraj_core::Error::NoFeasibleTransition { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let visited = replay_by_graph(&table, &plan.visited[0], &plan.transitions).unwrap();
        prop_assert_eq!(&visited, &plan.visited);
        prop_assert_eq!(visited.last().unwrap(), &plan.final_state);

        // re-scan: walk the waypoints again to recover each decision point
        let mut cur = plan.visited[0].clone();
        let mut pass = 1usize;
        let mut chosen = plan.transitions.iter();
        for (target, _) in desired.waypoints.iter().skip(1) {
            if chebyshev_offset(&robot, &cur, target) < 1.0 - 1e-9 {
                pass += 1;
                continue;
            }
            let k = *chosen.next().unwrap();
            let off = chebyshev_offset(&robot, &table.transitions()[k].to, target);
            for &j in table.outgoing_of(&cur).unwrap() {
                let t = &table.transitions()[j];
                if t.steps() == pass {
                    prop_assert!(off <= chebyshev_offset(&robot, &t.to, target));
                }
            }
            prop_assert_eq!(table.transitions()[k].steps(), pass);
            cur = table.transitions()[k].to.clone();
            pass = 1;
        }
        prop_assert!(chosen.next().is_none());
    }
}

#[test]
fn planner_replays_through_physics() {
    // plan ramps on the real Example-1 table and re-simulate the sequences
    let robot = example_robot();
    let table = find_transitions(&robot, &QuantizedState::origin(1), &SearchConfig::default()).unwrap();
    let dq = robot.joints[0].delta_q;
    let mut planned = 0;
    for cells in [-20i32, -10, -5, -2, 2, 5, 10, 20] {
        for steps in [5usize, 10, 20, 40] {
            let desired = DesiredTrajectory::ramp(&[0.0], &[f64::from(cells) * dq], steps, robot.delta_t).unwrap();
            let Ok(plan) = plan_action_sequence(&table, &desired, &robot, None) else {
                continue;
            };
            planned += 1;
            let replayed = replay_by_physics(&robot, &plan.visited[0], &plan.sequences).unwrap();
            assert_eq!(replayed, plan.visited);
        }
    }
    assert!(planned > 0);
}
