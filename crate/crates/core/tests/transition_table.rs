use std::sync::OnceLock;

use dtraj_core::dynamics::{act_sequence, simulate, validation_check};
use dtraj_core::model::*;
use dtraj_core::transitions::*;

fn table() -> &'static TransitionTable {
    static TABLE: OnceLock<TransitionTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        find_transitions(&example_robot(), &QuantizedState::origin(1), &SearchConfig::default()).unwrap()
    })
}

#[test]
fn every_transition_replays() {
    let robot = example_robot();
    for t in table().transitions() {
        let (end, trace) = act_sequence(&t.from, &t.actions, &robot).unwrap();
        assert_eq!(end, t.to);
        assert!(validation_check(&trace, &robot));
        assert!((t.duration - t.steps() as f64 * robot.delta_t).abs() < 1e-12);
    }
}

#[test]
fn prefixes_do_not_move() {
    let robot = example_robot();
    for t in table().transitions() {
        let trace = simulate(&robot.representative(&t.from), &t.actions, &robot).unwrap();
        for c in &trace[..trace.len() - 1] {
            assert_eq!(robot.quantize(c).unwrap(), t.from, "prefix of {} -> {}", t.from, t.to);
        }
    }
}

#[test]
fn static_loop_at_rest() {
    let robot = example_robot();
    let origin = QuantizedState::origin(1);
    let null = robot.null_action();
    let lp = table()
        .transitions()
        .iter()
        .find(|t| t.from == origin && t.is_static())
        .expect("static loop at the origin");
    assert_eq!(lp.actions, ActionSequence::repeat(null, DEFAULT_NAL));
    assert!((lp.duration - 1.0).abs() < 1e-12);
    for m in 1..=5 {
        let seq = ActionSequence::new(lp.actions.steps.iter().cycle().take(m * DEFAULT_NAL).cloned().collect());
        assert_eq!(act_sequence(&origin, &seq, &robot).unwrap().0.pos, origin.pos);
    }
    assert!(atomic_action_count(table(), &origin).unwrap() >= 2);
}

#[test]
fn static_transitions_hold_for_repeats() {
    let robot = example_robot();
    let statics: Vec<_> = table().transitions().iter().filter(|t| t.is_static()).collect();
    assert!(!statics.is_empty());
    for t in &statics {
        assert_eq!(t.from, t.to);
        assert_eq!(t.steps(), DEFAULT_NAL);
        // repeating the loop on the graph restarts each time from the cell
        let mut cur = t.from.clone();
        for _ in 0..5 {
            cur = act_sequence(&cur, &t.actions, &robot).unwrap().0;
            assert_eq!(cur, t.from);
        }
    }
}

// Away from the equilibrium the pulsed holding loops at ±29 and ±61 drift
// once the continuous state is carried over several repetitions.
#[test]
fn continuous_repeats_drift_only_off_equilibrium() {
    let robot = example_robot();
    let mut drifting = Vec::new();
    for t in table().transitions().iter().filter(|t| t.is_static()) {
        for m in 2..=5 {
            let seq = ActionSequence::new(t.actions.steps.iter().cycle().take(m * DEFAULT_NAL).cloned().collect());
            if act_sequence(&t.from, &seq, &robot).unwrap().0.pos != t.from.pos {
                drifting.push(t.from.pos[0]);
                break;
            }
        }
    }
    assert_eq!(drifting, vec![-29, 29, -61, 61]);
}

#[test]
fn closed_and_partitioned() {
    let t = table();
    for tr in t.transitions() {
        assert!(t.contains(&tr.to));
    }
    let total: usize = t.states().iter().map(|s| atomic_action_count(t, s).unwrap()).sum();
    assert_eq!(total, t.transitions().len());
    assert_eq!(t.states()[0], QuantizedState::origin(1));
}

#[test]
fn worker_count_does_not_matter() {
    let robot = example_robot();
    for workers in [1, 3] {
        let config = SearchConfig {
            workers,
            ..SearchConfig::default()
        };
        let other = find_transitions(&robot, &QuantizedState::origin(1), &config).unwrap();
        assert_eq!(&other, table());
        assert_eq!(export_dot(&other), export_dot(table()));
    }
}

#[test]
fn jsonl_round_trip_of_full_table() {
    let mut buf = Vec::new();
    write_jsonl(table(), "abc", &mut buf).unwrap();
    let (back, hash) = read_jsonl(buf.as_slice()).unwrap();
    assert_eq!(hash, "abc");
    assert_eq!(&back, table());
}

#[test]
fn shortest_dedup_keeps_one_per_pair() {
    let config = SearchConfig {
        dedup: Dedup::Shortest,
        ..SearchConfig::default()
    };
    let t = find_transitions(&example_robot(), &QuantizedState::origin(1), &config).unwrap();
    let mut pairs: Vec<_> = t.transitions().iter().map(|x| (&x.from, &x.to)).collect();
    let n = pairs.len();
    pairs.sort();
    pairs.dedup();
    assert_eq!(pairs.len(), n);
    assert!(n <= table().transitions().len());
}
