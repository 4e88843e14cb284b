use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;

use dtraj_core::config::RobotConfig;
use dtraj_core::lattice::count::{biguint_log10, format_biguint};
use dtraj_core::lattice::ndim::corridor_count_factorized_exact;
use dtraj_core::lattice::scaling::{fit_asymptotic_slope, secant_slope, GO_BRANCHING};
use dtraj_core::lattice::*;
use dtraj_core::model::QuantizedState;
use dtraj_core::trajectory::*;
use dtraj_core::transitions::*;
use dtraj_core::{Error, Result};
use num_bigint::BigUint;
use num_traits::Zero;

use crate::output::{emit, write_atomic};
use crate::*;

/// Runs the parsed command; returns the robot config hash when one was read.
pub fn run(cli: &Cli) -> Result<Option<String>> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Transitions(a) => transitions(a, out, cli.workers),
        Command::Enumerate(a) => enumerate(a, out),
        Command::Plan(a) => plan(a, out),
        Command::Count(CountCommand::Corridor(a)) => corridor(a, out).map(|_| None),
        Command::Count(CountCommand::Ndim(a)) => ndim(a, out).map(|_| None),
        Command::Count(CountCommand::Bounds(a)) => bounds(a, out),
        Command::Count(CountCommand::Scaling(a)) => scaling(a, out),
    }
}

fn load_config(path: &str) -> Result<(RobotConfig, dtraj_core::model::RobotSpec)> {
    let config = RobotConfig::load(path)?;
    let robot = config.to_robot()?;
    Ok((config, robot))
}

fn load_table(path: &str) -> Result<(TransitionTable, String)> {
    read_jsonl(BufReader::new(File::open(path)?))
}

fn transitions(a: &TransitionsArgs, out: Option<&str>, workers: Option<usize>) -> Result<Option<String>> {
    let (config, robot) = load_config(&a.config)?;
    let start = QuantizedState::parse(&a.start, robot.n_joints())?;
    let search = SearchConfig {
        nal: a.nal,
        dedup: match a.dedup {
            DedupArg::All => Dedup::All,
            DedupArg::Shortest => Dedup::Shortest,
        },
        max_states: a.max_states,
        max_sequences: a.max_sequences,
        workers: workers.unwrap_or(0),
    };
    let table = find_transitions(&robot, &start, &search)?;
    let hash = config.content_hash();
    let mut buf = Vec::new();
    write_jsonl(&table, &hash, &mut buf)?;
    if let Some(dot) = &a.dot {
        write_atomic(dot, export_dot(&table).as_bytes())?;
    }
    emit(out, std::str::from_utf8(&buf).expect("JSON is UTF-8"))?;
    Ok(Some(hash))
}

fn enumerate(a: &EnumerateArgs, out: Option<&str>) -> Result<Option<String>> {
    let (table, hash) = load_table(&a.transitions)?;
    let n = table.n_joints().unwrap_or(0);
    let starts = match &a.start {
        Some(s) => vec![QuantizedState::parse(s, n)?],
        None => table.states().to_vec(),
    };
    let mut text = String::new();
    if a.count_only {
        let counts = count_trajectories(&table, a.steps);
        let mut total = BigUint::zero();
        for s in &starts {
            let i = table.state_index(s).ok_or_else(|| Error::UnknownState(s.to_string()))?;
            total += &counts[i];
            if a.start.is_none() {
                writeln!(text, "{s}\t{}", counts[i]).unwrap();
            }
        }
        if a.start.is_none() {
            writeln!(text, "total\t{total}").unwrap();
        } else {
            writeln!(text, "{total}").unwrap();
        }
    } else {
        for traj in enumerate_trajectories(&table, &starts, a.steps, a.max_trajectories)? {
            let line: Vec<String> = traj.waypoints.iter().map(|(s, t)| format!("{s}@{t}")).collect();
            writeln!(text, "{}", line.join(" ")).unwrap();
        }
    }
    emit(out, &text)?;
    Ok(Some(hash))
}

fn plan(a: &PlanArgs, out: Option<&str>) -> Result<Option<String>> {
    let (config, robot) = load_config(&a.config)?;
    let (table, table_hash) = load_table(&a.transitions)?;
    let hash = config.content_hash();
    if table_hash != hash {
        eprintln!("warning: transition table was built from a different robot config ({table_hash})");
    }
    let desired = DesiredTrajectory::from_csv(File::open(&a.desired)?)?;
    let start = a
        .start
        .as_deref()
        .map(|s| QuantizedState::parse(s, robot.n_joints()))
        .transpose()?;
    let result = plan_action_sequence(&table, &desired, &robot, start)?;
    if result.target_missed {
        let miss: Vec<String> = result.miss.iter().map(|m| format!("{:.3}", m.to_degrees())).collect();
        eprintln!(
            "warning: final configuration misses the last target by more than one grid step ({} deg)",
            miss.join(", ")
        );
    }
    emit(out, &format!("{}\n", result.to_json()?))?;
    Ok(Some(hash))
}

fn corridor(a: &CorridorArgs, out: Option<&str>) -> Result<()> {
    let ms = MoveSet::parse(&a.move_set)?;
    if ms.dim() != 1 {
        return Err(Error::Domain(format!("move set {} is not one-dimensional", a.move_set)));
    }
    let spec = CorridorSpec::new(vec![a.d], ms)?;
    let text = if a.exact {
        format_biguint(&corridor_count_dp(&spec, &[a.from], &[a.to], a.steps)?)
    } else {
        let c = corridor_count_1d(a.d, a.from, a.to, a.steps)?;
        warn_if_loose(&c);
        c.to_path_count().to_string()
    };
    emit(out, &format!("{text}\n"))
}

fn ndim(a: &NdimArgs, out: Option<&str>) -> Result<()> {
    let spec = CorridorSpec::full(a.d.clone())?;
    let method = match a.method {
        MethodArg::Auto => NdMethod::Auto,
        MethodArg::Factorized => NdMethod::Factorized,
        MethodArg::Direct => NdMethod::Direct,
    };
    let text = if a.exact {
        let n = corridor_count_factorized_exact(&spec, &a.from, &a.to, a.steps)?;
        if a.json {
            serde_json::json!({
                "count": format_biguint(&n),
                "exact": n.to_string(),
                "log10": biguint_log10(&n),
                "method": "exact",
            })
            .to_string()
        } else {
            format_biguint(&n)
        }
    } else {
        let c = corridor_count_nd(&spec, &a.from, &a.to, a.steps, method, a.max_terms)?;
        warn_if_loose(&c.value);
        if a.json {
            serde_json::json!({
                "count": c.value.to_path_count().to_string(),
                "value": c.value.value,
                "sign": c.value.sign,
                "log10": c.value.log10_abs,
                "error_bound": c.value.error_bound(),
                "method": c.method.as_str(),
                "cross_check": c.cross_check,
            })
            .to_string()
        } else {
            c.value.to_path_count().to_string()
        }
    };
    emit(out, &format!("{text}\n"))
}

/// Relative error above which a closed-form count is flagged.
const LOOSE_RELATIVE_ERROR: f64 = 1e-6;

fn warn_if_loose(c: &ClosedForm) {
    let rel = 10f64.powf(c.error_log10 - c.log10_abs);
    if c.sign != 0 && rel > LOOSE_RELATIVE_ERROR {
        eprintln!(
            "warning: floating-point error bound is {:.3e} of the value; use --exact for the exact count",
            rel
        );
    }
}

fn bounds(a: &BoundsArgs, out: Option<&str>) -> Result<Option<String>> {
    let (config, robot) = load_config(&a.config)?;
    let mut text = String::new();
    writeln!(text, "states\t{}", format_biguint(&robot.state_space_size())).unwrap();
    writeln!(text, "actions\t{}", format_biguint(&robot.action_space_size())).unwrap();
    writeln!(
        text,
        "trajectories\t{}",
        format_biguint(&robot.trajectory_upper_bound(a.steps))
    )
    .unwrap();
    emit(out, &text)?;
    Ok(Some(config.content_hash()))
}

fn scaling(a: &ScalingArgs, out: Option<&str>) -> Result<Option<String>> {
    let (config, robot) = load_config(&a.config)?;
    let joint = robot
        .joints
        .get(a.joint)
        .ok_or_else(|| Error::Domain(format!("config has no joint {}", a.joint)))?;
    let dof = parse_range(&a.dof)?;
    let steps = parse_range(&a.steps)?;
    let table = scaling_table(joint, &dof, &steps, a.separation_deg.to_radians())?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    emit(out, std::str::from_utf8(&buf).expect("CSV is UTF-8"))?;
    for &n in &dof {
        let method = if n <= 3 {
            ScalingMethod::ClosedForm
        } else {
            ScalingMethod::Factorized
        };
        let col = table.column(n, method);
        if let (Some(s), Ok(f)) = (secant_slope(&col, 50, 100), fit_asymptotic_slope(&col, 50, 100)) {
            eprintln!(
                "n={n}: slope over m in [50,100] secant {s:.4}, fitted {f:.4} (go {:.4})",
                GO_BRANCHING.log10()
            );
        }
    }
    Ok(Some(config.content_hash()))
}

/// `"a-b"` (inclusive) or a comma-separated list.
pub fn parse_range(text: &str) -> Result<Vec<u32>> {
    let bad = || Error::Parse(format!("range {text:?} must look like 1-6 or 1,2,6"));
    if let Some((lo, hi)) = text.split_once('-') {
        let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}
