//! One-dimensional 3-way corridor counts and the joint-to-corridor mapping.
//!
//! A corridor of parameter `d` has absorbing walls at 0 and `d`; the walker
//! lives on the interior positions `1..=d-1` and may step -1, 0 or +1.

use crate::error::{Error, Result};
use crate::lattice::count::{cos_pi_ratio, sin_pi_ratio, ClosedForm, CompensatedSum};
use crate::lattice::moveset::MoveSet;
use crate::model::JointSpec;

/// Above this log10 kernel magnitude terms are accumulated on a log scale.
pub const LOG_MODE_THRESHOLD: f64 = 280.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CorridorSpec {
    pub d: Vec<i64>,
    pub move_set: MoveSet,
}

impl CorridorSpec {
    pub fn new(d: Vec<i64>, move_set: MoveSet) -> Result<Self> {
        if d.len() != move_set.dim() {
            return Err(Error::Domain(format!(
                "corridor has {} axes, move set has dimension {}",
                d.len(),
                move_set.dim()
            )));
        }
        if let Some(bad) = d.iter().find(|&&dj| dj < 2) {
            return Err(Error::Domain(format!(
                "corridor parameter d = {bad} must be at least 2"
            )));
        }
        Ok(CorridorSpec { d, move_set })
    }

    /// Corridor with the full diagonal move set.
    pub fn full(d: Vec<i64>) -> Result<Self> {
        let n = d.len();
        Self::new(d, MoveSet::full(n)?)
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Checks that `p` is an interior point of the corridor.
    pub fn check_interior(&self, p: &[i64], what: &str) -> Result<()> {
        if p.len() != self.d.len() {
            return Err(Error::Domain(format!(
                "{what} has {} coordinates, corridor has {}",
                p.len(),
                self.d.len()
            )));
        }
        for (j, (&x, &dj)) in p.iter().zip(&self.d).enumerate() {
            if x < 1 || x > dj - 1 {
                return Err(Error::Domain(format!(
                    "{what} coordinate {x} on axis {j} is not strictly between the walls 0 and {dj}"
                )));
            }
        }
        Ok(())
    }
}

/// Closed-form count of `m`-step 3-way corridor walks from `a` to `b`:
/// `(2/d) Σ_{ω=1}^{d-1} sin(πωb/d) [1 + 2cos(πω/d)]^m sin(πωa/d)`.
pub fn corridor_count_1d(d: i64, a: i64, b: i64, m: u32) -> Result<ClosedForm> {
    let spec = CorridorSpec::full(vec![d])?;
    spec.check_interior(&[a], "start")?;
    spec.check_interior(&[b], "end")?;
    let (d, a, b) = (i128::from(d), i128::from(a), i128::from(b));
    let prefactor = 2.0 / d as f64;
    // rounding of each term: trig, m multiplications, prefactor
    let slack = (f64::from(m) + 10.0) * f64::EPSILON;

    if f64::from(m) * 3f64.log10() <= LOG_MODE_THRESHOLD {
        let mut sum = CompensatedSum::default();
        for w in 1..d {
            let kernel = 1.0 + 2.0 * cos_pi_ratio(w, d);
            let term = sin_pi_ratio(w * b, d) * kernel.powi(m as i32) * sin_pi_ratio(w * a, d);
            sum.add(term);
        }
        let value = prefactor * sum.value();
        let err = prefactor * slack * sum.abs_total();
        return Ok(ClosedForm::from_f64(value, err.max(f64::MIN_POSITIVE)));
    }

    // every term is at most 3^m in magnitude; sum the terms scaled by 3^-m
    let scale = f64::from(m) * 3f64.log10();
    let mut sum = CompensatedSum::default();
    for w in 1..d {
        let kernel = 1.0 + 2.0 * cos_pi_ratio(w, d);
        let sines = sin_pi_ratio(w * b, d) * sin_pi_ratio(w * a, d);
        if sines == 0.0 || kernel == 0.0 {
            continue;
        }
        let log_mag = f64::from(m) * kernel.abs().log10() - scale;
        let sign = if kernel < 0.0 && m % 2 == 1 { -1.0 } else { 1.0 };
        sum.add(sign * sines * 10f64.powf(log_mag));
    }
    Ok(scaled_result(sum, scale + prefactor.log10(), slack))
}

/// Builds a [`ClosedForm`] from a sum of terms scaled by `10^-scale`.
pub(crate) fn scaled_result(sum: CompensatedSum, scale: f64, slack: f64) -> ClosedForm {
    let v = sum.value();
    let sign = if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    };
    let log10_abs = if sign == 0 {
        f64::NEG_INFINITY
    } else {
        v.abs().log10() + scale
    };
    let error_log10 = (slack * sum.abs_total()).max(f64::MIN_POSITIVE).log10() + scale;
    ClosedForm::from_log(sign, log10_abs, error_log10)
}

/// How joint angles map onto corridor positions.
#[derive(Debug, Clone, PartialEq)]
pub struct CorridorAxis {
    /// Wall parameter; interior positions are `1..=d-1`.
    pub d: i64,
    /// Corridor index of the grid point at angle 0.
    pub zero_index: i64,
    pub delta_q: f64,
    /// Human-readable description of the anchoring rule.
    pub convention: &'static str,
}

impl CorridorAxis {
    /// Corridor index of angle `q` (radians).
    pub fn index(&self, q: f64) -> Result<i64> {
        if !q.is_finite() {
            return Err(Error::Domain(format!("angle {q} is not finite")));
        }
        let idx = (q / self.delta_q).round() as i64 + self.zero_index;
        if idx < 1 || idx > self.d - 1 {
            return Err(Error::Domain(format!(
                "angle {:.4}° maps to corridor position {idx}, outside the interior 1..={}",
                q.to_degrees(),
                self.d - 1
            )));
        }
        Ok(idx)
    }
}

/// `d = (q_max - q_min)/δq + 1`, center-anchored so angle 0 is interior.
pub fn joint_to_corridor(joint: &JointSpec) -> CorridorAxis {
    let d = joint.grid_span() + 1;
    if d % 2 == 0 {
        CorridorAxis {
            d,
            zero_index: d / 2,
            delta_q: joint.delta_q,
            convention: "even-d: index = round(q/dq) + d/2",
        }
    } else {
        CorridorAxis {
            d,
            zero_index: (d - 1) / 2 + 1,
            delta_q: joint.delta_q,
            convention: "odd-d: index = round(q/dq) + (d-1)/2 + 1",
        }
    }
}

/// `log10(|A|^m / (2m+1)^n)` with `|A|` the product of `action_counts`.
pub fn approx_count_log10(action_counts: &[u64], m: u32, n: u32) -> f64 {
    let log_a: f64 = action_counts.iter().map(|&c| (c as f64).log10()).sum();
    f64::from(m) * log_a - f64::from(n) * (2.0 * f64::from(m) + 1.0).log10()
}
