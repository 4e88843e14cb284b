//! Path count as a function of step count and dimension, with the Go-game
//! and atoms-in-the-universe reference lines.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lattice::corridor::{approx_count_log10, corridor_count_1d, joint_to_corridor};
use crate::lattice::count::biguint_log10;
use crate::lattice::dp::corridor_count_dp;
use crate::lattice::CorridorSpec;
use crate::model::JointSpec;

/// Moves per joint of the 3-way corridor.
pub const MOVES_PER_JOINT: u64 = 3;
pub const GO_BRANCHING: f64 = 361.0;
pub const ATOMS_LOG10: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingMethod {
    /// Product of 1-D closed forms (n ≤ 3).
    ClosedForm,
    /// Exact product of 1-D DP counts.
    Factorized,
    /// `|A|^m / (2m+1)^n`.
    Approx,
    Reference,
}

impl ScalingMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScalingMethod::ClosedForm => "closed_form",
            ScalingMethod::Factorized => "factorized",
            ScalingMethod::Approx => "approx",
            ScalingMethod::Reference => "reference",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Series {
    Dof(u32),
    Go,
    Atoms,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub series: Series,
    /// `None` for rows valid at every step count.
    pub m: Option<u32>,
    /// `None` marks a zero count.
    pub log10: Option<f64>,
    pub method: ScalingMethod,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    /// Corridor start and end index on every axis.
    pub from: i64,
    pub to: i64,
    pub d: i64,
}

impl ScalingTable {
    /// `(m, log10)` points of one series and method, zero counts skipped.
    pub fn column(&self, n: u32, method: ScalingMethod) -> Vec<(u32, f64)> {
        self.rows
            .iter()
            .filter(|r| r.series == Series::Dof(n) && r.method == method)
            .filter_map(|r| Some((r.m?, r.log10?)))
            .collect()
    }

    pub fn get(&self, n: u32, m: u32, method: ScalingMethod) -> Option<&ScalingRow> {
        self.rows
            .iter()
            .find(|r| r.series == Series::Dof(n) && r.m == Some(m) && r.method == method)
    }

    /// Writes `n,m,log10_count,method`; zero counts leave `log10_count` empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "m", "log10_count", "method"])?;
        for r in &self.rows {
            let series = match r.series {
                Series::Dof(n) => n.to_string(),
                Series::Go => "go".into(),
                Series::Atoms => "atoms".into(),
            };
            let m = r.m.map_or_else(|| "*".to_string(), |m| m.to_string());
            let v = r.log10.map_or_else(String::new, |v| format!("{v:.9}"));
            w.write_record([series, m, v, r.method.as_str().to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Builds the table for `n` identical copies of `joint`, moving every axis
/// from angle 0 by `separation` (radians).
pub fn scaling_table(joint: &JointSpec, n_range: &[u32], m_range: &[u32], separation: f64) -> Result<ScalingTable> {
    let steps = separation / joint.delta_q;
    if (steps - steps.round()).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "separation {:.6}° is not a multiple of the grid step {:.6}°",
            separation.to_degrees(),
            joint.delta_q.to_degrees()
        )));
    }
    if n_range.contains(&0) {
        return Err(Error::Domain("degrees of freedom must be at least 1".into()));
    }
    let axis = joint_to_corridor(joint);
    let a = axis.index(0.0)?;
    let b = axis.index(separation)?;
    let spec = CorridorSpec::full(vec![axis.d])?;

    // per-axis counts are shared by every n
    let mut per_axis = Vec::with_capacity(m_range.len());
    for &m in m_range {
        let closed = corridor_count_1d(axis.d, a, b, m)?.to_path_count();
        let exact = corridor_count_dp(&spec, &[a], &[b], m)?;
        per_axis.push((m, closed.log10(), biguint_log10(&exact)));
    }
    let finite = |x: f64| x.is_finite().then_some(x);

    let mut rows = Vec::new();
    for &n in n_range {
        let nf = f64::from(n);
        for &(m, closed, exact) in &per_axis {
            if n <= 3 {
                rows.push(ScalingRow {
                    series: Series::Dof(n),
                    m: Some(m),
                    log10: finite(nf * closed),
                    method: ScalingMethod::ClosedForm,
                });
            } else {
                rows.push(ScalingRow {
                    series: Series::Dof(n),
                    m: Some(m),
                    log10: finite(nf * exact),
                    method: ScalingMethod::Factorized,
                });
                let counts = vec![MOVES_PER_JOINT; n as usize];
                rows.push(ScalingRow {
                    series: Series::Dof(n),
                    m: Some(m),
                    log10: Some(approx_count_log10(&counts, m, n)),
                    method: ScalingMethod::Approx,
                });
            }
        }
    }
    for &m in m_range {
        rows.push(ScalingRow {
            series: Series::Go,
            m: Some(m),
            log10: Some(f64::from(m) * GO_BRANCHING.log10()),
            method: ScalingMethod::Reference,
        });
    }
    rows.push(ScalingRow {
        series: Series::Atoms,
        m: None,
        log10: Some(ATOMS_LOG10),
        method: ScalingMethod::Reference,
    });
    Ok(ScalingTable {
        rows,
        from: a,
        to: b,
        d: axis.d,
    })
}

/// `(y(m1) - y(m0)) / (m1 - m0)` over the points with `m0 ≤ m ≤ m1`,
/// using the first and last such point.
pub fn secant_slope(points: &[(u32, f64)], m0: u32, m1: u32) -> Option<f64> {
    let inside: Vec<_> = points.iter().filter(|(m, _)| (m0..=m1).contains(m)).collect();
    let (first, last) = (inside.first()?, inside.last()?);
    if last.0 == first.0 {
        return None;
    }
    Some((last.1 - first.1) / f64::from(last.0 - first.0))
}

/// Linear growth rate of `y(m)` from a least-squares fit of
/// `c0 + s·m + c1·log10 m + c2/m` over the points with `m0 ≤ m ≤ m1`.
pub fn fit_asymptotic_slope(points: &[(u32, f64)], m0: u32, m1: u32) -> Result<f64> {
    let inside: Vec<(f64, f64)> = points
        .iter()
        .filter(|(m, _)| (m0..=m1).contains(m) && *m > 0)
        .map(|&(m, y)| (f64::from(m), y))
        .collect();
    if inside.len() < 4 {
        return Err(Error::Domain(format!(
            "slope fit needs at least 4 nonzero points in [{m0}, {m1}], got {}",
            inside.len()
        )));
    }
    let x = DMatrix::from_fn(inside.len(), 4, |i, k| {
        let m = inside[i].0;
        match k {
            0 => 1.0,
            1 => m,
            2 => m.log10(),
            _ => 1.0 / m,
        }
    });
    let y = DVector::from_iterator(inside.len(), inside.iter().map(|p| p.1));
    let coef = x
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| Error::NumericalOverflow(format!("slope fit failed: {e}")))?;
    Ok(coef[1])
}
