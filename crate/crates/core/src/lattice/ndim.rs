//! n-dimensional corridor counts: the spectral sum over frequency vectors
//! and the factorized product of one-dimensional counts.

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::corridor::{corridor_count_1d, scaled_result, CorridorSpec, LOG_MODE_THRESHOLD};
use crate::lattice::count::{cos_pi_ratio, sin_pi_ratio, ClosedForm, CompensatedSum};
use crate::lattice::dp::corridor_count_dp;
use crate::lattice::moveset::MoveSet;

/// Default cap on the number of frequency vectors in a direct evaluation.
pub const MAX_DIRECT_TERMS: u64 = 20_000_000;

/// Relative agreement required between the direct and factorized sums.
pub const CROSS_CHECK_TOLERANCE: f64 = 1e-6;

/// `T̂(ω) = Σ_{μ∈M⁺} ∏_j (2cos(πω_j/d_j))^{μ_j}`.
pub fn t_hat(omega: &[i64], d: &[i64], ms: &MoveSet) -> Result<f64> {
    if omega.len() != d.len() || ms.dim() != d.len() {
        return Err(Error::Domain(format!(
            "dimension mismatch: omega {}, d {}, move set {}",
            omega.len(),
            d.len(),
            ms.dim()
        )));
    }
    let c: Vec<f64> = omega
        .iter()
        .zip(d)
        .map(|(&w, &dj)| 2.0 * cos_pi_ratio(i128::from(w), i128::from(dj)))
        .collect();
    Ok(t_hat_from_cos(&c, &ms.nonnegative_subset()))
}

/// `T̂` for the full move set: `∏_j (1 + 2cos(πω_j/d_j))`.
pub fn t_hat_full(omega: &[i64], d: &[i64]) -> f64 {
    omega
        .iter()
        .zip(d)
        .map(|(&w, &dj)| 1.0 + 2.0 * cos_pi_ratio(i128::from(w), i128::from(dj)))
        .product()
}

// `two_cos[j]` holds 2cos(πω_j/d_j); `plus` is M⁺.
fn t_hat_from_cos(two_cos: &[f64], plus: &MoveSet) -> f64 {
    plus.moves()
        .iter()
        .map(|mu| {
            mu.iter()
                .zip(two_cos)
                .map(|(&k, &c)| if k == 0 { 1.0 } else { c })
                .product::<f64>()
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NdMethod {
    /// Factorized product for the full move set, direct sum otherwise.
    Auto,
    Factorized,
    Direct,
}

impl NdMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            NdMethod::Auto => "auto",
            NdMethod::Factorized => "factorized",
            NdMethod::Direct => "direct",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NdCount {
    pub value: ClosedForm,
    /// Method actually used for `value`.
    pub method: NdMethod,
    /// Relative difference between the direct sum and the factorized
    /// product, when both were evaluated.
    pub cross_check: Option<f64>,
}

/// Product of the per-axis 1-D closed forms. Requires the full move set.
pub fn corridor_count_factorized(spec: &CorridorSpec, a: &[i64], b: &[i64], m: u32) -> Result<ClosedForm> {
    require_full(spec)?;
    spec.check_interior(a, "start")?;
    spec.check_interior(b, "end")?;
    let axes = spec
        .d
        .iter()
        .zip(a.iter().zip(b))
        .map(|(&d, (&aj, &bj))| corridor_count_1d(d, aj, bj, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClosedForm::product(&axes))
}

/// Exact count for the full move set as the product of per-axis DP counts.
pub fn corridor_count_factorized_exact(spec: &CorridorSpec, a: &[i64], b: &[i64], m: u32) -> Result<BigUint> {
    require_full(spec)?;
    spec.check_interior(a, "start")?;
    spec.check_interior(b, "end")?;
    let mut out = BigUint::from(1u32);
    for j in 0..spec.dim() {
        let axis = CorridorSpec::full(vec![spec.d[j]])?;
        out *= corridor_count_dp(&axis, &[a[j]], &[b[j]], m)?;
    }
    Ok(out)
}

fn require_full(spec: &CorridorSpec) -> Result<()> {
    if spec.move_set.is_full() {
        Ok(())
    } else {
        Err(Error::Domain(
            "factorized evaluation needs the full diagonal move set".into(),
        ))
    }
}

/// Direct evaluation of the n-D spectral sum over ω_j ∈ [-d_j+1, d_j]:
/// prefactor `(-1)^{n/2}/∏d_j` with `cos(π Σ ω_j b_j/d_j)` for even n,
/// `(-1)^{(n-1)/2}/∏d_j` with `sin(π Σ ω_j b_j/d_j)` for odd n.
pub fn corridor_count_nd_direct(
    spec: &CorridorSpec,
    a: &[i64],
    b: &[i64],
    m: u32,
    max_terms: u64,
) -> Result<ClosedForm> {
    spec.check_interior(a, "start")?;
    spec.check_interior(b, "end")?;
    let n = spec.dim();
    let terms = spec
        .d
        .iter()
        .try_fold(1u64, |acc, &dj| acc.checked_mul(2 * dj as u64))
        .unwrap_or(u64::MAX);
    if terms > max_terms {
        return Err(Error::ResourceLimit(format!(
            "direct evaluation needs {terms} terms, limit is {max_terms}"
        )));
    }

    let plus = spec.move_set.nonnegative_subset();
    // |T̂| ≤ Σ_{μ∈M⁺} 2^{|μ|}
    let kernel_bound: f64 = plus
        .moves()
        .iter()
        .map(|mu| 2f64.powi(mu.iter().map(|&k| i32::from(k)).sum()))
        .sum();
    let scale = if f64::from(m) * kernel_bound.log10() > LOG_MODE_THRESHOLD {
        f64::from(m) * kernel_bound.log10()
    } else {
        0.0
    };

    // per-axis tables indexed by ω_j + d_j - 1
    let ranges: Vec<Vec<i64>> = spec.d.iter().map(|&dj| (-dj + 1..=dj).collect()).collect();
    let sin_a: Vec<Vec<f64>> = ranges
        .iter()
        .zip(spec.d.iter().zip(a))
        .map(|(r, (&dj, &aj))| {
            r.iter()
                .map(|&w| sin_pi_ratio(i128::from(w * aj), i128::from(dj)))
                .collect()
        })
        .collect();
    let two_cos: Vec<Vec<f64>> = ranges
        .iter()
        .zip(&spec.d)
        .map(|(r, &dj)| {
            r.iter()
                .map(|&w| 2.0 * cos_pi_ratio(i128::from(w), i128::from(dj)))
                .collect()
        })
        .collect();
    // π Σ ω_j b_j / d_j = π N / L with L = lcm(d)
    let lcm = spec.d.iter().fold(1i128, |acc, &dj| lcm(acc, i128::from(dj)));
    let b_weight: Vec<i128> = spec
        .d
        .iter()
        .zip(b)
        .map(|(&dj, &bj)| i128::from(bj) * (lcm / i128::from(dj)))
        .collect();
    let even = n.is_multiple_of(2);
    let full = spec.move_set.is_full();

    let sizes: Vec<usize> = ranges.iter().map(|r| r.len()).collect();
    let inner: usize = sizes[1..].iter().product();
    let partials: Vec<CompensatedSum> = (0..sizes[0])
        .into_par_iter()
        .map(|i0| {
            let mut sum = CompensatedSum::default();
            if sin_a[0][i0] == 0.0 {
                return sum;
            }
            let mut idx = vec![0usize; n];
            idx[0] = i0;
            let mut c = vec![0.0; n];
            for _ in 0..inner {
                let mut sines = 1.0;
                let mut num: i128 = 0;
                for j in 0..n {
                    sines *= sin_a[j][idx[j]];
                    c[j] = two_cos[j][idx[j]];
                    num += ranges[j][idx[j]] as i128 * b_weight[j];
                }
                if sines != 0.0 {
                    let kernel = if full {
                        c.iter().map(|x| 1.0 + x).product()
                    } else {
                        t_hat_from_cos(&c, &plus)
                    };
                    let b_term = if even {
                        cos_pi_ratio(num, lcm)
                    } else {
                        sin_pi_ratio(num, lcm)
                    };
                    let k = if scale > 0.0 {
                        power_scaled(kernel, m, scale)
                    } else {
                        kernel.powi(m as i32)
                    };
                    sum.add(b_term * k * sines);
                }
                for j in (1..n).rev() {
                    idx[j] += 1;
                    if idx[j] < sizes[j] {
                        break;
                    }
                    idx[j] = 0;
                }
            }
            sum
        })
        .collect();
    // ordered reduction keeps the result independent of the worker count
    let mut total = CompensatedSum::default();
    for p in &partials {
        total.merge(p);
    }

    let half = if even { n / 2 } else { (n - 1) / 2 };
    let sign = if half % 2 == 0 { 1.0 } else { -1.0 };
    let prod_d: f64 = spec.d.iter().map(|&dj| dj as f64).product();
    let slack = (f64::from(m) + 4.0 * n as f64 + 10.0) * f64::EPSILON;
    let mut signed = CompensatedSum::default();
    signed.add(sign * total.value());
    let mut out = scaled_result(signed, scale - prod_d.log10(), 0.0);
    let err_log = (slack * total.abs_total()).max(f64::MIN_POSITIVE).log10() + scale - prod_d.log10();
    out.error_log10 = err_log;
    Ok(out)
}

fn power_scaled(kernel: f64, m: u32, scale: f64) -> f64 {
    if kernel == 0.0 {
        return 0.0;
    }
    let mag = 10f64.powf(f64::from(m) * kernel.abs().log10() - scale);
    if kernel < 0.0 && m % 2 == 1 {
        -mag
    } else {
        mag
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: i128, b: i128) -> i128 {
    a / gcd(a, b) * b
}

/// n-D closed-form count. With the full move set and the direct method the
/// factorized product is evaluated too and the two must agree within
/// [`CROSS_CHECK_TOLERANCE`] or their combined error bounds.
pub fn corridor_count_nd(
    spec: &CorridorSpec,
    a: &[i64],
    b: &[i64],
    m: u32,
    method: NdMethod,
    max_terms: u64,
) -> Result<NdCount> {
    let full = spec.move_set.is_full();
    let method = match method {
        NdMethod::Auto if full => NdMethod::Factorized,
        NdMethod::Auto => NdMethod::Direct,
        other => other,
    };
    match method {
        NdMethod::Factorized => Ok(NdCount {
            value: corridor_count_factorized(spec, a, b, m)?,
            method,
            cross_check: None,
        }),
        _ => {
            let direct = corridor_count_nd_direct(spec, a, b, m, max_terms)?;
            let cross_check = if full {
                let fact = corridor_count_factorized(spec, a, b, m)?;
                let (dv, fv) = (signed_value(&direct), signed_value(&fact));
                let diff = (dv - fv).abs();
                let rel = if fv == 0.0 { diff } else { diff / fv.abs() };
                let allowed = direct.error_bound() + fact.error_bound();
                if rel > CROSS_CHECK_TOLERANCE && diff > allowed {
                    return Err(Error::NumericalOverflow(format!(
                        "direct sum {dv:e} and factorized product {fv:e} disagree beyond the error bound {allowed:e}"
                    )));
                }
                Some(rel)
            } else {
                None
            };
            Ok(NdCount {
                value: direct,
                method,
                cross_check,
            })
        }
    }
}

fn signed_value(c: &ClosedForm) -> f64 {
    c.value.unwrap_or(f64::from(c.sign) * 10f64.powf(c.log10_abs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;
    use rand::{Rng, SeedableRng};

    #[test]
    fn t_hat_values() {
        let ms = MoveSet::full(3).unwrap();
        assert!((t_hat(&[0, 0, 0], &[7, 8, 9], &ms).unwrap() - 27.0).abs() < 1e-12);
        let one = MoveSet::full(1).unwrap();
        let c = (std::f64::consts::PI * 2.0 / 7.0).cos();
        assert!((t_hat(&[2], &[7], &one).unwrap() - (1.0 + 2.0 * c)).abs() < 1e-14);
        assert!(t_hat(&[1, 2], &[7], &one).is_err());
    }

    #[test]
    fn t_hat_factorizes_for_full_set() {
        let ms = MoveSet::full(2).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let d = [rng.gen_range(2..40), rng.gen_range(2..40)];
            let w = [rng.gen_range(-d[0] + 1..=d[0]), rng.gen_range(-d[1] + 1..=d[1])];
            let direct = t_hat(&w, &d, &ms).unwrap();
            assert!((direct - t_hat_full(&w, &d)).abs() < 1e-12);
        }
    }

    #[test]
    fn one_dimension_reduces_to_1d() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..50 {
            let d = rng.gen_range(3..30);
            let a = rng.gen_range(1..d);
            let b = rng.gen_range(1..d);
            let m = rng.gen_range(0..40);
            let spec = CorridorSpec::full(vec![d]).unwrap();
            let nd = corridor_count_nd_direct(&spec, &[a], &[b], m, MAX_DIRECT_TERMS).unwrap();
            let one = corridor_count_1d(d, a, b, m).unwrap();
            let (x, y) = (nd.value.unwrap(), one.value.unwrap());
            assert!(
                (x - y).abs() <= 1e-9 * y.abs().max(1.0),
                "d={d} a={a} b={b} m={m}: {x} vs {y}"
            );
        }
    }

    #[test]
    fn two_dimensions_match_dp() {
        let spec = CorridorSpec::full(vec![6, 6]).unwrap();
        let nd = corridor_count_nd(&spec, &[2, 3], &[3, 3], 5, NdMethod::Direct, MAX_DIRECT_TERMS).unwrap();
        let dp = corridor_count_dp(&spec, &[2, 3], &[3, 3], 5).unwrap();
        assert_eq!(nd.value.rounded(), dp.to_u64());
        assert!(nd.cross_check.unwrap() < 1e-9);
    }

    #[test]
    fn three_dimensions_match_dp() {
        let spec = CorridorSpec::full(vec![5, 7, 4]).unwrap();
        for m in 0..8 {
            let nd = corridor_count_nd(&spec, &[2, 3, 1], &[3, 5, 2], m, NdMethod::Direct, MAX_DIRECT_TERMS).unwrap();
            let dp = corridor_count_dp(&spec, &[2, 3, 1], &[3, 5, 2], m).unwrap();
            assert_eq!(nd.value.rounded(), dp.to_u64(), "m={m}");
        }
    }

    #[test]
    fn partial_move_set_matches_dp() {
        // non-full sets take the direct path with no factorized cross-check
        let ms = MoveSet::new(2, vec![vec![0, 0], vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]]).unwrap();
        let spec = CorridorSpec::new(vec![5, 6], ms).unwrap();
        let dp = corridor_count_dp(&spec, &[2, 2], &[3, 4], 4).unwrap();
        assert!(dp > BigUint::from(0u32));
        assert!(corridor_count_factorized(&spec, &[2, 2], &[3, 4], 4).is_err());
        let nd = corridor_count_nd(&spec, &[2, 2], &[3, 4], 4, NdMethod::Auto, MAX_DIRECT_TERMS).unwrap();
        assert_eq!(nd.method, NdMethod::Direct);
        assert!(nd.cross_check.is_none());
    }

    #[test]
    fn example_two_factorized() {
        let spec = CorridorSpec::full(vec![136; 3]).unwrap();
        let (a, b) = ([68, 68, 68], [88, 58, 108]);
        let exact = corridor_count_factorized_exact(&spec, &a, &b, 50).unwrap();
        assert_eq!(
            exact.to_string(),
            "64020112650274036323921763695686899486133281580070000"
        );
        let fast = corridor_count_nd(&spec, &a, &b, 50, NdMethod::Auto, MAX_DIRECT_TERMS).unwrap();
        // the Δ=40 axis cancels ~13 digits; the stated bound must cover the gap
        let truth = exact.to_f64().unwrap();
        let gap = (fast.value.value.unwrap() - truth).abs();
        assert!(gap <= fast.value.error_bound(), "{gap} {:?}", fast.value);
        assert!(gap / truth < 1e-3);
    }

    #[test]
    fn term_budget() {
        let spec = CorridorSpec::full(vec![136; 3]).unwrap();
        let r = corridor_count_nd_direct(&spec, &[68; 3], &[88, 58, 108], 50, MAX_DIRECT_TERMS);
        assert!(matches!(r, Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn log_mode_direct() {
        // m log10 9 > 280 forces scaled accumulation in two dimensions
        let spec = CorridorSpec::full(vec![8, 9]).unwrap();
        let direct = corridor_count_nd_direct(&spec, &[3, 4], &[5, 2], 300, MAX_DIRECT_TERMS).unwrap();
        let fact = corridor_count_factorized(&spec, &[3, 4], &[5, 2], 300).unwrap();
        assert_eq!(direct.sign, 1);
        assert!((direct.log10_abs - fact.log10_abs).abs() < 1e-9);
    }
}
