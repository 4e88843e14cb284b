use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

/// Largest magnitude that is rounded back to an integer count.
const ROUNDING_LIMIT: f64 = 9.223_372_036_854_776e18; // 2^63

/// A path count: exact when known, otherwise a base-10 logarithm.
#[derive(Debug, Clone, PartialEq)]
pub enum PathCount {
    Exact(BigUint),
    Approx { log10: f64 },
}

impl PathCount {
    pub fn zero() -> Self {
        PathCount::Exact(BigUint::zero())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, PathCount::Exact(n) if n.is_zero())
    }

    /// `-inf` for a zero count.
    pub fn log10(&self) -> f64 {
        match self {
            PathCount::Exact(n) => biguint_log10(n),
            PathCount::Approx { log10 } => *log10,
        }
    }

    pub fn exact(&self) -> Option<&BigUint> {
        match self {
            PathCount::Exact(n) => Some(n),
            PathCount::Approx { .. } => None,
        }
    }
}

impl fmt::Display for PathCount {
    /// Integers up to 10^18 print in full, larger counts as `D.DDDDDe+XX`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathCount::Exact(n) => f.write_str(&format_biguint(n)),
            PathCount::Approx { log10 } => f.write_str(&format_log10(*log10)),
        }
    }
}

pub fn format_biguint(n: &BigUint) -> String {
    let digits = n.to_str_radix(10);
    if digits.len() <= 18 || digits == format!("1{}", "0".repeat(18)) {
        return digits;
    }
    // round to 6 significant digits using the decimal expansion
    let exponent = digits.len() as i64 - 1;
    let head: u64 = digits[..6].parse().expect("digits");
    let next = digits.as_bytes()[6] - b'0';
    let mut mantissa = head + u64::from(next >= 5);
    let mut exponent = exponent;
    if mantissa >= 1_000_000 {
        mantissa /= 10;
        exponent += 1;
    }
    let m = mantissa.to_string();
    format!("{}.{}e+{:02}", &m[..1], &m[1..], exponent)
}

/// Formats `10^log10` with six significant digits.
pub fn format_log10(log10: f64) -> String {
    if log10 == f64::NEG_INFINITY {
        return "0".into();
    }
    if !log10.is_finite() {
        return "inf".into();
    }
    let mut exponent = log10.floor();
    let mut mantissa = 10f64.powf(log10 - exponent);
    let mut scaled = (mantissa * 1e5).round();
    if scaled >= 1e6 {
        exponent += 1.0;
        mantissa /= 10.0;
        scaled = (mantissa * 1e5).round();
    }
    let m = format!("{:06}", scaled as u64);
    let sign = if exponent < 0.0 { '-' } else { '+' };
    format!("{}.{}e{}{:02}", &m[..1], &m[1..], sign, exponent.abs() as i64)
}

pub fn biguint_log10(n: &BigUint) -> f64 {
    if n.is_zero() {
        return f64::NEG_INFINITY;
    }
    if let Some(x) = n.to_f64().filter(|x| x.is_finite()) {
        return x.log10();
    }
    let bits = n.bits();
    let shift = bits - 64;
    let top = (n >> shift).to_f64().expect("64 bits fit");
    top.log10() + shift as f64 * std::f64::consts::LOG10_2
}

/// Result of a floating-point closed-form evaluation.
///
/// The value is kept as sign and log-magnitude so that counts beyond the
/// f64 range stay representable; `value` carries the raw float when it is
/// finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub sign: i8,
    pub log10_abs: f64,
    pub value: Option<f64>,
    /// log10 of the a priori absolute error bound.
    pub error_log10: f64,
}

impl ClosedForm {
    pub fn from_f64(value: f64, error_bound: f64) -> Self {
        ClosedForm {
            sign: sign_of(value),
            log10_abs: if value == 0.0 {
                f64::NEG_INFINITY
            } else {
                value.abs().log10()
            },
            value: Some(value),
            error_log10: error_bound.log10(),
        }
    }

    pub fn from_log(sign: i8, log10_abs: f64, error_log10: f64) -> Self {
        let raw = if sign == 0 {
            0.0
        } else {
            f64::from(sign) * 10f64.powf(log10_abs)
        };
        ClosedForm {
            sign,
            log10_abs,
            value: raw.is_finite().then_some(raw),
            error_log10,
        }
    }

    pub fn error_bound(&self) -> f64 {
        10f64.powf(self.error_log10)
    }

    /// Nearest non-negative integer when the magnitude is at most 2^63.
    pub fn rounded(&self) -> Option<u64> {
        let v = self.value?;
        if v.abs() > ROUNDING_LIMIT {
            return None;
        }
        if v <= 0.0 {
            return Some(0);
        }
        Some(v.round() as u64)
    }

    /// Raw value minus its rounded integer.
    pub fn residual(&self) -> Option<f64> {
        Some(self.value? - self.rounded()? as f64)
    }

    /// Exact when the rounding is unambiguous, logarithmic otherwise.
    pub fn to_path_count(&self) -> PathCount {
        if self.sign <= 0 && self.error_log10 >= self.log10_abs {
            return PathCount::zero();
        }
        if let Some(n) = self.rounded() {
            if self.error_bound() < 0.5 {
                return PathCount::Exact(BigUint::from(n));
            }
        }
        if self.sign <= 0 {
            return PathCount::zero();
        }
        PathCount::Approx { log10: self.log10_abs }
    }

    /// Product of several evaluations; relative errors add to first order.
    pub fn product(items: &[ClosedForm]) -> ClosedForm {
        let sign = items.iter().map(|c| c.sign).product::<i8>();
        if sign == 0 {
            let err = items.iter().map(|c| c.error_log10).fold(f64::NEG_INFINITY, f64::max);
            return ClosedForm {
                sign: 0,
                log10_abs: f64::NEG_INFINITY,
                value: Some(0.0),
                error_log10: err,
            };
        }
        let log10_abs: f64 = items.iter().map(|c| c.log10_abs).sum();
        let rel: f64 = items.iter().map(|c| 10f64.powf(c.error_log10 - c.log10_abs)).sum();
        let value = items
            .iter()
            .map(|c| c.value)
            .try_fold(1.0, |acc, v| v.map(|v| acc * v))
            .filter(|v: &f64| v.is_finite());
        ClosedForm {
            sign,
            log10_abs,
            value,
            error_log10: log10_abs + rel.log10(),
        }
    }
}

fn sign_of(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
    abs: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
        self.abs += x.abs();
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        let abs = self.abs + other.abs;
        self.add(other.sum);
        self.add(other.carry);
        self.abs = abs;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }

    /// Sum of absolute values of the terms.
    pub fn abs_total(&self) -> f64 {
        self.abs
    }
}

/// `sin(pi * num / den)` with exact reduction of the argument.
pub(crate) fn sin_pi_ratio(num: i128, den: i128) -> f64 {
    debug_assert!(den > 0);
    let period = 2 * den;
    let r = num.rem_euclid(period);
    if r == 0 || r == den {
        return 0.0;
    }
    let (r, sign) = if r > den { (r - den, -1.0) } else { (r, 1.0) };
    // sin(pi - x) = sin(x)
    let r = r.min(den - r);
    sign * (std::f64::consts::PI * (r as f64 / den as f64)).sin()
}

/// `cos(pi * num / den)`.
pub(crate) fn cos_pi_ratio(num: i128, den: i128) -> f64 {
    sin_pi_ratio(2 * num + den, 2 * den)
}
