//! Divided differences and the sign, lower-bound and recurrence properties they
//! enjoy on data that alternates monotonicity between consecutive knots.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::periodic_fn::{ModelError, PeriodicFunctionModel};
use crate::smoothness::{modulus_interval, Resolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DividedDiffError {
    #[error("{knots} knots but {values} values")]
    LengthMismatch { knots: usize, values: usize },
    #[error("knots must be finite and strictly increasing with gaps above 1e-12 of the span")]
    DegenerateKnots,
    #[error("values violate the declared monotone pattern at step {0}")]
    PatternViolation(usize),
    #[error("r = {r} must satisfy 2 <= r <= m = {m}")]
    BadR { r: usize, m: usize },
    #[error("need at least {needed} knots, got {got}")]
    TooFewKnots { needed: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Strictly increasing knots `t_0 < ... < t_m`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KnotSet {
    knots: Vec<f64>,
    min_gap: f64,
}

impl KnotSet {
    pub fn new(knots: Vec<f64>) -> Result<Self, DividedDiffError> {
        if knots.is_empty() || knots.iter().any(|t| !t.is_finite()) {
            return Err(DividedDiffError::DegenerateKnots);
        }
        let span = knots[knots.len() - 1] - knots[0];
        let min_gap = knots.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        if knots.len() > 1 && !(min_gap > 1e-12 * span) {
            return Err(DividedDiffError::DegenerateKnots);
        }
        Ok(KnotSet { knots, min_gap })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// The order `m` (one less than the number of knots).
    pub fn m(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    pub fn span(&self) -> f64 {
        self.knots[self.knots.len() - 1] - self.knots[0]
    }
}

/// `[t_0, ..., t_m; g]` by the Newton recurrence.
pub fn divided_difference(knots: &KnotSet, values: &[f64]) -> Result<f64, DividedDiffError> {
    if values.len() != knots.knots.len() {
        return Err(DividedDiffError::LengthMismatch {
            knots: knots.knots.len(),
            values: values.len(),
        });
    }
    Ok(newton_top(&knots.knots, values))
}

fn newton_top(t: &[f64], values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    let m = t.len() - 1;
    for level in 1..=m {
        for i in (level..=m).rev() {
            v[i] = (v[i] - v[i - 1]) / (t[i] - t[i - level]);
        }
    }
    v[m]
}

/// Rounding scale of a divided difference: `Σ |g(t_i)| / Π_{j≠i} |t_i - t_j|`.
pub fn magnitude_scale(t: &[f64], values: &[f64]) -> f64 {
    (0..t.len())
        .map(|i| {
            let denom: f64 = (0..t.len()).filter(|&j| j != i).map(|j| (t[i] - t[j]).abs()).product();
            values[i].abs() / denom
        })
        .sum()
}

/// Alternating monotonicity of the data between consecutive knots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MonotonePattern {
    /// `(-1)^{m-i} (g(t_i) - g(t_{i-1})) >= 0` for all `i`.
    A,
    /// The reverse inequality.
    B,
}

impl MonotonePattern {
    fn sign(self) -> f64 {
        match self {
            MonotonePattern::A => 1.0,
            MonotonePattern::B => -1.0,
        }
    }

    /// Rejects data whose signed steps fall below `-1e-12 · max |g|`.
    pub fn validate(self, values: &[f64]) -> Result<(), DividedDiffError> {
        let m = values.len().saturating_sub(1);
        let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 1..=m {
            let alt = if (m - i).is_multiple_of(2) { 1.0 } else { -1.0 };
            if self.sign() * alt * (values[i] - values[i - 1]) < -1e-12 * scale {
                return Err(DividedDiffError::PatternViolation(i));
            }
        }
        Ok(())
    }

    /// Which pattern (if any) the data follows; constant data follows both and reports `A`.
    pub fn detect(values: &[f64]) -> Option<Self> {
        [MonotonePattern::A, MonotonePattern::B]
            .into_iter()
            .find(|p| p.validate(values).is_ok())
    }
}

fn checked(knots: &KnotSet, values: &[f64], pattern: MonotonePattern) -> Result<f64, DividedDiffError> {
    let dd = divided_difference(knots, values)?;
    pattern.validate(values)?;
    Ok(dd)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignReport {
    pub holds: bool,
    pub value: f64,
}

/// The divided difference has the sign of the pattern.
pub fn check_sign(knots: &KnotSet, values: &[f64], pattern: MonotonePattern) -> Result<SignReport, DividedDiffError> {
    let value = checked(knots, values, pattern)?;
    let tol = 1e-12 * magnitude_scale(&knots.knots, values);
    Ok(SignReport {
        holds: pattern.sign() * value >= -tol,
        value,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecurrenceReport {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

/// `|[t_0..t_m]| = (|[t_1..t_m]| + |[t_0..t_{m-1}]|) / (t_m - t_0)`.
pub fn check_recurrence(
    knots: &KnotSet,
    values: &[f64],
    pattern: MonotonePattern,
) -> Result<RecurrenceReport, DividedDiffError> {
    let m = knots.m();
    if m < 2 {
        return Err(DividedDiffError::TooFewKnots { needed: 3, got: m + 1 });
    }
    let lhs = checked(knots, values, pattern)?.abs();
    let t = &knots.knots;
    let right = newton_top(&t[1..], &values[1..]).abs();
    let left = newton_top(&t[..m], &values[..m]).abs();
    let rhs = (right + left) / (t[m] - t[0]);
    Ok(RecurrenceReport {
        lhs,
        rhs,
        rel_err: (lhs - rhs).abs() / (1.0 + lhs),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub holds: bool,
    /// Left side minus right side.
    pub slack: f64,
}

/// `(t_m - t_0)^m |[t_0..t_m]| >= max g - min g`.
pub fn check_lower_bound(
    knots: &KnotSet,
    values: &[f64],
    pattern: MonotonePattern,
) -> Result<BoundReport, DividedDiffError> {
    let dd = checked(knots, values, pattern)?;
    let lhs = knots.span().powi(knots.m() as i32) * dd.abs();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let slack = lhs - (max - min);
    Ok(BoundReport {
        holds: slack >= -1e-10 * scale,
        slack,
    })
}

/// `|[t_0..t_m]| Π_{i=r}^m (t_i - t_0) >= |[t_1..t_r]|`.
pub fn check_product_bound(
    knots: &KnotSet,
    values: &[f64],
    pattern: MonotonePattern,
    r: usize,
) -> Result<BoundReport, DividedDiffError> {
    let m = knots.m();
    if r < 2 || r > m {
        return Err(DividedDiffError::BadR { r, m });
    }
    let dd = checked(knots, values, pattern)?;
    let t = &knots.knots;
    let prod: f64 = (r..=m).map(|i| t[i] - t[0]).product();
    let lhs = dd.abs() * prod;
    let rhs = newton_top(&t[1..=r], &values[1..=r]).abs();
    let scale = magnitude_scale(&t[1..=r], &values[1..=r]);
    let slack = lhs - rhs;
    Ok(BoundReport {
        holds: slack >= -1e-10 * scale,
        slack,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DlReport {
    pub lhs: f64,
    pub rhs_without_c: f64,
    /// Empirical constant `lhs / rhs_without_c`; zero when both sides vanish.
    pub ratio: f64,
}

/// Both sides of `|[x_0..x_m; f]| <= c/l! · ω_{m-l}(f^{(l)}, b-a; [a,b]) · Σ_{j>=l} 1/Π_{i>=l, i≠j} |x_j - x_i|`.
///
/// `points` are distinct but may come in any order; the sum depends on it.
pub fn dl_bound(
    f: &PeriodicFunctionModel,
    l: usize,
    points: &[f64],
    a: f64,
    b: f64,
    resolution: &Resolution,
) -> Result<DlReport, DividedDiffError> {
    let m = points.len().saturating_sub(1);
    if points.len() < 2 || l >= m {
        return Err(DividedDiffError::TooFewKnots {
            needed: l + 2,
            got: points.len(),
        });
    }
    let fl = f.derivative_fn(l)?;
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[i].partial_cmp(&points[j]).unwrap());
    let sorted: Vec<f64> = order.iter().map(|&i| points[i]).collect();
    let knots = KnotSet::new(sorted.clone())?;
    let values: Vec<f64> = sorted.iter().map(|&x| f.value(x)).collect();
    let lhs = divided_difference(&knots, &values)?.abs();
    let omega = modulus_interval(&fl, m - l, b - a, a, b, resolution)
        .map(|e| e.value)
        .unwrap_or(0.0);
    let factorial: f64 = (1..=l).map(|i| i as f64).product();
    let sum: f64 = (l..=m)
        .map(|j| {
            let p: f64 = (l..=m)
                .filter(|&i| i != j)
                .map(|i| (points[j] - points[i]).abs())
                .product();
            1.0 / p
        })
        .sum();
    let rhs_without_c = omega * sum / factorial;
    let ratio = if lhs == 0.0 {
        0.0
    } else if rhs_without_c == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs_without_c
    };
    Ok(DlReport {
        lhs,
        rhs_without_c,
        ratio,
    })
}

/// Random strictly increasing knots in `[0, 1]` (gaps at least `0.02 / m`)
/// with data following `pattern`.
pub fn random_pattern_instance(rng: &mut impl Rng, m: usize, pattern: MonotonePattern) -> (KnotSet, Vec<f64>) {
    let gaps: Vec<f64> = (0..m).map(|_| rng.random_range(0.02..1.0)).collect();
    let total: f64 = gaps.iter().sum();
    let mut knots = vec![0.0];
    for g in &gaps {
        knots.push(knots.last().unwrap() + g / total);
    }
    let mut values = vec![rng.random_range(-1.0..1.0)];
    for i in 1..=m {
        let alt = if (m - i).is_multiple_of(2) { 1.0 } else { -1.0 };
        let step: f64 = rng.random_range(0.0..2.0);
        values.push(values[i - 1] + pattern.sign() * alt * step);
    }
    (KnotSet::new(knots).expect("gaps are bounded below"), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ks(t: &[f64]) -> KnotSet {
        KnotSet::new(t.to_vec()).unwrap()
    }

    #[test]
    fn spec_examples() {
        let t = ks(&[0.0, 1.0, 2.0]);
        assert_relative_eq!(divided_difference(&t, &[0.0, 1.0, 4.0]).unwrap(), 1.0);
        let t = ks(&[1.0, 2.0, 4.0]);
        assert_relative_eq!(
            divided_difference(&t, &[1.0, 3.0, 2.0]).unwrap(),
            -5.0 / 6.0,
            epsilon = 1e-15
        );
        assert_eq!(divided_difference(&ks(&[0.3]), &[7.0]).unwrap(), 7.0);
        assert!(matches!(
            divided_difference(&ks(&[0.0, 1.0]), &[1.0]),
            Err(DividedDiffError::LengthMismatch { .. })
        ));
        assert_eq!(KnotSet::new(vec![0.0, 0.0]), Err(DividedDiffError::DegenerateKnots));
    }

    #[test]
    fn pattern_checks() {
        let t = ks(&[0.0, 1.0, 2.0]);
        let r = check_sign(&t, &[0.0, -1.0, 0.0], MonotonePattern::A).unwrap();
        assert!(r.holds);
        assert_relative_eq!(r.value, 1.0);
        let c = check_sign(&t, &[2.0, 2.0, 2.0], MonotonePattern::B).unwrap();
        assert!(c.holds && c.value == 0.0);
        assert!(matches!(
            check_sign(&t, &[0.0, 1.0, 0.0], MonotonePattern::A),
            Err(DividedDiffError::PatternViolation(1))
        ));
        let lb = check_lower_bound(&t, &[0.0, -1.0, 0.0], MonotonePattern::A).unwrap();
        assert!(lb.holds);
        assert_relative_eq!(lb.slack, 3.0);
        assert!(MonotonePattern::detect(&[0.0, 1.0, 4.0]).is_none());
        let zero = check_recurrence(&t, &[3.0; 3], MonotonePattern::A).unwrap();
        assert_eq!((zero.lhs, zero.rhs), (0.0, 0.0));
        assert!(matches!(
            check_product_bound(&t, &[0.0, -1.0, 0.0], MonotonePattern::A, 1),
            Err(DividedDiffError::BadR { .. })
        ));
    }

    #[test]
    fn dl_bound_vanishes_for_low_degree() {
        let cubic = PeriodicFunctionModel::from_jet("cubic", 4, |x| x.powi(2).scale(3.0) + x.clone());
        let r = dl_bound(&cubic, 1, &[0.0, 0.3, 0.7, 1.0], 0.0, 1.0, &Resolution::default()).unwrap();
        assert!(r.lhs < 1e-12);
    }
}
