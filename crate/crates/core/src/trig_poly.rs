//! Trigonometric polynomials, extrema cycles and the comonotonicity test.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrigError {
    #[error("degree bound must be at least 1")]
    ZeroDegreeBound,
    #[error("expected {expected} cosine and sine coefficients, got {cos} and {sin}")]
    CoefficientLength { expected: usize, cos: usize, sin: usize },
    #[error("coefficients must be finite")]
    NonFinite,
    #[error("zero polynomial has no Bernstein ratio")]
    ZeroPolynomial,
    #[error("grid of {grid} points is too coarse for degree bound {n} (need at least {need})")]
    GridTooCoarse { grid: usize, n: usize, need: usize },
    #[error("an extrema cycle needs an even, positive number of points, got {0}")]
    OddCycle(usize),
    #[error("cycle points must be finite, strictly increasing, within [-π, π] and span less than 2π")]
    BadCycle,
    #[error("malformed polynomial record: {0}")]
    Parse(String),
}

/// `T(x) = c0 + Σ_{j=1}^{n-1} (a_j cos jx + b_j sin jx)`, a polynomial of degree `< n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrigRecord", into = "TrigRecord")]
pub struct TrigPolynomial {
    n: usize,
    c0: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Flat on-disk record `{n, c0, a[], b[]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrigRecord {
    pub n: usize,
    pub c0: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl TryFrom<TrigRecord> for TrigPolynomial {
    type Error = TrigError;
    fn try_from(r: TrigRecord) -> Result<Self, TrigError> {
        TrigPolynomial::new(r.n, r.c0, r.a, r.b)
    }
}

impl From<TrigPolynomial> for TrigRecord {
    fn from(t: TrigPolynomial) -> Self {
        TrigRecord {
            n: t.n,
            c0: t.c0,
            a: t.a,
            b: t.b,
        }
    }
}

impl TrigPolynomial {
    pub fn new(n: usize, c0: f64, a: Vec<f64>, b: Vec<f64>) -> Result<Self, TrigError> {
        if n == 0 {
            return Err(TrigError::ZeroDegreeBound);
        }
        if a.len() != n - 1 || b.len() != n - 1 {
            return Err(TrigError::CoefficientLength {
                expected: n - 1,
                cos: a.len(),
                sin: b.len(),
            });
        }
        if !c0.is_finite() || a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(TrigError::NonFinite);
        }
        Ok(TrigPolynomial { n, c0, a, b })
    }

    pub fn zero(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    pub fn constant(n: usize, c0: f64) -> Self {
        let n = n.max(1);
        TrigPolynomial {
            n,
            c0,
            a: vec![0.0; n - 1],
            b: vec![0.0; n - 1],
        }
    }

    /// Coefficients packed as `[c0, a_1, b_1, a_2, b_2, ...]`.
    pub fn from_packed(n: usize, packed: &[f64]) -> Result<Self, TrigError> {
        if packed.len() != 2 * n - 1 {
            return Err(TrigError::CoefficientLength {
                expected: n - 1,
                cos: packed.len().saturating_sub(1) / 2,
                sin: packed.len().saturating_sub(1) / 2,
            });
        }
        let a = (1..n).map(|j| packed[2 * j - 1]).collect();
        let b = (1..n).map(|j| packed[2 * j]).collect();
        TrigPolynomial::new(n, packed[0], a, b)
    }

    pub fn from_json(text: &str) -> Result<Self, TrigError> {
        serde_json::from_str(text).map_err(|e| TrigError::Parse(e.to_string()))
    }

    pub fn degree_bound(&self) -> usize {
        self.n
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.a
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.b
    }

    /// Basis functions `[1, cos x, sin x, cos 2x, ...]` differentiated `order` times.
    pub fn basis_row(n: usize, x: f64, order: usize) -> Vec<f64> {
        let mut row = Vec::with_capacity(2 * n - 1);
        row.push(if order == 0 { 1.0 } else { 0.0 });
        for j in 1..n {
            let jf = j as f64;
            let (s, c) = (jf * x).sin_cos();
            let scale = jf.powi(order as i32);
            // d^o/dx^o of (cos, sin) rotates by o quarter turns
            let (dc, ds) = match order % 4 {
                0 => (c, s),
                1 => (-s, c),
                2 => (-c, -s),
                _ => (s, -c),
            };
            row.push(scale * dc);
            row.push(scale * ds);
        }
        row
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_derivative(x, 0)
    }

    /// `T^{(order)}(x)`.
    pub fn eval_derivative(&self, x: f64, order: usize) -> f64 {
        let mut acc = if order == 0 { self.c0 } else { 0.0 };
        for j in 1..self.n {
            let jf = j as f64;
            let (s, c) = (jf * x).sin_cos();
            let (a, b) = (self.a[j - 1], self.b[j - 1]);
            let term = match order % 4 {
                0 => a * c + b * s,
                1 => -a * s + b * c,
                2 => -a * c - b * s,
                _ => a * s - b * c,
            };
            acc += jf.powi(order as i32) * term;
        }
        acc
    }

    pub fn differentiate(&self) -> Self {
        let a = (1..self.n).map(|j| j as f64 * self.b[j - 1]).collect();
        let b = (1..self.n).map(|j| -(j as f64) * self.a[j - 1]).collect();
        TrigPolynomial {
            n: self.n,
            c0: 0.0,
            a,
            b,
        }
    }

    /// Antiderivative vanishing at 0; requires a zero mean.
    pub fn integrate(&self) -> Option<Self> {
        if self.c0.abs() > 1e-12 * (1.0 + self.a.iter().chain(&self.b).map(|v| v.abs()).sum::<f64>()) {
            return None;
        }
        let a: Vec<f64> = (1..self.n).map(|j| -self.b[j - 1] / j as f64).collect();
        let b = (1..self.n).map(|j| self.a[j - 1] / j as f64).collect();
        let c0 = -a.iter().sum::<f64>();
        Some(TrigPolynomial { n: self.n, c0, a, b })
    }

    /// Same polynomial viewed with a larger degree bound.
    pub fn with_degree_bound(&self, n: usize) -> Self {
        assert!(n > self.effective_degree(), "degree bound too small");
        let mut a = vec![0.0; n - 1];
        let mut b = vec![0.0; n - 1];
        let m = self.n.min(n) - 1;
        a[..m].copy_from_slice(&self.a[..m]);
        b[..m].copy_from_slice(&self.b[..m]);
        TrigPolynomial { n, c0: self.c0, a, b }
    }

    /// Highest `j` with a nonzero coefficient.
    pub fn effective_degree(&self) -> usize {
        (1..self.n)
            .rev()
            .find(|&j| self.a[j - 1] != 0.0 || self.b[j - 1] != 0.0)
            .unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.n.max(other.n);
        let lhs = self.with_degree_bound(n);
        let rhs = other.with_degree_bound(n);
        TrigPolynomial {
            n,
            c0: lhs.c0 + rhs.c0,
            a: lhs.a.iter().zip(&rhs.a).map(|(x, y)| x + y).collect(),
            b: lhs.b.iter().zip(&rhs.b).map(|(x, y)| x + y).collect(),
        }
    }

    /// Interpolates a function sampled at `2n-1` equispaced points; exact for
    /// trigonometric polynomials of degree `< n`.
    pub fn interpolate(n: usize, g: impl Fn(f64) -> f64) -> Self {
        let m = 2 * n - 1;
        let xs: Vec<f64> = (0..m).map(|i| -PI + 2.0 * PI * i as f64 / m as f64).collect();
        let vals: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
        let c0 = vals.iter().sum::<f64>() / m as f64;
        let mut a = vec![0.0; n - 1];
        let mut b = vec![0.0; n - 1];
        for j in 1..n {
            let (mut sa, mut sb) = (0.0, 0.0);
            for (x, v) in xs.iter().zip(&vals) {
                let (s, c) = (j as f64 * x).sin_cos();
                sa += v * c;
                sb += v * s;
            }
            a[j - 1] = 2.0 * sa / m as f64;
            b[j - 1] = 2.0 * sb / m as f64;
        }
        TrigPolynomial { n, c0, a, b }
    }

    /// Sup over the default grid of `max(1024, 32 n)` points.
    pub fn grid_norm(&self, order: usize) -> f64 {
        let m = default_grid_size(self.n);
        (0..m)
            .map(|i| self.eval_derivative(-PI + 2.0 * PI * i as f64 / m as f64, order).abs())
            .fold(0.0, f64::max)
    }
}

pub fn default_grid_size(n: usize) -> usize {
    1024.max(32 * n)
}

/// Which kind of extremum sits at the first cycle point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    /// `y_1` is a local maximum: `(-1)^{i-1} f` is nondecreasing on `[y_{i-1}, y_i]`.
    MaxFirst,
    /// The reflected class: `y_1` is a local minimum.
    MinFirst,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::MaxFirst => 1.0,
            Parity::MinFirst => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Parity::MaxFirst => Parity::MinFirst,
            Parity::MinFirst => Parity::MaxFirst,
        }
    }
}

/// The `2s` monotonicity-change points of one period, `y_1 < ... < y_{2s}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremaCycle {
    points: Vec<f64>,
    parity: Parity,
}

impl ExtremaCycle {
    pub fn new(points: Vec<f64>, parity: Parity) -> Result<Self, TrigError> {
        if points.is_empty() || points.len() % 2 == 1 {
            return Err(TrigError::OddCycle(points.len()));
        }
        let ok = points.iter().all(|p| p.is_finite() && (-PI..=PI).contains(p))
            && points.windows(2).all(|w| w[0] < w[1])
            && points[points.len() - 1] - points[0] < 2.0 * PI;
        if !ok {
            return Err(TrigError::BadCycle);
        }
        Ok(ExtremaCycle { points, parity })
    }

    pub fn s(&self) -> usize {
        self.points.len() / 2
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// `y_i` for any integer `i` (1-based), using `y_{i+2s} = y_i + 2π`.
    pub fn point(&self, i: i64) -> f64 {
        let m = self.points.len() as i64;
        let k = (i - 1).rem_euclid(m);
        let turns = (i - 1 - k) / m;
        self.points[k as usize] + 2.0 * PI * turns as f64
    }

    /// The same cycle in the frame `x' = x - shift`, points re-wrapped into `[-π, π)`.
    pub fn shifted(&self, shift: f64) -> Self {
        let m = self.points.len();
        let mut pts: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, &y)| (crate::quadrature::wrap_to_period(y - shift), i))
            .collect();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // parity follows the original index of the new first point
        let first = pts[0].1;
        let parity = if first.is_multiple_of(2) {
            self.parity
        } else {
            self.parity.flipped()
        };
        debug_assert_eq!(pts.len(), m);
        ExtremaCycle {
            points: pts.into_iter().map(|p| p.0).collect(),
            parity,
        }
    }

    /// `Π(x) = ∏ sin((x - y_i)/2)` over the canonical points.
    pub fn pi_product(&self, x: f64) -> f64 {
        self.points.iter().map(|y| ((x - y) / 2.0).sin()).product()
    }

    /// The sign a comonotone derivative must have at `x`: `parity · sign Π(x)`,
    /// or 0 when `x` coincides with a cycle point to rounding.
    pub fn orientation(&self, x: f64) -> f64 {
        let mut sign = self.parity.sign();
        for y in &self.points {
            let d = crate::quadrature::wrap_to_period(x - y);
            if d.abs() < 1e-12 {
                return 0.0;
            }
            // sin((x-y)/2) over one period: sign of d after wrapping, flipped per extra turn
            let turns = ((x - y + PI) / (2.0 * PI)).floor() as i64;
            let s = d.signum() * if turns.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            sign *= s;
        }
        sign
    }

    /// `parity · Π(x)`; nonnegative exactly where a comonotone function increases.
    pub fn signed_pi(&self, x: f64) -> f64 {
        self.parity.sign() * self.pi_product(x)
    }
}

/// Free function form of [`ExtremaCycle::pi_product`].
pub fn pi_product(cycle: &ExtremaCycle, x: f64) -> f64 {
    cycle.pi_product(x)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComonotoneReport {
    pub ok: bool,
    pub worst_violation: f64,
    pub worst_x: f64,
    pub grid_count: usize,
}

/// Checks `g'(x) · parity · Π(x) >= -margin` on a uniform grid of the period.
pub fn comonotone_defect(
    derivative: impl Fn(f64) -> f64,
    cycle: &ExtremaCycle,
    grid_count: usize,
    margin: f64,
) -> ComonotoneReport {
    let mut worst = 0.0;
    let mut worst_x = -PI;
    for i in 0..grid_count {
        let x = -PI + 2.0 * PI * i as f64 / grid_count as f64;
        let v = derivative(x) * cycle.signed_pi(x);
        if v < worst {
            worst = v;
            worst_x = x;
        }
    }
    ComonotoneReport {
        ok: worst >= -margin,
        worst_violation: -worst,
        worst_x,
        grid_count,
    }
}

pub fn is_comonotone(
    t: &TrigPolynomial,
    cycle: &ExtremaCycle,
    grid_count: usize,
    margin: f64,
) -> Result<ComonotoneReport, TrigError> {
    let need = 8 * t.degree_bound();
    if grid_count < need {
        return Err(TrigError::GridTooCoarse {
            grid: grid_count,
            n: t.degree_bound(),
            need,
        });
    }
    Ok(comonotone_defect(
        |x| t.eval_derivative(x, 1),
        cycle,
        grid_count,
        margin,
    ))
}

/// Grid certification with doubling: starts at `max(1024, 32 n)` points and
/// doubles up to four times, stopping once two consecutive verdicts agree.
pub fn certify_comonotone(t: &TrigPolynomial, cycle: &ExtremaCycle, margin: f64) -> ComonotoneReport {
    let mut grid = default_grid_size(t.degree_bound());
    let mut report = comonotone_defect(|x| t.eval_derivative(x, 1), cycle, grid, margin);
    for _ in 0..4 {
        grid *= 2;
        let next = comonotone_defect(|x| t.eval_derivative(x, 1), cycle, grid, margin);
        let stable = next.ok == report.ok;
        report = next;
        if stable {
            break;
        }
    }
    report
}

/// `‖T^{(j)}‖ / (n^j ‖T‖)` on the default grid; at most 1 by Bernstein's inequality.
pub fn bernstein_ratio(t: &TrigPolynomial, order: usize) -> Result<f64, TrigError> {
    let base = t.grid_norm(0);
    if base == 0.0 {
        return Err(TrigError::ZeroPolynomial);
    }
    let top = t.grid_norm(order);
    Ok(top / ((t.degree_bound() as f64).powi(order as i32) * base))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sine(n: usize, m: usize) -> TrigPolynomial {
        let mut b = vec![0.0; n - 1];
        b[m - 1] = 1.0;
        TrigPolynomial::new(n, 0.0, vec![0.0; n - 1], b).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(TrigPolynomial::constant(3, 3.0).eval(1.234), 3.0);
        assert_relative_eq!(sine(2, 1).eval(PI / 2.0), 1.0);
        let t = TrigPolynomial::new(2, 0.0, vec![1.0], vec![1.0]).unwrap();
        assert_relative_eq!(t.eval(PI / 4.0), 2.0f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(t.eval(0.3), t.eval(0.3 + 2.0 * PI), epsilon = 1e-12);
    }

    #[test]
    fn differentiation_examples() {
        let d = sine(2, 1).differentiate();
        assert_eq!(d.cos_coeffs(), &[1.0]);
        assert_eq!(d.sin_coeffs(), &[0.0]);
        let zero = TrigPolynomial::constant(4, 7.0).differentiate();
        assert_eq!(zero.grid_norm(0), 0.0);
        let mut a = vec![0.0; 3];
        a[2] = 1.0;
        let cos3 = TrigPolynomial::new(4, 0.0, a, vec![0.0; 3]).unwrap();
        let d = cos3.differentiate();
        assert_eq!(d.sin_coeffs(), &[0.0, 0.0, -3.0]);
        assert_relative_eq!(d.eval(0.2), cos3.eval_derivative(0.2, 1), epsilon = 1e-14);
    }

    #[test]
    fn pi_product_examples() {
        let y = ExtremaCycle::new(vec![0.0, PI], Parity::MaxFirst).unwrap();
        assert_eq!(y.pi_product(0.0), 0.0);
        assert_relative_eq!(y.pi_product(PI / 2.0), -0.5, epsilon = 1e-15);
        let y2 = ExtremaCycle::new(vec![-2.0, -0.5, 0.1, 1.3], Parity::MaxFirst).unwrap();
        assert!(y2.pi_product(y2.point(3) + 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn comonotone_parity_examples() {
        // T = -cos x has a minimum at 0 and a maximum at π
        let t = TrigPolynomial::new(2, 0.0, vec![-1.0], vec![0.0]).unwrap();
        let max_first = ExtremaCycle::new(vec![0.0, PI], Parity::MaxFirst).unwrap();
        let min_first = ExtremaCycle::new(vec![0.0, PI], Parity::MinFirst).unwrap();
        let a = is_comonotone(&t, &max_first, 256, 1e-12).unwrap();
        let b = is_comonotone(&t, &min_first, 256, 1e-12).unwrap();
        assert!(a.ok ^ b.ok);
        assert!(b.ok);
        assert!(
            is_comonotone(&TrigPolynomial::constant(3, 1.0), &max_first, 64, 0.0)
                .unwrap()
                .ok
        );
        let sin2 = sine(3, 2);
        assert!(!is_comonotone(&sin2, &max_first, 256, 1e-12).unwrap().ok);
        assert!(!is_comonotone(&sin2, &min_first, 256, 1e-12).unwrap().ok);
        assert!(matches!(
            is_comonotone(&sin2, &max_first, 8, 0.0),
            Err(TrigError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn orientation_matches_sign_of_pi() {
        let y = ExtremaCycle::new(vec![-2.5, -1.0, 0.4, 2.0], Parity::MinFirst).unwrap();
        for i in 0..997 {
            let x = -7.0 + 14.0 * i as f64 / 997.0;
            let p = y.signed_pi(x);
            if p.abs() > 1e-9 {
                assert_eq!(y.orientation(x), p.signum(), "at {x}");
            }
        }
        assert_eq!(y.orientation(0.4 + 2.0 * PI), 0.0);
    }

    #[test]
    fn shifting_keeps_the_class() {
        let y = ExtremaCycle::new(vec![-2.5, -1.0, 0.4, 2.0], Parity::MaxFirst).unwrap();
        let shifted = y.shifted(1.7);
        for i in 0..200 {
            let x = -PI + 2.0 * PI * i as f64 / 200.0 + 0.0123;
            assert_eq!(y.orientation(x + 1.7), shifted.orientation(x));
        }
    }

    #[test]
    fn bernstein_examples() {
        let n = 7;
        let t = sine(n, n - 1);
        assert_relative_eq!(
            bernstein_ratio(&t, 1).unwrap(),
            (n - 1) as f64 / n as f64,
            epsilon = 1e-12
        );
        assert_eq!(bernstein_ratio(&TrigPolynomial::constant(4, 2.0), 2).unwrap(), 0.0);
        assert_eq!(
            bernstein_ratio(&TrigPolynomial::zero(4), 1),
            Err(TrigError::ZeroPolynomial)
        );
    }

    #[test]
    fn integrate_inverts_differentiate() {
        let t = TrigPolynomial::new(4, 0.0, vec![0.3, -1.0, 0.25], vec![2.0, 0.0, -0.5]).unwrap();
        let back = t.integrate().unwrap().differentiate();
        for x in [-1.0, 0.5, 2.0] {
            assert_relative_eq!(back.eval(x), t.eval(x), epsilon = 1e-14);
        }
        assert!(t.integrate().unwrap().eval(0.0).abs() < 1e-15);
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let t = TrigPolynomial::new(4, 0.7, vec![0.3, -1.0, 0.25], vec![2.0, 0.0, -0.5]).unwrap();
        let back = TrigPolynomial::interpolate(4, |x| t.eval(x));
        for (u, v) in back.cos_coeffs().iter().zip(t.cos_coeffs()) {
            assert_relative_eq!(u, v, epsilon = 1e-13);
        }
        assert_relative_eq!(back.c0(), 0.7, epsilon = 1e-14);
    }

    #[test]
    fn json_record_round_trip_and_validation() {
        let t = TrigPolynomial::new(3, 1.0, vec![0.5, 0.0], vec![0.0, -2.0]).unwrap();
        let text = serde_json::to_string(&t).unwrap();
        assert!(text.contains("\"n\":3"));
        assert_eq!(TrigPolynomial::from_json(&text).unwrap(), t);
        assert!(TrigPolynomial::from_json(r#"{"n":3,"c0":1,"a":[1],"b":[0,0]}"#).is_err());
        assert!(TrigPolynomial::from_json(r#"{"n":0,"c0":1,"a":[],"b":[]}"#).is_err());
    }
}
