//! Algebraic polynomials on an interval, stored in the normalized variable
//! `z = (2x - a - b)/(b - a) ∈ [-1, 1]` to keep the coefficients well scaled.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalPoly {
    pub a: f64,
    pub b: f64,
    /// Monomial coefficients in `z`, lowest degree first.
    pub coeffs: Vec<f64>,
}

impl LocalPoly {
    pub fn new(a: f64, b: f64, coeffs: Vec<f64>) -> Self {
        assert!(b > a, "empty interval");
        let coeffs = if coeffs.is_empty() { vec![0.0] } else { coeffs };
        LocalPoly { a, b, coeffs }
    }

    pub fn constant(a: f64, b: f64, value: f64) -> Self {
        Self::new(a, b, vec![value])
    }

    fn to_z(&self, x: f64) -> f64 {
        (2.0 * x - self.a - self.b) / (self.b - self.a)
    }

    fn at_z(&self, z: f64) -> f64 {
        0.5 * (self.a + self.b) + 0.5 * (self.b - self.a) * z
    }

    /// Number of coefficients (degree plus one).
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let z = self.to_z(x);
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }

    /// `d/dx`.
    pub fn derivative(&self) -> Self {
        let scale = 2.0 / (self.b - self.a);
        let coeffs: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| j as f64 * c * scale)
            .collect();
        Self::new(self.a, self.b, coeffs)
    }

    /// Antiderivative in `x` vanishing at `x0`.
    pub fn antiderivative(&self, x0: f64) -> Self {
        let scale = 0.5 * (self.b - self.a);
        let mut coeffs = vec![0.0];
        coeffs.extend(self.coeffs.iter().enumerate().map(|(j, c)| c * scale / (j + 1) as f64));
        let mut out = Self::new(self.a, self.b, coeffs);
        let v = out.eval(x0);
        out.coeffs[0] -= v;
        out
    }

    pub fn add_constant(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::new(self.a, self.b, self.coeffs.iter().map(|c| c * factor).collect())
    }

    /// Sum of two polynomials on the same interval.
    pub fn add(&self, other: &Self) -> Self {
        assert!(self.a == other.a && self.b == other.b, "intervals differ");
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|j| self.coeffs.get(j).unwrap_or(&0.0) + other.coeffs.get(j).unwrap_or(&0.0))
            .collect();
        Self::new(self.a, self.b, coeffs)
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert!(self.a == other.a && self.b == other.b, "intervals differ");
        let mut coeffs = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, p) in self.coeffs.iter().enumerate() {
            for (j, q) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += p * q;
            }
        }
        Self::new(self.a, self.b, coeffs)
    }

    /// `Π (x - t_i)` on `[a, b]`.
    pub fn from_roots(a: f64, b: f64, roots: &[f64]) -> Self {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut out = Self::constant(a, b, 1.0);
        for &t in roots {
            // x - t = half·z + (mid - t)
            out = out.mul(&Self::new(a, b, vec![mid - t, half]));
        }
        out
    }

    /// Interpolant of `(x_i, v_i)` by Newton's divided differences in `z`.
    pub fn interpolate(a: f64, b: f64, xs: &[f64], values: &[f64]) -> Self {
        assert_eq!(xs.len(), values.len());
        assert!(!xs.is_empty());
        let probe = Self::constant(a, b, 0.0);
        let zs: Vec<f64> = xs.iter().map(|&x| probe.to_z(x)).collect();
        let n = zs.len();
        let mut dd = values.to_vec();
        for level in 1..n {
            for i in (level..n).rev() {
                dd[i] = (dd[i] - dd[i - 1]) / (zs[i] - zs[i - level]);
            }
        }
        // Horner expansion of the Newton form
        let mut coeffs = vec![dd[n - 1]];
        for i in (0..n - 1).rev() {
            let mut next = vec![0.0; coeffs.len() + 1];
            for (j, c) in coeffs.iter().enumerate() {
                next[j + 1] += c;
                next[j] -= c * zs[i];
            }
            next[0] += dd[i];
            coeffs = next;
        }
        Self::new(a, b, coeffs)
    }

    /// Converts a Chebyshev series `Σ c_j T_j(z)` to monomials in `z`.
    pub fn from_chebyshev(a: f64, b: f64, cheb: &[f64]) -> Self {
        let n = cheb.len();
        let mut out = vec![0.0; n.max(1)];
        let mut t_prev = vec![1.0];
        let mut t_cur = vec![0.0, 1.0];
        for (j, c) in cheb.iter().enumerate() {
            let basis: &[f64] = match j {
                0 => &t_prev,
                1 => &t_cur,
                _ => {
                    let mut next = vec![0.0; j + 1];
                    for (i, v) in t_cur.iter().enumerate() {
                        next[i + 1] += 2.0 * v;
                    }
                    for (i, v) in t_prev.iter().enumerate() {
                        next[i] -= v;
                    }
                    t_prev = std::mem::replace(&mut t_cur, next);
                    &t_cur
                }
            };
            for (i, v) in basis.iter().enumerate() {
                out[i] += c * v;
            }
        }
        Self::new(a, b, out)
    }

    /// Sup of `|p|` over `count` uniform points of `[a, b]`.
    pub fn grid_norm(&self, count: usize) -> f64 {
        let count = count.max(2);
        (0..count)
            .map(|i| self.eval(self.at_z(-1.0 + 2.0 * i as f64 / (count - 1) as f64)).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interpolation_and_calculus() {
        let xs = [0.5, 0.9, 1.4, 2.0];
        let g = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
        let vals: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
        let p = LocalPoly::interpolate(0.5, 2.0, &xs, &vals);
        for x in [0.6, 1.0, 1.77] {
            assert_relative_eq!(p.eval(x), g(x), epsilon = 1e-13);
            assert_relative_eq!(p.derivative().eval(x), -2.0 + 1.5 * x * x, epsilon = 1e-12);
        }
        let anti = p.derivative().antiderivative(0.5).add_constant(g(0.5));
        assert_relative_eq!(anti.eval(1.9), g(1.9), epsilon = 1e-12);
    }

    #[test]
    fn roots_and_chebyshev() {
        let p = LocalPoly::from_roots(-1.0, 3.0, &[0.0, 1.0, 2.5]);
        assert!(p.eval(1.0).abs() < 1e-14);
        assert_relative_eq!(p.eval(3.0), 3.0 * 2.0 * 0.5, epsilon = 1e-13);
        // T_3(z) = 4z^3 - 3z on [-1, 1]
        let t3 = LocalPoly::from_chebyshev(-1.0, 1.0, &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(t3.coeffs, vec![0.0, -3.0, 0.0, 4.0]);
    }
}
