//! Discrete Chebyshev approximation by linear programming.
//!
//! Each fit solves the dual of `min ε s.t. |g(x_i) - Σ c_j φ_j(x_i)| <= ε,
//! D c >= d`, an equality-form program with one row per coefficient plus one
//! normalization row. The approximation coefficients are the simplex
//! multipliers of the coefficient rows and `ε` is the multiplier of the
//! normalization row. The row count stays at the basis dimension no matter how
//! fine the grid is.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::lp::{LpError, SimplexOptions, StandardForm};
use crate::poly::LocalPoly;
use crate::trig_poly::{ExtremaCycle, TrigPolynomial};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MinimaxError {
    #[error("degree bound must be at least 1")]
    ZeroDegree,
    #[error("empty interval [{0}, {1}]")]
    EmptyInterval(f64, f64),
    #[error(transparent)]
    Solver(#[from] LpError),
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimaxSolution {
    pub polynomial: TrigPolynomial,
    /// Recomputed grid maximum of `|f - T|`.
    pub value: f64,
    pub grid_count: usize,
    pub constrained: bool,
    /// Sign constraints with a positive dual weight.
    pub active_constraint_count: usize,
    pub solver_iterations: usize,
    /// Number of alternating signs among grid points within `1e-6` of the maximal error.
    pub alternation_count: usize,
    /// Smallest `σ · T'(x)` over the constraint points, scaled by `‖T'‖`; zero when unconstrained.
    pub worst_sign_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AlgebraicFit {
    pub polynomial: LocalPoly,
    pub value: f64,
    pub grid_count: usize,
    pub solver_iterations: usize,
}

/// How the data are centered before the program is set up.
#[derive(Clone, Debug, Default)]
pub enum Reference {
    /// Fit `f` itself.
    None,
    /// Fit `f - I_n f`, where `I_n f` interpolates `f` at `2n - 1` equispaced nodes.
    #[default]
    Interpolant,
    /// Fit `f - T` for the given polynomial of degree `< n`.
    Given(TrigPolynomial),
}

#[derive(Clone, Debug)]
pub struct MinimaxOptions {
    /// Uniform grid size; `None` uses `max(512, 32 n)`.
    pub grid_count: Option<usize>,
    /// Extra points placed inside each gap between consecutive cycle points.
    pub gap_points: usize,
    pub reference: Reference,
    pub simplex: SimplexOptions,
}

impl Default for MinimaxOptions {
    fn default() -> Self {
        MinimaxOptions {
            grid_count: None,
            gap_points: 8,
            reference: Reference::Interpolant,
            simplex: SimplexOptions::default(),
        }
    }
}

impl MinimaxOptions {
    pub fn with_grid(mut self, grid_count: usize) -> Self {
        self.grid_count = Some(grid_count);
        self
    }

    pub fn with_reference(mut self, reference: Reference) -> Self {
        self.reference = reference;
        self
    }
}

pub fn default_grid_count(n: usize) -> usize {
    512.max(32 * n)
}

/// Uniform points of `[-π, π)`, the cycle points, and `gap_points` interior
/// points in every gap between cyclically consecutive cycle points.
pub fn approximation_grid(grid_count: usize, cycle: Option<&ExtremaCycle>, gap_points: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..grid_count)
        .map(|i| -PI + 2.0 * PI * i as f64 / grid_count as f64)
        .collect();
    if let Some(y) = cycle {
        let m = y.points().len() as i64;
        for i in 1..=m {
            let lo = y.point(i);
            let hi = y.point(i + 1);
            xs.push(crate::quadrature::wrap_to_period(lo));
            for j in 1..=gap_points {
                let x = lo + (hi - lo) * j as f64 / (gap_points + 1) as f64;
                xs.push(crate::quadrature::wrap_to_period(x));
            }
        }
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    xs
}

/// Generic discrete minimax fit. `phi(x)` returns the basis row at `x`;
/// `constraints` are rows `D_l` with right sides `d_l` demanding `D_l · c >= d_l`.
/// `reference` lists `dim + 1` grid indices used as an alternating starting
/// reference, which keeps the simplex away from near-confluent bases.
fn fit(
    xs: &[f64],
    values: &[f64],
    dim: usize,
    phi: &dyn Fn(f64) -> Vec<f64>,
    constraints: &[(Vec<f64>, f64)],
    reference: &[usize],
    options: &SimplexOptions,
) -> Result<(Vec<f64>, f64, usize, usize), LpError> {
    // the simplex tolerances are absolute, so the data are brought to unit size
    let scale = values
        .iter()
        .chain(constraints.iter().map(|(_, d)| d))
        .fold(0.0f64, |a, v| a.max(v.abs()));
    let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
    let mut b = vec![0.0; dim + 1];
    b[dim] = 1.0;
    let mut sf = StandardForm::new(b);
    let mut col = vec![0.0; dim + 1];
    for (x, g) in xs.iter().zip(values) {
        let g = g / scale;
        let row = phi(*x);
        col[..dim].copy_from_slice(&row);
        col[dim] = 1.0;
        sf.push_column(g, &col);
        for v in col[..dim].iter_mut() {
            *v = -*v;
        }
        sf.push_column(-g, &col);
    }
    let first_constraint = sf.cols();
    for (row, d) in constraints {
        let norm = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if norm == 0.0 {
            continue;
        }
        for (c, v) in col[..dim].iter_mut().zip(row) {
            *c = v / norm;
        }
        col[dim] = 0.0;
        sf.push_column(d / norm / scale, &col);
    }
    let start: Vec<usize> = reference.iter().enumerate().map(|(i, &p)| 2 * p + i % 2).collect();
    let sol = sf.solve_from(options, &start)?;
    let active = sol.x[first_constraint..].iter().filter(|w| **w > 0.0).count();
    let coeffs = sol.duals[..dim].iter().map(|c| c * scale).collect();
    Ok((coeffs, sol.duals[dim] * scale, sol.iterations, active))
}

/// Index of the sorted grid point nearest to each target.
fn nearest_indices(xs: &[f64], targets: &[f64]) -> Vec<usize> {
    targets
        .iter()
        .map(|&t| {
            let i = xs.partition_point(|x| *x < t);
            match i {
                0 => 0,
                i if i == xs.len() => i - 1,
                i if t - xs[i - 1] <= xs[i] - t => i - 1,
                i => i,
            }
        })
        .collect()
}

fn alternations(errors: &[f64], level: f64) -> usize {
    let tol = 1e-6 * level.max(f64::MIN_POSITIVE);
    let mut count = 0;
    let mut last = 0.0;
    for e in errors {
        if e.abs() >= level - tol {
            let s = e.signum();
            if s != last {
                count += 1;
                last = s;
            }
        }
    }
    count
}

fn trig_fit(
    f: &dyn Fn(f64) -> f64,
    cycle: Option<&ExtremaCycle>,
    n: usize,
    options: &MinimaxOptions,
) -> Result<MinimaxSolution, MinimaxError> {
    if n == 0 {
        return Err(MinimaxError::ZeroDegree);
    }
    let grid_count = options.grid_count.unwrap_or_else(|| default_grid_count(n));
    let xs = approximation_grid(grid_count, cycle, if cycle.is_some() { options.gap_points } else { 0 });
    let fx: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let reference = match &options.reference {
        Reference::None => TrigPolynomial::zero(n),
        Reference::Interpolant => TrigPolynomial::interpolate(n, f),
        Reference::Given(t) => t.with_degree_bound(n),
    };
    let data: Vec<f64> = xs.iter().zip(&fx).map(|(x, v)| v - reference.eval(*x)).collect();
    let mut constraints = Vec::new();
    if let Some(y) = cycle {
        for &x in &xs {
            let sigma = y.orientation(x);
            if sigma == 0.0 {
                continue;
            }
            let row: Vec<f64> = TrigPolynomial::basis_row(n, x, 1).iter().map(|v| sigma * v).collect();
            constraints.push((row, -sigma * reference.eval_derivative(x, 1)));
        }
    }
    let dim = 2 * n - 1;
    let phi = |x: f64| TrigPolynomial::basis_row(n, x, 0);
    let start_points = nearest_indices(
        &xs,
        &(0..2 * n).map(|i| -PI + PI * i as f64 / n as f64).collect::<Vec<_>>(),
    );
    let (coeffs, _eps, iterations, active) = fit(&xs, &data, dim, &phi, &constraints, &start_points, &options.simplex)?;
    let correction = TrigPolynomial::from_packed(n, &coeffs).expect("dimension fixed");
    let polynomial = reference.add(&correction);
    let errors: Vec<f64> = xs.iter().zip(&fx).map(|(x, v)| v - polynomial.eval(*x)).collect();
    let value = errors.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let worst_sign_residual = match cycle {
        Some(y) => {
            let dnorm = polynomial.grid_norm(1).max(f64::MIN_POSITIVE);
            xs.iter()
                .filter(|x| y.orientation(**x) != 0.0)
                .map(|&x| y.orientation(x) * polynomial.eval_derivative(x, 1) / dnorm)
                .fold(f64::INFINITY, f64::min)
                .min(0.0)
        }
        None => 0.0,
    };
    Ok(MinimaxSolution {
        alternation_count: alternations(&errors, value),
        polynomial,
        value,
        grid_count: xs.len(),
        constrained: cycle.is_some(),
        active_constraint_count: active,
        solver_iterations: iterations,
        worst_sign_residual,
    })
}

/// Discrete `E_n(f)`: best approximation by trigonometric polynomials of degree `< n`.
pub fn best_unconstrained(
    f: &dyn Fn(f64) -> f64,
    n: usize,
    options: &MinimaxOptions,
) -> Result<MinimaxSolution, MinimaxError> {
    trig_fit(f, None, n, options)
}

/// Discrete `E_n^{(1)}(f, Y)`: the same fit with `σ(x) T'(x) >= 0` imposed at
/// every grid point off the cycle. A lower bound of the true infimum.
pub fn best_comonotone(
    f: &dyn Fn(f64) -> f64,
    cycle: &ExtremaCycle,
    n: usize,
    options: &MinimaxOptions,
) -> Result<MinimaxSolution, MinimaxError> {
    trig_fit(f, Some(cycle), n, options)
}

/// Best algebraic approximation of degree `< m` on `[a, b]` over a
/// Chebyshev–Lobatto grid of about `max(256, 32 m)` points.
pub fn best_algebraic(f: &dyn Fn(f64) -> f64, a: f64, b: f64, m: usize) -> Result<AlgebraicFit, MinimaxError> {
    if m == 0 {
        return Err(MinimaxError::ZeroDegree);
    }
    if !(b > a) {
        return Err(MinimaxError::EmptyInterval(a, b));
    }
    // odd so the midpoint is sampled
    let count = 256.max(32 * m) | 1;
    let zs: Vec<f64> = (0..count)
        .map(|i| -(PI * i as f64 / (count - 1) as f64).cos())
        .collect();
    let xs: Vec<f64> = zs.iter().map(|z| 0.5 * (a + b) + 0.5 * (b - a) * z).collect();
    let fx: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let phi = |x: f64| {
        let z = (2.0 * x - a - b) / (b - a);
        let mut row = vec![0.0; m];
        row[0] = 1.0;
        if m > 1 {
            row[1] = z;
        }
        for j in 2..m {
            row[j] = 2.0 * z * row[j - 1] - row[j - 2];
        }
        row
    };
    // extrema of T_m, where the error of a best fit alternates
    let extrema: Vec<f64> = (0..=m)
        .map(|i| 0.5 * (a + b) - 0.5 * (b - a) * (PI * i as f64 / m as f64).cos())
        .collect();
    let reference = nearest_indices(&xs, &extrema);
    let (cheb, _eps, iterations, _) = fit(&xs, &fx, m, &phi, &[], &reference, &SimplexOptions::default())?;
    let polynomial = LocalPoly::from_chebyshev(a, b, &cheb);
    let value = xs
        .iter()
        .zip(&fx)
        .map(|(x, v)| (v - polynomial.eval(*x)).abs())
        .fold(0.0, f64::max);
    Ok(AlgebraicFit {
        polynomial,
        value,
        grid_count: count,
        solver_iterations: iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trig_poly::Parity;
    use approx::assert_relative_eq;

    #[test]
    fn best_constant_to_cosine() {
        let s = best_unconstrained(&f64::cos, 1, &MinimaxOptions::default()).unwrap();
        assert_relative_eq!(s.value, 1.0, epsilon = 1e-6);
        let s = best_unconstrained(&|x: f64| (2.0 * x).cos(), 2, &MinimaxOptions::default()).unwrap();
        assert_relative_eq!(s.value, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn trig_polynomials_are_reproduced() {
        let f = |x: f64| 0.3 + x.sin() - 0.25 * (3.0 * x).cos();
        for reference in [Reference::None, Reference::Interpolant] {
            let opts = MinimaxOptions::default().with_reference(reference);
            let s = best_unconstrained(&f, 5, &opts).unwrap();
            assert!(s.value < 1e-9, "{}", s.value);
        }
    }

    #[test]
    fn comonotone_fit_of_a_comonotone_polynomial() {
        // -cos x falls on (-π, 0) and rises on (0, π): a minimum at 0
        let y = ExtremaCycle::new(vec![0.0, PI], Parity::MinFirst).unwrap();
        let f = |x: f64| -x.cos();
        let s = best_comonotone(&f, &y, 4, &MinimaxOptions::default()).unwrap();
        assert!(s.value < 1e-8);
        assert!(s.worst_sign_residual > -1e-9);
    }

    #[test]
    fn constrained_is_not_better() {
        let y = ExtremaCycle::new(vec![-1.0, 0.5], Parity::MaxFirst).unwrap();
        let f = |x: f64| (x.sin() + 0.4 * (2.0 * x).cos()).abs().sqrt();
        let opts = MinimaxOptions::default();
        let free = best_unconstrained(&f, 6, &opts).unwrap();
        let tied = best_comonotone(&f, &y, 6, &opts).unwrap();
        assert!(tied.value >= free.value - 1e-9);
        assert!(tied.worst_sign_residual > -1e-9);
    }

    #[test]
    fn algebraic_oracles() {
        let sq = best_algebraic(&|x: f64| x * x, 0.0, 1.0, 2).unwrap();
        assert_relative_eq!(sq.value, 0.125, epsilon = 1e-3);
        let kink = best_algebraic(&|x: f64| (x - 0.5).abs(), 0.0, 1.0, 1).unwrap();
        assert_relative_eq!(kink.value, 0.25, epsilon = 1e-3);
        let cubic = best_algebraic(&|x: f64| 1.0 - x + x * x * x, -2.0, 3.0, 4).unwrap();
        assert!(cubic.value < 1e-10);
    }
}
