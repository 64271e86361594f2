//! 2π-periodic function models with analytic derivatives, the smooth cutoff
//! bump, and a finite-difference fallback for orders beyond the analytic ones.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::jet::Jet;
use crate::quadrature::wrap_to_period;

/// Orders the finite-difference fallback may add on top of the analytic ones.
pub const FD_BUDGET: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(
        "derivative of order {requested} unsupported (analytic up to {analytic}, finite-difference budget {budget})"
    )]
    UnsupportedOrder {
        requested: usize,
        analytic: usize,
        budget: usize,
    },
}

/// `eval(x, lo, hi)` returns `[f^{(lo)}(x), ..., f^{(hi)}(x)]`.
type DerivativeEval = Arc<dyn Fn(f64, usize, usize) -> Vec<f64> + Send + Sync>;

/// A 2π-periodic function together with evaluators for `f, f', ..., f^{(d)}`.
#[derive(Clone)]
pub struct PeriodicFunctionModel {
    label: String,
    max_analytic_order: usize,
    eval: DerivativeEval,
}

impl fmt::Debug for PeriodicFunctionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicFunctionModel")
            .field("label", &self.label)
            .field("max_analytic_order", &self.max_analytic_order)
            .finish()
    }
}

impl PeriodicFunctionModel {
    /// `eval(x, d)` must return `[f(x), f'(x), ..., f^{(d)}(x)]` for `d <= max_analytic_order`.
    pub fn from_derivatives(
        label: impl Into<String>,
        max_analytic_order: usize,
        eval: impl Fn(f64, usize) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self::from_order_range(label, max_analytic_order, move |x, lo, hi| {
            let mut all = eval(x, hi);
            all.drain(..lo);
            all
        })
    }

    /// `eval(x, lo, hi)` must return `[f^{(lo)}(x), ..., f^{(hi)}(x)]` for
    /// `lo <= hi <= max_analytic_order`. Lets expensive low orders be skipped.
    pub fn from_order_range(
        label: impl Into<String>,
        max_analytic_order: usize,
        eval: impl Fn(f64, usize, usize) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        PeriodicFunctionModel {
            label: label.into(),
            max_analytic_order,
            eval: Arc::new(eval),
        }
    }

    /// A model written as jet arithmetic; `body` must itself be 2π-periodic.
    pub fn from_jet(
        label: impl Into<String>,
        max_analytic_order: usize,
        body: impl Fn(&Jet) -> Jet + Send + Sync + 'static,
    ) -> Self {
        Self::from_derivatives(label, max_analytic_order, move |x, order| {
            body(&Jet::variable(x, order)).derivatives()
        })
    }

    /// A model defined by `body` on `[-π, π)` and extended periodically.
    pub fn from_jet_on_period(
        label: impl Into<String>,
        max_analytic_order: usize,
        body: impl Fn(&Jet) -> Jet + Send + Sync + 'static,
    ) -> Self {
        Self::from_derivatives(label, max_analytic_order, move |x, order| {
            body(&Jet::variable(wrap_to_period(x), order)).derivatives()
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn max_analytic_order(&self) -> usize {
        self.max_analytic_order
    }

    pub fn max_supported_order(&self) -> usize {
        self.max_analytic_order + FD_BUDGET
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.eval)(x, 0, 0)[0]
    }

    fn unsupported(&self, j: usize) -> ModelError {
        ModelError::UnsupportedOrder {
            requested: j,
            analytic: self.max_analytic_order,
            budget: FD_BUDGET,
        }
    }

    /// `f^{(j)}(x)`: analytic when available, otherwise a Richardson-extrapolated
    /// central difference of the highest analytic derivative (error `O(step^4)`).
    pub fn derivative(&self, j: usize, x: f64) -> Result<f64, ModelError> {
        if j <= self.max_analytic_order {
            return Ok((self.eval)(x, j, j)[0]);
        }
        if j > self.max_supported_order() {
            return Err(self.unsupported(j));
        }
        let base = self.max_analytic_order;
        let m = j - base;
        let g = |t: f64| (self.eval)(t, base, base)[0];
        let step = f64::EPSILON.powf(1.0 / (m as f64 + 4.0)) * (1.0 + x.abs());
        let coarse = central_difference(&g, x, step, m);
        let fine = central_difference(&g, x, 0.5 * step, m);
        Ok((4.0 * fine - coarse) / 3.0)
    }

    /// `[f(x), ..., f^{(order)}(x)]`.
    pub fn derivatives(&self, x: f64, order: usize) -> Result<Vec<f64>, ModelError> {
        if order <= self.max_analytic_order {
            return Ok((self.eval)(x, 0, order));
        }
        let mut out = (self.eval)(x, 0, self.max_analytic_order);
        for j in self.max_analytic_order + 1..=order {
            out.push(self.derivative(j, x)?);
        }
        Ok(out)
    }

    /// A plain evaluator for `f^{(j)}`, validated once up front.
    pub fn derivative_fn(&self, j: usize) -> Result<impl Fn(f64) -> f64 + Send + Sync + '_, ModelError> {
        if j > self.max_supported_order() {
            return Err(self.unsupported(j));
        }
        Ok(move |x: f64| self.derivative(j, x).expect("order validated"))
    }

    /// `x ↦ f(x + shift)`.
    pub fn shifted(&self, shift: f64) -> Self {
        let eval = self.eval.clone();
        PeriodicFunctionModel {
            label: format!("{}@{:+.6}", self.label, shift),
            max_analytic_order: self.max_analytic_order,
            eval: Arc::new(move |x, lo, hi| eval(x + shift, lo, hi)),
        }
    }

    /// `x ↦ -f(x)`.
    pub fn negated(&self) -> Self {
        let eval = self.eval.clone();
        PeriodicFunctionModel {
            label: format!("-{}", self.label),
            max_analytic_order: self.max_analytic_order,
            eval: Arc::new(move |x, lo, hi| eval(x, lo, hi).into_iter().map(|v| -v).collect()),
        }
    }

    /// Sup of `f` over a uniform grid of the period.
    pub fn grid_norm(&self, points: usize) -> f64 {
        (0..points)
            .map(|i| self.value(-PI + 2.0 * PI * i as f64 / points as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|f(x + 2π) - f(x)|` over `samples` random points, relative to `1 + ‖f‖`.
    pub fn periodicity_defect(&self, rng: &mut impl Rng, samples: usize) -> f64 {
        let scale = 1.0 + self.grid_norm(512);
        (0..samples)
            .map(|_| {
                let x: f64 = rng.random_range(-PI..PI);
                (self.value(x + 2.0 * PI) - self.value(x)).abs() / scale
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|f^{(j)} - D(f^{(j-1)})|` at `samples` random points, relative to
    /// `1 + ‖f^{(j)}‖`, for every analytic order `1 <= j <= max_order`.
    pub fn derivative_defect(&self, rng: &mut impl Rng, samples: usize, max_order: usize) -> f64 {
        let top = max_order.min(self.max_analytic_order);
        let mut worst: f64 = 0.0;
        for j in 1..=top {
            let scale = 1.0
                + (0..256)
                    .map(|i| (self.eval)(-PI + 2.0 * PI * i as f64 / 256.0, j, j)[0].abs())
                    .fold(0.0, f64::max);
            for _ in 0..samples {
                let x: f64 = rng.random_range(-PI..PI);
                let analytic = (self.eval)(x, j, j)[0];
                let g = |t: f64| (self.eval)(t, j - 1, j - 1)[0];
                let step = f64::EPSILON.powf(0.2) * (1.0 + x.abs());
                let fd = (4.0 * central_difference(&g, x, 0.5 * step, 1) - central_difference(&g, x, step, 1)) / 3.0;
                worst = worst.max((analytic - fd).abs() / scale);
            }
        }
        worst
    }
}

/// `Σ_i (-1)^i C(m,i) g(x + (m/2 - i) h) / h^m`.
pub fn central_difference(g: &impl Fn(f64) -> f64, x: f64, step: f64, m: usize) -> f64 {
    let mut binom = 1.0;
    let mut acc = 0.0;
    for i in 0..=m {
        if i > 0 {
            binom = binom * (m - i + 1) as f64 / i as f64;
        }
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * g(x + (0.5 * m as f64 - i as f64) * step);
    }
    acc / step.powi(m as i32)
}

/// The smooth cutoff `G`: 0 on `|x| <= 1`, 1 on `|x| >= 2`, with `x G'(x) >= 0`.
///
/// `G(x) = ψ(|x|-1) / (ψ(|x|-1) + ψ(2-|x|))`, `ψ(t) = exp(-1/t)` for `t > 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct BumpG;

impl BumpG {
    pub const MAX_ORDER: usize = 6;

    fn psi(t: &Jet) -> Jet {
        if t.value() > 0.0 {
            (-t.recip()).exp()
        } else {
            Jet::constant(0.0, t.order())
        }
    }

    /// `G(u)` for a jet argument.
    pub fn jet(u: &Jet) -> Jet {
        let order = u.order();
        let a = u.abs().value();
        if a >= 2.0 {
            return Jet::constant(1.0, order);
        }
        if a <= 1.0 {
            return Jet::constant(0.0, order);
        }
        let m = u.abs();
        let rise = Self::psi(&m.offset(-1.0));
        let fall = Self::psi(&(-&m).offset(2.0));
        &rise / &(&rise + &fall)
    }

    pub fn eval(x: f64) -> f64 {
        Self::jet(&Jet::constant(x, 0)).value()
    }

    pub fn derivative(j: usize, x: f64) -> Result<f64, ModelError> {
        if j > Self::MAX_ORDER {
            return Err(ModelError::UnsupportedOrder {
                requested: j,
                analytic: Self::MAX_ORDER,
                budget: 0,
            });
        }
        Ok(Self::jet(&Jet::variable(x, j)).derivative(j))
    }
}

pub fn sin_model() -> PeriodicFunctionModel {
    PeriodicFunctionModel::from_jet("sin", 16, |x| x.sin())
}

pub fn cos_model() -> PeriodicFunctionModel {
    PeriodicFunctionModel::from_jet("cos", 16, |x| x.cos())
}

pub fn constant_model(value: f64) -> PeriodicFunctionModel {
    PeriodicFunctionModel::from_jet(format!("const({value})"), 16, move |x| Jet::constant(value, x.order()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bump_values() {
        assert_eq!(BumpG::eval(3.0), 1.0);
        assert_eq!(BumpG::eval(-2.0), 1.0);
        assert_eq!(BumpG::eval(0.5), 0.0);
        assert_eq!(BumpG::eval(-1.0), 0.0);
        let mid = BumpG::eval(1.5);
        assert!(mid > 0.0 && mid < 1.0);
        assert_eq!(mid, BumpG::eval(-1.5));
        assert_relative_eq!(mid, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn bump_is_monotone_in_the_direction_of_x() {
        for i in 0..=2000 {
            let x = -3.0 + 6.0 * i as f64 / 2000.0;
            let d = BumpG::derivative(1, x).unwrap();
            assert!(x * d >= 0.0, "x G'(x) < 0 at {x}");
        }
    }

    #[test]
    fn bump_derivatives_are_continuous_at_the_seams() {
        for seam in [1.0, 2.0, -1.0, -2.0] {
            for j in 0..=BumpG::MAX_ORDER {
                let left = BumpG::derivative(j, seam - 1e-4).unwrap();
                let right = BumpG::derivative(j, seam + 1e-4).unwrap();
                assert!((left - right).abs() < 1e-6, "order {j} jumps at {seam}");
            }
        }
        assert!(BumpG::derivative(7, 1.5).is_err());
    }

    #[test]
    fn sine_derivatives() {
        let m = sin_model();
        assert_relative_eq!(m.derivative(1, 0.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(m.derivative(2, PI / 2.0).unwrap(), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn finite_difference_fallback_tracks_analytic_values() {
        let truncated = PeriodicFunctionModel::from_jet("sin/1", 1, |x| x.sin());
        for x in [-2.0, 0.3, 1.7] {
            let fd = truncated.derivative(2, x).unwrap();
            assert!((fd + f64::sin(x)).abs() < 1e-8, "{fd}");
            let fd3 = truncated.derivative(3, x).unwrap();
            assert!((fd3 + f64::cos(x)).abs() < 1e-5, "{fd3}");
        }
        assert!(matches!(
            truncated.derivative(1 + FD_BUDGET + 1, 0.0),
            Err(ModelError::UnsupportedOrder { .. })
        ));
    }

    #[test]
    fn cutoff_composite_vanishes_on_the_flat_zone() {
        let b = 0.1;
        let r = 0;
        let model = PeriodicFunctionModel::from_jet_on_period("G(x/b) sin^{r+1}", 6, move |x| {
            &BumpG::jet(&x.scale(1.0 / b)) * &x.sin().powi(r + 1)
        });
        assert_eq!(model.derivative(1, 0.05).unwrap(), 0.0);
        assert_eq!(model.value(-0.09), 0.0);
    }

    #[test]
    fn shipped_models_are_periodic_and_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in [sin_model(), cos_model(), constant_model(2.5)] {
            assert!(m.periodicity_defect(&mut rng, 256) < 1e-10, "{}", m.label());
            assert!(m.derivative_defect(&mut rng, 64, 3) < 1e-6, "{}", m.label());
        }
    }
}
