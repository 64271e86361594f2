//! Gauss–Legendre quadrature and cached antiderivatives of periodic integrands.

use std::f64::consts::PI;
use std::sync::Arc;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// A fixed-order Gauss–Legendre rule mapped onto arbitrary intervals.
#[derive(Clone, Debug)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        GaussRule { nodes, weights }
    }

    pub fn integrate(&self, g: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(z, w)| w * g(mid + half * z))
            .sum::<f64>()
            * half
    }
}

/// A zoom region: `count` equal panels covering `[center - radius, center + radius]`.
#[derive(Clone, Copy, Debug)]
pub struct Refinement {
    pub center: f64,
    pub radius: f64,
    pub count: usize,
}

type Integrand = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `x ↦ ∫_{anchor}^{x} g(t) dt` for a 2π-periodic integrand `g`.
///
/// Panel boundaries include every breakpoint where `g` loses smoothness, so the
/// per-panel Gauss rule converges spectrally. The cumulative integral at panel
/// boundaries is cached; an evaluation costs one partial-panel quadrature.
#[derive(Clone)]
pub struct PeriodicAntiderivative {
    integrand: Integrand,
    edges: Vec<f64>,
    cumulative: Vec<f64>,
    rule: GaussRule,
    anchor_value: f64,
}

impl std::fmt::Debug for PeriodicAntiderivative {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PeriodicAntiderivative")
            .field("panels", &(self.edges.len() - 1))
            .field("period_integral", &self.period_integral())
            .finish()
    }
}

pub fn wrap_to_period(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        y - 2.0 * PI
    } else {
        y
    }
}

impl PeriodicAntiderivative {
    pub fn new(
        integrand: Integrand,
        anchor: f64,
        base_panels: usize,
        breakpoints: &[f64],
        refinements: &[Refinement],
    ) -> Self {
        let mut edges: Vec<f64> = (0..=base_panels)
            .map(|i| -PI + 2.0 * PI * i as f64 / base_panels as f64)
            .collect();
        edges.extend(breakpoints.iter().map(|&b| wrap_to_period(b)));
        for z in refinements {
            for i in 0..=z.count {
                let x = z.center - z.radius + 2.0 * z.radius * i as f64 / z.count as f64;
                edges.push(wrap_to_period(x));
            }
        }
        edges.retain(|x| x.is_finite());
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        if edges[0] > -PI {
            edges.insert(0, -PI);
        }
        edges[0] = -PI;
        if *edges.last().unwrap() < PI {
            edges.push(PI);
        }
        let rule = GaussRule::new(20);
        let mut cumulative = vec![0.0; edges.len()];
        for i in 1..edges.len() {
            let g = &integrand;
            cumulative[i] = cumulative[i - 1] + rule.integrate(|t| g(t), edges[i - 1], edges[i]);
        }
        let mut out = PeriodicAntiderivative {
            integrand,
            edges,
            cumulative,
            rule,
            anchor_value: 0.0,
        };
        out.anchor_value = out.raw(anchor);
        out
    }

    /// `∫_{-π}^{π} g`; zero when the antiderivative is periodic.
    pub fn period_integral(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn raw(&self, x: f64) -> f64 {
        let shifted = x + PI;
        let turns = (shifted / (2.0 * PI)).floor();
        let mut local = x - 2.0 * PI * turns;
        if local >= PI {
            local = -PI;
        }
        let idx = match self.edges.binary_search_by(|e| e.partial_cmp(&local).unwrap()) {
            Ok(i) => i.min(self.edges.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.edges.len() - 2),
        };
        let g = &self.integrand;
        turns * self.period_integral() + self.cumulative[idx] + self.rule.integrate(|t| g(t), self.edges[idx], local)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.raw(x) - self.anchor_value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_rule_is_exact_for_high_degree_polynomials() {
        let rule = GaussRule::new(10);
        let v = rule.integrate(|x| x.powi(19), 0.0, 1.0);
        assert_relative_eq!(v, 1.0 / 20.0, epsilon = 1e-14);
        let (_, w) = gauss_legendre(7);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn antiderivative_of_cosine_is_sine() {
        let anti = PeriodicAntiderivative::new(Arc::new(|t: f64| t.cos()), 0.0, 64, &[], &[]);
        for x in [-3.0, -0.4, 0.0, 1.1, 2.9, 7.5] {
            assert_relative_eq!(anti.eval(x), x.sin(), epsilon = 1e-13);
        }
        assert!(anti.period_integral().abs() < 1e-14);
    }

    #[test]
    fn kink_breakpoints_keep_accuracy() {
        // ∫_0^x |sin t| dt on [0, π] is 1 - cos x; the integrand has kinks at 0, ±π.
        let anti = PeriodicAntiderivative::new(Arc::new(|t: f64| t.sin().abs()), 0.0, 32, &[0.0], &[]);
        assert_relative_eq!(anti.eval(1.0), 1.0 - 1.0f64.cos(), epsilon = 1e-13);
        assert_relative_eq!(anti.period_integral(), 4.0, epsilon = 1e-13);
    }
}
