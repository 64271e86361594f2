//! Finite differences and moduli of smoothness on the circle and on intervals.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmoothnessError {
    #[error("empty interval [{a}, {b}]")]
    EmptyRange { a: f64, b: f64 },
}

/// `Δ_h^k(g, x) = Σ_{i=0}^k (-1)^i C(k, i) g(x + i h)`.
pub fn finite_difference(g: impl Fn(f64) -> f64, x: f64, h: f64, k: usize) -> f64 {
    let mut binom = 1.0;
    let mut acc = 0.0;
    for i in 0..=k {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * g(x + i as f64 * h);
        binom = binom * (k - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Extra `x` samples packed around a narrow feature of the function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Focus {
    pub center: f64,
    pub radius: f64,
    pub count: usize,
}

/// Sampling of the `(h, x)` search space.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Resolution {
    /// Number of step sizes: half geometric, half uniform in `(0, t]`.
    pub h_count: usize,
    /// Uniform `x` samples per step size.
    pub x_count: usize,
    /// Replaces the generated step grid; values above `t` are ignored and `t` is always added.
    pub h_values: Option<Vec<f64>>,
    pub focus: Vec<Focus>,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution {
            h_count: 64,
            x_count: 2048,
            h_values: None,
            focus: Vec::new(),
        }
    }
}

impl Resolution {
    pub fn with_focus(mut self, focus: Focus) -> Self {
        self.focus.push(focus);
        self
    }

    pub fn with_h_values(mut self, h_values: Vec<f64>) -> Self {
        self.h_values = Some(h_values);
        self
    }

    pub fn with_x_count(mut self, x_count: usize) -> Self {
        self.x_count = x_count;
        self
    }

    fn steps(&self, t: f64) -> Vec<f64> {
        let mut hs: Vec<f64> = match &self.h_values {
            Some(v) => v.iter().copied().filter(|h| *h > 0.0 && *h <= t).collect(),
            None => {
                let half = (self.h_count / 2).max(1);
                let uniform = (1..=half).map(|i| t * i as f64 / half as f64);
                let geometric = (1..=self.h_count - half).map(|i| t * 2f64.powf(-(i as f64) / 2.0));
                uniform.chain(geometric).collect()
            }
        };
        hs.push(t);
        hs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        hs.dedup();
        hs
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModulusEstimate {
    pub value: f64,
    pub k: usize,
    pub t: f64,
    pub grid_h_count: usize,
    pub grid_x_count: usize,
    pub interval: Option<(f64, f64)>,
    /// Step and base point where the maximum was found.
    pub argmax: (f64, f64),
}

fn best(a: (f64, f64, f64), b: (f64, f64, f64)) -> (f64, f64, f64) {
    // ties resolved by the smaller (h, x) so the result is schedule independent
    if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
        b
    } else {
        a
    }
}

/// `ω_k(g, t)` for a 2π-periodic `g`, a lower bound of the true supremum.
pub fn modulus_circle<G>(g: G, k: usize, t: f64, resolution: &Resolution) -> ModulusEstimate
where
    G: Fn(f64) -> f64 + Sync,
{
    let t = t.min(2.0 * PI);
    let hs = resolution.steps(t);
    let m = resolution.x_count;
    let (value, h, x) = hs
        .par_iter()
        .map(|&h| {
            let mut acc = (0.0, h, -PI);
            let mut visit = |x: f64| {
                let v = finite_difference(&g, x, h, k).abs();
                acc = best(acc, (v, h, x));
            };
            for j in 0..m {
                visit(-PI + 2.0 * PI * j as f64 / m as f64);
            }
            for f in &resolution.focus {
                let lo = f.center - f.radius - k as f64 * h;
                let hi = f.center + f.radius;
                let count = f.count.max(2);
                for j in 0..count {
                    visit(lo + (hi - lo) * j as f64 / (count - 1) as f64);
                }
            }
            acc
        })
        .reduce(|| (0.0, f64::INFINITY, f64::INFINITY), best);
    ModulusEstimate {
        value,
        k,
        t,
        grid_h_count: hs.len(),
        grid_x_count: m + resolution.focus.iter().map(|f| f.count).sum::<usize>(),
        interval: None,
        argmax: (h, x),
    }
}

/// `ω_k(g, t; [a, b])`: steps clipped to `(b - a)/k`, base points in `[a, b - k h]`.
pub fn modulus_interval<G>(
    g: G,
    k: usize,
    t: f64,
    a: f64,
    b: f64,
    resolution: &Resolution,
) -> Result<ModulusEstimate, SmoothnessError>
where
    G: Fn(f64) -> f64 + Sync,
{
    if !(b > a) {
        return Err(SmoothnessError::EmptyRange { a, b });
    }
    let t_eff = t.min((b - a) / k as f64);
    let hs = resolution.steps(t_eff);
    let m = resolution.x_count.max(2);
    let (value, h, x) = hs
        .par_iter()
        .map(|&h| {
            let hi = (b - k as f64 * h).max(a);
            let mut acc = (0.0, h, a);
            for j in 0..m {
                let x = a + (hi - a) * j as f64 / (m - 1) as f64;
                let v = finite_difference(&g, x, h, k).abs();
                acc = best(acc, (v, h, x));
            }
            acc
        })
        .reduce(|| (0.0, f64::INFINITY, f64::INFINITY), best);
    Ok(ModulusEstimate {
        value,
        k,
        t,
        grid_h_count: hs.len(),
        grid_x_count: m,
        interval: Some((a, b)),
        argmax: (h, x),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn finite_difference_examples() {
        assert_eq!(finite_difference(|_| 5.0, 0.0, 0.3, 1), 0.0);
        assert_eq!(finite_difference(|x| x * x, 0.0, 1.0, 2), 2.0);
        assert_eq!(finite_difference(|x| x, 1.0, 0.5, 2), 0.0);
    }

    #[test]
    fn circle_oracles() {
        let res = Resolution::default();
        let w = modulus_circle(f64::sin, 1, PI / 4.0, &res);
        assert_relative_eq!(w.value, 2.0 * (PI / 8.0).sin(), epsilon = 1e-4);
        let full = modulus_circle(f64::sin, 1, 2.0 * PI, &res);
        assert_relative_eq!(full.value, 2.0, epsilon = 1e-4);
        assert_eq!(modulus_circle(|_| 1.5, 3, 0.2, &res).value, 0.0);
    }

    #[test]
    fn interval_oracles() {
        let res = Resolution::default();
        let affine = modulus_interval(|x| 3.0 * x + 1.0, 2, 0.1, 0.0, 1.0, &res).unwrap();
        assert!(affine.value < 1e-12);
        let sq = modulus_interval(|x| x * x, 2, 0.1, 0.0, 1.0, &res).unwrap();
        assert_relative_eq!(sq.value, 0.02, epsilon = 1e-10);
        let cube = modulus_interval(|x| x * x * x, 3, 0.2, -1.0, 1.0, &res).unwrap();
        assert_relative_eq!(cube.value, 0.048, epsilon = 1e-10);
        assert!(modulus_interval(|x| x, 1, 0.1, 1.0, 1.0, &res).is_err());
    }

    #[test]
    fn focus_finds_narrow_features() {
        let spike = |x: f64| (-(x / 1e-3).powi(2)).exp();
        let coarse = modulus_circle(spike, 2, 0.01, &Resolution::default().with_x_count(64));
        let fine = modulus_circle(
            spike,
            2,
            0.01,
            &Resolution::default().with_x_count(64).with_focus(Focus {
                center: 0.0,
                radius: 0.005,
                count: 512,
            }),
        );
        assert!(fine.value > 1.5);
        assert!(coarse.value <= fine.value);
    }
}
