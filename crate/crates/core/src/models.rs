//! Test functions with prescribed monotonicity changes, and the textual model
//! specifications used by the command line.
//!
//! The corpus model is `f' = ±Π · w` with the positive weight
//! `w = 1 + μΠ + amp · g_q`. The kink factor `g_q` lies in `C^{q-1}` with a
//! jump in `g_q^{(q)}`, so `f ∈ C^q` with a jump in `f^{(q+1)}`. `μ` solves
//! `∫ Π w = 0`, which makes `f` periodic. Apart from the `Π g_q` term, `f'`
//! is a trigonometric polynomial of degree `2s`. Tightly clustered points
//! admit no positive weight of this form and use a concentrated one instead.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::jet::Jet;
use crate::periodic_fn::{constant_model, cos_model, sin_model, PeriodicFunctionModel};
use crate::quadrature::{GaussRule, PeriodicAntiderivative, Refinement};
use crate::trig_poly::{ExtremaCycle, Parity, TrigError};

/// Quadrature over the period applied to a weighted integrand.
type Integrator<'a> = dyn Fn(&dyn Fn(f64) -> f64) -> f64 + 'a;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelSpecError {
    #[error("empty model specification")]
    Empty,
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("malformed parameter `{0}` (expected key=value)")]
    MalformedParameter(String),
    #[error("unknown parameter `{key}` for model `{model}`")]
    UnknownParameter { model: String, key: String },
    #[error("parameter `{key}` has invalid value `{value}`")]
    InvalidValue { key: String, value: String },
    #[error("duplicate parameter `{0}`")]
    Duplicate(String),
    #[error("model parameters out of range: {0}")]
    OutOfRange(String),
    #[error(transparent)]
    Cycle(#[from] TrigError),
}

/// `name[:key=value,...]`, e.g. `corpus:s=2,q=3,amp=0.5`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelSpec {
    pub name: String,
    pub params: BTreeMap<String, String>,
}

impl FromStr for ModelSpec {
    type Err = ModelSpecError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let text = text.trim();
        if text.is_empty() {
            return Err(ModelSpecError::Empty);
        }
        let (name, rest) = match text.split_once(':') {
            Some((n, r)) => (n.trim(), Some(r)),
            None => (text, None),
        };
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(ModelSpecError::UnknownModel(name.to_string()));
        }
        let mut params = BTreeMap::new();
        if let Some(rest) = rest {
            for item in rest.split(',') {
                let item = item.trim();
                if item.is_empty() {
                    continue;
                }
                let (k, v) = item
                    .split_once('=')
                    .ok_or_else(|| ModelSpecError::MalformedParameter(item.to_string()))?;
                let (k, v) = (k.trim(), v.trim());
                if k.is_empty() || v.is_empty() {
                    return Err(ModelSpecError::MalformedParameter(item.to_string()));
                }
                if params.insert(k.to_string(), v.to_string()).is_some() {
                    return Err(ModelSpecError::Duplicate(k.to_string()));
                }
            }
        }
        Ok(ModelSpec {
            name: name.to_string(),
            params,
        })
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        for (i, (k, v)) in self.params.iter().enumerate() {
            write!(f, "{}{}={}", if i == 0 { ':' } else { ',' }, k, v)?;
        }
        Ok(())
    }
}

impl ModelSpec {
    fn allow(&self, keys: &[&str]) -> Result<(), ModelSpecError> {
        for k in self.params.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(ModelSpecError::UnknownParameter {
                    model: self.name.clone(),
                    key: k.clone(),
                });
            }
        }
        Ok(())
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, ModelSpecError> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ModelSpecError::InvalidValue {
                key: key.to_string(),
                value: v.clone(),
            }),
        }
    }

    /// Builds the model; `q_default` is used when a corpus spec leaves `q` open.
    pub fn build(&self, q_default: usize) -> Result<NamedModel, ModelSpecError> {
        match self.name.as_str() {
            "sin" => {
                self.allow(&[])?;
                Ok(NamedModel {
                    model: sin_model(),
                    cycle: Some(ExtremaCycle::new(vec![-PI / 2.0, PI / 2.0], Parity::MinFirst)?),
                })
            }
            "cos" => {
                self.allow(&[])?;
                Ok(NamedModel {
                    model: cos_model(),
                    cycle: Some(ExtremaCycle::new(vec![0.0, PI], Parity::MaxFirst)?),
                })
            }
            "const" => {
                self.allow(&["value"])?;
                let value: f64 = self.get("value", 1.0)?;
                if !value.is_finite() {
                    return Err(ModelSpecError::OutOfRange("value must be finite".into()));
                }
                Ok(NamedModel {
                    model: constant_model(value),
                    cycle: None,
                })
            }
            "corpus" | "clustered" => {
                self.allow(&["s", "q", "amp", "freq", "shift", "parity", "width", "center", "kink"])?;
                let s: usize = self.get("s", 1)?;
                let q: usize = self.get("q", q_default)?;
                let amp: f64 = self.get("amp", 0.25)?;
                let kappa: usize = self.get("freq", 4)?;
                let shift: f64 = self.get("shift", 0.3)?;
                let kind: KinkKind = self.get("kink", KinkKind::Bernoulli)?;
                let parity = match self.params.get("parity").map(String::as_str) {
                    None | Some("max") => Parity::MaxFirst,
                    Some("min") => Parity::MinFirst,
                    Some(other) => {
                        return Err(ModelSpecError::InvalidValue {
                            key: "parity".into(),
                            value: other.into(),
                        })
                    }
                };
                if !(1..=4).contains(&s)
                    || q > 12
                    || !(0.0..0.95).contains(&amp)
                    || !(1..=8).contains(&kappa)
                    || !shift.is_finite()
                {
                    return Err(ModelSpecError::OutOfRange(
                        "need 1 <= s <= 4, q <= 12, 0 <= amp < 0.95, 1 <= freq <= 8".into(),
                    ));
                }
                let points = if self.name == "clustered" {
                    let width: f64 = self.get("width", 0.2)?;
                    let center: f64 = self.get("center", 0.1)?;
                    if !(width > 0.0 && width < PI) || !(center.abs() + width / 2.0 < PI) {
                        return Err(ModelSpecError::OutOfRange("cluster must fit inside (-π, π)".into()));
                    }
                    clustered_points(s, center, width)
                } else {
                    default_points(s)
                };
                let cycle = ExtremaCycle::new(points, parity)?;
                let corpus = CorpusModel::new(cycle.clone(), kind, q, amp, kappa, shift)?;
                Ok(NamedModel {
                    model: corpus.model(),
                    cycle: Some(cycle),
                })
            }
            other => Err(ModelSpecError::UnknownModel(other.to_string())),
        }
    }
}

/// A model together with its cycle of monotonicity changes (if it has one).
#[derive(Clone, Debug)]
pub struct NamedModel {
    pub model: PeriodicFunctionModel,
    pub cycle: Option<ExtremaCycle>,
}

/// Fixed, well separated cycle points for `s <= 4`.
pub fn default_points(s: usize) -> Vec<f64> {
    match s {
        1 => vec![-2.1, 0.9],
        2 => vec![-2.2, -0.9, 0.6, 2.0],
        3 => vec![-2.7, -1.8, -0.7, 0.3, 1.2, 2.3],
        _ => (0..2 * s)
            .map(|i| -2.9 + 5.6 * i as f64 / (2 * s - 1) as f64 + 0.05 * (i % 3) as f64)
            .collect(),
    }
}

/// `2s` equispaced points spanning `width` around `center`.
pub fn clustered_points(s: usize, center: f64, width: f64) -> Vec<f64> {
    let m = 2 * s;
    (0..m)
        .map(|i| center - width / 2.0 + width * i as f64 / (m - 1) as f64)
        .collect()
}

/// Shape of the finitely smooth factor `g_q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KinkKind {
    /// Periodic Bernoulli polynomial `B_{q+1}(frac(κ(x - x0)/2π))`, scaled to
    /// `max |g| = 1`. Its Fourier coefficients are exactly `∝ j^{-(q+1)}`.
    Bernoulli,
    /// `|sin κ(x - x0)|^q`, times the sign of the sine when `q` is even.
    Sine,
}

impl FromStr for KinkKind {
    type Err = ModelSpecError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        match text {
            "bern" => Ok(KinkKind::Bernoulli),
            "sin" => Ok(KinkKind::Sine),
            other => Err(ModelSpecError::InvalidValue {
                key: "kink".into(),
                value: other.into(),
            }),
        }
    }
}

/// `g_q` with `g_q ∈ C^{q-1}` and a jump in `g_q^{(q)}`.
#[derive(Clone, Debug)]
struct Kink {
    kind: KinkKind,
    q: usize,
    kappa: f64,
    shift: f64,
    /// Monomial coefficients of the scaled Bernoulli polynomial, lowest first.
    poly: Vec<f64>,
}

/// Bernoulli numbers `B_0..=B_m` (with `B_1 = -1/2`).
fn bernoulli_numbers(m: usize) -> Vec<f64> {
    let mut b = vec![0.0; m + 1];
    b[0] = 1.0;
    for n in 1..=m {
        let mut binom = 1.0;
        let mut acc = 0.0;
        for k in 0..n {
            acc += binom * b[k];
            binom = binom * (n + 1 - k) as f64 / (k + 1) as f64;
        }
        b[n] = -acc / (n + 1) as f64;
    }
    b
}

impl Kink {
    fn new(kind: KinkKind, q: usize, kappa: usize, shift: f64) -> Self {
        let m = q + 1;
        let numbers = bernoulli_numbers(m);
        // B_m(u) = Σ C(m, k) B_k u^{m-k}
        let mut poly = vec![0.0; m + 1];
        let mut binom = 1.0;
        for (k, bk) in numbers.iter().enumerate() {
            poly[m - k] = binom * bk;
            binom = binom * (m - k) as f64 / (k + 1) as f64;
        }
        let horner = |u: f64| poly.iter().rev().fold(0.0, |acc, c| acc * u + c);
        let peak = (0..=8192).map(|i| horner(i as f64 / 8192.0).abs()).fold(0.0, f64::max);
        let poly = poly.iter().map(|c| c / peak).collect();
        Kink {
            kind,
            q,
            kappa: kappa as f64,
            shift,
            poly,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        let count = match self.kind {
            KinkKind::Bernoulli => self.kappa as usize,
            KinkKind::Sine => 2 * self.kappa as usize,
        };
        let step = 2.0 * PI / count as f64;
        (0..count).map(|j| self.shift + j as f64 * step).collect()
    }

    fn plain(&self, x: f64) -> f64 {
        match self.kind {
            KinkKind::Bernoulli => {
                let u = self.kappa * (x - self.shift) / (2.0 * PI);
                let u = u - u.floor();
                self.poly.iter().rev().fold(0.0, |acc, c| acc * u + c)
            }
            KinkKind::Sine => {
                let s = (self.kappa * (x - self.shift)).sin();
                let g = s.abs().powi(self.q as i32);
                if self.q.is_multiple_of(2) && s < 0.0 {
                    -g
                } else {
                    g
                }
            }
        }
    }

    fn jet(&self, x: &Jet) -> Jet {
        match self.kind {
            KinkKind::Bernoulli => {
                let u = (x - self.shift) * (self.kappa / (2.0 * PI));
                let u = u.offset(-u.value().floor());
                let mut acc = Jet::constant(0.0, x.order());
                for c in self.poly.iter().rev() {
                    acc = (&acc * &u) + *c;
                }
                acc
            }
            KinkKind::Sine => {
                let s = ((x - self.shift) * self.kappa).sin();
                let g = s.abs().powi(self.q as u32);
                if self.q.is_multiple_of(2) {
                    g * s.germ_sign()
                } else {
                    g
                }
            }
        }
    }
}

fn pi_plain(x: f64, points: &[f64]) -> f64 {
    points.iter().map(|y| (0.5 * (x - y)).sin()).product()
}

fn pi_jet(x: &Jet, points: &[f64]) -> Jet {
    let mut acc = Jet::constant(1.0, x.order());
    for y in points {
        acc = &acc * &((x - *y) * 0.5).sin();
    }
    acc
}

/// The positive weight `w` in `f' = ±Π w`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Weight {
    /// `1 + μΠ + amp · g`.
    Additive { mu: f64 },
    /// `exp(λ(cos(x - c) - 1)) · (1 + amp · g)`, concentrated around the middle
    /// `c` of the first lobe `(y_1, y_2)`, where `Π < 0`. Used when no additive
    /// weight is safely positive, as for tightly clustered points.
    Concentrated { lambda: f64, center: f64 },
}

impl Weight {
    fn plain(&self, x: f64, pi: f64, g: f64, amp: f64) -> f64 {
        match *self {
            Weight::Additive { mu } => 1.0 + mu * pi + amp * g,
            Weight::Concentrated { lambda, center } => (lambda * ((x - center).cos() - 1.0)).exp() * (1.0 + amp * g),
        }
    }

    fn jet(&self, x: &Jet, pi: &Jet, g: &Jet, amp: f64) -> Jet {
        match *self {
            Weight::Additive { mu } => pi * mu + &(g * amp) + 1.0,
            Weight::Concentrated { lambda, center } => {
                ((x - center).cos().offset(-1.0) * lambda).exp() * (g * amp + 1.0)
            }
        }
    }
}

/// Smallest admissible value of an additive weight.
const WEIGHT_FLOOR: f64 = 0.05;

/// The corpus function: comonotone with its cycle by construction, with
/// exactly `q` continuous derivatives.
#[derive(Clone)]
pub struct CorpusModel {
    cycle: ExtremaCycle,
    amp: f64,
    weight: Weight,
    kink: Kink,
    antiderivative: Arc<PeriodicAntiderivative>,
}

impl fmt::Debug for CorpusModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CorpusModel")
            .field("cycle", &self.cycle)
            .field("kink", &self.kink.kind)
            .field("q", &self.kink.q)
            .field("amp", &self.amp)
            .field("kappa", &self.kink.kappa)
            .field("weight", &self.weight)
            .finish()
    }
}

impl CorpusModel {
    pub fn new(
        cycle: ExtremaCycle,
        kind: KinkKind,
        q: usize,
        amp: f64,
        kappa: usize,
        shift: f64,
    ) -> Result<Self, ModelSpecError> {
        let kink = Kink::new(kind, q, kappa, shift);
        let breaks = kink.breakpoints();
        let points = cycle.points().to_vec();
        let rule = GaussRule::new(20);
        // zoom on the hull of the points, where a concentrated weight lives
        let hull = Refinement {
            center: 0.5 * (points[0] + points[points.len() - 1]),
            radius: 0.5 * (points[points.len() - 1] - points[0]) + 0.5 * (points[1] - points[0]),
            count: 64,
        };
        let edges = panel_edges(&breaks, 64, &hull);
        let integral =
            |h: &dyn Fn(f64) -> f64| -> f64 { edges.windows(2).map(|w| rule.integrate(h, w[0], w[1])).sum() };
        let weight = {
            // the additive weight is linear in mu, so one solve closes the period
            let i0 = integral(&|x| pi_plain(x, &points) * (1.0 + amp * kink.plain(x)));
            let i1 = integral(&|x| pi_plain(x, &points).powi(2));
            let additive = Weight::Additive { mu: -i0 / i1 };
            let floor = (0..8192)
                .map(|i| {
                    let x = -PI + 2.0 * PI * i as f64 / 8192.0;
                    additive.plain(x, pi_plain(x, &points), kink.plain(x), amp)
                })
                .fold(f64::INFINITY, f64::min);
            if floor >= WEIGHT_FLOOR {
                additive
            } else {
                Self::concentrated(&integral, &points, &kink, amp)?
            }
        };
        let sign = cycle.parity().sign();
        let integrand_points = points.clone();
        let integrand_kink = kink.clone();
        let integrand = move |x: f64| {
            let pi = pi_plain(x, &integrand_points);
            sign * pi * weight.plain(x, pi, integrand_kink.plain(x), amp)
        };
        let antiderivative = PeriodicAntiderivative::new(Arc::new(integrand), 0.0, 64, &breaks, &[hull]);
        Ok(CorpusModel {
            cycle,
            amp,
            weight,
            kink,
            antiderivative: Arc::new(antiderivative),
        })
    }

    /// Bisection in `log λ` for `∫ Π w = 0`. The integral is positive for
    /// small `λ` (flat weight, `Π > 0` away from the points) and negative for
    /// large `λ` (weight concentrated inside the negative lobe).
    fn concentrated(
        integral: &Integrator<'_>,
        points: &[f64],
        kink: &Kink,
        amp: f64,
    ) -> Result<Weight, ModelSpecError> {
        let center = 0.5 * (points[0] + points[1]);
        let residual = |lambda: f64| {
            let w = Weight::Concentrated { lambda, center };
            integral(&|x| {
                let pi = pi_plain(x, points);
                pi * w.plain(x, pi, kink.plain(x), amp)
            })
        };
        // the peak stays wider than a tenth of the lobe
        let lobe = points[1] - points[0];
        let (mut lo, mut hi) = (1e-3f64.ln(), (10.0 / lobe).powi(2).ln());
        if residual(lo.exp()) <= 0.0 || residual(hi.exp()) >= 0.0 {
            return Err(ModelSpecError::OutOfRange("no periodic weight found".into()));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if residual(mid.exp()) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        Ok(Weight::Concentrated {
            lambda: (0.5 * (lo + hi)).exp(),
            center,
        })
    }

    pub fn cycle(&self) -> &ExtremaCycle {
        &self.cycle
    }

    pub fn weight(&self) -> Weight {
        self.weight
    }

    /// Residual `∫ f'` over one period.
    pub fn period_defect(&self) -> f64 {
        self.antiderivative.period_integral()
    }

    /// Points where `f^{(q+1)}` jumps.
    pub fn kinks(&self) -> Vec<f64> {
        self.kink.breakpoints()
    }

    pub fn model(&self) -> PeriodicFunctionModel {
        let points = self.cycle.points().to_vec();
        let sign = self.cycle.parity().sign();
        let (weight, amp) = (self.weight, self.amp);
        let kink = self.kink.clone();
        let anti = self.antiderivative.clone();
        let label = format!(
            "corpus(s={},q={},amp={},freq={})",
            self.cycle.s(),
            kink.q,
            amp,
            kink.kappa
        );
        PeriodicFunctionModel::from_order_range(label, 10, move |x, lo, hi| {
            let mut out = Vec::with_capacity(hi + 1 - lo);
            if lo == 0 {
                out.push(anti.eval(x));
            }
            if hi == 1 {
                let pi = pi_plain(x, &points);
                out.push(sign * pi * weight.plain(x, pi, kink.plain(x), amp));
            } else if hi > 1 {
                let v = Jet::variable(x, hi - 1);
                let pi = pi_jet(&v, &points);
                let w = weight.jet(&v, &pi, &kink.jet(&v), amp);
                let d = (&pi * &w).scale(sign);
                out.extend(d.derivatives().into_iter().skip(lo.max(1) - 1));
            }
            out
        })
    }
}

fn panel_edges(breaks: &[f64], base: usize, zoom: &Refinement) -> Vec<f64> {
    let mut e: Vec<f64> = (0..=base).map(|i| -PI + 2.0 * PI * i as f64 / base as f64).collect();
    e.extend((0..=zoom.count).map(|i| {
        let x = zoom.center - zoom.radius + 2.0 * zoom.radius * i as f64 / zoom.count as f64;
        crate::quadrature::wrap_to_period(x)
    }));
    e.extend(breaks.iter().map(|&b| crate::quadrature::wrap_to_period(b)));
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    e
}
