//! Adversarial families for which the Jackson-type estimate fails, with
//! numerical certificates for the inequalities their divergence rests on.
//!
//! Each family cuts a trigonometric polynomial `τ` off near the origin with
//! the bump `G(·/b)` and clusters most of the cycle points inside the flat
//! region, where every comonotone polynomial is forced to have many critical
//! points. The scale `b` shrinks with `n`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::jet::Jet;
use crate::minimax::{best_comonotone, MinimaxError, MinimaxOptions};
use crate::periodic_fn::{BumpG, ModelError, PeriodicFunctionModel};
use crate::quadrature::{wrap_to_period, PeriodicAntiderivative, Refinement};
use crate::smoothness::{modulus_circle, Focus, Resolution};
use crate::trig_poly::{comonotone_defect, ExtremaCycle, Parity, TrigError, TrigPolynomial};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CounterexampleError {
    #[error("{theorem} needs {requirement}, got s = {s}, r = {r}")]
    BadRegime {
        theorem: TheoremId,
        requirement: &'static str,
        s: usize,
        r: usize,
    },
    #[error("n = {n} does not exceed the threshold c* = {c_star:.3}")]
    NTooSmall { n: usize, c_star: f64 },
    #[error("no radius δ in (0, b) with -τ^(r) > b²/4 on [-δ, δ]")]
    DeltaNotFound,
    #[error("no positive radius satisfies the derivative bound")]
    ConstantNotFound,
    #[error("need at least 3 values of n, got {0}")]
    InsufficientData(usize),
    #[error(transparent)]
    Cycle(#[from] TrigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Fit(#[from] MinimaxError),
}

/// The three adversarial families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum TheoremId {
    /// `r = 2s - 2`, `k = 3`, `b = n^{-3/2}`.
    T2_2,
    /// `r = 2s - 1`, `k = 4`, `b = n^{-4/3}`.
    T2_4,
    /// `0 <= r < 2s - 2`, `k = 2`, `b = n^{-2}`.
    T2_7,
}

impl TheoremId {
    pub const ALL: [TheoremId; 3] = [TheoremId::T2_2, TheoremId::T2_4, TheoremId::T2_7];

    /// Order `k` of the modulus in the failing estimate.
    pub fn k(self) -> usize {
        match self {
            TheoremId::T2_2 => 3,
            TheoremId::T2_4 => 4,
            TheoremId::T2_7 => 2,
        }
    }

    /// Exponent `α` of the lower bound `E_n ≳ n^α n^{-r} ω_k(F^{(r)}, 1/n)`.
    pub fn growth_exponent(self) -> f64 {
        match self {
            TheoremId::T2_2 => 0.5,
            TheoremId::T2_4 => 1.0 / 3.0,
            TheoremId::T2_7 => 1.0,
        }
    }

    /// `b(n)`.
    pub fn scale(self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            TheoremId::T2_2 => n.powf(-1.5),
            TheoremId::T2_4 => n.powf(-4.0 / 3.0),
            TheoremId::T2_7 => n.powi(-2),
        }
    }

    /// The smoothness order the family is built for: `2s - 2`, `2s - 1`, or
    /// `None` when any `r < 2s - 2` is allowed.
    pub fn fixed_r(self, s: usize) -> Option<usize> {
        match self {
            TheoremId::T2_2 => Some(2 * s - 2),
            TheoremId::T2_4 => Some(2 * s - 1),
            TheoremId::T2_7 => None,
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TheoremId::T2_2 => "T2_2",
            TheoremId::T2_4 => "T2_4",
            TheoremId::T2_7 => "T2_7",
        };
        f.write_str(name)
    }
}

impl FromStr for TheoremId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().replace('.', "_").as_str() {
            "T2_2" => Ok(TheoremId::T2_2),
            "T2_4" => Ok(TheoremId::T2_4),
            "T2_7" => Ok(TheoremId::T2_7),
            other => Err(format!("unknown family `{other}` (expected T2_2, T2_4 or T2_7)")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct BuildOptions {
    /// Build even when `n <= c*`; the asymptotic inequalities are then not guaranteed.
    pub allow_small_n: bool,
}

/// One member of a family at a given `n`.
#[derive(Clone, Debug)]
pub struct CounterexampleInstance {
    pub theorem: TheoremId,
    pub n: usize,
    pub s: usize,
    pub r: usize,
    pub b: f64,
    pub delta: Option<f64>,
    /// The radius from the derivative bound on `τ` (`c₄` or `c₉`), when the family uses one.
    pub radius_constant: Option<f64>,
    pub c_star: f64,
    pub below_threshold: bool,
    pub cycle: ExtremaCycle,
    /// The function `F`.
    pub model: PeriodicFunctionModel,
    /// The polynomial `τ`.
    pub tau: PeriodicFunctionModel,
    /// `∫_0^x τ` for the integrated families.
    pub tau_integral: Option<TrigPolynomial>,
}

/// Serializable summary of an instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceRecord {
    pub theorem: TheoremId,
    pub n: usize,
    pub s: usize,
    pub r: usize,
    pub k: usize,
    pub b: f64,
    pub delta: Option<f64>,
    pub radius_constant: Option<f64>,
    pub c_star: f64,
    pub below_threshold: bool,
    pub cycle: Vec<f64>,
}

impl CounterexampleInstance {
    pub fn k(&self) -> usize {
        self.theorem.k()
    }

    pub fn record(&self) -> InstanceRecord {
        InstanceRecord {
            theorem: self.theorem,
            n: self.n,
            s: self.s,
            r: self.r,
            k: self.k(),
            b: self.b,
            delta: self.delta,
            radius_constant: self.radius_constant,
            c_star: self.c_star,
            below_threshold: self.below_threshold,
            cycle: self.cycle.points().to_vec(),
        }
    }
}

type JetFn = Arc<dyn Fn(&Jet) -> Jet + Send + Sync>;

fn tau_t2_7(r: usize) -> JetFn {
    if r % 2 == 1 {
        let c = 2f64.powi(r as i32 + 1);
        Arc::new(move |x: &Jet| x.scale(0.5).sin().powi(r as u32 + 1).scale(c))
    } else {
        Arc::new(move |x: &Jet| -x.sin().powi(r as u32 + 1))
    }
}

fn tau_t2_4(r: usize, b: f64) -> JetFn {
    let cb = b.cos();
    Arc::new(move |x: &Jet| &(-x.cos()).offset(cb) * &x.sin().powi(r as u32))
}

fn tau_t2_2(r: usize) -> JetFn {
    Arc::new(move |x: &Jet| x.sin().powi(r as u32 + 1))
}

/// `G(x/b) τ(x)` on `[-π, π)`, extended periodically.
fn cutoff(tau: JetFn, b: f64) -> JetFn {
    Arc::new(move |x: &Jet| {
        let x = Jet::from_coeffs({
            let mut c = x.coeffs().to_vec();
            c[0] = wrap_to_period(c[0]);
            c
        });
        &BumpG::jet(&x.scale(1.0 / b)) * &tau(&x)
    })
}

fn jet_model(label: String, order: usize, body: JetFn) -> PeriodicFunctionModel {
    PeriodicFunctionModel::from_jet(label, order, move |x| body(x))
}

/// `F = ∫_0^x g` with `g` given by jets; `F^{(j)} = g^{(j-1)}`.
fn integrated_model(label: String, order: usize, g: JetFn, b: f64) -> PeriodicFunctionModel {
    let plain = g.clone();
    let integrand = Arc::new(move |x: f64| plain(&Jet::constant(x, 0)).value());
    let breaks = [-2.0 * b, -b, b, 2.0 * b];
    let zoom = Refinement {
        center: 0.0,
        radius: 2.0 * b,
        count: 64,
    };
    let anti = Arc::new(PeriodicAntiderivative::new(integrand, 0.0, 64, &breaks, &[zoom]));
    PeriodicFunctionModel::from_order_range(label, order + 1, move |x, lo, hi| {
        let mut out = Vec::with_capacity(hi + 1 - lo);
        if lo == 0 {
            out.push(anti.eval(x));
        }
        if hi >= 1 {
            let d = g(&Jet::variable(x, hi - 1)).derivatives();
            out.extend_from_slice(&d[lo.max(1) - 1..]);
        }
        out
    })
}

/// Largest `c <= max` such that `holds(x)` for all `0 < |x| <= c`: a scan
/// outward, then bisection on the first failing step.
pub fn largest_radius(holds: impl Fn(f64) -> bool, max: f64) -> Option<f64> {
    let steps = 4000;
    let ok = |x: f64| holds(x) && holds(-x);
    let mut last = 0.0f64;
    for i in 1..=steps {
        let x = max * i as f64 / steps as f64;
        if !ok(x) {
            if last == 0.0 && !ok(x * 1e-3) {
                return None;
            }
            let (mut lo, mut hi) = (last.max(x * 1e-3), x);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if ok(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(lo);
        }
        last = x;
    }
    Some(max)
}

fn equispaced(lo: f64, hi: f64, count: usize, open: bool) -> Vec<f64> {
    if open {
        (1..=count)
            .map(|i| lo + (hi - lo) * i as f64 / (count + 1) as f64)
            .collect()
    } else if count == 1 {
        vec![0.5 * (lo + hi)]
    } else {
        (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect()
    }
}

fn gate(n: usize, c_star: f64, options: BuildOptions) -> Result<bool, CounterexampleError> {
    let below = (n as f64) <= c_star;
    if below && !options.allow_small_n {
        return Err(CounterexampleError::NTooSmall { n, c_star });
    }
    Ok(below)
}

/// Family for `0 <= r < 2s - 2`, `k = 2`: `F = G(x/b) τ` with
/// `τ = 2^{r+1} sin^{r+1}(x/2)` for odd `r` and `-sin^{r+1} x` for even `r`.
pub fn build_t2_7(
    n: usize,
    r: usize,
    s: usize,
    options: BuildOptions,
) -> Result<CounterexampleInstance, CounterexampleError> {
    if s == 0 || r + 2 >= 2 * s {
        return Err(CounterexampleError::BadRegime {
            theorem: TheoremId::T2_7,
            requirement: "0 <= r < 2s - 2",
            s,
            r,
        });
    }
    let tau = tau_t2_7(r);
    let tau_r1 = {
        let tau = tau.clone();
        move |x: f64| tau(&Jet::variable(x, r + 1)).derivative(r + 1)
    };
    let c4 = largest_radius(|x| tau_r1(x).abs() >= 0.5, 1.0).ok_or(CounterexampleError::ConstantNotFound)?;
    let c_star = (2.0 / c4).sqrt().max((r + 1) as f64).max(8.0);
    let below_threshold = gate(n, c_star, options)?;
    let b = TheoremId::T2_7.scale(n);
    let points = if r.is_multiple_of(2) {
        let mut p = vec![-PI / 2.0];
        p.extend(equispaced(-b, b, 2 * s - 2, false));
        p.push(PI / 2.0);
        p
    } else {
        let mut p = vec![-PI];
        p.extend(equispaced(-b, b, 2 * s - 1, false));
        p
    };
    let cycle = ExtremaCycle::new(points, Parity::MaxFirst)?;
    let label = format!("T2_7(n={n},r={r},s={s})");
    Ok(CounterexampleInstance {
        theorem: TheoremId::T2_7,
        n,
        s,
        r,
        b,
        delta: None,
        radius_constant: Some(c4),
        c_star,
        below_threshold,
        cycle,
        model: jet_model(label, BumpG::MAX_ORDER, cutoff(tau.clone(), b)),
        tau: jet_model(format!("tau(r={r})"), 16, tau),
        tau_integral: None,
    })
}

fn integral_of(tau: &JetFn, degree: usize) -> TrigPolynomial {
    let t = TrigPolynomial::interpolate(degree + 2, |x| tau(&Jet::constant(x, 0)).value());
    let anti = t.integrate().expect("τ has zero mean");
    let at0 = anti.eval(0.0);
    anti.add(&TrigPolynomial::constant(1, -at0))
}

/// Family for `r = 2s - 1`, `k = 4`: `F = ∫_0^x G(t/b) τ(t) dt` with
/// `τ = (cos b - cos x) sin^r x`.
pub fn build_t2_4(n: usize, s: usize, options: BuildOptions) -> Result<CounterexampleInstance, CounterexampleError> {
    if s == 0 {
        return Err(CounterexampleError::BadRegime {
            theorem: TheoremId::T2_4,
            requirement: "s >= 1",
            s,
            r: 0,
        });
    }
    let r = 2 * s - 1;
    let c_star = ((r + 1) as f64).max(4096.0);
    let below_threshold = gate(n, c_star, options)?;
    let b = TheoremId::T2_4.scale(n);
    let tau = tau_t2_4(r, b);
    let tau_r = {
        let tau = tau.clone();
        move |x: f64| tau(&Jet::variable(x, r)).derivative(r)
    };
    let delta = largest_radius(|x| -tau_r(x) > b * b / 4.0, b).ok_or(CounterexampleError::DeltaNotFound)?;
    if !(delta < b) {
        return Err(CounterexampleError::DeltaNotFound);
    }
    let mut points = vec![-PI];
    points.extend(equispaced(-delta, delta, 2 * s - 1, true));
    let cycle = ExtremaCycle::new(points, Parity::MaxFirst)?;
    let label = format!("T2_4(n={n},s={s})");
    Ok(CounterexampleInstance {
        theorem: TheoremId::T2_4,
        n,
        s,
        r,
        b,
        delta: Some(delta),
        radius_constant: None,
        c_star,
        below_threshold,
        cycle,
        model: integrated_model(label, BumpG::MAX_ORDER, cutoff(tau.clone(), b), b),
        tau_integral: Some(integral_of(&tau, r + 1)),
        tau: jet_model(format!("tau(r={r},b={b:e})"), 16, tau),
    })
}

/// Family for `r = 2s - 2`, `k = 3`: `F = ∫_0^x G(t/b) sin^{r+1} t dt`.
pub fn build_t2_2(n: usize, s: usize, options: BuildOptions) -> Result<CounterexampleInstance, CounterexampleError> {
    if s == 0 {
        return Err(CounterexampleError::BadRegime {
            theorem: TheoremId::T2_2,
            requirement: "s >= 1",
            s,
            r: 0,
        });
    }
    let r = 2 * s - 2;
    let tau = tau_t2_2(r);
    let tau_r = {
        let tau = tau.clone();
        move |x: f64| tau(&Jet::variable(x, r)).derivative(r)
    };
    let c9 = largest_radius(|x| tau_r(x).abs() >= x.abs() / 2.0, 1.0).ok_or(CounterexampleError::ConstantNotFound)?;
    let c_star = (2.0 / c9).powf(2.0 / 3.0).max((r + 1) as f64).max(256.0);
    let below_threshold = gate(n, c_star, options)?;
    let b = TheoremId::T2_2.scale(n);
    let mut points = vec![-PI];
    points.extend(equispaced(b / 2.0, b, 2 * s - 1, false));
    let cycle = ExtremaCycle::new(points, Parity::MaxFirst)?;
    let label = format!("T2_2(n={n},s={s})");
    Ok(CounterexampleInstance {
        theorem: TheoremId::T2_2,
        n,
        s,
        r,
        b,
        delta: None,
        radius_constant: Some(c9),
        c_star,
        below_threshold,
        cycle,
        model: integrated_model(label, BumpG::MAX_ORDER, cutoff(tau.clone(), b), b),
        tau_integral: Some(integral_of(&tau, r + 1)),
        tau: jet_model(format!("tau(r={r})"), 16, tau),
    })
}

/// Builds the family member for `theorem`; `r` is only read for `T2_7`.
pub fn build(
    theorem: TheoremId,
    n: usize,
    r: usize,
    s: usize,
    options: BuildOptions,
) -> Result<CounterexampleInstance, CounterexampleError> {
    match theorem {
        TheoremId::T2_2 => build_t2_2(n, s, options),
        TheoremId::T2_4 => build_t2_4(n, s, options),
        TheoremId::T2_7 => build_t2_7(n, r, s, options),
    }
}

/// A measured quantity against its bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn new(name: &str, measured: f64, bound: f64) -> Self {
        BoundCheck {
            name: name.to_string(),
            measured,
            bound,
            holds: measured <= bound,
        }
    }
}

/// A measured quantity divided by a power of `b`, kept for stability checks across `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecordedConstant {
    pub name: String,
    pub measured: f64,
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub instance: InstanceRecord,
    pub comonotone_violation: f64,
    pub comonotone: bool,
    /// `|F(π) - F(-π)|` for the integrated families.
    pub closure: Option<f64>,
    pub bounds: Vec<BoundCheck>,
    pub constants: Vec<RecordedConstant>,
    pub passes: bool,
}

/// Dense samples of the period with extra points on `[-3b, 3b]`.
fn sample_points(b: f64) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..4096).map(|i| -PI + 2.0 * PI * i as f64 / 4096.0).collect();
    xs.extend((0..=4096).map(|i| -3.0 * b + 6.0 * b * i as f64 / 4096.0));
    xs
}

fn sup_diff(xs: &[f64], f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> f64 {
    xs.iter().map(|&x| (f(x) - g(x)).abs()).fold(0.0, f64::max)
}

/// Certificate slack on the norm bounds.
pub const BOUND_SLACK: f64 = 2.0;

/// Checks the instance invariants: membership in the comonotone class, the
/// norm bounds between `F` (or `f = F'`) and `τ`, the periodic closure of the
/// integrated families, and the triangle-step modulus bound at `t = 1/n`.
pub fn certify(instance: &CounterexampleInstance) -> Result<Certificate, CounterexampleError> {
    let (b, r) = (instance.b, instance.r);
    let xs = sample_points(b);
    let f = &instance.model;
    let tau = &instance.tau;
    let fd = f.derivative_fn(1)?;
    let scale = xs
        .iter()
        .map(|&x| fd(x).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut violation = 0.0f64;
    for &x in &xs {
        violation = violation.max(-(fd(x) * instance.cycle.signed_pi(x)) / scale);
    }
    let grid_report = comonotone_defect(&fd, &instance.cycle, 8192, 1e-9 * scale);
    violation = violation.max(grid_report.worst_violation / scale);
    let comonotone = violation <= 1e-9;
    let mut bounds = Vec::new();
    let mut constants = Vec::new();
    let mut closure = None;
    let two_b = 2.0 * b;
    match instance.theorem {
        TheoremId::T2_7 => {
            let d0 = sup_diff(&xs, |x| f.value(x), |x| tau.value(x));
            bounds.push(BoundCheck::new("|F - tau|", d0, BOUND_SLACK * two_b.powi(r as i32 + 1)));
            let fr = f.derivative_fn(r)?;
            let tr = tau.derivative_fn(r)?;
            let dr = sup_diff(&xs, &fr, &tr);
            constants.push(RecordedConstant {
                name: "|F^(r) - tau^(r)| / b".into(),
                measured: dr,
                constant: dr / b,
            });
            let t = 1.0 / instance.n as f64;
            let c5 = tau_norm(tau, r + 2)?;
            bounds.push(modulus_check(instance, 2, t, c5 * t * t + 4.0 * dr)?);
        }
        TheoremId::T2_4 | TheoremId::T2_2 => {
            let inner = |x: f64| fd(x);
            let tau_v = |x: f64| tau.value(x);
            let d0 = sup_diff(&xs, inner, tau_v);
            let (f_exp, big_exp, lower_power) = if instance.theorem == TheoremId::T2_4 {
                (r + 2, r + 3, 3)
            } else {
                (r + 1, r + 2, 2)
            };
            bounds.push(BoundCheck::new("|f - tau|", d0, BOUND_SLACK * two_b.powi(f_exp as i32)));
            let big_t = instance.tau_integral.as_ref().expect("integrated family");
            let dt = sup_diff(&xs, |x| f.value(x), |x| big_t.eval(x));
            bounds.push(BoundCheck::new(
                "|F - int tau|",
                dt,
                BOUND_SLACK * two_b.powi(big_exp as i32),
            ));
            if r >= 1 {
                let fr = f.derivative_fn(r)?;
                let tr = tau.derivative_fn(r - 1)?;
                let dr = sup_diff(&xs, &fr, &tr);
                constants.push(RecordedConstant {
                    name: format!("|f^(r-1) - tau^(r-1)| / b^{lower_power}"),
                    measured: dr,
                    constant: dr / b.powi(lower_power),
                });
                let k = instance.k();
                let t = 1.0 / instance.n as f64;
                let top = big_t_norm(big_t, r + k);
                let bound = top * t.powi(k as i32) + 2f64.powi(k as i32) * dr;
                bounds.push(modulus_check(instance, k, t, bound)?);
            }
            let gap = (f.value(PI) - f.value(-PI)).abs();
            closure = Some(gap);
            bounds.push(BoundCheck::new("periodic closure", gap, 1e-8));
        }
    }
    if instance.theorem == TheoremId::T2_4 {
        let tau_r0 = tau.derivatives(0.0, r)?;
        let lower = tau_r0[..r].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        bounds.push(BoundCheck::new("|tau^(j)(0)|, j < r", lower, 1e-12));
        let fact: f64 = (1..=r).map(|i| i as f64).product();
        let expected = fact * (b.cos() - 1.0);
        bounds.push(BoundCheck::new(
            "|tau^(r)(0) - r!(cos b - 1)|",
            (tau_r0[r] - expected).abs(),
            1e-9 * expected.abs(),
        ));
    }
    let passes = comonotone && bounds.iter().all(|c| c.holds);
    Ok(Certificate {
        instance: instance.record(),
        comonotone_violation: violation,
        comonotone,
        closure,
        bounds,
        constants,
        passes,
    })
}

fn tau_norm(tau: &PeriodicFunctionModel, order: usize) -> Result<f64, ModelError> {
    let g = tau.derivative_fn(order)?;
    Ok((0..4096)
        .map(|i| g(-PI + 2.0 * PI * i as f64 / 4096.0).abs())
        .fold(0.0, f64::max))
}

fn big_t_norm(t: &TrigPolynomial, order: usize) -> f64 {
    // exact sup bound from the coefficients, so the check never undershoots
    let (a, b) = (t.cos_coeffs(), t.sin_coeffs());
    (1..t.degree_bound())
        .map(|j| (j as f64).powi(order as i32) * a[j - 1].hypot(b[j - 1]))
        .sum()
}

/// Resolution that resolves the cutoff region of a family member.
pub fn instance_resolution(instance: &CounterexampleInstance, k: usize, t: f64) -> Resolution {
    Resolution::default().with_focus(Focus {
        center: 0.0,
        radius: 2.0 * instance.b + k as f64 * t,
        count: 4096,
    })
}

fn modulus_check(instance: &CounterexampleInstance, k: usize, t: f64, bound: f64) -> Result<BoundCheck, ModelError> {
    let g = instance.model.derivative_fn(instance.r)?;
    let omega = modulus_circle(&g, k, t, &instance_resolution(instance, k, t)).value;
    Ok(BoundCheck::new(
        &format!("omega_{k}(F^(r), 1/n) triangle bound"),
        omega,
        bound * (1.0 + 1e-9),
    ))
}

/// `(n, E, ω)` for one family member.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthPoint {
    pub n: usize,
    pub e_estimate: f64,
    pub omega: f64,
    pub ratio: f64,
    /// Certified lower bound from Bernstein's inequality, when computed.
    pub floor: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthReport {
    pub theorem: TheoremId,
    pub points: Vec<GrowthPoint>,
    pub exponent_fit: f64,
    pub threshold: f64,
    pub passes: bool,
}

/// Least-squares slope of `log R_n` against `log n`, `R_n = n^r E_n / ω_n`.
/// Passes when the slope reaches `fraction` times the family's exponent.
pub fn certify_growth(
    theorem: TheoremId,
    r: usize,
    values: &[(usize, f64, f64)],
    fraction: f64,
) -> Result<GrowthReport, CounterexampleError> {
    if values.len() < 3 {
        return Err(CounterexampleError::InsufficientData(values.len()));
    }
    let points: Vec<GrowthPoint> = values
        .iter()
        .map(|&(n, e, omega)| GrowthPoint {
            n,
            e_estimate: e,
            omega,
            ratio: (n as f64).powi(r as i32) * e / omega,
            floor: None,
        })
        .collect();
    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.ratio.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let threshold = fraction * theorem.growth_exponent();
    Ok(GrowthReport {
        theorem,
        points,
        exponent_fit: slope,
        threshold,
        passes: slope.is_finite() && slope >= threshold,
    })
}

/// LP settings for the growth runs: a fine grid around the cluster and
/// tolerances small enough to resolve `T'` at the level of `τ` near the origin.
pub fn growth_minimax_options(n: usize) -> MinimaxOptions {
    let mut options = MinimaxOptions::default().with_grid(8192.max(64 * n));
    options.gap_points = 64;
    options.simplex.optimality_tol = 1e-16;
    options
}

/// Lower bound `m / n^{r+1} - ‖F - τ̃‖` for every comonotone `T` of degree
/// `< n`, where `τ̃` is `τ` or `∫τ` and `m` bounds `|τ̃^{(r+1)}|` from below
/// at the forced zero of `T^{(r+1)}`. `None` when `n <= r + 1`.
pub fn bernstein_floor(inst: &CounterexampleInstance) -> Option<f64> {
    let (n, r, b) = (inst.n, inst.r, inst.b);
    if n <= r + 1 {
        return None;
    }
    let xs = sample_points(b);
    let (m, gap) = match inst.theorem {
        TheoremId::T2_7 => (0.5, sup_diff(&xs, |x| inst.model.value(x), |x| inst.tau.value(x))),
        TheoremId::T2_4 | TheoremId::T2_2 => {
            let big_t = inst.tau_integral.as_ref()?;
            let m = if inst.theorem == TheoremId::T2_4 {
                b * b / 4.0
            } else {
                b / 4.0
            };
            (m, sup_diff(&xs, |x| inst.model.value(x), |x| big_t.eval(x)))
        }
    };
    Some(m / (n as f64).powi(r as i32 + 1) - gap)
}

/// Builds one member per `n`, estimates `E_n^{(1)}` by the discrete fit and
/// `ω_k(F^{(r)}, 1/n)`, and fits the growth exponent.
pub fn growth_run(
    theorem: TheoremId,
    s: usize,
    r: usize,
    ns: &[usize],
    options: BuildOptions,
    fraction: f64,
) -> Result<(GrowthReport, Vec<CounterexampleInstance>), CounterexampleError> {
    let jobs: Vec<Result<_, CounterexampleError>> = ns
        .par_iter()
        .map(|&n| {
            let inst = build(theorem, n, r, s, options)?;
            let (e, omega) = growth_values(&inst, &growth_minimax_options(n))?;
            let floor = bernstein_floor(&inst);
            Ok((inst, e, omega, floor))
        })
        .collect();
    let mut values = Vec::new();
    let mut floors = Vec::new();
    let mut instances = Vec::new();
    for job in jobs {
        let (inst, e, omega, floor) = job?;
        values.push((inst.n, e, omega));
        floors.push(floor);
        instances.push(inst);
    }
    let r = instances.first().map(|i| i.r).unwrap_or(r);
    let mut report = certify_growth(theorem, r, &values, fraction)?;
    for (p, f) in report.points.iter_mut().zip(floors) {
        p.floor = f;
    }
    Ok((report, instances))
}

/// `(E_n^{(1)} estimate, ω_k(F^{(r)}, 1/n))` for one instance.
pub fn growth_values(
    inst: &CounterexampleInstance,
    minimax: &MinimaxOptions,
) -> Result<(f64, f64), CounterexampleError> {
    let model = &inst.model;
    let e = best_comonotone(&|x| model.value(x), &inst.cycle, inst.n, minimax)?.value;
    let t = 1.0 / inst.n as f64;
    let g = model.derivative_fn(inst.r)?;
    let omega = modulus_circle(&g, inst.k(), t, &instance_resolution(inst, inst.k(), t)).value;
    Ok((e, omega))
}
