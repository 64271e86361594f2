//! Uniform partition of the period, the components around the extrema, the
//! local monotone and comonotone polynomial pieces, and the stitched
//! piecewise polynomial `S`.
//!
//! Everything lives in original coordinates on the window
//! `[w, w + 2π]`, `w = -π + θ`, where the rotation `θ` is a whole number of
//! cells chosen so that the window edge is not interior to a component.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::minimax::{best_algebraic, best_comonotone, MinimaxError, MinimaxOptions};
use crate::periodic_fn::{ModelError, PeriodicFunctionModel};
use crate::poly::LocalPoly;
use crate::smoothness::{modulus_circle, modulus_interval, Focus, Resolution, SmoothnessError};
use crate::trig_poly::ExtremaCycle;

/// Sample count per piece for hypothesis validation and error measurement.
pub const CHECK_POINTS: usize = 257;

/// Relative tolerance for sign hypotheses on sampled data.
pub const SIGN_TOL: f64 = 1e-9;

/// Inflation applied to measured bounds (`c₀`, `c₁`).
pub const INFLATION: f64 = 1.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PieceError {
    #[error("derivative changes sign on [{a}, {b}]: f'({x}) = {value:e}")]
    NotMonotone { a: f64, b: f64, x: f64, value: f64 },
    #[error("renormalization span vanishes on [{a}, {b}]")]
    DegenerateSpan { a: f64, b: f64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error(transparent)]
    Fit(#[from] MinimaxError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Smoothness(#[from] SmoothnessError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("n = {n} leaves too few cells for s = {s} (need n > 6s)")]
    TooFewCells { n: usize, s: usize },
    #[error("(r, k) = ({r}, {k}) is not covered by the local constructions for s = {s}")]
    RegimeUnsupported { r: usize, k: usize, s: usize },
    #[error("no local construction for {nu} extrema in one component with (r, k) = ({r}, {k})")]
    ComponentUnsupported { nu: usize, r: usize, k: usize },
    #[error(transparent)]
    Piece(#[from] PieceError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("pieces do not form a partition: {0}")]
    Layout(String),
}

fn grid(a: f64, b: f64, count: usize) -> impl Iterator<Item = f64> {
    let count = count.max(2);
    (0..count).map(move |i| a + (b - a) * i as f64 / (count - 1) as f64)
}

/// `π_ν(x) = ∏ (x - t_i)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PiNu {
    knots: Vec<f64>,
}

impl PiNu {
    pub fn new(knots: Vec<f64>) -> Result<Self, PieceError> {
        if !knots.windows(2).all(|w| w[0] < w[1]) || knots.iter().any(|t| !t.is_finite()) {
            return Err(PieceError::HypothesisViolation(
                "knots must be finite and increasing".into(),
            ));
        }
        Ok(PiNu { knots })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn nu(&self) -> usize {
        self.knots.len()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.knots.iter().map(|t| x - t).product()
    }

    pub fn polynomial(&self, a: f64, b: f64) -> LocalPoly {
        LocalPoly::from_roots(a, b, &self.knots)
    }
}

/// One cell-aligned component `(a, b)` of the neighbourhood of the extrema.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Component {
    pub a: f64,
    pub b: f64,
    /// Index of the first cell within the window.
    pub first_cell: usize,
    pub cells: usize,
    /// Extrema inside, lifted into the window and increasing.
    pub points: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Partition {
    pub n: usize,
    pub h: f64,
    /// Shift `θ` of the window start from `-π`.
    pub rotation: f64,
    pub rotation_cells: usize,
    pub components: Vec<Component>,
    /// Cells `[a, b]` outside every component, in window order.
    pub outside_cells: Vec<(f64, f64)>,
    /// Set when `n <= 6s` was accepted through the override.
    pub small_n: bool,
}

impl Partition {
    pub fn window_start(&self) -> f64 {
        -PI + self.rotation
    }

    /// Nodes `x_j` of the window, `2n + 1` values.
    pub fn breakpoints(&self) -> Vec<f64> {
        let w = self.window_start();
        (0..=2 * self.n).map(|j| w + j as f64 * self.h).collect()
    }

    pub fn max_component_width(&self) -> f64 {
        self.components.iter().map(|c| c.b - c.a).fold(0.0, f64::max)
    }
}

/// Cell index `c` of `[-π + c h, -π + (c + 1) h)` holding `y`.
fn cell_of(y: f64, h: f64, cells: usize) -> usize {
    let y = crate::quadrature::wrap_to_period(y);
    let c = ((y + PI) / h).floor() as i64;
    c.rem_euclid(cells as i64) as usize
}

/// The partition `x_j = jπ/n` with components `O_μ` around the cycle points.
/// `allow_small_n` accepts `n <= 6s` as long as some cell stays outside the components.
pub fn build_partition(n: usize, cycle: &ExtremaCycle, allow_small_n: bool) -> Result<Partition, PartitionError> {
    let s = cycle.s();
    if n == 0 || (n <= 6 * s && !allow_small_n) {
        return Err(PartitionError::TooFewCells { n, s });
    }
    let cells = 2 * n;
    let h = PI / n as f64;
    let homes: Vec<usize> = cycle.points().iter().map(|&y| cell_of(y, h, cells)).collect();
    let mut marked = vec![false; cells];
    for &c in &homes {
        for d in [cells - 1, 0, 1] {
            marked[(c + d) % cells] = true;
        }
    }
    if marked.iter().all(|m| *m) {
        return Err(PartitionError::TooFewCells { n, s });
    }
    // the window edge must not be interior to a component
    let rotation_cells = (0..cells)
        .find(|&m| !(marked[(m + cells - 1) % cells] && marked[m]))
        .expect("an unmarked cell exists");
    let rotation = rotation_cells as f64 * h;
    let w = -PI + rotation;
    let rotated = |c: usize| (c + cells - rotation_cells) % cells;
    let mut components: Vec<Component> = Vec::new();
    let mut outside_cells = Vec::new();
    let mut c = 0;
    while c < cells {
        let orig = (c + rotation_cells) % cells;
        if !marked[orig] {
            outside_cells.push((w + c as f64 * h, w + (c + 1) as f64 * h));
            c += 1;
            continue;
        }
        let start = c;
        while c < cells && marked[(c + rotation_cells) % cells] {
            c += 1;
        }
        components.push(Component {
            a: w + start as f64 * h,
            b: w + c as f64 * h,
            first_cell: start,
            cells: c - start,
            points: Vec::new(),
        });
    }
    for (&y, &home) in cycle.points().iter().zip(&homes) {
        let rc = rotated(home);
        // lift y to the copy inside the window
        let base = crate::quadrature::wrap_to_period(y);
        let lifted = if home < rotation_cells { base + 2.0 * PI } else { base };
        let comp = components
            .iter_mut()
            .find(|cm| cm.first_cell <= rc && rc < cm.first_cell + cm.cells)
            .expect("every home cell is marked");
        comp.points.push(lifted);
    }
    for comp in &mut components {
        comp.points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    Ok(Partition {
        n,
        h,
        rotation,
        rotation_cells,
        components,
        outside_cells,
        small_n: n <= 6 * s,
    })
}

/// How a local piece was built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceKind {
    /// Linear interpolant of the endpoint values.
    Linear,
    /// Monotone piece interpolating both endpoints.
    Monotone,
    /// The constant `f(a)`.
    Flat,
    /// `f(a) + ∫ L` with `L` interpolating `f'` at `a`, the extrema and `b`.
    Interpolating,
    /// `f(a) + ∫ (L + c π_ν)` with stacked right knots.
    Corrected,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalPiece {
    pub polynomial: LocalPoly,
    pub kind: PieceKind,
    /// `+1` when the construction ran on `f`, `-1` when on `-f`.
    pub orientation: f64,
    /// Sampled `‖f - p‖_{[a, b]}`.
    pub error: f64,
    /// Additive constant or coefficient of `π_ν` added to the fitted derivative.
    pub correction: f64,
}

impl LocalPiece {
    pub fn a(&self) -> f64 {
        self.polynomial.a
    }

    pub fn b(&self) -> f64 {
        self.polynomial.b
    }
}

fn piece_error(f: &PeriodicFunctionModel, p: &LocalPoly) -> f64 {
    grid(p.a, p.b, CHECK_POINTS)
        .map(|x| (f.value(x) - p.eval(x)).abs())
        .fold(0.0, f64::max)
}

/// Orientation `σ` with `σ f' π ≥ 0` on `[a, b]`, or a violation.
fn orientation(fd: &dyn Fn(f64) -> f64, pi: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<f64, (f64, f64)> {
    let samples: Vec<(f64, f64)> = grid(a, b, CHECK_POINTS).map(|x| (x, fd(x) * pi(x))).collect();
    let scale = samples.iter().fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    let tol = SIGN_TOL * scale;
    let sum: f64 = samples.iter().map(|(_, v)| v).sum();
    let sigma = if sum >= 0.0 { 1.0 } else { -1.0 };
    match samples.iter().find(|(_, v)| sigma * v < -tol) {
        Some(&(x, v)) => Err((x, v)),
        None => Ok(sigma),
    }
}

fn check_geometry(a: f64, b: f64, h: f64, knots: &[f64], max_cells: usize) -> Result<(), PieceError> {
    let eps = 1e-9 * h.max(f64::MIN_POSITIVE);
    if !(h > 0.0) || !(b > a) {
        return Err(PieceError::HypothesisViolation("need h > 0 and a < b".into()));
    }
    if b - a < 3.0 * h - eps || b - a > max_cells as f64 * h + eps {
        return Err(PieceError::HypothesisViolation(format!(
            "interval length {} outside [3h, {}h] with h = {h}",
            b - a,
            max_cells
        )));
    }
    if let (Some(&first), Some(&last)) = (knots.first(), knots.last()) {
        if first < a + h - eps || last > b - h + eps {
            return Err(PieceError::HypothesisViolation(format!(
                "knots must lie in [a + h, b - h] = [{}, {}]",
                a + h,
                b - h
            )));
        }
    }
    Ok(())
}

/// Monotone piece interpolating `f` at both endpoints, of degree `< r + k`.
/// The fitted derivative is lifted by `1.05 ‖f' - p‖` and the antiderivative
/// is renormalized affinely onto `f(a), f(b)`. For `r = 0` the linear
/// interpolant is returned.
pub fn monotone_piece(f: &PeriodicFunctionModel, a: f64, b: f64, r: usize, k: usize) -> Result<LocalPiece, PieceError> {
    if !(b > a) {
        return Err(PieceError::HypothesisViolation("need a < b".into()));
    }
    let fd = f.derivative_fn(1)?;
    let sigma = orientation(&fd, &|_| 1.0, a, b).map_err(|(x, value)| PieceError::NotMonotone { a, b, x, value })?;
    let (fa, fb) = (f.value(a), f.value(b));
    let linear = || LocalPoly::interpolate(a, b, &[a, b], &[fa, fb]);
    if r == 0 {
        let polynomial = linear();
        return Ok(LocalPiece {
            error: piece_error(f, &polynomial),
            polynomial,
            kind: PieceKind::Linear,
            orientation: sigma,
            correction: 0.0,
        });
    }
    let g = |x: f64| sigma * fd(x);
    let m = (r + k).saturating_sub(1).max(1);
    // Chebyshev interpolant first, so the discrete fit works on a small residual
    let nodes: Vec<f64> = (0..m)
        .map(|i| 0.5 * (a + b) - 0.5 * (b - a) * (PI * (i as f64 + 0.5) / m as f64).cos())
        .collect();
    let values: Vec<f64> = nodes.iter().map(|&x| g(x)).collect();
    let p0 = LocalPoly::interpolate(a, b, &nodes, &values);
    let fit = best_algebraic(&|x| g(x) - p0.eval(x), a, b, m)?;
    let p = p0.add(&fit.polynomial);
    let deviation = grid(a, b, 4 * CHECK_POINTS)
        .map(|x| (g(x) - p.eval(x)).abs())
        .fold(fit.value, f64::max);
    let lift = INFLATION * deviation;
    let tilde = p.add_constant(lift).antiderivative(a);
    let span = tilde.eval(b);
    let rise = sigma * (fb - fa);
    let scale = fa.abs().max(fb.abs()).max(f64::MIN_POSITIVE);
    if rise.abs() <= 1e-14 * scale {
        let polynomial = LocalPoly::constant(a, b, fa);
        return Ok(LocalPiece {
            error: piece_error(f, &polynomial),
            polynomial,
            kind: PieceKind::Flat,
            orientation: sigma,
            correction: lift,
        });
    }
    if !(span > 0.0) || rise < 0.0 {
        return Err(PieceError::DegenerateSpan { a, b });
    }
    let polynomial = tilde.scale((fb - fa) / span).add_constant(fa);
    Ok(LocalPiece {
        error: piece_error(f, &polynomial),
        polynomial,
        kind: PieceKind::Monotone,
        orientation: sigma,
        correction: lift,
    })
}

/// Piece for `r` extrema `t_1..t_r` in `[a + h, b - h]`, `3h <= b - a <= 3rh`:
/// `p = f(a) + ∫ L` with `L` interpolating `f'` at `a, t_1, ..., t_r, b`.
/// Since `f'(t_i) = 0`, `L = π_r ℓ` with `ℓ` linear, which is how it is formed.
pub fn comonotone_piece_full(
    f: &PeriodicFunctionModel,
    a: f64,
    b: f64,
    knots: &[f64],
    r: usize,
    h: f64,
) -> Result<LocalPiece, PieceError> {
    if r == 0 || knots.len() != r {
        return Err(PieceError::HypothesisViolation(format!(
            "need r >= 1 and exactly r = {r} knots, got {}",
            knots.len()
        )));
    }
    let pi = PiNu::new(knots.to_vec())?;
    check_geometry(a, b, h, knots, 3 * r)?;
    let fd = f.derivative_fn(1)?;
    let sigma = orientation(&fd, &|x| pi.eval(x), a, b)
        .map_err(|(x, v)| PieceError::HypothesisViolation(format!("f'·π_r = {v:e} at {x}")))?;
    let ell = LocalPoly::interpolate(a, b, &[a, b], &[fd(a) / pi.eval(a), fd(b) / pi.eval(b)]);
    let derivative = pi.polynomial(a, b).mul(&ell);
    let polynomial = derivative.antiderivative(a).add_constant(f.value(a));
    Ok(LocalPiece {
        error: piece_error(f, &polynomial),
        polynomial,
        kind: PieceKind::Interpolating,
        orientation: sigma,
        correction: 0.0,
    })
}

/// Piece for `ν <= r - 1` extrema, `r >= 2`, `3h <= b - a <= 3νh`:
/// `L` interpolates `f'` at `a`, the extrema, and `r + k - ν - 2` knots
/// stacked in `(b - h, b]`; then `p = f(a) + ∫ (L + c π_ν)` with
/// `c = 1.05 max |f' - L| / |π_ν|`.
pub fn comonotone_piece_partial(
    f: &PeriodicFunctionModel,
    a: f64,
    b: f64,
    knots: &[f64],
    r: usize,
    k: usize,
    h: f64,
) -> Result<LocalPiece, PieceError> {
    let nu = knots.len();
    if r < 2 || nu == 0 || nu >= r || k == 0 {
        return Err(PieceError::HypothesisViolation(format!(
            "need r >= 2, k >= 1 and 1 <= ν <= r - 1, got r = {r}, ν = {nu}"
        )));
    }
    let pi = PiNu::new(knots.to_vec())?;
    check_geometry(a, b, h, knots, 3 * nu)?;
    let fd = f.derivative_fn(1)?;
    let sigma = orientation(&fd, &|x| pi.eval(x), a, b)
        .map_err(|(x, v)| PieceError::HypothesisViolation(format!("f'·π_ν = {v:e} at {x}")))?;
    let g = |x: f64| sigma * fd(x);
    let stacked = r + k - nu - 2;
    // L = π_ν q, q interpolating g / π_ν at a and the stacked knots
    let mut xs = vec![a];
    xs.extend((1..=stacked).map(|i| b - h + i as f64 * h / stacked as f64));
    let vals: Vec<f64> = xs.iter().map(|&x| g(x) / pi.eval(x)).collect();
    let q = LocalPoly::interpolate(a, b, &xs, &vals);
    let pin = pi.polynomial(a, b);
    let l = pin.mul(&q);
    let skip = 1e-9 * h;
    let bound = grid(a, b, 4 * CHECK_POINTS)
        .filter(|x| knots.iter().all(|t| (x - t).abs() > skip))
        .map(|x| ((g(x) - l.eval(x)) / pi.eval(x)).abs())
        .fold(0.0, f64::max);
    let correction = INFLATION * bound;
    let derivative = l.add(&pin.scale(correction));
    let polynomial = derivative
        .antiderivative(a)
        .add_constant(sigma * f.value(a))
        .scale(sigma);
    Ok(LocalPiece {
        error: piece_error(f, &polynomial),
        polynomial,
        kind: PieceKind::Corrected,
        orientation: sigma,
        correction,
    })
}

/// Empirical constant `‖f - p‖ / (scale^r ω_k(f^{(r)}, t; [a, b]))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorConstant {
    pub error: f64,
    pub omega: f64,
    pub ratio: f64,
}

fn safe_ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `error / (scale^r ω_k(f^{(r)}, t; [a, b]))` for a piece on `[a, b]`.
#[allow(clippy::too_many_arguments)]
pub fn error_constant(
    f: &PeriodicFunctionModel,
    error: f64,
    a: f64,
    b: f64,
    r: usize,
    k: usize,
    t: f64,
    scale: f64,
) -> Result<ErrorConstant, PieceError> {
    let fr = f.derivative_fn(r)?;
    let omega = modulus_interval(&fr, k, t, a, b, &Resolution::default().with_x_count(512))?.value;
    Ok(ErrorConstant {
        error,
        omega,
        ratio: safe_ratio(error, scale.powi(r as i32) * omega),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub lhs: f64,
    pub rhs_without_c: f64,
    pub ratio: f64,
}

impl ProbeReport {
    fn new(lhs: f64, rhs_without_c: f64) -> Self {
        ProbeReport {
            lhs,
            rhs_without_c,
            ratio: safe_ratio(lhs, rhs_without_c),
        }
    }
}

/// `‖f - f(a)‖_{[a, b]}` against `h^r ω_2(f^{(r)}, h; [a, b])` for `r + 1`
/// extrema in `[a + h, b - h]`, `3h <= b - a <= 3(r + 1)h`.
pub fn probe_flat_component(
    f: &PeriodicFunctionModel,
    a: f64,
    b: f64,
    knots: &[f64],
    r: usize,
    h: f64,
) -> Result<ProbeReport, PieceError> {
    if knots.len() != r + 1 {
        return Err(PieceError::HypothesisViolation(format!(
            "need r + 1 = {} knots, got {}",
            r + 1,
            knots.len()
        )));
    }
    let pi = PiNu::new(knots.to_vec())?;
    check_geometry(a, b, h, knots, 3 * (r + 1))?;
    let fd = f.derivative_fn(1)?;
    orientation(&fd, &|x| pi.eval(x), a, b)
        .map_err(|(x, v)| PieceError::HypothesisViolation(format!("f'·π_(r+1) = {v:e} at {x}")))?;
    let fa = f.value(a);
    let lhs = grid(a, b, 4 * CHECK_POINTS)
        .map(|x| (f.value(x) - fa).abs())
        .fold(0.0, f64::max);
    let fr = f.derivative_fn(r)?;
    let omega = modulus_interval(&fr, 2, h, a, b, &Resolution::default().with_x_count(1024))?.value;
    Ok(ProbeReport::new(lhs, h.powi(r as i32) * omega))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterProbe {
    /// `‖f - f(y_{2s})‖` against `h^{2s-1} ω_{k+1}(f^{(2s-1)}, h)`.
    pub odd: ProbeReport,
    /// `‖f - f(y_{2s})‖` against `h^{2s} ω_k(f^{(2s)}, h)`.
    pub even: ProbeReport,
    /// `‖f - f(y_1)‖` against `h^{2s-2} ω_2(f^{(2s-2)}, h)`.
    pub second: ProbeReport,
}

/// Norm bounds for a cycle whose points all lie within `(6s - 2)h`.
pub fn probe_cluster(
    f: &PeriodicFunctionModel,
    cycle: &ExtremaCycle,
    h: f64,
    k: usize,
) -> Result<ClusterProbe, PieceError> {
    let s = cycle.s();
    let pts = cycle.points();
    let (y1, y2s) = (pts[0], pts[pts.len() - 1]);
    if !(h > 0.0) || k == 0 || y2s - y1 > (6 * s - 2) as f64 * h * (1.0 + 1e-12) {
        return Err(PieceError::HypothesisViolation(format!(
            "cluster width {} exceeds (6s - 2)h = {}",
            y2s - y1,
            (6 * s - 2) as f64 * h
        )));
    }
    let fd = f.derivative_fn(1)?;
    let xs: Vec<f64> = (0..4096)
        .map(|i| -PI + 2.0 * PI * i as f64 / 4096.0)
        .chain(grid(y1 - h, y2s + h, 2048))
        .collect();
    let scale = xs
        .iter()
        .map(|&x| (fd(x) * cycle.signed_pi(x)).abs())
        .fold(0.0, f64::max);
    if let Some(&x) = xs.iter().find(|&&x| fd(x) * cycle.signed_pi(x) < -SIGN_TOL * scale) {
        return Err(PieceError::HypothesisViolation(format!(
            "f is not comonotone with the cycle at {x}"
        )));
    }
    let (v1, v2s) = (f.value(y1), f.value(y2s));
    let (mut d1, mut d2s) = (0.0f64, 0.0f64);
    for &x in &xs {
        let v = f.value(x);
        d1 = d1.max((v - v1).abs());
        d2s = d2s.max((v - v2s).abs());
    }
    let resolution = Resolution::default().with_focus(Focus {
        center: 0.5 * (y1 + y2s),
        radius: 0.5 * (y2s - y1) + 2.0 * h,
        count: 2048,
    });
    let omega = |order: usize, kk: usize| -> Result<f64, PieceError> {
        let g = f.derivative_fn(order)?;
        Ok(modulus_circle(&g, kk, h, &resolution).value)
    };
    Ok(ClusterProbe {
        odd: ProbeReport::new(d2s, h.powi(2 * s as i32 - 1) * omega(2 * s - 1, k + 1)?),
        even: ProbeReport::new(d2s, h.powi(2 * s as i32) * omega(2 * s, k)?),
        second: ProbeReport::new(d1, h.powi(2 * s as i32 - 2) * omega(2 * s - 2, 2)?),
    })
}

/// Continuous piecewise polynomial on consecutive intervals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PiecewisePolynomial {
    pieces: Vec<LocalPoly>,
}

impl PiecewisePolynomial {
    pub fn new(pieces: Vec<LocalPoly>) -> Result<Self, ParseError> {
        if pieces.is_empty() {
            return Err(ParseError::Layout("no pieces".into()));
        }
        for w in pieces.windows(2) {
            if w[0].b != w[1].a {
                return Err(ParseError::Layout(format!("gap between {} and {}", w[0].b, w[1].a)));
            }
        }
        Ok(PiecewisePolynomial { pieces })
    }

    pub fn pieces(&self) -> &[LocalPoly] {
        &self.pieces
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.pieces.iter().map(|p| p.a).collect();
        out.push(self.pieces[self.pieces.len() - 1].b);
        out
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.pieces[0].a, self.pieces[self.pieces.len() - 1].b)
    }

    /// Largest coefficient count over the pieces (degree bound `m`).
    pub fn degree_bound(&self) -> usize {
        self.pieces.iter().map(LocalPoly::len).max().unwrap_or(1)
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let (lo, hi) = self.domain();
        let mut x = x;
        // one-period domains are evaluated periodically
        if (x < lo || x > hi) && ((hi - lo) - 2.0 * PI).abs() < 1e-9 {
            x = lo + (x - lo).rem_euclid(2.0 * PI);
        }
        let i = self.pieces.partition_point(|p| p.b < x).min(self.pieces.len() - 1);
        (i, x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (i, x) = self.locate(x);
        self.pieces[i].eval(x)
    }

    /// One-sided derivative from the piece containing `x`.
    pub fn derivative(&self, x: f64) -> f64 {
        let (i, x) = self.locate(x);
        self.pieces[i].derivative().eval(x)
    }

    /// Largest jump at an interior breakpoint.
    pub fn continuity_defect(&self) -> f64 {
        self.pieces
            .windows(2)
            .map(|w| (w[0].eval(w[0].b) - w[1].eval(w[1].a)).abs())
            .fold(0.0, f64::max)
    }

    /// Sampled sup norm, `per_piece` points on each piece.
    pub fn grid_norm(&self, per_piece: usize) -> f64 {
        self.pieces
            .iter()
            .flat_map(|p| grid(p.a, p.b, per_piece).map(move |x| p.eval(x).abs()))
            .fold(0.0, f64::max)
    }

    /// Plain text: a `pieces <count>` header, then one line `a b : c_0 c_1 ...`
    /// per piece with coefficients in the normalized variable of that piece.
    pub fn to_text(&self) -> String {
        let mut out = format!("pieces {}\n", self.pieces.len());
        for p in &self.pieces {
            let _ = write!(out, "{:e} {:e} :", p.a, p.b);
            for c in &p.coeffs {
                let _ = write!(out, " {c:e}");
            }
            out.push('\n');
        }
        out
    }

    /// Inverse of [`to_text`](Self::to_text). Blank lines and `#` comments are ignored.
    pub fn from_text(text: &str) -> Result<Self, ParseError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let syntax = |line: usize, message: &str| ParseError::Syntax {
            line,
            message: message.to_string(),
        };
        let (line, header) = lines.next().ok_or_else(|| syntax(0, "empty input"))?;
        let count: usize = header
            .strip_prefix("pieces")
            .map(str::trim)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| syntax(line, "expected `pieces <count>`"))?;
        let number = |line: usize, token: &str| -> Result<f64, ParseError> {
            match token.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(syntax(line, &format!("bad number `{token}`"))),
            }
        };
        let mut pieces = Vec::new();
        for (line, body) in lines.by_ref() {
            if pieces.len() == count {
                return Err(syntax(line, "more pieces than declared"));
            }
            let (bounds, coeffs) = body.split_once(':').ok_or_else(|| syntax(line, "missing `:`"))?;
            let bounds: Vec<&str> = bounds.split_whitespace().collect();
            if bounds.len() != 2 {
                return Err(syntax(line, "expected two interval ends"));
            }
            let (a, b) = (number(line, bounds[0])?, number(line, bounds[1])?);
            if !(a < b) {
                return Err(syntax(line, "interval must have a < b"));
            }
            let coeffs = coeffs
                .split_whitespace()
                .map(|t| number(line, t))
                .collect::<Result<Vec<_>, _>>()?;
            if coeffs.is_empty() {
                return Err(syntax(line, "no coefficients"));
            }
            pieces.push(LocalPoly::new(a, b, coeffs));
        }
        if pieces.len() != count {
            return Err(ParseError::Layout(format!(
                "declared {count} pieces, found {}",
                pieces.len()
            )));
        }
        Self::new(pieces)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StitchOptions {
    /// Accept `n <= 6s` when the cells still leave room outside the components.
    pub allow_small_n: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PieceSummary {
    pub a: f64,
    pub b: f64,
    pub kind: PieceKind,
    pub extrema: usize,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StitchedSpline {
    pub spline: PiecewisePolynomial,
    pub partition: Partition,
    /// Sampled `‖f - S‖` over the window.
    pub error: f64,
    /// Smallest `σ(x) S'(x) / max |S'|` off the cycle points; nonnegative when comonotone.
    pub sign_margin: f64,
    pub continuity_defect: f64,
    pub single_component: bool,
    pub pieces: Vec<PieceSummary>,
}

/// Whether the local constructions cover `(r, k)` for cycles of `s` pairs.
pub fn stitch_supported(s: usize, r: usize, k: usize) -> bool {
    if k == 0 || r + 2 < 2 * s {
        return false;
    }
    let outside = r >= 1 || k <= 2;
    let inside = k <= 2 || (k == 3 && r + 1 >= 2 * s) || r >= 2 * s;
    outside && inside
}

fn component_piece(
    f: &PeriodicFunctionModel,
    comp: &Component,
    r: usize,
    k: usize,
    h: f64,
) -> Result<LocalPiece, PartitionError> {
    let nu = comp.points.len();
    let unsupported = PartitionError::ComponentUnsupported { nu, r, k };
    if nu == r + 1 && k <= 2 {
        let polynomial = LocalPoly::constant(comp.a, comp.b, f.value(comp.a));
        return Ok(LocalPiece {
            error: piece_error(f, &polynomial),
            polynomial,
            kind: PieceKind::Flat,
            orientation: 1.0,
            correction: 0.0,
        });
    }
    if nu == r && k <= 3 {
        return Ok(comonotone_piece_full(f, comp.a, comp.b, &comp.points, r, h)?);
    }
    if nu < r && r >= 2 {
        return Ok(comonotone_piece_partial(f, comp.a, comp.b, &comp.points, r, k, h)?);
    }
    Err(unsupported)
}

/// The stitched spline `S = f(w) + ∫_w^x S̃'` over the window, where `S̃`
/// is built cell by cell outside the components and component by component
/// inside. With a single component `S ≡ f(0)`.
pub fn stitch_s(
    f: &PeriodicFunctionModel,
    cycle: &ExtremaCycle,
    n: usize,
    r: usize,
    k: usize,
    options: StitchOptions,
) -> Result<StitchedSpline, PartitionError> {
    let s = cycle.s();
    if !stitch_supported(s, r, k) {
        return Err(PartitionError::RegimeUnsupported { r, k, s });
    }
    let partition = build_partition(n, cycle, options.allow_small_n)?;
    let w = partition.window_start();
    let h = partition.h;
    if partition.components.len() == 1 {
        let constant = LocalPoly::constant(w, w + 2.0 * PI, f.value(0.0));
        let spline = PiecewisePolynomial::new(vec![constant]).expect("one piece");
        let error = window_error(f, &spline);
        return Ok(StitchedSpline {
            error,
            sign_margin: 0.0,
            continuity_defect: 0.0,
            single_component: true,
            pieces: vec![PieceSummary {
                a: w,
                b: w + 2.0 * PI,
                kind: PieceKind::Flat,
                extrema: 2 * s,
                error,
            }],
            spline,
            partition,
        });
    }
    let mut local: Vec<(LocalPiece, usize)> = Vec::new();
    let mut comps = partition.components.iter().peekable();
    let mut cells = partition.outside_cells.iter().peekable();
    loop {
        let next_comp = comps.peek().map(|c| c.a);
        let next_cell = cells.peek().map(|c| c.0);
        match (next_comp, next_cell) {
            (Some(ca), Some(xa)) if ca < xa => {
                let comp = comps.next().unwrap();
                local.push((component_piece(f, comp, r, k, h)?, comp.points.len()));
            }
            (Some(_), None) => {
                let comp = comps.next().unwrap();
                local.push((component_piece(f, comp, r, k, h)?, comp.points.len()));
            }
            (_, Some(_)) => {
                let &(a, b) = cells.next().unwrap();
                local.push((monotone_piece(f, a, b, r, k)?, 0));
            }
            (None, None) => break,
        }
    }
    let mut level = f.value(w);
    let mut pieces = Vec::with_capacity(local.len());
    for (piece, _) in &local {
        let p = &piece.polynomial;
        let shifted = p.add_constant(level - p.eval(p.a));
        level = shifted.eval(p.b);
        pieces.push(shifted);
    }
    let spline = PiecewisePolynomial::new(pieces).map_err(|e| PieceError::HypothesisViolation(e.to_string()))?;
    let error = window_error(f, &spline);
    let dnorm = spline
        .pieces()
        .iter()
        .map(|p| p.derivative().grid_norm(64))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let sign_margin = spline
        .pieces()
        .iter()
        .flat_map(|p| {
            let d = p.derivative();
            grid(p.a, p.b, CHECK_POINTS).map(move |x| (x, d.eval(x)))
        })
        .filter(|(x, _)| cycle.orientation(*x) != 0.0)
        .map(|(x, d)| cycle.orientation(x) * d / dnorm)
        .fold(f64::INFINITY, f64::min)
        .min(0.0);
    let summaries = local
        .iter()
        .map(|(p, nu)| PieceSummary {
            a: p.a(),
            b: p.b(),
            kind: p.kind,
            extrema: *nu,
            error: p.error,
        })
        .collect();
    Ok(StitchedSpline {
        continuity_defect: spline.continuity_defect(),
        error,
        sign_margin,
        single_component: false,
        pieces: summaries,
        spline,
        partition,
    })
}

fn window_error(f: &PeriodicFunctionModel, spline: &PiecewisePolynomial) -> f64 {
    spline
        .pieces()
        .iter()
        .flat_map(|p| {
            let count = if spline.pieces().len() == 1 { 8192 } else { CHECK_POINTS };
            grid(p.a, p.b, count).map(move |x| (f.value(x) - p.eval(x)).abs())
        })
        .fold(0.0, f64::max)
}

/// `n^r ‖f - S‖ / ω_k(f^{(r)}, 1/n)` for a stitched spline.
pub fn stitched_ratio(
    f: &PeriodicFunctionModel,
    stitched: &StitchedSpline,
    r: usize,
    k: usize,
    resolution: &Resolution,
) -> Result<ErrorConstant, ModelError> {
    let n = stitched.partition.n;
    let fr = f.derivative_fn(r)?;
    let omega = modulus_circle(&fr, k, 1.0 / n as f64, resolution).value;
    Ok(ErrorConstant {
        error: stitched.error,
        omega,
        ratio: safe_ratio((n as f64).powi(r as i32) * stitched.error, omega),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplineTransferProbe {
    /// Discrete `E_n^{(1)}(f, Y)`.
    pub lp_value: f64,
    /// `ω_m(f, 1/n) + ‖f - S‖`.
    pub rhs: f64,
    pub factor: f64,
    pub holds: bool,
}

/// Compares the discrete `E_n^{(1)}` with `factor · (ω_m(f, 1/n) + ‖f - S‖)`,
/// where `m` is the degree bound of `S`.
pub fn probe_spline_transfer(
    f: &PeriodicFunctionModel,
    cycle: &ExtremaCycle,
    stitched: &StitchedSpline,
    factor: f64,
    options: &MinimaxOptions,
) -> Result<SplineTransferProbe, MinimaxError> {
    let n = stitched.partition.n;
    let m = stitched.spline.degree_bound().max(2);
    let omega = modulus_circle(|x| f.value(x), m, 1.0 / n as f64, &Resolution::default()).value;
    let lp = best_comonotone(&|x| f.value(x), cycle, n, options)?;
    let rhs = omega + stitched.error;
    Ok(SplineTransferProbe {
        lp_value: lp.value,
        rhs,
        factor,
        holds: lp.value <= factor * rhs,
    })
}
