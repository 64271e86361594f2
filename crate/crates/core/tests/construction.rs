//! Local pieces: endpoint interpolation, sign conditions on refined grids, and
//! stability of the empirical error constants under halving of `h`.

use std::str::FromStr;

use comonotone::models::ModelSpec;
use comonotone::partition::{
    comonotone_piece_full, comonotone_piece_partial, error_constant, monotone_piece, probe_spline_transfer, stitch_s,
    LocalPiece, PiecewisePolynomial, StitchOptions,
};
use comonotone::minimax::{best_comonotone, MinimaxOptions};
use comonotone::periodic_fn::PeriodicFunctionModel;
use comonotone::poly::LocalPoly;
use proptest::prelude::*;

const REFINED: usize = 2570;

fn model(spec: &str) -> (PeriodicFunctionModel, Vec<f64>) {
    let named = ModelSpec::from_str(spec).unwrap().build(3).unwrap();
    let points = named.cycle.map(|c| c.points().to_vec()).unwrap_or_default();
    (named.model, points)
}

/// Endpoint defect and the smallest `σ p'(x) π(x)` relative to `max |p'|`.
fn piece_defects(f: &PeriodicFunctionModel, piece: &LocalPiece, knots: &[f64]) -> (f64, f64) {
    let (a, b) = (piece.a(), piece.b());
    let p = &piece.polynomial;
    let end = (p.eval(a) - f.value(a)).abs().max((p.eval(b) - f.value(b)).abs());
    let d = p.derivative();
    let xs: Vec<f64> = (0..=REFINED).map(|i| a + (b - a) * i as f64 / REFINED as f64).collect();
    let scale = xs.iter().map(|&x| d.eval(x).abs()).fold(0.0, f64::max).max(1e-300);
    // the sign of f' on the piece, read off independently of the construction
    let fd = f.derivative_fn(1).unwrap();
    let pi = |x: f64| knots.iter().map(|t| x - t).product::<f64>();
    let reference = xs.iter().map(|&x| fd(x) * pi(x)).sum::<f64>().signum();
    let worst = xs
        .iter()
        .map(|&x| reference * d.eval(x) * pi(x) / scale)
        .fold(f64::INFINITY, f64::min);
    (end, worst)
}

#[derive(Debug)]
struct Sample {
    h: f64,
    ratio: f64,
}

fn check_stable(label: &str, samples: &[Sample]) {
    for w in samples.windows(2) {
        let q = w[1].ratio / w[0].ratio;
        assert!(
            (0.25..=4.0).contains(&q),
            "{label}: constant moved by {q} between h = {} and h = {}: {samples:?}",
            w[0].h,
            w[1].h
        );
    }
}

const HS: [f64; 3] = [0.2, 0.1, 0.05];

#[test]
fn monotone_pieces_on_three_models() {
    for (spec, x0) in [("corpus:s=1,q=3", -0.6), ("corpus:s=2,q=4", 1.3), ("cos", 1.2)] {
        let (f, _) = model(spec);
        for (r, k) in [(1usize, 2usize), (2, 3)] {
            let mut samples = Vec::new();
            for h in HS {
                let piece = monotone_piece(&f, x0, x0 + h, r, k).unwrap();
                let (end, worst) = piece_defects(&f, &piece, &[]);
                assert!(end <= 1e-9, "{spec}: endpoint defect {end:e}");
                assert!(worst >= -1e-9, "{spec}: sign defect {worst:e}");
                let c = error_constant(&f, piece.error, x0, x0 + h, r, k, h, h).unwrap();
                samples.push(Sample { h, ratio: c.ratio });
            }
            check_stable(&format!("monotone {spec} r={r} k={k}"), &samples);
        }
    }
}

#[test]
fn interpolating_pieces_on_three_models() {
    for (spec, y) in [("corpus:s=1,q=3", 0.9), ("corpus:s=2,q=4", -0.9), ("cos", 0.0)] {
        let (f, _) = model(spec);
        let mut samples = Vec::new();
        for h in HS {
            let (a, b) = (y - 1.5 * h, y + 1.5 * h);
            let piece = comonotone_piece_full(&f, a, b, &[y], 1, h).unwrap();
            let (_, worst) = piece_defects(&f, &piece, &[y]);
            // only the left endpoint is interpolated; S absorbs the right-end offset
            assert!((piece.polynomial.eval(a) - f.value(a)).abs() <= 1e-9);
            assert!(worst >= -1e-9, "{spec}: sign defect {worst:e}");
            let c = error_constant(&f, piece.error, a, b, 1, 3, h, h).unwrap();
            samples.push(Sample { h, ratio: c.ratio });
        }
        check_stable(&format!("interpolating {spec}"), &samples);
    }
}

#[test]
fn corrected_pieces_on_three_models() {
    for (spec, y) in [("corpus:s=1,q=3", 0.9), ("corpus:s=2,q=4", -0.9), ("cos", 0.0)] {
        let (f, _) = model(spec);
        let mut samples = Vec::new();
        for h in HS {
            let (a, b) = (y - 1.5 * h, y + 1.5 * h);
            let piece = comonotone_piece_partial(&f, a, b, &[y], 2, 2, h).unwrap();
            let (_, worst) = piece_defects(&f, &piece, &[y]);
            assert!((piece.polynomial.eval(a) - f.value(a)).abs() <= 1e-9);
            assert!(worst >= -1e-9, "{spec}: sign defect {worst:e}");
            let c = error_constant(&f, piece.error, a, b, 2, 2, h, h).unwrap();
            samples.push(Sample { h, ratio: c.ratio });
        }
        check_stable(&format!("corrected {spec}"), &samples);
    }
}

#[test]
fn pieces_reject_bad_geometry() {
    let (f, _) = model("cos");
    assert!(comonotone_piece_full(&f, -0.15, 0.15, &[0.12], 1, 0.1).is_err());
    assert!(comonotone_piece_partial(&f, -0.15, 0.15, &[0.0], 1, 2, 0.1).is_err());
    assert!(monotone_piece(&f, -0.5, 0.5, 1, 2).is_err());
    assert!(monotone_piece(&f, 0.5, 0.5, 1, 2).is_err());
}

#[test]
fn stitched_spline_bounds_the_comonotone_error() {
    for (spec, r, k) in [("corpus:s=1", 1usize, 2usize), ("corpus:s=2", 2, 2)] {
        let named = ModelSpec::from_str(spec).unwrap().build(r + k - 1).unwrap();
        let cycle = named.cycle.unwrap();
        let f = &named.model;
        for n in [16usize, 32] {
            let st = stitch_s(f, &cycle, n, r, k, StitchOptions { allow_small_n: true }).unwrap();
            assert!(st.sign_margin >= -1e-9 && st.continuity_defect < 1e-9, "{spec} n = {n}");
            let probe = probe_spline_transfer(f, &cycle, &st, 10.0, &MinimaxOptions::default()).unwrap();
            assert!(probe.holds, "{spec} n = {n}: {probe:?}");
            // same LP value as a direct fit
            let direct = best_comonotone(&|x| f.value(x), &cycle, n, &MinimaxOptions::default()).unwrap();
            assert!((probe.lp_value - direct.value).abs() <= 1e-12 * (1.0 + direct.value));
        }
    }
}

proptest! {
    #[test]
    fn text_round_trip(coeffs in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 1..5), 1..6)) {
        let mut a = -1.0;
        let mut pieces = Vec::new();
        for c in coeffs {
            pieces.push(LocalPoly::new(a, a + 0.5, c));
            a += 0.5;
        }
        let s = PiecewisePolynomial::new(pieces).unwrap();
        let back = PiecewisePolynomial::from_text(&s.to_text()).unwrap();
        prop_assert_eq!(s, back);
    }

    #[test]
    fn monotone_pieces_keep_direction(x0 in -0.8f64..0.4, h in 0.02f64..0.3, r in 0usize..3) {
        // sin is increasing on [-π/2, π/2]
        let (f, _) = model("sin");
        let piece = monotone_piece(&f, x0, x0 + h, r, 2).unwrap();
        let d = piece.polynomial.derivative();
        for i in 0..=200 {
            let x = x0 + h * i as f64 / 200.0;
            prop_assert!(d.eval(x) >= -1e-9);
        }
        prop_assert!((piece.polynomial.eval(x0 + h) - (x0 + h).sin()).abs() < 1e-9);
    }
}
