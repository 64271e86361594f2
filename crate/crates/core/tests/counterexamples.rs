//! Counterexample families: construction invariants checked against closed
//! forms, certificates, and the growth fit.

use std::f64::consts::PI;

use comonotone::counterexamples::{
    bernstein_floor, build_t2_2, build_t2_4, build_t2_7, certify, certify_growth, largest_radius, BuildOptions,
    CounterexampleError, TheoremId,
};

const SMALL: BuildOptions = BuildOptions { allow_small_n: true };

#[test]
fn t2_7_shape() {
    for (r, s) in [(0usize, 2usize), (1, 2), (2, 3)] {
        let inst = build_t2_7(16, r, s, SMALL).unwrap();
        let b = inst.b;
        assert_eq!(b, 1.0 / 256.0);
        // F vanishes on [-b, b] and equals τ outside [-2b, 2b]
        for i in 0..=20 {
            let x = -b + 2.0 * b * i as f64 / 20.0;
            assert_eq!(inst.model.value(x), 0.0, "r = {r}");
        }
        for x in [-2.5, -1.0, 3.0 * b, 0.7, 2.9] {
            let tau = if r % 2 == 1 {
                2f64.powi(r as i32 + 1) * (x / 2.0).sin().powi(r as i32 + 1)
            } else {
                -x.sin().powi(r as i32 + 1)
            };
            assert!((inst.model.value(x) - tau).abs() < 1e-12, "r = {r}, x = {x}");
        }
        let y1 = inst.cycle.points()[0];
        let want = if r % 2 == 1 { 2f64.powi(r as i32 + 1) } else { 1.0 };
        assert!((inst.model.value(y1) - want).abs() < 1e-12);
        let inside = inst.cycle.points().iter().filter(|y| y.abs() <= b).count();
        assert!(inside > r);
    }
}

#[test]
fn t2_2_shape() {
    let inst = build_t2_2(16, 2, SMALL).unwrap();
    let (b, r) = (inst.b, inst.r);
    assert_eq!(r, 2);
    for &y in &inst.cycle.points()[1..] {
        assert!((b / 2.0..=b).contains(&y));
    }
    // τ^(r+1)(0) = (r+1)! for τ = sin^{r+1}
    let d = inst.tau.derivatives(0.0, r + 1).unwrap();
    assert!((d[r + 1] - 6.0).abs() < 1e-9);
    // F = ∫_0^x sin^3 outside [-2b, 2b], up to the constant from the cutoff
    let exact = |x: f64| 2.0 / 3.0 - x.cos() + x.cos().powi(3) / 3.0;
    let c = inst.model.value(1.0) - exact(1.0);
    for x in [-3.0, -0.5, 0.4, 2.0] {
        assert!((inst.model.value(x) - exact(x) - c).abs() < 1e-10, "x = {x}");
    }
    assert!(c.abs() <= (2.0 * b).powi(4));
}

#[test]
fn t2_4_shape() {
    let inst = build_t2_4(16, 2, SMALL).unwrap();
    let (b, delta) = (inst.b, inst.delta.unwrap());
    assert!((b - 16f64.powf(-4.0 / 3.0)).abs() < 1e-15);
    assert!(delta > 0.0 && delta < b);
    for &y in &inst.cycle.points()[1..] {
        assert!(y.abs() < delta);
    }
    assert_eq!(inst.cycle.points()[0], -PI);
    // -τ^(r) > b²/4 on [-δ, δ]
    let tr = inst.tau.derivative_fn(inst.r).unwrap();
    for i in 0..=50 {
        let x = -delta + 2.0 * delta * i as f64 / 50.0;
        assert!(-tr(x) > b * b / 4.0 * (1.0 - 1e-9));
    }
}

#[test]
fn certificates_hold_for_all_families() {
    let instances = vec![
        build_t2_7(8, 0, 2, SMALL).unwrap(),
        build_t2_7(32, 1, 3, SMALL).unwrap(),
        build_t2_2(8, 2, SMALL).unwrap(),
        build_t2_2(32, 1, SMALL).unwrap(),
        build_t2_4(8, 2, SMALL).unwrap(),
        build_t2_4(16, 1, SMALL).unwrap(),
    ];
    for inst in &instances {
        let c = certify(inst).unwrap();
        assert!(c.comonotone, "{}: {:e}", inst.theorem, c.comonotone_violation);
        for b in &c.bounds {
            assert!(
                b.holds,
                "{} n = {}: {} = {:e} > {:e}",
                inst.theorem, inst.n, b.name, b.measured, b.bound
            );
        }
        if inst.theorem != TheoremId::T2_7 {
            assert!(c.closure.unwrap() < 1e-8);
        }
        let floor = bernstein_floor(inst).unwrap();
        assert!(floor.is_finite());
    }
}

#[test]
fn thresholds_and_regimes() {
    assert!(build_t2_7(9, 0, 2, BuildOptions::default()).is_ok());
    assert!(matches!(
        build_t2_7(8, 0, 2, BuildOptions::default()),
        Err(CounterexampleError::NTooSmall { .. })
    ));
    assert!(matches!(
        build_t2_4(64, 2, BuildOptions::default()),
        Err(CounterexampleError::NTooSmall { .. })
    ));
    assert!(matches!(
        build_t2_7(16, 2, 2, SMALL),
        Err(CounterexampleError::BadRegime { .. })
    ));
    assert!(matches!(
        build_t2_2(16, 0, SMALL),
        Err(CounterexampleError::BadRegime { .. })
    ));
    let inst = build_t2_7(8, 0, 2, SMALL).unwrap();
    assert!(inst.below_threshold);
    let json = serde_json::to_value(inst.record()).unwrap();
    assert_eq!(json["theorem"], "T2_7");
    assert_eq!(json["cycle"].as_array().unwrap().len(), 4);
}

#[test]
fn radius_search() {
    // |cos x| >= 1/2 exactly on |x| <= π/3
    let c = largest_radius(|x| x.cos() >= 0.5, 2.0).unwrap();
    assert!((c - PI / 3.0).abs() < 1e-9);
    assert_eq!(largest_radius(|_| true, 1.0), Some(1.0));
    assert_eq!(largest_radius(|_| false, 1.0), None);
}

#[test]
fn growth_fit() {
    // R_n = n^r E / ω = n exactly
    let values: Vec<(usize, f64, f64)> = [8usize, 16, 32].iter().map(|&n| (n, 1.0, 1.0 / n as f64)).collect();
    let rep = certify_growth(TheoremId::T2_7, 0, &values, 0.5).unwrap();
    assert!((rep.exponent_fit - 1.0).abs() < 1e-12);
    assert!(rep.passes);
    // a bounded ratio fails
    let flat: Vec<(usize, f64, f64)> = [8usize, 16, 32].iter().map(|&n| (n, 2.0, 1.0)).collect();
    let rep = certify_growth(TheoremId::T2_2, 0, &flat, 0.5).unwrap();
    assert!(rep.exponent_fit.abs() < 1e-12 && !rep.passes);
    assert!(matches!(
        certify_growth(TheoremId::T2_4, 0, &values[..2], 0.5),
        Err(CounterexampleError::InsufficientData(2))
    ));
}
