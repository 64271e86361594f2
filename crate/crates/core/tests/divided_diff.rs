//! Divided differences against the explicit sum formula and the classical
//! identities, plus the sign and bound inequalities for alternating data.

use comonotone::divided_diff::{
    check_lower_bound, check_product_bound, check_recurrence, check_sign, divided_difference, random_pattern_instance,
    DividedDiffError, KnotSet, MonotonePattern,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `Σ g(t_i) / Π_{j≠i} (t_i - t_j)`.
fn oracle(t: &[f64], g: &[f64]) -> f64 {
    (0..t.len())
        .map(|i| {
            let den: f64 = (0..t.len()).filter(|&j| j != i).map(|j| t[i] - t[j]).product();
            g[i] / den
        })
        .sum()
}

fn knots_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, 1..=6).prop_map(|gaps| {
        let mut t = vec![-0.3];
        for g in gaps {
            t.push(t.last().unwrap() + g);
        }
        t
    })
}

#[test]
fn exact_on_monomials() {
    let t = [-0.4, 0.1, 0.35, 0.9, 1.2];
    let k = KnotSet::new(t.to_vec()).unwrap();
    let m = t.len() - 1;
    let top: Vec<f64> = t.iter().map(|x| x.powi(m as i32)).collect();
    assert!((divided_difference(&k, &top).unwrap() - 1.0).abs() < 1e-10);
    for d in 0..m {
        let low: Vec<f64> = t.iter().map(|x| 2.0 * x.powi(d as i32) - 0.5).collect();
        assert!(divided_difference(&k, &low).unwrap().abs() < 1e-10);
    }
}

#[test]
fn rejects_bad_input() {
    assert!(KnotSet::new(vec![0.0, 0.0]).is_err());
    assert!(KnotSet::new(vec![1.0, 0.0]).is_err());
    assert!(KnotSet::new(vec![0.0, f64::NAN]).is_err());
    let k = KnotSet::new(vec![0.0, 1.0, 2.0]).unwrap();
    assert!(matches!(
        divided_difference(&k, &[1.0, 2.0]),
        Err(DividedDiffError::LengthMismatch { .. })
    ));
    // increasing data violates pattern A for m = 2 at the first step
    assert!(matches!(
        check_sign(&k, &[0.0, 1.0, 2.0], MonotonePattern::A),
        Err(DividedDiffError::PatternViolation(_))
    ));
    assert!(matches!(
        check_product_bound(&k, &[0.0, -1.0, 0.0], MonotonePattern::A, 3),
        Err(DividedDiffError::BadR { .. })
    ));
}

#[test]
fn thousand_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..1000 {
        let m = 2 + i % 5;
        let pattern = if i % 2 == 0 {
            MonotonePattern::A
        } else {
            MonotonePattern::B
        };
        let (k, g) = random_pattern_instance(&mut rng, m, pattern);
        let t = k.knots().to_vec();
        let dd = divided_difference(&k, &g).unwrap();
        let want = oracle(&t, &g);
        assert!((dd - want).abs() <= 1e-10 * (1.0 + want.abs()), "instance {i}");
        let sign = if pattern == MonotonePattern::A { 1.0 } else { -1.0 };
        assert!(sign * dd >= -1e-12 * (1.0 + dd.abs()));
        assert!(check_sign(&k, &g, pattern).unwrap().holds);
        assert!(check_lower_bound(&k, &g, pattern).unwrap().holds);
        assert!(check_product_bound(&k, &g, pattern, 2 + i % (m - 1)).unwrap().holds);
        let rec = check_recurrence(&k, &g, pattern).unwrap();
        // |[t_1..t_m]| + |[t_0..t_{m-1}]| from the explicit formula
        let right = oracle(&t[1..], &g[1..]).abs();
        let left = oracle(&t[..m], &g[..m]).abs();
        let rhs = (right + left) / (t[m] - t[0]);
        assert!((dd.abs() - rhs).abs() <= 1e-10 * (1.0 + rhs), "instance {i}");
        assert!(rec.rel_err <= 1e-10);
    }
}

proptest! {
    #[test]
    fn matches_sum_formula(t in knots_strategy(), seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g: Vec<f64> = t.iter().map(|_| rand::Rng::random_range(&mut rng, -5.0..5.0)).collect();
        let k = KnotSet::new(t.clone()).unwrap();
        let dd = divided_difference(&k, &g).unwrap();
        let want = oracle(&t, &g);
        let scale: f64 = g.iter().map(|v| v.abs()).sum::<f64>() / k.min_gap().powi(t.len() as i32 - 1);
        prop_assert!((dd - want).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn symmetric_in_the_data_order(t in knots_strategy()) {
        // reversing the knots of an odd-degree reflection flips the sign per order
        let g: Vec<f64> = t.iter().map(|x| x.sin()).collect();
        let k = KnotSet::new(t.clone()).unwrap();
        let neg: Vec<f64> = t.iter().rev().map(|x| -x).collect();
        let gr: Vec<f64> = t.iter().rev().map(|x| x.sin()).collect();
        let kr = KnotSet::new(neg).unwrap();
        let m = t.len() as i32 - 1;
        let a = divided_difference(&k, &g).unwrap();
        let b = divided_difference(&kr, &gr).unwrap() * (-1f64).powi(m);
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn pattern_instances_satisfy_the_inequalities(m in 2usize..=6, seed in 0u64..10_000, b in any::<bool>()) {
        let pattern = if b { MonotonePattern::B } else { MonotonePattern::A };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (k, g) = random_pattern_instance(&mut rng, m, pattern);
        prop_assert_eq!(MonotonePattern::detect(&g).is_some(), true);
        prop_assert!(check_sign(&k, &g, pattern).unwrap().holds);
        prop_assert!(check_lower_bound(&k, &g, pattern).unwrap().holds);
        for r in 2..=m {
            prop_assert!(check_product_bound(&k, &g, pattern, r).unwrap().holds);
        }
    }
}
