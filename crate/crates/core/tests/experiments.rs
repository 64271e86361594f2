//! Classification table, configuration, report plumbing and the
//! consistency-check runner.

use std::collections::BTreeMap;

use comonotone::counterexamples::TheoremId;
use comonotone::experiments::{
    cells_to_csv, check_all_lemmas, check_all_lemmas_with, expected_class, family_for, parse_n_list, ratio_sweep,
    spread, Class, ExperimentConfig, ExperimentError, LemmaOptions, NListError, Summary,
};
use comonotone::minimax::MinimaxOptions;
use comonotone::models::ModelSpec;
use comonotone::periodic_fn::constant_model;
use comonotone::trig_poly::{ExtremaCycle, Parity};
use proptest::prelude::*;

/// `(s, r, k) -> class` from the transcribed tables.
pub fn golden() -> BTreeMap<(usize, usize, usize), Class> {
    let text = include_str!("data/validity_tables.txt");
    let mut out = BTreeMap::new();
    let mut s = 0;
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(v) = line.strip_prefix("s = ") {
            s = v.parse().unwrap();
            continue;
        }
        let (r, cells) = line.split_once(':').unwrap();
        let r: usize = r.trim_start_matches('r').parse().unwrap();
        for (i, c) in cells.split_whitespace().enumerate() {
            let class = match c {
                "+" => Class::Plus,
                "o" => Class::Oplus,
                "-" => Class::Minus,
                other => panic!("bad symbol {other}"),
            };
            out.insert((s, r, i + 1), class);
        }
    }
    out
}

#[test]
fn classification_matches_the_tables() {
    let table = golden();
    assert_eq!(table.len(), 3 * 7 * 6);
    for (&(s, r, k), &want) in &table {
        assert_eq!(expected_class(r, k, s), want, "s = {s}, r = {r}, k = {k}");
    }
}

#[test]
fn families_cover_the_stated_cells() {
    assert_eq!(family_for(0, 2, 2), Some(TheoremId::T2_7));
    assert_eq!(family_for(2, 3, 2), Some(TheoremId::T2_2));
    assert_eq!(family_for(3, 4, 2), Some(TheoremId::T2_4));
    assert_eq!(family_for(2, 2, 2), None);
    // every covered cell is one where the estimate fails for some n
    for s in 1..=3 {
        for r in 0..=6 {
            for k in 1..=6 {
                if family_for(r, k, s).is_some() {
                    assert_ne!(expected_class(r, k, s), Class::Plus);
                }
            }
        }
    }
}

#[test]
fn config_from_toml() {
    let c =
        ExperimentConfig::from_toml("seed = 5\nns = [8, 16]\nbounded_threshold = 12.5\ncorpus = \"corpus:amp=0.3\"\n")
            .unwrap();
    assert_eq!(c.seed, 5);
    assert_eq!(c.ns, vec![8, 16]);
    assert_eq!(c.bounded_threshold, 12.5);
    assert_eq!(c.slope_fraction, 0.5);
    assert!(ExperimentConfig::from_toml("ns = []").is_err());
    assert!(ExperimentConfig::from_toml("ns = [8, 8]").is_err());
    assert!(ExperimentConfig::from_toml("corpus = \"\"").is_err());
    assert!(ExperimentConfig::from_toml("seed = \"x\"").is_err());
    assert_eq!(c.hash(), c.clone().hash());
}

#[test]
fn ratio_sweep_on_a_polynomial_is_zero() {
    let spec: ModelSpec = "cos".parse().unwrap();
    let named = spec.build(2).unwrap();
    let rows = ratio_sweep(
        &named.model,
        named.cycle.as_ref().unwrap(),
        1,
        2,
        &[16, 8],
        &MinimaxOptions::default(),
    )
    .unwrap();
    assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![8, 16]);
    for row in &rows {
        assert!(row.e_estimate <= 1e-8);
        assert!(row.ratio <= 1e-6);
    }
}

#[test]
fn ratio_sweep_rejects_non_comonotone_input() {
    let cycle = ExtremaCycle::new(vec![-1.0, 1.0], Parity::MaxFirst).unwrap();
    let sin = "sin".parse::<ModelSpec>().unwrap().build(1).unwrap().model;
    let err = ratio_sweep(&sin, &cycle, 0, 1, &[8], &MinimaxOptions::default()).unwrap_err();
    assert!(matches!(err, ExperimentError::CertificationFailed { .. }));
}

#[test]
fn degenerate_modulus_is_flagged() {
    // a constant has ω = 0 and E = 0 for every cycle
    let cycle = ExtremaCycle::new(vec![-1.0, 1.0], Parity::MaxFirst).unwrap();
    let rows = ratio_sweep(&constant_model(2.0), &cycle, 0, 3, &[8], &MinimaxOptions::default()).unwrap();
    assert!(rows[0].degenerate);
    assert_eq!(rows[0].ratio, 0.0);
}

#[test]
fn csv_and_summary_layout() {
    let config = ExperimentConfig::default();
    let csv = cells_to_csv(&[]).unwrap();
    assert_eq!(csv.trim(), "n,E_estimate,omega,ratio,regime,expected,observed");
    let summary = Summary::new(&config, Vec::new(), BTreeMap::new());
    let json = serde_json::to_value(&summary).unwrap();
    for key in ["config_hash", "seed", "cells", "constants"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert_eq!(json["constants"]["bounded_threshold"], 10.0);
}

#[test]
fn spread_statistic() {
    use comonotone::experiments::RatioRow;
    let row = |n, ratio| RatioRow {
        n,
        e_estimate: 0.0,
        omega: 1.0,
        ratio,
        degenerate: false,
    };
    assert_eq!(spread(&[row(8, 1.0), row(16, 2.0), row(32, 4.0)]), 2.0);
    assert!(spread(&[]).is_infinite());
}

#[test]
fn consistency_checks_pass_and_detect_corruption() {
    let report = check_all_lemmas(2024);
    for c in &report.checks {
        assert!(c.passed, "{}: {}", c.name, c.detail);
    }
    let corrupted = check_all_lemmas_with(
        2024,
        LemmaOptions {
            instances: 100,
            corrupt_identity: true,
            include_models: false,
        },
    );
    assert!(!corrupted.passed);
    let empty = check_all_lemmas_with(
        2024,
        LemmaOptions {
            instances: 0,
            corrupt_identity: false,
            include_models: false,
        },
    );
    assert!(empty.passed && !empty.warnings.is_empty());
    // deterministic in the seed
    assert_eq!(
        check_all_lemmas_with(
            9,
            LemmaOptions {
                include_models: false,
                ..Default::default()
            }
        ),
        check_all_lemmas_with(
            9,
            LemmaOptions {
                include_models: false,
                ..Default::default()
            }
        )
    );
}

proptest! {
    #[test]
    fn n_list_round_trip(mut ns in prop::collection::btree_set(1usize..4096, 1..10)) {
        let list: Vec<usize> = std::mem::take(&mut ns).into_iter().collect();
        let mut shuffled = list.clone();
        shuffled.reverse();
        let text = shuffled.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" , ");
        prop_assert_eq!(parse_n_list(&text).unwrap(), list);
    }

    #[test]
    fn n_list_never_panics(text in ".{0,40}") {
        let _ = parse_n_list(&text);
    }

    #[test]
    fn classification_is_monotone_in_r(s in 1usize..5, k in 1usize..8, r in 0usize..10) {
        // raising r never turns a valid cell invalid
        if expected_class(r, k, s) == Class::Plus {
            prop_assert_eq!(expected_class(r + 1, k, s), Class::Plus);
        }
    }
}

#[test]
fn n_list_errors() {
    assert_eq!(parse_n_list(" , "), Err(NListError::Empty));
    assert_eq!(parse_n_list("5000"), Err(NListError::TooLarge(5000)));
    assert!(matches!(parse_n_list("-3"), Err(NListError::NotPositive(_))));
}
