//! Validity tables, ratio sweeps and the consistency checks behind the
//! command line: configuration, report types and CSV/JSON output.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::counterexamples::{self, BuildOptions, CounterexampleError, TheoremId};
use crate::divided_diff::{
    check_lower_bound, check_product_bound, check_recurrence, check_sign, divided_difference, random_pattern_instance,
    MonotonePattern,
};
use crate::minimax::{best_algebraic, best_comonotone, best_unconstrained, MinimaxError, MinimaxOptions};
use crate::models::{ModelSpec, ModelSpecError};
use crate::partition::{
    comonotone_piece_full, monotone_piece, probe_cluster, probe_flat_component, stitch_s, StitchOptions,
};
use crate::periodic_fn::{cos_model, sin_model, ModelError, PeriodicFunctionModel};
use crate::smoothness::{modulus_circle, modulus_interval, Resolution};
use crate::trig_poly::{comonotone_defect, ExtremaCycle};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("f is not comonotone with the cycle: violation {violation:e} at x = {x}")]
    CertificationFailed { violation: f64, x: f64 },
    #[error("model `{0}` has no cycle of monotonicity changes")]
    NoCycle(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    NList(#[from] NListError),
    #[error(transparent)]
    Spec(#[from] ModelSpecError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Fit(#[from] MinimaxError),
    #[error(transparent)]
    Counterexample(#[from] CounterexampleError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Validity of the Jackson-type estimate for a pair `(r, k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    /// Valid for all `n`.
    Plus,
    /// Valid only for `n` beyond a threshold depending on the cycle.
    Oplus,
    /// Invalid even with such a threshold.
    Minus,
}

impl Class {
    pub fn symbol(self) -> char {
        match self {
            Class::Plus => '+',
            Class::Oplus => 'o',
            Class::Minus => '-',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '+' => Some(Class::Plus),
            'o' | '⊕' => Some(Class::Oplus),
            '-' | '−' => Some(Class::Minus),
            _ => None,
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Class::Plus => "plus",
            Class::Oplus => "oplus",
            Class::Minus => "minus",
        })
    }
}

/// Classification of `(r, k)` for cycles of `2s` points; `k >= 1`, `s >= 1`.
pub fn expected_class(r: usize, k: usize, s: usize) -> Class {
    let plus = k == 1 || (k == 2 && r + 2 >= 2 * s) || (k == 3 && r + 1 >= 2 * s) || (k >= 4 && r >= 2 * s);
    if plus {
        Class::Plus
    } else if (r == 0 && k >= 3) || (r == 1 && k >= 4) {
        Class::Minus
    } else {
        Class::Oplus
    }
}

/// The counterexample family covering `(r, k, s)`, if any.
pub fn family_for(r: usize, k: usize, s: usize) -> Option<TheoremId> {
    match k {
        2 if r + 2 < 2 * s => Some(TheoremId::T2_7),
        3 if r + 2 == 2 * s => Some(TheoremId::T2_2),
        4 if r + 1 == 2 * s => Some(TheoremId::T2_4),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Observed {
    Bounded,
    Divergent,
    Unknown,
}

impl fmt::Display for Observed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Observed::Bounded => "bounded",
            Observed::Divergent => "divergent",
            Observed::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NListError {
    #[error("empty list of n")]
    Empty,
    #[error("`{0}` is not a positive integer")]
    NotPositive(String),
    #[error("n = {0} listed twice")]
    Duplicate(usize),
    #[error("n = {0} exceeds the limit 4096")]
    TooLarge(usize),
}

/// Largest `n` accepted by the n-list parser.
pub const MAX_N: usize = 4096;

/// Parses `8,16,32` into an ascending list of distinct positive integers.
pub fn parse_n_list(text: &str) -> Result<Vec<usize>, NListError> {
    let mut ns = Vec::new();
    for item in text.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let n: usize = item.parse().map_err(|_| NListError::NotPositive(item.to_string()))?;
        if n == 0 {
            return Err(NListError::NotPositive(item.to_string()));
        }
        if n > MAX_N {
            return Err(NListError::TooLarge(n));
        }
        if ns.contains(&n) {
            return Err(NListError::Duplicate(n));
        }
        ns.push(n);
    }
    if ns.is_empty() {
        return Err(NListError::Empty);
    }
    ns.sort_unstable();
    Ok(ns)
}

/// One row of a ratio sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioRow {
    pub n: usize,
    pub e_estimate: f64,
    pub omega: f64,
    /// `n^r E / ω`; infinite when `ω` vanishes and `E` does not.
    pub ratio: f64,
    /// Set when `ω = 0`.
    pub degenerate: bool,
}

fn ratio_of(n: usize, r: usize, e: f64, omega: f64) -> (f64, bool) {
    let lhs = (n as f64).powi(r as i32) * e;
    if omega > 0.0 {
        (lhs / omega, false)
    } else if lhs <= 1e-12 {
        (0.0, true)
    } else {
        (f64::INFINITY, true)
    }
}

/// Checks `f' Π >= 0` (up to the parity anchor) on a grid of 8192 points.
pub fn certify_comonotone(f: &PeriodicFunctionModel, cycle: &ExtremaCycle) -> Result<(), ExperimentError> {
    let fd = f.derivative_fn(1)?;
    let scale = (0..8192)
        .map(|i| fd(-PI + 2.0 * PI * i as f64 / 8192.0).abs())
        .fold(0.0, f64::max);
    let report = comonotone_defect(&fd, cycle, 8192, 1e-9 * scale.max(f64::MIN_POSITIVE));
    if report.ok {
        Ok(())
    } else {
        Err(ExperimentError::CertificationFailed {
            violation: report.worst_violation,
            x: report.worst_x,
        })
    }
}

/// `n^r E_n^{(1)} / ω_k(f^{(r)}, 1/n)` for each `n`, in ascending `n`, with
/// `E_n^{(1)}` from the discrete comonotone fit.
pub fn ratio_sweep(
    f: &PeriodicFunctionModel,
    cycle: &ExtremaCycle,
    r: usize,
    k: usize,
    ns: &[usize],
    options: &MinimaxOptions,
) -> Result<Vec<RatioRow>, ExperimentError> {
    certify_comonotone(f, cycle)?;
    let fr = f.derivative_fn(r)?;
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.par_iter()
        .map(|&n| {
            let e = best_comonotone(&|x| f.value(x), cycle, n, options)?.value;
            let omega = modulus_circle(&fr, k, 1.0 / n as f64, &Resolution::default()).value;
            let (ratio, degenerate) = ratio_of(n, r, e, omega);
            Ok(RatioRow {
                n,
                e_estimate: e,
                omega,
                ratio,
                degenerate,
            })
        })
        .collect()
}

/// `max R / median R`, or infinity when any row is degenerate.
pub fn spread(rows: &[RatioRow]) -> f64 {
    if rows.is_empty() || rows.iter().any(|r| r.degenerate && r.ratio != 0.0) {
        return f64::INFINITY;
    }
    let mut v: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len();
    let median = if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    };
    let max = v[m - 1];
    if max == 0.0 {
        1.0
    } else if median > 0.0 {
        max / median
    } else {
        f64::INFINITY
    }
}

/// Settings shared by the command-line subcommands, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// `n` values for ratio sweeps.
    pub ns: Vec<usize>,
    /// `n` values for the growth fits of the counterexample families.
    pub growth_ns: Vec<usize>,
    /// A cell is bounded when `max R / median R` stays at or below this.
    pub bounded_threshold: f64,
    /// A family diverges when its fitted slope reaches this fraction of the predicted exponent.
    pub slope_fraction: f64,
    pub r_max: usize,
    pub k_max: usize,
    /// Model specification for bounded cells; `s` and `q` are filled in per cell.
    pub corpus: String,
    /// Build counterexamples below their asymptotic threshold.
    pub allow_small_n: bool,
    /// Uniform LP grid size; `None` uses the solver default.
    pub grid_count: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            ns: vec![8, 16, 32, 64],
            growth_ns: vec![8, 16, 32],
            bounded_threshold: 10.0,
            slope_fraction: 0.5,
            r_max: 3,
            k_max: 4,
            corpus: "corpus".into(),
            allow_small_n: true,
            grid_count: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if !(self.bounded_threshold >= 1.0 && self.bounded_threshold.is_finite()) {
            return bad("bounded_threshold must be finite and at least 1");
        }
        if !(self.slope_fraction > 0.0 && self.slope_fraction.is_finite()) {
            return bad("slope_fraction must be positive");
        }
        if self.k_max == 0 || self.k_max > 8 || self.r_max > 8 {
            return bad("need 1 <= k_max <= 8 and r_max <= 8");
        }
        if let Some(g) = self.grid_count {
            if !(16..=1 << 16).contains(&g) {
                return bad("grid_count must lie in [16, 65536]");
            }
        }
        for list in [&self.ns, &self.growth_ns] {
            let text: Vec<String> = list.iter().map(|n| n.to_string()).collect();
            parse_n_list(&text.join(","))?;
        }
        ModelSpec::from_str(&self.corpus)?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn minimax_options(&self) -> MinimaxOptions {
        match self.grid_count {
            Some(g) => MinimaxOptions::default().with_grid(g),
            None => MinimaxOptions::default(),
        }
    }
}

/// One `(r, k)` cell of a validity table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidityCell {
    pub r: usize,
    pub k: usize,
    pub s: usize,
    pub expected: Class,
    pub observed: Observed,
    /// `bounded`, a family name, or `untested`.
    pub regime: String,
    pub ratio_series: Vec<(usize, f64)>,
    pub rows: Vec<RatioRow>,
    /// `max R / median R` for bounded checks, fitted slope for families.
    pub statistic: Option<f64>,
    /// Whether the cell carries an assertion (bounded or divergent).
    pub asserted: bool,
    pub note: Option<String>,
}

impl ValidityCell {
    pub fn failed(&self) -> bool {
        self.asserted
            && match self.regime.as_str() {
                "bounded" => self.observed != Observed::Bounded,
                _ => self.observed != Observed::Divergent,
            }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableReport {
    pub s: usize,
    pub ns: Vec<usize>,
    pub cells: Vec<ValidityCell>,
    pub mismatches: Vec<String>,
}

fn corpus_for(config: &ExperimentConfig, s: usize, q: usize) -> Result<ModelSpec, ExperimentError> {
    let mut spec = ModelSpec::from_str(&config.corpus)?;
    spec.params.insert("s".into(), s.to_string());
    spec.params.entry("q".into()).or_insert_with(|| q.to_string());
    Ok(spec)
}

fn run_cell(r: usize, k: usize, s: usize, ns: &[usize], config: &ExperimentConfig) -> ValidityCell {
    let expected = expected_class(r, k, s);
    let mut cell = ValidityCell {
        r,
        k,
        s,
        expected,
        observed: Observed::Unknown,
        regime: "untested".into(),
        ratio_series: Vec::new(),
        rows: Vec::new(),
        statistic: None,
        asserted: false,
        note: None,
    };
    if expected == Class::Plus {
        cell.regime = "bounded".into();
        cell.asserted = true;
        let result = corpus_for(config, s, r + k - 1).and_then(|spec| {
            let named = spec.build(r + k - 1)?;
            let cycle = named.cycle.ok_or_else(|| ExperimentError::NoCycle(spec.to_string()))?;
            ratio_sweep(&named.model, &cycle, r, k, ns, &config.minimax_options())
        });
        match result {
            Ok(rows) => {
                let stat = spread(&rows);
                cell.observed = if stat <= config.bounded_threshold {
                    Observed::Bounded
                } else {
                    Observed::Unknown
                };
                cell.statistic = Some(stat);
                cell.ratio_series = rows.iter().map(|row| (row.n, row.ratio)).collect();
                cell.rows = rows;
            }
            Err(e) => cell.note = Some(e.to_string()),
        }
    } else if let Some(theorem) = family_for(r, k, s) {
        cell.regime = theorem.to_string();
        cell.asserted = true;
        let options = BuildOptions {
            allow_small_n: config.allow_small_n,
        };
        let gns: Vec<usize> = config
            .growth_ns
            .iter()
            .copied()
            .filter(|n| ns.is_empty() || *n <= *ns.last().unwrap())
            .collect();
        match counterexamples::growth_run(theorem, s, r, &gns, options, config.slope_fraction) {
            Ok((report, _)) => {
                cell.observed = if report.passes {
                    Observed::Divergent
                } else {
                    Observed::Unknown
                };
                cell.statistic = Some(report.exponent_fit);
                cell.ratio_series = report.points.iter().map(|p| (p.n, p.ratio)).collect();
                cell.rows = report
                    .points
                    .iter()
                    .map(|p| RatioRow {
                        n: p.n,
                        e_estimate: p.e_estimate,
                        omega: p.omega,
                        ratio: p.ratio,
                        degenerate: false,
                    })
                    .collect();
            }
            Err(e) => cell.note = Some(e.to_string()),
        }
    }
    cell
}

/// Runs every cell `r <= r_max`, `k <= k_max`: ratio sweeps on the corpus for
/// cells classified `plus`, growth fits for cells covered by a counterexample
/// family, nothing for the rest.
pub fn table_run(s: usize, ns: &[usize], config: &ExperimentConfig) -> Result<TableReport, ExperimentError> {
    config.validate()?;
    if s == 0 {
        return Err(ExperimentError::Config("s must be positive".into()));
    }
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    let pairs: Vec<(usize, usize)> = (0..=config.r_max)
        .flat_map(|r| (1..=config.k_max).map(move |k| (r, k)))
        .collect();
    let cells: Vec<ValidityCell> = pairs.par_iter().map(|&(r, k)| run_cell(r, k, s, &ns, config)).collect();
    let mismatches = cells
        .iter()
        .filter(|c| c.failed())
        .map(|c| {
            format!(
                "s={} r={} k={}: expected {} ({}), observed {}{}",
                c.s,
                c.r,
                c.k,
                c.expected,
                c.regime,
                c.observed,
                c.note.as_ref().map(|n| format!(" [{n}]")).unwrap_or_default()
            )
        })
        .collect();
    Ok(TableReport {
        s,
        ns,
        cells,
        mismatches,
    })
}

/// CSV with columns `n, E_estimate, omega, ratio, regime, expected, observed`,
/// one row per cell and `n`; `regime` is `s<s>-r<r>-k<k>:<regime>`.
pub fn cells_to_csv(cells: &[ValidityCell]) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "E_estimate", "omega", "ratio", "regime", "expected", "observed"])?;
    for c in cells {
        let regime = format!("s{}-r{}-k{}:{}", c.s, c.r, c.k, c.regime);
        for row in &c.rows {
            w.write_record([
                row.n.to_string(),
                format!("{:e}", row.e_estimate),
                format!("{:e}", row.omega),
                format!("{:e}", row.ratio),
                regime.clone(),
                c.expected.to_string(),
                c.observed.to_string(),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| ExperimentError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Machine-readable summary of a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub config_hash: String,
    pub seed: u64,
    pub cells: Vec<ValidityCell>,
    pub constants: BTreeMap<String, f64>,
}

impl Summary {
    pub fn new(config: &ExperimentConfig, cells: Vec<ValidityCell>, mut constants: BTreeMap<String, f64>) -> Self {
        constants.insert("bounded_threshold".into(), config.bounded_threshold);
        constants.insert("slope_fraction".into(), config.slope_fraction);
        for c in &cells {
            if let Some(v) = c.statistic {
                constants.insert(format!("s{}-r{}-k{}:{}", c.s, c.r, c.k, c.regime), v);
            }
        }
        Summary {
            config_hash: config.hash(),
            seed: config.seed,
            cells,
            constants,
        }
    }
}

/// One named check of [`check_all_lemmas`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub name: String,
    pub passed: bool,
    pub instances: usize,
    /// Largest empirical constant or error seen.
    pub constant: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaReport {
    pub seed: u64,
    pub checks: Vec<LemmaCheck>,
    pub warnings: Vec<String>,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LemmaOptions {
    /// Random divided-difference instances.
    pub instances: usize,
    /// Perturb the recurrence identity; the run must then fail.
    pub corrupt_identity: bool,
    /// Run the partition, modulus and fit checks.
    pub include_models: bool,
}

impl Default for LemmaOptions {
    fn default() -> Self {
        LemmaOptions {
            instances: 1000,
            corrupt_identity: false,
            include_models: true,
        }
    }
}

/// Runs the consistency checks with the default options.
pub fn check_all_lemmas(seed: u64) -> LemmaReport {
    check_all_lemmas_with(seed, LemmaOptions::default())
}

struct Tally {
    name: &'static str,
    instances: usize,
    failures: usize,
    worst: f64,
    first_failure: Option<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            instances: 0,
            failures: 0,
            worst: 0.0,
            first_failure: None,
        }
    }

    fn record(&mut self, ok: bool, value: f64, context: impl FnOnce() -> String) {
        self.instances += 1;
        if value.is_finite() {
            self.worst = self.worst.max(value);
        }
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(context());
            }
        }
    }

    fn finish(self) -> LemmaCheck {
        LemmaCheck {
            name: self.name.to_string(),
            passed: self.failures == 0,
            instances: self.instances,
            constant: self.worst,
            detail: match self.first_failure {
                Some(f) => format!("{} of {} failed; first: {f}", self.failures, self.instances),
                None => format!("{} instances", self.instances),
            },
        }
    }
}

fn divided_difference_checks(rng: &mut ChaCha8Rng, options: LemmaOptions) -> Vec<LemmaCheck> {
    let mut sign = Tally::new("divided difference sign");
    let mut lower = Tally::new("divided difference lower bound");
    let mut product = Tally::new("divided difference product bound");
    let mut recurrence = Tally::new("divided difference recurrence");
    let mut exact = Tally::new("divided difference exactness");
    for i in 0..options.instances {
        let m = rng.random_range(2..=6usize);
        let pattern = if rng.random_bool(0.5) {
            MonotonePattern::A
        } else {
            MonotonePattern::B
        };
        let (knots, values) = random_pattern_instance(rng, m, pattern);
        let ctx = || format!("instance {i}, m = {m}, {pattern:?}");
        match check_sign(&knots, &values, pattern) {
            Ok(rep) => sign.record(rep.holds, 0.0, ctx),
            Err(e) => sign.record(false, 0.0, || e.to_string()),
        }
        match check_lower_bound(&knots, &values, pattern) {
            Ok(rep) => lower.record(rep.holds, (-rep.slack).max(0.0), ctx),
            Err(e) => lower.record(false, 0.0, || e.to_string()),
        }
        let r = rng.random_range(2..=m);
        match check_product_bound(&knots, &values, pattern, r) {
            Ok(rep) => product.record(rep.holds, (-rep.slack).max(0.0), ctx),
            Err(e) => product.record(false, 0.0, || e.to_string()),
        }
        match check_recurrence(&knots, &values, pattern) {
            Ok(mut rep) => {
                if options.corrupt_identity {
                    rep.rhs *= 1.0 + 1e-6;
                    rep.rel_err = (rep.lhs - rep.rhs).abs() / (1.0 + rep.lhs);
                }
                recurrence.record(rep.rel_err <= 1e-10, rep.rel_err, ctx)
            }
            Err(e) => recurrence.record(false, 0.0, || e.to_string()),
        }
        let t = knots.knots();
        let monomial: Vec<f64> = t.iter().map(|x| x.powi(m as i32)).collect();
        let lower_deg: Vec<f64> = t.iter().map(|x| 1.0 - 2.0 * x + 0.5 * x.powi(m as i32 - 1)).collect();
        let d1 = divided_difference(&knots, &monomial)
            .map(|v| (v - 1.0).abs())
            .unwrap_or(f64::INFINITY);
        let d0 = divided_difference(&knots, &lower_deg)
            .map(f64::abs)
            .unwrap_or(f64::INFINITY);
        let err = d1.max(d0 * knots.span().powi(m as i32));
        exact.record(err <= 1e-10, err, ctx);
    }
    vec![
        sign.finish(),
        lower.finish(),
        product.finish(),
        recurrence.finish(),
        exact.finish(),
    ]
}

fn modulus_checks() -> Vec<LemmaCheck> {
    let mut oracle = Tally::new("modulus of sin");
    let sin = |x: f64| x.sin();
    for t in [PI / 8.0, PI / 4.0, PI / 2.0] {
        let w = modulus_circle(sin, 1, t, &Resolution::default()).value;
        let err = (w - 2.0 * (t / 2.0).sin()).abs();
        oracle.record(err <= 1e-4, err, || format!("t = {t}: {w}"));
    }
    let mut annihilate = Tally::new("modulus annihilates low degree");
    for k in 1..=4usize {
        let p = move |x: f64| (0..k).map(|j| (j as f64 + 1.0) * x.powi(j as i32)).sum::<f64>();
        let w = modulus_interval(p, k, 0.3, -1.0, 1.0, &Resolution::default())
            .map(|e| e.value)
            .unwrap_or(f64::INFINITY);
        annihilate.record(w <= 1e-9, w, || format!("k = {k}: {w:e}"));
    }
    let mut monotone = Tally::new("modulus monotone in t");
    let res = Resolution::default().with_h_values((1..=64).map(|i| i as f64 / 64.0).collect());
    let mut last = 0.0;
    for i in 1..=8 {
        let t = i as f64 / 8.0;
        let w = modulus_circle(|x: f64| (3.0 * x).cos() + x.sin().abs(), 2, t, &res).value;
        monotone.record(w >= last, last - w, || format!("t = {t}"));
        last = w;
    }
    vec![oracle.finish(), annihilate.finish(), monotone.finish()]
}

fn minimax_checks() -> Vec<LemmaCheck> {
    let mut line = Tally::new("best line to x^2");
    match best_algebraic(&|x| x * x, 0.0, 1.0, 2) {
        Ok(fit) => {
            let err = (fit.value - 0.125).abs();
            line.record(err <= 1e-3, err, || format!("value {}", fit.value));
        }
        Err(e) => line.record(false, 0.0, || e.to_string()),
    }
    let mut constant = Tally::new("best constant to cos");
    match best_unconstrained(&|x| x.cos(), 1, &MinimaxOptions::default()) {
        Ok(fit) => {
            let err = (fit.value - 1.0).abs();
            constant.record(err <= 1e-6, err, || format!("value {}", fit.value));
        }
        Err(e) => constant.record(false, 0.0, || e.to_string()),
    }
    let mut order = Tally::new("constrained above unconstrained");
    for spec in ["corpus:s=1,q=2", "corpus:s=2,q=3"] {
        let named = ModelSpec::from_str(spec).and_then(|m| m.build(2));
        let Ok(named) = named else {
            order.record(false, 0.0, || format!("{spec} failed to build"));
            continue;
        };
        let cycle = named.cycle.expect("corpus models have cycles");
        let f = &named.model;
        let mut last = f64::INFINITY;
        for n in [4usize, 8, 16] {
            let opts = MinimaxOptions::default();
            let u = best_unconstrained(&|x| f.value(x), n, &opts).map(|s| s.value);
            let c = best_comonotone(&|x| f.value(x), &cycle, n, &opts).map(|s| s.value);
            match (u, c) {
                (Ok(u), Ok(c)) => {
                    let tol = 1e-9 * (1.0 + c);
                    order.record(c >= u - tol && c <= last + tol, (u - c).max(c - last), || {
                        format!("{spec}, n = {n}: E = {u:e}, E1 = {c:e}")
                    });
                    last = c;
                }
                _ => order.record(false, 0.0, || format!("{spec}, n = {n}: fit failed")),
            }
        }
    }
    vec![line.finish(), constant.finish(), order.finish()]
}

fn partition_checks() -> Vec<LemmaCheck> {
    let mut pieces = Tally::new("local pieces interpolate and keep sign");
    let mut flat = Tally::new("flat component bound");
    let mut cluster = Tally::new("clustered cycle bounds");
    let mut stitched = Tally::new("stitched spline is comonotone");
    let check_piece = |tally: &mut Tally,
                       f: &PeriodicFunctionModel,
                       piece: Result<crate::partition::LocalPiece, _>,
                       sign: &dyn Fn(f64) -> f64,
                       label: &str| {
        match piece {
            Ok(p) => {
                let (a, b) = (p.a(), p.b());
                let end = (p.polynomial.eval(a) - f.value(a))
                    .abs()
                    .max((p.polynomial.eval(b) - f.value(b)).abs());
                let d = p.polynomial.derivative();
                let scale = (0..=2000)
                    .map(|i| d.eval(a + (b - a) * i as f64 / 2000.0).abs())
                    .fold(0.0, f64::max);
                let worst = (0..=2000)
                    .map(|i| {
                        let x = a + (b - a) * i as f64 / 2000.0;
                        p.orientation * sign(x) * d.eval(x)
                    })
                    .fold(f64::INFINITY, f64::min);
                let ok = end <= 1e-9 && worst >= -1e-9 * scale.max(1e-300);
                tally.record(ok, end, || format!("{label}: endpoint {end:e}, sign {worst:e}"));
            }
            Err(e) => tally.record(false, 0.0, || format!("{label}: {e}")),
        }
    };
    let sin = sin_model();
    check_piece(
        &mut pieces,
        &sin,
        monotone_piece(&sin, -1.0, 1.0, 2, 3),
        &|_| 1.0,
        "monotone sin",
    );
    let cos = cos_model();
    check_piece(
        &mut pieces,
        &cos,
        comonotone_piece_full(&cos, -0.15, 0.15, &[0.0], 1, 0.1),
        &|x| x,
        "interpolating cos",
    );
    match probe_flat_component(&cos, -0.15, 0.15, &[0.0], 0, 0.1) {
        Ok(rep) => flat.record(rep.ratio.is_finite(), rep.ratio, || "ratio not finite".into()),
        Err(e) => flat.record(false, 0.0, || e.to_string()),
    }
    match ModelSpec::from_str("clustered:s=1,q=3,width=0.1").and_then(|m| m.build(3)) {
        Ok(named) => {
            let cycle = named.cycle.expect("clustered models have cycles");
            match probe_cluster(&named.model, &cycle, 0.05, 2) {
                Ok(rep) => {
                    let worst = rep.odd.ratio.max(rep.even.ratio).max(rep.second.ratio);
                    cluster.record(worst.is_finite(), worst, || "ratio not finite".into());
                }
                Err(e) => cluster.record(false, 0.0, || e.to_string()),
            }
        }
        Err(e) => cluster.record(false, 0.0, || e.to_string()),
    }
    for (spec, r, k) in [("corpus:s=1", 1usize, 3usize), ("corpus:s=2", 2, 2)] {
        match ModelSpec::from_str(spec).and_then(|m| m.build(r + k - 1)) {
            Ok(named) => {
                let cycle = named.cycle.expect("corpus models have cycles");
                match stitch_s(&named.model, &cycle, 16, r, k, StitchOptions { allow_small_n: true }) {
                    Ok(s) => stitched.record(s.sign_margin >= -1e-9 && s.continuity_defect <= 1e-9, s.error, || {
                        format!("{spec}: margin {:e}", s.sign_margin)
                    }),
                    Err(e) => stitched.record(false, 0.0, || e.to_string()),
                }
            }
            Err(e) => stitched.record(false, 0.0, || e.to_string()),
        }
    }
    vec![pieces.finish(), flat.finish(), cluster.finish(), stitched.finish()]
}

/// Divided-difference identities and inequalities on random instances,
/// modulus oracles, fit oracles and partition probes. Failures are reported,
/// never raised.
pub fn check_all_lemmas_with(seed: u64, options: LemmaOptions) -> LemmaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = divided_difference_checks(&mut rng, options);
    let mut warnings = Vec::new();
    if options.instances == 0 {
        warnings.push("no random instances: divided-difference checks are vacuous".to_string());
    }
    if options.include_models {
        checks.extend(modulus_checks());
        checks.extend(minimax_checks());
        checks.extend(partition_checks());
    }
    let passed = checks.iter().all(|c| c.passed);
    LemmaReport {
        seed,
        checks,
        warnings,
        passed,
    }
}
