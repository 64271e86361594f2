use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use comonotone::counterexamples::{self, BuildOptions, TheoremId};
use comonotone::experiments::{
    cells_to_csv, check_all_lemmas, expected_class, parse_n_list, ratio_sweep, spread, table_run, Class,
    ExperimentConfig, Observed, Summary, ValidityCell,
};
use comonotone::minimax::{best_comonotone, best_unconstrained};
use comonotone::models::ModelSpec;

#[derive(Parser)]
#[command(
    name = "comonotone",
    version,
    about = "Comonotone trigonometric approximation experiments"
)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify every (r, k) cell for one s and write CSV plus a JSON summary.
    Table {
        #[arg(long)]
        s: usize,
        /// Largest n used in the sweeps.
        #[arg(long)]
        nmax: Option<usize>,
        /// CSV output; the summary goes next to it with a `.json` extension.
        #[arg(long)]
        out: PathBuf,
    },
    /// Ratio n^r E_n / ω_k(f^(r), 1/n) for one model.
    Ratio {
        #[arg(long)]
        model: String,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "8,16,32,64")]
        ns: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Best (comonotone) approximation of one model.
    Approx {
        #[arg(long)]
        model: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        comonotone: bool,
        /// Write the polynomial as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build, certify and fit the growth of a counterexample family.
    Counterexample {
        #[arg(long)]
        theorem: String,
        #[arg(long)]
        s: usize,
        /// Smoothness order; only used by T2_7.
        #[arg(long, default_value_t = 0)]
        r: usize,
        #[arg(long, default_value = "8,16,32")]
        ns: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the consistency checks.
    CheckLemmas {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(ExperimentConfig::from_toml(&text)?)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Table { s, nmax, out } => {
            let ns: Vec<usize> = config
                .ns
                .iter()
                .copied()
                .filter(|n| nmax.is_none_or(|m| *n <= m))
                .collect();
            if ns.is_empty() {
                bail!("no n in the configured list is at most {}", nmax.unwrap_or(0));
            }
            let report = table_run(s, &ns, &config)?;
            fs::write(&out, cells_to_csv(&report.cells)?).with_context(|| format!("writing {}", out.display()))?;
            let summary = Summary::new(&config, report.cells.clone(), BTreeMap::new());
            let json_path = out.with_extension("json");
            fs::write(&json_path, serde_json::to_string_pretty(&summary)?)?;
            for cell in &report.cells {
                eprintln!(
                    "r={} k={} expected={} regime={} observed={}",
                    cell.r, cell.k, cell.expected, cell.regime, cell.observed
                );
            }
            for m in &report.mismatches {
                eprintln!("FAILED {m}");
            }
            Ok(report.mismatches.is_empty())
        }
        Command::Ratio { model, r, k, ns, out } => {
            let ns = parse_n_list(&ns)?;
            let spec = ModelSpec::from_str(&model)?;
            let named = spec.build(r + k - 1)?;
            let cycle = named.cycle.ok_or_else(|| anyhow!("model `{model}` has no cycle"))?;
            let rows = ratio_sweep(&named.model, &cycle, r, k, &ns, &config.minimax_options())?;
            let s = cycle.s();
            let expected = expected_class(r, k, s);
            let stat = spread(&rows);
            let bounded = stat <= config.bounded_threshold;
            let cell = ValidityCell {
                r,
                k,
                s,
                expected,
                observed: if bounded { Observed::Bounded } else { Observed::Unknown },
                regime: if expected == Class::Plus {
                    "bounded".into()
                } else {
                    "ratio".into()
                },
                ratio_series: rows.iter().map(|row| (row.n, row.ratio)).collect(),
                rows,
                statistic: Some(stat),
                asserted: expected == Class::Plus,
                note: None,
            };
            emit(out.as_deref(), &cells_to_csv(std::slice::from_ref(&cell))?)?;
            eprintln!("max/median = {stat:.4}");
            Ok(!cell.failed())
        }
        Command::Approx {
            model,
            n,
            comonotone,
            out,
        } => {
            let spec = ModelSpec::from_str(&model)?;
            let named = spec.build(2)?;
            let f = &named.model;
            let options = config.minimax_options();
            let sol = if comonotone {
                let cycle = named
                    .cycle
                    .as_ref()
                    .ok_or_else(|| anyhow!("model `{model}` has no cycle"))?;
                best_comonotone(&|x| f.value(x), cycle, n, &options)?
            } else {
                best_unconstrained(&|x| f.value(x), n, &options)?
            };
            let report = json!({
                "model": spec.to_string(),
                "n": n,
                "comonotone": comonotone,
                "value": sol.value,
                "grid_count": sol.grid_count,
                "worst_sign_residual": sol.worst_sign_residual,
                "polynomial": sol.polynomial,
            });
            if let Some(p) = out.as_deref() {
                fs::write(p, serde_json::to_string_pretty(&sol.polynomial)?)?;
            }
            emit(None, &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
            Ok(true)
        }
        Command::Counterexample { theorem, s, r, ns, out } => {
            let theorem = TheoremId::from_str(&theorem).map_err(|e| anyhow!(e))?;
            let ns = parse_n_list(&ns)?;
            let options = BuildOptions {
                allow_small_n: config.allow_small_n,
            };
            let (growth, instances) = counterexamples::growth_run(theorem, s, r, &ns, options, config.slope_fraction)?;
            let certificates = instances
                .iter()
                .map(counterexamples::certify)
                .collect::<Result<Vec<_>, _>>()?;
            let certified = certificates.iter().all(|c| c.passes);
            let report = json!({
                "config_hash": config.hash(),
                "seed": config.seed,
                "theorem": theorem,
                "certificates": certificates,
                "growth": growth,
            });
            emit(out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
            eprintln!(
                "slope {:.4} (threshold {:.4}), certificates {}",
                growth.exponent_fit,
                growth.threshold,
                if certified { "pass" } else { "FAIL" }
            );
            Ok(certified && growth.passes)
        }
        Command::CheckLemmas { seed, out } => {
            let report = check_all_lemmas(seed.unwrap_or(config.seed));
            emit(out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
            for c in &report.checks {
                eprintln!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
