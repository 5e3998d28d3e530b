//! The `pconn` command line. Exit codes: 0 success, 1 engine error (the
//! message names the error case), 2 usage error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::connection::{
    clark_solve, cohomology_dims, exponents, fuchs_solution, gauge_equivalence, ones_rhs, ExponentOptions,
    RegularConnection, SolveCertificate,
};
use crate::error::{Error, Result};
use crate::io::{load_connection, load_rhs, parse_scalar, series_text, write_csv, write_json};
use crate::lab::{run_scenario, Scenario, SCENARIOS};
use crate::liouville::{estimate_type, slope_criterion, TypeOptions};
use crate::padic::Context;
use crate::series::MatSeries;

#[derive(Parser, Debug)]
#[command(name = "pconn", version, about = "p-adic regular connections: solvers, type estimates, experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the p-adic Liouville type of a scalar.
    Type {
        #[arg(long, default_value_t = 2)]
        p: u64,
        #[arg(long, default_value_t = 1024)]
        precision: i64,
        /// "1/3", "gap:4", "-gap:4", "digits:1,0,1", "2^3*5", ...
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        /// Horizon M.
        #[arg(long, default_value_t = 300)]
        terms: u64,
        #[arg(long)]
        burn_in: Option<u64>,
        /// Also run the cumulative slope criterion.
        #[arg(long)]
        slope: bool,
        /// Write (m, v(λ−m)) as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Exponents of a connection, with integer differences and types.
    Exponents {
        #[arg(long)]
        conn: PathBuf,
        #[arg(long, default_value_t = 300)]
        terms: u64,
    },
    /// Solve θa + A·a = b (Clark's recursion).
    Solve {
        #[arg(long)]
        conn: PathBuf,
        /// "ones" for Σ (1,…,1)ᵀ z^i, or a JSON file of degree-indexed vectors.
        #[arg(long, default_value = "ones")]
        rhs: String,
        /// Solve through degree D (at most the connection's truncation).
        #[arg(long)]
        deg: Option<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// Fundamental solution U with U_0 = I and A·U + θU = U·A_0.
    Fuchs {
        #[arg(long)]
        conn: PathBuf,
        #[arg(long)]
        deg: Option<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// Truncated de Rham cohomology dimensions.
    Cohomology {
        #[arg(long)]
        conn: PathBuf,
        /// Work on M / z^n M; defaults to the smallest safe n.
        #[arg(long)]
        cut: Option<usize>,
        /// Integer search window.
        #[arg(long, default_value_t = 64)]
        window: i64,
    },
    /// Gauge transformation T ≡ I mod z^(k+1) from one connection to another.
    Gauge {
        #[arg(long)]
        from: PathBuf,
        /// A connection file, or "model" for the degree-k polynomial model.
        #[arg(long)]
        to: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        deg: Option<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// Run a lab scenario (a JSON file or a built-in name) and write its report.
    Run {
        scenario: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for profile CSVs.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Overrides params.seed; PCONN_SEED does the same.
        #[arg(long, env = "PCONN_SEED")]
        seed: Option<u64>,
    },
    /// List the built-in scenarios.
    ListScenarios {
        #[arg(long)]
        json: bool,
    },
}

#[derive(clap::Args, Debug)]
struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the valuation profile as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Include the computed coefficients in the report.
    #[arg(long)]
    coefficients: bool,
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}: {e}", e.kind());
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Type {
            p,
            precision,
            lambda,
            terms,
            burn_in,
            slope,
            csv,
        } => {
            let ctx = Context::new(p, precision)?;
            let x = parse_scalar(&ctx, &lambda)?;
            let est = estimate_type(&x, TypeOptions { horizon: terms, burn_in });
            if let Some(path) = csv {
                let profile: Vec<_> = (1..=terms).map(|m| (m as usize, x.add_i64(-(m as i64)).valuation())).collect();
                write_csv(&path, &profile)?;
            }
            if slope {
                write_json(None, &json!({ "estimate": est, "slope": slope_criterion(&x, terms) }))
            } else {
                write_json(None, &est)
            }
        }
        Command::Exponents { conn, terms } => {
            let m = load_connection(&conn)?;
            write_json(None, &exponents(&m, &ExponentOptions::with_types(TypeOptions::with_horizon(terms)))?)
        }
        Command::Solve { conn, rhs, deg, out } => {
            let m = truncated(load_connection(&conn)?, deg)?;
            let b = if rhs == "ones" {
                ones_rhs(m.ctx(), m.rank(), m.trunc())
            } else {
                let b = load_rhs(Path::new(&rhs), m.ctx(), m.rank())?;
                if b.trunc() < m.trunc() {
                    return Err(Error::IndexBeyondTruncation {
                        index: m.trunc(),
                        trunc: b.trunc(),
                    });
                }
                b.truncate(m.trunc())
            };
            let sol = clark_solve(&m, &b)?;
            emit(&out, &sol, &sol.certificate, &sol.a, &sol.precision)
        }
        Command::Fuchs { conn, deg, out } => {
            let m = truncated(load_connection(&conn)?, deg)?;
            let sol = fuchs_solution(&m)?;
            emit(&out, &sol, &sol.certificate, &sol.u, &sol.precision)
        }
        Command::Cohomology { conn, cut, window } => {
            let m = load_connection(&conn)?;
            let opts = ExponentOptions {
                window,
                ..ExponentOptions::default()
            };
            write_json(None, &cohomology_dims(&m, cut, &opts)?)
        }
        Command::Gauge { from, to, k, deg, out } => {
            let a = truncated(load_connection(&from)?, deg)?;
            let b = if to == "model" {
                a.polynomial_model(k, &ExponentOptions::default())?
            } else {
                truncated(load_connection(Path::new(&to))?, Some(a.trunc()))?
            };
            let sol = gauge_equivalence(&a, &b, k)?;
            emit(&out, &sol, &sol.certificate, &sol.t, &sol.precision)
        }
        Command::Run { scenario, out, csv, seed } => {
            let mut s = if Path::new(&scenario).exists() {
                let text = std::fs::read_to_string(&scenario).map_err(|e| Error::Io(format!("{scenario}: {e}")))?;
                serde_json::from_str::<Scenario>(&text)?
            } else if SCENARIOS.iter().any(|(n, _)| *n == scenario) {
                Scenario::new(&scenario)
            } else {
                return Err(Error::UnknownScenario(scenario));
            };
            if let Some(seed) = seed {
                s.params.seed = seed;
            }
            eprintln!("scenario {} seed {}", s.scenario, s.params.seed);
            let report = run_scenario(&s)?;
            for c in &report.checks {
                eprintln!(
                    "  {} {}: expected {}, observed {}",
                    if c.ok { "ok  " } else { "FAIL" },
                    c.name,
                    c.expected,
                    c.observed
                );
            }
            eprintln!("{}", if report.passed { "passed" } else { "FAILED" });
            if let Some(dir) = csv {
                std::fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
                for (name, profile) in &report.profiles {
                    write_csv(&dir.join(format!("{name}.csv")), profile)?;
                }
            }
            let mut value = serde_json::to_value(&report)?;
            let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            value["generated_at"] = json!(stamp);
            write_json(out.as_deref(), &value)
        }
        Command::ListScenarios { json } => {
            if json {
                let list: Vec<Value> = SCENARIOS
                    .iter()
                    .map(|(n, d)| json!({ "name": n, "description": d }))
                    .collect();
                write_json(None, &list)
            } else {
                for (n, d) in SCENARIOS {
                    println!("{n:<20} {d}");
                }
                Ok(())
            }
        }
    }
}

fn truncated(m: RegularConnection, deg: Option<usize>) -> Result<RegularConnection> {
    match deg {
        None => Ok(m),
        Some(d) if d <= m.trunc() => Ok(m.truncate(d)),
        Some(d) => Err(Error::IndexBeyondTruncation { index: d, trunc: m.trunc() }),
    }
}

fn emit<T: Serialize>(out: &Output, sol: &T, cert: &SolveCertificate, terms: &MatSeries, precision: &[i64]) -> Result<()> {
    if let Some(path) = &out.csv {
        write_csv(path, &cert.profile_pairs())?;
    }
    let mut value = serde_json::to_value(sol)?;
    if out.coefficients {
        value["coefficients"] = json!(series_text(terms, Some(precision)));
    }
    write_json(out.out.as_deref(), &value)
}
