//! The `trendperm` command line tool.
//!
//! Exit codes: 0 on success, 2 on usage errors (argument parsing), 1 on
//! runtime errors (bad files, invalid parameter combinations, test failures).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use trendperm_core::generators::{generate, Innovations};
use trendperm_core::testing::test_with_null;
use trendperm_core::{Statistic, TestReport, TiePolicy, TimeSeries};

use crate::config::{parse_side, read_config, ExperimentConfig, MethodName, ProcessKind};
use crate::harness::{resolve_workers, run_experiment, run_method, write_csv};
use crate::powerstudy::{run_power_study, write_power_csv};
use crate::seriesio::{read_series, write_series};
use crate::tabulate::{load_null, save_null, tabulate_null, NullRequest};
use crate::{Error, Result};

#[derive(Parser)]
#[command(
    name = "trendperm",
    version,
    about = "Permutation tests for monotone trend in time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trend test on a series file.
    Test(TestArgs),
    /// Generate a series from a named process and write it to a file.
    Simulate(SimulateArgs),
    /// Run a config-driven Monte Carlo experiment and write a result CSV.
    Experiment(ExperimentArgs),
    /// Precompute a permutation null and save it for reuse.
    Tabulate(TabulateArgs),
    /// Empirical vs. theoretical power under linear drift, as CSV.
    Power(PowerArgs),
}

#[derive(Args)]
struct TestArgs {
    /// Series file: `.csv` for a single `value` column, else one number per line.
    file: PathBuf,
    /// global-stud, global-unstud, classical, local-stud or local-unstud.
    #[arg(long, conflicts_with = "null")]
    method: Option<String>,
    /// Saved null from `tabulate`; implies the statistic it was built for.
    #[arg(long)]
    null: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// greater, less or two-sided.
    #[arg(long, default_value = "greater")]
    side: String,
    /// Permutations to sample (ignored by `classical` and `--null`).
    #[arg(long, default_value_t = 1000)]
    perms: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Local window M (local methods only).
    #[arg(long)]
    window: Option<usize>,
    /// Autocovariance truncation lag (studentized methods; default n^(1/3)).
    #[arg(long)]
    bandwidth: Option<usize>,
    /// Variance floor for studentized statistics.
    #[arg(long)]
    eps: Option<f64>,
    /// Break tied values by a seeded shuffle instead of refusing them.
    #[arg(long, value_name = "SEED")]
    tie_break: Option<u64>,
    /// Also print a two-line CSV record (header + values).
    #[arg(long)]
    record: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// iid, mdep, ar1, ar2, ma2, markov or driftwalk.
    #[arg(long)]
    process: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output series file (`.csv` for CSV, else plain text).
    #[arg(long)]
    out: PathBuf,
    /// AR coefficient (ar1, ar2).
    #[arg(long)]
    rho: Option<f64>,
    /// Dependence order (mdep).
    #[arg(long)]
    m: Option<usize>,
    /// MA(2) coefficients.
    #[arg(long)]
    phi0: Option<f64>,
    #[arg(long)]
    phi1: Option<f64>,
    /// Drift/step scale (markov, driftwalk).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Reset cost (driftwalk).
    #[arg(long)]
    c: Option<f64>,
    /// Markov state bound (states -M..M).
    #[arg(long)]
    states: Option<usize>,
    /// Disable the tie-breaking jitter of the markov chain.
    #[arg(long)]
    no_jitter: bool,
    /// gaussian, uniform or student-t (iid, ma2).
    #[arg(long)]
    innovations: Option<String>,
    /// Degrees of freedom for student-t innovations.
    #[arg(long)]
    df: Option<f64>,
    /// Linear drift intensity added on top of the base process.
    #[arg(long, default_value_t = 0.0)]
    h: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (TRENDPERM_WORKERS still takes precedence).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct TabulateArgs {
    /// global-u, global-scaled, global-stud, local-scaled or local-stud.
    #[arg(long)]
    statistic: String,
    #[arg(long)]
    n: usize,
    /// Permutations to sample (ignored with --exact).
    #[arg(long, default_value_t = 10_000)]
    perms: u64,
    /// Enumerate all n! arrangements instead of sampling (n <= 8).
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Local window M (local statistics only).
    #[arg(long)]
    window: Option<usize>,
    /// Autocovariance truncation lag (studentized statistics).
    #[arg(long)]
    bandwidth: Option<usize>,
    /// Output null file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PowerArgs {
    /// Drift intensities, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 2.0, 4.0])]
    h: Vec<f64>,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 2000)]
    sims: u64,
    #[arg(long, default_value_t = 1000)]
    perms: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Also write the experiment log to this file (it always prints).
    #[arg(long)]
    log: Option<PathBuf>,
}

/// Parse argv and run. Usage errors exit with code 2 before this returns.
pub fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Test(args) => cmd_test(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Tabulate(args) => cmd_tabulate(args),
        Command::Power(args) => cmd_power(args),
    }
}

fn cmd_test(args: TestArgs) -> Result<()> {
    let side = parse_side(&args.side)
        .ok_or_else(|| Error::Invalid(format!("unknown side `{}`", args.side)))?;
    let values = read_series(&args.file)?;
    let policy = match args.tie_break {
        Some(seed) => TiePolicy::RandomBreak { seed },
        None => TiePolicy::Reject,
    };
    let ts = TimeSeries::new(values, policy)?;

    let report = match (&args.method, &args.null) {
        (Some(name), None) => {
            let method = MethodName::parse(name).ok_or_else(|| {
                Error::Invalid(format!(
                    "unknown method `{name}` (expected one of {})",
                    MethodName::ALL.map(|m| m.token()).join(", ")
                ))
            })?;
            if method.is_local() && args.window.is_none() {
                return Err(Error::Invalid(format!("method {method} needs --window")));
            }
            run_method(
                method,
                &ts,
                args.window,
                args.alpha,
                side,
                args.perms,
                args.seed,
            )?
        }
        (None, Some(path)) => {
            let null = load_null(path)?;
            test_with_null(&ts, &null, args.alpha, side)?
        }
        (None, None) => return Err(Error::Invalid("pass --method or --null".into())),
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    };

    print!("{}", report_lines(&report));
    if args.record {
        print!("{}", report_record(&report));
    }
    Ok(())
}

fn report_lines(r: &TestReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("method = {}\n", r.method));
    out.push_str(&format!("n = {}\n", r.n));
    if let Some(w) = r.window {
        out.push_str(&format!("window = {w}\n"));
    }
    out.push_str(&format!("statistic = {}\n", r.statistic));
    if let Some(v) = &r.studentizer {
        out.push_str(&format!("variance = {}\n", v.value));
        out.push_str(&format!("bandwidth = {}\n", v.bandwidth));
        if v.floored {
            out.push_str("variance_floored = true\n");
        }
    }
    out.push_str(&format!("side = {}\n", r.p_value.side));
    if let Some(b) = r.n_perms {
        out.push_str(&format!("perms = {b}\n"));
    }
    if let Some(s) = r.seed {
        out.push_str(&format!("seed = {s}\n"));
    }
    out.push_str(&format!("p_value = {}\n", r.p_value.value));
    out.push_str(&format!("alpha = {}\n", r.alpha));
    out.push_str(&format!("reject = {}\n", r.reject));
    out
}

fn report_record(r: &TestReport) -> String {
    let opt = |v: Option<String>| v.unwrap_or_default();
    format!(
        "method,n,window,statistic,variance,p_value,alpha,side,reject,perms,seed\n{},{},{},{},{},{},{},{},{},{},{}\n",
        r.method,
        r.n,
        opt(r.window.map(|w| w.to_string())),
        r.statistic,
        opt(r.studentizer.as_ref().map(|v| v.value.to_string())),
        r.p_value.value,
        r.alpha,
        r.p_value.side,
        r.reject,
        opt(r.n_perms.map(|b| b.to_string())),
        opt(r.seed.map(|s| s.to_string())),
    )
}

fn parse_innovations(name: Option<&str>, df: Option<f64>) -> Result<Innovations> {
    match name
        .map(|s| s.trim().to_ascii_lowercase().replace('-', "_"))
        .as_deref()
    {
        None | Some("gaussian") | Some("normal") => {
            if df.is_some() {
                return Err(Error::Invalid("--df needs --innovations student-t".into()));
            }
            Ok(Innovations::Gaussian)
        }
        Some("uniform") => {
            if df.is_some() {
                return Err(Error::Invalid("--df needs --innovations student-t".into()));
            }
            Ok(Innovations::Uniform)
        }
        Some("student_t") | Some("t") => {
            let df = df.ok_or_else(|| Error::Invalid("student-t innovations need --df".into()))?;
            Ok(Innovations::StudentT { df })
        }
        Some(other) => Err(Error::Invalid(format!("unknown innovations `{other}`"))),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let process = ProcessKind::parse(&args.process)
        .ok_or_else(|| Error::Invalid(format!("unknown process `{}`", args.process)))?;

    // Reuse the config machinery to assemble and validate the ProcessSpec.
    let mut cfg = ExperimentConfig {
        process,
        h: args.h,
        innovations: parse_innovations(args.innovations.as_deref(), args.df)?,
        jitter: !args.no_jitter,
        ..ExperimentConfig::default()
    };
    if let Some(phi0) = args.phi0 {
        cfg.phi0 = phi0;
    }
    if let Some(states) = args.states {
        cfg.states = states;
    }
    if let Some(c) = args.c {
        cfg.c = c;
    }
    let param = match process.param_key() {
        None => 0.0,
        Some(key) => {
            let (value, flag) = match key {
                "m" => (args.m.map(|m| m as f64), "--m"),
                "rho" => (args.rho, "--rho"),
                "phi1" => (args.phi1, "--phi1"),
                "epsilon" => (args.epsilon, "--epsilon"),
                _ => unreachable!("param keys are m/rho/phi1/epsilon"),
            };
            value.ok_or_else(|| Error::Invalid(format!("process {process} needs {flag}")))?
        }
    };
    let spec = cfg.process_spec(param)?;
    let ts = generate(&spec, args.n, args.seed)?;
    write_series(&args.out, ts.values())?;
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let mut cfg = read_config(&args.config)?;
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    cfg.workers = resolve_workers(cfg.workers)?;
    cfg.validate()?;
    let table = run_experiment(&cfg)?;
    write_csv(&table, &args.out)?;
    println!("wrote {} rows to {}", table.rows.len(), args.out.display());
    Ok(())
}

fn parse_statistic(
    name: &str,
    window: Option<usize>,
    bandwidth: Option<usize>,
) -> Result<Statistic> {
    let norm = name.trim().to_ascii_lowercase().replace('_', "-");
    let need_window =
        || window.ok_or_else(|| Error::Invalid(format!("statistic {norm} needs --window")));
    Ok(match norm.as_str() {
        "global-u" => Statistic::GlobalU,
        "global-scaled" | "global-unstud" | "global-unstudentized" => Statistic::GlobalScaled,
        "global-stud" | "global-studentized" => Statistic::GlobalStudentized { bandwidth },
        "local-scaled" | "local-unstud" | "local-unstudentized" => Statistic::LocalScaled {
            window: need_window()?,
        },
        "local-stud" | "local-studentized" => Statistic::LocalStudentized {
            window: need_window()?,
            bandwidth,
        },
        other => return Err(Error::Invalid(format!("unknown statistic `{other}`"))),
    })
}

fn cmd_tabulate(args: TabulateArgs) -> Result<()> {
    let statistic = parse_statistic(&args.statistic, args.window, args.bandwidth)?;
    let request = if args.exact {
        NullRequest::Exact
    } else {
        NullRequest::Sampled {
            n_perms: args.perms,
            seed: args.seed,
        }
    };
    let null = tabulate_null(statistic, args.n, request)?;
    save_null(&args.out, &null)?;
    println!(
        "wrote {} null values for {} at n = {} to {}",
        null.len(),
        null.statistic(),
        args.n,
        args.out.display()
    );
    Ok(())
}

fn cmd_power(args: PowerArgs) -> Result<()> {
    let study = run_power_study(
        &args.h, args.n, args.sims, args.perms, args.alpha, args.seed,
    )?;
    write_power_csv(&study, &args.out)?;
    if let Some(path) = &args.log {
        std::fs::write(path, &study.log).map_err(|e| Error::io(path, e))?;
    }
    print!("{}", study.log);
    Ok(())
}
