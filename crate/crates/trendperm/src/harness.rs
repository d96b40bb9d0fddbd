//! The Monte Carlo experiment runner: a worker pool over (cell, replicate)
//! tasks with counter-derived random streams, so results are identical for
//! any worker count. Replicates are paired across methods (same series).

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use trendperm_core::generators::generate;
use trendperm_core::seeding::split;
use trendperm_core::testing::{
    classical_mk_test, global_studentized_test, global_unstudentized_test, local_studentized_test,
    local_unstudentized_test,
};
use trendperm_core::{TestReport, TimeSeries};

use crate::config::{Cell, ExperimentConfig, MethodName};
use crate::{Error, Result};

pub const CSV_HEADER: &str =
    "process,param,n,method,alpha,n_sims,n_perms,reject_rate,mc_se,seed,wall_time_s";

/// One (cell, method) aggregate. `reject_rate` is `None` when any replicate
/// of the cell failed; the error text is carried alongside.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub process: String,
    pub param: f64,
    pub n: usize,
    pub method: MethodName,
    pub alpha: f64,
    pub n_sims: u64,
    pub n_perms: u64,
    pub reject_rate: Option<f64>,
    pub mc_se: Option<f64>,
    pub seed: u64,
    pub wall_time_s: f64,
}

impl ResultRow {
    /// Equality on everything the determinism contract covers (not timing).
    pub fn same_outcome(&self, other: &ResultRow) -> bool {
        self.process == other.process
            && self.param == other.param
            && self.n == other.n
            && self.method == other.method
            && self.alpha == other.alpha
            && self.n_sims == other.n_sims
            && self.n_perms == other.n_perms
            && self.reject_rate == other.reject_rate
            && self.mc_se == other.mc_se
            && self.seed == other.seed
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

/// Replicate-level stream root: everything inside replicate r of a cell
/// derives from this handle.
fn replicate_handle(master_seed: u64, cell: usize, rep: u64) -> u64 {
    split(split(master_seed, cell as u64), rep)
}

pub fn series_seed(master_seed: u64, cell: usize, rep: u64) -> u64 {
    split(replicate_handle(master_seed, cell, rep), 0)
}

pub fn perm_seed(master_seed: u64, cell: usize, rep: u64, method: MethodName) -> u64 {
    split(
        split(replicate_handle(master_seed, cell, rep), 1),
        method.stream_tag(),
    )
}

/// Run one method on one series with an explicit permutation seed.
pub fn run_method(
    method: MethodName,
    ts: &TimeSeries,
    window: Option<usize>,
    alpha: f64,
    side: trendperm_core::Side,
    n_perms: u64,
    seed: u64,
) -> trendperm_core::Result<TestReport> {
    let need_window = || {
        window.ok_or_else(|| trendperm_core::Error::Domain("local methods need a window".into()))
    };
    match method {
        MethodName::GlobalStud => {
            global_studentized_test(ts, alpha, side, n_perms, seed, None, None)
        }
        MethodName::GlobalUnstud => global_unstudentized_test(ts, alpha, side, n_perms, seed),
        MethodName::Classical => classical_mk_test(ts, alpha, side),
        MethodName::LocalStud => {
            local_studentized_test(ts, need_window()?, alpha, side, n_perms, seed, None, None)
        }
        MethodName::LocalUnstud => {
            local_unstudentized_test(ts, need_window()?, alpha, side, n_perms, seed)
        }
    }
}

struct ReplicateOutcome {
    cell: usize,
    /// Per configured method: Ok(reject) or the error text, plus seconds.
    results: Vec<(std::result::Result<bool, String>, f64)>,
}

fn run_replicate(cfg: &ExperimentConfig, cell: &Cell, rep: u64) -> ReplicateOutcome {
    let gen_result = cfg.process_spec(cell.param).and_then(|spec| {
        generate(&spec, cell.n, series_seed(cfg.master_seed, cell.index, rep)).map_err(Error::from)
    });
    let results = match gen_result {
        Err(e) => {
            let msg = e.to_string();
            cfg.methods
                .iter()
                .map(|_| (Err(msg.clone()), 0.0))
                .collect()
        }
        Ok(ts) => cfg
            .methods
            .iter()
            .map(|&method| {
                let seed = perm_seed(cfg.master_seed, cell.index, rep, method);
                let start = Instant::now();
                let outcome = run_method(
                    method,
                    &ts,
                    cfg.window,
                    cfg.alpha,
                    cfg.side,
                    cfg.n_perms,
                    seed,
                )
                .map(|r| r.reject)
                .map_err(|e| e.to_string());
                (outcome, start.elapsed().as_secs_f64())
            })
            .collect(),
    };
    ReplicateOutcome {
        cell: cell.index,
        results,
    }
}

/// Worker count: the `TRENDPERM_WORKERS` environment variable overrides the
/// config; both must be >= 1.
pub fn resolve_workers(configured: usize) -> Result<usize> {
    match std::env::var("TRENDPERM_WORKERS") {
        Err(std::env::VarError::NotPresent) => Ok(configured),
        Err(e) => Err(Error::Invalid(format!("TRENDPERM_WORKERS: {e}"))),
        Ok(text) => match text.trim().parse::<usize>() {
            Ok(w) if w >= 1 => Ok(w),
            _ => Err(Error::Invalid(format!(
                "TRENDPERM_WORKERS must be an integer >= 1, got `{text}`"
            ))),
        },
    }
}

/// Run the full grid. Output is deterministic given the config (including
/// `master_seed`) regardless of worker count; a cell with any failed
/// replicate gets empty rate fields and its first error on the error list.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    run_experiment_with_errors(cfg).map(|(table, errors)| {
        for (cell, msg) in &errors {
            eprintln!("cell {cell}: {msg}");
        }
        table
    })
}

pub fn run_experiment_with_errors(
    cfg: &ExperimentConfig,
) -> Result<(ResultTable, Vec<(usize, String)>)> {
    let workers = resolve_workers(cfg.workers)?;
    let cells = cfg.cells();
    let tasks: Vec<(usize, u64)> = cells
        .iter()
        .flat_map(|c| (0..cfg.n_sims).map(move |r| (c.index, r)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Invalid(format!("worker pool: {e}")))?;
    let outcomes: Vec<ReplicateOutcome> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(cell, rep)| run_replicate(cfg, &cells[cell], rep))
            .collect()
    });

    // Deterministic merge: outcomes arrive in task order (indexed collect),
    // and aggregation is a commutative fold per (cell, method) anyway.
    let n_methods = cfg.methods.len();
    let mut rejects = vec![0u64; cells.len() * n_methods];
    let mut seconds = vec![0.0f64; cells.len() * n_methods];
    let mut first_error: Vec<Option<String>> = vec![None; cells.len()];
    for outcome in &outcomes {
        for (m, (result, secs)) in outcome.results.iter().enumerate() {
            let slot = outcome.cell * n_methods + m;
            seconds[slot] += secs;
            match result {
                Ok(true) => rejects[slot] += 1,
                Ok(false) => {}
                Err(msg) => {
                    let e = &mut first_error[outcome.cell];
                    if e.is_none() {
                        *e = Some(msg.clone());
                    }
                }
            }
        }
    }

    let mut rows = Vec::with_capacity(cells.len() * n_methods);
    let mut errors = Vec::new();
    for cell in &cells {
        if let Some(msg) = &first_error[cell.index] {
            errors.push((cell.index, msg.clone()));
        }
        for (m, &method) in cfg.methods.iter().enumerate() {
            let slot = cell.index * n_methods + m;
            let (reject_rate, mc_se) = if first_error[cell.index].is_some() {
                (None, None)
            } else {
                let r = rejects[slot] as f64 / cfg.n_sims as f64;
                (Some(r), Some((r * (1.0 - r) / cfg.n_sims as f64).sqrt()))
            };
            rows.push(ResultRow {
                process: cfg.process.token().to_string(),
                param: cell.param,
                n: cell.n,
                method,
                alpha: cfg.alpha,
                n_sims: cfg.n_sims,
                n_perms: if method.needs_permutations() {
                    cfg.n_perms
                } else {
                    0
                },
                reject_rate,
                mc_se,
                seed: cfg.master_seed,
                wall_time_s: seconds[slot],
            });
        }
    }
    Ok((ResultTable { rows }, errors))
}

pub fn write_csv(table: &ResultTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(Error::from)?;
    w.write_record(CSV_HEADER.split(','))?;
    for row in &table.rows {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([
            row.process.clone(),
            row.param.to_string(),
            row.n.to_string(),
            row.method.to_string(),
            row.alpha.to_string(),
            row.n_sims.to_string(),
            row.n_perms.to_string(),
            opt(row.reject_rate),
            opt(row.mc_se),
            row.seed.to_string(),
            row.wall_time_s.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<ResultTable> {
    let mut r = csv::Reader::from_path(path).map_err(Error::from)?;
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(Error::parse(
            path,
            1,
            format!("unexpected header `{header}`"),
        ));
    }
    let mut rows = Vec::new();
    for (idx, record) in r.records().enumerate() {
        let record = record?;
        let line = idx + 2;
        let field = |i: usize| -> Result<&str> {
            record
                .get(i)
                .ok_or_else(|| Error::parse(path, line, format!("missing column {i}")))
        };
        let num = |i: usize| -> Result<f64> {
            let s = field(i)?;
            s.parse()
                .map_err(|_| Error::parse(path, line, format!("bad number `{s}`")))
        };
        let opt_num = |i: usize| -> Result<Option<f64>> {
            let s = field(i)?;
            if s.is_empty() {
                return Ok(None);
            }
            Ok(Some(s.parse().map_err(|_| {
                Error::parse(path, line, format!("bad number `{s}`"))
            })?))
        };
        let method_text = field(3)?;
        let method = MethodName::parse(method_text)
            .ok_or_else(|| Error::parse(path, line, format!("bad method `{method_text}`")))?;
        rows.push(ResultRow {
            process: field(0)?.to_string(),
            param: num(1)?,
            n: num(2)? as usize,
            method,
            alpha: num(4)?,
            n_sims: num(5)? as u64,
            n_perms: num(6)? as u64,
            reject_rate: opt_num(7)?,
            mc_se: opt_num(8)?,
            seed: field(9)?
                .parse()
                .map_err(|_| Error::parse(path, line, "bad seed".to_string()))?,
            wall_time_s: num(10)?,
        });
    }
    Ok(ResultTable { rows })
}
