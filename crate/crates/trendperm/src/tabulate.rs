//! Distribution-free permutation nulls, computed once per key and cached;
//! persistable as a versioned text file. Every statistic here is rank-based,
//! so a null for (statistic, n, bandwidth, mode) is valid for every tie-free
//! series of that length.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use trendperm_core::perm::{exact_permutation_distribution, permutation_distribution};
use trendperm_core::variance::default_bandwidth;
use trendperm_core::{NullMode, PermutationDistribution, Statistic};

use crate::{Error, Result};

const FORMAT_HEADER: &str = "trendperm-null v1";

/// How a null should be built: Monte Carlo sampled or exhaustively enumerated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NullRequest {
    Sampled { n_perms: u64, seed: u64 },
    Exact,
}

type Key = (Statistic, usize, NullRequest);
type Cache = Mutex<HashMap<Key, Arc<PermutationDistribution>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Fill in the default bandwidth so equal distributions share a cache key.
fn normalize(statistic: Statistic, n: usize) -> Statistic {
    match statistic {
        Statistic::GlobalStudentized { bandwidth: None } => Statistic::GlobalStudentized {
            bandwidth: Some(default_bandwidth(n)),
        },
        Statistic::LocalStudentized {
            window,
            bandwidth: None,
        } => Statistic::LocalStudentized {
            window,
            bandwidth: Some(default_bandwidth(n)),
        },
        other => other,
    }
}

/// The cached permutation null for a rank statistic. Computation happens at
/// most once per key; concurrent callers for the same key block on the first.
pub fn tabulate_null(
    statistic: Statistic,
    n: usize,
    request: NullRequest,
) -> Result<Arc<PermutationDistribution>> {
    let key = (normalize(statistic, n), n, request);
    let mut map = cache().lock().expect("null cache poisoned");
    if let Some(hit) = map.get(&key) {
        return Ok(Arc::clone(hit));
    }
    let dist = match request {
        NullRequest::Sampled { n_perms, seed } => {
            permutation_distribution(key.0, n, n_perms, seed)?
        }
        NullRequest::Exact => exact_permutation_distribution(key.0, n)?,
    };
    let dist = Arc::new(dist);
    map.insert(key, Arc::clone(&dist));
    Ok(dist)
}

fn statistic_lines(statistic: Statistic, out: &mut String) {
    writeln!(out, "statistic {statistic}").expect("string write");
    if let Some(w) = statistic.window() {
        writeln!(out, "window {w}").expect("string write");
    }
    let bandwidth = match statistic {
        Statistic::GlobalStudentized { bandwidth } => bandwidth,
        Statistic::LocalStudentized { bandwidth, .. } => bandwidth,
        _ => None,
    };
    if let Some(b) = bandwidth {
        writeln!(out, "bandwidth {b}").expect("string write");
    }
}

pub fn save_null(path: &Path, dist: &PermutationDistribution) -> Result<()> {
    let mut out = String::with_capacity(dist.len() * 20 + 128);
    out.push_str(FORMAT_HEADER);
    out.push('\n');
    statistic_lines(dist.statistic(), &mut out);
    writeln!(out, "n {}", dist.n()).expect("string write");
    match dist.mode() {
        NullMode::Sampled { n_perms, seed } => {
            writeln!(out, "mode sampled {n_perms} {seed}").expect("string write")
        }
        NullMode::Exact { n_arrangements } => {
            writeln!(out, "mode exact {n_arrangements}").expect("string write")
        }
    }
    writeln!(out, "values {}", dist.len()).expect("string write");
    for v in dist.values() {
        writeln!(out, "{v}").expect("string write");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_null(path: &Path) -> Result<PermutationDistribution> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, &str)> {
        lines
            .next()
            .map(|(i, l)| (i + 1, l.trim()))
            .ok_or_else(|| Error::parse(path, 0, format!("missing {what}")))
    };

    let (line, header) = next("format header")?;
    if header != FORMAT_HEADER {
        return Err(Error::parse(
            path,
            line,
            format!("unsupported format `{header}`"),
        ));
    }

    // Fixed-order key lines, then the value block.
    let mut name = None;
    let mut window = None;
    let mut bandwidth = None;
    let mut n = None;
    let mut mode = None;
    let count;
    loop {
        let (line, text) = next("values header")?;
        let (key, rest) = text.split_once(' ').unwrap_or((text, ""));
        let fail = |m: String| Error::parse(path, line, m);
        match key {
            "statistic" => name = Some(rest.to_string()),
            "window" => {
                window = Some(
                    rest.parse()
                        .map_err(|_| fail(format!("bad window `{rest}`")))?,
                )
            }
            "bandwidth" => {
                bandwidth = Some(
                    rest.parse()
                        .map_err(|_| fail(format!("bad bandwidth `{rest}`")))?,
                )
            }
            "n" => n = Some(rest.parse().map_err(|_| fail(format!("bad n `{rest}`")))?),
            "mode" => mode = Some((line, rest.to_string())),
            "values" => {
                count = rest
                    .parse::<usize>()
                    .map_err(|_| fail(format!("bad count `{rest}`")))?;
                break;
            }
            other => return Err(fail(format!("unexpected key `{other}`"))),
        }
    }

    let statistic = match (name.as_deref(), window, bandwidth) {
        (Some("global-u"), None, None) => Statistic::GlobalU,
        (Some("global-scaled"), None, None) => Statistic::GlobalScaled,
        (Some("global-studentized"), None, b) => Statistic::GlobalStudentized { bandwidth: b },
        (Some("local-scaled"), Some(w), None) => Statistic::LocalScaled { window: w },
        (Some("local-studentized"), Some(w), b) => Statistic::LocalStudentized {
            window: w,
            bandwidth: b,
        },
        _ => {
            return Err(Error::parse(
                path,
                0,
                format!("inconsistent statistic description {name:?}"),
            ))
        }
    };
    let n = n.ok_or_else(|| Error::parse(path, 0, "missing n"))?;
    let (mode_line, mode_text) = mode.ok_or_else(|| Error::parse(path, 0, "missing mode"))?;
    let mode = parse_mode(&mode_text)
        .ok_or_else(|| Error::parse(path, mode_line, format!("bad mode `{mode_text}`")))?;

    let mut values = Vec::with_capacity(count);
    for (i, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::parse(path, i + 1, format!("invalid value `{line}`")))?;
        values.push(v);
    }
    if values.len() != count {
        return Err(Error::parse(
            path,
            0,
            format!("expected {count} values, found {}", values.len()),
        ));
    }
    Ok(PermutationDistribution::from_values(
        statistic, n, values, mode,
    )?)
}

fn parse_mode(text: &str) -> Option<NullMode> {
    let mut parts = text.split_whitespace();
    match parts.next()? {
        "sampled" => {
            let n_perms = parts.next()?.parse().ok()?;
            let seed = parts.next()?.parse().ok()?;
            parts
                .next()
                .is_none()
                .then_some(NullMode::Sampled { n_perms, seed })
        }
        "exact" => {
            let n_arrangements = parts.next()?.parse().ok()?;
            parts
                .next()
                .is_none()
                .then_some(NullMode::Exact { n_arrangements })
        }
        _ => None,
    }
}
