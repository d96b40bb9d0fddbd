//! Experiment configuration: a line-oriented `key = value` format where
//! comma lists (or repeating a key) build sweep lists. Only the process's
//! canonical parameter and `n` may be swept; the grid is their product.

use std::fmt;
use std::path::Path;

use trendperm_core::generators::{Innovations, ProcessSpec};
use trendperm_core::Side;

use crate::{Error, Result};

/// The five test procedures the harness can run per replicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MethodName {
    GlobalStud,
    GlobalUnstud,
    Classical,
    LocalStud,
    LocalUnstud,
}

impl MethodName {
    pub const ALL: [MethodName; 5] = [
        MethodName::GlobalStud,
        MethodName::GlobalUnstud,
        MethodName::Classical,
        MethodName::LocalStud,
        MethodName::LocalUnstud,
    ];

    pub fn token(self) -> &'static str {
        match self {
            MethodName::GlobalStud => "global_stud",
            MethodName::GlobalUnstud => "global_unstud",
            MethodName::Classical => "classical",
            MethodName::LocalStud => "local_stud",
            MethodName::LocalUnstud => "local_unstud",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL.into_iter().find(|m| m.token() == norm)
    }

    pub fn is_local(self) -> bool {
        matches!(self, MethodName::LocalStud | MethodName::LocalUnstud)
    }

    pub fn needs_permutations(self) -> bool {
        self != MethodName::Classical
    }

    /// Stable label for deriving the per-method permutation stream.
    pub fn stream_tag(self) -> u64 {
        match self {
            MethodName::GlobalStud => 1,
            MethodName::GlobalUnstud => 2,
            MethodName::Classical => 3,
            MethodName::LocalStud => 4,
            MethodName::LocalUnstud => 5,
        }
    }
}

impl fmt::Display for MethodName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Process families the config file can name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProcessKind {
    Iid,
    Mdep,
    Ar1,
    Ar2,
    Ma2,
    Markov,
    DriftWalk,
}

impl ProcessKind {
    pub fn token(self) -> &'static str {
        match self {
            ProcessKind::Iid => "iid",
            ProcessKind::Mdep => "mdep",
            ProcessKind::Ar1 => "ar1",
            ProcessKind::Ar2 => "ar2",
            ProcessKind::Ma2 => "ma2",
            ProcessKind::Markov => "markov",
            ProcessKind::DriftWalk => "driftwalk",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "iid" => Some(ProcessKind::Iid),
            "mdep" => Some(ProcessKind::Mdep),
            "ar1" => Some(ProcessKind::Ar1),
            "ar2" => Some(ProcessKind::Ar2),
            "ma2" => Some(ProcessKind::Ma2),
            "markov" => Some(ProcessKind::Markov),
            "driftwalk" => Some(ProcessKind::DriftWalk),
            _ => None,
        }
    }

    /// The config key whose values sweep this process, if any.
    pub fn param_key(self) -> Option<&'static str> {
        match self {
            ProcessKind::Iid => None,
            ProcessKind::Mdep => Some("m"),
            ProcessKind::Ar1 | ProcessKind::Ar2 => Some("rho"),
            ProcessKind::Ma2 => Some("phi1"),
            ProcessKind::Markov | ProcessKind::DriftWalk => Some("epsilon"),
        }
    }
}

impl fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// A fully expanded experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub process: ProcessKind,
    /// Swept canonical parameter values; `[0.0]` for parameterless processes.
    pub params: Vec<f64>,
    pub ns: Vec<usize>,
    pub methods: Vec<MethodName>,
    /// Local window M; required iff a local method is listed.
    pub window: Option<usize>,
    pub alpha: f64,
    pub side: Side,
    pub n_sims: u64,
    pub n_perms: u64,
    pub master_seed: u64,
    pub workers: usize,
    /// Linear drift added on top of the base process (0 = none).
    pub h: f64,
    pub innovations: Innovations,
    /// MA(2) phi0 coefficient (phi1 is the swept parameter).
    pub phi0: f64,
    /// Markov chain state bound M (states -M..M).
    pub states: usize,
    /// Drift-walk reset cost.
    pub c: f64,
    /// Markov jitter on/off.
    pub jitter: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            process: ProcessKind::Iid,
            params: vec![0.0],
            ns: Vec::new(),
            methods: Vec::new(),
            window: None,
            alpha: 0.05,
            side: Side::Greater,
            n_sims: 1000,
            n_perms: 1000,
            master_seed: 0,
            workers: 1,
            h: 0.0,
            innovations: Innovations::Gaussian,
            phi0: 1.0,
            states: 5,
            c: 1.0,
            jitter: true,
        }
    }
}

/// One grid point of a config: a (parameter, n) pair with its stable index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub param: f64,
    pub n: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::Invalid(m));
        if self.ns.is_empty() {
            return invalid("config needs at least one n".into());
        }
        if let Some(&n) = self.ns.iter().find(|&&n| n < 2) {
            return invalid(format!("n must be at least 2, got {n}"));
        }
        if self.methods.is_empty() {
            return invalid("config needs at least one method".into());
        }
        if self.params.is_empty() {
            return invalid("config needs at least one process parameter".into());
        }
        if self.n_sims < 1 || self.n_perms < 1 {
            return invalid("n_sims and n_perms must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return invalid(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.workers < 1 {
            return invalid("workers must be at least 1".into());
        }
        if self.methods.iter().any(|m| m.is_local()) {
            match self.window {
                None => return invalid("local methods need M".into()),
                Some(w) if w < 1 => return invalid("M must be at least 1".into()),
                Some(w) => {
                    if let Some(&n) = self.ns.iter().find(|&&n| w >= n) {
                        return invalid(format!("M = {w} must be smaller than n = {n}"));
                    }
                }
            }
        }
        // Surface bad process parameters at config time, not per cell.
        for &p in &self.params {
            self.process_spec(p)?;
        }
        Ok(())
    }

    /// Instantiate the process at one swept parameter value, with drift.
    pub fn process_spec(&self, param: f64) -> Result<ProcessSpec> {
        let base = match self.process {
            ProcessKind::Iid => ProcessSpec::Iid {
                innovations: self.innovations,
            },
            ProcessKind::Mdep => {
                if param < 0.0 || param.fract() != 0.0 {
                    return Err(Error::Invalid(format!(
                        "mdep m must be a non-negative integer, got {param}"
                    )));
                }
                ProcessSpec::MdepProduct { m: param as usize }
            }
            ProcessKind::Ar1 => ProcessSpec::Ar1 { rho: param },
            ProcessKind::Ar2 => ProcessSpec::Ar2Interleaved { rho: param },
            ProcessKind::Ma2 => ProcessSpec::Ma2 {
                phi0: self.phi0,
                phi1: param,
                innovations: self.innovations,
            },
            ProcessKind::Markov => ProcessSpec::MarkovLocal {
                m: self.states,
                epsilon: param,
                jitter: self.jitter,
            },
            ProcessKind::DriftWalk => ProcessSpec::DriftWalk {
                c: self.c,
                epsilon: param,
            },
        };
        let spec = if self.h == 0.0 {
            base
        } else {
            ProcessSpec::WithDrift {
                base: Box::new(base),
                h: self.h,
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Grid cells in row-major (parameter outer, n inner) order. The index
    /// feeds the seeding scheme, so this order is part of the output contract.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::with_capacity(self.params.len() * self.ns.len());
        for &param in &self.params {
            for &n in &self.ns {
                out.push(Cell {
                    index: out.len(),
                    param,
                    n,
                });
            }
        }
        out
    }

    /// Canonical config text; `parse_config` of the output reproduces self.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let join = |xs: &[String]| xs.join(", ");
        s.push_str(&format!("process = {}\n", self.process));
        if let Some(key) = self.process.param_key() {
            let vals: Vec<String> = self.params.iter().map(|p| p.to_string()).collect();
            s.push_str(&format!("{key} = {}\n", join(&vals)));
        }
        let ns: Vec<String> = self.ns.iter().map(|n| n.to_string()).collect();
        s.push_str(&format!("n = {}\n", join(&ns)));
        let ms: Vec<String> = self.methods.iter().map(|m| m.to_string()).collect();
        s.push_str(&format!("methods = {}\n", join(&ms)));
        if let Some(w) = self.window {
            s.push_str(&format!("M = {w}\n"));
        }
        s.push_str(&format!("alpha = {}\n", self.alpha));
        s.push_str(&format!("side = {}\n", self.side));
        s.push_str(&format!("n_sims = {}\n", self.n_sims));
        s.push_str(&format!("n_perms = {}\n", self.n_perms));
        s.push_str(&format!("master_seed = {}\n", self.master_seed));
        s.push_str(&format!("workers = {}\n", self.workers));
        if self.h != 0.0 {
            s.push_str(&format!("h = {}\n", self.h));
        }
        match self.innovations {
            Innovations::Gaussian => {}
            Innovations::Uniform => s.push_str("innovations = uniform\n"),
            Innovations::StudentT { df } => {
                s.push_str(&format!("innovations = student_t\ndf = {df}\n"))
            }
        }
        if self.process == ProcessKind::Ma2 && self.phi0 != 1.0 {
            s.push_str(&format!("phi0 = {}\n", self.phi0));
        }
        if self.process == ProcessKind::Markov {
            s.push_str(&format!("states = {}\n", self.states));
            s.push_str(&format!("jitter = {}\n", self.jitter));
        }
        if self.process == ProcessKind::DriftWalk {
            s.push_str(&format!("c = {}\n", self.c));
        }
        s
    }
}

pub fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

/// Keys the format accepts; anything else is a parse error naming the key.
const KNOWN_KEYS: &[&str] = &[
    "process",
    "m",
    "rho",
    "phi0",
    "phi1",
    "epsilon",
    "c",
    "df",
    "innovations",
    "jitter",
    "states",
    "h",
    "n",
    "methods",
    "M",
    "alpha",
    "side",
    "n_sims",
    "n_perms",
    "master_seed",
    "workers",
];

pub fn parse_config(text: &str, path: &Path) -> Result<ExperimentConfig> {
    // First pass: gather (key, value-token, line) tuples, splitting lists.
    let mut entries: Vec<(String, String, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected key = value, got `{line}`"),
            ));
        };
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::parse(path, lineno, format!("unknown key `{key}`")));
        }
        for token in value.split(',') {
            let token = token.trim();
            if token.is_empty() {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("empty value for `{key}`"),
                ));
            }
            entries.push((key.to_string(), token.to_string(), lineno));
        }
    }

    let mut cfg = ExperimentConfig::default();
    let mut seen_master_seed = false;
    let mut df: Option<f64> = None;
    let mut param_values: Vec<f64> = Vec::new();
    cfg.ns.clear();
    cfg.params.clear();

    // List-valued keys accumulate; every other key must appear once.
    const LIST_KEYS: &[&str] = &["m", "rho", "phi1", "epsilon", "n", "methods"];
    let mut seen: std::collections::HashSet<&str> = std::collections::HashSet::new();

    for (key, value, line) in &entries {
        let line = *line;
        let bad = |what: &str| Error::parse(path, line, format!("invalid {what} `{value}`"));
        if !LIST_KEYS.contains(&key.as_str()) && !seen.insert(key.as_str()) {
            return Err(Error::parse(
                path,
                line,
                format!("`{key}` given more than once"),
            ));
        }
        match key.as_str() {
            "process" => {
                cfg.process = ProcessKind::parse(value).ok_or_else(|| bad("process"))?;
            }
            "m" | "rho" | "phi1" | "epsilon" => {
                param_values.push(value.parse().map_err(|_| bad("number"))?);
            }
            "n" => cfg.ns.push(value.parse().map_err(|_| bad("n"))?),
            "methods" => {
                let m = MethodName::parse(value).ok_or_else(|| bad("method"))?;
                cfg.methods.push(m);
            }
            "M" => cfg.window = Some(value.parse().map_err(|_| bad("M"))?),
            "alpha" => cfg.alpha = value.parse().map_err(|_| bad("alpha"))?,
            "side" => cfg.side = parse_side(value).ok_or_else(|| bad("side"))?,
            "n_sims" => cfg.n_sims = value.parse().map_err(|_| bad("n_sims"))?,
            "n_perms" => cfg.n_perms = value.parse().map_err(|_| bad("n_perms"))?,
            "master_seed" => {
                cfg.master_seed = value.parse().map_err(|_| bad("master_seed"))?;
                seen_master_seed = true;
            }
            "workers" => cfg.workers = value.parse().map_err(|_| bad("workers"))?,
            "h" => cfg.h = value.parse().map_err(|_| bad("h"))?,
            "innovations" => {
                cfg.innovations = match value.to_ascii_lowercase().replace('-', "_").as_str() {
                    "gaussian" | "normal" => Innovations::Gaussian,
                    "uniform" => Innovations::Uniform,
                    "student_t" | "t" => Innovations::StudentT { df: f64::NAN },
                    _ => return Err(bad("innovations")),
                };
            }
            "df" => df = Some(value.parse().map_err(|_| bad("df"))?),
            "phi0" => cfg.phi0 = value.parse().map_err(|_| bad("phi0"))?,
            "states" => cfg.states = value.parse().map_err(|_| bad("states"))?,
            "c" => cfg.c = value.parse().map_err(|_| bad("c"))?,
            "jitter" => {
                cfg.jitter = match value.to_ascii_lowercase().as_str() {
                    "true" | "on" | "1" => true,
                    "false" | "off" | "0" => false,
                    _ => return Err(bad("jitter")),
                };
            }
            _ => unreachable!("key list checked above"),
        }
    }

    // The swept parameter key must be the one this process understands.
    let expected = cfg.process.param_key();
    let used: Vec<&str> = ["m", "rho", "phi1", "epsilon"]
        .into_iter()
        .filter(|k| entries.iter().any(|(key, _, _)| key == k))
        .collect();
    match (expected, used.as_slice()) {
        (_, []) => {}
        (Some(want), [got]) if *got == want => {}
        (Some(want), got) => {
            return Err(Error::Invalid(format!(
                "process {} sweeps `{want}`, config sets {:?}",
                cfg.process, got
            )));
        }
        (None, got) => {
            return Err(Error::Invalid(format!(
                "process {} takes no sweep parameter, config sets {:?}",
                cfg.process, got
            )));
        }
    }
    cfg.params = if param_values.is_empty() {
        if let Some(want) = expected {
            return Err(Error::Invalid(format!(
                "process {} needs `{want}`",
                cfg.process
            )));
        }
        vec![0.0]
    } else {
        param_values
    };
    if !seen_master_seed {
        return Err(Error::Invalid("config needs master_seed".into()));
    }
    // `df` and `innovations = student_t` may come in either order.
    match (&mut cfg.innovations, df) {
        (Innovations::StudentT { df }, Some(v)) => *df = v,
        (Innovations::StudentT { .. }, None) => {
            return Err(Error::Invalid("innovations = student_t needs df".into()));
        }
        (_, Some(_)) => {
            return Err(Error::Invalid(
                "df only applies to student_t innovations".into(),
            ));
        }
        (_, None) => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_side(s: &str) -> Option<Side> {
    match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
        "greater" => Some(Side::Greater),
        "less" => Some(Side::Less),
        "two-sided" | "twosided" => Some(Side::TwoSided),
        _ => None,
    }
}
