//! Trend statistics as values, plus an allocation-free evaluator.
//!
//! The permutation engine needs to evaluate one statistic many thousands of
//! times on shuffled rank vectors of a fixed length. [`Statistic`] names a
//! statistic; [`Evaluator`] binds it to a length (resolving the default
//! bandwidth once) and owns the scratch buffers, so each evaluation runs
//! without allocating.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{domain, Result};
use crate::float;
use crate::series::{self, Rank, TimeSeries};
use crate::variance::{self, VARIANCE_FLOOR};

/// A trend statistic computable from a tie-free rank vector.
///
/// `bandwidth: None` in the studentized variants means the length-dependent
/// default floor(n^(1/3)).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Statistic {
    /// Global Mann-Kendall U_n in [-1, 1].
    GlobalU,
    /// sqrt(n) * U_n; the scale on which U_n has a nondegenerate limit.
    GlobalScaled,
    /// sqrt(n) * U_n / sigma_hat; asymptotically N(0,1) under the null.
    GlobalStudentized { bandwidth: Option<usize> },
    /// sqrt(n*g) * V_n = sum(Y) / sqrt(n*g) for window g.
    LocalScaled { window: usize },
    /// sqrt(n*g) * V_n / tau_hat; asymptotically N(0,1) under the null.
    LocalStudentized {
        window: usize,
        bandwidth: Option<usize>,
    },
}

impl Statistic {
    /// Window for the local variants, if any.
    pub fn window(&self) -> Option<usize> {
        match *self {
            Statistic::LocalScaled { window } | Statistic::LocalStudentized { window, .. } => {
                Some(window)
            }
            _ => None,
        }
    }

    /// True for the studentized variants.
    pub fn is_studentized(&self) -> bool {
        matches!(
            self,
            Statistic::GlobalStudentized { .. } | Statistic::LocalStudentized { .. }
        )
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::GlobalU => write!(f, "global-u"),
            Statistic::GlobalScaled => write!(f, "global-scaled"),
            Statistic::GlobalStudentized { .. } => write!(f, "global-studentized"),
            Statistic::LocalScaled { .. } => write!(f, "local-scaled"),
            Statistic::LocalStudentized { .. } => write!(f, "local-studentized"),
        }
    }
}

/// A [`Statistic`] bound to a series length, with reusable scratch space.
#[derive(Clone, Debug)]
pub struct Evaluator {
    statistic: Statistic,
    n: usize,
    /// Resolved truncation lag; 0 for the unstudentized variants.
    bandwidth: usize,
    /// Variance floor for the studentized variants.
    eps: f64,
    work: Vec<Rank>,
    scratch: Vec<Rank>,
    y: Vec<i64>,
    centered: Vec<i64>,
}

impl Evaluator {
    /// Binds `statistic` to series length `n`, validating the window and
    /// resolving the bandwidth (explicit or default) against `n`. Uses the
    /// default variance floor.
    pub fn new(statistic: Statistic, n: usize) -> Result<Self> {
        Self::with_eps(statistic, n, VARIANCE_FLOOR)
    }

    /// As [`Evaluator::new`] with an explicit variance floor.
    pub fn with_eps(statistic: Statistic, n: usize, eps: f64) -> Result<Self> {
        if n < 2 {
            return Err(domain!("evaluator needs n >= 2, got {n}"));
        }
        crate::variance::check_eps(eps)?;
        if let Some(g) = statistic.window() {
            if g == 0 || g >= n {
                return Err(domain!(
                    "window must satisfy 1 <= g <= n-1, got g={g}, n={n}"
                ));
            }
        }
        let bandwidth = match statistic {
            Statistic::GlobalStudentized { bandwidth }
            | Statistic::LocalStudentized { bandwidth, .. } => {
                let b = bandwidth.unwrap_or_else(|| variance::default_bandwidth(n));
                if b == 0 || b >= n {
                    return Err(domain!(
                        "bandwidth must satisfy 1 <= b <= n-1, got b={b}, n={n}"
                    ));
                }
                b
            }
            _ => 0,
        };
        Ok(Evaluator {
            statistic,
            n,
            bandwidth,
            eps,
            work: Vec::new(),
            scratch: Vec::new(),
            y: Vec::new(),
            centered: Vec::new(),
        })
    }

    pub fn statistic(&self) -> Statistic {
        self.statistic
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Resolved truncation lag for studentized variants, `None` otherwise.
    pub fn bandwidth(&self) -> Option<usize> {
        self.statistic.is_studentized().then_some(self.bandwidth)
    }

    /// Evaluates the bound statistic on a rank vector of length `n`.
    ///
    /// `ranks` must be a permutation of 1..=n; only the length is checked.
    pub fn evaluate(&mut self, ranks: &[Rank]) -> f64 {
        assert_eq!(ranks.len(), self.n, "rank vector length mismatch");
        let n = self.n as f64;
        match self.statistic {
            Statistic::GlobalU => self.pair_sum(ranks) as f64 / pairs(self.n),
            Statistic::GlobalScaled => float::sqrt(n) * self.pair_sum(ranks) as f64 / pairs(self.n),
            Statistic::GlobalStudentized { .. } => {
                let u = self.pair_sum(ranks) as f64 / pairs(self.n);
                let raw =
                    variance::global_sigma_sq_scratch(ranks, self.bandwidth, &mut self.centered);
                float::sqrt(n) * u / float::sqrt(raw.max(self.eps))
            }
            Statistic::LocalScaled { window } => {
                series::local_increments_into(ranks, window, &mut self.y);
                let total: i64 = self.y.iter().sum();
                total as f64 / float::sqrt(n * window as f64)
            }
            Statistic::LocalStudentized { window, .. } => {
                series::local_increments_into(ranks, window, &mut self.y);
                let total: i64 = self.y.iter().sum();
                let raw = variance::local_tau_sq_scratch(
                    &self.y,
                    window,
                    self.bandwidth,
                    &mut self.centered,
                );
                total as f64 / float::sqrt(n * window as f64) / float::sqrt(raw.max(self.eps))
            }
        }
    }

    /// Evaluates on a validated series (whose length must match).
    pub fn evaluate_series(&mut self, ts: &TimeSeries) -> f64 {
        self.evaluate(ts.ranks())
    }

    fn pair_sum(&mut self, ranks: &[Rank]) -> i64 {
        self.work.clear();
        self.work.extend_from_slice(ranks);
        self.scratch.resize(ranks.len(), 0);
        series::sign_pair_sum_scratch(&mut self.work, &mut self.scratch)
    }
}

fn pairs(n: usize) -> f64 {
    (n as i64 * (n as i64 - 1) / 2) as f64
}
