//! User-facing trend tests.
//!
//! Five tests share one report type: the studentized and unstudentized
//! global Mann-Kendall permutation tests, their local (windowed) versions,
//! and the classical Mann-Kendall test. The permutation tests compare the
//! observed statistic against a seeded sample of its permutation null (or a
//! caller-supplied tabulated null); the classical test uses the exact
//! enumerated null up to n = 8 and the Gaussian approximation with
//! Var(U_n) = 2(2n+5)/(9n(n-1)) beyond, without continuity correction.

use crate::error::{domain, Result};
use crate::normal;
use crate::perm::{
    exact_permutation_distribution, permutation_distribution_with_eps, NullMode, PValue,
    PermutationDistribution, Side,
};
use crate::series::{global_mk, local_increments, TimeSeries};
use crate::statistic::{Evaluator, Statistic};
use crate::variance::{
    default_bandwidth, global_variance, local_variance, VarianceEstimate, VARIANCE_FLOOR,
};
use core::fmt;

/// Which of the five tests produced a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    GlobalStudentized,
    GlobalUnstudentized,
    ClassicalMk,
    LocalStudentized,
    LocalUnstudentized,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Method::GlobalStudentized => "global-studentized",
            Method::GlobalUnstudentized => "global-unstudentized",
            Method::ClassicalMk => "classical-mk",
            Method::LocalStudentized => "local-studentized",
            Method::LocalUnstudentized => "local-unstudentized",
        };
        write!(f, "{name}")
    }
}

fn method_for(statistic: Statistic) -> Method {
    match statistic {
        // U_n and sqrt(n)*U_n order permutations identically; both are the
        // unstudentized global test.
        Statistic::GlobalU | Statistic::GlobalScaled => Method::GlobalUnstudentized,
        Statistic::GlobalStudentized { .. } => Method::GlobalStudentized,
        Statistic::LocalScaled { .. } => Method::LocalUnstudentized,
        Statistic::LocalStudentized { .. } => Method::LocalStudentized,
    }
}

/// Outcome of a trend test.
#[derive(Clone, Debug, PartialEq)]
pub struct TestReport {
    pub method: Method,
    /// Observed test statistic, on the scale the test compares against its
    /// null (e.g. sqrt(n)*U_n/sigma_hat for the studentized global test,
    /// plain U_n for the classical test).
    pub statistic: f64,
    /// Variance estimate behind the studentization; present iff the method
    /// is a studentized variant.
    pub studentizer: Option<VarianceEstimate>,
    pub p_value: PValue,
    pub alpha: f64,
    /// p_value.value <= alpha.
    pub reject: bool,
    pub n: usize,
    /// Local window M, for the local tests.
    pub window: Option<usize>,
    /// Permutation sample size, for sampled-null tests.
    pub n_perms: Option<u64>,
    /// Seed of the sampled null, when one was drawn.
    pub seed: Option<u64>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain!("alpha must lie in (0, 1), got {alpha}"));
    }
    Ok(())
}

/// Studentized global Mann-Kendall permutation test.
///
/// `bandwidth`/`eps` default to floor(n^(1/3)) and 1e-3. The studentizer is
/// recomputed on every permuted arrangement, so the null is that of the
/// studentized statistic itself.
pub fn global_studentized_test(
    ts: &TimeSeries,
    alpha: f64,
    side: Side,
    n_perms: u64,
    seed: u64,
    bandwidth: Option<usize>,
    eps: Option<f64>,
) -> Result<TestReport> {
    let eps = eps.unwrap_or(VARIANCE_FLOOR);
    let statistic = Statistic::GlobalStudentized { bandwidth };
    let null = permutation_distribution_with_eps(statistic, ts.len(), n_perms, seed, eps)?;
    test_with_null_eps(ts, &null, alpha, side, eps)
}

/// Unstudentized global Mann-Kendall permutation test (statistic sqrt(n)*U_n).
pub fn global_unstudentized_test(
    ts: &TimeSeries,
    alpha: f64,
    side: Side,
    n_perms: u64,
    seed: u64,
) -> Result<TestReport> {
    let null = permutation_distribution_with_eps(
        Statistic::GlobalScaled,
        ts.len(),
        n_perms,
        seed,
        VARIANCE_FLOOR,
    )?;
    test_with_null(ts, &null, alpha, side)
}

/// Studentized local Mann-Kendall permutation test of order `window`.
#[allow(clippy::too_many_arguments)]
pub fn local_studentized_test(
    ts: &TimeSeries,
    window: usize,
    alpha: f64,
    side: Side,
    n_perms: u64,
    seed: u64,
    bandwidth: Option<usize>,
    eps: Option<f64>,
) -> Result<TestReport> {
    let eps = eps.unwrap_or(VARIANCE_FLOOR);
    let statistic = Statistic::LocalStudentized { window, bandwidth };
    let null = permutation_distribution_with_eps(statistic, ts.len(), n_perms, seed, eps)?;
    test_with_null_eps(ts, &null, alpha, side, eps)
}

/// Unstudentized local Mann-Kendall permutation test of order `window`
/// (statistic sqrt(n*g)*V_n).
pub fn local_unstudentized_test(
    ts: &TimeSeries,
    window: usize,
    alpha: f64,
    side: Side,
    n_perms: u64,
    seed: u64,
) -> Result<TestReport> {
    let null = permutation_distribution_with_eps(
        Statistic::LocalScaled { window },
        ts.len(),
        n_perms,
        seed,
        VARIANCE_FLOOR,
    )?;
    test_with_null(ts, &null, alpha, side)
}

/// Tests a series against a pre-built (possibly tabulated or exact) null of
/// the null's own statistic. Errors when the null was built for a different
/// series length.
pub fn test_with_null(
    ts: &TimeSeries,
    null: &PermutationDistribution,
    alpha: f64,
    side: Side,
) -> Result<TestReport> {
    test_with_null_eps(ts, null, alpha, side, VARIANCE_FLOOR)
}

/// As [`test_with_null`] with an explicit variance floor, which must match
/// the one the null was built with for the test to be exact.
pub fn test_with_null_eps(
    ts: &TimeSeries,
    null: &PermutationDistribution,
    alpha: f64,
    side: Side,
    eps: f64,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    if ts.len() != null.n() {
        return Err(domain!(
            "null distribution was built for n = {}, series has n = {}",
            null.n(),
            ts.len()
        ));
    }
    let statistic = null.statistic();
    let observed = Evaluator::with_eps(statistic, ts.len(), eps)?.evaluate_series(ts);
    let p_value = null.p_value(observed, side);
    let studentizer = match statistic {
        Statistic::GlobalStudentized { bandwidth } => {
            let b = bandwidth.unwrap_or_else(|| default_bandwidth(ts.len()));
            Some(global_variance(ts, b, eps)?)
        }
        Statistic::LocalStudentized { window, bandwidth } => {
            let b = bandwidth.unwrap_or_else(|| default_bandwidth(ts.len()));
            let inc = local_increments(ts, window)?;
            Some(local_variance(&inc, b, eps)?)
        }
        _ => None,
    };
    let (n_perms, seed) = match null.mode() {
        NullMode::Sampled { n_perms, seed } => (Some(n_perms), Some(seed)),
        NullMode::Exact { .. } => (None, None),
    };
    Ok(TestReport {
        method: method_for(statistic),
        statistic: observed,
        studentizer,
        p_value,
        alpha,
        reject: p_value.value <= alpha,
        n: ts.len(),
        window: statistic.window(),
        n_perms,
        seed,
    })
}

/// Null variance of U_n for i.i.d. tie-free data: 2(2n+5)/(9n(n-1)).
pub fn classical_variance_u(n: usize) -> f64 {
    let n = n as f64;
    2.0 * (2.0 * n + 5.0) / (9.0 * n * (n - 1.0))
}

/// Classical Mann-Kendall test, which assumes i.i.d. data outright: exact
/// enumerated null of U_n for n <= 8, Gaussian approximation beyond.
pub fn classical_mk_test(ts: &TimeSeries, alpha: f64, side: Side) -> Result<TestReport> {
    check_alpha(alpha)?;
    let n = ts.len();
    let observed = global_mk(ts);
    let p_value = if n <= crate::perm::EXACT_ENUMERATION_LIMIT {
        let null = exact_permutation_distribution(Statistic::GlobalU, n)?;
        null.p_value(observed, side)
    } else {
        let z = observed / crate::float::sqrt(classical_variance_u(n));
        let (greater, less) = (normal::cdf(-z), normal::cdf(z));
        let value = match side {
            Side::Greater => greater,
            Side::Less => less,
            Side::TwoSided => (2.0 * greater.min(less)).min(1.0),
        };
        PValue {
            value,
            side,
            n_perms: None,
        }
    };
    Ok(TestReport {
        method: Method::ClassicalMk,
        statistic: observed,
        studentizer: None,
        p_value,
        alpha,
        reject: p_value.value <= alpha,
        n,
        window: None,
        n_perms: None,
        seed: None,
    })
}
