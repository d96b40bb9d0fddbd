//! Long-run variance estimators used to studentize the trend statistics.
//!
//! Both estimators are plug-in truncated autocovariance sums over rank
//! functionals, so they inherit the distribution-freeness of the statistics
//! themselves: for a fixed bandwidth they depend on the data only through the
//! rank vector. Truncation can push the raw estimate to or below zero on
//! adversarial inputs; a small positive floor keeps studentization defined.

use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::float;
use crate::series::{LocalIncrements, Rank, TimeSeries};

/// Default lower bound applied to variance estimates before studentization.
pub const VARIANCE_FLOOR: f64 = 1e-3;

/// A variance estimate together with how it was produced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarianceEstimate {
    /// Floored estimate; what studentization divides by (after sqrt).
    pub value: f64,
    /// Raw plug-in value, possibly zero or negative.
    pub raw: f64,
    /// Truncation lag actually used.
    pub bandwidth: usize,
    /// True when `raw` fell below the floor.
    pub floored: bool,
}

impl VarianceEstimate {
    fn from_raw(raw: f64, bandwidth: usize, eps: f64) -> Self {
        let floored = raw < eps;
        VarianceEstimate {
            value: if floored { eps } else { raw },
            raw,
            bandwidth,
            floored,
        }
    }
}

/// Default truncation lag floor(n^(1/3)), clamped to [1, n-1].
pub fn default_bandwidth(n: usize) -> usize {
    let n = n.max(2);
    let mut k = 1usize;
    while let Some(cube) = (k + 1).checked_pow(3) {
        if cube > n {
            break;
        }
        k += 1;
    }
    k.clamp(1, n - 1)
}

fn check_bandwidth(n: usize, bandwidth: usize) -> Result<()> {
    if bandwidth == 0 || bandwidth >= n {
        return Err(domain!(
            "bandwidth must satisfy 1 <= b <= n-1, got b={bandwidth}, n={n}"
        ));
    }
    Ok(())
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(domain!("variance floor must be a positive real, got {eps}"));
    }
    Ok(())
}

/// Long-run variance estimate for the scaled global statistic sqrt(n)*U_n.
///
/// With centered rank scores c_j = n - 2*r_j the estimate is
/// 4/9 + 8*A/(3*n^3), where A sums c_j*c_{j+k} over lags k = 1..=bandwidth;
/// equivalently 4/9 + (8/(3n)) * sum of (1-2*F_n(X_j))(1-2*F_n(X_{j+k}))
/// with F_n the empirical CDF. The lag sums are exact integer arithmetic;
/// only the final division is floating point. `value = max(raw, eps)`.
pub fn global_variance(ts: &TimeSeries, bandwidth: usize, eps: f64) -> Result<VarianceEstimate> {
    check_bandwidth(ts.len(), bandwidth)?;
    check_eps(eps)?;
    Ok(VarianceEstimate::from_raw(
        global_sigma_sq_raw(ts.ranks(), bandwidth),
        bandwidth,
        eps,
    ))
}

pub(crate) fn global_sigma_sq_raw(ranks: &[Rank], bandwidth: usize) -> f64 {
    global_sigma_sq_scratch(ranks, bandwidth, &mut Vec::new())
}

/// As [`global_sigma_sq_raw`], reusing a caller-owned score buffer.
pub(crate) fn global_sigma_sq_scratch(ranks: &[Rank], bandwidth: usize, c: &mut Vec<i64>) -> f64 {
    let n = ranks.len();
    c.clear();
    c.extend(ranks.iter().map(|&r| n as i64 - 2 * i64::from(r)));
    let mut a: i128 = 0;
    for k in 1..=bandwidth {
        let mut lag_sum: i64 = 0;
        for j in 0..n - k {
            lag_sum += c[j] * c[j + k];
        }
        a += i128::from(lag_sum);
    }
    let nf = n as f64;
    4.0 / 9.0 + 8.0 * a as f64 / (3.0 * nf * nf * nf)
}

/// Long-run variance estimate tau^2 for the scaled local statistic
/// sqrt(n*g)*V_n, i.e. the limit variance of (sum Y_i)/sqrt(n*g).
///
/// Forms the truncated autocovariance sum of the increments,
/// sigma^2 = (1/n) sum (Y_i - Ybar)^2 + (2/n) sum of lagged products, and
/// divides by the window: tau^2 = max(sigma^2 / g, eps). Computed exactly in
/// integers via T_i = n*Y_i - sum(Y).
pub fn local_variance(
    inc: &LocalIncrements,
    bandwidth: usize,
    eps: f64,
) -> Result<VarianceEstimate> {
    check_bandwidth(inc.len(), bandwidth)?;
    check_eps(eps)?;
    Ok(VarianceEstimate::from_raw(
        local_tau_sq_raw(inc.y(), inc.window(), bandwidth),
        bandwidth,
        eps,
    ))
}

pub(crate) fn local_tau_sq_raw(y: &[i64], window: usize, bandwidth: usize) -> f64 {
    local_tau_sq_scratch(y, window, bandwidth, &mut Vec::new())
}

/// As [`local_tau_sq_raw`], reusing a caller-owned centering buffer.
pub(crate) fn local_tau_sq_scratch(
    y: &[i64],
    window: usize,
    bandwidth: usize,
    t: &mut Vec<i64>,
) -> f64 {
    let n = y.len();
    let total: i64 = y.iter().sum();
    t.clear();
    t.extend(y.iter().map(|&yi| n as i64 * yi - total));
    let mut d: i128 = t.iter().map(|&ti| i128::from(ti) * i128::from(ti)).sum();
    for k in 1..=bandwidth {
        let mut lag_sum: i128 = 0;
        for j in 0..n - k {
            lag_sum += i128::from(t[j]) * i128::from(t[j + k]);
        }
        d += 2 * lag_sum;
    }
    let nf = n as f64;
    d as f64 / (nf * nf * nf) / window as f64
}

/// Studentized global statistic sqrt(n) * u / sqrt(var.value);
/// asymptotically N(0,1) under a trend-free stationary null.
pub fn studentize_global(u: f64, var: &VarianceEstimate, n: usize) -> f64 {
    float::sqrt(n as f64) * u / float::sqrt(var.value)
}

/// Studentized local statistic sqrt(n*g) * v / sqrt(var.value), with `var`
/// the tau^2 estimate for window `g`; asymptotically N(0,1) under the null.
pub fn studentize_local(v: f64, var: &VarianceEstimate, n: usize, window: usize) -> f64 {
    float::sqrt(n as f64 * window as f64) * v / float::sqrt(var.value)
}
