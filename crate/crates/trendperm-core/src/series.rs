//! Validated time series, ranks, and the Mann-Kendall sign statistics.
//!
//! Every statistic in this crate depends on the data only through the rank
//! vector: applying any strictly increasing transform to the values leaves
//! all of them unchanged. Series must be tie-free (ranks are a permutation of
//! 1..=n); ties are either rejected or broken by a seeded fair shuffle at
//! construction time.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{domain, Error, Result};
use crate::float;
use crate::seeding;

/// 1-based rank. `u32` bounds n at ~4e9, far beyond any intended use.
pub type Rank = u32;

/// What to do with tied values at construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TiePolicy {
    /// Refuse tied values.
    Reject,
    /// Break ties in rank by a seeded fair shuffle among the tied entries.
    /// Values are kept as given; only the rank order within each tied group
    /// is randomized (deterministically for a fixed seed).
    RandomBreak { seed: u64 },
}

/// A finite, tie-free-ranked series of length >= 2.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    ranks: Vec<Rank>,
}

impl TimeSeries {
    /// Validates `values` and computes ranks under the tie policy.
    ///
    /// Requires length >= 2 and finite entries. With [`TiePolicy::Reject`],
    /// any tied pair is an error; with [`TiePolicy::RandomBreak`], tied groups
    /// get their consecutive ranks assigned in seeded-shuffled order.
    pub fn new(values: Vec<f64>, policy: TiePolicy) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(domain!("series needs at least 2 observations, got {n}"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(domain!("non-finite value {} at index {i}", values[i]));
        }
        let ranks = rank_values(&values, policy)?;
        Ok(Self { values, ranks })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 2 by construction
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// 1-based ranks; a permutation of 1..=n.
    pub fn ranks(&self) -> &[Rank] {
        &self.ranks
    }

    /// Empirical CDF evaluated at the sample points: rank_i / n.
    pub fn ecdf(&self) -> Vec<f64> {
        let n = self.len() as f64;
        self.ranks.iter().map(|&r| f64::from(r) / n).collect()
    }
}

fn rank_values(values: &[f64], policy: TiePolicy) -> Result<Vec<Rank>> {
    let n = values.len();
    let mut order: Vec<u32> = (0..n as u32).collect();
    // Finite values only, so partial_cmp never fails; stable sort keeps tied
    // entries in index order ahead of the policy step.
    order.sort_by(|&a, &b| {
        values[a as usize]
            .partial_cmp(&values[b as usize])
            .expect("values are finite")
    });

    let mut ranks = vec![0 as Rank; n];
    match policy {
        TiePolicy::Reject => {
            for w in order.windows(2) {
                if values[w[0] as usize] == values[w[1] as usize] {
                    return Err(Error::Ties {
                        first: w[0] as usize,
                        second: w[1] as usize,
                    });
                }
            }
            for (r, &i) in order.iter().enumerate() {
                ranks[i as usize] = (r + 1) as Rank;
            }
        }
        TiePolicy::RandomBreak { seed } => {
            let mut rng = seeding::rng(seed);
            let mut start = 0;
            while start < n {
                let v = values[order[start] as usize];
                let mut end = start + 1;
                while end < n && values[order[end] as usize] == v {
                    end += 1;
                }
                if end - start > 1 {
                    order[start..end].shuffle(&mut rng);
                }
                for r in start..end {
                    ranks[order[r] as usize] = (r + 1) as Rank;
                }
                start = end;
            }
        }
    }
    Ok(ranks)
}

/// Global Mann-Kendall statistic: the average over all ordered pairs i < j of
/// sign(X_j - X_i). Lies in [-1, 1]; +1 iff strictly increasing. O(n log n).
pub fn global_mk(ts: &TimeSeries) -> f64 {
    let n = ts.len() as i64;
    sign_pair_sum(ts.ranks()) as f64 / ((n * (n - 1) / 2) as f64)
}

/// Brute-force oracle for the pair sign sum, O(n^2), straight off the values.
///
/// `global_mk` must equal this divided by n(n-1)/2 exactly.
pub fn pair_sum_bruteforce(ts: &TimeSeries) -> i64 {
    let v = ts.values();
    let mut s = 0i64;
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            if v[j] > v[i] {
                s += 1;
            } else if v[j] < v[i] {
                s -= 1;
            }
        }
    }
    s
}

/// Local Mann-Kendall statistic with window `g`: (1/(n g)) times the sign sum
/// over all pairs at most `g` apart. `g` must satisfy 1 <= g <= n-1.
///
/// Equals `local_increments(ts, g)` summed and divided by n*g; the pair sum
/// here is computed by a forward scan so the two routes are independent.
pub fn local_mk(ts: &TimeSeries, g: usize) -> Result<f64> {
    let n = ts.len();
    check_window(n, g)?;
    let r = ts.ranks();
    let mut s = 0i64;
    for i in 0..n {
        for j in (i + 1)..n.min(i + g + 1) {
            s += if r[j] > r[i] { 1 } else { -1 };
        }
    }
    Ok(s as f64 / (n as f64 * g as f64))
}

/// Sign counts of each observation against its (up to) `window` predecessors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalIncrements {
    y: Vec<i64>,
    window: usize,
}

impl LocalIncrements {
    pub fn y(&self) -> &[i64] {
        &self.y
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn sum(&self) -> i64 {
        self.y.iter().sum()
    }
}

/// Y_i = sum over the up-to-`g` predecessors j of sign(X_i - X_j), truncated
/// at the start of the series (Y_1 = 0, |Y_i| <= min(i-1, g)).
pub fn local_increments(ts: &TimeSeries, g: usize) -> Result<LocalIncrements> {
    check_window(ts.len(), g)?;
    let mut y = Vec::new();
    local_increments_into(ts.ranks(), g, &mut y);
    Ok(LocalIncrements { y, window: g })
}

fn check_window(n: usize, g: usize) -> Result<()> {
    if g == 0 || g >= n {
        return Err(domain!(
            "window must satisfy 1 <= g <= n-1, got g={g}, n={n}"
        ));
    }
    Ok(())
}

/// Pair sign sum S = sum_{i<j} sign(r_j - r_i) of a tie-free rank (or value
/// order-isomorphic) vector, via merge-sort inversion counting: S equals
/// n(n-1)/2 - 2 * inversions. O(n log n).
pub fn sign_pair_sum(ranks: &[Rank]) -> i64 {
    let n = ranks.len();
    let mut work = ranks.to_vec();
    let mut scratch = vec![0 as Rank; n];
    sign_pair_sum_scratch(&mut work, &mut scratch)
}

/// As [`sign_pair_sum`], with caller-owned buffers. `work` is clobbered.
pub(crate) fn sign_pair_sum_scratch(work: &mut [Rank], scratch: &mut [Rank]) -> i64 {
    let n = work.len() as i64;
    let pairs = n * (n - 1) / 2;
    pairs - 2 * count_inversions(work, scratch) as i64
}

/// Bottom-up merge sort counting inversions; sorts `a` in place.
pub(crate) fn count_inversions(a: &mut [Rank], scratch: &mut [Rank]) -> u64 {
    let n = a.len();
    debug_assert_eq!(scratch.len(), n);
    let mut inv: u64 = 0;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo < n {
            let mid = usize::min(lo + width, n);
            let hi = usize::min(lo + 2 * width, n);
            let (mut l, mut r, mut k) = (lo, mid, lo);
            while l < mid && r < hi {
                if a[l] <= a[r] {
                    scratch[k] = a[l];
                    l += 1;
                } else {
                    // a[r] jumps ahead of everything left in a[l..mid].
                    scratch[k] = a[r];
                    r += 1;
                    inv += (mid - l) as u64;
                }
                k += 1;
            }
            scratch[k..k + (mid - l)].copy_from_slice(&a[l..mid]);
            k += mid - l;
            scratch[k..hi].copy_from_slice(&a[r..hi]);
            lo = hi;
        }
        a.copy_from_slice(&scratch[..n]);
        width *= 2;
    }
    inv
}

/// Local increments of a rank vector into a caller-owned buffer. O(n g).
pub(crate) fn local_increments_into(ranks: &[Rank], g: usize, y: &mut Vec<i64>) {
    y.clear();
    for i in 0..ranks.len() {
        let lo = i.saturating_sub(g);
        let ri = ranks[i];
        let mut s = 0i64;
        for &rj in &ranks[lo..i] {
            s += if ri > rj { 1 } else { -1 };
        }
        y.push(s);
    }
}

/// Adds the drift h*i/n^{3/2} (i = 1..=n) to the series values.
///
/// This is the local-alternative scaling under which the global test has
/// nondegenerate limiting power. The shifted series is revalidated tie-free.
pub fn add_linear_drift(ts: &TimeSeries, h: f64) -> Result<TimeSeries> {
    if !h.is_finite() {
        return Err(domain!("drift coefficient must be finite, got {h}"));
    }
    let n = ts.len() as f64;
    let scale = h / (n * float::sqrt(n));
    let shifted = ts
        .values()
        .iter()
        .enumerate()
        .map(|(i, &x)| x + scale * (i + 1) as f64)
        .collect();
    TimeSeries::new(shifted, TiePolicy::Reject)
}
