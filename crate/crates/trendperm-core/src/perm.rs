//! Permutation null distributions for rank statistics.
//!
//! Because every statistic here is a function of the rank vector alone, the
//! permutation null of a statistic depends only on (statistic, n), never on
//! the observed values. Sampling the null therefore reduces to shuffling the
//! identity rank vector. The b-th sampled permutation is a pure function of
//! (seed, b), which makes sampled nulls reproducible, tabulatable, and safe
//! to split across threads.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;

use crate::error::{domain, Error, Result};
use crate::seeding;
use crate::series::Rank;
use crate::statistic::{Evaluator, Statistic};

/// Largest n for which the full n! permutation set is enumerated.
pub const EXACT_ENUMERATION_LIMIT: usize = 8;

/// Which tail(s) of the null to measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Reject for large values (upward trend).
    Greater,
    /// Reject for small values (downward trend).
    Less,
    /// Reject for either tail; doubles the smaller one-sided value.
    TwoSided,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Greater => write!(f, "greater"),
            Side::Less => write!(f, "less"),
            Side::TwoSided => write!(f, "two-sided"),
        }
    }
}

/// A p-value and how it was obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PValue {
    pub value: f64,
    pub side: Side,
    /// Monte Carlo draw count behind the value; `None` for exact enumeration
    /// or a closed-form reference distribution.
    pub n_perms: Option<u64>,
}

/// How a null distribution was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NullMode {
    /// Monte Carlo sample of the permutation null.
    Sampled { n_perms: u64, seed: u64 },
    /// Every one of the n! equally likely rank arrangements.
    Exact { n_arrangements: u64 },
}

/// A sorted sample (or full enumeration) of a statistic's permutation null.
///
/// Because the statistics are rank-based, this object is fully identified by
/// (statistic, n, mode): it is the same for every tie-free series of length
/// n, which is what makes tabulation sound.
#[derive(Clone, Debug, PartialEq)]
pub struct PermutationDistribution {
    statistic: Statistic,
    n: usize,
    values: Vec<f64>,
    mode: NullMode,
}

impl PermutationDistribution {
    /// Rebuilds a distribution from stored values (sorted here), checking
    /// that the count matches the claimed mode and all values are finite.
    pub fn from_values(
        statistic: Statistic,
        n: usize,
        mut values: Vec<f64>,
        mode: NullMode,
    ) -> Result<Self> {
        let claimed = match mode {
            NullMode::Sampled { n_perms, .. } => n_perms,
            NullMode::Exact { n_arrangements } => n_arrangements,
        };
        if values.len() as u64 != claimed || values.is_empty() {
            return Err(domain!(
                "null distribution claims {claimed} values, holds {}",
                values.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain!("null distribution contains a non-finite value"));
        }
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        Ok(PermutationDistribution {
            statistic,
            n,
            values,
            mode,
        })
    }

    /// Statistic whose null this is.
    pub fn statistic(&self) -> Statistic {
        self.statistic
    }

    /// Series length the null was built for.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Null values in ascending order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mode(&self) -> NullMode {
        self.mode
    }

    /// Number of null values >= x.
    pub fn count_ge(&self, x: f64) -> u64 {
        (self.values.len() - self.values.partition_point(|&v| v < x)) as u64
    }

    /// Number of null values <= x.
    pub fn count_le(&self, x: f64) -> u64 {
        self.values.partition_point(|&v| v <= x) as u64
    }

    /// P-value of an observed statistic against this null.
    ///
    /// Sampled mode uses the add-one estimator (1 + #{exceedances})/(B + 1),
    /// which is never zero and is exact-level valid when the observed series
    /// is exchangeable with the permutations. Exact mode uses the plain
    /// proportion over all arrangements. Two-sided doubles the smaller tail
    /// and caps at 1.
    pub fn p_value(&self, observed: f64, side: Side) -> PValue {
        let (value, n_perms) = match side {
            Side::Greater => (self.tail(observed, Side::Greater), self.sample_size()),
            Side::Less => (self.tail(observed, Side::Less), self.sample_size()),
            Side::TwoSided => {
                let g = self.tail(observed, Side::Greater);
                let l = self.tail(observed, Side::Less);
                ((2.0 * g.min(l)).min(1.0), self.sample_size())
            }
        };
        PValue {
            value,
            side,
            n_perms,
        }
    }

    fn sample_size(&self) -> Option<u64> {
        match self.mode {
            NullMode::Sampled { n_perms, .. } => Some(n_perms),
            NullMode::Exact { .. } => None,
        }
    }

    fn tail(&self, observed: f64, side: Side) -> f64 {
        let count = match side {
            Side::Greater => self.count_ge(observed),
            Side::Less => self.count_le(observed),
            Side::TwoSided => unreachable!("tail is one-sided"),
        };
        match self.mode {
            NullMode::Sampled { n_perms, .. } => (1 + count) as f64 / (n_perms + 1) as f64,
            NullMode::Exact { n_arrangements } => count as f64 / n_arrangements as f64,
        }
    }

    /// Inverse empirical CDF: smallest stored value v with F_hat(v) >= q.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(domain!("quantile level must lie in [0, 1], got {q}"));
        }
        let k =
            (crate::float::ceil(q * self.values.len() as f64) as usize).clamp(1, self.values.len());
        Ok(self.values[k - 1])
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Population variance of the stored values (divides by the count, which
    /// is the exact null variance in enumeration mode).
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.values.len() as f64
    }
}

/// The `index`-th uniformly random permutation of ranks 1..=n for a given
/// seed. A pure function of (n, seed, index); the engine draws the same ones.
pub fn sample_permutation(n: usize, seed: u64, index: u64) -> Vec<Rank> {
    let mut ranks: Vec<Rank> = (1..=n as Rank).collect();
    let mut rng = seeding::rng(seeding::split(seed, index));
    ranks.shuffle(&mut rng);
    ranks
}

/// Monte Carlo sample of the permutation null of `statistic` at length `n`,
/// with the default variance floor.
pub fn permutation_distribution(
    statistic: Statistic,
    n: usize,
    n_perms: u64,
    seed: u64,
) -> Result<PermutationDistribution> {
    permutation_distribution_with_eps(statistic, n, n_perms, seed, crate::variance::VARIANCE_FLOOR)
}

/// As [`permutation_distribution`] with an explicit variance floor (only
/// relevant to studentized statistics).
pub fn permutation_distribution_with_eps(
    statistic: Statistic,
    n: usize,
    n_perms: u64,
    seed: u64,
    eps: f64,
) -> Result<PermutationDistribution> {
    if n_perms == 0 {
        return Err(domain!("need at least one permutation"));
    }
    let mut ev = Evaluator::with_eps(statistic, n, eps)?;
    let identity: Vec<Rank> = (1..=n as Rank).collect();
    let mut ranks = identity.clone();
    let mut values = Vec::with_capacity(n_perms as usize);
    for b in 0..n_perms {
        // Reset first so draw b is a pure function of (seed, b).
        ranks.copy_from_slice(&identity);
        let mut rng = seeding::rng(seeding::split(seed, b));
        ranks.shuffle(&mut rng);
        values.push(ev.evaluate(&ranks));
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite statistics"));
    Ok(PermutationDistribution {
        statistic,
        n,
        values,
        mode: NullMode::Sampled { n_perms, seed },
    })
}

/// Exact permutation null: the statistic on all n! rank arrangements.
/// Only for n <= [`EXACT_ENUMERATION_LIMIT`].
pub fn exact_permutation_distribution(
    statistic: Statistic,
    n: usize,
) -> Result<PermutationDistribution> {
    exact_permutation_distribution_with_eps(statistic, n, crate::variance::VARIANCE_FLOOR)
}

/// As [`exact_permutation_distribution`] with an explicit variance floor.
pub fn exact_permutation_distribution_with_eps(
    statistic: Statistic,
    n: usize,
    eps: f64,
) -> Result<PermutationDistribution> {
    if n > EXACT_ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            n,
            limit: EXACT_ENUMERATION_LIMIT,
        });
    }
    let mut ev = Evaluator::with_eps(statistic, n, eps)?;
    let mut ranks: Vec<Rank> = (1..=n as Rank).collect();
    let mut values = Vec::with_capacity(factorial(n) as usize);
    for_each_permutation(&mut ranks, &mut |r| values.push(ev.evaluate(r)));
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite statistics"));
    let n_arrangements = values.len() as u64;
    Ok(PermutationDistribution {
        statistic,
        n,
        values,
        mode: NullMode::Exact { n_arrangements },
    })
}

pub(crate) fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Heap's algorithm, iterative form; visits each permutation exactly once.
fn for_each_permutation(items: &mut [Rank], visit: &mut impl FnMut(&[Rank])) {
    let n = items.len();
    let mut c = vec![0usize; n];
    visit(items);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            visit(items);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_global_u_multiset_at_n3() {
        let d = exact_permutation_distribution(Statistic::GlobalU, 3).unwrap();
        let want = [-1.0, -1.0 / 3.0, -1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0];
        assert_eq!(d.len(), 6);
        for (got, want) in d.values().iter().zip(want) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
        assert_eq!(d.mode(), NullMode::Exact { n_arrangements: 6 });
    }

    #[test]
    fn exact_global_u_variance_at_n4() {
        // Var(U_4) = 2(2n+5)/(9 n (n-1)) = 13/54.
        let d = exact_permutation_distribution(Statistic::GlobalU, 4).unwrap();
        assert_eq!(d.len(), 24);
        assert!(d.mean().abs() < 1e-15);
        assert!((d.variance() - 13.0 / 54.0).abs() < 1e-12);
    }

    #[test]
    fn enumeration_limit_is_enforced() {
        let err = exact_permutation_distribution(Statistic::GlobalU, 9).unwrap_err();
        assert_eq!(err, Error::EnumerationLimit { n: 9, limit: 8 });
    }

    #[test]
    fn heap_visits_every_permutation_once() {
        let mut items: Vec<Rank> = vec![1, 2, 3, 4];
        let mut seen = alloc::collections::BTreeSet::new();
        for_each_permutation(&mut items, &mut |p| {
            assert!(seen.insert(p.to_vec()), "duplicate {p:?}");
        });
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn sampled_null_is_seed_deterministic() {
        let a = permutation_distribution(Statistic::GlobalScaled, 12, 64, 5).unwrap();
        let b = permutation_distribution(Statistic::GlobalScaled, 12, 64, 5).unwrap();
        assert_eq!(a, b);
        let c = permutation_distribution(Statistic::GlobalScaled, 12, 64, 6).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn sampled_draws_match_sample_permutation() {
        let n = 7;
        let (seed, n_perms) = (99, 25);
        let d = permutation_distribution(Statistic::GlobalU, n, n_perms, seed).unwrap();
        let mut ev = Evaluator::new(Statistic::GlobalU, n).unwrap();
        let mut want: Vec<f64> = (0..n_perms)
            .map(|b| ev.evaluate(&sample_permutation(n, seed, b)))
            .collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(d.values(), want.as_slice());
    }

    #[test]
    fn p_value_conventions() {
        let d = PermutationDistribution::from_values(
            Statistic::GlobalScaled,
            4,
            vec![1.0, 2.0, 3.0, 4.0],
            NullMode::Sampled {
                n_perms: 4,
                seed: 0,
            },
        )
        .unwrap();
        assert_eq!(d.p_value(2.5, Side::Greater).value, 3.0 / 5.0);
        assert_eq!(d.p_value(5.0, Side::Greater).value, 1.0 / 5.0);
        assert_eq!(d.p_value(5.0, Side::Less).value, 1.0);
        assert_eq!(d.p_value(5.0, Side::TwoSided).value, 2.0 / 5.0);
        assert_eq!(d.p_value(2.0, Side::Greater).value, 4.0 / 5.0);
        assert_eq!(d.p_value(2.0, Side::Less).value, 3.0 / 5.0);
        assert_eq!(d.p_value(2.5, Side::Greater).n_perms, Some(4));

        let exact = exact_permutation_distribution(Statistic::GlobalU, 3).unwrap();
        assert_eq!(exact.p_value(1.0, Side::Greater).value, 1.0 / 6.0);
        assert_eq!(exact.p_value(1.0 / 3.0, Side::Greater).value, 0.5);
        assert_eq!(exact.p_value(1.0, Side::Greater).n_perms, None);
    }

    #[test]
    fn quantile_uses_inverse_ecdf() {
        let d = PermutationDistribution::from_values(
            Statistic::GlobalScaled,
            4,
            vec![4.0, 1.0, 3.0, 2.0],
            NullMode::Sampled {
                n_perms: 4,
                seed: 0,
            },
        )
        .unwrap();
        assert_eq!(d.values(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(d.quantile(0.1).unwrap(), 1.0);
        assert_eq!(d.quantile(0.5).unwrap(), 2.0);
        assert_eq!(d.quantile(0.75).unwrap(), 3.0);
        assert_eq!(d.quantile(1.0).unwrap(), 4.0);
        assert!(d.quantile(1.5).is_err());
    }

    #[test]
    fn from_values_validates() {
        assert!(PermutationDistribution::from_values(
            Statistic::GlobalU,
            3,
            vec![1.0],
            NullMode::Sampled {
                n_perms: 2,
                seed: 0
            }
        )
        .is_err());
        assert!(PermutationDistribution::from_values(
            Statistic::GlobalU,
            3,
            vec![f64::NAN],
            NullMode::Sampled {
                n_perms: 1,
                seed: 0
            }
        )
        .is_err());
        let d = PermutationDistribution::from_values(
            Statistic::GlobalU,
            3,
            vec![0.5, -0.5],
            NullMode::Sampled {
                n_perms: 2,
                seed: 9,
            },
        )
        .unwrap();
        assert_eq!(d.statistic(), Statistic::GlobalU);
        assert_eq!(d.n(), 3);
    }
}
