//! Seeded generators for the data-generating processes used in the
//! simulation studies.
//!
//! Every stationary generator initializes exactly from its stationary law
//! (no burn-in): AR(1) starts from N(0, 1/(1-rho^2)), the moving average
//! pre-draws its overlapping innovation, the m-dependent product draws the
//! m extra factors, and the Markov chain starts from its stationary vector.
//! Generation is a pure function of (spec, n, seed).

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::error::{domain, Result};
use crate::float;
use crate::seeding::{self, split};
use crate::series::{TiePolicy, TimeSeries};

/// Innovation distribution for the i.i.d. and moving-average generators.
///
/// Uniform is centered and scaled to unit variance (support (-sqrt3, sqrt3))
/// so it is symmetric and comparable to the Gaussian default; Student-t keeps
/// its conventional scale and needs df > 2 so second moments exist.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Innovations {
    Gaussian,
    Uniform,
    StudentT { df: f64 },
}

impl Innovations {
    fn validate(&self) -> Result<()> {
        if let Innovations::StudentT { df } = self {
            if !(df.is_finite() && *df > 2.0) {
                return Err(domain!("student-t innovations need df > 2, got {df}"));
            }
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Innovations::Gaussian => rng.sample(StandardNormal),
            Innovations::Uniform => {
                let u: f64 = rng.random();
                (u - 0.5) * (2.0 * 1.732_050_807_568_877_2)
            }
            Innovations::StudentT { df } => StudentT::new(*df).expect("df validated").sample(rng),
        }
    }
}

/// A data-generating process. Lengths and seeds are supplied at generation
/// time, so one spec can drive many replicates.
#[derive(Clone, Debug, PartialEq)]
pub enum ProcessSpec {
    /// i.i.d. draws from `innovations`.
    Iid { innovations: Innovations },
    /// X_i = product of Z_i..Z_{i+m} over one shared i.i.d. Gaussian stream:
    /// m-dependent and stationary, reducing to i.i.d. at m = 0.
    MdepProduct { m: usize },
    /// Stationary Gaussian AR(1), |rho| < 1: X_1 ~ N(0, 1/(1-rho^2)),
    /// X_i = rho*X_{i-1} + eps_i.
    Ar1 { rho: f64 },
    /// Two independent stationary AR(1) streams interleaved at odd/even
    /// positions, so X_i = rho*X_{i-2} + eta_i.
    Ar2Interleaved { rho: f64 },
    /// Moving average X_i = phi0*eps_i + phi1*eps_{i-1} (1-dependent).
    Ma2 {
        phi0: f64,
        phi1: f64,
        innovations: Innovations,
    },
    /// Markov chain with local upward trend on states {-m..m}: climbs one
    /// step with probability 1-epsilon, resets to -m with probability
    /// epsilon (and deterministically from the top state, which keeps the
    /// stated stationary vector exact). Started from the stationary vector.
    /// With `jitter`, states are emitted plus a seeded uniform(-1/4, 1/4)
    /// perturbation, which breaks ties while preserving every strict
    /// inequality between states.
    MarkovLocal {
        m: usize,
        epsilon: f64,
        jitter: bool,
    },
    /// Random walk with two-point increments +1 (prob 1-epsilon) and -c
    /// (prob epsilon), started at 0. Nonstationary; for alternative-power
    /// experiments. Ties are broken by a seeded shuffle at ranking time.
    DriftWalk { c: f64, epsilon: f64 },
    /// The base process plus the local-alternative drift h*i/n^(3/2).
    WithDrift { base: Box<ProcessSpec>, h: f64 },
}

impl ProcessSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessSpec::Iid { innovations } => innovations.validate(),
            ProcessSpec::MdepProduct { .. } => Ok(()),
            ProcessSpec::Ar1 { rho } | ProcessSpec::Ar2Interleaved { rho } => {
                if !(rho.is_finite() && rho.abs() < 1.0) {
                    return Err(domain!("autoregression needs |rho| < 1, got {rho}"));
                }
                Ok(())
            }
            ProcessSpec::Ma2 {
                phi0,
                phi1,
                innovations,
            } => {
                if !(phi0.is_finite() && phi1.is_finite()) {
                    return Err(domain!("moving-average coefficients must be finite"));
                }
                innovations.validate()
            }
            ProcessSpec::MarkovLocal { m, epsilon, .. } => {
                if *m < 1 {
                    return Err(domain!("markov chain needs m >= 1"));
                }
                check_epsilon(*epsilon)
            }
            ProcessSpec::DriftWalk { c, epsilon } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(domain!("drift walk needs c > 0, got {c}"));
                }
                check_epsilon(*epsilon)
            }
            ProcessSpec::WithDrift { base, h } => {
                if !h.is_finite() {
                    return Err(domain!("drift coefficient must be finite, got {h}"));
                }
                base.validate()
            }
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    Ok(())
}

/// Generates a validated series of length `n` from `spec`, deterministically
/// in (spec, n, seed).
pub fn generate(spec: &ProcessSpec, n: usize, seed: u64) -> Result<TimeSeries> {
    spec.validate()?;
    let values = raw_path(spec, n, seed);
    TimeSeries::new(values, tie_policy(spec, seed))
}

/// Continuous processes are almost surely tie-free, so ties there signal a
/// real problem and are rejected. Integer-valued paths (the raw Markov chain
/// and the drift walk) tie by construction and get a seeded fair break.
fn tie_policy(spec: &ProcessSpec, seed: u64) -> TiePolicy {
    match spec {
        ProcessSpec::DriftWalk { .. } | ProcessSpec::MarkovLocal { jitter: false, .. } => {
            TiePolicy::RandomBreak {
                seed: split(seed, 2),
            }
        }
        ProcessSpec::WithDrift { base, .. } => tie_policy(base, seed),
        _ => TiePolicy::Reject,
    }
}

fn raw_path(spec: &ProcessSpec, n: usize, seed: u64) -> Vec<f64> {
    match spec {
        ProcessSpec::Iid { innovations } => {
            let mut rng = seeding::rng(seed);
            (0..n).map(|_| innovations.sample(&mut rng)).collect()
        }
        ProcessSpec::MdepProduct { m } => {
            let mut rng = seeding::rng(seed);
            let z: Vec<f64> = (0..n + m).map(|_| rng.sample(StandardNormal)).collect();
            (0..n).map(|i| z[i..=i + *m].iter().product()).collect()
        }
        ProcessSpec::Ar1 { rho } => ar1_path(n, *rho, seeding::rng(seed)),
        ProcessSpec::Ar2Interleaved { rho } => {
            let odd = ar1_path(n.div_ceil(2), *rho, seeding::rng(split(seed, 0)));
            let even = ar1_path(n / 2, *rho, seeding::rng(split(seed, 1)));
            let mut v = Vec::with_capacity(n);
            for i in 0..n {
                v.push(if i % 2 == 0 { odd[i / 2] } else { even[i / 2] });
            }
            v
        }
        ProcessSpec::Ma2 {
            phi0,
            phi1,
            innovations,
        } => {
            let mut rng = seeding::rng(seed);
            let mut prev = innovations.sample(&mut rng);
            let mut v = Vec::with_capacity(n);
            for _ in 0..n {
                let cur = innovations.sample(&mut rng);
                v.push(phi0 * cur + phi1 * prev);
                prev = cur;
            }
            v
        }
        ProcessSpec::MarkovLocal { m, epsilon, jitter } => {
            // Separate streams for the state path and the jitter, so the
            // state path is identical with jitter on or off.
            let mut state_rng = seeding::rng(split(seed, 0));
            let mut jitter_rng = seeding::rng(split(seed, 1));
            let top = *m as i64;
            let mut state = sample_stationary_state(&mut state_rng, *m, *epsilon);
            let mut v = Vec::with_capacity(n);
            for _ in 0..n {
                let noise = if *jitter {
                    let u: f64 = jitter_rng.random();
                    0.5 * u - 0.25
                } else {
                    0.0
                };
                v.push(state as f64 + noise);
                if state == top {
                    state = -top;
                } else if state_rng.random::<f64>() < 1.0 - epsilon {
                    state += 1;
                } else {
                    state = -top;
                }
            }
            v
        }
        ProcessSpec::DriftWalk { c, epsilon } => {
            let mut rng = seeding::rng(seed);
            let mut y = 0.0;
            (0..n)
                .map(|_| {
                    y += if rng.random::<f64>() < 1.0 - epsilon {
                        1.0
                    } else {
                        -c
                    };
                    y
                })
                .collect()
        }
        ProcessSpec::WithDrift { base, h } => {
            let mut v = raw_path(base, n, seed);
            let scale = h / (n as f64 * float::sqrt(n as f64));
            for (i, x) in v.iter_mut().enumerate() {
                *x += scale * (i + 1) as f64;
            }
            v
        }
    }
}

fn ar1_path(n: usize, rho: f64, mut rng: ChaCha8Rng) -> Vec<f64> {
    let mut v = Vec::with_capacity(n);
    let z0: f64 = rng.sample(StandardNormal);
    let mut x = z0 / float::sqrt(1.0 - rho * rho);
    v.push(x);
    for _ in 1..n {
        let e: f64 = rng.sample(StandardNormal);
        x = rho * x + e;
        v.push(x);
    }
    v
}

/// Draws from the chain's stationary vector pi_i = pi_{-m} (1-eps)^{i+m},
/// pi_{-m} = eps / (1 - (1-eps)^{2m+1}), by inverse CDF.
fn sample_stationary_state(rng: &mut ChaCha8Rng, m: usize, epsilon: f64) -> i64 {
    let top = m as i64;
    let keep = 1.0 - epsilon;
    let base = epsilon / (1.0 - float::powi(keep, 2 * m as i32 + 1));
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut weight = base;
    for state in -top..=top {
        cum += weight;
        if u < cum {
            return state;
        }
        weight *= keep;
    }
    top
}
