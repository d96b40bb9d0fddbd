//! Closed-form quantities from the asymptotic theory: the limiting variance
//! sigma^2, the drift functional nu_n, limiting local power curves, and the
//! exact i.i.d. finite-n variance of the local increment sum.
//!
//! nu_n exists in two normalizations: the plain weighted sum, and a variant
//! carrying a marginal-density factor 4*E[f(X_1)]. Both are exposed; the
//! Monte Carlo power experiment in the companion harness reports which one
//! matches simulation.

use crate::error::{domain, Result};
use crate::float;
use crate::normal;

/// E[f(X)] for X standard normal with density f: 1/(2*sqrt(pi)).
pub const GAUSSIAN_MEAN_DENSITY: f64 = 0.282_094_791_773_878_14;

/// E[f(X)] for X ~ N(0, sd^2) with f its own density: 1/(2*sd*sqrt(pi)).
pub fn gaussian_mean_density(sd: f64) -> f64 {
    GAUSSIAN_MEAN_DENSITY / sd
}

/// Drift functional nu_n(mu) = (1/sqrt(n)) * sum_i ((n+1-2i)/(n-1)) * mu_i.
///
/// The weights are antisymmetric around the midpoint, so constant shifts
/// contribute nothing; a linear drift mu_i = h*i/n^(3/2) gives
/// -h(n+1)/(6n) -> -h/6.
pub fn nu_n(mu: &[f64]) -> f64 {
    let n = mu.len();
    assert!(n >= 2, "nu_n needs n >= 2");
    let nf = n as f64;
    let denom = nf - 1.0;
    let mut s = 0.0;
    for (i, &m) in mu.iter().enumerate() {
        let w = (nf + 1.0 - 2.0 * (i + 1) as f64) / denom;
        s += w * m;
    }
    s / float::sqrt(nf)
}

/// The supplement's normalization of nu_n, which carries the marginal
/// density factor: 4 * E[f(X_1)] * nu_n(mu).
pub fn nu_n_density_normalized(mu: &[f64], mean_density: f64) -> f64 {
    4.0 * mean_density * nu_n(mu)
}

/// Limiting variance of sqrt(n)*U_n: 4/9 + (8/3) * sum of the rank
/// autocovariances Cov(1 - 2F(X_1), 1 - 2F(X_{1+k})), k >= 1.
pub fn sigma_sq_from_autocov(cov: &[f64]) -> f64 {
    4.0 / 9.0 + 8.0 / 3.0 * cov.iter().sum::<f64>()
}

/// Rank autocovariance of a stationary Gaussian AR(1) at lag k:
/// Cov(1 - 2*Phi_s(X_1), 1 - 2*Phi_s(X_{1+k})) = (2/pi) * asin(rho^k / 2).
pub fn ar1_rank_autocov(rho: f64, k: u32) -> f64 {
    2.0 / core::f64::consts::PI * float::asin(float::powi(rho, k as i32) / 2.0)
}

/// Limiting variance of sqrt(n)*U_n for a stationary Gaussian AR(1),
/// summing the arcsine autocovariances to convergence.
pub fn ar1_sigma_sq(rho: f64) -> Result<f64> {
    if !(rho.is_finite() && rho.abs() < 1.0) {
        return Err(domain!("autoregression needs |rho| < 1, got {rho}"));
    }
    let mut total = 0.0;
    for k in 1..10_000u32 {
        let c = ar1_rank_autocov(rho, k);
        total += c;
        if float::abs(c) < 1e-16 {
            break;
        }
    }
    Ok(4.0 / 9.0 + 8.0 / 3.0 * total)
}

/// A limiting local-power value and the inputs that produced it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerPrediction {
    pub alpha: f64,
    pub h: f64,
    /// Limiting standard deviation of sqrt(n)*U_n under the null.
    pub sigma: f64,
    pub power: f64,
}

/// Limiting power 1 - Phi(z_{1-alpha} + nu/sigma) of the one-sided level
/// alpha test under a contiguous alternative with drift functional nu.
pub fn limiting_power_from_nu(nu: f64, alpha: f64, sigma: f64, h: f64) -> Result<PowerPrediction> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain!("alpha must lie in (0, 1), got {alpha}"));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(domain!("sigma must be positive, got {sigma}"));
    }
    let z = normal::quantile(1.0 - alpha)?;
    Ok(PowerPrediction {
        alpha,
        h,
        sigma,
        power: 1.0 - normal::cdf(z + nu / sigma),
    })
}

/// White-noise limiting power of the global test under linear drift h:
/// 1 - Phi(z_{1-alpha} - h/4), i.e. nu = -h/6 and sigma = 2/3.
pub fn limiting_power_whitenoise(h: f64, alpha: f64) -> Result<PowerPrediction> {
    limiting_power_from_nu(-h / 6.0, alpha, 2.0 / 3.0, h)
}

/// As [`limiting_power_whitenoise`] under the supplement's density-factor
/// normalization: 1 - Phi(z_{1-alpha} - h/(2*sqrt(pi))).
pub fn limiting_power_whitenoise_supplement(h: f64, alpha: f64) -> Result<PowerPrediction> {
    limiting_power_from_nu(-4.0 * GAUSSIAN_MEAN_DENSITY * h / 6.0, alpha, 2.0 / 3.0, h)
}

/// AR(1) limiting power of the global test under linear drift h:
/// 1 - Phi(z_{1-alpha} - h/(6*sigma)).
pub fn limiting_power_ar1(h: f64, alpha: f64, sigma: f64) -> Result<PowerPrediction> {
    limiting_power_from_nu(-h / 6.0, alpha, sigma, h)
}

/// As [`limiting_power_ar1`] with the supplement's density factor, using the
/// AR(1) marginal sd.
pub fn limiting_power_ar1_supplement(
    h: f64,
    alpha: f64,
    sigma: f64,
    marginal_sd: f64,
) -> Result<PowerPrediction> {
    if !(marginal_sd.is_finite() && marginal_sd > 0.0) {
        return Err(domain!("marginal sd must be positive, got {marginal_sd}"));
    }
    limiting_power_from_nu(
        -4.0 * gaussian_mean_density(marginal_sd) * h / 6.0,
        alpha,
        sigma,
        h,
    )
}

/// Exact variance of sum(Y_i) over a uniformly random arrangement of n
/// distinct values, window g: (1/3)ng + (1/18)g(4g^2 + 3g - 1).
/// Requires n >= 2g+1 so every middle index has a full window.
pub fn local_exact_variance(n: usize, g: usize) -> Result<f64> {
    if g < 1 {
        return Err(domain!("window must be at least 1"));
    }
    if n < 2 * g + 1 {
        return Err(domain!(
            "exact local variance needs n >= 2g+1, got n={n}, g={g}"
        ));
    }
    let (n, g) = (n as i64, g as i64);
    // (6ng + g(4g^2 + 3g - 1)) / 18, numerator exact in integers.
    let num = 6 * n * g + g * (4 * g * g + 3 * g - 1);
    Ok(num as f64 / 18.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, ProcessSpec};
    use crate::perm::exact_permutation_distribution;
    use crate::statistic::Statistic;
    use alloc::vec::Vec;

    #[test]
    fn gaussian_mean_density_constant_is_inverse_sqrt_4pi() {
        let v = GAUSSIAN_MEAN_DENSITY;
        assert!((v * v * 4.0 * core::f64::consts::PI - 1.0).abs() < 1e-15);
        assert!((gaussian_mean_density(2.0) - v / 2.0).abs() < 1e-18);
    }

    #[test]
    fn nu_n_hand_values() {
        assert!(nu_n(&[3.0, 3.0, 3.0, 3.0, 3.0]).abs() < 1e-15);
        assert!((nu_n(&[0.0, 1.0]) + 1.0 / 2.0f64.sqrt()).abs() < 1e-15);
        for n in [10usize, 100, 1000] {
            let h = 2.5;
            let mu: Vec<f64> = (1..=n)
                .map(|i| h * i as f64 / (n as f64).powf(1.5))
                .collect();
            let want = -h * (n as f64 + 1.0) / (6.0 * n as f64);
            assert!((nu_n(&mu) - want).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn nu_n_is_linear() {
        let a = [0.4, -1.0, 2.0, 0.3, 1.1];
        let b = [1.0, 0.5, -0.2, 0.0, 2.2];
        let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 3.0 * x - 2.0 * y).collect();
        let want = 3.0 * nu_n(&a) - 2.0 * nu_n(&b);
        assert!((nu_n(&combo) - want).abs() < 1e-14);
        assert!(
            (nu_n_density_normalized(&a, GAUSSIAN_MEAN_DENSITY)
                - 4.0 * GAUSSIAN_MEAN_DENSITY * nu_n(&a))
            .abs()
                < 1e-15
        );
    }

    #[test]
    fn sigma_sq_from_autocov_hand_values() {
        assert!((sigma_sq_from_autocov(&[]) - 4.0 / 9.0).abs() < 1e-15);
        assert!((sigma_sq_from_autocov(&[0.0, 0.0]) - 4.0 / 9.0).abs() < 1e-15);
        assert!((sigma_sq_from_autocov(&[1.0 / 12.0]) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn arcsine_autocov_matches_monte_carlo() {
        // MC oracle: rank autocovariance of AR(1) via its Gaussian marginal.
        let rho = 0.5;
        let s = generate(&ProcessSpec::Ar1 { rho }, 1_000_000, 3).unwrap();
        let sd = (1.0 / (1.0 - rho * rho)).sqrt();
        let v: Vec<f64> = s
            .values()
            .iter()
            .map(|&x| 1.0 - 2.0 * crate::normal::cdf(x / sd))
            .collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        for k in 1..=3u32 {
            let lag = k as usize;
            let mc = v
                .iter()
                .zip(&v[lag..])
                .map(|(a, b)| (a - mean) * (b - mean))
                .sum::<f64>()
                / v.len() as f64;
            let closed = ar1_rank_autocov(rho, k);
            assert!((mc - closed).abs() < 0.01, "lag {k}: {mc} vs {closed}");
        }
    }

    #[test]
    fn ar1_sigma_sq_reduces_and_sums() {
        assert!((ar1_sigma_sq(0.0).unwrap() - 4.0 / 9.0).abs() < 1e-15);
        let s = ar1_sigma_sq(0.5).unwrap();
        // Converged sum at rho = 0.5; tail beyond lag 3 contributes ~0.105.
        assert!((s - 1.2985).abs() < 1e-3, "sigma_sq {s}");
        let partial = sigma_sq_from_autocov(&[
            ar1_rank_autocov(0.5, 1),
            ar1_rank_autocov(0.5, 2),
            ar1_rank_autocov(0.5, 3),
        ]);
        assert!(s > partial);
        assert!(s - partial < 0.15);
        assert!(ar1_sigma_sq(1.0).is_err());
    }

    #[test]
    fn whitenoise_power_hand_values() {
        let p0 = limiting_power_whitenoise(0.0, 0.05).unwrap();
        assert!((p0.power - 0.05).abs() < 1e-9);
        let p4 = limiting_power_whitenoise(4.0, 0.05).unwrap();
        assert!((p4.power - 0.2595).abs() < 5e-4, "power {}", p4.power);
        let p6 = limiting_power_whitenoise(6.0, 0.05).unwrap();
        assert!(p6.power > p4.power);
        assert_eq!(p4.sigma, 2.0 / 3.0);
        assert_eq!(p4.h, 4.0);
    }

    #[test]
    fn ar1_power_reduces_to_whitenoise_at_matching_sigma() {
        let a = limiting_power_ar1(3.0, 0.05, 2.0 / 3.0).unwrap();
        let b = limiting_power_whitenoise(3.0, 0.05).unwrap();
        assert!((a.power - b.power).abs() < 1e-15);
        let wider = limiting_power_ar1(3.0, 0.05, 1.2).unwrap();
        assert!(wider.power < a.power);
        assert!(limiting_power_ar1(3.0, 0.05, 0.0).is_err());
        assert!(limiting_power_ar1(3.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn supplement_power_uses_density_factor() {
        // White noise: shift h/(2 sqrt(pi)) instead of h/4.
        let h = 4.0;
        let supp = limiting_power_whitenoise_supplement(h, 0.05).unwrap();
        let z = crate::normal::quantile(0.95).unwrap();
        let want = 1.0 - crate::normal::cdf(z - h / (2.0 * core::f64::consts::PI.sqrt()));
        assert!((supp.power - want).abs() < 1e-12);
        // Density factor exceeds the main normalization for the Gaussian:
        // 4E[f] = 2/sqrt(pi) > 1, so the supplement predicts more power.
        let main = limiting_power_whitenoise(h, 0.05).unwrap();
        assert!(supp.power > main.power);
        // AR(1) variant divides the density by the marginal sd.
        let sd = (1.0f64 / (1.0 - 0.25)).sqrt();
        let ar = limiting_power_ar1_supplement(h, 0.05, 1.1, sd).unwrap();
        let want = 1.0 - crate::normal::cdf(z - 4.0 * gaussian_mean_density(sd) * h / 6.0 / 1.1);
        assert!((ar.power - want).abs() < 1e-12);
    }

    #[test]
    fn local_exact_variance_hand_values() {
        assert!((local_exact_variance(3, 1).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        for n in [3usize, 5, 20, 101] {
            let want = (n as f64 + 1.0) / 3.0;
            assert!((local_exact_variance(n, 1).unwrap() - want).abs() < 1e-12);
        }
        assert_eq!(local_exact_variance(10, 2).unwrap(), 9.0);
        assert!(local_exact_variance(4, 2).is_err());
        assert!(local_exact_variance(2, 0).is_err());
    }

    #[test]
    fn enumeration_matches_exact_local_variance() {
        // Var(sum Y) = n*g*Var(sqrt(ng) V) over all n! arrangements.
        for n in 3..=7usize {
            for g in 1..=(n - 1) / 2 {
                let d = exact_permutation_distribution(Statistic::LocalScaled { window: g }, n)
                    .unwrap();
                assert!(d.mean().abs() < 1e-12, "mean at n={n}, g={g}");
                let var_sum = d.variance() * (n * g) as f64;
                let want = local_exact_variance(n, g).unwrap();
                let rel = ((var_sum - want) / want).abs();
                assert!(rel < 1e-12, "n={n} g={g}: {var_sum} vs {want}");
            }
        }
    }
}
