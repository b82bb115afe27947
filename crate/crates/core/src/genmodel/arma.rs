//! ARMA(p, q) noise used as log-multiplicative variation on activation
//! templates.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct ArmaParams {
    phi: Vec<f64>,
    theta: Vec<f64>,
    sigma_w: f64,
}

impl ArmaParams {
    /// `x(t) = sum_i phi_i x(t-i) + w(t) + sum_j theta_j w(t-j)` with
    /// `w ~ N(0, sigma_w^2)`. The AR part must be stationary.
    pub fn new(phi: Vec<f64>, theta: Vec<f64>, sigma_w: f64) -> Result<Self> {
        if !(sigma_w >= 0.0) || !sigma_w.is_finite() {
            return Err(Error::InvalidInput("sigma_w must be finite and >= 0".into()));
        }
        if phi.iter().chain(&theta).any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("ARMA coefficients must be finite".into()));
        }
        if !is_stationary(&phi) {
            return Err(Error::NonStationary);
        }
        Ok(Self { phi, theta, sigma_w })
    }

    /// ARMA(1,1) with `phi = 0.9`, `theta = 0.3` and a stationary standard
    /// deviation of 0.05 (a few percent of day-to-day variation once
    /// exponentiated).
    pub fn default_log_noise() -> Self {
        Self::with_stationary_std(vec![0.9], vec![0.3], 0.05).expect("stationary defaults")
    }

    /// Picks `sigma_w` so that the stationary process has standard
    /// deviation `std`.
    pub fn with_stationary_std(phi: Vec<f64>, theta: Vec<f64>, std: f64) -> Result<Self> {
        let unit = Self::new(phi, theta, 1.0)?;
        let sigma_w = std / libm::sqrt(unit.stationary_variance());
        Self::new(unit.phi, unit.theta, sigma_w)
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn sigma_w(&self) -> f64 {
        self.sigma_w
    }

    pub fn burn_in(&self) -> usize {
        10 * (self.phi.len() + self.theta.len() + 1)
    }

    /// `sigma_w^2 * sum_j psi_j^2` from the causal MA(inf) weights.
    pub fn stationary_variance(&self) -> f64 {
        let mut psi = vec![1.0];
        let mut total = 1.0;
        for j in 1..100_000 {
            let mut v = if j <= self.theta.len() { self.theta[j - 1] } else { 0.0 };
            for (i, &p) in self.phi.iter().enumerate() {
                if j > i {
                    v += p * psi[j - 1 - i];
                }
            }
            psi.push(v);
            total += v * v;
            if j > self.theta.len() + self.phi.len() && v * v < 1e-18 * total {
                let tail_small = psi.iter().rev().take(self.phi.len().max(1)).all(|x| x * x < 1e-18 * total);
                if tail_small {
                    break;
                }
            }
        }
        self.sigma_w * self.sigma_w * total
    }
}

/// Stationarity of `1 - phi_1 z - ... - phi_p z^p` via the step-down
/// (reverse Levinson) recursion: all partial autocorrelations must lie
/// strictly inside (-1, 1).
pub fn is_stationary(phi: &[f64]) -> bool {
    let mut a = phi.to_vec();
    while let Some(&k) = a.last() {
        if !(k.abs() < 1.0) {
            return false;
        }
        let m = a.len();
        let denom = 1.0 - k * k;
        let next: Vec<f64> = (0..m - 1).map(|i| (a[i] + k * a[m - 2 - i]) / denom).collect();
        a = next;
    }
    true
}

/// Draws `len` values of the process after discarding the burn-in.
pub fn sample_arma(params: &ArmaParams, len: usize, seed: u64) -> Vec<f64> {
    if params.sigma_w == 0.0 {
        return vec![0.0; len];
    }
    let normal = Normal::new(0.0, params.sigma_w).expect("sigma_w validated");
    let mut rng = seed::rng(seed);
    let burn = params.burn_in();
    let (p, q) = (params.phi.len(), params.theta.len());
    let total = burn + len;
    let mut x = vec![0.0; total];
    let mut w = vec![0.0; total];
    for t in 0..total {
        w[t] = normal.sample(&mut rng);
        let mut v = w[t];
        for i in 1..=p.min(t) {
            v += params.phi[i - 1] * x[t - i];
        }
        for j in 1..=q.min(t) {
            v += params.theta[j - 1] * w[t - j];
        }
        x[t] = v;
    }
    x.split_off(burn)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lag_corr(x: &[f64], lag: usize) -> f64 {
        let n = x.len() as f64;
        let mu = x.iter().sum::<f64>() / n;
        let var: f64 = x.iter().map(|v| (v - mu) * (v - mu)).sum();
        let cov: f64 = x.windows(lag + 1).map(|w| (w[0] - mu) * (w[lag] - mu)).sum();
        cov / var
    }

    #[test]
    fn white_noise_has_sigma_w() {
        let p = ArmaParams::new(vec![], vec![], 0.7).unwrap();
        let x = sample_arma(&p, 100_000, 1);
        let mu = x.iter().sum::<f64>() / x.len() as f64;
        let sd = libm::sqrt(x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / x.len() as f64);
        assert!((sd - 0.7).abs() <= 0.02 * 0.7);
    }

    #[test]
    fn ar1_lag_one_autocorrelation() {
        let p = ArmaParams::new(vec![0.9], vec![], 1.0).unwrap();
        let x = sample_arma(&p, 100_000, 2);
        assert!((lag_corr(&x, 1) - 0.9).abs() <= 0.02);
    }

    #[test]
    fn zero_innovations_give_zero_path() {
        let p = ArmaParams::new(vec![0.5], vec![0.2], 0.0).unwrap();
        assert!(sample_arma(&p, 50, 3).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn arma11_variance_matches_closed_form() {
        let (phi, theta) = (0.9, 0.3);
        let p = ArmaParams::new(vec![phi], vec![theta], 1.0).unwrap();
        let closed = (1.0 + 2.0 * phi * theta + theta * theta) / (1.0 - phi * phi);
        assert!((p.stationary_variance() - closed).abs() <= 1e-9 * closed);
        let d = ArmaParams::default_log_noise();
        assert!((libm::sqrt(d.stationary_variance()) - 0.05).abs() <= 1e-12);
    }

    #[test]
    fn stationarity_examples() {
        assert!(is_stationary(&[]));
        assert!(is_stationary(&[0.9]));
        assert!(!is_stationary(&[1.0]));
        assert!(!is_stationary(&[-1.2]));
        // 1 - 1.5 z + 0.75 z^2 has complex roots of modulus sqrt(4/3).
        assert!(is_stationary(&[1.5, -0.75]));
        // 1 - 0.5 z - 0.6 z^2 has a root near 0.94.
        assert!(!is_stationary(&[0.5, 0.6]));
        assert_eq!(ArmaParams::new(vec![1.1], vec![], 1.0).unwrap_err(), Error::NonStationary);
    }

    #[test]
    fn deterministic_given_seed() {
        let p = ArmaParams::default_log_noise();
        assert_eq!(sample_arma(&p, 1000, 5), sample_arma(&p, 1000, 5));
        assert_ne!(sample_arma(&p, 1000, 5), sample_arma(&p, 1000, 6));
    }
}
