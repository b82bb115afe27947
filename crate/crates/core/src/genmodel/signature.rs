use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::seed;

/// Mean signature (`N x K`) and the per-entry Gaussian perturbation std.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureTemplate {
    pub template: Matrix,
    pub sigma: f64,
}

impl SignatureTemplate {
    pub fn new(template: Matrix, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidInput("signature sigma must be finite and >= 0".into()));
        }
        if let Some((row, col)) = template.find_non_finite() {
            return Err(Error::NonFinite { row, col });
        }
        Ok(Self { template, sigma })
    }

    /// Uses the default perturbation of 1% of the template RMS.
    pub fn with_default_sigma(template: Matrix) -> Result<Self> {
        let sigma = default_sigma(&template);
        Self::new(template, sigma)
    }

    pub fn components(&self) -> usize {
        self.template.cols()
    }
}

/// 1% of the root-mean-square template entry.
pub fn default_sigma(template: &Matrix) -> f64 {
    let n = (template.rows() * template.cols()).max(1) as f64;
    0.01 * libm::sqrt(template.frobenius_sq() / n)
}

/// `s(n,k) ~ N(template(n,k), sigma^2)`, independently per entry.
///
/// The draw is not normalized; callers normalize against `v0` before use.
pub fn sample_signature(tpl: &SignatureTemplate, seed: u64) -> Matrix {
    let mut out = tpl.template.clone();
    if tpl.sigma == 0.0 {
        return out;
    }
    let normal = Normal::new(0.0, tpl.sigma).expect("sigma validated");
    let mut rng = seed::rng(seed);
    for v in out.as_mut_slice() {
        *v += normal.sample(&mut rng);
    }
    out
}
