//! Activation templates and the complex (continuously varying) activation
//! samplers built on them.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, Gamma};

use super::arma::{sample_arma, ArmaParams};
use super::partition::{day_number, TimePartition};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::seed;
use crate::stats::PowerSeries;

/// Mean power per subset of a time partition, in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTemplate {
    partition: TimePartition,
    values: Vec<f64>,
}

impl ActivationTemplate {
    pub fn new(partition: TimePartition, values: Vec<f64>) -> Result<Self> {
        if values.len() != partition.subsets() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} template values", partition.subsets()),
                got: format!("{}", values.len()),
            });
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput("template values must be finite and >= 0".into()));
        }
        Ok(Self { partition, values })
    }

    pub fn partition(&self) -> &TimePartition {
        &self.partition
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, ts: f64) -> f64 {
        self.values[self.partition.index(ts)]
    }

    /// Template value at each of `len` instants.
    pub fn trace(&self, start: f64, interval: f64, len: usize) -> Vec<f64> {
        (0..len).map(|t| self.at(start + t as f64 * interval)).collect()
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.partition.clone(), self.values.iter().map(|v| v * factor).collect())
    }
}

/// Template learned by averaging power per subset.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedTemplate {
    pub template: ActivationTemplate,
    /// Number of samples that fell in each subset.
    pub counts: Vec<usize>,
}

/// `a(tau) = mean of p(t) over t in S_tau`.
///
/// Subsets without samples borrow the value of the same slot in the other
/// day type when the partition has one, and are 0 otherwise. Negative means
/// (sensor offsets) are clamped to 0.
pub fn learn_template(p: &PowerSeries, partition: &TimePartition) -> Result<LearnedTemplate> {
    if p.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let m = partition.subsets();
    let mut sums = vec![0.0; m];
    let mut counts = vec![0usize; m];
    for (t, &w) in p.watts().iter().enumerate() {
        let tau = partition.index(p.timestamp(t));
        sums[tau] += w;
        counts[tau] += 1;
    }
    let mut values: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c > 0 { (s / c as f64).max(0.0) } else { 0.0 })
        .collect();
    if let TimePartition::HalfMinuteDayType(_) = partition {
        let half = m / 2;
        for slot in 0..half {
            match (counts[slot] > 0, counts[slot + half] > 0) {
                (false, true) => values[slot] = values[slot + half],
                (true, false) => values[slot + half] = values[slot],
                _ => {}
            }
        }
    }
    Ok(LearnedTemplate {
        template: ActivationTemplate::new(partition.clone(), values)?,
        counts,
    })
}

/// `a(t) = template(tau(t)) * exp(eps(t))` with ARMA `eps`.
pub fn sample_complex_activation(
    template: &ActivationTemplate,
    noise: &ArmaParams,
    start: f64,
    interval: f64,
    len: usize,
    seed: u64,
) -> Vec<f64> {
    let eps = sample_arma(noise, len, seed);
    template
        .trace(start, interval, len)
        .into_iter()
        .zip(eps)
        .map(|(a, e)| a * libm::exp(e))
        .collect()
}

/// How often the Dirichlet mixing weights are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaMode {
    /// One draw for the whole simulated span.
    #[default]
    Once,
    /// A fresh draw at every (UTC) day boundary.
    Daily,
}

/// Draws a Dirichlet(`alpha`) vector by normalizing Gamma draws.
pub fn sample_dirichlet<R: rand::Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    let g: Vec<f64> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("alpha validated").sample(rng))
        .collect();
    let total: f64 = g.iter().sum();
    if total > 0.0 {
        g.iter().map(|v| v / total).collect()
    } else {
        // Every draw underflowed (tiny alphas); fall back to the largest alpha.
        let best = alpha
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(i, _)| i);
        (0..alpha.len()).map(|i| if i == best { 1.0 } else { 0.0 }).collect()
    }
}

fn validate_alpha(alpha: &[f64]) -> Result<()> {
    if alpha.is_empty() || alpha.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
        return Err(Error::InvalidInput("Dirichlet parameters must be positive".into()));
    }
    Ok(())
}

/// Multi-signature activations: `a(k,t) = template(tau(t)) exp(eps(t)) delta(k)`
/// with `delta ~ Dirichlet(alpha)`. Column sums equal the single-signature
/// activation for the same seed.
pub fn sample_multisig_activation(
    template: &ActivationTemplate,
    noise: &ArmaParams,
    alpha: &[f64],
    mode: DeltaMode,
    start: f64,
    interval: f64,
    len: usize,
    seed: u64,
) -> Result<Matrix> {
    validate_alpha(alpha)?;
    let base = sample_complex_activation(template, noise, start, interval, len, seed);
    let mut rng = seed::rng(seed::derive(seed, 1));
    let k = alpha.len();
    let mut out = Matrix::zeros(k, len);
    let mut delta = sample_dirichlet(alpha, &mut rng);
    let mut day = day_number(start);
    for (t, &b) in base.iter().enumerate() {
        if mode == DeltaMode::Daily {
            let d = day_number(start + t as f64 * interval);
            if d != day {
                day = d;
                delta = sample_dirichlet(alpha, &mut rng);
            }
        }
        for (c, &dk) in delta.iter().enumerate() {
            out[(c, t)] = b * dk;
        }
    }
    Ok(out)
}
