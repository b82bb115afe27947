//! Time-of-day inhomogeneous two-state (off/on) Markov chains.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::partition::TimePartition;
use crate::error::{Error, Result};
use crate::seed;
use crate::stats::PowerSeries;

/// Default on/off threshold in watts.
pub const DEFAULT_THRESHOLD: f64 = 20.0;

/// `x(t) = 1` iff `p(t) > threshold`.
pub fn threshold_onoff(p: &PowerSeries, threshold: f64) -> Vec<bool> {
    p.watts().iter().map(|&w| w > threshold).collect()
}

/// `gamma[tau][i][j] = P[a(t) = i | a(t-1) = j]` for `t` in subset `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    gamma: Vec<[[f64; 2]; 2]>,
    /// `smoothed[tau][j]` is set when state `j` was never observed as the
    /// previous state inside subset `tau`, so its column is the smoothed
    /// uniform prior rather than an estimate.
    smoothed: Vec<[bool; 2]>,
}

impl TransitionTable {
    pub fn new(gamma: Vec<[[f64; 2]; 2]>) -> Result<Self> {
        for (tau, g) in gamma.iter().enumerate() {
            for j in 0..2 {
                let col = g[0][j] + g[1][j];
                if (col - 1.0).abs() > 1e-9 || g.iter().any(|r| !(0.0..=1.0).contains(&r[j])) {
                    return Err(Error::NotStochastic { subset: tau });
                }
            }
        }
        let smoothed = vec![[false; 2]; gamma.len()];
        Ok(Self { gamma, smoothed })
    }

    /// Like [`TransitionTable::new`], keeping previously recorded smoothing
    /// flags.
    pub fn with_smoothed(gamma: Vec<[[f64; 2]; 2]>, smoothed: Vec<[bool; 2]>) -> Result<Self> {
        if smoothed.len() != gamma.len() {
            return Err(Error::InvalidInput("one smoothing flag pair per subset is required".into()));
        }
        let mut table = Self::new(gamma)?;
        table.smoothed = smoothed;
        Ok(table)
    }

    /// Table from per-subset switch-on and switch-off probabilities
    /// (`gamma(1,0)` and `gamma(0,1)`).
    pub fn from_switching(on: &[f64], off: &[f64]) -> Result<Self> {
        if on.len() != off.len() {
            return Err(Error::InvalidInput("switch-on/off lengths differ".into()));
        }
        Self::new(
            on.iter()
                .zip(off)
                .map(|(&p_on, &p_off)| [[1.0 - p_on, p_off], [p_on, 1.0 - p_off]])
                .collect(),
        )
    }

    pub fn subsets(&self) -> usize {
        self.gamma.len()
    }

    pub fn gamma(&self, tau: usize) -> [[f64; 2]; 2] {
        self.gamma[tau]
    }

    /// `gamma_tau(1, prev)`.
    pub fn prob_on(&self, tau: usize, prev: bool) -> f64 {
        self.gamma[tau][1][prev as usize]
    }

    pub fn smoothed(&self, tau: usize) -> [bool; 2] {
        self.smoothed[tau]
    }

    pub fn any_smoothed(&self) -> bool {
        self.smoothed.iter().any(|s| s[0] || s[1])
    }
}

/// Maximum-likelihood transition probabilities per subset.
///
/// Counts are normalized by the number of times the conditioning state `j`
/// occurs as previous state within the subset, so each column is a proper
/// conditional distribution. Unseen `(tau, j)` pairs get the Laplace
/// smoothed value 1/2 and are flagged.
pub fn infer_transitions(
    states: &[bool],
    start: f64,
    interval: f64,
    partition: &TimePartition,
) -> Result<TransitionTable> {
    let span = states.len() as f64 * interval;
    if states.len() < 2 || span < partition.cycle_seconds() {
        return Err(Error::InvalidInput(format!(
            "state series spans {span} s, less than one partition cycle ({} s)",
            partition.cycle_seconds()
        )));
    }
    let m = partition.subsets();
    let mut counts = vec![[[0u64; 2]; 2]; m];
    for t in 1..states.len() {
        let tau = partition.index(start + t as f64 * interval);
        counts[tau][states[t] as usize][states[t - 1] as usize] += 1;
    }
    let mut gamma = vec![[[0.0; 2]; 2]; m];
    let mut smoothed = vec![[false; 2]; m];
    for tau in 0..m {
        for j in 0..2 {
            let denom = counts[tau][0][j] + counts[tau][1][j];
            if denom == 0 {
                smoothed[tau][j] = true;
                gamma[tau][0][j] = 0.5;
                gamma[tau][1][j] = 0.5;
            } else {
                for i in 0..2 {
                    gamma[tau][i][j] = counts[tau][i][j] as f64 / denom as f64;
                }
            }
        }
    }
    Ok(TransitionTable { gamma, smoothed })
}

/// Samples `a(t) ~ Bernoulli(gamma_tau(1, a(t-1)))` for `len` steps starting
/// from `initial`.
pub fn sample_onoff(
    table: &TransitionTable,
    partition: &TimePartition,
    start: f64,
    interval: f64,
    len: usize,
    initial: bool,
    seed: u64,
) -> Result<Vec<bool>> {
    if table.subsets() != partition.subsets() {
        return Err(Error::InvalidInput(format!(
            "table has {} subsets, partition has {}",
            table.subsets(),
            partition.subsets()
        )));
    }
    let mut rng = seed::rng(seed);
    let mut out = Vec::with_capacity(len);
    let mut prev = initial;
    for t in 0..len {
        if t > 0 {
            let tau = partition.index(start + t as f64 * interval);
            let u: f64 = rng.random();
            prev = u < table.prob_on(tau, prev);
        }
        out.push(prev);
    }
    Ok(out)
}
