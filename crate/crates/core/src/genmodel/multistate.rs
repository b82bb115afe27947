//! Multi-state (class B) activations: a Markov chain over `off` plus `K`
//! operating states, each mapped to its own signature.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::markov::TransitionTable;
use super::partition::TimePartition;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::seed;

/// Per-subset `(K+1) x (K+1)` transition matrices, `m[(prev, next)]`, each
/// row summing to one. State 0 is off.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStateTable {
    matrices: Vec<Matrix>,
}

impl MultiStateTable {
    pub fn new(matrices: Vec<Matrix>) -> Result<Self> {
        let size = matrices
            .first()
            .ok_or_else(|| Error::InvalidInput("empty multi-state table".into()))?
            .rows();
        if size < 2 {
            return Err(Error::InvalidInput("multi-state chains need at least one on state".into()));
        }
        for (tau, m) in matrices.iter().enumerate() {
            if m.shape() != (size, size) {
                return Err(Error::ShapeMismatch {
                    expected: format!("{size}x{size}"),
                    got: format!("{}x{}", m.rows(), m.cols()),
                });
            }
            for prev in 0..size {
                let row = m.row(prev);
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > 1e-9 || row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::NotStochastic { subset: tau });
                }
            }
        }
        Ok(Self { matrices })
    }

    /// Same matrix for every subset of the partition.
    pub fn homogeneous(matrix: Matrix, subsets: usize) -> Result<Self> {
        Self::new(core::iter::repeat_n(matrix, subsets).collect())
    }

    /// The `K = 1` chain equivalent to an on/off table.
    pub fn from_onoff(table: &TransitionTable) -> Result<Self> {
        Self::new(
            (0..table.subsets())
                .map(|tau| {
                    let g = table.gamma(tau);
                    Matrix::from_rows(&[&[g[0][0], g[1][0]], &[g[0][1], g[1][1]]])
                })
                .collect(),
        )
    }

    /// Number of on states.
    pub fn on_states(&self) -> usize {
        self.matrices[0].rows() - 1
    }

    pub fn subsets(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrix(&self, tau: usize) -> &Matrix {
        &self.matrices[tau]
    }
}

/// Samples the chain and returns `K x T` activations: in state `s > 0`, row
/// `s - 1` carries `magnitudes[s - 1]` watts and every other row is zero.
pub fn sample_multistate_activation(
    table: &MultiStateTable,
    magnitudes: &[f64],
    partition: &TimePartition,
    start: f64,
    interval: f64,
    len: usize,
    initial: usize,
    seed: u64,
) -> Result<Matrix> {
    let k = table.on_states();
    if magnitudes.len() != k {
        return Err(Error::ShapeMismatch {
            expected: format!("{k} magnitudes"),
            got: format!("{}", magnitudes.len()),
        });
    }
    if magnitudes.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
        return Err(Error::InvalidInput("state magnitudes must be finite and >= 0".into()));
    }
    if table.subsets() != partition.subsets() {
        return Err(Error::InvalidInput(format!(
            "table has {} subsets, partition has {}",
            table.subsets(),
            partition.subsets()
        )));
    }
    if initial > k {
        return Err(Error::InvalidInput(format!("initial state {initial} out of range")));
    }
    let mut rng = seed::rng(seed);
    let mut out = Matrix::zeros(k, len);
    let mut state = initial;
    for t in 0..len {
        if t > 0 {
            let m = table.matrix(partition.index(start + t as f64 * interval));
            // On states are scanned first so that K = 1 consumes the random
            // stream exactly like the two-state sampler.
            let u: f64 = rng.random();
            let mut cum = 0.0;
            let mut next = 0;
            for s in 1..=k {
                cum += m[(state, s)];
                if u < cum {
                    next = s;
                    break;
                }
            }
            state = next;
        }
        if state > 0 {
            out[(state - 1, t)] = magnitudes[state - 1];
        }
    }
    Ok(out)
}
