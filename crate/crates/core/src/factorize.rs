//! Semi-non-negative matrix factorization of current waveforms.
//!
//! A current matrix `I` (`N` samples per mains period by `T` periods) is
//! modelled as `I ~ S * A` with real signatures `S` (`N x K`) and nonnegative
//! activations `A` (`K x T`). Fitting alternates an exact least-squares solve
//! for `S` with one NNLS problem per period for `A`, so the objective
//! `||I - S A||_F^2` never increases.
//!
//! Once signatures are normalized against the mains voltage `v0` so that
//! `(1/N) sum_n s(n,k) v0(n) = 1`, activations are in watts and the active
//! power of a reconstructed period is the sum of its activations.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::nnls::GramNnls;
use crate::seed;

/// Current waveforms, one column per mains period (amperes).
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentMatrix(Matrix);

impl CurrentMatrix {
    /// Wraps an `N x T` matrix, checking `N >= 2`, `T >= 1` and finiteness.
    pub fn new(values: Matrix) -> Result<Self> {
        let (n, t) = values.shape();
        if n < 2 || t < 1 {
            return Err(Error::InvalidInput(format!(
                "current matrix needs N >= 2 and T >= 1, got {n} x {t}"
            )));
        }
        if let Some((row, col)) = values.find_non_finite() {
            return Err(Error::NonFinite { row, col });
        }
        Ok(Self(values))
    }

    /// Builds a matrix from consecutive periods of `n` samples each.
    pub fn from_periods(n: usize, samples: Vec<f64>) -> Result<Self> {
        if n == 0 || !samples.len().is_multiple_of(n) {
            return Err(Error::InvalidInput(format!(
                "{} samples do not split into periods of {n}",
                samples.len()
            )));
        }
        let t = samples.len() / n;
        Self::new(Matrix::from_col_major(n, t, samples)?)
    }

    pub fn zeros(n: usize, t: usize) -> Self {
        Self(Matrix::zeros(n, t))
    }

    pub fn samples_per_period(&self) -> usize {
        self.0.rows()
    }

    pub fn num_periods(&self) -> usize {
        self.0.cols()
    }

    pub fn period(&self, t: usize) -> &[f64] {
        self.0.col(t)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

impl AsRef<Matrix> for CurrentMatrix {
    fn as_ref(&self) -> &Matrix {
        &self.0
    }
}

/// Signatures (`N x K`) and nonnegative activations (`K x T`).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub signatures: Matrix,
    pub activations: Matrix,
}

impl FactorModel {
    pub fn new(signatures: Matrix, activations: Matrix) -> Result<Self> {
        if signatures.cols() != activations.rows() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} activation rows", signatures.cols()),
                got: format!("{}", activations.rows()),
            });
        }
        if activations.as_slice().iter().any(|&a| a < 0.0) {
            return Err(Error::InvalidInput("activations must be nonnegative".into()));
        }
        Ok(Self {
            signatures,
            activations,
        })
    }

    pub fn k(&self) -> usize {
        self.signatures.cols()
    }

    pub fn reconstruct(&self) -> Matrix {
        self.signatures.matmul(&self.activations)
    }

    /// Column sums of the activations. For a normalized model this is the
    /// active power of each reconstructed period.
    pub fn activation_sums(&self) -> Vec<f64> {
        (0..self.activations.cols())
            .map(|t| self.activations.col(t).iter().sum())
            .collect()
    }

    /// `(1/N) sum_n s(n,k) v0(n)` for every component.
    pub fn voltage_projections(&self, v0: &[f64]) -> Vec<f64> {
        projections(&self.signatures, v0)
    }
}

fn projections(signatures: &Matrix, v0: &[f64]) -> Vec<f64> {
    let n = signatures.rows() as f64;
    (0..signatures.cols())
        .map(|k| crate::linalg::dot(signatures.col(k), v0) / n)
        .collect()
}

/// Checked voltage projections: every component must project positively
/// (and not negligibly) on `v0`.
pub fn signature_projections(signatures: &Matrix, v0: &[f64]) -> Result<Vec<f64>> {
    let n = signatures.rows();
    if v0.len() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("voltage of length {n}"),
            got: format!("{}", v0.len()),
        });
    }
    let v_norm = libm::sqrt(crate::linalg::dot(v0, v0));
    let proj = projections(signatures, v0);
    for (k, &p) in proj.iter().enumerate() {
        let s_norm = libm::sqrt(crate::linalg::dot(signatures.col(k), signatures.col(k)));
        if !(p > 1e-12 * s_norm * v_norm / n as f64) {
            return Err(Error::NormalizationImpossible {
                component: k,
                projection: p,
            });
        }
    }
    Ok(proj)
}

/// Signatures rescaled to unit power projection on `v0`.
pub fn normalize_signatures(signatures: &Matrix, v0: &[f64]) -> Result<Matrix> {
    let proj = signature_projections(signatures, v0)?;
    let mut out = signatures.clone();
    for (k, p) in proj.into_iter().enumerate() {
        for v in out.col_mut(k) {
            *v /= p;
        }
    }
    Ok(out)
}

/// Rescales every signature to unit power projection on `v0`, moving the
/// scale into the activations. The reconstruction is unchanged.
pub fn normalize(model: &FactorModel, v0: &[f64]) -> Result<FactorModel> {
    let proj = signature_projections(&model.signatures, v0)?;
    let mut out = model.clone();
    for (k, p) in proj.into_iter().enumerate() {
        for v in out.signatures.col_mut(k) {
            *v /= p;
        }
        for t in 0..out.activations.cols() {
            out.activations[(k, t)] *= p;
        }
    }
    Ok(out)
}

/// Signatures of several categories sharing the same `N`.
#[derive(Debug, Clone, Default)]
pub struct SignatureBank {
    categories: Vec<(alloc::string::String, Matrix)>,
}

impl SignatureBank {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, id: impl Into<alloc::string::String>, signatures: Matrix) -> Result<()> {
        if let Some((_, first)) = self.categories.first() {
            if first.rows() != signatures.rows() {
                return Err(Error::ShapeMismatch {
                    expected: format!("signatures with {} samples", first.rows()),
                    got: format!("{}", signatures.rows()),
                });
            }
        }
        self.categories.push((id.into(), signatures));
        Ok(())
    }

    pub fn categories(&self) -> &[(alloc::string::String, Matrix)] {
        &self.categories
    }

    pub fn samples_per_period(&self) -> Option<usize> {
        self.categories.first().map(|(_, s)| s.rows())
    }

    pub fn total_components(&self) -> usize {
        self.categories.iter().map(|(_, s)| s.cols()).sum()
    }

    /// `[S_1, S_2, ..., S_C]`.
    pub fn concatenated(&self) -> Result<Matrix> {
        let blocks: Vec<&Matrix> = self.categories.iter().map(|(_, s)| s).collect();
        Matrix::hstack(&blocks)
    }

    /// Sums the activation rows belonging to each category.
    pub fn category_power(&self, activations: &Matrix) -> Vec<Vec<f64>> {
        let t = activations.cols();
        let mut offset = 0;
        self.categories
            .iter()
            .map(|(_, s)| {
                let rows = offset..offset + s.cols();
                offset += s.cols();
                (0..t)
                    .map(|col| rows.clone().map(|r| activations[(r, col)]).sum())
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once the relative objective decrease over one iteration drops
    /// below this.
    pub rel_tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_iters: 500,
            seed: 0,
        }
    }
}

/// Least-squares signatures for fixed activations: `S = I A^T (A A^T)^-1`.
///
/// The Gram matrix is regularized by `1e-10 * trace` before factoring and the
/// solution is then refined against the unregularized normal equations.
pub fn solve_signatures(current: &CurrentMatrix, activations: &Matrix) -> Result<Matrix> {
    let i = current.matrix();
    if activations.cols() != i.cols() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} activation columns", i.cols()),
            got: format!("{}", activations.cols()),
        });
    }
    let k = activations.rows();
    if k == 0 {
        return Err(Error::InvalidInput("no activation components".into()));
    }
    for c in 0..k {
        if (0..activations.cols()).all(|t| activations[(c, t)] == 0.0) {
            return Err(Error::DegenerateActivations { component: c });
        }
    }
    let gram = activations.row_gram();
    let trace: f64 = (0..k).map(|c| gram[(c, c)]).sum();
    let mut ridged = gram.clone();
    let lambda = 1e-10 * trace;
    for c in 0..k {
        ridged[(c, c)] += lambda;
    }
    let chol = Cholesky::new(&ridged).map_err(|component| Error::DegenerateActivations { component })?;

    // B = I A^T, one row per sample index.
    let b = i.matmul_tr(activations);
    let n = i.rows();
    let mut s = Matrix::zeros(n, k);
    let mut row = vec![0.0; k];
    for r in 0..n {
        for c in 0..k {
            row[c] = b[(r, c)];
        }
        chol.solve_in_place(&mut row);
        for c in 0..k {
            s[(r, c)] = row[c];
        }
    }
    for _ in 0..2 {
        let sg = s.matmul(&gram);
        let mut corr = b.sub(&sg);
        for r in 0..n {
            for c in 0..k {
                row[c] = corr[(r, c)];
            }
            chol.solve_in_place(&mut row);
            for c in 0..k {
                corr[(r, c)] = row[c];
            }
        }
        s.add_assign(&corr);
    }
    Ok(s)
}

/// `||I - S A||_F^2`.
pub fn objective(current: &CurrentMatrix, signatures: &Matrix, activations: &Matrix) -> f64 {
    let i = current.matrix();
    let mut total = 0.0;
    let mut col = vec![0.0; i.rows()];
    for t in 0..i.cols() {
        col.copy_from_slice(i.col(t));
        for c in 0..signatures.cols() {
            let a = activations[(c, t)];
            if a == 0.0 {
                continue;
            }
            for (x, &s) in col.iter_mut().zip(signatures.col(c)) {
                *x -= s * a;
            }
        }
        total += col.iter().map(|v| v * v).sum::<f64>();
    }
    total
}

/// Result of an SNMF run.
#[derive(Debug, Clone)]
pub struct SnmfFit {
    pub model: FactorModel,
    /// Objective after every half-step (signature step, then activation step).
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Indices (into the initial `k` components) dropped because their
    /// activation row became identically zero.
    pub pruned: Vec<usize>,
}

/// Seeded nonnegative starting activations scaled to the data norm.
fn initial_activations(current: &CurrentMatrix, k: usize, seed: u64) -> Matrix {
    let t = current.num_periods();
    let mut rng = seed::rng(seed);
    let mut a = Matrix::zeros(k, t);
    for c in 0..k {
        let mut any = false;
        let draws: Vec<f64> = (0..t).map(|_| StandardNormal.sample(&mut rng)).collect();
        for (col, &g) in draws.iter().enumerate() {
            if g > 0.0 {
                a[(c, col)] = g;
                any = true;
            }
        }
        if !any {
            for (col, &g) in draws.iter().enumerate() {
                a[(c, col)] = g.abs();
            }
        }
    }
    let an = libm::sqrt(a.frobenius_sq());
    let inorm = libm::sqrt(current.matrix().frobenius_sq());
    if an > 0.0 && inorm > 0.0 {
        a.scale(inorm / an);
    }
    a
}

fn solve_activations(current: &CurrentMatrix, signatures: &Matrix) -> Result<Matrix> {
    let solver = GramNnls::new(signatures);
    let i = current.matrix();
    let mut a = Matrix::zeros(signatures.cols(), i.cols());
    for t in 0..i.cols() {
        let x = match solver.solve(i.col(t)) {
            Ok(x) => x,
            Err(Error::NnlsNotConverged { best, .. }) => best,
            Err(e) => return Err(e),
        };
        a.col_mut(t).copy_from_slice(&x);
    }
    Ok(a)
}

/// Fits `k` components by alternating least squares.
pub fn snmf(current: &CurrentMatrix, k: usize, opts: &SolverOptions) -> Result<SnmfFit> {
    let (n, t) = current.matrix().shape();
    if k == 0 || k > n.min(t) {
        return Err(Error::InvalidInput(format!(
            "k = {k} must be in 1..={}",
            n.min(t)
        )));
    }
    let mut activations = initial_activations(current, k, opts.seed);
    let mut alive: Vec<usize> = (0..k).collect();
    let mut pruned = Vec::new();
    let mut trace = Vec::with_capacity(2 * opts.max_iters);
    let mut signatures = Matrix::zeros(n, k);
    let mut previous = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;
        signatures = solve_signatures(current, &activations)?;
        trace.push(objective(current, &signatures, &activations));

        activations = solve_activations(current, &signatures)?;
        let f = objective(current, &signatures, &activations);
        trace.push(f);

        let keep: Vec<usize> = (0..activations.rows())
            .filter(|&r| (0..t).any(|col| activations[(r, col)] != 0.0))
            .collect();
        if keep.len() < activations.rows() {
            if keep.is_empty() {
                return Err(Error::AllComponentsPruned);
            }
            for r in 0..activations.rows() {
                if !keep.contains(&r) {
                    pruned.push(alive[r]);
                }
            }
            alive = keep.iter().map(|&r| alive[r]).collect();
            activations = activations.select_rows(&keep);
            signatures = signatures.select_cols(&keep);
        }

        if f == 0.0 || (previous.is_finite() && previous - f <= opts.rel_tol * previous) {
            converged = true;
            break;
        }
        previous = f;
    }
    pruned.sort_unstable();
    Ok(SnmfFit {
        model: FactorModel {
            signatures,
            activations,
        },
        objective_trace: trace,
        iterations,
        converged,
        pruned,
    })
}

/// Fits a single-category current matrix and normalizes the signatures
/// against `v0`, so activations are in watts.
pub fn train_category(
    current: &CurrentMatrix,
    k: usize,
    v0: &[f64],
    opts: &SolverOptions,
) -> Result<FactorModel> {
    let fit = snmf(current, k, opts)?;
    normalize(&fit.model, v0)
}

/// Per-period NNLS against a fixed bank of signatures.
pub fn infer_activations(current: &CurrentMatrix, bank: &SignatureBank) -> Result<Matrix> {
    match bank.samples_per_period() {
        Some(n) if n == current.samples_per_period() => {}
        Some(n) => {
            return Err(Error::ShapeMismatch {
                expected: format!("{n} samples per period"),
                got: format!("{}", current.samples_per_period()),
            })
        }
        None => return Err(Error::InvalidInput("empty signature bank".into())),
    }
    let s = bank.concatenated()?;
    if let Some((row, col)) = s.find_non_finite() {
        return Err(Error::NonFinite { row, col });
    }
    let solver = GramNnls::new(&s);
    let i = current.matrix();
    let mut a = Matrix::zeros(s.cols(), i.cols());
    for t in 0..i.cols() {
        let x = solver.solve(i.col(t))?;
        a.col_mut(t).copy_from_slice(&x);
    }
    Ok(a)
}

/// `10 log10(sum Ihat^2 / sum (I - Ihat)^2)`, with `+inf` for a perfect fit
/// and `-inf` for a zero reconstruction of nonzero data.
///
/// The numerator is the energy of the reconstruction, not of the data.
pub fn reconstruction_snr(current: &CurrentMatrix, model: &FactorModel) -> f64 {
    snr_of(current.matrix(), &model.reconstruct())
}

/// Same as [`reconstruction_snr`] for an explicit reconstruction.
pub fn snr_of(observed: &Matrix, reconstruction: &Matrix) -> f64 {
    let signal = reconstruction.frobenius_sq();
    let residual: f64 = observed
        .as_slice()
        .iter()
        .zip(reconstruction.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if residual == 0.0 {
        f64::INFINITY
    } else if signal == 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * libm::log10(signal / residual)
    }
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub fit: SnmfFit,
    /// Requested component count of the returned fit.
    pub k: usize,
    pub snr_db: f64,
    pub met_target: bool,
}

/// Smallest `k` in `1..=k_max` whose fit reaches `snr_target` dB; falls back
/// to the `k_max` fit flagged as below target.
pub fn select_k(
    current: &CurrentMatrix,
    snr_target: f64,
    k_max: usize,
    opts: &SolverOptions,
) -> Result<Selection> {
    if !snr_target.is_finite() {
        return Err(Error::InvalidInput("snr target must be finite".into()));
    }
    let (n, t) = current.matrix().shape();
    if k_max == 0 || k_max > n.min(t) {
        return Err(Error::InvalidInput(format!(
            "k_max = {k_max} must be in 1..={}",
            n.min(t)
        )));
    }
    let mut last = None;
    for k in 1..=k_max {
        let fit = snmf(current, k, opts)?;
        let snr_db = reconstruction_snr(current, &fit.model);
        let met_target = snr_db >= snr_target;
        let selection = Selection {
            fit,
            k,
            snr_db,
            met_target,
        };
        if met_target {
            return Ok(selection);
        }
        last = Some(selection);
    }
    Ok(last.expect("k_max >= 1"))
}
