use loadforge_core::factorize::{normalize, FactorModel};
use loadforge_core::genmodel::{is_stationary, sample_dirichlet};
use loadforge_core::nnls::{kkt_holds, nnls};
use loadforge_core::seed;
use loadforge_core::simulate::voltage_waveform;
use loadforge_core::stats::{derivative, kurtosis, power_from_current, resample, HarmonicEnergy, PowerSeries};
use loadforge_core::{CurrentMatrix, Matrix};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(m.rows(), m.cols(), m.as_slice())
}

fn objective(m: &Matrix, x: &[f64], b: &[f64]) -> f64 {
    m.mul_vec(x).iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Best feasible unconstrained least-squares solution over every support.
fn enumeration_oracle(m: &Matrix, b: &[f64]) -> f64 {
    let a = to_na(m);
    let bv = DVector::from_column_slice(b);
    let k = m.cols();
    let mut best = b.iter().map(|v| v * v).sum::<f64>();
    for mask in 1u32..(1 << k) {
        let cols: Vec<usize> = (0..k).filter(|j| mask & (1 << j) != 0).collect();
        let sub = a.select_columns(&cols);
        let Ok(sol) = sub.clone().svd(true, true).solve(&bv, 1e-12) else { continue };
        if sol.iter().all(|v| *v >= -1e-12) {
            let r = (&sub * &sol - &bv).norm_squared();
            best = best.min(r);
        }
    }
    best
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-5.0f64..5.0, rows * cols).prop_map(move |v| Matrix::from_col_major(rows, cols, v).unwrap())
}

fn nnls_case() -> impl Strategy<Value = (Matrix, Vec<f64>)> {
    (1usize..=8, 1usize..=5).prop_flat_map(|(m, k)| (matrix(m, k), prop::collection::vec(-5.0f64..5.0, m)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn nnls_satisfies_kkt_and_matches_enumeration((m, b) in nnls_case()) {
        let x = nnls(&m, &b).unwrap();
        let scale = 1.0 + m.max_abs() * b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        prop_assert!(kkt_holds(&m, &x, &b, 1e-8 * scale));
        let f = objective(&m, &x, &b);
        let oracle = enumeration_oracle(&m, &b);
        prop_assert!(f <= oracle + 1e-6 * (1.0 + oracle), "nnls {f} vs oracle {oracle}");
    }

    #[test]
    fn stationarity_matches_companion_eigenvalues(phi in prop::collection::vec(-1.5f64..1.5, 1..=4)) {
        let p = phi.len();
        let mut c = DMatrix::<f64>::zeros(p, p);
        for (j, v) in phi.iter().enumerate() {
            c[(0, j)] = *v;
        }
        for i in 1..p {
            c[(i, i - 1)] = 1.0;
        }
        let radius = c.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assume!((radius - 1.0).abs() > 1e-6);
        prop_assert_eq!(is_stationary(&phi), radius < 1.0);
    }

    #[test]
    fn thd_is_scale_and_shift_invariant(
        x in prop::collection::vec(-10.0f64..10.0, 32),
        scale in prop_oneof![-100.0f64..-0.01, 0.01f64..100.0],
        shift in 0usize..32,
    ) {
        let h = HarmonicEnergy::new(32);
        let Some(base) = h.thd(&x) else { return Ok(()) };
        let scaled: Vec<f64> = x.iter().map(|v| v * scale).collect();
        let mut rotated = x.clone();
        rotated.rotate_left(shift);
        prop_assert!((h.thd(&scaled).unwrap() - base).abs() <= 1e-9 * base.max(1.0));
        prop_assert!((h.thd(&rotated).unwrap() - base).abs() <= 1e-9 * base.max(1.0));
    }

    #[test]
    fn dirichlet_draws_lie_on_the_simplex(alpha in prop::collection::vec(0.05f64..20.0, 1..=6), s in any::<u64>()) {
        let mut rng = seed::rng(s);
        let d = sample_dirichlet(&alpha, &mut rng);
        prop_assert_eq!(d.len(), alpha.len());
        prop_assert!(d.iter().all(|v| *v >= 0.0));
        prop_assert!((d.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn normalization_preserves_reconstruction_and_gives_power(
        s in matrix(16, 3),
        a in prop::collection::vec(0.0f64..10.0, 3 * 12),
    ) {
        let a = Matrix::from_col_major(3, 12, a).unwrap();
        let model = FactorModel::new(s, a).unwrap();
        let v0 = voltage_waveform(230.0, 16);
        let Ok(norm) = normalize(&model, &v0) else { return Ok(()) };
        let before = model.reconstruct();
        let after = norm.reconstruct();
        let tol = 1e-9 * (1.0 + before.max_abs());
        prop_assert!(before.sub(&after).max_abs() <= tol);
        let current = CurrentMatrix::new(after).unwrap();
        let p = power_from_current(&current, &v0, 0.0, 30.0).unwrap();
        for (pw, sum) in p.watts().iter().zip(norm.activation_sums()) {
            prop_assert!((pw - sum).abs() <= 1e-6 * (1.0 + sum.abs()));
        }
    }

    #[test]
    fn resampling_preserves_the_mean(w in prop::collection::vec(-1e3f64..1e3, 1..20), factor in 1usize..6) {
        let mut watts = Vec::new();
        for _ in 0..factor {
            watts.extend_from_slice(&w);
        }
        let p = PowerSeries::new(0.0, 30.0, watts.clone()).unwrap();
        let r = resample(&p, 30.0 * factor as f64).unwrap();
        let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        prop_assert!((mean(r.watts()) - mean(&watts)).abs() <= 1e-9 * (1.0 + mean(&watts).abs()));
    }

    #[test]
    fn normalized_derivative_is_standardized(w in prop::collection::vec(-1e3f64..1e3, 3..60)) {
        let p = PowerSeries::new(0.0, 30.0, w).unwrap();
        let Ok(d) = derivative(&p, true) else { return Ok(()) };
        let x = d.watts();
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        prop_assert!(mean.abs() <= 1e-9);
        prop_assert!((var - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn kurtosis_is_affine_invariant(x in prop::collection::vec(-10.0f64..10.0, 5..50), a in 0.1f64..10.0, b in -100.0f64..100.0) {
        let Ok(k) = kurtosis(&x) else { return Ok(()) };
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        prop_assert!((kurtosis(&y).unwrap() - k).abs() <= 1e-6 * k.max(1.0));
    }
}
