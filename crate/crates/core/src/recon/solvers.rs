//! Greedy sparse solvers over a [`MeasurementOperator`].

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use super::operator::MeasurementOperator;
use super::ReconError;

/// K-sparse coefficient estimate plus solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSolution {
    /// Dense coefficient vector of the operator's transform length.
    pub coeffs: Vec<f64>,
    /// Sorted nonzero positions.
    pub support: Vec<usize>,
    pub k: usize,
    /// ‖y - A·coeffs‖₂
    pub residual_norm: f64,
    pub iterations: usize,
    /// Relative residual reached `tol`.
    pub converged: bool,
    /// A least-squares subproblem was singular and solved with ridge damping.
    pub ridge_used: bool,
    /// Residual norm after each accepted iteration, starting with ‖y‖.
    pub residual_history: Vec<f64>,
}

impl SparseSolution {
    fn zero(n: usize, k: usize, residual_norm: f64, converged: bool) -> Self {
        Self {
            coeffs: vec![0.0; n],
            support: Vec::new(),
            k,
            residual_norm,
            iterations: 0,
            converged,
            ridge_used: false,
            residual_history: vec![residual_norm],
        }
    }

    pub fn nonzero_count(&self) -> usize {
        self.coeffs.iter().filter(|c| **c != 0.0).count()
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(op: &MeasurementOperator, y: &[f64], support: &[usize], values: &[f64]) -> Vec<f64> {
    let mut dense = vec![0.0; op.transform_len()];
    for (&j, &v) in support.iter().zip(values) {
        dense[j] = v;
    }
    let ax = op.forward(&dense);
    y.iter().zip(&ax).map(|(a, b)| a - b).collect()
}

/// Positions of the `count` largest |v|, ties broken towards the lower index.
pub(crate) fn top_indices(v: &[f64], count: usize) -> Vec<usize> {
    let count = count.min(v.len());
    if count == 0 {
        return Vec::new();
    }
    let cmp = |a: &usize, b: &usize| -> Ordering {
        v[*b].abs().total_cmp(&v[*a].abs()).then(a.cmp(b))
    };
    let mut idx: Vec<usize> = (0..v.len()).collect();
    if count < idx.len() {
        idx.select_nth_unstable_by(count - 1, cmp);
        idx.truncate(count);
    }
    idx.sort_unstable();
    idx
}

/// Least squares restricted to `support` via the normal equations. Falls back
/// to ridge damping `1e-10 · trace(G)/|T|` when the Gram matrix is singular
/// or numerically rank deficient; the flag reports that.
pub(crate) fn restricted_lstsq(op: &MeasurementOperator, support: &[usize], y: &[f64]) -> (Vec<f64>, bool) {
    let m = op.measurement_count();
    let t = support.len();
    if t == 0 {
        return (Vec::new(), false);
    }
    let mut a = DMatrix::<f64>::zeros(m, t);
    for (c, &k) in support.iter().enumerate() {
        for (r, v) in op.column(k).enumerate() {
            a[(r, c)] = v;
        }
    }
    let yv = DVector::from_column_slice(y);
    let gram = a.tr_mul(&a);
    let rhs = a.tr_mul(&yv);

    let max_diag = gram.diagonal().max();
    if let Some(chol) = gram.clone().cholesky() {
        let l = chol.l_dirty();
        let min_pivot = (0..t).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
        if min_pivot > 1e-12 * max_diag {
            return (chol.solve(&rhs).as_slice().to_vec(), false);
        }
    }

    let lambda = 1e-10 * gram.trace() / t as f64;
    let mut damped = gram;
    for i in 0..t {
        damped[(i, i)] += lambda.max(f64::MIN_POSITIVE);
    }
    let sol = match damped.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        // Only reachable for a zero Gram matrix (all-zero rows).
        None => DVector::zeros(t),
    };
    (sol.as_slice().to_vec(), true)
}

fn validate(op: &MeasurementOperator, y: &[f64], k: usize) -> Result<(), ReconError> {
    if k == 0 {
        return Err(ReconError::ZeroSparsity);
    }
    if y.len() != op.measurement_count() {
        return Err(ReconError::MeasurementLength {
            expected: op.measurement_count(),
            actual: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(ReconError::NonFiniteMeasurements);
    }
    Ok(())
}

/// Compressive sampling matching pursuit.
///
/// Each iteration takes the 2K largest entries of the proxy `Aᵀr`, merges
/// them with the current support, solves least squares on the union, keeps
/// the K largest and refits on those. An iteration is only accepted if it
/// lowers the residual, so the residual history is non-increasing; the loop
/// stops at `tol` (relative to ‖y‖), at `max_iter`, or on stagnation.
pub fn cosamp(
    op: &MeasurementOperator,
    y: &[f64],
    k: usize,
    max_iter: usize,
    tol: f64,
) -> Result<SparseSolution, ReconError> {
    validate(op, y, k)?;
    let n = op.transform_len();
    let y_norm = norm(y);
    if y_norm == 0.0 {
        return Ok(SparseSolution::zero(n, k, 0.0, true));
    }
    let threshold = tol * y_norm;

    let mut support: Vec<usize> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut r = y.to_vec();
    let mut r_norm = y_norm;
    let mut history = vec![y_norm];
    let mut ridge_used = false;
    let mut iterations = 0;

    while iterations < max_iter && r_norm > threshold {
        let proxy = op.adjoint(&r);
        let mut merged = top_indices(&proxy, 2 * k);
        merged.extend_from_slice(&support);
        merged.sort_unstable();
        merged.dedup();

        let (b, ridge_a) = restricted_lstsq(op, &merged, y);
        let keep = top_indices(&b, k);
        let candidate: Vec<usize> = keep.iter().map(|&i| merged[i]).collect();
        let (fit, ridge_b) = restricted_lstsq(op, &candidate, y);
        let r_new = residual(op, y, &candidate, &fit);
        let r_new_norm = norm(&r_new);

        ridge_used |= ridge_a || ridge_b;
        if !(r_new_norm < r_norm) {
            break;
        }
        iterations += 1;
        support = candidate;
        values = fit;
        r = r_new;
        r_norm = r_new_norm;
        history.push(r_norm);
    }

    Ok(finish(n, k, support, values, r_norm, iterations, threshold, ridge_used, history))
}

/// Orthogonal matching pursuit: one atom per iteration, full least-squares
/// refit on the grown support, up to `k` atoms or until the relative
/// residual drops to `tol`.
pub fn omp(op: &MeasurementOperator, y: &[f64], k: usize, tol: f64) -> Result<SparseSolution, ReconError> {
    validate(op, y, k)?;
    let n = op.transform_len();
    let y_norm = norm(y);
    if y_norm == 0.0 {
        return Ok(SparseSolution::zero(n, k, 0.0, true));
    }
    let threshold = tol * y_norm;

    let mut support: Vec<usize> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut r = y.to_vec();
    let mut r_norm = y_norm;
    let mut history = vec![y_norm];
    let mut ridge_used = false;

    while support.len() < k && r_norm > threshold {
        let proxy = op.adjoint(&r);
        let best = proxy
            .iter()
            .enumerate()
            .filter(|(j, _)| support.binary_search(j).is_err())
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map(|(j, _)| j);
        let Some(j) = best else { break };
        let pos = support.binary_search(&j).unwrap_err();
        support.insert(pos, j);

        let (fit, ridge) = restricted_lstsq(op, &support, y);
        ridge_used |= ridge;
        values = fit;
        r = residual(op, y, &support, &values);
        r_norm = norm(&r);
        history.push(r_norm);
    }
    let iterations = support.len();
    Ok(finish(n, k, support, values, r_norm, iterations, threshold, ridge_used, history))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    n: usize,
    k: usize,
    support: Vec<usize>,
    values: Vec<f64>,
    residual_norm: f64,
    iterations: usize,
    threshold: f64,
    ridge_used: bool,
    residual_history: Vec<f64>,
) -> SparseSolution {
    let mut coeffs = vec![0.0; n];
    for (&j, &v) in support.iter().zip(&values) {
        coeffs[j] = v;
    }
    SparseSolution {
        coeffs,
        support,
        k,
        residual_norm,
        iterations,
        converged: residual_norm <= threshold,
        ridge_used,
        residual_history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prmd::build_pattern;
    use crate::prng::StepPolicy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_sparse(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        let mut placed = 0;
        while placed < k {
            let j = rng.random_range(0..n);
            if x[j] == 0.0 {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                x[j] = sign * rng.random_range(1.0..2.0);
                placed += 1;
            }
        }
        x
    }

    fn support_of(x: &[f64]) -> Vec<usize> {
        x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect()
    }

    fn op_for(seed: u32, cr: u32, n: usize) -> MeasurementOperator {
        MeasurementOperator::from_pattern(&build_pattern(seed, StepPolicy::mean_exact(cr).unwrap(), n).unwrap())
    }

    #[test]
    fn top_indices_tie_break_and_bounds() {
        assert_eq!(top_indices(&[1.0, -3.0, 3.0, 0.5], 2), vec![1, 2]);
        assert_eq!(top_indices(&[1.0, 1.0, 1.0], 2), vec![0, 1]);
        assert_eq!(top_indices(&[1.0], 5), vec![0]);
        assert!(top_indices(&[1.0], 0).is_empty());
    }

    #[test]
    fn cosamp_recovers_constructed_instance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let op = op_for(1234, 4, 512);
        let x0 = random_sparse(&mut rng, 512, 6);
        let y = op.forward(&x0);
        let sol = cosamp(&op, &y, 6, 50, 1e-12).unwrap();
        assert_eq!(sol.support, support_of(&x0));
        for (a, b) in sol.coeffs.iter().zip(&x0) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!(sol.converged);
        assert!(sol.nonzero_count() <= 6);
        let recomputed = norm(&residual(&op, &y, &sol.support, &sol.support.iter().map(|&j| sol.coeffs[j]).collect::<Vec<_>>()));
        assert!((recomputed - sol.residual_norm).abs() <= 1e-9 * recomputed.max(1e-300) + 1e-300);
    }

    #[test]
    fn zero_sparsity_is_an_error() {
        let op = op_for(3, 4, 64);
        let y = vec![0.0; op.measurement_count()];
        assert_eq!(cosamp(&op, &y, 0, 10, 1e-9).unwrap_err(), ReconError::ZeroSparsity);
        assert_eq!(omp(&op, &y, 0, 1e-9).unwrap_err(), ReconError::ZeroSparsity);
    }

    #[test]
    fn zero_measurements_give_zero_solution() {
        let op = op_for(3, 4, 64);
        let y = vec![0.0; op.measurement_count()];
        let sol = cosamp(&op, &y, 3, 10, 1e-9).unwrap();
        assert!(sol.coeffs.iter().all(|c| *c == 0.0));
        assert_eq!(sol.residual_norm, 0.0);
        assert!(sol.converged);
    }

    #[test]
    fn noisy_residual_bounded_by_twice_noise() {
        // 40 dB SNR: noise norm = 1e-2 · signal norm.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..20 {
            let op = op_for(100 + trial, 4, 1024);
            let x0 = random_sparse(&mut rng, 1024, 8);
            let clean = op.forward(&x0);
            let noise: Vec<f64> = (0..clean.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let scale = 1e-2 * norm(&clean) / norm(&noise);
            let noise: Vec<f64> = noise.iter().map(|v| v * scale).collect();
            let y: Vec<f64> = clean.iter().zip(&noise).map(|(a, b)| a + b).collect();
            let sol = cosamp(&op, &y, 8, 100, 1e-9).unwrap();
            assert!(sol.residual_norm <= 2.0 * norm(&noise), "trial {trial}");
        }
    }

    #[test]
    fn cosamp_residual_history_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..20 {
            let op = op_for(500 + trial, 6, 800);
            // Not exactly sparse: a sparse core plus a small dense tail.
            let mut x0 = random_sparse(&mut rng, 800, 10);
            for v in x0.iter_mut() {
                *v += 0.01 * rng.sample::<f64, _>(StandardNormal);
            }
            let y = op.forward(&x0);
            let sol = cosamp(&op, &y, 10, 30, 1e-12).unwrap();
            assert!(sol.residual_history.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn omp_single_atom_one_iteration() {
        let op = op_for(21, 3, 200);
        let mut x0 = vec![0.0; 200];
        x0[37] = -1.5;
        let y = op.forward(&x0);
        let sol = omp(&op, &y, 5, 1e-10).unwrap();
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.support, vec![37]);
        assert!((sol.coeffs[37] + 1.5).abs() < 1e-10);
    }

    #[test]
    fn omp_orthonormal_columns_exact() {
        // Every sample retained: the operator is the orthonormal IDCT itself.
        let n = 128;
        let op = MeasurementOperator::new((0..n).collect(), n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x0 = random_sparse(&mut rng, n, 7);
        let y = op.forward(&x0);
        let sol = omp(&op, &y, 7, 1e-12).unwrap();
        assert_eq!(sol.support, support_of(&x0));
        for (a, b) in sol.coeffs.iter().zip(&x0) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn omp_infinite_tolerance_returns_immediately() {
        let op = op_for(2, 4, 100);
        let mut x0 = vec![0.0; 100];
        x0[3] = 1.0;
        let sol = omp(&op, &op.forward(&x0), 4, f64::INFINITY).unwrap();
        assert_eq!(sol.iterations, 0);
        assert!(sol.coeffs.iter().all(|c| *c == 0.0));
    }

    /// Enumerates every 2-subset of columns and returns the one with the
    /// smallest least-squares residual.
    fn brute_force_support(op: &MeasurementOperator, y: &[f64]) -> Vec<usize> {
        let n = op.transform_len();
        let cols: Vec<Vec<f64>> = (0..n).map(|k| op.column(k).collect()).collect();
        let mut best = (f64::INFINITY, vec![]);
        for i in 0..n {
            for j in i + 1..n {
                let a = DMatrix::from_fn(y.len(), 2, |r, c| if c == 0 { cols[i][r] } else { cols[j][r] });
                let sol = a.clone().svd(true, true).solve(&DVector::from_column_slice(y), 1e-14).unwrap();
                let res = (&a * sol - DVector::from_column_slice(y)).norm();
                if res < best.0 {
                    best = (res, vec![i, j]);
                }
            }
        }
        best.1
    }

    #[test]
    fn omp_and_cosamp_agree_with_brute_force_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        for trial in 0..5 {
            let op = op_for(900 + trial, 2, 64);
            let x0 = random_sparse(&mut rng, 64, 2);
            let y = op.forward(&x0);
            let brute = brute_force_support(&op, &y);
            assert_eq!(brute, support_of(&x0));
            assert_eq!(cosamp(&op, &y, 2, 50, 1e-12).unwrap().support, brute);
            assert_eq!(omp(&op, &y, 2, 1e-12).unwrap().support, brute);
        }
    }

    #[test]
    fn singular_subproblem_uses_ridge() {
        // Three measurements, five unknowns: the Gram matrix is rank 3.
        let op = MeasurementOperator::new(vec![0, 3, 7], 10).unwrap();
        let y = vec![1.0, -0.5, 0.25];
        let (sol, ridge) = restricted_lstsq(&op, &[0, 1, 2, 3, 4], &y);
        assert!(ridge);
        assert!(sol.iter().all(|v| v.is_finite()));
        let (_, ridge) = restricted_lstsq(&op, &[0, 1], &y);
        assert!(!ridge);
    }

    #[test]
    fn measurement_length_checked() {
        let op = op_for(2, 4, 100);
        assert!(matches!(
            cosamp(&op, &[1.0, 2.0], 1, 5, 0.0),
            Err(ReconError::MeasurementLength { .. })
        ));
    }
}
