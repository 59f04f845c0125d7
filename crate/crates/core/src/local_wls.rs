//! Kernel-weighted local least squares.
//!
//! Each unit is fitted separately: at every target time `t` the intercept and
//! slopes minimise `sum_j K(|j - t| / H) (y_j - z_j' b)^2`, with `z_j = (1, x_j)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

/// Local systems whose equilibrated Gram matrix has a reciprocal condition
/// number below this are reported as singular.
pub const RCOND_TOL: f64 = 1e-12;

/// Outcome of a local fit at one target time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FitStatus {
    Ok,
    Singular,
}

/// Solution of one weighted normal-equation system.
#[derive(Debug, Clone)]
pub struct WeightedSolution {
    pub coef: Vec<f64>,
    /// `(Z'WZ)^{-1}`, row-major `q x q`.
    pub gram_inverse: Vec<f64>,
    pub rcond: f64,
}

/// Solves `G b = r` for a symmetric positive semidefinite Gram matrix `G`.
///
/// The system is equilibrated by the square roots of the diagonal before the
/// condition check, so the singularity test ignores column scaling.
fn solve_gram(gram: DMatrix<f64>, rhs: DVector<f64>, want_inverse: bool) -> Result<WeightedSolution> {
    let q = gram.nrows();
    let scale: Vec<f64> = (0..q).map(|k| gram[(k, k)].sqrt()).collect();
    if scale.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
        return Err(Error::Singular { rcond: 0.0 });
    }
    let eq = DMatrix::from_fn(q, q, |r, c| gram[(r, c)] / (scale[r] * scale[c]));
    let eig = SymmetricEigen::new(eq.clone());
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let rcond = if hi > 0.0 { (lo / hi).max(0.0) } else { 0.0 };
    if !(rcond >= RCOND_TOL) {
        return Err(Error::Singular { rcond });
    }
    let chol = eq.cholesky().ok_or(Error::Singular { rcond })?;
    let scaled_rhs = DVector::from_fn(q, |k, _| rhs[k] / scale[k]);
    let z = chol.solve(&scaled_rhs);
    let coef = (0..q).map(|k| z[k] / scale[k]).collect();
    let gram_inverse = if want_inverse {
        let inv = chol.inverse();
        (0..q * q).map(|i| inv[(i / q, i % q)] / (scale[i / q] * scale[i % q])).collect()
    } else {
        Vec::new()
    };
    Ok(WeightedSolution { coef, gram_inverse, rcond })
}

fn accumulate(design: &[f64], y: &[f64], q: usize, weight: impl Fn(usize) -> f64) -> (DMatrix<f64>, DVector<f64>) {
    let mut gram = DMatrix::<f64>::zeros(q, q);
    let mut rhs = DVector::<f64>::zeros(q);
    for (j, (row, &yj)) in design.chunks_exact(q).zip(y).enumerate() {
        let w = weight(j);
        if w == 0.0 {
            continue;
        }
        for r in 0..q {
            let wr = w * row[r];
            rhs[r] += wr * yj;
            for c in 0..=r {
                gram[(r, c)] += wr * row[c];
            }
        }
    }
    for r in 0..q {
        for c in 0..r {
            gram[(c, r)] = gram[(r, c)];
        }
    }
    (gram, rhs)
}

/// Weighted least squares `argmin sum_j w_j (y_j - x_j' b)^2`.
///
/// `x` is `n x q` row-major. Fails with [`Error::Singular`] when the weighted
/// Gram matrix is numerically rank deficient.
pub fn solve_weighted_ls(x: &[f64], y: &[f64], w: &[f64], q: usize) -> Result<Vec<f64>> {
    Ok(solve_weighted_ls_full(x, y, w, q, false)?.coef)
}

/// Like [`solve_weighted_ls`] but also returns the inverse Gram matrix and
/// reciprocal condition number.
pub fn solve_weighted_ls_full(x: &[f64], y: &[f64], w: &[f64], q: usize, want_inverse: bool) -> Result<WeightedSolution> {
    let n = y.len();
    if q == 0 || x.len() != n * q || w.len() != n {
        return Err(Error::Parameter(format!(
            "weighted LS shape mismatch: x has {} cells, y {n}, w {}, q {q}",
            x.len(),
            w.len()
        )));
    }
    if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain("weights must be finite and nonnegative".into()));
    }
    let (gram, rhs) = accumulate(x, y, q, |j| w[j]);
    solve_gram(gram, rhs, want_inverse)
}

/// Time path of one unit's local coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitFit {
    /// `T x (p + 1)` row-major; column 0 is the intercept path.
    pub beta: Vec<f64>,
    pub status: Vec<FitStatus>,
    pub n_coef: usize,
}

impl UnitFit {
    pub fn n_times(&self) -> usize {
        self.status.len()
    }

    /// Coefficients at time index `t`, or `None` where the local fit failed.
    pub fn at(&self, t: usize) -> Option<&[f64]> {
        match self.status[t] {
            FitStatus::Ok => Some(&self.beta[t * self.n_coef..(t + 1) * self.n_coef]),
            FitStatus::Singular => None,
        }
    }

    pub fn n_singular(&self) -> usize {
        self.status.iter().filter(|s| **s == FitStatus::Singular).count()
    }
}

/// Builds the `T x (p + 1)` design `[1, x_t]`.
pub fn with_intercept(x: &[f64], n_times: usize, p: usize) -> Vec<f64> {
    let mut z = Vec::with_capacity(n_times * (p + 1));
    for t in 0..n_times {
        z.push(1.0);
        z.extend_from_slice(&x[t * p..(t + 1) * p]);
    }
    z
}

/// Local fits over all target times for a design that already holds every
/// column (intercept included). `weights[d]` is the weight at distance `d`.
pub fn fit_design_path(y: &[f64], design: &[f64], q: usize, weights: &[f64]) -> UnitFit {
    let t_len = y.len();
    let mut beta = vec![f64::NAN; t_len * q];
    let mut status = vec![FitStatus::Singular; t_len];
    for t in 0..t_len {
        let (gram, rhs) = accumulate(design, y, q, |j| weights[j.abs_diff(t)]);
        if let Ok(sol) = solve_gram(gram, rhs, false) {
            beta[t * q..(t + 1) * q].copy_from_slice(&sol.coef);
            status[t] = FitStatus::Ok;
        }
    }
    UnitFit { beta, status, n_coef: q }
}

/// Kernel-weighted local OLS path for one unit, intercept added in-model.
///
/// `x` is the unit's `T x p` regressor block (row-major). A target time whose
/// local system is singular is flagged rather than aborting the path.
pub fn fit_unit_path(y: &[f64], x: &[f64], p: usize, spec: &KernelSpec) -> Result<UnitFit> {
    let t_len = y.len();
    if x.len() != t_len * p {
        return Err(Error::Parameter(format!(
            "regressor block has {} cells, expected {}",
            x.len(),
            t_len * p
        )));
    }
    let design = with_intercept(x, t_len, p);
    Ok(fit_design_path(y, &design, p + 1, &spec.distance_table(t_len)))
}

/// Local fit at a single target index with the inverse Gram matrix and the
/// kernel-weighted residual variance, used for sandwich standard errors.
#[derive(Debug, Clone)]
pub struct LocalDetail {
    pub coef: Vec<f64>,
    /// Homoskedastic local sandwich variance diagonal.
    pub var_diag: Vec<f64>,
}

/// Local coefficients at `t` with `sigma2_t (Z'WZ)^-1 (Z'W^2 Z) (Z'WZ)^-1`
/// variance, where `sigma2_t` is the kernel-weighted mean squared residual.
pub fn local_detail(y: &[f64], design: &[f64], q: usize, weights: &[f64], t: usize) -> Result<LocalDetail> {
    let w = |j: usize| weights[j.abs_diff(t)];
    let (gram, rhs) = accumulate(design, y, q, w);
    let sol = solve_gram(gram, rhs, true)?;
    let mut sw = 0.0;
    let mut swr2 = 0.0;
    let mut meat = vec![0.0; q * q];
    for (j, (row, &yj)) in design.chunks_exact(q).zip(y).enumerate() {
        let wj = w(j);
        if wj == 0.0 {
            continue;
        }
        let fitted: f64 = row.iter().zip(&sol.coef).map(|(a, b)| a * b).sum();
        let r = yj - fitted;
        sw += wj;
        swr2 += wj * r * r;
        for a in 0..q {
            for b in 0..q {
                meat[a * q + b] += wj * wj * row[a] * row[b];
            }
        }
    }
    let sigma2 = if sw > 0.0 { swr2 / sw } else { 0.0 };
    let inv = &sol.gram_inverse;
    let var_diag = (0..q)
        .map(|k| {
            let mut v = 0.0;
            for a in 0..q {
                for b in 0..q {
                    v += inv[k * q + a] * meat[a * q + b] * inv[b * q + k];
                }
            }
            (sigma2 * v).max(0.0)
        })
        .collect();
    Ok(LocalDetail { coef: sol.coef, var_diag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelKind;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Explicit `(X'WX)^{-1} X'Wy` with Gauss-Jordan inversion.
    fn brute_force(x: &[f64], y: &[f64], w: &[f64], q: usize) -> Vec<f64> {
        let n = y.len();
        let mut a = vec![vec![0.0; 2 * q]; q];
        let mut b = vec![0.0; q];
        for r in 0..q {
            for c in 0..q {
                a[r][c] = (0..n).map(|j| x[j * q + r] * w[j] * x[j * q + c]).sum();
            }
            a[r][q + r] = 1.0;
            b[r] = (0..n).map(|j| x[j * q + r] * w[j] * y[j]).sum();
        }
        for col in 0..q {
            let piv = (col..q).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, piv);
            let d = a[col][col];
            for v in a[col].iter_mut() {
                *v /= d;
            }
            for r in 0..q {
                if r != col {
                    let f = a[r][col];
                    for c in 0..2 * q {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
        (0..q).map(|r| (0..q).map(|c| a[r][q + c] * b[c]).sum()).collect()
    }

    #[test]
    fn intercept_only_is_mean() {
        let y = [1.0, 2.0, 6.0, 3.0];
        let b = solve_weighted_ls(&[1.0; 4], &y, &[1.0; 4], 1).unwrap();
        assert!((b[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn exact_line_recovered() {
        let xs = [0.0, 1.0, 2.5, 4.0, 7.0];
        let x: Vec<f64> = xs.iter().flat_map(|&v| [1.0, v]).collect();
        let y: Vec<f64> = xs.iter().map(|v| 2.0 + 3.0 * v).collect();
        let b = solve_weighted_ls(&x, &y, &[0.3, 1.0, 2.0, 0.1, 5.0], 2).unwrap();
        assert!((b[0] - 2.0).abs() < 1e-12 && (b[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn random_system_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x: Vec<f64> = (0..8).flat_map(|_| [1.0, rng.random_range(-2.0..2.0)]).collect();
        let y: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..8).map(|_| rng.random_range(0.1..2.0)).collect();
        let got = solve_weighted_ls(&x, &y, &w, 2).unwrap();
        let want = brute_force(&x, &y, &w, 2);
        for (g, e) in got.iter().zip(&want) {
            assert!((g - e).abs() <= 1e-10 * e.abs().max(1.0));
        }
    }

    #[test]
    fn singular_and_shape_errors() {
        let x = [1.0, 2.0, 1.0, 2.0, 1.0, 2.0];
        assert!(matches!(solve_weighted_ls(&x, &[1.0, 2.0, 3.0], &[1.0; 3], 2), Err(Error::Singular { .. })));
        // Only one row with positive weight for two coefficients.
        let x = [1.0, 0.0, 1.0, 1.0, 1.0, 2.0];
        assert!(solve_weighted_ls(&x, &[1.0, 2.0, 3.0], &[1.0, 0.0, 0.0], 2).is_err());
        assert!(solve_weighted_ls(&x, &[1.0, 2.0], &[1.0; 3], 2).is_err());
        assert!(matches!(solve_weighted_ls(&x, &[1.0; 3], &[1.0, -1.0, 1.0], 2), Err(Error::Domain(_))));
    }

    #[test]
    fn noiseless_constant_coefficients() {
        let x: Vec<f64> = (0..20).map(|t| ((t * 7) % 5) as f64 + 0.1 * t as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.5 * v + 0.5).collect();
        for kind in KernelKind::ALL {
            for h in [1.5, 4.0, 30.0] {
                let fit = fit_unit_path(&y, &x, 1, &KernelSpec::new(kind, h).unwrap()).unwrap();
                for t in 0..20 {
                    let b = fit.at(t).unwrap();
                    assert!((b[0] - 0.5).abs() < 1e-10 && (b[1] - 1.5).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn constant_regressor_is_singular_everywhere() {
        let fit = fit_unit_path(&[1.0, 2.0, 3.0, 4.0], &[2.0; 4], 1, &KernelSpec::new(KernelKind::Gaussian, 2.0).unwrap()).unwrap();
        assert_eq!(fit.n_singular(), 4);
        assert!(fit.at(0).is_none());
    }

    #[test]
    fn narrow_compact_kernel_flags_only_degenerate_times() {
        // Uniform kernel with H < 1 sees one observation per target: singular.
        let fit = fit_unit_path(&[1.0, 2.0, 3.0], &[0.0, 1.0, 2.0], 1, &KernelSpec::new(KernelKind::Uniform, 0.5).unwrap()).unwrap();
        assert_eq!(fit.n_singular(), 3);
    }

    #[test]
    fn wide_uniform_equals_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.3 - v + rng.random_range(-0.5..0.5)).collect();
        let ols = solve_weighted_ls(&with_intercept(&x, 15, 1), &y, &[1.0; 15], 2).unwrap();
        let fit = fit_unit_path(&y, &x, 1, &KernelSpec::new(KernelKind::Uniform, 15.0).unwrap()).unwrap();
        for t in 0..15 {
            let b = fit.at(t).unwrap();
            assert!((b[0] - ols[0]).abs() < 1e-12 && (b[1] - ols[1]).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn weight_scaling_invariance(seed in 0u64..1000, lambda in 1e-3f64..1e3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t_len = 12;
            let x: Vec<f64> = (0..t_len * 2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..t_len).map(|_| rng.random_range(-1.0..1.0)).collect();
            let spec = KernelSpec::new(KernelKind::Gaussian, 3.0).unwrap();
            let table = spec.distance_table(t_len);
            let scaled: Vec<f64> = table.iter().map(|w| w * lambda).collect();
            let design = with_intercept(&x, t_len, 2);
            let a = fit_design_path(&y, &design, 3, &table);
            let b = fit_design_path(&y, &design, 3, &scaled);
            for (u, v) in a.beta.iter().zip(&b.beta) {
                prop_assert!((u - v).abs() <= 1e-12 * u.abs().max(1.0));
            }
        }

        #[test]
        fn path_matches_brute_force(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t_len = 10;
            let x: Vec<f64> = (0..t_len).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..t_len).map(|_| rng.random_range(-1.0..1.0)).collect();
            let spec = KernelSpec::new(KernelKind::Epanechnikov, 4.0).unwrap();
            let fit = fit_unit_path(&y, &x, 1, &spec).unwrap();
            let design = with_intercept(&x, t_len, 1);
            for t in 0..t_len {
                let w = crate::kernel::weights_for_time(t_len, t + 1, &spec).unwrap();
                let want = brute_force(&design, &y, &w, 2);
                if let Some(b) = fit.at(t) {
                    for (g, e) in b.iter().zip(&want) {
                        prop_assert!((g - e).abs() <= 1e-10 * e.abs().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn local_detail_zero_residuals() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 1.0 + 2.0 * v).collect();
        let design = with_intercept(&x, 5, 1);
        let d = local_detail(&y, &design, 2, &KernelSpec::new(KernelKind::Gaussian, 2.0).unwrap().distance_table(5), 2).unwrap();
        assert!((d.coef[1] - 2.0).abs() < 1e-12);
        assert!(d.var_diag.iter().all(|v| *v < 1e-20));
    }
}
