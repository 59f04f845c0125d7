//! Time-varying regression on a single aggregate series.
//!
//! Without a cross-section there is no mean-group dispersion to lean on, so
//! uncertainty comes either from a moving-block bootstrap (percentile bands) or
//! from a local homoskedastic sandwich (normal bands, as a comparison).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::local_wls::{fit_design_path, local_detail, with_intercept, UnitFit};
use crate::par;
use crate::stats::{normal_critical, quantile_sorted};

/// Name of the generator used for bootstrap resampling, recorded in metadata.
pub const PRNG_NAME: &str = "chacha20 (rand_chacha), stream = replication index";

/// Local-WLS path of a single series; `x` is `T x q` row-major and an
/// intercept column is prepended, so the result has `q + 1` coefficients.
pub fn tv_ols_series(y: &[f64], x: &[f64], q: usize, spec: &KernelSpec) -> Result<UnitFit> {
    let t_len = y.len();
    if x.len() != t_len * q {
        return Err(Error::Parameter(format!(
            "regressor matrix has {} cells, expected {}",
            x.len(),
            t_len * q
        )));
    }
    if t_len < q + 2 {
        return Err(Error::Parameter(format!("series of length {t_len} is too short for {q} regressors")));
    }
    let design = with_intercept(x, t_len, q);
    Ok(fit_design_path(y, &design, q + 1, &spec.distance_table(t_len)))
}

/// How the bootstrap block length is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BlockLength {
    /// `floor(c * T^{1/3})`.
    Scale(f64),
    Fixed(usize),
}

impl BlockLength {
    pub fn resolve(&self, t_len: usize) -> Result<usize> {
        let len = match *self {
            BlockLength::Scale(c) => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::Parameter(format!("block scale must be positive, got {c}")));
                }
                (c * (t_len as f64).cbrt()).floor() as usize
            }
            BlockLength::Fixed(l) => l,
        };
        if len < 1 || len > t_len {
            return Err(Error::Parameter(format!("block length {len} outside 1..={t_len}")));
        }
        Ok(len)
    }
}

/// Pointwise percentile bands from a moving-block bootstrap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapBands {
    /// `T x (q + 1)` original point path.
    pub beta_hat: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Replications whose local fit failed at each cell (excluded from quantiles).
    pub failed: Vec<usize>,
    pub replications: usize,
    pub block_len: usize,
    pub n_blocks: usize,
    pub level: f64,
    pub seed: u64,
    pub n_coef: usize,
}

/// Start indices of one resampled series: `floor(T / l)` blocks, topped up
/// with one more block when they fall short of `T`. Truncate to `T`.
pub fn resample_block_starts<R: Rng>(rng: &mut R, t_len: usize, block_len: usize) -> Vec<usize> {
    let n_starts = t_len - block_len + 1;
    let mut m = t_len / block_len;
    if m * block_len < t_len {
        m += 1;
    }
    (0..m).map(|_| rng.random_range(0..n_starts)).collect()
}

fn resampled_indices(starts: &[usize], block_len: usize, t_len: usize) -> Vec<usize> {
    starts
        .iter()
        .flat_map(|&s| s..s + block_len)
        .take(t_len)
        .collect()
}

/// Moving-block bootstrap bands for [`tv_ols_series`].
///
/// Replication `b` draws from a ChaCha20 stream `b` under `seed`, so results
/// do not depend on thread scheduling.
#[allow(clippy::too_many_arguments)]
pub fn mbb_bands(
    y: &[f64],
    x: &[f64],
    q: usize,
    spec: &KernelSpec,
    block: BlockLength,
    replications: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapBands> {
    if replications < 100 {
        return Err(Error::Parameter(format!("at least 100 replications required, got {replications}")));
    }
    normal_critical(level)?;
    let t_len = y.len();
    let block_len = block.resolve(t_len)?;
    let point = tv_ols_series(y, x, q, spec)?;
    let qc = q + 1;
    let design = with_intercept(x, t_len, q);
    let table = spec.distance_table(t_len);

    let paths: Vec<UnitFit> = par::map_range(replications, |b| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let starts = resample_block_starts(&mut rng, t_len, block_len);
        let idx = resampled_indices(&starts, block_len, t_len);
        let ys: Vec<f64> = idx.iter().map(|&j| y[j]).collect();
        let zs: Vec<f64> = idx.iter().flat_map(|&j| design[j * qc..(j + 1) * qc].iter().copied()).collect();
        fit_design_path(&ys, &zs, qc, &table)
    });

    let alpha = 1.0 - level;
    let mut lo = vec![f64::NAN; t_len * qc];
    let mut hi = vec![f64::NAN; t_len * qc];
    let mut failed = vec![0usize; t_len * qc];
    let mut draws = Vec::with_capacity(replications);
    for t in 0..t_len {
        for k in 0..qc {
            draws.clear();
            draws.extend(paths.iter().filter_map(|p| p.at(t).map(|b| b[k])));
            failed[t * qc + k] = replications - draws.len();
            if draws.is_empty() {
                continue;
            }
            draws.sort_by(f64::total_cmp);
            lo[t * qc + k] = quantile_sorted(&draws, alpha / 2.0);
            hi[t * qc + k] = quantile_sorted(&draws, 1.0 - alpha / 2.0);
        }
    }
    Ok(BootstrapBands {
        beta_hat: point.beta,
        lo,
        hi,
        failed,
        replications,
        block_len,
        n_blocks: t_len / block_len,
        level,
        seed,
        n_coef: qc,
    })
}

/// Normal comparison bands `b_t +- z SE(b_t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalBands {
    pub beta_hat: Vec<f64>,
    pub se: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub level: f64,
    pub z: f64,
    pub n_coef: usize,
}

/// Normal bands with a local homoskedastic sandwich standard error: the
/// kernel-weighted mean squared residual at `t` times
/// `(Z'WZ)^-1 Z'W^2Z (Z'WZ)^-1`. Singular cells are NaN.
pub fn normal_bands(y: &[f64], x: &[f64], q: usize, spec: &KernelSpec, level: f64) -> Result<NormalBands> {
    let z = normal_critical(level)?;
    let t_len = y.len();
    tv_ols_series(y, x, q, spec)?;
    let qc = q + 1;
    let design = with_intercept(x, t_len, q);
    let table = spec.distance_table(t_len);
    let mut beta_hat = vec![f64::NAN; t_len * qc];
    let mut se = vec![f64::NAN; t_len * qc];
    for t in 0..t_len {
        if let Ok(d) = local_detail(y, &design, qc, &table, t) {
            for k in 0..qc {
                beta_hat[t * qc + k] = d.coef[k];
                se[t * qc + k] = d.var_diag[k].sqrt();
            }
        }
    }
    let lo = beta_hat.iter().zip(&se).map(|(b, s)| b - z * s).collect();
    let hi = beta_hat.iter().zip(&se).map(|(b, s)| b + z * s).collect();
    Ok(NormalBands {
        beta_hat,
        se,
        lo,
        hi,
        level,
        z,
        n_coef: qc,
    })
}
