//! Mean-group aggregation of unit coefficient paths.
//!
//! At every time `t` the unit paths with a successful local fit are averaged.
//! The cross-sectional covariance `(1/n) sum (b_i - b_mg)(b_i - b_mg)'` of the
//! unit estimates gives normal bands `b_mg +- z sqrt(diag / n_eff)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::local_wls::{fit_unit_path, solve_weighted_ls, with_intercept, UnitFit};
use crate::panel::Panel;
use crate::par;
use crate::stats::{normal_critical, sample_sd, shifted_mean};

/// Name given to the intercept column in reports.
pub const INTERCEPT_NAME: &str = "const";

/// Mean-group coefficient paths with cross-sectional inference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientPath {
    pub time_labels: Vec<i64>,
    /// Coefficient names; index 0 is the intercept.
    pub coef_names: Vec<String>,
    /// `T x q` row-major.
    pub beta_mg: Vec<f64>,
    /// `T x q x q`; the cross-sectional covariance of unit estimates at each `t`.
    pub sigma_e: Vec<f64>,
    /// `T x q` standard errors `sqrt(diag(sigma_e) / n_eff)`.
    pub se: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub n_eff: Vec<usize>,
    /// False where fewer than two units contribute, so no dispersion exists.
    pub band_defined: Vec<bool>,
    pub n_units: usize,
    pub level: f64,
    pub z: f64,
}

impl CoefficientPath {
    pub fn n_times(&self) -> usize {
        self.time_labels.len()
    }

    pub fn n_coef(&self) -> usize {
        self.coef_names.len()
    }

    #[inline]
    pub fn beta(&self, t: usize, k: usize) -> f64 {
        self.beta_mg[t * self.n_coef() + k]
    }

    #[inline]
    pub fn se_at(&self, t: usize, k: usize) -> f64 {
        self.se[t * self.n_coef() + k]
    }

    #[inline]
    pub fn lo(&self, t: usize, k: usize) -> f64 {
        self.ci_lo[t * self.n_coef() + k]
    }

    #[inline]
    pub fn hi(&self, t: usize, k: usize) -> f64 {
        self.ci_hi[t * self.n_coef() + k]
    }

    /// Path of coefficient `k` over time.
    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.n_times()).map(|t| self.beta(t, k)).collect()
    }

    /// Whether the band at `(t, k)` excludes zero.
    pub fn significant(&self, t: usize, k: usize) -> bool {
        self.band_defined[t] && (self.lo(t, k) > 0.0 || self.hi(t, k) < 0.0)
    }

    /// Minimum eigenvalue of each `sigma_e[t]`.
    pub fn sigma_min_eigenvalues(&self) -> Vec<f64> {
        let q = self.n_coef();
        self.sigma_e
            .chunks_exact(q * q)
            .map(|s| {
                let m = nalgebra::DMatrix::from_row_slice(q, q, s);
                nalgebra::SymmetricEigen::new(m).eigenvalues.min()
            })
            .collect()
    }
}

/// Fits every unit's local path (in parallel when enabled).
pub fn fit_all_units(panel: &Panel, spec: &KernelSpec) -> Vec<UnitFit> {
    let p = panel.n_regressors();
    par::map_range(panel.n_units(), |i| {
        fit_unit_path(panel.y_unit(i), panel.x_unit(i), p, spec).expect("panel slices have consistent shapes")
    })
}

/// Aggregates unit fits (optionally a subset) into a [`CoefficientPath`].
pub fn aggregate_fits(
    fits: &[&UnitFit],
    time_labels: &[i64],
    coef_names: Vec<String>,
    level: f64,
) -> Result<CoefficientPath> {
    let z = normal_critical(level)?;
    let t_len = time_labels.len();
    let q = coef_names.len();
    let mut beta_mg = vec![0.0; t_len * q];
    let mut sigma_e = vec![0.0; t_len * q * q];
    let mut se = vec![0.0; t_len * q];
    let mut n_eff = vec![0usize; t_len];
    let mut band_defined = vec![false; t_len];
    for t in 0..t_len {
        let rows: Vec<&[f64]> = fits.iter().filter_map(|f| f.at(t)).collect();
        if rows.is_empty() {
            return Err(Error::Estimation {
                time: time_labels[t],
                reason: "no unit has a nonsingular local fit".into(),
            });
        }
        let n = rows.len();
        n_eff[t] = n;
        band_defined[t] = n >= 2;
        let mean: Vec<f64> = (0..q)
            .map(|k| shifted_mean(rows.iter().map(|r| r[k]), rows[0][k]).0)
            .collect();
        let sig = &mut sigma_e[t * q * q..(t + 1) * q * q];
        for r in &rows {
            for a in 0..q {
                let da = r[a] - mean[a];
                for b in 0..=a {
                    sig[a * q + b] += da * (r[b] - mean[b]);
                }
            }
        }
        for a in 0..q {
            for b in 0..=a {
                sig[a * q + b] /= n as f64;
                sig[b * q + a] = sig[a * q + b];
            }
            se[t * q + a] = (sig[a * q + a] / n as f64).sqrt();
        }
        beta_mg[t * q..(t + 1) * q].copy_from_slice(&mean);
    }
    let ci_lo = beta_mg.iter().zip(&se).map(|(b, s)| b - z * s).collect();
    let ci_hi = beta_mg.iter().zip(&se).map(|(b, s)| b + z * s).collect();
    Ok(CoefficientPath {
        time_labels: time_labels.to_vec(),
        coef_names,
        beta_mg,
        sigma_e,
        se,
        ci_lo,
        ci_hi,
        n_eff,
        band_defined,
        n_units: fits.len(),
        level,
        z,
    })
}

pub(crate) fn coef_names(panel: &Panel) -> Vec<String> {
    std::iter::once(INTERCEPT_NAME.to_string())
        .chain(panel.var_names().iter().cloned())
        .collect()
}

/// Time-varying mean-group estimate with normal bands at `level`.
pub fn tvmg_estimate(panel: &Panel, spec: &KernelSpec, level: f64) -> Result<CoefficientPath> {
    normal_critical(level)?;
    let fits = fit_all_units(panel, spec);
    let refs: Vec<&UnitFit> = fits.iter().collect();
    aggregate_fits(&refs, panel.time_labels(), coef_names(panel), level)
}

/// One row of the static mean-group benchmark.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaticRow {
    pub var: String,
    pub coef: f64,
    /// Cross-unit standard deviation of the unit slopes.
    pub sd: f64,
    /// `coef / (sd / sqrt(n))`; infinite or NaN when `sd` is zero.
    pub t_value: f64,
    /// True when the t-value is undefined (zero dispersion or a single unit).
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaticMgOls {
    pub rows: Vec<StaticRow>,
    pub n_used: usize,
    pub n_excluded: usize,
}

/// Static mean-group OLS: full-sample OLS with intercept per unit, slopes
/// averaged across units.
pub fn static_mg_ols(panel: &Panel) -> Result<StaticMgOls> {
    let t_len = panel.n_times();
    let p = panel.n_regressors();
    let fits: Vec<Option<Vec<f64>>> = par::map_range(panel.n_units(), |i| {
        let design = with_intercept(panel.x_unit(i), t_len, p);
        solve_weighted_ls(&design, panel.y_unit(i), &vec![1.0; t_len], p + 1).ok()
    });
    let used: Vec<&Vec<f64>> = fits.iter().flatten().collect();
    let n = used.len();
    if n == 0 {
        return Err(Error::Estimation {
            time: panel.time_labels()[0],
            reason: "every unit-level OLS is singular".into(),
        });
    }
    let rows = panel
        .var_names()
        .iter()
        .enumerate()
        .map(|(k, var)| {
            let slopes: Vec<f64> = used.iter().map(|b| b[k + 1]).collect();
            let (coef, _) = shifted_mean(slopes.iter().copied(), slopes[0]);
            let sd = sample_sd(&slopes);
            let t_value = coef / (sd / (n as f64).sqrt());
            StaticRow {
                var: var.clone(),
                coef,
                sd,
                t_value,
                degenerate: !(sd > 0.0),
            }
        })
        .collect();
    Ok(StaticMgOls {
        rows,
        n_used: n,
        n_excluded: panel.n_units() - n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Positive,
    Negative,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Positive => "positive",
            Direction::Negative => "negative",
        }
    }
}

/// Maximal run of consecutive times whose band excludes zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Interval {
    pub start_idx: usize,
    pub end_idx: usize,
    pub start: i64,
    pub end: i64,
    pub direction: Direction,
}

impl Interval {
    pub fn len(&self) -> usize {
        self.end_idx - self.start_idx + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VarSignificance {
    pub var: String,
    pub intervals: Vec<Interval>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignificanceReport {
    pub vars: Vec<VarSignificance>,
}

impl SignificanceReport {
    pub fn is_empty(&self) -> bool {
        self.vars.iter().all(|v| v.intervals.is_empty())
    }
}

/// Significant periods of every slope coefficient (the intercept is skipped).
pub fn significance_periods(path: &CoefficientPath) -> SignificanceReport {
    let vars = (1..path.n_coef())
        .map(|k| {
            let mut intervals: Vec<Interval> = Vec::new();
            for t in 0..path.n_times() {
                if !path.significant(t, k) {
                    continue;
                }
                let direction = if path.lo(t, k) > 0.0 { Direction::Positive } else { Direction::Negative };
                match intervals.last_mut() {
                    Some(last) if last.end_idx + 1 == t && last.direction == direction => {
                        last.end_idx = t;
                        last.end = path.time_labels[t];
                    }
                    _ => intervals.push(Interval {
                        start_idx: t,
                        end_idx: t,
                        start: path.time_labels[t],
                        end: path.time_labels[t],
                        direction,
                    }),
                }
            }
            VarSignificance {
                var: path.coef_names[k].clone(),
                intervals,
            }
        })
        .collect();
    SignificanceReport { vars }
}

/// Drops intervals spanning fewer than `min_len` consecutive periods.
pub fn duration_filter(report: &SignificanceReport, min_len: usize) -> Result<SignificanceReport> {
    if min_len == 0 {
        return Err(Error::Parameter("minimum duration must be at least 1".into()));
    }
    Ok(SignificanceReport {
        vars: report
            .vars
            .iter()
            .map(|v| VarSignificance {
                var: v.var.clone(),
                intervals: v.intervals.iter().filter(|iv| iv.len() >= min_len).cloned().collect(),
            })
            .collect(),
    })
}
