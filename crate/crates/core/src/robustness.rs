//! Influence diagnostics and the before/after coefficient-shift test.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::local_wls::solve_weighted_ls;
use crate::mean_group::{fit_all_units, CoefficientPath};
use crate::panel::Panel;
use crate::par;
use crate::stats::{normal_critical, sample_sd, shifted_mean, two_sided_normal_p};

/// Mean-group path of one slope with every unit of `group` excluded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupExclusion {
    pub group: String,
    /// NaN where no unit outside the group has a nonsingular fit.
    pub beta: Vec<f64>,
}

/// Leave-one-group-out summary for one slope coefficient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LofoReport {
    pub var: String,
    pub time_labels: Vec<i64>,
    /// Max deviation ratio `max_f |b(-f) - b| / SE(b)` per time.
    pub mdr: Vec<f64>,
    /// Share of groups whose exclusion flips the sign of the estimate.
    pub sfr: Vec<f64>,
    /// Number of groups entering the ratios at each time.
    pub n_groups: Vec<usize>,
    pub exclusions: Vec<GroupExclusion>,
}

/// Leave-one-group-out diagnostics for regressor `var_index` (0-based among
/// the panel's regressors).
///
/// A group enters the ratios at time `t` when it has at least one unit with a
/// nonsingular fit and at least one such unit remains after excluding it.
/// Exact zeros count as sign flips.
pub fn lofo(panel: &Panel, path: &CoefficientPath, spec: &KernelSpec, var_index: usize) -> Result<LofoReport> {
    let p = panel.n_regressors();
    if var_index >= p {
        return Err(Error::Parameter(format!("regressor index {var_index} out of range (p = {p})")));
    }
    if path.n_times() != panel.n_times() || path.n_coef() != p + 1 {
        return Err(Error::Parameter("coefficient path does not match the panel".into()));
    }
    let groups = panel.groups();
    if groups.len() < 2 {
        return Err(Error::Parameter(
            "leave-one-group-out needs at least two groups; a single group covers the whole panel".into(),
        ));
    }
    let k = var_index + 1;
    let q = p + 1;
    let t_len = panel.n_times();
    let fits = fit_all_units(panel, spec);
    let group_of: Vec<usize> = panel
        .group_labels()
        .iter()
        .map(|g| groups.iter().position(|h| h == g).expect("group listed"))
        .collect();

    let mut exclusions: Vec<GroupExclusion> = groups
        .iter()
        .map(|g| GroupExclusion {
            group: g.to_string(),
            beta: vec![f64::NAN; t_len],
        })
        .collect();
    let mut mdr = vec![0.0; t_len];
    let mut sfr = vec![0.0; t_len];
    let mut n_groups = vec![0usize; t_len];
    for t in 0..t_len {
        let base = path.beta_mg[t * q + k];
        // Deviations from the full-sample estimate, summed per group.
        let mut sums = vec![0.0; groups.len()];
        let mut counts = vec![0usize; groups.len()];
        for (i, fit) in fits.iter().enumerate() {
            if let Some(b) = fit.at(t) {
                sums[group_of[i]] += b[k] - base;
                counts[group_of[i]] += 1;
            }
        }
        let total: f64 = sums.iter().sum();
        let n_total: usize = counts.iter().sum();
        let mut max_dev: f64 = 0.0;
        let mut flips = 0usize;
        let mut used = 0usize;
        for f in 0..groups.len() {
            let rest = n_total - counts[f];
            if counts[f] == 0 || rest == 0 {
                if rest > 0 {
                    exclusions[f].beta[t] = base;
                }
                continue;
            }
            let dev = (total - sums[f]) / rest as f64;
            let excluded = base + dev;
            exclusions[f].beta[t] = excluded;
            used += 1;
            max_dev = max_dev.max(dev.abs());
            let same_sign = (excluded > 0.0 && base > 0.0) || (excluded < 0.0 && base < 0.0);
            if !same_sign {
                flips += 1;
            }
        }
        n_groups[t] = used;
        let se = path.se[t * q + k];
        mdr[t] = if max_dev == 0.0 { 0.0 } else { max_dev / se };
        sfr[t] = if used == 0 { f64::NAN } else { flips as f64 / used as f64 };
    }
    Ok(LofoReport {
        var: panel.var_names()[var_index].clone(),
        time_labels: panel.time_labels().to_vec(),
        mdr,
        sfr,
        n_groups,
        exclusions,
    })
}

/// Mean-group coefficient-shift estimate for one regressor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftTestResult {
    pub var: String,
    pub break_time: i64,
    pub pre: f64,
    pub post: f64,
    pub delta: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub p_value: f64,
    pub level: f64,
    pub n_used: usize,
    pub n_excluded: usize,
    /// False when fewer than two units identify the shift, leaving no dispersion.
    pub se_defined: bool,
}

/// Per-unit interaction regressions `y = a_i + b_i x + d_i (x * post) + e`,
/// one regressor at a time, summarised by mean-group averages.
///
/// `post` is 1 from `break_time` onward. Units whose design is rank deficient
/// are excluded for that regressor.
pub fn shift_test(panel: &Panel, break_time: i64, level: f64) -> Result<Vec<ShiftTestResult>> {
    let z = normal_critical(level)?;
    let times = panel.time_labels();
    if !(break_time > times[0] && break_time <= times[times.len() - 1]) {
        return Err(Error::Parameter(format!(
            "break time {break_time} must lie strictly inside {}..={}",
            times[0],
            times[times.len() - 1]
        )));
    }
    let t_len = panel.n_times();
    let p = panel.n_regressors();
    let post: Vec<f64> = times.iter().map(|&t| if t >= break_time { 1.0 } else { 0.0 }).collect();
    let ones = vec![1.0; t_len];
    (0..p)
        .map(|k| {
            let var = panel.var_names()[k].clone();
            let fits: Vec<Option<(f64, f64)>> = par::map_range(panel.n_units(), |i| {
                let x = panel.x_unit(i);
                let design: Vec<f64> = (0..t_len)
                    .flat_map(|t| {
                        let v = x[t * p + k];
                        [1.0, v, v * post[t]]
                    })
                    .collect();
                solve_weighted_ls(&design, panel.y_unit(i), &ones, 3)
                    .ok()
                    .map(|b| (b[1], b[2]))
            });
            let used: Vec<(f64, f64)> = fits.into_iter().flatten().collect();
            let n = used.len();
            if n == 0 {
                return Err(Error::ShiftTest {
                    var,
                    reason: "no unit identifies the interaction model".into(),
                });
            }
            let pres: Vec<f64> = used.iter().map(|u| u.0).collect();
            let deltas: Vec<f64> = used.iter().map(|u| u.1).collect();
            let (pre, _) = shifted_mean(pres.iter().copied(), pres[0]);
            let (delta, _) = shifted_mean(deltas.iter().copied(), deltas[0]);
            let se = sample_sd(&deltas) / (n as f64).sqrt();
            let se_defined = n >= 2;
            let p_value = if se > 0.0 {
                two_sided_normal_p(delta / se)
            } else if se_defined {
                if delta == 0.0 { 1.0 } else { 0.0 }
            } else {
                f64::NAN
            };
            Ok(ShiftTestResult {
                var,
                break_time,
                pre,
                post: pre + delta,
                delta,
                se,
                ci_lo: delta - z * se,
                ci_hi: delta + z * se,
                p_value,
                level,
                n_used: n,
                n_excluded: panel.n_units() - n,
                se_defined,
            })
        })
        .collect()
}
