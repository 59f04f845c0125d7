//! Bandwidth choice: fixed `H = T^alpha` or leave-one-unit-out cross-validation.
//!
//! Cross-validation predicts each held-out unit's outcome from its own
//! regressors and the mean-group path (intercept included) of all other units,
//! and scores each `alpha` by the total squared prediction error.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{bandwidth_from_alpha, KernelKind, KernelSpec};
use crate::local_wls::UnitFit;
use crate::mean_group::fit_all_units;
use crate::panel::Panel;
use crate::par;
use crate::stats::shifted_mean;

/// The default grid `{0.30, 0.35, ..., 0.85}`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..12).map(|i| (30 + 5 * i) as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub grid: Vec<f64>,
    pub bandwidths: Vec<f64>,
    /// Total held-out squared error per grid point; `+inf` where no held-out
    /// prediction was possible.
    pub scores: Vec<f64>,
    pub best_alpha: f64,
    pub best_h: f64,
    pub best_index: usize,
}

/// Mean of the other units' coefficients at time `t`, or `None` when no other
/// unit has a nonsingular fit there.
pub fn leave_one_out_mean(fits: &[UnitFit], held_out: usize, t: usize) -> Option<Vec<f64>> {
    let others: Vec<&[f64]> = fits
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != held_out)
        .filter_map(|(_, f)| f.at(t))
        .collect();
    let first = *others.first()?;
    Some(
        (0..first.len())
            .map(|k| shifted_mean(others.iter().map(|r| r[k]), first[k]).0)
            .collect(),
    )
}

fn held_out_sse(panel: &Panel, fits: &[UnitFit], i: usize) -> (f64, usize) {
    let p = panel.n_regressors();
    let y = panel.y_unit(i);
    let x = panel.x_unit(i);
    let mut sse = 0.0;
    let mut cells = 0;
    for t in 0..panel.n_times() {
        if let Some(b) = leave_one_out_mean(fits, i, t) {
            let pred = b[0] + (0..p).map(|k| x[t * p + k] * b[k + 1]).sum::<f64>();
            sse += (y[t] - pred).powi(2);
            cells += 1;
        }
    }
    (sse, cells)
}

/// Score of a single bandwidth: total held-out squared error.
pub fn cv_score(panel: &Panel, spec: &KernelSpec) -> f64 {
    let fits = fit_all_units(panel, spec);
    let parts = par::map_range(panel.n_units(), |i| held_out_sse(panel, &fits, i));
    let cells: usize = parts.iter().map(|(_, c)| c).sum();
    if cells == 0 {
        f64::INFINITY
    } else {
        parts.iter().map(|(s, _)| s).sum()
    }
}

/// Leave-one-unit-out cross-validation over an `alpha` grid.
///
/// Ties go to the smallest `alpha`.
pub fn loo_cv_bandwidth(panel: &Panel, grid: &[f64], kind: KernelKind) -> Result<CvResult> {
    if grid.is_empty() {
        return Err(Error::Parameter("alpha grid is empty".into()));
    }
    if panel.n_units() < 2 {
        return Err(Error::Parameter("cross-validation needs at least two units".into()));
    }
    let t_len = panel.n_times();
    let bandwidths = grid
        .iter()
        .map(|&a| bandwidth_from_alpha(t_len, a))
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<f64> = bandwidths
        .iter()
        .map(|&h| cv_score(panel, &KernelSpec::new(kind, h).expect("positive bandwidth")))
        .collect();
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if !s.is_finite() {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => s < scores[b] || (s == scores[b] && grid[i] < grid[b]),
        };
        if better {
            best = Some(i);
        }
    }
    let best_index = best.ok_or_else(|| Error::Selection("no grid value produced a held-out prediction".into()))?;
    Ok(CvResult {
        grid: grid.to_vec(),
        best_alpha: grid[best_index],
        best_h: bandwidths[best_index],
        bandwidths,
        best_index,
        scores,
    })
}
