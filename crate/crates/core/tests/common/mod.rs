//! Independent reference implementations and simulation helpers shared by the
//! integration and acceptance tests.
#![allow(dead_code)]

use std::io::Write;

use tvmg_core::dgp::{ArProcess, BetaPath, PanelDgpSpec};
use tvmg_core::{KernelKind, Panel};

/// Gauss-Jordan elimination with partial pivoting; `None` when a pivot
/// vanishes relative to the matrix scale.
pub fn gauss_jordan(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-11 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Weighted normal equations `(Z'WZ) b = Z'Wy` for a row-major design.
pub fn normal_equations(z: &[f64], y: &[f64], w: &[f64], q: usize) -> Option<Vec<f64>> {
    let n = y.len();
    let mut a = vec![vec![0.0; q]; q];
    let mut rhs = vec![0.0; q];
    for i in 0..n {
        for r in 0..q {
            rhs[r] += w[i] * z[i * q + r] * y[i];
            for c in 0..q {
                a[r][c] += w[i] * z[i * q + r] * z[i * q + c];
            }
        }
    }
    gauss_jordan(a, rhs)
}

pub fn kernel(kind: KernelKind, u: f64) -> f64 {
    match kind {
        KernelKind::Gaussian => (-u * u / 2.0).exp(),
        KernelKind::Epanechnikov => (1.0 - u * u).max(0.0),
        KernelKind::Uniform => {
            if u <= 1.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Local intercept-plus-slopes fit of one series at 0-based time `t`.
pub fn local_fit(y: &[f64], x: &[f64], p: usize, kind: KernelKind, h: f64, t: usize) -> Option<Vec<f64>> {
    let n = y.len();
    let w: Vec<f64> = (0..n).map(|j| kernel(kind, (j as f64 - t as f64).abs() / h)).collect();
    let z: Vec<f64> = (0..n)
        .flat_map(|j| std::iter::once(1.0).chain(x[j * p..(j + 1) * p].iter().copied()))
        .collect();
    normal_equations(&z, y, &w, p + 1)
}

/// Mean-group path (T rows of p+1 coefficients) from scratch.
pub fn mean_group_path(panel: &Panel, kind: KernelKind, h: f64) -> Vec<Vec<f64>> {
    let p = panel.n_regressors();
    (0..panel.n_times())
        .map(|t| {
            let fits: Vec<Vec<f64>> = (0..panel.n_units())
                .filter_map(|i| local_fit(panel.y_unit(i), panel.x_unit(i), p, kind, h, t))
                .collect();
            (0..=p).map(|k| fits.iter().map(|f| f[k]).sum::<f64>() / fits.len() as f64).collect()
        })
        .collect()
}

/// 0-based times at least `h` periods from both ends.
pub fn interior(t_len: usize, h: f64) -> Vec<usize> {
    (0..t_len).filter(|&t| t as f64 >= h && (t_len - 1 - t) as f64 >= h).collect()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Random-coefficient design with one regressor.
pub fn one_regressor(n: usize, t: usize, beta0: BetaPath, e_sd: f64, u_sd: f64, seed: u64) -> PanelDgpSpec {
    PanelDgpSpec {
        n_units: n,
        n_times: t,
        beta0: vec![beta0],
        e_sd,
        e_smooth: 0.0,
        x_process: vec![ArProcess { mean: 0.0, phi: 0.5, sd: 1.0 }],
        u_process: ArProcess::white(u_sd),
        intercept_mean: 0.5,
        intercept_sd: 0.2,
        n_groups: 1,
        start_time: 1,
        seed,
    }
}

/// Writes a result line straight to the process stdout so it shows up in the
/// test log without `--nocapture`.
pub fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let line = format!("[acceptance {id:>2}] {} {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}
