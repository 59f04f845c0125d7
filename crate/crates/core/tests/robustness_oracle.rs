mod common;

use common::*;
use tvmg_core::dgp::{simulate_panel, BetaPath};
use tvmg_core::mean_group::tvmg_estimate;
use tvmg_core::robustness::{lofo, shift_test};
use tvmg_core::{KernelKind, KernelSpec};

#[test]
fn lofo_matches_rebuilt_reduced_panels() {
    let mut spec = one_regressor(60, 20, BetaPath::Linear { start: -0.2, end: 0.3 }, 0.5, 0.4, 61);
    spec.n_groups = 6;
    spec.e_smooth = 0.5;
    let panel = simulate_panel(&spec).unwrap().panel;
    let ks = KernelSpec::new(KernelKind::Gaussian, 4.0).unwrap();
    let path = tvmg_estimate(&panel, &ks, 0.9).unwrap();
    let rep = lofo(&panel, &path, &ks, 0).unwrap();

    let groups: Vec<String> = {
        let mut g = panel.group_labels().to_vec();
        g.sort();
        g.dedup();
        g
    };
    assert_eq!(groups.len(), 6);
    let reduced: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let keep: Vec<usize> = (0..panel.n_units()).filter(|&i| &panel.group_labels()[i] != g).collect();
            let sub = panel.subset_units(&keep).unwrap();
            tvmg_estimate(&sub, &ks, 0.9).unwrap().column(1)
        })
        .collect();
    for t in 0..panel.n_times() {
        let full = path.beta(t, 1);
        let se = path.se_at(t, 1);
        let mdr = reduced.iter().map(|b| (b[t] - full).abs()).fold(0.0, f64::max) / se;
        let flips = reduced.iter().filter(|b| b[t] * full <= 0.0).count() as f64 / 6.0;
        assert!((rep.mdr[t] - mdr).abs() <= 1e-10 * mdr.max(1.0), "t={t}: {} vs {mdr}", rep.mdr[t]);
        assert!((rep.sfr[t] - flips).abs() <= 1e-12);
        for (ex, b) in rep.exclusions.iter().zip(&reduced) {
            assert!((ex.beta[t] - b[t]).abs() <= 1e-12);
        }
        assert!(rep.sfr[t] >= 0.0 && rep.sfr[t] <= 1.0 && rep.mdr[t] >= 0.0);
    }
}

#[test]
fn shift_test_invariants() {
    let mut spec = one_regressor(40, 31, BetaPath::Constant { value: -0.011 }, 0.01, 0.05, 77);
    spec.start_time = 1993;
    let panel = simulate_panel(&spec).unwrap().panel;
    let res = &shift_test(&panel, 2009, 0.9).unwrap()[0];
    assert_eq!(res.post, res.pre + res.delta);
    assert!(res.ci_lo <= res.delta && res.delta <= res.ci_hi);
    assert_eq!(res.n_used, 40);
    assert!(res.se_defined);

    let single = panel.subset_units(&[0]).unwrap();
    let one = &shift_test(&single, 2009, 0.9).unwrap()[0];
    assert!(!one.se_defined && one.se.is_nan());
}
