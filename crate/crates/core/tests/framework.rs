use tvmg_core::dgp::{simulate_firm, simulate_firm_panel, ArProcess, FirmFrameworkParams, FirmPanelSpec};
use tvmg_core::mean_group::tvmg_estimate;
use tvmg_core::{KernelKind, KernelSpec};

#[test]
fn liquidity_raises_and_financing_costs_lower_adjustment() {
    let base = FirmFrameworkParams::baseline(1);
    let grid: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
    let g = |f: &dyn Fn(&mut FirmFrameworkParams, f64), v: f64| {
        let mut p = base.clone();
        f(&mut p, v);
        p.green_investment(0)
    };
    for w in grid.windows(2) {
        assert!(g(&|p, v| p.c[0] = v, w[1]) > g(&|p, v| p.c[0] = v, w[0]));
        assert!(g(&|p, v| p.d[0] = v, w[1]) <= g(&|p, v| p.d[0] = v, w[0]));
        assert!(g(&|p, v| p.xi[0] = v, w[1]) <= g(&|p, v| p.xi[0] = v, w[0]));
    }
}

#[test]
fn more_adjustment_means_lower_future_intensity() {
    let mut low = FirmFrameworkParams::baseline(10);
    let mut high = low.clone();
    low.c = vec![0.1; 10];
    high.c = vec![0.5; 10];
    let (a, b) = (simulate_firm(&low, 10).unwrap(), simulate_firm(&high, 10).unwrap());
    for t in 1..10 {
        assert!(b.m[t] <= a.m[t]);
    }
    assert!(b.m[9] < a.m[9]);
}

#[test]
fn intensity_never_negative() {
    let mut p = FirmFrameworkParams::baseline(40);
    p.c = vec![5.0; 40];
    let path = simulate_firm(&p, 40).unwrap();
    assert!(path.m.iter().all(|m| *m >= 0.0));
    assert!(path.m.contains(&0.0));
}

#[test]
fn investment_coefficient_sign_follows_green_share() {
    let t_len = 30;
    let omega: Vec<f64> = (0..t_len).map(|t| if t < 12 { 0.05 } else if t < 18 { 0.5 } else { 0.95 }).collect();
    let spec = FirmPanelSpec {
        n_firms: 150,
        omega: omega.clone(),
        invint: ArProcess { mean: 0.1, phi: 0.3, sd: 0.05 },
        scale: 1.0,
        chi: 0.5,
        rho: 0.1,
        m0: 1.0,
        noise_sd: 0.02,
        seed: 3,
    };
    let panel = simulate_firm_panel(&spec).unwrap();
    let ks = KernelSpec::new(KernelKind::Gaussian, 2.0).unwrap();
    let path = tvmg_estimate(&panel, &ks, 0.9).unwrap();
    for t in (0..6).chain(24..30) {
        let expected = spec.implied_sign(omega[t]);
        assert_eq!(path.beta(t, 1).signum(), expected, "t={t} beta={}", path.beta(t, 1));
        assert!(path.significant(t, 1));
    }
}
