//! Synthetic data: random-coefficient panels with smooth common paths, and a
//! small dynamic firm model linking financing conditions to emissions.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::Panel;
use crate::par;

/// Common coefficient path as a function of rescaled time `r = t/T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaPath {
    Constant {
        value: f64,
    },
    Linear {
        start: f64,
        end: f64,
    },
    Sine {
        #[serde(default)]
        level: f64,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl BetaPath {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            BetaPath::Constant { value } => value,
            BetaPath::Linear { start, end } => start + (end - start) * r,
            BetaPath::Sine {
                level,
                amplitude,
                frequency,
                phase,
            } => level + amplitude * (TAU * frequency * r + phase).sin(),
        }
    }

    fn check(&self) -> Result<()> {
        let finite = match *self {
            BetaPath::Constant { value } => value.is_finite(),
            BetaPath::Linear { start, end } => start.is_finite() && end.is_finite(),
            BetaPath::Sine {
                level,
                amplitude,
                frequency,
                phase,
            } => [level, amplitude, frequency, phase].iter().all(|v| v.is_finite()),
        };
        if finite {
            Ok(())
        } else {
            Err(Error::Parameter("coefficient path has non-finite parameters".into()))
        }
    }
}

/// Stationary Gaussian AR(1): `z_t = mean + phi (z_{t-1} - mean) + sd * eps_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArProcess {
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub phi: f64,
    pub sd: f64,
}

impl ArProcess {
    pub fn white(sd: f64) -> Self {
        Self { mean: 0.0, phi: 0.0, sd }
    }

    fn check(&self, what: &str) -> Result<()> {
        if !(self.phi > -1.0 && self.phi < 1.0) {
            return Err(Error::Parameter(format!("{what}: AR coefficient must lie in (-1, 1), got {}", self.phi)));
        }
        if !(self.sd >= 0.0) || !self.sd.is_finite() || !self.mean.is_finite() {
            return Err(Error::Parameter(format!("{what}: sd must be finite and nonnegative")));
        }
        Ok(())
    }

    /// Draws `n` values, starting from the stationary distribution.
    pub fn sample<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        let stationary_sd = self.sd / (1.0 - self.phi * self.phi).sqrt();
        let mut dev = stationary_sd * rng.sample::<f64, _>(StandardNormal);
        for _ in 0..n {
            out.push(self.mean + dev);
            dev = self.phi * dev + self.sd * rng.sample::<f64, _>(StandardNormal);
        }
        out
    }
}

fn default_groups() -> usize {
    1
}

fn default_start() -> i64 {
    1
}

/// Random-coefficient panel design.
///
/// Unit coefficients are `beta_{it,k} = beta0_k(t/T) + e_{ik} * (1 + e_smooth *
/// sin(2 pi t/T + phi_{ik}))` with `e_{ik} ~ N(0, e_sd^2)` and a uniform random
/// phase. The outcome is `y_it = a_i + x_it' beta_it + u_it` where the intercept
/// `a_i ~ N(intercept_mean, intercept_sd^2)` and `u` follows `u_process`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelDgpSpec {
    pub n_units: usize,
    pub n_times: usize,
    /// One path per regressor.
    pub beta0: Vec<BetaPath>,
    #[serde(default)]
    pub e_sd: f64,
    #[serde(default)]
    pub e_smooth: f64,
    /// One process per regressor, or a single process shared by all.
    pub x_process: Vec<ArProcess>,
    pub u_process: ArProcess,
    #[serde(default)]
    pub intercept_mean: f64,
    #[serde(default)]
    pub intercept_sd: f64,
    #[serde(default = "default_groups")]
    pub n_groups: usize,
    #[serde(default = "default_start")]
    pub start_time: i64,
    pub seed: u64,
}

impl PanelDgpSpec {
    pub fn n_regressors(&self) -> usize {
        self.beta0.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_units == 0 {
            return Err(Error::Parameter("n_units must be positive".into()));
        }
        if self.n_times < 2 {
            return Err(Error::Parameter("n_times must be at least 2".into()));
        }
        if self.beta0.is_empty() {
            return Err(Error::Parameter("at least one regressor path is required".into()));
        }
        if self.x_process.len() != 1 && self.x_process.len() != self.beta0.len() {
            return Err(Error::Parameter(format!(
                "x_process must hold 1 or {} entries, got {}",
                self.beta0.len(),
                self.x_process.len()
            )));
        }
        if self.n_groups == 0 || self.n_groups > self.n_units {
            return Err(Error::Parameter(format!("n_groups must lie in 1..={}", self.n_units)));
        }
        for (k, b) in self.beta0.iter().enumerate() {
            b.check().map_err(|_| Error::Parameter(format!("beta0[{k}] has non-finite parameters")))?;
        }
        for (k, xp) in self.x_process.iter().enumerate() {
            xp.check(&format!("x_process[{k}]"))?;
        }
        self.u_process.check("u_process")?;
        for (name, v) in [("e_sd", self.e_sd), ("e_smooth", self.e_smooth), ("intercept_sd", self.intercept_sd)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        if !self.intercept_mean.is_finite() {
            return Err(Error::Parameter("intercept_mean must be finite".into()));
        }
        Ok(())
    }

    fn x_process_for(&self, k: usize) -> &ArProcess {
        if self.x_process.len() == 1 {
            &self.x_process[0]
        } else {
            &self.x_process[k]
        }
    }

    /// The common path `beta0` as a `T x p` row-major table.
    pub fn beta0_table(&self) -> Vec<f64> {
        let t_len = self.n_times as f64;
        (1..=self.n_times)
            .flat_map(|t| self.beta0.iter().map(move |b| b.eval(t as f64 / t_len)))
            .collect()
    }
}

/// A simulated panel together with the coefficients that generated it.
#[derive(Debug, Clone)]
pub struct SimulatedPanel {
    pub panel: Panel,
    /// Common path, `T x p` row-major.
    pub beta0: Vec<f64>,
    /// Unit paths, `N x T x p` row-major.
    pub unit_beta: Vec<f64>,
    pub intercepts: Vec<f64>,
}

struct UnitDraw {
    y: Vec<f64>,
    x: Vec<f64>,
    beta: Vec<f64>,
    intercept: f64,
}

fn draw_unit(spec: &PanelDgpSpec, beta0: &[f64], i: usize) -> UnitDraw {
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    rng.set_stream(i as u64);
    let t_len = spec.n_times;
    let p = spec.n_regressors();

    let intercept = spec.intercept_mean + spec.intercept_sd * rng.sample::<f64, _>(StandardNormal);
    let dev: Vec<(f64, f64)> = (0..p)
        .map(|_| {
            let e = spec.e_sd * rng.sample::<f64, _>(StandardNormal);
            let phase = TAU * rng.random::<f64>();
            (e, phase)
        })
        .collect();
    let cols: Vec<Vec<f64>> = (0..p).map(|k| spec.x_process_for(k).sample(&mut rng, t_len)).collect();
    let u = spec.u_process.sample(&mut rng, t_len);

    let mut x = vec![0.0; t_len * p];
    let mut beta = vec![0.0; t_len * p];
    let mut y = vec![0.0; t_len];
    for t in 0..t_len {
        let r = (t + 1) as f64 / t_len as f64;
        let mut fit = intercept;
        for k in 0..p {
            let (e, phase) = dev[k];
            let b = beta0[t * p + k] + e * (1.0 + spec.e_smooth * (TAU * r + phase).sin());
            x[t * p + k] = cols[k][t];
            beta[t * p + k] = b;
            fit += cols[k][t] * b;
        }
        y[t] = fit + u[t];
    }
    UnitDraw { y, x, beta, intercept }
}

/// Simulates a panel. Each unit draws from its own seeded stream, so the
/// result does not depend on thread count.
pub fn simulate_panel(spec: &PanelDgpSpec) -> Result<SimulatedPanel> {
    spec.validate()?;
    let beta0 = spec.beta0_table();
    let draws = par::map_range(spec.n_units, |i| draw_unit(spec, &beta0, i));
    let n = spec.n_units;
    let width = n.to_string().len();
    let mut y = Vec::with_capacity(n * spec.n_times);
    let mut x = Vec::with_capacity(n * spec.n_times * spec.n_regressors());
    let mut unit_beta = Vec::with_capacity(x.capacity());
    let mut intercepts = Vec::with_capacity(n);
    for d in draws {
        y.extend(d.y);
        x.extend(d.x);
        unit_beta.extend(d.beta);
        intercepts.push(d.intercept);
    }
    let panel = Panel::new(
        (0..n).map(|i| format!("u{i:0width$}")).collect(),
        (0..n).map(|i| format!("g{}", i % spec.n_groups)).collect(),
        (0..spec.n_times as i64).map(|t| spec.start_time + t).collect(),
        y,
        x,
        (1..=spec.n_regressors()).map(|k| format!("x{k}")).collect(),
    )?;
    Ok(SimulatedPanel {
        panel,
        beta0,
        unit_beta,
        intercepts,
    })
}

/// Parameters of the single-firm emissions-intensity model.
///
/// `c`, `d`, `xi`, `omega` and `q` are exogenous paths of length `T`. The
/// continuation value's slope in intensity, `vm`, is a fixed negative number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirmFrameworkParams {
    pub rho: f64,
    pub chi: f64,
    pub kappa: f64,
    pub psi0: f64,
    pub psi_d: f64,
    pub psi_xi: f64,
    pub mu: f64,
    pub delta: f64,
    pub vm: f64,
    pub m0: f64,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub xi: Vec<f64>,
    pub omega: Vec<f64>,
    pub q: Vec<f64>,
    /// Intensity shocks; zero when absent.
    #[serde(default)]
    pub eps: Option<Vec<f64>>,
}

impl FirmFrameworkParams {
    /// Constant paths of length `n_times` with representative parameters.
    pub fn baseline(n_times: usize) -> Self {
        Self {
            rho: 0.05,
            chi: 0.2,
            kappa: 1.0,
            psi0: 0.1,
            psi_d: 0.5,
            psi_xi: 0.5,
            mu: 0.3,
            delta: 0.95,
            vm: -1.0,
            m0: 1.0,
            c: vec![0.2; n_times],
            d: vec![0.3; n_times],
            xi: vec![0.1; n_times],
            omega: vec![0.5; n_times],
            q: vec![1.0; n_times],
            eps: None,
        }
    }

    pub fn validate(&self, n_times: usize) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        let checks = [
            ("rho", open_unit(self.rho)),
            ("chi", self.chi > 0.0),
            ("kappa", self.kappa > 0.0),
            ("psi_d", self.psi_d > 0.0),
            ("psi_xi", self.psi_xi > 0.0),
            ("mu", self.mu > 0.0),
            ("delta", open_unit(self.delta)),
            ("vm", self.vm < 0.0),
            ("m0", self.m0 >= 0.0),
            ("psi0", self.psi0.is_finite()),
        ];
        for (name, ok) in checks {
            if !ok {
                return Err(Error::Parameter(format!("firm parameter `{name}` out of range")));
            }
        }
        let mut paths = vec![("c", &self.c), ("d", &self.d), ("xi", &self.xi), ("omega", &self.omega), ("q", &self.q)];
        if let Some(e) = &self.eps {
            paths.push(("eps", e));
        }
        for (name, path) in paths {
            if path.len() != n_times {
                return Err(Error::Parameter(format!("path `{name}` has length {}, expected {n_times}", path.len())));
            }
            if path.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parameter(format!("path `{name}` has non-finite values")));
            }
        }
        if self.omega.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::Parameter("omega must lie in [0, 1]".into()));
        }
        if self.q.iter().any(|v| *v < 0.0) {
            return Err(Error::Parameter("activity q must be nonnegative".into()));
        }
        Ok(())
    }

    /// Financing wedge at `t`.
    pub fn psi(&self, t: usize) -> f64 {
        self.psi0 + self.psi_d * self.d[t] + self.psi_xi * self.xi[t]
    }

    /// Adjustment investment at `t` from the first-order condition, floored at 0.
    pub fn green_investment(&self, t: usize) -> f64 {
        let denom = self.kappa + self.psi(t);
        ((self.mu * self.c[t] - self.delta * self.chi * self.vm) / denom).max(0.0)
    }
}

/// Per-period output of [`simulate_firm`]. Growth rates at `t = 0` are NaN.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirmPath {
    pub m: Vec<f64>,
    pub q: Vec<f64>,
    pub g: Vec<f64>,
    /// Total investment implied by `G / omega`; NaN where `omega = 0`.
    pub investment: Vec<f64>,
    pub emissions: Vec<f64>,
    pub dlog_m: Vec<f64>,
    pub dlog_q: Vec<f64>,
    pub dlog_emissions: Vec<f64>,
}

fn dlog(v: &[f64]) -> Vec<f64> {
    std::iter::once(f64::NAN)
        .chain(v.windows(2).map(|w| {
            if w[0] > 0.0 && w[1] > 0.0 {
                w[1].ln() - w[0].ln()
            } else {
                f64::NAN
            }
        }))
        .collect()
}

/// Runs the firm model for `n_times` periods.
///
/// Intensity follows `m_{t+1} = max(0, (1 - rho) m_t - chi G_t + eps_t)` with
/// `m_0 = params.m0`.
pub fn simulate_firm(params: &FirmFrameworkParams, n_times: usize) -> Result<FirmPath> {
    params.validate(n_times)?;
    let mut m = Vec::with_capacity(n_times);
    let mut g = Vec::with_capacity(n_times);
    let mut cur = params.m0;
    for t in 0..n_times {
        m.push(cur);
        let gt = params.green_investment(t);
        g.push(gt);
        let shock = params.eps.as_ref().map_or(0.0, |e| e[t]);
        cur = ((1.0 - params.rho) * cur - params.chi * gt + shock).max(0.0);
    }
    let investment = g
        .iter()
        .zip(&params.omega)
        .map(|(gt, w)| if *w > 0.0 { gt / w } else { f64::NAN })
        .collect();
    let emissions: Vec<f64> = m.iter().zip(&params.q).map(|(a, b)| a * b).collect();
    Ok(FirmPath {
        dlog_m: dlog(&m),
        dlog_q: dlog(&params.q),
        dlog_emissions: dlog(&emissions),
        m,
        q: params.q.clone(),
        g,
        investment,
        emissions,
    })
}

/// Cross-section of firms whose observed investment splits between capacity
/// expansion and intensity-reducing adjustment with a common share `omega_t`.
///
/// Each firm draws investment intensity `I_it` from `invint`. Activity grows by
/// `scale * (1 - omega_t) * I_it` plus noise; intensity moves by
/// `m_{t+1} = (1 - rho) m_t - chi omega_t I_it + rho m0`, so the steady state
/// without adjustment is `m0`. The panel's outcome is the log growth of
/// emissions from `t` to `t + 1` and its single regressor is `I_it`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirmPanelSpec {
    pub n_firms: usize,
    pub omega: Vec<f64>,
    pub invint: ArProcess,
    pub scale: f64,
    pub chi: f64,
    pub rho: f64,
    pub m0: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl FirmPanelSpec {
    /// Sign of the investment coefficient suggested by the share `omega`
    /// around the steady state.
    pub fn implied_sign(&self, omega: f64) -> f64 {
        (self.scale * (1.0 - omega) - self.chi * omega / self.m0).signum()
    }
}

/// Simulates a [`FirmPanelSpec`] into a panel with `omega.len()` periods.
pub fn simulate_firm_panel(spec: &FirmPanelSpec) -> Result<Panel> {
    let t_len = spec.omega.len();
    if spec.n_firms == 0 || t_len < 2 {
        return Err(Error::Parameter("need at least one firm and two periods".into()));
    }
    if spec.omega.iter().any(|w| !(0.0..=1.0).contains(w)) {
        return Err(Error::Parameter("omega must lie in [0, 1]".into()));
    }
    if !(spec.rho > 0.0 && spec.rho < 1.0) || !(spec.chi > 0.0) || !(spec.m0 > 0.0) || !(spec.noise_sd >= 0.0) {
        return Err(Error::Parameter("firm panel parameters out of range".into()));
    }
    spec.invint.check("invint")?;
    let rows = par::map_range(spec.n_firms, |i| {
        let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
        rng.set_stream(i as u64);
        let inv = spec.invint.sample(&mut rng, t_len);
        let mut m = spec.m0;
        let mut y = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let next = ((1.0 - spec.rho) * m - spec.chi * spec.omega[t] * inv[t] + spec.rho * spec.m0).max(1e-12);
            let dq = spec.scale * (1.0 - spec.omega[t]) * inv[t] + spec.noise_sd * rng.sample::<f64, _>(StandardNormal);
            y.push(next.ln() - m.ln() + dq);
            m = next;
        }
        (y, inv)
    });
    let mut y = Vec::with_capacity(spec.n_firms * t_len);
    let mut x = Vec::with_capacity(spec.n_firms * t_len);
    for (yi, xi) in rows {
        y.extend(yi);
        x.extend(xi);
    }
    Panel::with_outcome_name(
        (0..spec.n_firms).map(|i| format!("firm{i}")).collect(),
        (0..spec.n_firms).map(|i| format!("firm{i}")).collect(),
        (1..=t_len as i64).collect(),
        y,
        x,
        vec!["invint".into()],
        "dlog_emissions",
    )
}
