//! Kernel functions, bandwidth rules and per-target-time weight vectors.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Kernel family used to weight observations by their distance in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// `exp(-u^2 / 2)`; strictly positive everywhere.
    Gaussian,
    /// `3/4 (1 - u^2)` on `u <= 1`, zero outside.
    Epanechnikov,
    /// Indicator of `u <= 1`.
    Uniform,
}

impl KernelKind {
    pub const ALL: [KernelKind; 3] = [KernelKind::Gaussian, KernelKind::Epanechnikov, KernelKind::Uniform];

    pub fn as_str(&self) -> &'static str {
        match self {
            KernelKind::Gaussian => "gaussian",
            KernelKind::Epanechnikov => "epanechnikov",
            KernelKind::Uniform => "uniform",
        }
    }

    /// Evaluates the kernel at a nonnegative scaled distance.
    pub fn eval(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::Domain(format!("kernel argument must be nonnegative, got {u}")));
        }
        Ok(self.eval_unchecked(u))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, u: f64) -> f64 {
        match self {
            KernelKind::Gaussian => (-0.5 * u * u).exp(),
            KernelKind::Epanechnikov => {
                if u <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
            KernelKind::Uniform => {
                if u <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(KernelKind::Gaussian),
            "epanechnikov" | "epa" => Ok(KernelKind::Epanechnikov),
            "uniform" | "rectangular" => Ok(KernelKind::Uniform),
            other => Err(Error::Parameter(format!("unknown kernel `{other}`"))),
        }
    }
}

/// Evaluates `kind` at `u`; see [`KernelKind::eval`].
pub fn kernel_eval(kind: KernelKind, u: f64) -> Result<f64> {
    kind.eval(u)
}

/// Kernel family plus a positive bandwidth `H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub bandwidth: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::Parameter(format!("bandwidth must be positive and finite, got {bandwidth}")));
        }
        Ok(Self { kind, bandwidth })
    }

    /// Spec with `H = T^alpha`.
    pub fn from_alpha(kind: KernelKind, n_times: usize, alpha: f64) -> Result<Self> {
        Self::new(kind, bandwidth_from_alpha(n_times, alpha)?)
    }

    /// Weight of an observation `distance` periods away from the target time.
    #[inline]
    pub fn weight(&self, distance: usize) -> f64 {
        self.kind.eval_unchecked(distance as f64 / self.bandwidth)
    }

    /// Weights indexed by distance `0..n_times`; every target time reads its
    /// weight vector from this table.
    pub fn distance_table(&self, n_times: usize) -> Vec<f64> {
        (0..n_times).map(|d| self.weight(d)).collect()
    }
}

/// Bandwidth rule `H = T^alpha`.
pub fn bandwidth_from_alpha(n_times: usize, alpha: f64) -> Result<f64> {
    if n_times < 2 {
        return Err(Error::Parameter(format!("bandwidth rule needs T >= 2, got {n_times}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok((n_times as f64).powf(alpha))
}

/// Weights `K(|j - t| / H)` for `j = 1..=T` around target `t` (1-based).
pub fn weights_for_time(n_times: usize, t: usize, spec: &KernelSpec) -> Result<Vec<f64>> {
    if t == 0 || t > n_times {
        return Err(Error::Parameter(format!("target time {t} outside 1..={n_times}")));
    }
    Ok((1..=n_times).map(|j| spec.weight(j.abs_diff(t))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_eval(KernelKind::Epanechnikov, 0.0).unwrap(), 0.75);
        assert_eq!(kernel_eval(KernelKind::Epanechnikov, 1.0).unwrap(), 0.0);
        assert_eq!(kernel_eval(KernelKind::Gaussian, 0.0).unwrap(), 1.0);
        assert_eq!(kernel_eval(KernelKind::Uniform, 0.99).unwrap(), 1.0);
        assert_eq!(kernel_eval(KernelKind::Uniform, 1.01).unwrap(), 0.0);
        assert!(kernel_eval(KernelKind::Gaussian, -0.1).is_err());
        assert!(kernel_eval(KernelKind::Uniform, f64::NAN).is_err());
    }

    #[test]
    fn bandwidth_examples() {
        assert_abs_diff_eq!(bandwidth_from_alpha(31, 0.5).unwrap(), 5.5678, epsilon = 1e-4);
        assert_abs_diff_eq!(bandwidth_from_alpha(31, 0.85).unwrap(), 18.52, epsilon = 0.01);
        assert_abs_diff_eq!(bandwidth_from_alpha(31, 0.45).unwrap(), 4.69, epsilon = 0.01);
        assert!(bandwidth_from_alpha(1, 0.5).is_err());
        assert!(bandwidth_from_alpha(31, 1.0).is_err());
        assert!(bandwidth_from_alpha(31, 0.0).is_err());
    }

    #[test]
    fn weight_examples() {
        let uni = KernelSpec::new(KernelKind::Uniform, 1.0).unwrap();
        assert_eq!(weights_for_time(5, 3, &uni).unwrap(), vec![0.0, 1.0, 1.0, 1.0, 0.0]);
        let gau = KernelSpec::new(KernelKind::Gaussian, 1.0).unwrap();
        let w = weights_for_time(3, 1, &gau).unwrap();
        assert_eq!(w, vec![1.0, (-0.5f64).exp(), (-2.0f64).exp()]);
        assert!(weights_for_time(3, 0, &gau).is_err());
        assert!(weights_for_time(3, 4, &gau).is_err());
        assert!(KernelSpec::new(KernelKind::Gaussian, 0.0).is_err());
    }

    #[test]
    fn parse_kinds() {
        for k in KernelKind::ALL {
            assert_eq!(k.as_str().parse::<KernelKind>().unwrap(), k);
        }
        assert!("triangle".parse::<KernelKind>().is_err());
    }

    fn any_kind() -> impl Strategy<Value = KernelKind> {
        prop_oneof![
            Just(KernelKind::Gaussian),
            Just(KernelKind::Epanechnikov),
            Just(KernelKind::Uniform)
        ]
    }

    proptest! {
        #[test]
        fn monotone_decay(kind in any_kind(), u in 0.0f64..10.0, du in 0.0f64..5.0) {
            prop_assert!(kind.eval(u + du).unwrap() <= kind.eval(u).unwrap());
        }

        #[test]
        fn support(kind in any_kind(), u in 1.0001f64..50.0) {
            let v = kind.eval(u).unwrap();
            match kind {
                KernelKind::Gaussian => prop_assert!(v > 0.0 || u > 38.0),
                _ => prop_assert_eq!(v, 0.0),
            }
        }

        #[test]
        fn symmetric_weights(kind in any_kind(), h in 0.5f64..20.0, n in 3usize..40, t_frac in 0.0f64..1.0) {
            let spec = KernelSpec::new(kind, h).unwrap();
            let t = 1 + ((n - 1) as f64 * t_frac) as usize;
            let w = weights_for_time(n, t, &spec).unwrap();
            prop_assert!(w[t - 1] > 0.0);
            for d in 1..n {
                if t > d && t + d <= n {
                    prop_assert_eq!(w[t - 1 - d], w[t - 1 + d]);
                }
            }
        }

        #[test]
        fn wider_gaussian_is_flatter(h in 0.5f64..20.0, dh in 0.0f64..20.0, n in 3usize..40) {
            let narrow = KernelSpec::new(KernelKind::Gaussian, h).unwrap();
            let wide = KernelSpec::new(KernelKind::Gaussian, h + dh).unwrap();
            let t = n / 2 + 1;
            let a = weights_for_time(n, t, &narrow).unwrap();
            let b = weights_for_time(n, t, &wide).unwrap();
            for j in 0..n {
                prop_assert!(b[j] >= a[j]);
            }
        }
    }
}
