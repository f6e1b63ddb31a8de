//! Influence functions and their certified analytic properties.
//!
//! An influence function maps an inter-agent distance to a non-negative,
//! non-increasing, Lipschitz interaction strength. Two families are
//! supported: the classical power law `amplitude / (sigma^2 + r^2)^beta`
//! and tabulated samples with linear interpolation and constant
//! extrapolation beyond the last radius.
//!
//! Validation happens at construction (or via [`KernelSpec::validate`]
//! after deserializing), so evaluation is total on `r >= 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::adaptive_simpson;

/// An influence function of inter-agent distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `amplitude / (sigma^2 + r^2)^beta` with `amplitude, sigma > 0`,
    /// `beta >= 0`.
    PowerLaw {
        amplitude: f64,
        sigma: f64,
        beta: f64,
    },
    /// Samples `(radii[i], values[i])` with strictly increasing radii
    /// starting at 0 and non-increasing, non-negative values. Evaluation
    /// interpolates linearly and extrapolates by the last value. The
    /// declared `lipschitz` bound must dominate every segment slope.
    Tabulated {
        radii: Vec<f64>,
        values: Vec<f64>,
        lipschitz: f64,
    },
}

impl KernelSpec {
    /// Validated power-law kernel.
    pub fn power_law(amplitude: f64, sigma: f64, beta: f64) -> Result<Self> {
        let k = KernelSpec::PowerLaw {
            amplitude,
            sigma,
            beta,
        };
        k.validate()?;
        Ok(k)
    }

    /// Validated tabulated kernel.
    pub fn tabulated(radii: Vec<f64>, values: Vec<f64>, lipschitz: f64) -> Result<Self> {
        let k = KernelSpec::Tabulated {
            radii,
            values,
            lipschitz,
        };
        k.validate()?;
        Ok(k)
    }

    /// Checks every structural invariant; call after deserializing.
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::PowerLaw {
                amplitude,
                sigma,
                beta,
            } => {
                if !(amplitude.is_finite() && *amplitude > 0.0) {
                    return Err(Error::InvalidKernel(format!(
                        "amplitude must be positive, got {amplitude}"
                    )));
                }
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(Error::InvalidKernel(format!(
                        "sigma must be positive, got {sigma}"
                    )));
                }
                if !(beta.is_finite() && *beta >= 0.0) {
                    return Err(Error::InvalidKernel(format!(
                        "beta must be non-negative, got {beta}"
                    )));
                }
                Ok(())
            }
            KernelSpec::Tabulated {
                radii,
                values,
                lipschitz,
            } => {
                if radii.is_empty() || radii.len() != values.len() {
                    return Err(Error::InvalidKernel(
                        "radii and values must be non-empty and equally long".into(),
                    ));
                }
                if radii[0] != 0.0 {
                    return Err(Error::InvalidKernel("radii must start at 0".into()));
                }
                if radii.windows(2).any(|w| !(w[1] > w[0])) || radii.iter().any(|r| !r.is_finite())
                {
                    return Err(Error::InvalidKernel(
                        "radii must be finite and strictly increasing".into(),
                    ));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidKernel(
                        "values must be finite and non-negative".into(),
                    ));
                }
                if values.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::InvalidKernel("values must be non-increasing".into()));
                }
                if !(lipschitz.is_finite() && *lipschitz >= 0.0) {
                    return Err(Error::InvalidKernel(format!(
                        "lipschitz bound must be non-negative, got {lipschitz}"
                    )));
                }
                let max_slope = radii
                    .windows(2)
                    .zip(values.windows(2))
                    .map(|(r, v)| (v[0] - v[1]) / (r[1] - r[0]))
                    .fold(0.0f64, f64::max);
                if *lipschitz < max_slope * (1.0 - 1e-12) {
                    return Err(Error::InvalidKernel(format!(
                        "declared lipschitz bound {lipschitz} below table slope {max_slope}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// The value at distance `r >= 0`.
    pub fn eval(&self, r: f64) -> f64 {
        assert!(r >= 0.0, "influence function queried at negative radius {r}");
        match self {
            KernelSpec::PowerLaw {
                amplitude,
                sigma,
                beta,
            } => amplitude * (sigma * sigma + r * r).powf(-beta),
            KernelSpec::Tabulated { radii, values, .. } => {
                let last = *radii.last().unwrap();
                if r >= last {
                    return *values.last().unwrap();
                }
                let j = match radii.binary_search_by(|probe| probe.partial_cmp(&r).unwrap()) {
                    Ok(i) => return values[i],
                    Err(i) => i,
                };
                let (r0, r1) = (radii[j - 1], radii[j]);
                let (v0, v1) = (values[j - 1], values[j]);
                v0 + (v1 - v0) * (r - r0) / (r1 - r0)
            }
        }
    }

    /// The supremum, attained at distance zero.
    pub fn sup(&self) -> f64 {
        match self {
            KernelSpec::PowerLaw { .. } => self.eval(0.0),
            KernelSpec::Tabulated { values, .. } => values[0],
        }
    }

    /// Whether the integral over `[0, inf)` diverges.
    ///
    /// Power laws diverge exactly when `beta <= 1/2`; tabulated kernels
    /// diverge exactly when the constant extrapolation value is positive.
    pub fn integral_diverges(&self) -> bool {
        match self {
            KernelSpec::PowerLaw { beta, .. } => *beta <= 0.5,
            KernelSpec::Tabulated { values, .. } => *values.last().unwrap() > 0.0,
        }
    }

    /// A global Lipschitz bound (may over-report; only used for validation).
    ///
    /// For the power law the maximum of `|psi'|` has the closed form
    /// attained at `r = sigma / sqrt(2 beta + 1)`; tabulated kernels return
    /// the declared bound.
    pub fn lipschitz_bound(&self) -> f64 {
        match self {
            KernelSpec::PowerLaw {
                amplitude,
                sigma,
                beta,
            } => {
                if *beta == 0.0 {
                    return 0.0;
                }
                let b = *beta;
                2.0 * b * amplitude * sigma.powf(-(2.0 * b + 1.0)) * (2.0 * b + 1.0).powf(b + 0.5)
                    / (2.0 * b + 2.0).powf(b + 1.0)
            }
            KernelSpec::Tabulated { lipschitz, .. } => *lipschitz,
        }
    }

    /// `integral of psi over [a, b]`, exact where a closed form exists.
    ///
    /// Power laws use closed forms for `beta` in {0, 1/2, 1} and otherwise
    /// a sinh substitution (`s = sigma sinh u`) under panel-doubled Simpson,
    /// which stays accurate for radii up to ~1e300. Tabulated kernels are
    /// integrated exactly piecewise.
    pub fn definite_integral(&self, a: f64, b: f64) -> f64 {
        assert!(a >= 0.0 && b >= a, "invalid integration range [{a}, {b}]");
        if a == b {
            return 0.0;
        }
        match self {
            KernelSpec::PowerLaw {
                amplitude,
                sigma,
                beta,
            } => {
                let (k, s) = (*amplitude, *sigma);
                if *beta == 0.0 {
                    k * (b - a)
                } else if *beta == 0.5 {
                    k * ((b / s).asinh() - (a / s).asinh())
                } else if *beta == 1.0 {
                    k / s * ((b / s).atan() - (a / s).atan())
                } else {
                    // s = sigma sinh(u) turns the integrand into
                    // k sigma^(1-2 beta) cosh(u)^(1-2 beta), smooth and
                    // slowly varying over u in [asinh(a/s), asinh(b/s)].
                    let p = 1.0 - 2.0 * beta;
                    let (ua, ub) = ((a / s).asinh(), (b / s).asinh());
                    let f = |u: f64| (p * ln_cosh(u)).exp();
                    k * s.powf(p) * adaptive_simpson(f, ua, ub, 1e-12)
                }
            }
            KernelSpec::Tabulated { radii, values, .. } => {
                let mut acc = 0.0;
                for w in radii.windows(2).zip(values.windows(2)) {
                    let ((r0, r1), (v0, v1)) = ((w.0[0], w.0[1]), (w.1[0], w.1[1]));
                    let lo = a.max(r0);
                    let hi = b.min(r1);
                    if hi > lo {
                        let fl = v0 + (v1 - v0) * (lo - r0) / (r1 - r0);
                        let fh = v0 + (v1 - v0) * (hi - r0) / (r1 - r0);
                        acc += 0.5 * (fl + fh) * (hi - lo);
                    }
                }
                let last = *radii.last().unwrap();
                if b > last {
                    acc += values.last().unwrap() * (b - a.max(last));
                }
                acc
            }
        }
    }

    /// Smallest radius where the value drops to `threshold` or below;
    /// `None` when the value stays above it forever.
    pub fn radius_where_below(&self, threshold: f64) -> Option<f64> {
        if self.eval(0.0) <= threshold {
            return Some(0.0);
        }
        match self {
            KernelSpec::PowerLaw {
                amplitude,
                sigma,
                beta,
            } => {
                if *beta == 0.0 || threshold <= 0.0 {
                    return None;
                }
                let q = (amplitude / threshold).powf(1.0 / beta) - sigma * sigma;
                Some(q.max(0.0).sqrt())
            }
            KernelSpec::Tabulated { radii, values, .. } => {
                if *values.last().unwrap() > threshold {
                    return None;
                }
                let j = values.iter().position(|v| *v <= threshold).unwrap();
                let (r0, r1) = (radii[j - 1], radii[j]);
                let (v0, v1) = (values[j - 1], values[j]);
                Some(r0 + (v0 - threshold) / (v0 - v1) * (r1 - r0))
            }
        }
    }

    /// Upper bound on `integral of psi over [r, inf)`; `None` when the
    /// integral diverges.
    pub fn integral_tail_upper_bound(&self, r: f64) -> Option<f64> {
        if self.integral_diverges() {
            return None;
        }
        match self {
            KernelSpec::PowerLaw {
                amplitude, beta, ..
            } => {
                // (sigma^2 + s^2)^beta >= s^(2 beta)
                debug_assert!(*beta > 0.5 && r > 0.0);
                Some(amplitude * r.powf(1.0 - 2.0 * beta) / (2.0 * beta - 1.0))
            }
            KernelSpec::Tabulated { radii, .. } => {
                let last = *radii.last().unwrap();
                if r >= last {
                    Some(0.0)
                } else {
                    Some(self.definite_integral(r, last))
                }
            }
        }
    }
}

/// `ln(cosh(u))` without overflow for large `|u|`.
fn ln_cosh(u: f64) -> f64 {
    let a = u.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example2_kernel() -> KernelSpec {
        KernelSpec::power_law(1.0, 1.0, 0.5).unwrap()
    }

    #[test]
    fn eval_constant_kernel() {
        let k = KernelSpec::power_law(1.0, 1.0, 0.0).unwrap();
        assert_eq!(k.eval(7.3), 1.0);
    }

    #[test]
    fn eval_at_zero_is_one_for_unit_power_law() {
        assert_eq!(example2_kernel().eval(0.0), 1.0);
    }

    #[test]
    fn eval_example2_at_one() {
        // 1 / sqrt(1 + 1) by direct substitution
        assert_relative_eq!(example2_kernel().eval(1.0), 1.0 / 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    #[should_panic]
    fn eval_rejects_negative_radius() {
        example2_kernel().eval(-1.0);
    }

    #[test]
    fn sup_power_law() {
        assert_eq!(example2_kernel().sup(), 1.0);
        // amplitude / sigma^(2 beta) = 2 / 4 by hand
        let k = KernelSpec::power_law(2.0, 2.0, 1.0).unwrap();
        assert_relative_eq!(k.sup(), 2.0 / (2.0f64 * 2.0), epsilon = 1e-15);
    }

    #[test]
    fn sup_tabulated_is_first_sample() {
        let k = KernelSpec::tabulated(vec![0.0, 1.0, 2.0], vec![3.0, 2.0, 1.0], 1.0).unwrap();
        assert_eq!(k.sup(), 3.0);
    }

    #[test]
    fn divergence_threshold_at_one_half() {
        assert!(KernelSpec::power_law(1.0, 1.0, 0.5).unwrap().integral_diverges());
        assert!(!KernelSpec::power_law(1.0, 1.0, 0.51).unwrap().integral_diverges());
        let zero_tail =
            KernelSpec::tabulated(vec![0.0, 1.0], vec![1.0, 0.0], 1.0).unwrap();
        assert!(!zero_tail.integral_diverges());
        let flat_tail =
            KernelSpec::tabulated(vec![0.0, 1.0], vec![1.0, 0.5], 0.5).unwrap();
        assert!(flat_tail.integral_diverges());
    }

    #[test]
    fn lipschitz_constant_kernel_is_zero() {
        assert_eq!(KernelSpec::power_law(1.0, 1.0, 0.0).unwrap().lipschitz_bound(), 0.0);
    }

    #[test]
    fn lipschitz_tabulated_passes_through() {
        let k = KernelSpec::tabulated(vec![0.0, 1.0], vec![2.0, 0.0], 2.5).unwrap();
        assert_eq!(k.lipschitz_bound(), 2.5);
    }

    #[test]
    fn lipschitz_dominates_finite_differences() {
        // finite-difference oracle over r in [0, 100]
        let k = example2_kernel();
        let bound = k.lipschitz_bound();
        let n = 20_000;
        let mut max_slope = 0.0f64;
        for i in 0..n {
            let r0 = 100.0 * i as f64 / n as f64;
            let r1 = 100.0 * (i + 1) as f64 / n as f64;
            max_slope = max_slope.max(((k.eval(r1) - k.eval(r0)) / (r1 - r0)).abs());
        }
        assert!(bound >= max_slope, "{bound} < {max_slope}");
        // the closed form is the exact maximum of |psi'|, so it is tight
        assert_relative_eq!(bound, max_slope, max_relative = 1e-4);
    }

    #[test]
    fn integral_grows_without_bound_when_divergent() {
        // beta = 1/2 grows like ln(2r): unbounded, but only logarithmically
        let k = example2_kernel();
        let near = k.definite_integral(0.0, 1e3);
        let far = k.definite_integral(0.0, 1e6);
        assert!(far > near + 5.0, "far {far} near {near}");
        assert_relative_eq!(far, 1e6f64.asinh(), max_relative = 1e-12);
        // beta = 0 grows linearly
        let c = KernelSpec::power_law(1.0, 1.0, 0.0).unwrap();
        assert!(c.definite_integral(0.0, 1e6) > 10.0 * c.definite_integral(0.0, 1e3));
    }

    #[test]
    fn definite_integral_general_beta_matches_simpson_oracle() {
        // direct composite Simpson on the raw integrand as an independent route
        let k = KernelSpec::power_law(1.3, 0.7, 0.75).unwrap();
        let oracle = crate::numeric::composite_simpson(|s| k.eval(s), 0.2, 9.0, 1 << 14);
        assert_relative_eq!(k.definite_integral(0.2, 9.0), oracle, max_relative = 1e-9);
    }

    #[test]
    fn definite_integral_beta_one_closed_form() {
        let k = KernelSpec::power_law(2.0, 2.0, 1.0).unwrap();
        let got = k.definite_integral(0.0, 10.0);
        assert_relative_eq!(got, 2.0 / 2.0 * (10.0f64 / 2.0).atan(), epsilon = 1e-14);
    }

    #[test]
    fn tabulated_integral_exact_piecewise() {
        let k = KernelSpec::tabulated(vec![0.0, 2.0], vec![1.0, 0.0], 0.5).unwrap();
        // triangle of area 1, zero tail
        assert_relative_eq!(k.definite_integral(0.0, 10.0), 1.0, epsilon = 1e-14);
        // trapezoid between psi(1) = 1/2 and psi(2) = 0
        assert_relative_eq!(k.definite_integral(1.0, 2.0), 0.25, epsilon = 1e-14);
    }

    #[test]
    fn crossover_radius_power_law() {
        let k = example2_kernel();
        // psi(r) = 1/e at r = sqrt(e^2 - 1)
        let r = k.radius_where_below((-1.0f64).exp()).unwrap();
        assert_relative_eq!(r, (1f64.exp().powi(2) - 1.0).sqrt(), max_relative = 1e-12);
        assert!(KernelSpec::power_law(1.0, 1.0, 0.0)
            .unwrap()
            .radius_where_below(0.5)
            .is_none());
    }

    #[test]
    fn crossover_radius_tabulated() {
        let k = KernelSpec::tabulated(vec![0.0, 1.0, 2.0], vec![4.0, 2.0, 2.0], 2.0).unwrap();
        assert_relative_eq!(k.radius_where_below(3.0).unwrap(), 0.5, epsilon = 1e-14);
        assert!(k.radius_where_below(1.0).is_none());
    }

    #[test]
    fn tail_bound_dominates_true_tail() {
        let k = KernelSpec::power_law(1.0, 1.0, 0.75).unwrap();
        let bound = k.integral_tail_upper_bound(2.0).unwrap();
        let probe = k.definite_integral(2.0, 1e6);
        assert!(bound >= probe);
        assert!(KernelSpec::power_law(1.0, 1.0, 0.5)
            .unwrap()
            .integral_tail_upper_bound(2.0)
            .is_none());
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(KernelSpec::power_law(0.0, 1.0, 0.5).is_err());
        assert!(KernelSpec::power_law(1.0, -1.0, 0.5).is_err());
        assert!(KernelSpec::power_law(1.0, 1.0, -0.1).is_err());
        // decreasing radii
        assert!(KernelSpec::tabulated(vec![0.0, 2.0, 1.0], vec![3.0, 2.0, 1.0], 2.0).is_err());
        // increasing values
        assert!(KernelSpec::tabulated(vec![0.0, 1.0], vec![1.0, 2.0], 2.0).is_err());
        // radii not starting at zero
        assert!(KernelSpec::tabulated(vec![1.0, 2.0], vec![1.0, 0.5], 1.0).is_err());
        // understated lipschitz bound
        assert!(KernelSpec::tabulated(vec![0.0, 1.0], vec![2.0, 0.0], 0.5).is_err());
    }

    #[test]
    fn serde_schema_round_trip() {
        let json = r#"{"type":"power_law","amplitude":1.0,"sigma":1.0,"beta":0.5}"#;
        let k: KernelSpec = serde_json::from_str(json).unwrap();
        assert_eq!(k, example2_kernel());
        let json = r#"{"type":"tabulated","radii":[0.0,1.0],"values":[1.0,0.0],"lipschitz":1.0}"#;
        let k: KernelSpec = serde_json::from_str(json).unwrap();
        assert!(k.validate().is_ok());
    }
}
