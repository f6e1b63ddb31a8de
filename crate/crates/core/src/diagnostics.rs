//! Alignment diagnostics, the a-priori decay certificate, and numerical
//! verdicts for every inequality the theory guarantees.
//!
//! Quantities on continuous intervals (per-interval velocity diameters,
//! the running maximum of the position diameter, the initial speed bound)
//! are approximated on a dense grid of [`DEFAULT_REFINE`] samples per
//! integration step; the integrands are Lipschitz, so the grid error folds
//! into the additive verdict tolerances. Integrals of the influence floor
//! along the trajectory use a Simpson-class cumulative rule on that grid;
//! integrals of the influence function over distance use exact piecewise
//! splits (the capped integrand is constant up to a crossover radius and
//! proportional to the kernel beyond it).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{integrate, Trajectory, DENSE_SAMPLES_PER_STEP};
use crate::kernels::KernelSpec;
use crate::model::{HistorySet, SystemConfig};
use crate::numeric::{
    bisect_nondecreasing, cumulative_integral, dot, max_pairwise_distance, norm,
    random_unit_vectors,
};

/// Dense samples per integration step for interval maxima and quadrature.
pub const DEFAULT_REFINE: usize = DENSE_SAMPLES_PER_STEP;

/// Number of random unit directions in the velocity-hull check.
pub const HULL_DIRECTIONS: usize = 64;

const HULL_SEED: u64 = 0xF10C_5EED;

/// Maximum pairwise distance of agent positions at time `t`.
pub fn diameter_positions(traj: &Trajectory, t: f64) -> Result<f64> {
    let n = traj.config().agent_count;
    let dim = traj.config().dim;
    let mut xs = vec![0.0; n * dim];
    let mut vs = vec![0.0; n * dim];
    traj.sample_into(t, &mut xs, &mut vs)?;
    Ok(max_pairwise_distance(&xs, n, dim))
}

/// Maximum pairwise distance of agent velocities at time `t`.
pub fn diameter_velocities(traj: &Trajectory, t: f64) -> Result<f64> {
    let n = traj.config().agent_count;
    let dim = traj.config().dim;
    let mut xs = vec![0.0; n * dim];
    let mut vs = vec![0.0; n * dim];
    traj.sample_into(t, &mut xs, &mut vs)?;
    Ok(max_pairwise_distance(&vs, n, dim))
}

/// Velocity diameter over the whole interval `[n tau - tau, n tau]`:
/// the maximum of `|v_c(s) - v_d(t)|` over all agent pairs and all time
/// pairs, approximated on [`DEFAULT_REFINE`] dense samples per step.
///
/// Agents and times range independently, so this equals the diameter of
/// the pooled sample set; the sampled value lower-bounds the continuous
/// maximum at the grid resolution.
pub fn interval_diameter(traj: &Trajectory, n: usize) -> Result<f64> {
    let m = traj.config().step_divisor;
    if n * m > traj.config().n_steps {
        return Err(Error::OutOfDomain {
            t: n as f64 * traj.delay(),
            lo: 0.0,
            hi: traj.horizon(),
        });
    }
    let count = traj.config().agent_count;
    let dim = traj.config().dim;
    let refine = DEFAULT_REFINE;
    let ipd = (m * refine) as isize;
    let lo = (n as isize - 1) * ipd;
    let mut pool = Vec::with_capacity(((ipd + 1) as usize) * count * dim);
    let mut xs = vec![0.0; count * dim];
    let mut vs = vec![0.0; count * dim];
    for r in lo..=lo + ipd {
        let seg = r.div_euclid(refine as isize);
        let theta = r.rem_euclid(refine as isize) as f64 / refine as f64;
        traj.sample_indexed_into(seg, theta, &mut xs, &mut vs);
        pool.extend_from_slice(&vs);
    }
    Ok(max_pairwise_distance(&pool, pool.len() / dim, dim))
}

/// Maximum history speed over agents and a dense sampling grid
/// (eight samples per default step).
pub fn initial_speed_bound(history: &HistorySet) -> f64 {
    history.max_speed(DEFAULT_REFINE * 64 + 1)
}

/// Velocity diameter of the history interval, pooled over agents and a
/// grid of `samples` points on `[-delay, 0]`.
fn history_velocity_diameter(history: &HistorySet, samples: usize) -> f64 {
    let samples = samples.max(2);
    let dim = history.dim;
    let mut pool = Vec::with_capacity(samples * history.agent_count() * dim);
    let mut v = vec![0.0; dim];
    for a in 0..history.agent_count() {
        for i in 0..samples {
            let s = -history.delay + history.delay * i as f64 / (samples - 1) as f64;
            history.velocity_into(a, s, &mut v);
            pool.extend_from_slice(&v);
        }
    }
    max_pairwise_distance(&pool, pool.len() / dim, dim)
}

/// Inner product of `v_a(t) - v_b(t)` with the unit vector `u`.
pub fn directional_velocity_gap(
    traj: &Trajectory,
    a: usize,
    b: usize,
    u: &[f64],
    t: f64,
) -> Result<f64> {
    if (norm(u) - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidConfig(format!(
            "direction must be a unit vector, norm is {}",
            norm(u)
        )));
    }
    let sa = traj.state_at(a, t)?;
    let sb = traj.state_at(b, t)?;
    let gap: Vec<f64> = sa
        .velocity
        .iter()
        .zip(&sb.velocity)
        .map(|(x, y)| x - y)
        .collect();
    Ok(dot(&gap, u))
}

/// The influence floor: `min(e^(-K tau) psi(tau R + M), e^(-2 K tau)/tau)`
/// with `K` the kernel supremum, `R` the initial speed bound and `M` the
/// running maximum of the position diameter.
pub fn phi_eval(kernel: &KernelSpec, tau: f64, r_v0: f64, running_max_dx: f64) -> f64 {
    let k = kernel.sup();
    let first = (-k * tau).exp() * kernel.eval(tau * r_v0 + running_max_dx);
    let second = (-2.0 * k * tau).exp() / tau;
    first.min(second)
}

/// `integral over [a, b] of min(e^(-K tau) psi(s), e^(-2 K tau)/tau) ds`.
///
/// Up to the crossover radius (where the kernel drops to `e^(-K tau)/tau`)
/// the integrand is the constant cap; beyond it the integral is the exact
/// kernel integral scaled by `e^(-K tau)`. This stays accurate for bounds
/// up to ~1e300, where a uniform quadrature over `[0, b]` would not.
pub fn capped_influence_integral_between(kernel: &KernelSpec, tau: f64, a: f64, b: f64) -> f64 {
    debug_assert!(0.0 <= a && a <= b);
    let k = kernel.sup();
    let scale = (-k * tau).exp();
    let cap = (-2.0 * k * tau).exp() / tau;
    match kernel.radius_where_below(cap / scale) {
        None => cap * (b - a),
        Some(rc) => {
            let mut acc = cap * (b.min(rc) - a).max(0.0);
            if b > rc {
                acc += scale * kernel.definite_integral(a.max(rc), b);
            }
            acc
        }
    }
}

/// Same integral from zero.
pub fn capped_influence_integral(kernel: &KernelSpec, tau: f64, upper: f64) -> f64 {
    capped_influence_integral_between(kernel, tau, 0.0, upper)
}

/// The a-priori bound on `tau R + sup d_X`: the root `D` of
/// `(e^(-K tau)/3) integral over [0, D] of the capped influence = I_0`.
///
/// Returns `None` when the kernel integral converges and its finite limit
/// falls below `I_0` (no certificate), or when the root would exceed
/// representable range. Absence is a value, not an error.
pub fn dstar_bound(kernel: &KernelSpec, tau: f64, i0: f64) -> Option<f64> {
    if i0 <= 0.0 {
        return Some(0.0);
    }
    let scale = (-kernel.sup() * tau).exp();
    let g = |d: f64| scale / 3.0 * capped_influence_integral(kernel, tau, d);
    let mut lo = 0.0;
    let mut hi = 1.0;
    loop {
        let ghi = g(hi);
        if ghi >= i0 {
            break;
        }
        if let Some(tail) = kernel.integral_tail_upper_bound(hi) {
            if ghi + scale * scale / 3.0 * tail < i0 {
                return None;
            }
        }
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return None;
        }
    }
    Some(bisect_nondecreasing(g, lo, hi, i0))
}

/// The guaranteed decay rate
/// `(1/(3 tau)) ln(1 / (1 - e^(-K tau) tau phi_floor))`.
///
/// Requires `0 < phi_floor <= e^(-2 K tau)/tau`; the product inside the
/// logarithm is then at most `e^(-3 K tau) < 1`, so the rate is positive
/// and finite.
pub fn decay_rate(kernel_sup: f64, tau: f64, phi_floor: f64) -> Result<f64> {
    if !(kernel_sup > 0.0 && tau > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "decay rate needs positive kernel supremum and delay, got {kernel_sup}, {tau}"
        )));
    }
    let cap = (-2.0 * kernel_sup * tau).exp() / tau;
    if !(phi_floor > 0.0 && phi_floor <= cap * (1.0 + 1e-12)) {
        return Err(Error::InvalidConfig(format!(
            "influence floor {phi_floor} outside admissible range (0, {cap}]"
        )));
    }
    let x = (-kernel_sup * tau).exp() * tau * phi_floor;
    Ok(-(-x).ln_1p() / (3.0 * tau))
}

/// The a-priori decay certificate, computed from the history alone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlockingCertificate {
    /// Kernel supremum (value at distance zero).
    pub kernel_sup: f64,
    /// Maximum history speed.
    pub initial_speed_bound: f64,
    /// Velocity diameter over the whole history interval.
    pub initial_velocity_diameter: f64,
    /// Whether the kernel integral over `[0, inf)` diverges.
    pub integral_diverges: bool,
    /// Bound on `tau R + sup d_X`; present only under divergence.
    pub diameter_bound: Option<f64>,
    /// Certified lower bound for the influence floor.
    pub influence_floor: Option<f64>,
    /// Certified exponential decay rate for the velocity diameter.
    pub decay_rate: Option<f64>,
}

/// Builds the certificate a priori: kernel supremum, initial speed bound,
/// initial velocity diameter, the divergence flag, and (under divergence)
/// the diameter bound, influence floor, and decay rate. No simulation runs.
pub fn certify(config: &SystemConfig, history: &HistorySet) -> Result<FlockingCertificate> {
    if history.agent_count() != config.agent_count || history.dim != config.dim {
        return Err(Error::InvalidConfig(
            "certify: config and history disagree on agents or dimension".into(),
        ));
    }
    let kernel = &config.kernel;
    let tau = config.delay;
    let samples = DEFAULT_REFINE * config.step_divisor + 1;
    let kernel_sup = kernel.sup();
    let r_v0 = history.max_speed(samples);
    let i0 = history_velocity_diameter(history, samples);
    let integral_diverges = kernel.integral_diverges();

    let (diameter_bound, influence_floor, rate) = if integral_diverges {
        match dstar_bound(kernel, tau, i0) {
            Some(dstar) => {
                let floor = ((-kernel_sup * tau).exp() * kernel.eval(dstar))
                    .min((-2.0 * kernel_sup * tau).exp() / tau);
                let c = decay_rate(kernel_sup, tau, floor)?;
                (Some(dstar), Some(floor), Some(c))
            }
            None => (None, None, None),
        }
    } else {
        (None, None, None)
    };

    Ok(FlockingCertificate {
        kernel_sup,
        initial_speed_bound: r_v0,
        initial_velocity_diameter: i0,
        integral_diverges,
        diameter_bound,
        influence_floor,
        decay_rate: rate,
    })
}

/// Sampled diagnostic series over `[-delay, horizon]`.
///
/// Samples sit on a uniform dense grid of `refine` points per integration
/// step. The running maximum of the position diameter, the influence floor,
/// and the Lyapunov value are defined from time zero onward; entries before
/// zero carry the time-zero value so all series share one time axis.
#[derive(Debug, Clone)]
pub struct DiagnosticsSeries {
    pub times: Vec<f64>,
    pub position_diameter: Vec<f64>,
    pub velocity_diameter: Vec<f64>,
    pub running_max_position_diameter: Vec<f64>,
    /// Per-interval velocity diameters, index `n` covering
    /// `[n delay - delay, n delay]`.
    pub interval_diameters: Vec<f64>,
    /// The influence floor along the trajectory.
    pub influence_floor: Vec<f64>,
    /// The continuous non-increasing envelope dominating the interval
    /// diameters (constant up to twice the delay, then contracting by a
    /// cube-root factor per interval).
    pub dominating_diameter: Vec<f64>,
    /// Lyapunov value: envelope plus the capped influence integral up to
    /// `tau R + running max of d_X`.
    pub lyapunov: Vec<f64>,
    pub refine: usize,
    pub kernel_sup: f64,
    pub initial_speed_bound: f64,
}

impl DiagnosticsSeries {
    /// Velocity diameter over the history interval (first entry of the
    /// per-interval diameters).
    pub fn initial_velocity_diameter(&self) -> f64 {
        self.interval_diameters[0]
    }

    /// Index of the sample at time zero.
    pub fn index_of_time_zero(&self) -> usize {
        self.times.iter().position(|t| *t >= 0.0).unwrap()
    }
}

/// Computes the full diagnostic series on the default dense grid.
///
/// Requires a horizon of at least twice the delay (the envelope recursion
/// starts there).
pub fn lyapunov_series(traj: &Trajectory) -> Result<DiagnosticsSeries> {
    if traj.config().n_steps < 2 * traj.config().step_divisor {
        return Err(Error::HorizonTooShort {
            horizon: traj.horizon(),
            required: format!("at least twice the delay {}", traj.delay()),
        });
    }
    Ok(compute_series(traj, DEFAULT_REFINE))
}

fn compute_series(traj: &Trajectory, refine: usize) -> DiagnosticsSeries {
    let config = traj.config();
    let n = config.agent_count;
    let dim = config.dim;
    let len = n * dim;
    let m = config.step_divisor;
    let h = config.step();
    let tau = config.delay;
    let kernel = &config.kernel;
    let kernel_sup = kernel.sup();
    let r_v0 = traj.initial_speed_bound();
    let delta = h / refine as f64;

    let ipd = m * refine; // dense indices per delay interval
    let idx0 = ipd; // sample index of time zero
    let total = (m + config.n_steps) * refine; // last sample index

    let mut times = Vec::with_capacity(total + 1);
    let mut positions = vec![0.0; (total + 1) * len];
    let mut velocities = vec![0.0; (total + 1) * len];
    let mut d_x = Vec::with_capacity(total + 1);
    let mut d_v = Vec::with_capacity(total + 1);
    {
        let mut xs = vec![0.0; len];
        let mut vs = vec![0.0; len];
        for i in 0..=total {
            let rel = i as isize - idx0 as isize;
            let seg = rel.div_euclid(refine as isize);
            let theta = rel.rem_euclid(refine as isize) as f64 / refine as f64;
            traj.sample_indexed_into(seg, theta, &mut xs, &mut vs);
            positions[i * len..(i + 1) * len].copy_from_slice(&xs);
            velocities[i * len..(i + 1) * len].copy_from_slice(&vs);
            times.push((rel as f64 / refine as f64) * h);
            d_x.push(max_pairwise_distance(&xs, n, dim));
            d_v.push(max_pairwise_distance(&vs, n, dim));
        }
    }

    // running maximum of d_X over [0, t]; before zero, the value at zero
    let mut running_max = vec![0.0; total + 1];
    let mut acc = d_x[idx0];
    for i in idx0..=total {
        acc = acc.max(d_x[i]);
        running_max[i] = acc;
    }
    for i in 0..idx0 {
        running_max[i] = d_x[idx0];
    }

    let phi: Vec<f64> = running_max
        .iter()
        .map(|rm| phi_eval(kernel, tau, r_v0, *rm))
        .collect();

    // per-interval velocity diameters: diameter of the pooled sample set
    let n_intervals = config.n_steps / m;
    let mut interval_diameters = Vec::with_capacity(n_intervals + 1);
    let mut pool = Vec::with_capacity((ipd + 1) * len);
    for interval in 0..=n_intervals {
        pool.clear();
        let lo = interval * ipd;
        for i in lo..=lo + ipd {
            pool.extend_from_slice(&velocities[i * len..(i + 1) * len]);
        }
        interval_diameters.push(max_pairwise_distance(&pool, pool.len() / dim, dim));
    }
    let i0 = interval_diameters[0];

    // cumulative integral of the influence floor from time zero
    let cum_phi = cumulative_integral(&phi[idx0..], delta);
    let scale = (-kernel_sup * tau).exp();

    // envelope: constant on [-tau, 2 tau], cube-root contraction per piece
    let mut dominating = vec![i0; total + 1];
    let mut piece = 2usize;
    loop {
        let start = idx0 + piece * ipd;
        if start >= total {
            break;
        }
        let d_start = dominating[start];
        let hi = (start + ipd).min(total);
        for i in start + 1..=hi {
            let dphi = cum_phi[i - idx0] - cum_phi[start - idx0];
            dominating[i] = d_start * (1.0 - scale * dphi).max(0.0).cbrt();
        }
        piece += 1;
    }

    // Lyapunov value; the upper limit is non-decreasing, so the capped
    // integral extends incrementally
    let mut lyapunov = vec![0.0; total + 1];
    let mut last_upper = tau * r_v0 + running_max[0];
    let mut last_integral = capped_influence_integral(kernel, tau, last_upper);
    for i in 0..=total {
        let upper = tau * r_v0 + running_max[i];
        if upper > last_upper {
            last_integral += capped_influence_integral_between(kernel, tau, last_upper, upper);
            last_upper = upper;
        }
        lyapunov[i] = dominating[i] + scale / 3.0 * last_integral;
    }

    DiagnosticsSeries {
        times,
        position_diameter: d_x,
        velocity_diameter: d_v,
        running_max_position_diameter: running_max,
        interval_diameters,
        influence_floor: phi,
        dominating_diameter: dominating,
        lyapunov,
        refine,
        kernel_sup,
        initial_speed_bound: r_v0,
    }
}

/// Where a worst margin occurred.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum CheckLocation {
    /// A sample time.
    Time(f64),
    /// An interval index.
    Interval(usize),
}

/// One verified inequality with its worst margin (right side minus left
/// side; negative means violated beyond tolerance when `pass` is false).
#[derive(Debug, Clone, Serialize)]
pub struct InequalityCheck {
    pub inequality: String,
    pub worst_margin: f64,
    pub worst_location: CheckLocation,
    pub pass: bool,
}

/// Margins for every checked inequality plus the certificate.
#[derive(Debug, Clone, Serialize)]
pub struct VerdictReport {
    pub certificate: FlockingCertificate,
    pub checks: Vec<InequalityCheck>,
    /// Additive tolerance for the main checks.
    pub tolerance: f64,
    /// Additive tolerance for the directional hull check.
    pub hull_tolerance: f64,
    /// Achieved maximum velocity diameter over `[0, horizon]`.
    pub max_velocity_diameter: f64,
    /// Achieved maximum velocity diameter over the first delay interval.
    pub max_velocity_diameter_first_interval: f64,
    /// Achieved maximum position diameter over `[0, horizon]`.
    pub max_position_diameter: f64,
    /// How much the Lyapunov value rose over `[0, 2 delay]`, where its
    /// envelope term is still constant (zero when the position diameter
    /// never grew there).
    pub lyapunov_rise_before_two_delays: f64,
    /// Dense samples per integration step behind the interval maxima.
    pub refine: usize,
    pub all_pass: bool,
}

impl VerdictReport {
    pub fn check(&self, name: &str) -> Option<&InequalityCheck> {
        self.checks.iter().find(|c| c.inequality == name)
    }
}

/// Additive tolerance for the main verdicts: `1e-4 max(I_0, 1)` on the
/// reference grid (64 steps per delay), scaled quadratically with the step
/// since sampling error of interval maxima dominates.
pub fn verdict_tolerance(i0: f64, step: f64, delay: f64) -> f64 {
    let grid = 64.0 * step / delay;
    (1e-4 * i0.max(1.0) * grid * grid).max(1e-9 * i0.max(1.0))
}

/// Additive tolerance for the directional hull check, `1e-6` on the
/// reference grid.
pub fn hull_tolerance(step: f64, delay: f64) -> f64 {
    let grid = 64.0 * step / delay;
    (1e-6 * grid * grid).max(1e-12)
}

/// Evaluates every inequality the theory proves on a solved trajectory:
/// the hull and bound inequalities, the per-interval monotonicity and
/// Groenwall/contraction recursions, the envelope dominance, Lyapunov
/// monotonicity, and (when a certificate exists) the exponential decay
/// envelope and the diameter-bound soundness.
///
/// Requires a horizon of at least three delays so the contraction has at
/// least one applicable index.
pub fn check_paper_inequalities(traj: &Trajectory, cert: &FlockingCertificate) -> Result<VerdictReport> {
    let config = traj.config();
    if config.n_steps < 3 * config.step_divisor {
        return Err(Error::HorizonTooShort {
            horizon: traj.horizon(),
            required: format!("at least three times the delay {}", traj.delay()),
        });
    }
    let series = compute_series(traj, DEFAULT_REFINE);
    let n = config.agent_count;
    let dim = config.dim;
    let tau = config.delay;
    let kernel_sup = series.kernel_sup;
    let r_v0 = series.initial_speed_bound;
    let i0 = series.initial_velocity_diameter();
    let tol = verdict_tolerance(i0, config.step(), tau);
    let hull_tol = hull_tolerance(config.step(), tau);
    let refine = series.refine;
    let idx0 = series.index_of_time_zero();
    let ipd = config.step_divisor * refine;
    let total = series.times.len() - 1;
    let n_intervals = series.interval_diameters.len() - 1;
    let decay = (-kernel_sup * tau).exp();

    // resample the state grid once (shared by the hull and bound checks)
    let len = n * dim;
    let mut positions = vec![0.0; (total + 1) * len];
    let mut velocities = vec![0.0; (total + 1) * len];
    {
        let mut xs = vec![0.0; len];
        let mut vs = vec![0.0; len];
        for i in 0..=total {
            let rel = i as isize - idx0 as isize;
            let seg = rel.div_euclid(refine as isize);
            let theta = rel.rem_euclid(refine as isize) as f64 / refine as f64;
            traj.sample_indexed_into(seg, theta, &mut xs, &mut vs);
            positions[i * len..(i + 1) * len].copy_from_slice(&xs);
            velocities[i * len..(i + 1) * len].copy_from_slice(&vs);
        }
    }

    let mut checks: Vec<InequalityCheck> = Vec::new();
    let mut push = |name: &str, margin: f64, loc: CheckLocation, tolerance: f64| {
        checks.push(InequalityCheck {
            inequality: name.into(),
            worst_margin: margin,
            worst_location: loc,
            pass: margin >= -tolerance,
        });
    };

    // interval diameters never grow
    {
        let mut worst = (f64::INFINITY, 0usize);
        for nn in 0..n_intervals {
            let margin = series.interval_diameters[nn] - series.interval_diameters[nn + 1];
            if margin < worst.0 {
                worst = (margin, nn + 1);
            }
        }
        push(
            "interval_diameter_monotone",
            worst.0,
            CheckLocation::Interval(worst.1),
            tol,
        );
    }

    // speeds never exceed the initial bound
    {
        let mut worst = (f64::INFINITY, 0.0);
        for i in 0..=total {
            for a in 0..n {
                let speed = norm(&velocities[i * len + a * dim..i * len + (a + 1) * dim]);
                let margin = r_v0 - speed;
                if margin < worst.0 {
                    worst = (margin, series.times[i]);
                }
            }
        }
        push("speed_bound", worst.0, CheckLocation::Time(worst.1), tol);
    }

    // cross-delay positions stay within tau R + d_X(t - tau)
    {
        let mut worst = (f64::INFINITY, 0.0);
        for i in idx0..=total {
            let j = i - ipd;
            let bound = tau * r_v0 + series.position_diameter[j];
            let mut cross = 0.0f64;
            for a in 0..n {
                let xa = &positions[j * len + a * dim..j * len + (a + 1) * dim];
                for b in 0..n {
                    let xb = &positions[i * len + b * dim..i * len + (b + 1) * dim];
                    let d2: f64 = xa.iter().zip(xb).map(|(p, q)| (p - q) * (p - q)).sum();
                    cross = cross.max(d2);
                }
            }
            let margin = bound - cross.sqrt();
            if margin < worst.0 {
                worst = (margin, series.times[i]);
            }
        }
        push(
            "cross_delay_position_bound",
            worst.0,
            CheckLocation::Time(worst.1),
            tol,
        );
    }

    // endpoint Groenwall recursion between consecutive interval diameters
    {
        let mut worst = (f64::INFINITY, 0usize);
        for nn in 0..n_intervals {
            let dv = series.velocity_diameter[idx0 + nn * ipd];
            let rhs = decay * dv + (1.0 - decay) * series.interval_diameters[nn];
            let margin = rhs - series.interval_diameters[nn + 1];
            if margin < worst.0 {
                worst = (margin, nn + 1);
            }
        }
        push(
            "gronwall_endpoint",
            worst.0,
            CheckLocation::Interval(worst.1),
            tol,
        );
    }

    // directional Groenwall bound checked at interval endpoints
    let directions = random_unit_vectors(dim, HULL_DIRECTIONS, HULL_SEED);
    {
        let mut worst = (f64::INFINITY, 0usize);
        for nn in 0..n_intervals {
            let at = idx0 + nn * ipd;
            let next = at + ipd;
            for u in &directions {
                for a in 0..n {
                    for b in 0..n {
                        if a == b {
                            continue;
                        }
                        let gap = |i: usize| {
                            let va = &velocities[i * len + a * dim..i * len + (a + 1) * dim];
                            let vb = &velocities[i * len + b * dim..i * len + (b + 1) * dim];
                            va.iter()
                                .zip(vb)
                                .zip(u)
                                .map(|((x, y), w)| (x - y) * w)
                                .sum::<f64>()
                        };
                        let rhs = decay * gap(at) + (1.0 - decay) * series.interval_diameters[nn];
                        let margin = rhs - gap(next);
                        if margin < worst.0 {
                            worst = (margin, nn + 1);
                        }
                    }
                }
            }
        }
        push(
            "gronwall_directional",
            worst.0,
            CheckLocation::Interval(worst.1),
            tol,
        );
    }

    // contraction: each interval diameter sits below its third predecessor
    // shrunk by the integrated influence floor
    {
        let mut worst = (f64::INFINITY, 0usize);
        let cum_phi = cumulative_integral(&series.influence_floor[idx0..], config.step() / refine as f64);
        for nn in 2..n_intervals {
            let int_phi = cum_phi[(nn - 1) * ipd] - cum_phi[(nn - 2) * ipd];
            let rhs = (1.0 - decay * int_phi) * series.interval_diameters[nn - 2];
            let margin = rhs - series.interval_diameters[nn + 1];
            if margin < worst.0 {
                worst = (margin, nn + 1);
            }
        }
        if n_intervals > 2 {
            push(
                "contraction",
                worst.0,
                CheckLocation::Interval(worst.1),
                tol,
            );
        }
    }

    // velocity hull: projections never exceed the window maximum afterwards
    {
        let mut worst = (f64::INFINITY, 0usize);
        let mut proj = vec![0.0; total + 1];
        for u in &directions {
            for (i, p) in proj.iter_mut().enumerate() {
                let mut best = f64::NEG_INFINITY;
                for a in 0..n {
                    let va = &velocities[i * len + a * dim..i * len + (a + 1) * dim];
                    best = best.max(va.iter().zip(u).map(|(x, w)| x * w).sum());
                }
                *p = best;
            }
            let mut suffix = vec![f64::NEG_INFINITY; total + 2];
            for i in (0..=total).rev() {
                suffix[i] = suffix[i + 1].max(proj[i]);
            }
            for nn in 0..=n_intervals {
                let window_lo = nn * ipd;
                let window_hi = window_lo + ipd;
                let window_max = proj[window_lo..=window_hi]
                    .iter()
                    .fold(f64::NEG_INFINITY, |a, b| a.max(*b));
                let margin = window_max - suffix[window_lo];
                if margin < worst.0 {
                    worst = (margin, nn);
                }
            }
        }
        push(
            "velocity_hull",
            worst.0,
            CheckLocation::Interval(worst.1),
            hull_tol,
        );
    }

    // exponential envelope from the certificate
    if let Some(c) = cert.decay_rate {
        let mut worst = (f64::INFINITY, 0.0);
        for i in 0..=total {
            let envelope = i0 * (-c * (series.times[i] - 2.0 * tau)).exp();
            let margin = envelope - series.velocity_diameter[i];
            if margin < worst.0 {
                worst = (margin, series.times[i]);
            }
        }
        push(
            "exponential_envelope",
            worst.0,
            CheckLocation::Time(worst.1),
            tol,
        );
    }

    // diameter-bound soundness (degenerate at I_0 = 0, where the bound is
    // zero by construction while positions may still differ)
    if i0 > 0.0 {
        if let Some(dstar) = cert.diameter_bound {
            let max_dx_from_zero = series.running_max_position_diameter[total];
            push(
                "dstar_soundness",
                dstar - (tau * r_v0 + max_dx_from_zero),
                CheckLocation::Time(series.times[total]),
                tol,
            );
            let max_dx_all = series
                .position_diameter
                .iter()
                .fold(0.0f64, |a, b| a.max(*b));
            push(
                "dstar_position_supremum",
                dstar - max_dx_all,
                CheckLocation::Time(series.times[total]),
                tol,
            );
        }
    }

    // Lyapunov value never increases once the envelope recursion is
    // active (two delays in). Before that the envelope term is constant
    // while the capped integral can still grow with the running maximum
    // of d_X, so the value may rise; that rise is reported separately.
    {
        let start = (idx0 + 2 * ipd).min(total);
        let mut worst = (f64::INFINITY, 0.0);
        let mut prefix_min = f64::INFINITY;
        for i in start..=total {
            prefix_min = prefix_min.min(series.lyapunov[i]);
            let margin = prefix_min - series.lyapunov[i];
            if margin < worst.0 {
                worst = (margin, series.times[i]);
            }
        }
        push(
            "lyapunov_nonincreasing",
            worst.0,
            CheckLocation::Time(worst.1),
            tol,
        );
    }
    let lyapunov_rise_before_two_delays = {
        let end = (idx0 + 2 * ipd).min(total);
        let base = series.lyapunov[idx0];
        series.lyapunov[idx0..=end]
            .iter()
            .fold(0.0f64, |acc, l| acc.max(l - base))
    };

    // the envelope dominates the velocity diameter pointwise and each
    // interval diameter at the interval end
    {
        let mut worst = (f64::INFINITY, 0.0);
        for i in 0..=total {
            let margin = series.dominating_diameter[i] - series.velocity_diameter[i];
            if margin < worst.0 {
                worst = (margin, series.times[i]);
            }
        }
        push(
            "velocity_diameter_below_dominating",
            worst.0,
            CheckLocation::Time(worst.1),
            tol,
        );
        let mut worst = (f64::INFINITY, 0usize);
        for nn in 1..=n_intervals {
            let margin = series.dominating_diameter[idx0 + nn * ipd] - series.interval_diameters[nn];
            if margin < worst.0 {
                worst = (margin, nn);
            }
        }
        push(
            "interval_diameter_below_dominating",
            worst.0,
            CheckLocation::Interval(worst.1),
            tol,
        );
    }

    let max_velocity_diameter = series.velocity_diameter[idx0..]
        .iter()
        .fold(0.0f64, |a, b| a.max(*b));
    let max_velocity_diameter_first_interval = series.velocity_diameter
        [idx0..=(idx0 + ipd).min(total)]
        .iter()
        .fold(0.0f64, |a, b| a.max(*b));
    let max_position_diameter = series.position_diameter[idx0..]
        .iter()
        .fold(0.0f64, |a, b| a.max(*b));
    let all_pass = checks.iter().all(|c| c.pass);

    Ok(VerdictReport {
        certificate: cert.clone(),
        checks,
        tolerance: tol,
        hull_tolerance: hull_tol,
        max_velocity_diameter,
        max_velocity_diameter_first_interval,
        max_position_diameter,
        lyapunov_rise_before_two_delays,
        refine,
        all_pass,
    })
}

/// Convenience: integrate, certify, and check in one call.
pub fn certify_and_check(config: &SystemConfig, history: &HistorySet) -> Result<(FlockingCertificate, VerdictReport)> {
    let cert = certify(config, history)?;
    let traj = integrate(config, history)?;
    let report = check_paper_inequalities(&traj, &cert)?;
    Ok((cert, report))
}
