//! Method-of-steps integration of the delayed system with fixed-step RK4
//! and cubic-Hermite dense output.
//!
//! The step divides the delay exactly, so every delayed lookup lands on a
//! completed step: stage times `t`, `t + h/2`, `t + h` need delayed states
//! at `t - delay`, `t + h/2 - delay`, `t + h - delay`, which are a stored
//! grid value, the midpoint of a completed segment, and another stored grid
//! value. Within the first delay interval the lookups hit the history
//! functions directly. Delayed lookups are resolved by integer segment
//! index, never by floating-point comparison, so grid alignment is exact.
//!
//! The solution is only piecewise smooth across multiples of the delay;
//! those points are grid-aligned by construction, so the scheme keeps its
//! classical order between them.

use crate::error::{Error, Result};
use crate::model::{hermite, rhs_velocity, AgentState, HistorySet, SystemConfig};
use crate::numeric::norm;

/// Samples per step used when bounding the initial speed for the
/// divergence guard and the diagnostics.
pub const DENSE_SAMPLES_PER_STEP: usize = 8;

/// A solved trajectory on `[-delay, horizon]`, queryable at any time.
#[derive(Debug, Clone)]
pub struct Trajectory {
    config: SystemConfig,
    history: HistorySet,
    /// Grid states at `t_k = k h`, `k = 0..=n_steps`, flat agent-major.
    positions: Vec<Vec<f64>>,
    velocities: Vec<Vec<f64>>,
    /// Velocity derivatives at the grid times (dense-output slopes).
    accelerations: Vec<Vec<f64>>,
    initial_speed_bound: f64,
}

/// Integrates the delayed system over the configured horizon.
///
/// Fails when config and history disagree on agent count, dimension, or
/// delay, and reports the first bad time when the state leaves the regime
/// the velocity bound guarantees (which signals an integrator bug, not
/// physics).
pub fn integrate(config: &SystemConfig, history: &HistorySet) -> Result<Trajectory> {
    if history.agent_count() != config.agent_count {
        return Err(Error::InvalidConfig(format!(
            "config has {} agents but history has {}",
            config.agent_count,
            history.agent_count()
        )));
    }
    if history.dim != config.dim {
        return Err(Error::DimensionMismatch {
            expected: config.dim,
            got: history.dim,
        });
    }
    if (history.delay - config.delay).abs() > 1e-12 * config.delay {
        return Err(Error::InvalidConfig(format!(
            "config delay {} differs from history delay {}",
            config.delay, history.delay
        )));
    }

    let n = config.agent_count;
    let dim = config.dim;
    let len = n * dim;
    let h = config.step();
    let m = config.step_divisor as isize;
    let n_steps = config.n_steps;
    let speed_bound = history.max_speed(DENSE_SAMPLES_PER_STEP * config.step_divisor + 1);
    let guard = 10.0 * speed_bound + 1.0;

    let mut positions = Vec::with_capacity(n_steps + 1);
    let mut velocities = Vec::with_capacity(n_steps + 1);
    let mut accelerations = Vec::with_capacity(n_steps + 1);

    let (x0, v0) = history.snapshot(0.0);
    positions.push(x0);
    velocities.push(v0);

    // delayed snapshot by segment index + in-segment fraction
    let mut dxs = vec![0.0; len];
    let mut dvs = vec![0.0; len];
    let delayed = |positions: &Vec<Vec<f64>>,
                   velocities: &Vec<Vec<f64>>,
                   accelerations: &Vec<Vec<f64>>,
                   seg: isize,
                   theta: f64,
                   xs: &mut [f64],
                   vs: &mut [f64]| {
        if seg < 0 || (seg == 0 && theta == 0.0) {
            let s = ((seg as f64) + theta) * h;
            for a in 0..n {
                history.position_into(a, s, &mut xs[a * dim..(a + 1) * dim]);
                history.velocity_into(a, s, &mut vs[a * dim..(a + 1) * dim]);
            }
        } else if theta == 0.0 {
            xs.copy_from_slice(&positions[seg as usize]);
            vs.copy_from_slice(&velocities[seg as usize]);
        } else {
            let j = seg as usize;
            for c in 0..len {
                xs[c] = hermite(
                    positions[j][c],
                    positions[j + 1][c],
                    h * velocities[j][c],
                    h * velocities[j + 1][c],
                    theta,
                );
                vs[c] = hermite(
                    velocities[j][c],
                    velocities[j + 1][c],
                    h * accelerations[j][c],
                    h * accelerations[j + 1][c],
                    theta,
                );
            }
        }
    };

    let rhs = |xs: &[f64], vs: &[f64], dxs: &[f64], dvs: &[f64], out: &mut [f64]| {
        rhs_velocity(&config.kernel, n, dim, xs, vs, dxs, dvs, out);
    };

    let mut a0 = vec![0.0; len];
    delayed(&positions, &velocities, &accelerations, -m, 0.0, &mut dxs, &mut dvs);
    rhs(&positions[0], &velocities[0], &dxs, &dvs, &mut a0);
    accelerations.push(a0);

    let mut k1v = vec![0.0; len];
    let mut k2v = vec![0.0; len];
    let mut k3v = vec![0.0; len];
    let mut k4v = vec![0.0; len];
    let mut xs = vec![0.0; len];
    let mut vs = vec![0.0; len];
    let mut dxs_mid = vec![0.0; len];
    let mut dvs_mid = vec![0.0; len];
    let mut dxs_end = vec![0.0; len];
    let mut dvs_end = vec![0.0; len];

    for k in 0..n_steps {
        let ki = k as isize;
        delayed(&positions, &velocities, &accelerations, ki - m, 0.5, &mut dxs_mid, &mut dvs_mid);
        delayed(&positions, &velocities, &accelerations, ki + 1 - m, 0.0, &mut dxs_end, &mut dvs_end);

        let xk = &positions[k];
        let vk = &velocities[k];
        // stage 1 slope is the stored grid acceleration
        k1v.copy_from_slice(&accelerations[k]);

        // stage 2 at t + h/2
        for c in 0..len {
            xs[c] = xk[c] + 0.5 * h * vk[c];
            vs[c] = vk[c] + 0.5 * h * k1v[c];
        }
        rhs(&xs, &vs, &dxs_mid, &dvs_mid, &mut k2v);
        let k2x_base: Vec<f64> = vs.clone();

        // stage 3 at t + h/2
        for c in 0..len {
            xs[c] = xk[c] + 0.5 * h * k2x_base[c];
            vs[c] = vk[c] + 0.5 * h * k2v[c];
        }
        rhs(&xs, &vs, &dxs_mid, &dvs_mid, &mut k3v);
        let k3x_base: Vec<f64> = vs.clone();

        // stage 4 at t + h
        for c in 0..len {
            xs[c] = xk[c] + h * k3x_base[c];
            vs[c] = vk[c] + h * k3v[c];
        }
        rhs(&xs, &vs, &dxs_end, &dvs_end, &mut k4v);
        let k4x_base: Vec<f64> = vs.clone();

        let mut xn = vec![0.0; len];
        let mut vn = vec![0.0; len];
        for c in 0..len {
            xn[c] = xk[c] + h / 6.0 * (vk[c] + 2.0 * k2x_base[c] + 2.0 * k3x_base[c] + k4x_base[c]);
            vn[c] = vk[c] + h / 6.0 * (k1v[c] + 2.0 * k2v[c] + 2.0 * k3v[c] + k4v[c]);
        }

        let t_next = (k + 1) as f64 * h;
        if xn.iter().chain(&vn).any(|x| !x.is_finite()) {
            return Err(Error::IntegrationFault {
                time: t_next,
                reason: "non-finite state".into(),
            });
        }
        for a in 0..n {
            let speed = norm(&vn[a * dim..(a + 1) * dim]);
            if speed > guard {
                return Err(Error::IntegrationFault {
                    time: t_next,
                    reason: format!(
                        "agent {a} speed {speed} exceeds guard {guard} (initial bound {speed_bound})"
                    ),
                });
            }
        }

        let mut an = vec![0.0; len];
        rhs(&xn, &vn, &dxs_end, &dvs_end, &mut an);
        positions.push(xn);
        velocities.push(vn);
        accelerations.push(an);
    }

    Ok(Trajectory {
        config: config.clone(),
        history: history.clone(),
        positions,
        velocities,
        accelerations,
        initial_speed_bound: speed_bound,
    })
}

impl Trajectory {
    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn history(&self) -> &HistorySet {
        &self.history
    }

    pub fn step(&self) -> f64 {
        self.config.step()
    }

    pub fn n_steps(&self) -> usize {
        self.config.n_steps
    }

    pub fn delay(&self) -> f64 {
        self.config.delay
    }

    pub fn horizon(&self) -> f64 {
        self.config.horizon()
    }

    /// Maximum history speed, cached from construction.
    pub fn initial_speed_bound(&self) -> f64 {
        self.initial_speed_bound
    }

    /// Stored grid state at step index `k` (positions, velocities).
    pub fn grid_state(&self, k: usize) -> (&[f64], &[f64]) {
        (&self.positions[k], &self.velocities[k])
    }

    /// Snapshot at segment index plus in-segment fraction, written to `xs`
    /// and `vs` (flat agent-major).
    ///
    /// Negative segments address the history region; `theta` is in
    /// `[0, 1]`. Index-based addressing keeps grid alignment exact, which
    /// the diagnostics rely on.
    pub fn sample_indexed_into(&self, segment: isize, theta: f64, xs: &mut [f64], vs: &mut [f64]) {
        let n = self.config.agent_count;
        let dim = self.config.dim;
        let h = self.step();
        if segment < 0 || (theta == 0.0 && segment == 0) {
            let s = (segment as f64 + theta) * h;
            for a in 0..n {
                self.history.position_into(a, s, &mut xs[a * dim..(a + 1) * dim]);
                self.history.velocity_into(a, s, &mut vs[a * dim..(a + 1) * dim]);
            }
            return;
        }
        let (seg, theta) = if theta == 0.0 {
            (segment as usize - 1, 1.0)
        } else {
            (segment as usize, theta)
        };
        debug_assert!(seg < self.config.n_steps);
        let len = n * dim;
        for c in 0..len {
            xs[c] = hermite(
                self.positions[seg][c],
                self.positions[seg + 1][c],
                h * self.velocities[seg][c],
                h * self.velocities[seg + 1][c],
                theta,
            );
            vs[c] = hermite(
                self.velocities[seg][c],
                self.velocities[seg + 1][c],
                h * self.accelerations[seg][c],
                h * self.accelerations[seg + 1][c],
                theta,
            );
        }
    }

    /// Snapshot at an arbitrary time in `[-delay, horizon]`.
    pub fn sample_into(&self, t: f64, xs: &mut [f64], vs: &mut [f64]) -> Result<()> {
        let lo = -self.delay();
        let hi = self.horizon();
        if !(t >= lo - 1e-9 && t <= hi + 1e-9) {
            return Err(Error::OutOfDomain { t, lo, hi });
        }
        if t <= 0.0 {
            let n = self.config.agent_count;
            let dim = self.config.dim;
            let s = t.clamp(lo, 0.0);
            for a in 0..n {
                self.history.position_into(a, s, &mut xs[a * dim..(a + 1) * dim]);
                self.history.velocity_into(a, s, &mut vs[a * dim..(a + 1) * dim]);
            }
            return Ok(());
        }
        let u = t / self.step();
        let mut seg = u.floor() as usize;
        let mut theta = u - seg as f64;
        // snap to the grid so queries at stored times return stored values
        if theta > 1.0 - 1e-9 {
            seg += 1;
            theta = 0.0;
        }
        if seg >= self.config.n_steps {
            seg = self.config.n_steps;
            theta = 0.0;
        }
        if theta == 0.0 {
            xs.copy_from_slice(&self.positions[seg]);
            vs.copy_from_slice(&self.velocities[seg]);
        } else {
            self.sample_indexed_into(seg as isize, theta, xs, vs);
        }
        Ok(())
    }

    /// Interpolated state of one agent at `t` in `[-delay, horizon]`,
    /// matching grid values exactly at grid times.
    pub fn state_at(&self, agent: usize, t: f64) -> Result<AgentState> {
        let n = self.config.agent_count;
        let dim = self.config.dim;
        assert!(agent < n, "agent index {agent} out of range");
        let mut xs = vec![0.0; n * dim];
        let mut vs = vec![0.0; n * dim];
        self.sample_into(t, &mut xs, &mut vs)?;
        Ok(AgentState {
            position: xs[agent * dim..(agent + 1) * dim].to_vec(),
            velocity: vs[agent * dim..(agent + 1) * dim].to_vec(),
        })
    }
}

/// Result of a self-convergence study.
#[derive(Debug, Clone)]
pub struct OrderEstimate {
    /// Mean of the two successive log2 error ratios; NaN when degenerate.
    pub observed_order: f64,
    /// log2(e_h / e_{h/2}) and log2(e_{h/2} / e_{h/4}).
    pub step_orders: [f64; 2],
    /// Errors of the h, h/2, h/4 runs against the h/8 reference.
    pub errors: [f64; 3],
    /// Set when the errors are all numerically zero (nothing to compare).
    pub degenerate: bool,
}

/// Observed convergence order at `probe_time` by Richardson comparison of
/// runs at `h`, `h/2`, `h/4` against an `h/8` reference.
pub fn estimate_order(
    config: &SystemConfig,
    history: &HistorySet,
    probe_time: f64,
) -> Result<OrderEstimate> {
    if !(probe_time > 0.0 && probe_time <= config.horizon() + 1e-9) {
        return Err(Error::OutOfDomain {
            t: probe_time,
            lo: 0.0,
            hi: config.horizon(),
        });
    }
    let mut states: Vec<Vec<f64>> = Vec::with_capacity(4);
    for refine in [1usize, 2, 4, 8] {
        let cfg = config.with_step_divisor(config.step_divisor * refine)?;
        let traj = integrate(&cfg, history)?;
        let len = cfg.agent_count * cfg.dim;
        let mut xs = vec![0.0; len];
        let mut vs = vec![0.0; len];
        traj.sample_into(probe_time, &mut xs, &mut vs)?;
        xs.extend_from_slice(&vs);
        states.push(xs);
    }
    let reference = states.pop().unwrap();
    let scale = norm(&reference).max(1.0);
    let errors: Vec<f64> = states
        .iter()
        .map(|s| {
            s.iter()
                .zip(&reference)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let degenerate = errors.iter().all(|e| *e <= 1e-13 * scale);
    let step_orders = [
        (errors[0] / errors[1]).log2(),
        (errors[1] / errors[2]).log2(),
    ];
    Ok(OrderEstimate {
        observed_order: if degenerate {
            f64::NAN
        } else {
            0.5 * (step_orders[0] + step_orders[1])
        },
        step_orders,
        errors: [errors[0], errors[1], errors[2]],
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use crate::model::AgentHistory;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn example2_kernel() -> KernelSpec {
        KernelSpec::power_law(1.0, 1.0, 0.5).unwrap()
    }

    fn consensus_setup(v: f64) -> (SystemConfig, HistorySet) {
        let config = SystemConfig::new(2, 1, 1.0, example2_kernel(), 64, 192).unwrap();
        let history = HistorySet::new(
            1.0,
            1,
            vec![
                AgentHistory::Constant { position: vec![0.0], velocity: vec![v] },
                AgentHistory::Constant { position: vec![3.0], velocity: vec![v] },
            ],
        )
        .unwrap();
        (config, history)
    }

    #[test]
    fn consensus_is_an_equilibrium() {
        let (config, history) = consensus_setup(0.75);
        let traj = integrate(&config, &history).unwrap();
        let h = config.step();
        for k in 0..=config.n_steps {
            let (xs, vs) = traj.grid_state(k);
            let t = k as f64 * h;
            assert_abs_diff_eq!(vs[0], 0.75, epsilon = 1e-10);
            assert_abs_diff_eq!(vs[1], 0.75, epsilon = 1e-10);
            assert_abs_diff_eq!(xs[0], 0.75 * t, epsilon = 1e-10);
            assert_abs_diff_eq!(xs[1], 3.0 + 0.75 * t, epsilon = 1e-10);
        }
    }

    #[test]
    fn zero_velocities_freeze_positions() {
        let (config, history) = consensus_setup(0.0);
        let traj = integrate(&config, &history).unwrap();
        for k in 0..=config.n_steps {
            let (xs, vs) = traj.grid_state(k);
            assert_eq!(vs, &[0.0, 0.0]);
            assert_eq!(xs, &[0.0, 3.0]);
        }
    }

    #[test]
    fn dense_output_midpoint_on_consensus() {
        let (config, history) = consensus_setup(1.5);
        let traj = integrate(&config, &history).unwrap();
        let state = traj.state_at(0, 10.5 * config.step()).unwrap();
        assert_abs_diff_eq!(state.velocity[0], 1.5, epsilon = 1e-10);
    }

    #[test]
    fn dense_output_matches_grid_and_history() {
        let config = SystemConfig::new(2, 1, 1.0, example2_kernel(), 64, 128).unwrap();
        let history = HistorySet::new(
            1.0,
            1,
            vec![
                AgentHistory::Constant { position: vec![0.0], velocity: vec![1.0] },
                AgentHistory::Constant { position: vec![2.0], velocity: vec![-1.0] },
            ],
        )
        .unwrap();
        let traj = integrate(&config, &history).unwrap();
        // stored grid value exactly
        let k = 37;
        let t = k as f64 * config.step();
        let (xs, vs) = traj.grid_state(k);
        let state = traj.state_at(1, t).unwrap();
        assert_eq!(state.position[0], xs[1]);
        assert_eq!(state.velocity[0], vs[1]);
        // history pass-through
        let state = traj.state_at(0, -0.37).unwrap();
        assert_eq!(state.position[0], 0.0);
        assert_eq!(state.velocity[0], 1.0);
    }

    #[test]
    fn dense_output_is_continuous_at_grid_points() {
        let config = SystemConfig::new(2, 1, 1.0, example2_kernel(), 64, 128).unwrap();
        let history = HistorySet::new(
            1.0,
            1,
            vec![
                AgentHistory::Constant { position: vec![0.0], velocity: vec![1.0] },
                AgentHistory::Constant { position: vec![2.0], velocity: vec![-1.0] },
            ],
        )
        .unwrap();
        let traj = integrate(&config, &history).unwrap();
        let mut left = [0.0; 2];
        let mut right = [0.0; 2];
        let mut vl = [0.0; 2];
        let mut vr = [0.0; 2];
        for k in 1..config.n_steps {
            traj.sample_indexed_into(k as isize - 1, 1.0, &mut left, &mut vl);
            traj.sample_indexed_into(k as isize, 0.0, &mut right, &mut vr);
            for c in 0..2 {
                assert_relative_eq!(left[c], right[c], max_relative = 1e-12, epsilon = 1e-12);
                assert_relative_eq!(vl[c], vr[c], max_relative = 1e-12, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn position_channel_integrates_dense_velocity() {
        let config = SystemConfig::new(2, 1, 1.0, example2_kernel(), 64, 128).unwrap();
        let history = HistorySet::new(
            1.0,
            1,
            vec![
                AgentHistory::Constant { position: vec![0.0], velocity: vec![1.0] },
                AgentHistory::Constant { position: vec![2.0], velocity: vec![-1.0] },
            ],
        )
        .unwrap();
        let traj = integrate(&config, &history).unwrap();
        let mut xs = [0.0; 2];
        let mut vs = [0.0; 2];
        for k in [3usize, 64, 100] {
            // Simpson over 8 dense panels of the velocity interpolant
            let mut samples = Vec::new();
            for i in 0..=8 {
                traj.sample_indexed_into(k as isize, i as f64 / 8.0, &mut xs, &mut vs);
                samples.push(vs[0]);
            }
            let dx = config.step() / 8.0;
            let integral = (0..4).fold(0.0, |acc, i| {
                acc + dx / 3.0 * (samples[2 * i] + 4.0 * samples[2 * i + 1] + samples[2 * i + 2])
            });
            let (x0, _) = traj.grid_state(k);
            let (x1, _) = traj.grid_state(k + 1);
            assert_abs_diff_eq!(x1[0] - x0[0], integral, epsilon = 1e-9);
        }
    }

    #[test]
    fn identical_inputs_give_bit_identical_trajectories() {
        let config = SystemConfig::new(3, 2, 0.5, example2_kernel(), 32, 96).unwrap();
        let history = HistorySet::new(
            0.5,
            2,
            vec![
                AgentHistory::Constant { position: vec![0.0, 0.0], velocity: vec![1.0, 0.0] },
                AgentHistory::Constant { position: vec![1.0, 1.0], velocity: vec![0.0, 1.0] },
                AgentHistory::Constant { position: vec![-1.0, 2.0], velocity: vec![0.5, -0.5] },
            ],
        )
        .unwrap();
        let a = integrate(&config, &history).unwrap();
        let b = integrate(&config, &history).unwrap();
        for k in 0..=config.n_steps {
            assert_eq!(a.grid_state(k), b.grid_state(k));
        }
    }

    #[test]
    fn mismatched_history_is_rejected() {
        let (config, _) = consensus_setup(1.0);
        let history = HistorySet::new(
            1.0,
            2,
            vec![
                AgentHistory::Constant { position: vec![0.0, 0.0], velocity: vec![0.0, 0.0] },
                AgentHistory::Constant { position: vec![1.0, 0.0], velocity: vec![0.0, 0.0] },
            ],
        )
        .unwrap();
        assert!(matches!(
            integrate(&config, &history),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn non_finite_states_fault_with_first_bad_time() {
        let config = SystemConfig::new(2, 1, 1.0, KernelSpec::power_law(1.0, 1.0, 0.0).unwrap(), 4, 8).unwrap();
        let history = HistorySet::new(
            1.0,
            1,
            vec![
                AgentHistory::Constant { position: vec![0.0], velocity: vec![1e308] },
                AgentHistory::Constant { position: vec![1.0], velocity: vec![-1e308] },
            ],
        )
        .unwrap();
        match integrate(&config, &history) {
            Err(Error::IntegrationFault { time, .. }) => assert!(time > 0.0),
            other => panic!("expected integration fault, got {other:?}"),
        }
    }

    #[test]
    fn order_estimate_flags_consensus_as_degenerate() {
        let (config, history) = consensus_setup(1.0);
        let est = estimate_order(&config, &history, 1.0).unwrap();
        assert!(est.degenerate);
        assert!(est.observed_order.is_nan());
    }

    #[test]
    fn order_estimate_rejects_probe_outside_horizon() {
        let (config, history) = consensus_setup(1.0);
        assert!(estimate_order(&config, &history, 100.0).is_err());
    }
}
