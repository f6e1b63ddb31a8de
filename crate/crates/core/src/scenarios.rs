//! Built-in experiments and seeded random instances.
//!
//! Three closed-form setups exercise the characteristic regimes: a
//! two-agent plateau where the velocity diameter stays exactly constant
//! for almost a whole delay, a two-agent run that starts with zero
//! velocity diameter yet grows a substantial gap within one delay, and a
//! divergent two-agent escape under a fast-decaying kernel. Random
//! instances draw constant histories from a seeded, portable generator so
//! identical seeds reproduce bit-identical scenarios everywhere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::model::{AgentHistory, HistorySet, PiecewisePoly, SystemConfig};

/// Name of the only supported pseudo-random generator; recorded in the
/// serialized form so scenarios reproduce across implementations.
pub const RNG_ALGORITHM: &str = "chacha8";

fn default_rng_name() -> String {
    RNG_ALGORITHM.to_string()
}

/// Declarative scenario description; the config-file schema for the
/// `scenario` object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSpec {
    /// Two agents in one dimension whose velocity histories are plateaus
    /// glued by a linear ramp of width `epsilon`; the velocity diameter
    /// stays exactly 1 on `[0, tau - epsilon]`. Positions are anchored at
    /// 0 and 10 (the claim is kernel-independent) and the kernel defaults
    /// to the inverse-square-root one.
    Example1 { tau: f64, epsilon: f64 },
    /// Two agents in one dimension with identical parabolic position
    /// histories one unit apart, delay 1, and the inverse-square-root
    /// kernel; the velocity diameter starts at zero and exceeds a fifth
    /// within one delay.
    Example2,
    /// Two agents in one dimension receding from each other at unit speed
    /// under a kernel with `beta > 1/2`; the velocity gap never drops
    /// below 1, so no alignment occurs.
    Noflock { tau: f64, beta: f64 },
    /// Constant histories with positions and velocities drawn uniformly
    /// from centered cubes of the given side lengths.
    Random {
        seed: u64,
        agents: usize,
        dim: usize,
        tau: f64,
        kernel: KernelSpec,
        pos_spread: f64,
        vel_spread: f64,
        #[serde(default = "default_rng_name")]
        rng: String,
    },
    /// Histories given directly as samples on the uniform grid
    /// `{-tau, ..., 0}`; the row count must equal the step divisor plus
    /// one. Indexing is `[agent][grid time][component]`.
    Inline {
        tau: f64,
        kernel: KernelSpec,
        positions: Vec<Vec<Vec<f64>>>,
        velocities: Vec<Vec<Vec<f64>>>,
    },
}

impl ScenarioSpec {
    pub fn example1(tau: f64, epsilon: f64) -> Result<Self> {
        let s = ScenarioSpec::Example1 { tau, epsilon };
        s.validate()?;
        Ok(s)
    }

    pub fn noflock(tau: f64, beta: f64) -> Result<Self> {
        let s = ScenarioSpec::Noflock { tau, beta };
        s.validate()?;
        Ok(s)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn random(
        seed: u64,
        agents: usize,
        dim: usize,
        tau: f64,
        kernel: KernelSpec,
        pos_spread: f64,
        vel_spread: f64,
    ) -> Result<Self> {
        let s = ScenarioSpec::Random {
            seed,
            agents,
            dim,
            tau,
            kernel,
            pos_spread,
            vel_spread,
            rng: default_rng_name(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScenarioSpec::Example1 { tau, epsilon } => {
                if !(tau.is_finite() && *tau > 0.0) {
                    return Err(Error::InvalidConfig(format!("delay must be positive, got {tau}")));
                }
                if !(epsilon.is_finite() && *epsilon > 0.0 && epsilon < tau) {
                    return Err(Error::InvalidConfig(format!(
                        "epsilon must lie strictly between 0 and the delay, got {epsilon}"
                    )));
                }
                Ok(())
            }
            ScenarioSpec::Example2 => Ok(()),
            ScenarioSpec::Noflock { tau, beta } => {
                if !(tau.is_finite() && *tau > 0.0) {
                    return Err(Error::InvalidConfig(format!("delay must be positive, got {tau}")));
                }
                if !(beta.is_finite() && *beta > 0.5) {
                    return Err(Error::InvalidConfig(format!(
                        "no-flock scenario needs beta > 1/2, got {beta}"
                    )));
                }
                if !noflock_anchor(*tau, *beta).is_finite() {
                    return Err(Error::InvalidConfig(format!(
                        "no-flock anchor overflows for tau = {tau}, beta = {beta}"
                    )));
                }
                Ok(())
            }
            ScenarioSpec::Random {
                agents,
                dim,
                tau,
                kernel,
                pos_spread,
                vel_spread,
                rng,
                ..
            } => {
                if *agents < 2 {
                    return Err(Error::InvalidConfig("need at least 2 agents".into()));
                }
                if *dim == 0 {
                    return Err(Error::InvalidConfig("dimension must be at least 1".into()));
                }
                if !(tau.is_finite() && *tau > 0.0) {
                    return Err(Error::InvalidConfig(format!("delay must be positive, got {tau}")));
                }
                kernel.validate()?;
                for (name, s) in [("pos_spread", pos_spread), ("vel_spread", vel_spread)] {
                    if !(s.is_finite() && *s >= 0.0) {
                        return Err(Error::InvalidConfig(format!(
                            "{name} must be non-negative, got {s}"
                        )));
                    }
                }
                if rng != RNG_ALGORITHM {
                    return Err(Error::InvalidConfig(format!(
                        "unsupported rng {rng:?}; only {RNG_ALGORITHM:?} is available"
                    )));
                }
                Ok(())
            }
            ScenarioSpec::Inline {
                tau,
                kernel,
                positions,
                velocities,
            } => {
                if !(tau.is_finite() && *tau > 0.0) {
                    return Err(Error::InvalidConfig(format!("delay must be positive, got {tau}")));
                }
                kernel.validate()?;
                if positions.len() < 2 || positions.len() != velocities.len() {
                    return Err(Error::InvalidConfig(
                        "inline histories need matching positions/velocities for at least 2 agents"
                            .into(),
                    ));
                }
                let rows = positions[0].len();
                let dim = positions[0].first().map_or(0, Vec::len);
                if rows < 2 || dim == 0 {
                    return Err(Error::InvalidConfig(
                        "inline histories need at least 2 grid rows and 1 component".into(),
                    ));
                }
                for table in positions.iter().chain(velocities) {
                    if table.len() != rows || table.iter().any(|row| row.len() != dim) {
                        return Err(Error::InvalidConfig(
                            "inline history tables must share one grid and dimension".into(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    /// The scenario's delay.
    pub fn tau(&self) -> f64 {
        match self {
            ScenarioSpec::Example1 { tau, .. }
            | ScenarioSpec::Noflock { tau, .. }
            | ScenarioSpec::Random { tau, .. }
            | ScenarioSpec::Inline { tau, .. } => *tau,
            ScenarioSpec::Example2 => 1.0,
        }
    }

    /// The scenario with the power-law exponent replaced, for sweeps.
    ///
    /// Only scenarios whose kernel is free (random, inline) or whose
    /// defining parameter is the exponent itself (no-flock) support this.
    pub fn with_beta(&self, beta: f64) -> Result<ScenarioSpec> {
        let swap = |kernel: &KernelSpec| -> Result<KernelSpec> {
            match kernel {
                KernelSpec::PowerLaw { amplitude, sigma, .. } => {
                    KernelSpec::power_law(*amplitude, *sigma, beta)
                }
                KernelSpec::Tabulated { .. } => Err(Error::InvalidConfig(
                    "sweep requires a power-law kernel".into(),
                )),
            }
        };
        let spec = match self {
            ScenarioSpec::Noflock { tau, .. } => ScenarioSpec::Noflock { tau: *tau, beta },
            ScenarioSpec::Random {
                seed,
                agents,
                dim,
                tau,
                kernel,
                pos_spread,
                vel_spread,
                rng,
            } => ScenarioSpec::Random {
                seed: *seed,
                agents: *agents,
                dim: *dim,
                tau: *tau,
                kernel: swap(kernel)?,
                pos_spread: *pos_spread,
                vel_spread: *vel_spread,
                rng: rng.clone(),
            },
            ScenarioSpec::Inline {
                tau,
                kernel,
                positions,
                velocities,
            } => ScenarioSpec::Inline {
                tau: *tau,
                kernel: swap(kernel)?,
                positions: positions.clone(),
                velocities: velocities.clone(),
            },
            ScenarioSpec::Example1 { .. } | ScenarioSpec::Example2 => {
                return Err(Error::InvalidConfig(
                    "this scenario pins its kernel; sweeping beta is not meaningful".into(),
                ))
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds the system and history for a grid of `step_divisor` steps
    /// per delay, covering at least `horizon` (rounded up to a whole
    /// step).
    pub fn build(&self, step_divisor: usize, horizon: f64) -> Result<(SystemConfig, HistorySet)> {
        self.validate()?;
        if step_divisor == 0 {
            return Err(Error::InvalidConfig("step divisor must be at least 1".into()));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let tau = self.tau();
        let h = tau / step_divisor as f64;
        let n_steps = ((horizon / h - 1e-9).ceil() as usize).max(step_divisor);

        let (kernel, history) = match self {
            ScenarioSpec::Example1 { tau, epsilon } => {
                (example2_kernel(), example1_history(*tau, *epsilon))
            }
            ScenarioSpec::Example2 => (example2_kernel(), example2_history()),
            ScenarioSpec::Noflock { tau, beta } => (
                KernelSpec::power_law(1.0, 1.0, *beta)?,
                noflock_history(*tau, *beta),
            ),
            ScenarioSpec::Random {
                seed,
                agents,
                dim,
                tau,
                kernel,
                pos_spread,
                vel_spread,
                ..
            } => (
                kernel.clone(),
                random_history(*seed, *agents, *dim, *tau, *pos_spread, *vel_spread)?,
            ),
            ScenarioSpec::Inline {
                tau,
                kernel,
                positions,
                velocities,
            } => {
                let rows = positions[0].len();
                if rows != step_divisor + 1 {
                    return Err(Error::InvalidConfig(format!(
                        "inline histories have {rows} grid rows but the step divisor {step_divisor} needs {}",
                        step_divisor + 1
                    )));
                }
                let dim = positions[0][0].len();
                let agents = positions
                    .iter()
                    .zip(velocities)
                    .map(|(p, v)| AgentHistory::Sampled {
                        positions: p.clone(),
                        velocities: v.clone(),
                    })
                    .collect();
                (kernel.clone(), HistorySet::new(*tau, dim, agents)?)
            }
        };

        let config = SystemConfig::new(
            history.agent_count(),
            history.dim,
            tau,
            kernel,
            step_divisor,
            n_steps,
        )?;
        Ok((config, history))
    }
}

fn example2_kernel() -> KernelSpec {
    KernelSpec::PowerLaw {
        amplitude: 1.0,
        sigma: 1.0,
        beta: 0.5,
    }
}

fn example1_history(tau: f64, eps: f64) -> HistorySet {
    // velocities: agent a rides a unit plateau and ramps down to 0 over
    // the last eps; agent b mirrors it, ramping 0 -> 1. Positions are the
    // antiderivatives anchored at x_a(-tau) = 0 and x_b(-tau) = 10.
    let breaks = vec![-tau, -eps, 0.0];
    let v_a = PiecewisePoly {
        breakpoints: breaks.clone(),
        pieces: vec![vec![1.0], vec![0.0, -1.0 / eps]],
    };
    let v_b = PiecewisePoly {
        breakpoints: breaks.clone(),
        pieces: vec![vec![0.0], vec![1.0, 1.0 / eps]],
    };
    let x_a = PiecewisePoly {
        breakpoints: breaks.clone(),
        pieces: vec![
            vec![tau, 1.0],
            vec![tau - 0.5 * eps, 0.0, -0.5 / eps],
        ],
    };
    let x_b = PiecewisePoly {
        breakpoints: breaks,
        pieces: vec![
            vec![10.0],
            vec![10.0 + 0.5 * eps, 1.0, 0.5 / eps],
        ],
    };
    HistorySet::new(
        tau,
        1,
        vec![
            AgentHistory::Piecewise { position: vec![x_a], velocity: vec![v_a] },
            AgentHistory::Piecewise { position: vec![x_b], velocity: vec![v_b] },
        ],
    )
    .expect("closed-form history is valid")
}

fn example2_history() -> HistorySet {
    // x_a(s) = 1 + (1 + s)^2, x_b(s) = (1 + s)^2, both velocities 2(1 + s)
    let v = PiecewisePoly::single(-1.0, vec![2.0, 2.0]);
    let x_a = PiecewisePoly::single(-1.0, vec![2.0, 2.0, 1.0]);
    let x_b = PiecewisePoly::single(-1.0, vec![1.0, 2.0, 1.0]);
    HistorySet::new(
        1.0,
        1,
        vec![
            AgentHistory::Piecewise { position: vec![x_a], velocity: vec![v.clone()] },
            AgentHistory::Piecewise { position: vec![x_b], velocity: vec![v] },
        ],
    )
    .expect("closed-form history is valid")
}

fn noflock_anchor(tau: f64, beta: f64) -> f64 {
    tau.powf(1.0 / (2.0 * beta))
        + 2.0 * tau
        + (3.0 * 2f64.powf(beta) / (2.0 * beta - 1.0)).powf(1.0 / (2.0 * beta - 1.0))
}

fn noflock_history(tau: f64, beta: f64) -> HistorySet {
    // x_a(s) = s + anchor moving right at unit speed, x_b(s) = -s moving
    // left at unit speed
    let anchor = noflock_anchor(tau, beta);
    let x_a = PiecewisePoly::single(-tau, vec![anchor, 1.0]);
    let x_b = PiecewisePoly::single(-tau, vec![0.0, -1.0]);
    HistorySet::new(
        tau,
        1,
        vec![
            AgentHistory::Piecewise {
                position: vec![x_a],
                velocity: vec![PiecewisePoly::constant(-tau, 1.0)],
            },
            AgentHistory::Piecewise {
                position: vec![x_b],
                velocity: vec![PiecewisePoly::constant(-tau, -1.0)],
            },
        ],
    )
    .expect("closed-form history is valid")
}

fn random_history(
    seed: u64,
    agents: usize,
    dim: usize,
    tau: f64,
    pos_spread: f64,
    vel_spread: f64,
) -> Result<HistorySet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |spread: f64| -> f64 {
        if spread == 0.0 {
            0.0
        } else {
            rng.gen_range(-0.5 * spread..0.5 * spread)
        }
    };
    let mut histories = Vec::with_capacity(agents);
    for _ in 0..agents {
        // draw order: position components first, then velocity components
        let position: Vec<f64> = (0..dim).map(|_| draw(pos_spread)).collect();
        let velocity: Vec<f64> = (0..dim).map(|_| draw(vel_spread)).collect();
        histories.push(AgentHistory::Constant { position, velocity });
    }
    HistorySet::new(tau, dim, histories)
}

/// The plateau experiment on the default grid (64 steps per delay, two
/// delays of horizon).
pub fn scenario_example1(tau: f64, epsilon: f64) -> Result<(SystemConfig, HistorySet)> {
    ScenarioSpec::example1(tau, epsilon)?.build(64, 2.0 * tau)
}

/// The zero-start experiment on the default grid (64 steps per delay,
/// thirty delays of horizon).
pub fn scenario_example2() -> (SystemConfig, HistorySet) {
    ScenarioSpec::Example2
        .build(64, 30.0)
        .expect("built-in scenario is valid")
}

/// The divergent experiment on the default grid (64 steps per delay,
/// fifty delays of horizon).
pub fn scenario_noflock(tau: f64, beta: f64) -> Result<(SystemConfig, HistorySet)> {
    ScenarioSpec::noflock(tau, beta)?.build(64, 50.0 * tau)
}

/// A seeded random instance on the default grid (64 steps per delay,
/// thirty delays of horizon).
#[allow(clippy::too_many_arguments)]
pub fn scenario_random(
    seed: u64,
    agents: usize,
    dim: usize,
    tau: f64,
    kernel: KernelSpec,
    pos_spread: f64,
    vel_spread: f64,
) -> Result<(SystemConfig, HistorySet)> {
    ScenarioSpec::random(seed, agents, dim, tau, kernel, pos_spread, vel_spread)?
        .build(64, 30.0 * tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn example1_matches_printed_formulas() {
        let tau = 1.0;
        let eps = 0.2;
        let (_, history) = scenario_example1(tau, eps).unwrap();
        let mut v = [0.0];
        // ten spot checks across both pieces of the velocity histories
        for i in 0..10 {
            let s = -tau + tau * i as f64 / 9.0;
            let expect_a = if s <= -eps { 1.0 } else { -s / eps };
            let expect_b = if s <= -eps { 0.0 } else { 1.0 + s / eps };
            history.velocity_into(0, s, &mut v);
            assert_abs_diff_eq!(v[0], expect_a, epsilon = 1e-14);
            history.velocity_into(1, s, &mut v);
            assert_abs_diff_eq!(v[0], expect_b, epsilon = 1e-14);
        }
        // boundary values printed in the construction
        history.velocity_into(0, 0.0, &mut v);
        assert_eq!(v[0], 0.0);
        history.velocity_into(1, 0.0, &mut v);
        assert_eq!(v[0], 1.0);
        // anchors and continuity of the antiderivatives
        let mut x = [0.0];
        history.position_into(0, -tau, &mut x);
        assert_eq!(x[0], 0.0);
        history.position_into(1, -tau, &mut x);
        assert_eq!(x[0], 10.0);
        history.position_into(0, -eps - 1e-12, &mut x);
        let left = x[0];
        history.position_into(0, -eps + 1e-12, &mut x);
        assert_abs_diff_eq!(left, x[0], epsilon = 1e-9);
    }

    #[test]
    fn example1_rejects_bad_ramp() {
        assert!(ScenarioSpec::example1(1.0, 1.0).is_err());
        assert!(ScenarioSpec::example1(1.0, 0.0).is_err());
    }

    #[test]
    fn example2_matches_printed_formulas() {
        let (config, history) = scenario_example2();
        assert_eq!(config.delay, 1.0);
        let mut out = [0.0];
        for i in 0..10 {
            let s = -1.0 + i as f64 / 9.0;
            history.position_into(0, s, &mut out);
            assert_relative_eq!(out[0], 1.0 + (1.0 + s) * (1.0 + s), epsilon = 1e-14);
            history.position_into(1, s, &mut out);
            assert_relative_eq!(out[0], (1.0 + s) * (1.0 + s), epsilon = 1e-14);
            history.velocity_into(0, s, &mut out);
            assert_relative_eq!(out[0], 2.0 * (1.0 + s), epsilon = 1e-14);
            history.velocity_into(1, s, &mut out);
            assert_relative_eq!(out[0], 2.0 * (1.0 + s), epsilon = 1e-14);
        }
        // velocity diameter vanishes on the whole history interval
        assert_eq!(crate::diagnostics::initial_speed_bound(&history), 2.0);
    }

    #[test]
    fn noflock_matches_printed_formulas() {
        for (tau, beta) in [(1.0, 0.75), (0.5, 0.6), (2.0, 1.5)] {
            let (_, history) = scenario_noflock(tau, beta).unwrap();
            let mut va = [0.0];
            let mut vb = [0.0];
            history.velocity_into(0, 0.0, &mut va);
            history.velocity_into(1, 0.0, &mut vb);
            // relative velocity at time zero is 2
            assert_eq!(va[0] - vb[0], 2.0);
            // both speeds are identically 1
            assert_eq!(history.max_speed(100), 1.0);
            // initial separation clears the escape threshold
            let mut xa = [0.0];
            let mut xb = [0.0];
            history.position_into(0, -tau, &mut xa);
            history.position_into(1, -tau, &mut xb);
            assert!(xa[0] - xb[0] > tau.powf(1.0 / (2.0 * beta)) + tau);
        }
    }

    #[test]
    fn noflock_rejects_small_beta_and_overflow() {
        assert!(ScenarioSpec::noflock(1.0, 0.5).is_err());
        assert!(ScenarioSpec::noflock(1.0, 0.5001).is_err());
    }

    #[test]
    fn random_scenarios_are_deterministic() {
        let kernel = example2_kernel();
        let (_, a) = scenario_random(42, 5, 2, 1.0, kernel.clone(), 1.0, 0.5).unwrap();
        let (_, b) = scenario_random(42, 5, 2, 1.0, kernel.clone(), 1.0, 0.5).unwrap();
        assert_eq!(a, b);
        let (_, c) = scenario_random(43, 5, 2, 1.0, kernel, 1.0, 0.5).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_velocity_spread_gives_consensus() {
        let kernel = example2_kernel();
        let (config, history) = scenario_random(7, 4, 2, 1.0, kernel, 2.0, 0.0).unwrap();
        let traj = crate::integrator::integrate(&config, &history).unwrap();
        let dv = crate::diagnostics::diameter_velocities(&traj, config.horizon()).unwrap();
        assert_eq!(dv, 0.0);
    }

    #[test]
    fn example1_velocity_plateau_survives_simulation() {
        let (config, history) = scenario_example1(1.0, 0.2).unwrap();
        let traj = crate::integrator::integrate(&config, &history).unwrap();
        let h = config.step();
        for k in 0..=config.n_steps {
            let t = k as f64 * h;
            if t > 0.8 {
                break;
            }
            let (_, vs) = traj.grid_state(k);
            assert_abs_diff_eq!(vs[0], 0.0, epsilon = 1e-8);
            assert_abs_diff_eq!(vs[1], 1.0, epsilon = 1e-8);
            let dv = crate::diagnostics::diameter_velocities(&traj, t).unwrap();
            assert_abs_diff_eq!(dv, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn example1_interval_diameters_stay_at_one() {
        // velocities span {0, 1} on both the history interval and the
        // first computed interval, so both interval diameters equal 1
        let (config, history) = scenario_example1(1.0, 0.2).unwrap();
        let traj = crate::integrator::integrate(&config, &history).unwrap();
        let i0 = crate::diagnostics::interval_diameter(&traj, 0).unwrap();
        let i1 = crate::diagnostics::interval_diameter(&traj, 1).unwrap();
        assert_abs_diff_eq!(i0, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(i1, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn example2_gap_opens_within_one_delay() {
        let (config, history) = scenario_example2();
        let config = config.with_horizon(2.0).unwrap();
        let traj = crate::integrator::integrate(&config, &history).unwrap();
        // zero diameter on the history interval
        for i in 0..=8 {
            let s = -1.0 + i as f64 / 8.0;
            let dv = crate::diagnostics::diameter_velocities(&traj, s).unwrap();
            assert_abs_diff_eq!(dv, 0.0, epsilon = 1e-14);
        }
        // initial interval diameter: grid oracle over the closed forms
        // max |2(1+s) - 2(1+t)| over the square is 2
        let i0 = crate::diagnostics::interval_diameter(&traj, 0).unwrap();
        assert_relative_eq!(i0, 2.0, epsilon = 1e-12);
        // the diameter exceeds a tenth of it within one delay
        let mut max_dv = 0.0f64;
        for k in 0..=64 {
            let t = k as f64 * config.step();
            max_dv = max_dv.max(crate::diagnostics::diameter_velocities(&traj, t).unwrap());
        }
        assert!(max_dv > 0.2, "max velocity diameter {max_dv}");
    }

    #[test]
    fn noflock_keeps_velocity_gap_above_one() {
        let (config, history) = scenario_noflock(1.0, 0.75).unwrap();
        let config = config.with_horizon(10.0).unwrap();
        let traj = crate::integrator::integrate(&config, &history).unwrap();
        for k in 0..=config.n_steps {
            let (_, vs) = traj.grid_state(k);
            assert!(vs[0] - vs[1] >= 1.0, "gap dropped at step {k}");
        }
    }

    #[test]
    fn inline_round_trips_through_serde() {
        let spec = ScenarioSpec::Inline {
            tau: 0.5,
            kernel: example2_kernel(),
            positions: vec![
                vec![vec![0.0], vec![0.0]],
                vec![vec![1.0], vec![1.0]],
            ],
            velocities: vec![
                vec![vec![0.5], vec![0.5]],
                vec![vec![-0.5], vec![-0.5]],
            ],
        };
        let json = serde_json::to_string(&spec).unwrap();
        let back: ScenarioSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
        // row count must match the grid
        assert!(spec.build(1, 1.0).is_ok());
        assert!(spec.build(64, 1.0).is_err());
    }

    #[test]
    fn random_serialization_records_the_generator() {
        let spec =
            ScenarioSpec::random(1, 3, 2, 1.0, example2_kernel(), 1.0, 1.0).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("chacha8"), "{json}");
        let parsed: ScenarioSpec = serde_json::from_str(
            r#"{"name":"random","seed":1,"agents":3,"dim":2,"tau":1.0,
                "kernel":{"type":"power_law","amplitude":1.0,"sigma":1.0,"beta":0.5},
                "pos_spread":1.0,"vel_spread":1.0,"rng":"mt19937"}"#,
        )
        .unwrap();
        assert!(parsed.validate().is_err());
    }

    #[test]
    fn beta_override_for_sweeps() {
        let spec = ScenarioSpec::noflock(1.0, 0.75).unwrap();
        assert_eq!(spec.with_beta(0.8).unwrap().tau(), 1.0);
        // no-flock cannot sweep into the divergent regime
        assert!(spec.with_beta(0.4).is_err());
        let spec = ScenarioSpec::random(1, 3, 1, 1.0, example2_kernel(), 1.0, 1.0).unwrap();
        match spec.with_beta(0.3).unwrap() {
            ScenarioSpec::Random { kernel: KernelSpec::PowerLaw { beta, .. }, .. } => {
                assert_eq!(beta, 0.3)
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(ScenarioSpec::Example2.with_beta(0.3).is_err());
    }
}
