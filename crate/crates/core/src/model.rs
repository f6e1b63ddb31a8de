//! System definition: agents, dimension, delay, initial histories, and the
//! right-hand side of the delayed dynamics.
//!
//! Each agent carries a position and velocity in `R^d`. For positive times
//! the velocity of agent `a` relaxes towards the delayed velocities of the
//! others, weighted by the influence of the distance between `a`'s current
//! position and the other agent's position one delay in the past,
//! normalized by `N - 1`. Positions integrate the (undelayed) velocity.
//!
//! Initial data are functions on `[-delay, 0]`, not points; no consistency
//! between the position and velocity histories is required.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::numeric::distance;

/// Grid and model parameters for one simulation.
///
/// The step is stored as a divisor of the delay (`h = delay / step_divisor`)
/// so delayed lookups always land on completed step boundaries, and the
/// horizon as a step count (`T = n_steps * h`).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub agent_count: usize,
    pub dim: usize,
    pub delay: f64,
    pub kernel: KernelSpec,
    pub step_divisor: usize,
    pub n_steps: usize,
}

impl SystemConfig {
    pub fn new(
        agent_count: usize,
        dim: usize,
        delay: f64,
        kernel: KernelSpec,
        step_divisor: usize,
        n_steps: usize,
    ) -> Result<Self> {
        if agent_count < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 agents, got {agent_count}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidConfig("dimension must be at least 1".into()));
        }
        if !(delay.is_finite() && delay > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "delay must be positive, got {delay}"
            )));
        }
        kernel.validate()?;
        if step_divisor == 0 {
            return Err(Error::InvalidConfig("step divisor must be at least 1".into()));
        }
        if n_steps < step_divisor {
            return Err(Error::InvalidConfig(format!(
                "horizon {} shorter than the delay {delay}",
                n_steps as f64 * delay / step_divisor as f64,
            )));
        }
        Ok(SystemConfig {
            agent_count,
            dim,
            delay,
            kernel,
            step_divisor,
            n_steps,
        })
    }

    /// Integration step `h = delay / step_divisor`.
    pub fn step(&self) -> f64 {
        self.delay / self.step_divisor as f64
    }

    /// Horizon `T = n_steps * h`.
    pub fn horizon(&self) -> f64 {
        self.n_steps as f64 * self.step()
    }

    /// Same system on a grid with `divisor` steps per delay, keeping the
    /// covered horizon.
    pub fn with_step_divisor(&self, divisor: usize) -> Result<Self> {
        let steps = self.n_steps as f64 * divisor as f64 / self.step_divisor as f64;
        SystemConfig::new(
            self.agent_count,
            self.dim,
            self.delay,
            self.kernel.clone(),
            divisor,
            steps.round() as usize,
        )
    }

    /// Same system covering at least `horizon` (rounded up to a whole step).
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let n_steps = (horizon / self.step() - 1e-9).ceil() as usize;
        SystemConfig::new(
            self.agent_count,
            self.dim,
            self.delay,
            self.kernel.clone(),
            self.step_divisor,
            n_steps.max(self.step_divisor),
        )
    }
}

/// A scalar piecewise polynomial on `[-delay, 0]`, used for the closed-form
/// scenario histories. Coefficients are in ascending powers of the absolute
/// time `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePoly {
    /// Breakpoints `-delay = b_0 < ... < b_k = 0`.
    pub breakpoints: Vec<f64>,
    /// One coefficient vector per piece `[b_i, b_{i+1}]`.
    pub pieces: Vec<Vec<f64>>,
}

impl PiecewisePoly {
    /// Single polynomial on the whole interval.
    pub fn single(lo: f64, coeffs: Vec<f64>) -> Self {
        PiecewisePoly {
            breakpoints: vec![lo, 0.0],
            pieces: vec![coeffs],
        }
    }

    pub fn constant(lo: f64, value: f64) -> Self {
        Self::single(lo, vec![value])
    }

    pub fn eval(&self, s: f64) -> f64 {
        let k = self.pieces.len();
        let mut idx = k - 1;
        for i in 0..k {
            if s <= self.breakpoints[i + 1] {
                idx = i;
                break;
            }
        }
        // Horner in absolute s; pieces are low degree
        self.pieces[idx]
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * s + c)
    }
}

/// Initial data for one agent on `[-delay, 0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AgentHistory {
    /// Time-constant state.
    Constant { position: Vec<f64>, velocity: Vec<f64> },
    /// Closed-form piecewise polynomials, one per component.
    Piecewise {
        position: Vec<PiecewisePoly>,
        velocity: Vec<PiecewisePoly>,
    },
    /// Samples on the uniform grid `{-delay, ..., 0}` (rows are grid times,
    /// columns components). Positions interpolate with cubic Hermite using
    /// the velocity samples as slopes; velocities interpolate linearly
    /// since no derivative data exists for them.
    Sampled {
        positions: Vec<Vec<f64>>,
        velocities: Vec<Vec<f64>>,
    },
}

/// Initial data for all agents on `[-delay, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistorySet {
    pub delay: f64,
    pub dim: usize,
    pub agents: Vec<AgentHistory>,
}

impl HistorySet {
    pub fn new(delay: f64, dim: usize, agents: Vec<AgentHistory>) -> Result<Self> {
        if !(delay.is_finite() && delay > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "history delay must be positive, got {delay}"
            )));
        }
        if agents.len() < 2 {
            return Err(Error::InvalidConfig("need histories for at least 2 agents".into()));
        }
        let set = HistorySet { delay, dim, agents };
        for (i, agent) in set.agents.iter().enumerate() {
            set.validate_agent(i, agent)?;
        }
        Ok(set)
    }

    fn validate_agent(&self, idx: usize, agent: &AgentHistory) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(format!("history agent {idx}: {msg}")));
        match agent {
            AgentHistory::Constant { position, velocity } => {
                if position.len() != self.dim || velocity.len() != self.dim {
                    return bad(format!("expected dimension {}", self.dim));
                }
                if position.iter().chain(velocity).any(|x| !x.is_finite()) {
                    return bad("non-finite values".into());
                }
            }
            AgentHistory::Piecewise { position, velocity } => {
                if position.len() != self.dim || velocity.len() != self.dim {
                    return bad(format!("expected dimension {}", self.dim));
                }
                for p in position.iter().chain(velocity) {
                    if p.pieces.len() + 1 != p.breakpoints.len()
                        || (p.breakpoints[0] + self.delay).abs() > 1e-12
                        || p.breakpoints.last().copied() != Some(0.0)
                        || p.breakpoints.windows(2).any(|w| w[1] <= w[0])
                    {
                        return bad("piecewise breakpoints must span [-delay, 0]".into());
                    }
                    if p.pieces.iter().flatten().any(|c| !c.is_finite()) {
                        return bad("non-finite coefficients".into());
                    }
                }
            }
            AgentHistory::Sampled { positions, velocities } => {
                if positions.len() < 2 || positions.len() != velocities.len() {
                    return bad("need matching position/velocity rows, at least 2".into());
                }
                for row in positions.iter().chain(velocities) {
                    if row.len() != self.dim {
                        return bad(format!("expected dimension {}", self.dim));
                    }
                    if row.iter().any(|x| !x.is_finite()) {
                        return bad("non-finite samples".into());
                    }
                }
            }
        }
        Ok(())
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    /// Position of one agent at `s` in `[-delay, 0]`, written to `out`.
    pub fn position_into(&self, agent: usize, s: f64, out: &mut [f64]) {
        self.channel_into(agent, s, true, out);
    }

    /// Velocity of one agent at `s` in `[-delay, 0]`, written to `out`.
    pub fn velocity_into(&self, agent: usize, s: f64, out: &mut [f64]) {
        self.channel_into(agent, s, false, out);
    }

    fn channel_into(&self, agent: usize, s: f64, want_position: bool, out: &mut [f64]) {
        debug_assert!(
            s >= -self.delay - 1e-9 && s <= 1e-9,
            "history queried at {s} outside [-{}, 0]",
            self.delay
        );
        let s = s.clamp(-self.delay, 0.0);
        match &self.agents[agent] {
            AgentHistory::Constant { position, velocity } => {
                out.copy_from_slice(if want_position { position } else { velocity });
            }
            AgentHistory::Piecewise { position, velocity } => {
                let channel = if want_position { position } else { velocity };
                for (o, poly) in out.iter_mut().zip(channel) {
                    *o = poly.eval(s);
                }
            }
            AgentHistory::Sampled { positions, velocities } => {
                let m = positions.len() - 1;
                let dt = self.delay / m as f64;
                let x = (s + self.delay) / dt;
                let mut j = x.floor() as usize;
                if j >= m {
                    j = m - 1;
                }
                let theta = (x - j as f64).clamp(0.0, 1.0);
                if want_position {
                    for c in 0..self.dim {
                        out[c] = hermite(
                            positions[j][c],
                            positions[j + 1][c],
                            dt * velocities[j][c],
                            dt * velocities[j + 1][c],
                            theta,
                        );
                    }
                } else {
                    for c in 0..self.dim {
                        out[c] = velocities[j][c] + theta * (velocities[j + 1][c] - velocities[j][c]);
                    }
                }
            }
        }
    }

    /// Maximum Euclidean speed over all agents and a uniform grid of
    /// `samples` points covering `[-delay, 0]`.
    pub fn max_speed(&self, samples: usize) -> f64 {
        let samples = samples.max(2);
        let mut v = vec![0.0; self.dim];
        let mut best = 0.0f64;
        for a in 0..self.agent_count() {
            for i in 0..samples {
                let s = -self.delay + self.delay * i as f64 / (samples - 1) as f64;
                self.velocity_into(a, s, &mut v);
                best = best.max(crate::numeric::norm(&v));
            }
        }
        best
    }

    /// All positions (first) and velocities (second) at `s`, flat agent-major.
    pub fn snapshot(&self, s: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.agent_count();
        let mut xs = vec![0.0; n * self.dim];
        let mut vs = vec![0.0; n * self.dim];
        for a in 0..n {
            self.position_into(a, s, &mut xs[a * self.dim..(a + 1) * self.dim]);
            self.velocity_into(a, s, &mut vs[a * self.dim..(a + 1) * self.dim]);
        }
        (xs, vs)
    }
}

/// Cubic Hermite basis on `[0, 1]` with scaled endpoint slopes.
pub(crate) fn hermite(y0: f64, y1: f64, d0: f64, d1: f64, theta: f64) -> f64 {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + theta) * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * d1
}

/// Position and velocity of one agent at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
}

/// Normalized influence of agent `b` (at its delayed position) on agent
/// `a` (at its current position): `psi(|x_a - x_b_delayed|) / (N - 1)`.
pub fn influence(kernel: &KernelSpec, agent_count: usize, x_a_now: &[f64], x_b_delayed: &[f64]) -> f64 {
    assert!(agent_count >= 2);
    assert_eq!(x_a_now.len(), x_b_delayed.len(), "dimension mismatch");
    kernel.eval(distance(x_a_now, x_b_delayed)) / (agent_count - 1) as f64
}

/// Velocity derivative for every agent.
///
/// For agent `a` this is the influence-weighted sum over `b != a` of
/// `v_b(t - delay) - v_a(t)`. All states are flat agent-major slices of
/// length `agent_count * dim`; the result is written to `out`.
pub fn rhs_velocity(
    kernel: &KernelSpec,
    agent_count: usize,
    dim: usize,
    positions_now: &[f64],
    velocities_now: &[f64],
    delayed_positions: &[f64],
    delayed_velocities: &[f64],
    out: &mut [f64],
) {
    debug_assert_eq!(positions_now.len(), agent_count * dim);
    debug_assert_eq!(out.len(), agent_count * dim);
    out.fill(0.0);
    for a in 0..agent_count {
        let xa = &positions_now[a * dim..(a + 1) * dim];
        let va = &velocities_now[a * dim..(a + 1) * dim];
        let acc = &mut out[a * dim..(a + 1) * dim];
        for b in 0..agent_count {
            if b == a {
                continue;
            }
            let xb = &delayed_positions[b * dim..(b + 1) * dim];
            let vb = &delayed_velocities[b * dim..(b + 1) * dim];
            let w = influence(kernel, agent_count, xa, xb);
            for c in 0..dim {
                acc[c] += w * (vb[c] - va[c]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example2_kernel() -> KernelSpec {
        KernelSpec::power_law(1.0, 1.0, 0.5).unwrap()
    }

    #[test]
    fn influence_coincident_points() {
        let k = example2_kernel();
        assert_eq!(influence(&k, 2, &[1.0, 2.0], &[1.0, 2.0]), 1.0);
        // normalization by N - 1 = 2
        assert_eq!(influence(&k, 3, &[1.0, 2.0], &[1.0, 2.0]), 0.5);
    }

    #[test]
    fn influence_at_distance_two() {
        let k = example2_kernel();
        let got = influence(&k, 2, &[0.0], &[2.0]);
        assert_relative_eq!(got, 1.0 / 5f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn rhs_vanishes_when_delayed_matches_current() {
        let k = example2_kernel();
        let xs = [0.0, 1.0, 5.0, -2.0, 3.0, 3.0];
        let vs = [1.0, 0.5, 1.0, 0.5, 1.0, 0.5];
        let mut out = [f64::NAN; 6];
        rhs_velocity(&k, 3, 2, &xs, &vs, &xs, &vs, &mut out);
        for o in out {
            assert_eq!(o, 0.0);
        }
    }

    #[test]
    fn rhs_constant_kernel_two_agents() {
        // with psi = amplitude and N = 2 the weight is exactly amplitude,
        // so the acceleration equals amplitude * (v_b_delayed - v_a)
        let k = KernelSpec::power_law(1.7, 1.0, 0.0).unwrap();
        let xs = [0.0, 10.0];
        let vs = [0.25, 9.0];
        let dvs = [9.0, 1.25];
        let mut out = [0.0; 2];
        rhs_velocity(&k, 2, 1, &xs, &vs, &xs, &dvs, &mut out);
        assert_relative_eq!(out[0], 1.7 * (1.25 - 0.25), epsilon = 1e-14);
        assert_relative_eq!(out[1], 1.7 * (9.0 - 9.0), epsilon = 1e-14);
    }

    #[test]
    fn piecewise_poly_picks_pieces() {
        // v(s) = 1 on [-1, -0.2], then -s/0.2 on [-0.2, 0]
        let p = PiecewisePoly {
            breakpoints: vec![-1.0, -0.2, 0.0],
            pieces: vec![vec![1.0], vec![0.0, -5.0]],
        };
        assert_eq!(p.eval(-0.7), 1.0);
        assert_relative_eq!(p.eval(-0.1), 0.5, epsilon = 1e-14);
        assert_eq!(p.eval(0.0), 0.0);
    }

    #[test]
    fn sampled_history_hits_grid_and_interpolates() {
        let h = HistorySet::new(
            1.0,
            1,
            vec![
                AgentHistory::Sampled {
                    positions: vec![vec![0.0], vec![0.5], vec![2.0]],
                    velocities: vec![vec![1.0], vec![2.0], vec![4.0]],
                },
                AgentHistory::Constant { position: vec![0.0], velocity: vec![0.0] },
            ],
        )
        .unwrap();
        let mut out = [0.0];
        h.velocity_into(0, -0.5, &mut out);
        assert_eq!(out[0], 2.0);
        h.velocity_into(0, -0.25, &mut out);
        assert_relative_eq!(out[0], 3.0, epsilon = 1e-14);
        h.position_into(0, -1.0, &mut out);
        assert_eq!(out[0], 0.0);
        h.position_into(0, 0.0, &mut out);
        assert_eq!(out[0], 2.0);
    }

    #[test]
    fn config_validation() {
        let k = example2_kernel();
        assert!(SystemConfig::new(1, 1, 1.0, k.clone(), 64, 128).is_err());
        assert!(SystemConfig::new(2, 0, 1.0, k.clone(), 64, 128).is_err());
        assert!(SystemConfig::new(2, 1, 0.0, k.clone(), 64, 128).is_err());
        assert!(SystemConfig::new(2, 1, 1.0, k.clone(), 0, 128).is_err());
        // horizon below the delay
        assert!(SystemConfig::new(2, 1, 1.0, k.clone(), 64, 32).is_err());
        let c = SystemConfig::new(2, 1, 1.0, k, 64, 128).unwrap();
        assert_eq!(c.step(), 1.0 / 64.0);
        assert_eq!(c.horizon(), 2.0);
        assert_eq!(c.with_horizon(1.5).unwrap().n_steps, 96);
        assert_eq!(c.with_step_divisor(128).unwrap().n_steps, 256);
    }
}
