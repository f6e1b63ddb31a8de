//! Simulation and certification of velocity alignment in the delayed
//! Cucker-Smale model.
//!
//! Agents interact through a non-increasing influence function of the
//! distance between an agent's current position and a neighbour's position
//! one fixed delay in the past. This crate integrates the delayed system
//! with a method-of-steps RK4 scheme, computes alignment diagnostics
//! (position/velocity diameters, per-interval velocity diameters, the
//! influence floor), and builds an a-priori decay certificate (a bound on
//! the position diameter plus a guaranteed exponential decay rate for the
//! velocity diameter) whenever the influence function has a divergent
//! integral.
//!
//! Modules:
//!
//! - [`kernels`]: influence functions and their certified properties
//! - [`model`]: system configuration, initial histories, right-hand side
//! - [`integrator`]: method-of-steps RK4 with cubic-Hermite dense output
//! - [`diagnostics`]: diameters, certificates, and inequality verdicts
//! - [`scenarios`]: built-in experiments and seeded random instances

pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod kernels;
pub mod model;
pub mod numeric;
pub mod scenarios;

pub use diagnostics::{DiagnosticsSeries, FlockingCertificate, InequalityCheck, VerdictReport};
pub use error::{Error, Result};
pub use integrator::{integrate, OrderEstimate, Trajectory};
pub use kernels::KernelSpec;
pub use model::{AgentState, HistorySet, SystemConfig};
pub use scenarios::ScenarioSpec;
