//! The run-configuration file schema (JSON, UTF-8, unknown keys rejected).

use std::path::Path;

use serde::{Deserialize, Serialize};

use flock_core::{HistorySet, ScenarioSpec, SystemConfig};

use crate::CliError;

fn default_h_divisor() -> usize {
    64
}

fn default_stride() -> usize {
    1
}

/// Output controls: row stride over integration steps and optional
/// per-agent state columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub agent_columns: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            stride: default_stride(),
            agent_columns: false,
        }
    }
}

/// One simulation request: a scenario, the grid (steps per delay and
/// horizon), output controls, and the exponent list for sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    /// Steps per delay: the step is `delay / h_divisor`.
    #[serde(default = "default_h_divisor")]
    pub h_divisor: usize,
    /// Covered time span; rounded up to a whole step.
    pub horizon: f64,
    #[serde(default)]
    pub output: OutputConfig,
    /// Power-law exponents for the sweep command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
}

impl RunConfig {
    /// Loads and validates a config file; parse errors carry the line and
    /// column.
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.scenario.validate()?;
        if self.h_divisor == 0 {
            return Err(CliError::Config(
                "h_divisor must be at least 1 (the step is delay / h_divisor)".into(),
            ));
        }
        if self.output.stride == 0 {
            return Err(CliError::Config("output.stride must be at least 1".into()));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(CliError::Config(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Builds the system and history on the configured grid.
    pub fn build(&self) -> Result<(SystemConfig, HistorySet), CliError> {
        Ok(self.scenario.build(self.h_divisor, self.horizon)?)
    }
}
