//! The `run`, `certify`, and `sweep` commands.

use std::path::Path;

use flock_core::diagnostics::{certify, check_paper_inequalities};
use flock_core::integrator::integrate;
use flock_core::numeric::max_pairwise_distance;
use flock_core::scenarios::{ScenarioSpec, RNG_ALGORITHM};

use crate::config::RunConfig;
use crate::output::{
    sidecar_path, write_json, write_run_csv, write_sweep_csv, RunMetadata, SweepRow,
};
use crate::CliError;

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct GridOverrides {
    pub stride: Option<usize>,
    pub h_divisor: Option<usize>,
}

fn load(config_path: &Path, overrides: &GridOverrides) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(stride) = overrides.stride {
        config.output.stride = stride;
    }
    if let Some(h_divisor) = overrides.h_divisor {
        config.h_divisor = h_divisor;
    }
    config.validate()?;
    Ok(config)
}

fn scenario_notes(scenario: &ScenarioSpec) -> Vec<String> {
    match scenario {
        ScenarioSpec::Example1 { .. } => vec![
            "plateau scenario: positions anchored at 0 and 10 and kernel \
             defaulted to 1/sqrt(1+r^2); the plateau claim is independent of both"
                .into(),
        ],
        ScenarioSpec::Random { seed, .. } => {
            vec![format!("random histories drawn with {RNG_ALGORITHM}, seed {seed}")]
        }
        _ => Vec::new(),
    }
}

/// Simulates one scenario and writes the diagnostic CSV plus a metadata
/// sidecar. Returns the process exit code.
pub fn cmd_run(config_path: &Path, out_path: &Path, overrides: &GridOverrides) -> Result<i32, CliError> {
    let run_config = load(config_path, overrides)?;
    let (config, history) = run_config.build()?;
    let cert = certify(&config, &history)?;
    let traj = integrate(&config, &history)?;
    write_run_csv(out_path, &traj, &cert, &run_config.output)?;

    // achieved maxima for the sidecar, on the dense diagnostic grid
    let n = config.agent_count;
    let dim = config.dim;
    let refine = flock_core::diagnostics::DEFAULT_REFINE;
    let mut xs = vec![0.0; n * dim];
    let mut vs = vec![0.0; n * dim];
    let mut max_dv = 0.0f64;
    let mut max_dv_first = 0.0f64;
    let mut max_dx = 0.0f64;
    for i in 0..=config.n_steps * refine {
        let seg = (i / refine) as isize;
        let theta = (i % refine) as f64 / refine as f64;
        traj.sample_indexed_into(seg, theta, &mut xs, &mut vs);
        let dv = max_pairwise_distance(&vs, n, dim);
        max_dv = max_dv.max(dv);
        if i <= config.step_divisor * refine {
            max_dv_first = max_dv_first.max(dv);
        }
        max_dx = max_dx.max(max_pairwise_distance(&xs, n, dim));
    }

    let meta = RunMetadata {
        config: &run_config,
        certificate: &cert,
        step: config.step(),
        steps: config.n_steps,
        dense_samples_per_step: refine,
        max_velocity_diameter: max_dv,
        max_velocity_diameter_first_interval: max_dv_first,
        max_position_diameter: max_dx,
        notes: scenario_notes(&run_config.scenario),
    };
    write_json(&sidecar_path(out_path), &meta)?;
    Ok(0)
}

/// Builds the a-priori certificate, simulates, verifies every inequality,
/// and writes the JSON verdict report. Exit 0 when everything passes,
/// 1 when an inequality margin fails, 4 when no certificate exists (the
/// report is still written with the simulation-only diagnostics).
pub fn cmd_certify(
    config_path: &Path,
    out_path: &Path,
    overrides: &GridOverrides,
) -> Result<i32, CliError> {
    let run_config = load(config_path, overrides)?;
    let (config, history) = run_config.build()?;
    let cert = certify(&config, &history)?;
    let traj = integrate(&config, &history)?;
    let report = check_paper_inequalities(&traj, &cert)?;
    write_json(out_path, &report)?;
    if !report.all_pass {
        Ok(1)
    } else if !cert.integral_diverges {
        Ok(4)
    } else {
        Ok(0)
    }
}

/// Runs one simulation per configured exponent (concurrently) and writes
/// `beta,final_dV,certified,C_or_empty` rows in ascending beta order.
pub fn cmd_sweep(config_path: &Path, out_path: &Path, overrides: &GridOverrides) -> Result<i32, CliError> {
    let run_config = load(config_path, overrides)?;
    let mut betas = run_config
        .betas
        .clone()
        .ok_or_else(|| CliError::Config("sweep needs a non-empty `betas` list".into()))?;
    if betas.is_empty() {
        return Err(CliError::Config("sweep needs a non-empty `betas` list".into()));
    }
    if betas.iter().any(|b| !b.is_finite()) {
        return Err(CliError::Config("betas must be finite".into()));
    }
    betas.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let run_one = |beta: f64| -> Result<SweepRow, CliError> {
        let scenario = run_config.scenario.with_beta(beta)?;
        let (config, history) = scenario.build(run_config.h_divisor, run_config.horizon)?;
        let cert = certify(&config, &history)?;
        let traj = integrate(&config, &history)?;
        let (_, vs) = traj.grid_state(config.n_steps);
        Ok(SweepRow {
            beta,
            final_velocity_diameter: max_pairwise_distance(vs, config.agent_count, config.dim),
            certified: cert.integral_diverges,
            decay_rate: cert.decay_rate,
        })
    };

    let rows: Result<Vec<SweepRow>, CliError> = match sweep_threads()? {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            pool.install(|| {
                use rayon::prelude::*;
                betas.par_iter().map(|b| run_one(*b)).collect()
            })
        }
        None => {
            use rayon::prelude::*;
            betas.par_iter().map(|b| run_one(*b)).collect()
        }
    };
    write_sweep_csv(out_path, &rows?)?;
    Ok(0)
}

/// Sweep concurrency cap from `FLOCK_THREADS` (0 or unset = default).
fn sweep_threads() -> Result<Option<usize>, CliError> {
    match std::env::var("FLOCK_THREADS") {
        Err(_) => Ok(None),
        Ok(raw) => {
            let n: usize = raw
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("FLOCK_THREADS must be an integer, got {raw:?}")))?;
            Ok(if n == 0 { None } else { Some(n) })
        }
    }
}
