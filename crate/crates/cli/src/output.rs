//! CSV and JSON emission.
//!
//! Data files are byte-reproducible: floats print in Rust's shortest
//! round-trip decimal form, rows follow a deterministic order, and no
//! timestamps appear; run metadata lives in a JSON sidecar next to the
//! data file.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use flock_core::diagnostics::{phi_eval, DEFAULT_REFINE};
use flock_core::numeric::max_pairwise_distance;
use flock_core::{FlockingCertificate, Trajectory};

use crate::config::{OutputConfig, RunConfig};
use crate::CliError;

/// Shortest decimal that round-trips to the same binary float.
pub fn format_f64(x: f64) -> String {
    x.to_string()
}

/// Sidecar path: the data path with its extension replaced by
/// `meta.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

/// Run metadata for the sidecar (everything that must not go into the
/// deterministic data file).
#[derive(Debug, Serialize)]
pub struct RunMetadata<'a> {
    pub config: &'a RunConfig,
    pub certificate: &'a FlockingCertificate,
    pub step: f64,
    pub steps: usize,
    pub dense_samples_per_step: usize,
    pub max_velocity_diameter: f64,
    pub max_velocity_diameter_first_interval: f64,
    pub max_position_diameter: f64,
    pub notes: Vec<String>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("serialize: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes the diagnostic CSV: `t,d_X,d_V,envelope,phi` plus optional
/// per-agent columns `x_<agent>_<component>`, `v_<agent>_<component>`.
///
/// Rows cover the history grid and every `stride`-th integration step
/// (the final step always included). The envelope column carries the
/// certified decay envelope when one exists and stays empty otherwise;
/// the influence-floor column starts at time zero.
pub fn write_run_csv(
    path: &Path,
    traj: &Trajectory,
    cert: &FlockingCertificate,
    output: &OutputConfig,
) -> Result<(), CliError> {
    let config = traj.config();
    let n = config.agent_count;
    let dim = config.dim;
    let len = n * dim;
    let h = config.step();
    let tau = config.delay;
    let m = config.step_divisor;
    let n_steps = config.n_steps;
    let stride = output.stride;
    let r_v0 = traj.initial_speed_bound();
    let i0 = cert.initial_velocity_diameter;

    // running maximum of the position diameter at step resolution,
    // accumulated over the dense grid
    let refine = DEFAULT_REFINE;
    let mut running_max = vec![0.0; n_steps + 1];
    {
        let mut xs = vec![0.0; len];
        let mut vs = vec![0.0; len];
        let mut acc = 0.0f64;
        for i in 0..=n_steps * refine {
            let seg = (i / refine) as isize;
            let theta = (i % refine) as f64 / refine as f64;
            traj.sample_indexed_into(seg, theta, &mut xs, &mut vs);
            acc = acc.max(max_pairwise_distance(&xs, n, dim));
            if i % refine == 0 {
                running_max[i / refine] = acc;
            }
        }
    }

    let mut rows: Vec<isize> = Vec::new();
    let mut j = -(m as isize);
    while j < 0 {
        rows.push(j);
        j += stride as isize;
    }
    let mut k = 0;
    while k <= n_steps {
        rows.push(k as isize);
        k += stride;
    }
    if *rows.last().unwrap() != n_steps as isize {
        rows.push(n_steps as isize);
    }

    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write!(w, "t,d_X,d_V,envelope,phi")?;
    if output.agent_columns {
        for a in 0..n {
            for c in 0..dim {
                write!(w, ",x_{a}_{c}")?;
            }
        }
        for a in 0..n {
            for c in 0..dim {
                write!(w, ",v_{a}_{c}")?;
            }
        }
    }
    writeln!(w)?;

    let mut xs = vec![0.0; len];
    let mut vs = vec![0.0; len];
    for idx in rows {
        let t = idx as f64 * h;
        traj.sample_indexed_into(idx, 0.0, &mut xs, &mut vs);
        let d_x = max_pairwise_distance(&xs, n, dim);
        let d_v = max_pairwise_distance(&vs, n, dim);
        let envelope = cert
            .decay_rate
            .map(|c| format_f64(i0 * (-c * (t - 2.0 * tau)).exp()))
            .unwrap_or_default();
        let phi = if idx >= 0 {
            format_f64(phi_eval(&config.kernel, tau, r_v0, running_max[idx as usize]))
        } else {
            String::new()
        };
        write!(
            w,
            "{},{},{},{envelope},{phi}",
            format_f64(t),
            format_f64(d_x),
            format_f64(d_v)
        )?;
        if output.agent_columns {
            for x in &xs {
                write!(w, ",{}", format_f64(*x))?;
            }
            for v in &vs {
                write!(w, ",{}", format_f64(*v))?;
            }
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// One sweep result.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub beta: f64,
    pub final_velocity_diameter: f64,
    pub certified: bool,
    pub decay_rate: Option<f64>,
}

/// Writes the sweep CSV `beta,final_dV,certified,C_or_empty` in the given
/// (already deterministic) row order.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), CliError> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "beta,final_dV,certified,C_or_empty")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{}",
            format_f64(row.beta),
            format_f64(row.final_velocity_diameter),
            row.certified,
            row.decay_rate.map(format_f64).unwrap_or_default()
        )?;
    }
    w.flush()?;
    Ok(())
}
