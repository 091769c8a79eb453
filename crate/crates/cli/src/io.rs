//! Delimited-text output files with an embedded provenance header.
//!
//! Every data file starts with the resolved experiment config as `# `-prefixed
//! comment lines, followed by a CSV header row and data rows. Floats are
//! written with 17 significant digits so files round-trip exactly and
//! identical configs produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;
use serpent_core::analysis::{GaitMetrics, JointSpectrum};
use serpent_core::baseline::{GaitParams, ParetoPoint};
use serpent_core::types::{ControlVector, SnakeState, Trajectory};

use crate::CliError;

/// 17-significant-digit float formatting (exact f64 round trip).
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn comment_block(provenance: &str) -> String {
    let mut out = String::new();
    for line in provenance.lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            let _ = writeln!(out, "# {line}");
        }
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

/// One row per time step: `t, x0, y0, q0.., vx0, vy0, dq0.., tau1..`; the
/// final row (which has no control interval) writes zero torques.
pub fn write_trajectory(
    path: &Path,
    traj: &Trajectory<f64>,
    provenance: &str,
) -> Result<(), CliError> {
    let n = traj.states[0].n_links();
    let mut out = comment_block(provenance);
    out.push_str("t,x0,y0");
    for i in 0..n {
        let _ = write!(out, ",q{i}");
    }
    out.push_str(",vx0,vy0");
    for i in 0..n {
        let _ = write!(out, ",dq{i}");
    }
    for j in 1..n {
        let _ = write!(out, ",tau{j}");
    }
    out.push('\n');

    for (k, state) in traj.states.iter().enumerate() {
        let t = k as f64 * traj.dt;
        let _ = write!(out, "{}", fmt_float(t));
        let _ = write!(out, ",{},{}", fmt_float(state.head_pos.x), fmt_float(state.head_pos.y));
        for i in 0..n {
            let _ = write!(out, ",{}", fmt_float(state.angles[i]));
        }
        let _ = write!(out, ",{},{}", fmt_float(state.head_vel.x), fmt_float(state.head_vel.y));
        for i in 0..n {
            let _ = write!(out, ",{}", fmt_float(state.angle_rates[i]));
        }
        for j in 0..n - 1 {
            let tau = traj.controls.get(k).map_or(0.0, |c| c.torques[j]);
            let _ = write!(out, ",{}", fmt_float(tau));
        }
        out.push('\n');
    }
    write_file(path, &out)
}

/// Parse a trajectory file written by [`write_trajectory`].
pub fn read_trajectory(path: &Path) -> Result<Trajectory<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| CliError::Config("trajectory file has no header".into()))?;
    let columns: Vec<&str> = header.split(',').collect();
    let n = columns.iter().filter(|c| c.starts_with('q')).count();
    if n < 2 || columns.len() != 5 + 3 * n - 1 {
        return Err(CliError::Config(format!(
            "unrecognized trajectory header ({} columns, {n} links)",
            columns.len()
        )));
    }

    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut torque_rows = Vec::new();
    for (row_idx, line) in lines.enumerate() {
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Config(format!("row {row_idx}: {e}")))?;
        if fields.len() != columns.len() {
            return Err(CliError::Config(format!(
                "row {row_idx}: expected {} fields, got {}",
                columns.len(),
                fields.len()
            )));
        }
        times.push(fields[0]);
        let angles = DVector::from_iterator(n, fields[3..3 + n].iter().copied());
        let rates = DVector::from_iterator(n, fields[5 + n..5 + 2 * n].iter().copied());
        states.push(SnakeState {
            head_pos: nalgebra::Vector2::new(fields[1], fields[2]),
            angles,
            head_vel: nalgebra::Vector2::new(fields[3 + n], fields[4 + n]),
            angle_rates: rates,
        });
        torque_rows.push(DVector::from_iterator(
            n - 1,
            fields[5 + 2 * n..].iter().copied(),
        ));
    }
    if states.len() < 2 {
        return Err(CliError::Config("trajectory needs at least two rows".into()));
    }
    let dt = times[1] - times[0];
    // The last torque row is padding, not a control interval.
    torque_rows.pop();
    let controls = torque_rows.into_iter().map(ControlVector::from_vector).collect();
    Trajectory::new(dt, states, controls)
        .map_err(|e| CliError::Config(format!("inconsistent trajectory file: {e}")))
}

/// Metrics rows: one labeled gait per line.
pub fn write_metrics(
    path: &Path,
    rows: &[(String, GaitMetrics<f64>)],
    provenance: &str,
) -> Result<(), CliError> {
    let mut out = comment_block(provenance);
    out.push_str("label,speed,power,window_start,window_end\n");
    for (label, m) in rows {
        let _ = writeln!(
            out,
            "{label},{},{},{},{}",
            fmt_float(m.mean_speed),
            fmt_float(m.mean_power),
            fmt_float(m.window_start),
            fmt_float(m.window_end)
        );
    }
    write_file(path, &out)
}

/// Per-joint dominant frequency and amplitude.
pub fn write_spectrum(
    path: &Path,
    spectrum: &JointSpectrum<f64>,
    provenance: &str,
) -> Result<(), CliError> {
    let mut out = comment_block(provenance);
    out.push_str("joint,frequency,amplitude\n");
    for (idx, (f, a)) in spectrum
        .dominant_frequency
        .iter()
        .zip(&spectrum.dominant_amplitude)
        .enumerate()
    {
        let _ = writeln!(out, "{},{},{}", idx + 1, fmt_float(*f), fmt_float(*a));
    }
    write_file(path, &out)
}

/// Evaluated gait points (or an extracted front): CSV with the gait
/// parameters flattened into columns.
pub fn write_points(
    path: &Path,
    points: &[ParetoPoint<f64>],
    provenance: &str,
) -> Result<(), CliError> {
    let mut out = comment_block(provenance);
    out.push_str("label,speed,power,kind,frequency,amplitude,phase_offset,bias,kp,kd,alpha,beta,goal_x,goal_y\n");
    for p in points {
        let _ = write!(out, "{},{},{}", p.label, fmt_float(p.speed), fmt_float(p.power));
        match &p.params {
            GaitParams::Serpenoid(s) => {
                let _ = writeln!(
                    out,
                    ",serpenoid,{},{},{},{},{},{},,,,",
                    fmt_float(s.frequency),
                    fmt_float(s.amplitude),
                    fmt_float(s.phase_offset),
                    fmt_float(s.bias),
                    fmt_float(s.kp),
                    fmt_float(s.kd)
                );
            }
            GaitParams::Mpc { alpha, beta, goal } => {
                let _ = writeln!(
                    out,
                    ",mpc,,,,,,,{},{},{},{}",
                    fmt_float(*alpha),
                    fmt_float(*beta),
                    fmt_float(goal.x),
                    fmt_float(goal.y)
                );
            }
        }
    }
    write_file(path, &out)
}

/// Timing report for the bench command; the only output whose contents are
/// allowed to differ between identical runs.
pub fn write_bench_report(
    path: &Path,
    stats: &[serpent_core::mpc::PlanStat],
    provenance: &str,
) -> Result<(), CliError> {
    let n = stats.len().max(1) as f64;
    let mean = stats.iter().map(|s| s.seconds).sum::<f64>() / n;
    let var = stats
        .iter()
        .map(|s| (s.seconds - mean).powi(2))
        .sum::<f64>()
        / n;
    let min = stats.iter().map(|s| s.seconds).fold(f64::INFINITY, f64::min);
    let max = stats.iter().map(|s| s.seconds).fold(0.0, f64::max);
    let mean_iterations = stats.iter().map(|s| s.iterations as f64).sum::<f64>() / n;

    let mut out = comment_block(provenance);
    let _ = writeln!(out, "plans: {}", stats.len());
    let _ = writeln!(out, "mean_seconds: {mean:.6}");
    let _ = writeln!(out, "std_seconds: {:.6}", var.sqrt());
    let _ = writeln!(out, "min_seconds: {min:.6}");
    let _ = writeln!(out, "max_seconds: {max:.6}");
    let _ = writeln!(out, "mean_iterations: {mean_iterations:.2}");
    write_file(path, &out)
}
