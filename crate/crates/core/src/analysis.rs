//! Gait analysis: speed/power metrics over a measurement window, per-joint
//! DFT decomposition, and the planner/evaluator model-error robustness
//! experiment.

use nalgebra::Vector2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::CostSpec;
use crate::env::EnvironmentModel;
use crate::error::{SimError, SimResult};
use crate::mpc::{run_mpc, MpcConfig};
use crate::scalar::{real, Real};
use crate::types::{forward_kinematics, SnakeParams, SnakeState, Trajectory};

/// Speed and power of a gait over one measurement window.
///
/// Power is the time average of `Σ_j |τ_j·q̇_j|`: mechanical power magnitude
/// with no regeneration credit. The absolute scale of a power/speed study
/// depends on this choice; [`gait_metrics_signed`] provides the signed
/// net-work variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitMetrics<R: Real> {
    /// Head displacement over the window projected on the goal direction,
    /// divided by the window length \[m/s\].
    pub mean_speed: R,
    /// Mean mechanical power \[W\].
    pub mean_power: R,
    pub window_start: R,
    pub window_end: R,
}

fn window_indices<R: Real>(
    traj: &Trajectory<R>,
    window_start: R,
    window_end: R,
) -> SimResult<(usize, usize)> {
    let err = || SimError::WindowOutOfRange {
        start: window_start.to_f64(),
        end: window_end.to_f64(),
        duration: traj.duration().to_f64(),
    };
    if !(window_end > window_start) || window_start < R::zero() {
        return Err(err());
    }
    let start = (window_start / traj.dt).round().to_f64() as usize;
    let end = (window_end / traj.dt).round().to_f64() as usize;
    if end > traj.len() || start >= end {
        return Err(err());
    }
    Ok((start, end))
}

fn metrics_impl<R: Real>(
    traj: &Trajectory<R>,
    window_start: R,
    window_end: R,
    goal_direction: Vector2<R>,
    signed: bool,
) -> SimResult<GaitMetrics<R>> {
    let (start, end) = window_indices(traj, window_start, window_end)?;
    let span = traj.dt * real((end - start) as f64);

    let displacement = traj.states[end].head_pos - traj.states[start].head_pos;
    let mean_speed = displacement.dot(&goal_direction) / span;

    let mut accumulated = R::zero();
    for k in start..end {
        let rates = &traj.states[k].angle_rates;
        let torques = &traj.controls[k].torques;
        for j in 0..torques.len() {
            let p = torques[j] * rates[j + 1];
            accumulated += if signed { p } else { p.abs() };
        }
    }
    let mean_power = accumulated / real((end - start) as f64);

    Ok(GaitMetrics {
        mean_speed,
        mean_power,
        window_start,
        window_end,
    })
}

/// Mean goal-ward speed and mean `Σ|τ·q̇|` power over `[window_start,
/// window_end]`; `goal_direction` should be a unit vector.
pub fn gait_metrics<R: Real>(
    traj: &Trajectory<R>,
    window_start: R,
    window_end: R,
    goal_direction: Vector2<R>,
) -> SimResult<GaitMetrics<R>> {
    metrics_impl(traj, window_start, window_end, goal_direction, false)
}

/// Variant of [`gait_metrics`] whose power term keeps the sign of `τ·q̇`
/// (net mechanical work rate, crediting regeneration).
pub fn gait_metrics_signed<R: Real>(
    traj: &Trajectory<R>,
    window_start: R,
    window_end: R,
    goal_direction: Vector2<R>,
) -> SimResult<GaitMetrics<R>> {
    metrics_impl(traj, window_start, window_end, goal_direction, true)
}

/// Dominant frequency and sinusoid-equivalent amplitude per actuated joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpectrum<R: Real> {
    /// Dominant nonzero-frequency bin per joint \[Hz\], `0` for signals with
    /// no oscillation (e.g. a constant angle).
    pub dominant_frequency: Vec<R>,
    /// Single-sided amplitude `2|X_k|/M` at the dominant bin \[rad\].
    pub dominant_amplitude: Vec<R>,
}

/// Rectangular-window DFT of each joint angle over the window, mean removed.
///
/// The dominant bin is the largest-magnitude bin among `k = 1..M/2`; with a
/// 4 s window at 100 Hz the bin resolution is 0.25 Hz.
pub fn joint_spectrum<R: Real>(
    traj: &Trajectory<R>,
    window_start: R,
    window_end: R,
) -> SimResult<JointSpectrum<R>> {
    let (start, end) = window_indices(traj, window_start, window_end)?;
    let samples = end - start;
    let n_joints = traj.states[0].n_links() - 1;

    let mut dominant_frequency = Vec::with_capacity(n_joints);
    let mut dominant_amplitude = Vec::with_capacity(n_joints);
    let tau = real::<R>(2.0) * R::pi();
    let m_real = real::<R>(samples as f64);

    for joint in 1..=n_joints {
        let signal: Vec<R> = (start..end).map(|k| traj.states[k].angles[joint]).collect();
        let mean = signal.iter().fold(R::zero(), |a, &x| a + x) / m_real;

        let mut best_bin = 0usize;
        let mut best_mag_sq = R::zero();
        for bin in 1..=samples / 2 {
            let mut re = R::zero();
            let mut im = R::zero();
            let step = tau * real::<R>(bin as f64) / m_real;
            for (idx, &x) in signal.iter().enumerate() {
                let angle = step * real::<R>(idx as f64);
                let centered = x - mean;
                re += centered * angle.cos();
                im -= centered * angle.sin();
            }
            let mag_sq = re * re + im * im;
            if mag_sq > best_mag_sq {
                best_mag_sq = mag_sq;
                best_bin = bin;
            }
        }

        let amplitude = real::<R>(2.0) * best_mag_sq.sqrt() / m_real;
        if amplitude.to_f64() < 1e-12 {
            dominant_frequency.push(R::zero());
            dominant_amplitude.push(R::zero());
        } else {
            let freq = real::<R>(best_bin as f64) / (m_real * traj.dt);
            dominant_frequency.push(freq);
            dominant_amplitude.push(amplitude);
        }
    }

    Ok(JointSpectrum {
        dominant_frequency,
        dominant_amplitude,
    })
}

/// One row of the robustness study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow<R: Real> {
    /// Fractional error injected into the planner's transverse viscous
    /// coefficient.
    pub delta: R,
    /// Goal-ward speed of the perturbed run \[m/s\].
    pub speed: R,
    /// `(speed_nominal - speed_perturbed) / speed_nominal`; negative when
    /// the mismatch happened to help.
    pub speed_reduction: R,
}

/// Planner/evaluator mismatch study: for each `delta`, plan with
/// `c_trans·(1+delta)` while executing on the nominal environment, and
/// report the relative speed reduction over the measurement window.
#[allow(clippy::too_many_arguments)]
pub fn robustness_experiment<R: Real>(
    base_env: &EnvironmentModel<R>,
    deltas: &[R],
    x0: &SnakeState<R>,
    params: &SnakeParams<R>,
    cost_spec: &CostSpec<R>,
    config: &MpcConfig<R>,
    window: (R, R),
    goal_direction: Vector2<R>,
) -> SimResult<Vec<RobustnessRow<R>>> {
    // Fails fast for non-viscous environments.
    base_env.with_scaled_c_trans(R::one())?;

    let speed_of = |env_plan: &EnvironmentModel<R>| -> SimResult<R> {
        let traj = run_mpc(x0, env_plan, base_env, params, cost_spec, config)?;
        Ok(gait_metrics(&traj, window.0, window.1, goal_direction)?.mean_speed)
    };

    let nominal_speed = speed_of(base_env)?;
    let rows: SimResult<Vec<RobustnessRow<R>>> = deltas
        .par_iter()
        .map(|&delta| {
            let speed = if delta == R::zero() {
                nominal_speed
            } else {
                speed_of(&base_env.with_scaled_c_trans(R::one() + delta)?)?
            };
            Ok(RobustnessRow {
                delta,
                speed,
                speed_reduction: (nominal_speed - speed) / nominal_speed,
            })
        })
        .collect();
    rows
}

/// Mean body heading: the average of the per-link forward directions
/// (opposite the longitudinal axes, since the head leads), as a unit vector.
pub fn mean_body_heading<R: Real>(state: &SnakeState<R>, params: &SnakeParams<R>) -> Vector2<R> {
    let sum = forward_kinematics(state, params)
        .iter()
        .fold(Vector2::zeros(), |acc, f| acc - f.long_axis());
    let norm = sum.norm();
    if norm > R::zero() {
        sum / norm
    } else {
        sum
    }
}
