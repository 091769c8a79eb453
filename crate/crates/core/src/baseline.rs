//! Serpenoid-curve reference gaits: the joint-space sinusoid, a PD tracking
//! controller with torque saturation, grid search over gait and gain
//! parameters, and Pareto-front extraction over (speed, power).

use nalgebra::{DVector, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::gait_metrics;
use crate::dynamics::step_rk4;
use crate::env::EnvironmentModel;
use crate::error::{SimError, SimResult};
use crate::scalar::{real, Real};
use crate::types::{ControlVector, SnakeParams, SnakeState, Trajectory};

fn zero<R: Real>() -> R {
    R::zero()
}

/// Serpenoid gait parameters plus the PD gains used to track it.
///
/// The reference for joint `i ≥ 1` is
/// `q_i(t) = amplitude·sin(2π·frequency·t + (i-1)·phase_offset) + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SerpenoidParams<R: Real> {
    /// Joint amplitude α_s \[rad\].
    pub amplitude: R,
    /// Undulation frequency \[Hz\].
    pub frequency: R,
    /// Joint-to-joint phase lag β_s \[rad\].
    pub phase_offset: R,
    /// Angular bias γ \[rad\]; zero for straight-line gaits, nonzero turns.
    #[serde(default = "zero")]
    pub bias: R,
    /// Proportional gain \[N·m/rad\].
    pub kp: R,
    /// Joint-rate damping gain \[N·m·s/rad\].
    pub kd: R,
}

impl<R: Real> SerpenoidParams<R> {
    pub fn validate(&self) -> SimResult<()> {
        if !(self.frequency > R::zero()) {
            return Err(SimError::InvalidParams("frequency must be positive".into()));
        }
        if self.kp < R::zero() || self.kd < R::zero() {
            return Err(SimError::InvalidParams("gains must be non-negative".into()));
        }
        Ok(())
    }
}

/// Reference angle for joint `joint_index ≥ 1` at time `t`.
pub fn serpenoid_reference<R: Real>(t: R, joint_index: usize, params: &SerpenoidParams<R>) -> R {
    debug_assert!(joint_index >= 1, "joints are numbered from 1");
    let phase = real::<R>(2.0) * R::pi() * params.frequency * t
        + real::<R>((joint_index - 1) as f64) * params.phase_offset;
    params.amplitude * phase.sin() + params.bias
}

/// PD tracking torques `τ_j = clamp(kp·(q_ref_j - q_j) - kd·q̇_j)`.
///
/// Damping acts on the joint rate rather than the reference-error rate, so
/// the controller needs no reference derivative.
pub fn pd_torque<R: Real>(
    state: &SnakeState<R>,
    t: R,
    params: &SerpenoidParams<R>,
    torque_limit: R,
) -> ControlVector<R> {
    let n_joints = state.n_links() - 1;
    let mut torques = DVector::zeros(n_joints);
    for j in 1..=n_joints {
        let reference = serpenoid_reference(t, j, params);
        let raw = params.kp * (reference - state.angles[j]) - params.kd * state.angle_rates[j];
        torques[j - 1] = raw.clamp(-torque_limit, torque_limit);
    }
    ControlVector::from_vector(torques)
}

/// RK4 rollout of a PD-tracked serpenoid gait from the straight rest pose
/// (body along `+x`, head facing `-x`).
///
/// A state blowing up to NaN/infinity is reported as [`SimError::NonFinite`]
/// so grid search can count the cell as failed instead of crashing.
pub fn rollout_serpenoid<R: Real>(
    params: &SerpenoidParams<R>,
    env: &EnvironmentModel<R>,
    snake: &SnakeParams<R>,
    duration: R,
) -> SimResult<Trajectory<R>> {
    params.validate()?;
    let steps = (duration / snake.dt).round().to_f64() as usize;
    let mut state = SnakeState::straight_rest(snake.n_links, -R::frac_pi_2());
    let mut states = Vec::with_capacity(steps + 1);
    let mut controls = Vec::with_capacity(steps);
    states.push(state.clone());
    for k in 0..steps {
        let t = snake.dt * real(k as f64);
        let u = pd_torque(&state, t, params, snake.torque_limit);
        state = step_rk4(&state, &u, snake.dt, env, snake)?;
        if !state.is_finite() {
            return Err(SimError::NonFinite { step: k });
        }
        controls.push(u);
        states.push(state.clone());
    }
    Trajectory::new(snake.dt, states, controls)
}

/// Inclusive sweep `min, min+interval, …, max` over one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec<R: Real> {
    pub min: R,
    pub max: R,
    pub interval: R,
}

impl<R: Real> RangeSpec<R> {
    /// A single-value range.
    pub fn fixed(value: R) -> Self {
        Self {
            min: value,
            max: value,
            interval: R::one(),
        }
    }

    pub fn validate(&self) -> SimResult<()> {
        if !(self.min <= self.max) || !(self.interval > R::zero()) {
            return Err(SimError::InvalidParams(
                "range needs min <= max and interval > 0".into(),
            ));
        }
        Ok(())
    }

    /// Grid values, tolerating round-off at the upper edge.
    pub fn values(&self) -> Vec<R> {
        let slack = self.interval * real(1e-9);
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let v = self.min + self.interval * real(k as f64);
            if v > self.max + slack {
                break;
            }
            out.push(v);
            k += 1;
        }
        out
    }

    /// Every second grid value, used by the reduced desk-scale sweeps.
    pub fn thinned(&self) -> Self {
        Self {
            min: self.min,
            max: self.max,
            interval: self.interval * real(2.0),
        }
    }
}

/// Grid-search space over serpenoid and PD parameters; the bias γ stays
/// fixed at zero (the straight-line baseline does not turn).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec<R: Real> {
    pub frequency: RangeSpec<R>,
    pub amplitude: RangeSpec<R>,
    pub phase_offset: RangeSpec<R>,
    pub kp: RangeSpec<R>,
    pub kd: RangeSpec<R>,
}

impl<R: Real> GridSpec<R> {
    /// The reference sweep: f ∈ 0.5..10 step 0.25 Hz, α ∈ 0.1π..π step
    /// 0.1π, β ∈ 0.5π..4π step 0.1π, kp ∈ 0.1..3 step 0.1, kd ∈ 0.05..0.2
    /// step 0.01.
    pub fn reference() -> Self {
        let pi = real::<R>(std::f64::consts::PI);
        Self {
            frequency: RangeSpec {
                min: real(0.5),
                max: real(10.0),
                interval: real(0.25),
            },
            amplitude: RangeSpec {
                min: pi * real(0.1),
                max: pi,
                interval: pi * real(0.1),
            },
            phase_offset: RangeSpec {
                min: pi * real(0.5),
                max: pi * real(4.0),
                interval: pi * real(0.1),
            },
            kp: RangeSpec {
                min: real(0.1),
                max: real(3.0),
                interval: real(0.1),
            },
            kd: RangeSpec {
                min: real(0.05),
                max: real(0.2),
                interval: real(0.01),
            },
        }
    }

    /// Desk-scale variant of [`GridSpec::reference`]: every second frequency
    /// and phase value, the full amplitude sweep, gains pinned to
    /// kp = 1.0, kd = 0.1.
    pub fn reference_reduced() -> Self {
        let full = Self::reference();
        Self {
            frequency: full.frequency.thinned(),
            amplitude: full.amplitude,
            phase_offset: full.phase_offset.thinned(),
            kp: RangeSpec::fixed(real(1.0)),
            kd: RangeSpec::fixed(real(0.1)),
        }
    }

    pub fn validate(&self) -> SimResult<()> {
        self.frequency.validate()?;
        self.amplitude.validate()?;
        self.phase_offset.validate()?;
        self.kp.validate()?;
        self.kd.validate()
    }

    /// Number of cells in the sweep.
    pub fn cell_count(&self) -> usize {
        self.frequency.values().len()
            * self.amplitude.values().len()
            * self.phase_offset.values().len()
            * self.kp.values().len()
            * self.kd.values().len()
    }

    /// Row-major enumeration over (f, α, β, kp, kd).
    pub fn cells(&self) -> Vec<SerpenoidParams<R>> {
        let mut out = Vec::with_capacity(self.cell_count());
        for &f in &self.frequency.values() {
            for &amplitude in &self.amplitude.values() {
                for &phase in &self.phase_offset.values() {
                    for &kp in &self.kp.values() {
                        for &kd in &self.kd.values() {
                            out.push(SerpenoidParams {
                                amplitude,
                                frequency: f,
                                phase_offset: phase,
                                bias: R::zero(),
                                kp,
                                kd,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// Gait parameters attached to an evaluated point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaitParams<R: Real> {
    Serpenoid(SerpenoidParams<R>),
    Mpc { alpha: R, beta: R, goal: Vector2<R> },
}

/// One evaluated gait: measured speed and power plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint<R: Real> {
    /// Goal-ward mean speed over the measurement window \[m/s\].
    pub speed: R,
    /// Mean mechanical power over the window \[W\].
    pub power: R,
    pub params: GaitParams<R>,
    /// Source tag for plots and file outputs.
    pub label: String,
}

/// Grid-search output: evaluated points in enumeration order plus the count
/// of rollouts that blew up and were excluded.
#[derive(Debug, Clone)]
pub struct GridResult<R: Real> {
    pub points: Vec<ParetoPoint<R>>,
    pub failures: usize,
}

/// Evaluate every grid cell: a `duration`-second rollout from rest with the
/// first `ramp_up` seconds excluded from the speed/power measurement taken
/// along `direction`.
///
/// The recorded speed is the magnitude of the projected displacement rate:
/// serpenoid gaits travel along the body line, and the sign of that travel
/// flips across the phase-offset range, so the scalar "forward speed" of a
/// cell is direction-agnostic.
///
/// Cells run in parallel; the output order is the row-major enumeration
/// order regardless of scheduling.
pub fn grid_search<R: Real>(
    grid: &GridSpec<R>,
    env: &EnvironmentModel<R>,
    snake: &SnakeParams<R>,
    duration: R,
    ramp_up: R,
    direction: Vector2<R>,
) -> SimResult<GridResult<R>> {
    grid.validate()?;
    snake.validate()?;
    env.validate()?;
    let cells = grid.cells();
    let label = env.label();

    let evaluated: Vec<Option<ParetoPoint<R>>> = cells
        .par_iter()
        .map(|cell| {
            let traj = rollout_serpenoid(cell, env, snake, duration).ok()?;
            let metrics = gait_metrics(&traj, ramp_up, duration, direction).ok()?;
            Some(ParetoPoint {
                speed: metrics.mean_speed.abs(),
                power: metrics.mean_power,
                params: GaitParams::Serpenoid(cell.clone()),
                label: label.to_string(),
            })
        })
        .collect();

    let failures = evaluated.iter().filter(|p| p.is_none()).count();
    Ok(GridResult {
        points: evaluated.into_iter().flatten().collect(),
        failures,
    })
}

/// Extract the undominated subset under (maximize speed, minimize power),
/// sorted by speed ascending.
///
/// A point dominates another when its speed is no lower and its power no
/// higher, with at least one strict inequality. Duplicate (speed, power)
/// pairs keep their first occurrence in enumeration order.
pub fn pareto_front<R: Real>(points: &[ParetoPoint<R>]) -> Vec<ParetoPoint<R>> {
    let mut front: Vec<ParetoPoint<R>> = Vec::new();
    for candidate in points {
        let dominated = points.iter().any(|other| {
            (other.speed >= candidate.speed && other.power <= candidate.power)
                && (other.speed > candidate.speed || other.power < candidate.power)
        });
        if dominated {
            continue;
        }
        if front
            .iter()
            .any(|kept| kept.speed == candidate.speed && kept.power == candidate.power)
        {
            continue;
        }
        front.push(candidate.clone());
    }
    front.sort_by(|a, b| a.speed.partial_cmp(&b.speed).expect("finite speeds"));
    front
}

/// Piecewise-linear interpolation of the front's power at `speed`, clamping
/// to the front's speed range.
pub fn front_power_at<R: Real>(front: &[ParetoPoint<R>], speed: R) -> Option<R> {
    if front.is_empty() {
        return None;
    }
    if speed <= front[0].speed {
        return Some(front[0].power);
    }
    if speed >= front[front.len() - 1].speed {
        return Some(front[front.len() - 1].power);
    }
    for pair in front.windows(2) {
        if speed >= pair[0].speed && speed <= pair[1].speed {
            let span = pair[1].speed - pair[0].speed;
            if span <= R::zero() {
                return Some(pair[0].power);
            }
            let t = (speed - pair[0].speed) / span;
            return Some(pair[0].power + (pair[1].power - pair[0].power) * t);
        }
    }
    None
}
