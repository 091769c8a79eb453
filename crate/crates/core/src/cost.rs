//! Objective terms for gait synthesis: goal-distance running/terminal cost,
//! quadratic control effort, and a logistic obstacle barrier over
//! link-segment/disc distances.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};
use crate::scalar::{real, Real};
use crate::types::{forward_kinematics, ControlVector, LinkFrame, SnakeParams, SnakeState};

fn default_amplitude<R: Real>() -> R {
    R::one()
}

fn default_steepness<R: Real>() -> R {
    real(50.0)
}

fn default_goal_eps<R: Real>() -> R {
    real(1e-6)
}

/// Disc obstacle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle<R: Real> {
    pub center: Vector2<R>,
    pub radius: R,
}

/// Cost-shaping parameters of the gait-synthesis objective.
///
/// The running cost is
/// `α·sqrt(‖goal - head‖² + ε_g²) + β·Σ τ_j² + obstacle barrier`; the
/// terminal cost drops the effort term. `ε_g` is a tiny smoothing constant
/// that keeps the distance term twice differentiable at the goal, and the
/// barrier for each (obstacle, link) pair with signed distance `d` is
/// `A / (1 + exp(2·s·d))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec<R: Real> {
    /// Desired head position \[m\].
    pub goal: Vector2<R>,
    /// Goal-distance weight α.
    pub alpha: R,
    /// Control-effort weight β \[1/(N²·m²)\].
    pub beta: R,
    #[serde(default)]
    pub obstacles: Vec<Obstacle<R>>,
    /// Barrier height A per (obstacle, link) pair.
    #[serde(default = "default_amplitude")]
    pub obstacle_amplitude: R,
    /// Barrier steepness s \[1/m\]; the transition happens over ~`2/s`.
    #[serde(default = "default_steepness")]
    pub obstacle_steepness: R,
    /// Goal-distance smoothing ε_g \[m\].
    #[serde(default = "default_goal_eps")]
    pub goal_smoothing_eps: R,
}

impl<R: Real> CostSpec<R> {
    /// Obstacle-free objective toward `goal`.
    pub fn goal_only(goal: Vector2<R>, alpha: R, beta: R) -> Self {
        Self {
            goal,
            alpha,
            beta,
            obstacles: Vec::new(),
            obstacle_amplitude: default_amplitude(),
            obstacle_steepness: default_steepness(),
            goal_smoothing_eps: default_goal_eps(),
        }
    }

    pub fn validate(&self) -> SimResult<()> {
        let mut problems = Vec::new();
        if self.alpha < R::zero() || !self.alpha.finite() {
            problems.push("alpha must be non-negative".to_string());
        }
        if self.beta < R::zero() || !self.beta.finite() {
            problems.push("beta must be non-negative".to_string());
        }
        if self.obstacle_amplitude < R::zero() {
            problems.push("obstacle_amplitude must be non-negative".to_string());
        }
        if !(self.obstacle_steepness > R::zero()) {
            problems.push("obstacle_steepness must be strictly positive".to_string());
        }
        if !(self.goal_smoothing_eps > R::zero()) {
            problems.push("goal_smoothing_eps must be strictly positive".to_string());
        }
        for (i, obs) in self.obstacles.iter().enumerate() {
            if obs.radius < R::zero() || !obs.radius.finite() {
                problems.push(format!("obstacle {i} radius must be non-negative"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SimError::InvalidParams(problems.join("; ")))
        }
    }

    fn goal_term(&self, head: Vector2<R>) -> R {
        let d2 = (self.goal - head).norm_squared();
        self.alpha * (d2 + self.goal_smoothing_eps * self.goal_smoothing_eps).sqrt()
    }
}

/// Signed distance between a link's segment and a disc obstacle: the
/// point-segment distance from the obstacle center minus its radius.
/// Negative values mean the segment cuts into the disc.
pub fn segment_obstacle_distance<R: Real>(
    link: &LinkFrame<R>,
    params: &SnakeParams<R>,
    obstacle: &Obstacle<R>,
) -> R {
    let a = link.joint_pos;
    let b = link.distal_pos(params.link_length);
    let ab = b - a;
    let len_sq = ab.norm_squared();
    let t = if len_sq > R::zero() {
        ((obstacle.center - a).dot(&ab) / len_sq).clamp(R::zero(), R::one())
    } else {
        R::zero()
    };
    let closest = a + ab * t;
    (obstacle.center - closest).norm() - obstacle.radius
}

/// Sum of logistic barriers over every (obstacle, link) pair. Zero when the
/// spec contains no obstacles.
pub fn obstacle_cost<R: Real>(
    state: &SnakeState<R>,
    spec: &CostSpec<R>,
    params: &SnakeParams<R>,
) -> R {
    if spec.obstacles.is_empty() {
        return R::zero();
    }
    let frames = forward_kinematics(state, params);
    obstacle_cost_frames(&frames, spec, params)
}

pub(crate) fn obstacle_cost_frames<R: Real>(
    frames: &[LinkFrame<R>],
    spec: &CostSpec<R>,
    params: &SnakeParams<R>,
) -> R {
    let two = real::<R>(2.0);
    let mut total = R::zero();
    for obstacle in &spec.obstacles {
        for frame in frames {
            let d = segment_obstacle_distance(frame, params, obstacle);
            total += spec.obstacle_amplitude / (R::one() + (two * spec.obstacle_steepness * d).exp());
        }
    }
    total
}

/// Per-step cost of a state/control pair.
pub fn running_cost<R: Real>(
    state: &SnakeState<R>,
    u: &ControlVector<R>,
    spec: &CostSpec<R>,
    params: &SnakeParams<R>,
) -> R {
    spec.goal_term(state.head_pos) + spec.beta * u.torques.norm_squared()
        + obstacle_cost(state, spec, params)
}

/// Cost of the final state of a horizon (no effort term).
pub fn final_cost<R: Real>(state: &SnakeState<R>, spec: &CostSpec<R>, params: &SnakeParams<R>) -> R {
    spec.goal_term(state.head_pos) + obstacle_cost(state, spec, params)
}
