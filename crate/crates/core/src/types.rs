//! Shared domain types: robot parameters, state, controls, trajectories, and
//! per-link frames produced by forward kinematics.
//!
//! # Conventions
//!
//! Links are indexed `0..n_links`, head first. Link `i` runs from its
//! proximal joint `p_i` to its distal joint `p_{i+1}`; joint `0` is the free
//! head end and carries no motor. The world angle of link `i` is the running
//! sum `Q_i = q_0 + q_1 + … + q_i`, counterclockwise positive, where `q_0`
//! is the orientation of link 0 and `q_1..` are relative joint angles. A
//! zero-angle snake extends along world `+y`.
//!
//! Each link has a body frame at its proximal end with the local `y` axis
//! pointing down the link (longitudinal) and the local `x` axis transverse
//! to it, so the frame of link `i` is the world frame rotated by `Q_i`.
//! Local 2-vectors therefore store `(x, y) = (transverse, longitudinal)`
//! components.

use nalgebra::{DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};
use crate::scalar::{real, Real};

fn zero<R: Real>() -> R {
    R::zero()
}

/// Geometric, inertial, and actuation constants of the robot.
///
/// Links are uniform: one length and one mass apply to all of them. Per-link
/// arrays would slot in here if a robot with non-uniform links is ever
/// needed; everything downstream reads these values through the accessors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnakeParams<R: Real> {
    /// Number of links, at least 2.
    pub n_links: usize,
    /// Link length `l` \[m\].
    pub link_length: R,
    /// Link mass `m` \[kg\].
    pub link_mass: R,
    /// Cross-section height `a` \[m\], the transverse face seen by the flow.
    pub cross_height: R,
    /// Cross-section width `b` \[m\].
    pub cross_width: R,
    /// Joint viscous damping \[N·m·s/rad\]; defaults to zero.
    #[serde(default = "zero")]
    pub joint_viscous_coeff: R,
    /// Saturation magnitude for every joint torque \[N·m\].
    pub torque_limit: R,
    /// Gravitational acceleration magnitude \[m/s²\], used for normal forces.
    pub gravity: R,
    /// Control period \[s\].
    pub dt: R,
}

impl<R: Real> SnakeParams<R> {
    /// Reference five-link robot used by the bundled configs and tests:
    /// 0.2 m / 0.2 kg links with a 0.15 m × 0.05 m cross section, 1 N·m
    /// torque cap, and a 100 Hz control rate.
    pub fn reference() -> Self {
        Self {
            n_links: 5,
            link_length: real(0.2),
            link_mass: real(0.2),
            cross_height: real(0.15),
            cross_width: real(0.05),
            joint_viscous_coeff: R::zero(),
            torque_limit: real(1.0),
            gravity: real(9.81),
            dt: real(0.01),
        }
    }

    /// Number of actuated joints (`n_links - 1`).
    pub fn n_joints(&self) -> usize {
        self.n_links - 1
    }

    /// Dimension of the flattened state vector: `2·n_links + 4`.
    pub fn state_dim(&self) -> usize {
        2 * self.n_links + 4
    }

    /// Rotational inertia of one uniform link about its center of mass.
    pub fn link_inertia(&self) -> R {
        self.link_mass * self.link_length * self.link_length / real(12.0)
    }

    pub fn validate(&self) -> SimResult<()> {
        let mut problems = Vec::new();
        if self.n_links < 2 {
            problems.push("n_links must be at least 2".to_string());
        }
        let positive: [(&str, R); 6] = [
            ("link_length", self.link_length),
            ("link_mass", self.link_mass),
            ("cross_height", self.cross_height),
            ("cross_width", self.cross_width),
            ("gravity", self.gravity),
            ("dt", self.dt),
        ];
        for (name, value) in positive {
            if !(value > R::zero()) || !value.finite() {
                problems.push(format!("{name} must be strictly positive"));
            }
        }
        if !(self.torque_limit > R::zero()) || !self.torque_limit.finite() {
            problems.push("torque_limit must be strictly positive".to_string());
        }
        if self.joint_viscous_coeff < R::zero() || !self.joint_viscous_coeff.finite() {
            problems.push("joint_viscous_coeff must be non-negative".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SimError::InvalidParams(problems.join("; ")))
        }
    }
}

/// Full robot state: head pose, joint angles, and their rates.
#[derive(Debug, Clone, PartialEq)]
pub struct SnakeState<R: Real> {
    /// World position of the head (proximal end of link 0) \[m\].
    pub head_pos: Vector2<R>,
    /// `angles[0]` is the world orientation of link 0; `angles[i]` for
    /// `i ≥ 1` is the relative angle of link `i` w.r.t. link `i-1`,
    /// counterclockwise positive \[rad\].
    pub angles: DVector<R>,
    /// World velocity of the head \[m/s\].
    pub head_vel: Vector2<R>,
    /// Time derivatives of `angles` \[rad/s\].
    pub angle_rates: DVector<R>,
}

impl<R: Real> SnakeState<R> {
    /// Snake at rest with all relative angles zero and link 0 at `heading`.
    ///
    /// `heading` is the world orientation `q_0`; with `heading = 0` the body
    /// extends along `+y`. The experiment configs use `-π/2` so the body
    /// extends along `+x` and the head faces `-x`.
    pub fn straight_rest(n_links: usize, heading: R) -> Self {
        let mut angles = DVector::zeros(n_links);
        angles[0] = heading;
        Self {
            head_pos: Vector2::zeros(),
            angles,
            head_vel: Vector2::zeros(),
            angle_rates: DVector::zeros(n_links),
        }
    }

    /// Rest pose with an alternating S-bend of `bend` radians on the joints.
    ///
    /// The gait-synthesis runs start here rather than perfectly straight: an
    /// exactly straight chain is a symmetry point of the goal cost where the
    /// torque gradient vanishes identically.
    pub fn s_pose(n_links: usize, heading: R, bend: R) -> Self {
        let mut state = Self::straight_rest(n_links, heading);
        for j in 1..n_links {
            state.angles[j] = if j % 2 == 0 { bend } else { -bend };
        }
        state
    }

    pub fn n_links(&self) -> usize {
        self.angles.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.n_links() + 4
    }

    pub fn is_finite(&self) -> bool {
        self.head_pos.iter().all(|v| v.finite())
            && self.angles.iter().all(|v| v.finite())
            && self.head_vel.iter().all(|v| v.finite())
            && self.angle_rates.iter().all(|v| v.finite())
    }

    /// Flatten to `[x0, y0, q0..q_{n-1}, vx0, vy0, dq0..dq_{n-1}]`.
    pub fn to_vector(&self) -> DVector<R> {
        let n = self.n_links();
        let mut v = DVector::zeros(2 * n + 4);
        v[0] = self.head_pos.x;
        v[1] = self.head_pos.y;
        for i in 0..n {
            v[2 + i] = self.angles[i];
        }
        v[n + 2] = self.head_vel.x;
        v[n + 3] = self.head_vel.y;
        for i in 0..n {
            v[n + 4 + i] = self.angle_rates[i];
        }
        v
    }

    /// Inverse of [`SnakeState::to_vector`]. Panics if the length is not of
    /// the form `2n + 4`.
    pub fn from_vector(v: &DVector<R>) -> Self {
        assert!(v.len() >= 6 && v.len().is_multiple_of(2), "bad state vector length");
        let n = (v.len() - 4) / 2;
        let mut angles = DVector::zeros(n);
        let mut rates = DVector::zeros(n);
        for i in 0..n {
            angles[i] = v[2 + i];
            rates[i] = v[n + 4 + i];
        }
        Self {
            head_pos: Vector2::new(v[0], v[1]),
            angles,
            head_vel: Vector2::new(v[n + 2], v[n + 3]),
            angle_rates: rates,
        }
    }
}

/// Joint torques `τ_1..τ_{n-1}`; `torques[j]` acts at joint `j+1` between
/// link `j` and link `j+1`, positive driving the relative angle
/// counterclockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlVector<R: Real> {
    pub torques: DVector<R>,
}

impl<R: Real> ControlVector<R> {
    pub fn zeros(n_joints: usize) -> Self {
        Self {
            torques: DVector::zeros(n_joints),
        }
    }

    pub fn from_vector(v: DVector<R>) -> Self {
        Self { torques: v }
    }

    pub fn n_joints(&self) -> usize {
        self.torques.len()
    }

    /// Saturate every torque to `±limit`.
    pub fn clamped(&self, limit: R) -> Self {
        Self {
            torques: self.torques.map(|t| t.clamp(-limit, limit)),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.torques.iter().all(|t| t.finite())
    }
}

/// Time-indexed rollout at a fixed step: `states.len() == controls.len() + 1`
/// and `controls[k]` acts over `[k·dt, (k+1)·dt)`.
#[derive(Debug, Clone)]
pub struct Trajectory<R: Real> {
    pub dt: R,
    pub states: Vec<SnakeState<R>>,
    pub controls: Vec<ControlVector<R>>,
}

impl<R: Real> Trajectory<R> {
    pub fn new(dt: R, states: Vec<SnakeState<R>>, controls: Vec<ControlVector<R>>) -> SimResult<Self> {
        if states.len() != controls.len() + 1 {
            return Err(SimError::InvalidParams(format!(
                "trajectory needs len(states) == len(controls) + 1, got {} and {}",
                states.len(),
                controls.len()
            )));
        }
        if !(dt > R::zero()) {
            return Err(SimError::InvalidParams("trajectory dt must be positive".into()));
        }
        Ok(Self { dt, states, controls })
    }

    /// Number of control intervals.
    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    pub fn duration(&self) -> R {
        self.dt * real(self.controls.len() as f64)
    }
}

/// Pose and velocity of one link, produced by [`forward_kinematics`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinkFrame<R: Real> {
    /// World position of the proximal joint \[m\].
    pub joint_pos: Vector2<R>,
    /// World angle `Q_i` of the link frame \[rad\].
    pub angle: R,
    /// World angular velocity `Q̇_i` \[rad/s\].
    pub ang_vel: R,
    /// World position of the center of mass (link midpoint) \[m\].
    pub com_pos: Vector2<R>,
    /// World velocity of the center of mass \[m/s\].
    pub com_vel_world: Vector2<R>,
    /// Center-of-mass velocity in the link frame \[m/s\], stored as
    /// `(x, y) = (transverse, longitudinal)` components.
    pub com_vel_local: Vector2<R>,
}

impl<R: Real> LinkFrame<R> {
    /// World direction of the local `y` (longitudinal) axis.
    pub fn long_axis(&self) -> Vector2<R> {
        Vector2::new(-self.angle.sin(), self.angle.cos())
    }

    /// World direction of the local `x` (transverse) axis.
    pub fn trans_axis(&self) -> Vector2<R> {
        Vector2::new(self.angle.cos(), self.angle.sin())
    }

    /// Rotation matrix taking local `(transverse, longitudinal)` components
    /// to world components; its transpose is the inverse map.
    pub fn rotation(&self) -> Matrix2<R> {
        let (s, c) = (self.angle.sin(), self.angle.cos());
        // Columns are the world images of the local x and y axes.
        Matrix2::new(c, -s, s, c)
    }

    pub fn world_to_local(&self, v: Vector2<R>) -> Vector2<R> {
        self.rotation().transpose() * v
    }

    pub fn local_to_world(&self, v: Vector2<R>) -> Vector2<R> {
        self.rotation() * v
    }

    /// World position of the distal joint.
    pub fn distal_pos(&self, link_length: R) -> Vector2<R> {
        self.joint_pos + self.long_axis() * link_length
    }
}

/// Compose the kinematic chain: per-link world pose and velocity from the
/// head pose and the joint angles/rates.
pub fn forward_kinematics<R: Real>(state: &SnakeState<R>, params: &SnakeParams<R>) -> Vec<LinkFrame<R>> {
    let n = params.n_links;
    debug_assert_eq!(state.n_links(), n, "state/params link count mismatch");
    let l = params.link_length;
    let half_l = l / real(2.0);

    let mut frames = Vec::with_capacity(n);
    let mut joint_pos = state.head_pos;
    let mut joint_vel = state.head_vel;
    let mut angle = R::zero();
    let mut ang_vel = R::zero();

    for i in 0..n {
        angle += state.angles[i];
        ang_vel += state.angle_rates[i];
        let long = Vector2::new(-angle.sin(), angle.cos());
        let trans = Vector2::new(angle.cos(), angle.sin());

        let com_pos = joint_pos + long * half_l;
        // d/dt of a point offset by r along the link: v_joint - r·Q̇·trans.
        let com_vel = joint_vel - trans * (half_l * ang_vel);
        let com_vel_local = Vector2::new(com_vel.dot(&trans), com_vel.dot(&long));

        frames.push(LinkFrame {
            joint_pos,
            angle,
            ang_vel,
            com_pos,
            com_vel_world: com_vel,
            com_vel_local,
        });

        joint_pos += long * l;
        joint_vel -= trans * (l * ang_vel);
    }
    frames
}
