//! Shared test oracles, written independently of the library's solver paths.
//!
//! The free-body oracle treats every link as an unconstrained rigid body and
//! solves for joint constraint forces with acceleration-level constraint
//! stabilization; the Riccati oracle solves finite-horizon LQR directly.
//! Both accept library inputs but share no assembly code with the library.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serpent_core::env::EnvironmentModel;
use serpent_core::types::{ControlVector, SnakeParams, SnakeState};

/// Pose and velocity of one free body in the chain.
#[derive(Debug, Clone)]
pub struct FreeBody {
    pub com: Vector2<f64>,
    pub angle: f64,
    pub com_vel: Vector2<f64>,
    pub ang_vel: f64,
}

/// Free-body accelerations plus the joint constraint forces that keep the
/// chain connected.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub com_acc: Vec<Vector2<f64>>,
    pub ang_acc: Vec<f64>,
    /// `joint_force[j]` is the world-frame force applied by link `j-1` on
    /// link `j` through joint `j`, for `j = 1..n-1`.
    pub joint_force: Vec<Vector2<f64>>,
}

fn cross(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Build per-link free bodies from the generalized state, using independent
/// trigonometry (link axes recomputed from scratch).
pub fn link_bodies(state: &SnakeState<f64>, params: &SnakeParams<f64>) -> Vec<FreeBody> {
    let n = params.n_links;
    let l = params.link_length;
    let mut bodies = Vec::with_capacity(n);
    let mut joint = state.head_pos;
    let mut joint_vel = state.head_vel;
    let mut angle = 0.0;
    let mut ang_vel = 0.0;
    for i in 0..n {
        angle += state.angles[i];
        ang_vel += state.angle_rates[i];
        // Longitudinal axis of a link whose frame is the world frame rotated
        // by `angle`, with local +y down the link.
        let axis = Vector2::new(-angle.sin(), angle.cos());
        // Velocity of a point r along the axis: d/dt (p + r·axis).
        let axis_dot = Vector2::new(-angle.cos(), -angle.sin()) * ang_vel;
        let com = joint + axis * (l / 2.0);
        let com_vel = joint_vel + axis_dot * (l / 2.0);
        bodies.push(FreeBody {
            com,
            angle,
            com_vel,
            ang_vel,
        });
        joint += axis * l;
        joint_vel += axis_dot * l;
    }
    bodies
}

/// Maximal-coordinates solve: unknowns are per-link CoM accelerations and
/// angular accelerations plus one 2D constraint force per interior joint.
///
/// Constraint stabilization terms `-2ξω·Ċ - ω²·C` are included even though
/// the bodies are constructed exactly on the constraint manifold.
pub fn solve_free_body(
    state: &SnakeState<f64>,
    u: &ControlVector<f64>,
    env: &EnvironmentModel<f64>,
    params: &SnakeParams<f64>,
) -> OracleSolution {
    let n = params.n_links;
    let l = params.link_length;
    let mass = params.link_mass;
    let inertia = mass * l * l / 12.0;
    let mu_v = params.joint_viscous_coeff;
    let bodies = link_bodies(state, params);

    // Unknown layout: [com_acc (2n) | ang_acc (n) | lambda (2(n-1))].
    let dim = 3 * n + 2 * (n - 1);
    let col_com = |i: usize| 2 * i;
    let col_ang = |i: usize| 2 * n + i;
    let col_lam = |j: usize| 3 * n + 2 * (j - 1);

    let mut mat = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);

    // External force and world mass matrix per link.
    for (i, body) in bodies.iter().enumerate() {
        let axis = Vector2::new(-body.angle.sin(), body.angle.cos());
        let trans = Vector2::new(body.angle.cos(), body.angle.sin());
        let rot = Matrix2::new(trans.x, axis.x, trans.y, axis.y);
        let local_vel = rot.transpose() * body.com_vel;
        let force_world = rot * env.reaction_force(local_vel, params);
        let mass_world = rot * env.mass_matrix_local(params) * rot.transpose();

        // Newton rows.
        let row = col_com(i);
        for r in 0..2 {
            for c in 0..2 {
                mat[(row + r, col_com(i) + c)] = mass_world[(r, c)];
            }
        }
        let mut f_ext = force_world;
        if env.in_plane_gravity() {
            f_ext += mass_world * Vector2::new(0.0, -params.gravity);
        }
        rhs[row] = f_ext.x;
        rhs[row + 1] = f_ext.y;

        // Euler row: I·θ̈ = Σ (r × F) + Σ applied joint moments; constraint
        // force moments are filled in below.
        mat[(col_ang(i), col_ang(i))] = inertia;
        rhs[col_ang(i)] = 0.0;
    }

    // Motor torques and joint damping: +m_j on link j, -m_j on link j-1.
    for j in 1..n {
        let moment = u.torques[j - 1] - mu_v * state.angle_rates[j];
        rhs[col_ang(j)] += moment;
        rhs[col_ang(j - 1)] -= moment;
    }

    // Joint constraint forces and the acceleration-level constraints.
    let (kp, kd) = (10.0, 10.0);
    for j in 1..n {
        let behind = &bodies[j - 1];
        let ahead = &bodies[j];
        let axis_b = Vector2::new(-behind.angle.sin(), behind.angle.cos());
        let axis_a = Vector2::new(-ahead.angle.sin(), ahead.angle.cos());
        let point = behind.com + axis_b * (l / 2.0);

        // +lambda on link j at `point`, reaction on link j-1.
        for r in 0..2 {
            mat[(col_com(j) + r, col_lam(j) + r)] -= 1.0;
            mat[(col_com(j - 1) + r, col_lam(j) + r)] += 1.0;
        }
        // Moments of the constraint force about each CoM: r × λ expands to
        // coefficients (-r_y, r_x) on (λ_x, λ_y).
        let r_ahead = point - ahead.com;
        mat[(col_ang(j), col_lam(j))] -= -r_ahead.y;
        mat[(col_ang(j), col_lam(j) + 1)] -= r_ahead.x;
        let r_behind = point - behind.com;
        mat[(col_ang(j - 1), col_lam(j))] += -r_behind.y;
        mat[(col_ang(j - 1), col_lam(j) + 1)] += r_behind.x;

        // Acceleration of the attachment point on each body:
        // c̈ + θ̈·(ẑ×r) - θ̇²·r; equate across the joint with Baumgarte
        // feedback on the (identically zero) position/velocity error.
        let c_err = (ahead.com - axis_a * (l / 2.0)) - point;
        let point_vel_b = behind.com_vel
            + Vector2::new(-r_behind.y, r_behind.x) * behind.ang_vel;
        let r_a = -axis_a * (l / 2.0);
        let point_vel_a = ahead.com_vel + Vector2::new(-r_a.y, r_a.x) * ahead.ang_vel;
        let cdot_err = point_vel_a - point_vel_b;

        let row = col_lam(j);
        for r in 0..2 {
            mat[(row + r, col_com(j) + r)] += 1.0;
            mat[(row + r, col_com(j - 1) + r)] -= 1.0;
        }
        // ẑ×r terms for the angular unknowns.
        mat[(row, col_ang(j))] += -r_a.y;
        mat[(row + 1, col_ang(j))] += r_a.x;
        mat[(row, col_ang(j - 1))] -= -r_behind.y;
        mat[(row + 1, col_ang(j - 1))] -= r_behind.x;
        let centripetal =
            r_a * (ahead.ang_vel * ahead.ang_vel) - r_behind * (behind.ang_vel * behind.ang_vel);
        let stabilization = -(cdot_err * kd + c_err * kp);
        rhs[row] = centripetal.x + stabilization.x;
        rhs[row + 1] = centripetal.y + stabilization.y;
    }

    let solution = mat.lu().solve(&rhs).expect("oracle system solvable");
    let mut com_acc = Vec::with_capacity(n);
    let mut ang_acc = Vec::with_capacity(n);
    for i in 0..n {
        com_acc.push(Vector2::new(solution[col_com(i)], solution[col_com(i) + 1]));
        ang_acc.push(solution[col_ang(i)]);
    }
    let mut joint_force = Vec::with_capacity(n - 1);
    for j in 1..n {
        joint_force.push(Vector2::new(solution[col_lam(j)], solution[col_lam(j) + 1]));
    }
    OracleSolution {
        com_acc,
        ang_acc,
        joint_force,
    }
}

/// Finite-horizon LQR gains and cost-to-go for `x⁺ = Ax + Bu` with stage
/// cost `xᵀQx + uᵀRu` and terminal `xᵀQf x`.
pub struct RiccatiSolution {
    /// `u_t = -gains[t]·x_t`.
    pub gains: Vec<DMatrix<f64>>,
    /// Cost-to-go matrices `P_t`, `t = 0..=N`.
    pub cost_to_go: Vec<DMatrix<f64>>,
}

pub fn riccati_recursion(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    qf: &DMatrix<f64>,
    horizon: usize,
) -> RiccatiSolution {
    let mut cost_to_go = vec![DMatrix::zeros(0, 0); horizon + 1];
    let mut gains = vec![DMatrix::zeros(0, 0); horizon];
    cost_to_go[horizon] = qf.clone();
    for t in (0..horizon).rev() {
        let p_next = cost_to_go[t + 1].clone();
        let gram = r + b.transpose() * &p_next * b;
        let gain = gram
            .try_inverse()
            .expect("control Gramian invertible")
            * (b.transpose() * &p_next * a);
        let closed = a - b * &gain;
        let p = q + gain.transpose() * r * &gain + closed.transpose() * &p_next * &closed;
        cost_to_go[t] = (&p + p.transpose()) * 0.5;
        gains[t] = gain;
    }
    RiccatiSolution { gains, cost_to_go }
}

/// Relative error between two vectors with an absolute floor.
pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let scale = a.norm().max(b.norm()).max(1e-6);
    (a - b).norm() / scale
}

/// Deterministic pseudo-random state generator (no external RNG needed).
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn random_state(&mut self, n: usize) -> SnakeState<f64> {
        let mut angles = DVector::zeros(n);
        let mut rates = DVector::zeros(n);
        angles[0] = self.range(-3.0, 3.0);
        for i in 1..n {
            angles[i] = self.range(-1.2, 1.2);
        }
        for i in 0..n {
            rates[i] = self.range(-2.0, 2.0);
        }
        SnakeState {
            head_pos: Vector2::new(self.range(-1.0, 1.0), self.range(-1.0, 1.0)),
            angles,
            head_vel: Vector2::new(self.range(-1.0, 1.0), self.range(-1.0, 1.0)),
            angle_rates: rates,
        }
    }

    pub fn random_control(&mut self, n_joints: usize, limit: f64) -> ControlVector<f64> {
        ControlVector::from_vector(DVector::from_fn(n_joints, |_, _| {
            self.range(-limit, limit)
        }))
    }
}
