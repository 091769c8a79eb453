//! Per-timestep chain dynamics: assemble and solve the Newton-Euler
//! equilibrium system for accelerations and internal joint forces, then
//! integrate the state forward.
//!
//! # Model
//!
//! Each link is a uniform rod of mass `m`, length `l`, and inertia
//! `m·l²/12` about its midpoint. Writing `u_i` for the longitudinal axis,
//! `t_i` for the transverse axis, and `f_j` for the force link `j-1` applies
//! to link `j` through joint `j` (world frame, `f_0 = f_n = 0` at the free
//! ends), the unknowns per evaluation are the joint linear accelerations
//! `a_i`, the link angular accelerations `ω̇_i`, the relative joint
//! accelerations `q̈_j`, and the interior `f_j`. They satisfy, per link `i`
//! and joint `j`:
//!
//! ```text
//! force:    M_i·(a_i + (l/2)(ω̇_i n_i - Q̇_i²·u_i)) - f_i + f_{i+1} = F_i^env + F_i^grav
//! torque:   I·ω̇_i + (l/2)·u_i×(f_i + f_{i+1}) = m_i^joint - m_{i+1}^joint
//! angular:  ω̇_{j-1} + q̈_j - ω̇_j = 0
//! linear:   a_j = a_{j-1} + l·(ω̇_{j-1} n_{j-1} - Q̇_{j-1}²·u_{j-1})
//! ```
//!
//! with `n_i = ẑ×u_i = -t_i`, joint moments `m_j^joint = τ_j - μ_v·q̇_j`
//! applied positively on link `j` and negatively on link `j-1`, and `M_i`
//! the (world-frame) link mass matrix, anisotropic when the environment adds
//! fluid mass. Reaction forces are evaluated from the current velocities and
//! enter as knowns, so one dense linear solve of dimension `6n-3` yields the
//! full solution.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::env::EnvironmentModel;
use crate::error::{SimError, SimResult};
use crate::scalar::{real, Real};
use crate::types::{forward_kinematics, ControlVector, LinkFrame, SnakeParams, SnakeState};

/// Pivot magnitude below which the assembled system is reported singular.
pub const SINGULARITY_THRESHOLD: f64 = 1e-12;

/// Accelerations and internal forces solved from one state/control pair.
#[derive(Debug, Clone)]
pub struct DynamicsSolution<R: Real> {
    /// Linear acceleration of each link's proximal joint, expressed in that
    /// link's local frame (`transverse`, `longitudinal`).
    pub joint_linear_acc: Vec<Vector2<R>>,
    /// World angular acceleration of each link.
    pub angular_acc: Vec<R>,
    /// Relative angular acceleration `q̈_j` at joints `1..n-1`.
    pub rel_angular_acc: Vec<R>,
    /// Force transmitted through each joint `0..=n`, expressed in the local
    /// frame of the link behind the joint. Entry `j` is the force applied by
    /// link `j-1` on link `j`; entries `0` and `n` are the free-end boundary
    /// values and are identically zero.
    pub internal_forces: Vec<Vector2<R>>,
    /// World-frame acceleration of the head point.
    pub head_acc_world: Vector2<R>,
    /// World-frame acceleration of each link's center of mass.
    pub com_acc_world: Vec<Vector2<R>>,
}

fn cross2<R: Real>(a: Vector2<R>, b: Vector2<R>) -> R {
    a.x * b.y - a.y * b.x
}

/// Solve the per-timestep equilibrium system.
///
/// Torques are expected to be pre-clamped; the solver applies them as given.
pub fn solve_accelerations<R: Real>(
    state: &SnakeState<R>,
    u: &ControlVector<R>,
    env: &EnvironmentModel<R>,
    params: &SnakeParams<R>,
) -> SimResult<DynamicsSolution<R>> {
    let frames = forward_kinematics(state, params);
    solve_with_frames(state, &frames, u, env, params)
}

pub(crate) fn solve_with_frames<R: Real>(
    state: &SnakeState<R>,
    frames: &[LinkFrame<R>],
    u: &ControlVector<R>,
    env: &EnvironmentModel<R>,
    params: &SnakeParams<R>,
) -> SimResult<DynamicsSolution<R>> {
    let n = params.n_links;
    assert_eq!(u.n_joints(), n - 1, "control/joint count mismatch");
    let l = params.link_length;
    let half_l = l / real(2.0);
    let inertia = params.link_inertia();
    let mu_v = params.joint_viscous_coeff;

    let dim = 6 * n - 3;
    let idx_a = |i: usize| 2 * i;
    let idx_w = |i: usize| 2 * n + i;
    let idx_q = |j: usize| 3 * n + (j - 1);
    let idx_f = |j: usize| 4 * n - 1 + 2 * (j - 1);

    let mut mat = DMatrix::<R>::zeros(dim, dim);
    let mut rhs = DVector::<R>::zeros(dim);

    // Net joint moment applied on link j by the motor and viscous damping at
    // joint j (reaction on link j-1); zero at the free ends.
    let joint_moment = |j: usize| -> R {
        if (1..n).contains(&j) {
            u.torques[j - 1] - mu_v * state.angle_rates[j]
        } else {
            R::zero()
        }
    };

    let mass_local = env.mass_matrix_local(params);
    let gravity_world = Vector2::new(R::zero(), -params.gravity);

    for (i, frame) in frames.iter().enumerate() {
        let rot = frame.rotation();
        let u_axis = frame.long_axis();
        let t_axis = frame.trans_axis();
        let w = frame.ang_vel;

        // World-frame mass matrix of this link.
        let mass_world: Matrix2<R> = rot * mass_local * rot.transpose();

        // Force balance rows.
        let row = idx_a(i);
        let coupled = mass_world * t_axis * (-half_l);
        for r in 0..2 {
            for c in 0..2 {
                mat[(row + r, idx_a(i) + c)] = mass_world[(r, c)];
            }
            mat[(row + r, idx_w(i))] = coupled[r];
        }
        if i >= 1 {
            mat[(row, idx_f(i))] = -R::one();
            mat[(row + 1, idx_f(i) + 1)] = -R::one();
        }
        if i + 1 < n {
            mat[(row, idx_f(i + 1))] = R::one();
            mat[(row + 1, idx_f(i + 1) + 1)] = R::one();
        }
        let f_env_world = rot * env.reaction_force(frame.com_vel_local, params);
        let mut rhs_force = f_env_world + mass_world * u_axis * (half_l * w * w);
        if env.in_plane_gravity() {
            rhs_force += mass_world * gravity_world;
        }
        rhs[row] = rhs_force.x;
        rhs[row + 1] = rhs_force.y;

        // Torque balance row: I·ω̇ + (l/2)·u×(f_i + f_{i+1}) = m_i - m_{i+1}.
        let row = idx_w(i);
        mat[(row, idx_w(i))] = inertia;
        for j in [i, i + 1] {
            if (1..n).contains(&j) {
                mat[(row, idx_f(j))] += -half_l * u_axis.y;
                mat[(row, idx_f(j) + 1)] += half_l * u_axis.x;
            }
        }
        rhs[row] = joint_moment(i) - joint_moment(i + 1);
    }

    for j in 1..n {
        // Angular chaining.
        let row = idx_q(j);
        mat[(row, idx_w(j - 1))] = R::one();
        mat[(row, idx_q(j))] = R::one();
        mat[(row, idx_w(j))] = -R::one();

        // Linear chaining: the distal-point acceleration of link j-1 is the
        // proximal-joint acceleration of link j.
        let row = idx_f(j);
        let prev = &frames[j - 1];
        let t_prev = prev.trans_axis();
        let u_prev = prev.long_axis();
        let w_prev = prev.ang_vel;
        for r in 0..2 {
            mat[(row + r, idx_a(j) + r)] = R::one();
            mat[(row + r, idx_a(j - 1) + r)] = -R::one();
            mat[(row + r, idx_w(j - 1))] = l * t_prev[r];
            rhs[row + r] = -l * w_prev * w_prev * u_prev[r];
        }
    }

    let lu = mat.lu();
    let min_pivot = lu.u().diagonal().amin();
    if min_pivot.to_f64() < SINGULARITY_THRESHOLD {
        return Err(SimError::SingularSystem {
            pivot: min_pivot.to_f64(),
        });
    }
    let sol = lu.solve(&rhs).ok_or(SimError::SingularSystem { pivot: 0.0 })?;

    let mut joint_linear_acc = Vec::with_capacity(n);
    let mut angular_acc = Vec::with_capacity(n);
    let mut com_acc_world = Vec::with_capacity(n);
    for i in 0..n {
        let a_world = Vector2::new(sol[idx_a(i)], sol[idx_a(i) + 1]);
        let frame = &frames[i];
        let wdot = sol[idx_w(i)];
        let w = frame.ang_vel;
        joint_linear_acc.push(frame.world_to_local(a_world));
        angular_acc.push(wdot);
        com_acc_world
            .push(a_world - (frame.trans_axis() * wdot + frame.long_axis() * (w * w)) * half_l);
    }
    let mut rel_angular_acc = Vec::with_capacity(n - 1);
    for j in 1..n {
        rel_angular_acc.push(sol[idx_q(j)]);
    }
    let mut internal_forces = vec![Vector2::zeros(); n + 1];
    for j in 1..n {
        let f_world = Vector2::new(sol[idx_f(j)], sol[idx_f(j) + 1]);
        internal_forces[j] = frames[j].world_to_local(f_world);
    }
    let head_acc_world = Vector2::new(sol[idx_a(0)], sol[idx_a(0) + 1]);

    Ok(DynamicsSolution {
        joint_linear_acc,
        angular_acc,
        rel_angular_acc,
        internal_forces,
        head_acc_world,
        com_acc_world,
    })
}

/// Time derivative of the flattened state vector.
///
/// The position half differentiates to the velocity half of the state; the
/// velocity half comes from [`solve_accelerations`]: world head acceleration,
/// `ω̇_0` for the orientation rate, and `q̈_j` for the joint rates.
pub fn state_derivative<R: Real>(
    state: &SnakeState<R>,
    u: &ControlVector<R>,
    env: &EnvironmentModel<R>,
    params: &SnakeParams<R>,
) -> SimResult<DVector<R>> {
    let n = params.n_links;
    let sol = solve_accelerations(state, u, env, params)?;
    let mut d = DVector::zeros(2 * n + 4);
    d[0] = state.head_vel.x;
    d[1] = state.head_vel.y;
    for i in 0..n {
        d[2 + i] = state.angle_rates[i];
    }
    d[n + 2] = sol.head_acc_world.x;
    d[n + 3] = sol.head_acc_world.y;
    d[n + 4] = sol.angular_acc[0];
    for j in 1..n {
        d[n + 4 + j] = sol.rel_angular_acc[j - 1];
    }
    Ok(d)
}

/// One explicit Euler step `x + dt·f(x, u)`.
pub fn step_euler<R: Real>(
    state: &SnakeState<R>,
    u: &ControlVector<R>,
    dt: R,
    env: &EnvironmentModel<R>,
    params: &SnakeParams<R>,
) -> SimResult<SnakeState<R>> {
    let x = state.to_vector();
    let d = state_derivative(state, u, env, params)?;
    Ok(SnakeState::from_vector(&(x + d * dt)))
}

/// One classical fourth-order Runge-Kutta step with the control held
/// constant over the step.
pub fn step_rk4<R: Real>(
    state: &SnakeState<R>,
    u: &ControlVector<R>,
    dt: R,
    env: &EnvironmentModel<R>,
    params: &SnakeParams<R>,
) -> SimResult<SnakeState<R>> {
    let x = state.to_vector();
    let half = dt / real(2.0);
    let k1 = state_derivative(state, u, env, params)?;
    let x2 = SnakeState::from_vector(&(&x + &k1 * half));
    let k2 = state_derivative(&x2, u, env, params)?;
    let x3 = SnakeState::from_vector(&(&x + &k2 * half));
    let k3 = state_derivative(&x3, u, env, params)?;
    let x4 = SnakeState::from_vector(&(&x + &k3 * dt));
    let k4 = state_derivative(&x4, u, env, params)?;
    let two = real::<R>(2.0);
    let combined = (k1 + k2 * two + k3 * two + k4) * (dt / real(6.0));
    Ok(SnakeState::from_vector(&(x + combined)))
}

/// Fixed-step integrator selector: explicit Euler for speed inside the
/// optimizer, RK4 for accuracy when evaluating gaits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Euler,
    Rk4,
}

impl Integrator {
    pub fn step<R: Real>(
        self,
        state: &SnakeState<R>,
        u: &ControlVector<R>,
        dt: R,
        env: &EnvironmentModel<R>,
        params: &SnakeParams<R>,
    ) -> SimResult<SnakeState<R>> {
        match self {
            Integrator::Euler => step_euler(state, u, dt, env, params),
            Integrator::Rk4 => step_rk4(state, u, dt, env, params),
        }
    }
}

/// Total linear momentum `Σ m·ċ_i` (added mass excluded).
pub fn linear_momentum<R: Real>(state: &SnakeState<R>, params: &SnakeParams<R>) -> Vector2<R> {
    forward_kinematics(state, params)
        .iter()
        .fold(Vector2::zeros(), |acc, f| {
            acc + f.com_vel_world * params.link_mass
        })
}

/// Total angular momentum about the world origin (added mass excluded).
pub fn angular_momentum<R: Real>(state: &SnakeState<R>, params: &SnakeParams<R>) -> R {
    let inertia = params.link_inertia();
    forward_kinematics(state, params)
        .iter()
        .fold(R::zero(), |acc, f| {
            acc + cross2(f.com_pos, f.com_vel_world) * params.link_mass + inertia * f.ang_vel
        })
}

/// Total kinetic energy of the rod chain (added mass excluded).
pub fn kinetic_energy<R: Real>(state: &SnakeState<R>, params: &SnakeParams<R>) -> R {
    let half = real::<R>(0.5);
    let inertia = params.link_inertia();
    forward_kinematics(state, params)
        .iter()
        .fold(R::zero(), |acc, f| {
            acc + half * params.link_mass * f.com_vel_world.norm_squared()
                + half * inertia * f.ang_vel * f.ang_vel
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn params(n: usize) -> SnakeParams<f64> {
        SnakeParams {
            n_links: n,
            ..SnakeParams::reference()
        }
    }

    fn all_envs() -> Vec<EnvironmentModel<f64>> {
        vec![
            EnvironmentModel::preset_box_dry(),
            EnvironmentModel::preset_smooth_dry(),
            EnvironmentModel::preset_viscous(),
            EnvironmentModel::preset_fluid(),
        ]
    }

    fn zero_env() -> EnvironmentModel<f64> {
        EnvironmentModel::Viscous {
            c_long: 0.0,
            c_trans: 0.0,
        }
    }

    fn bent_state(n: usize) -> SnakeState<f64> {
        let mut angles = DVector::zeros(n);
        let mut rates = DVector::zeros(n);
        for i in 0..n {
            angles[i] = 0.3 * ((i as f64) + 1.0).sin();
            rates[i] = 0.2 * ((i as f64) * 1.7 + 0.4).cos();
        }
        SnakeState {
            head_pos: Vector2::new(0.3, -0.2),
            angles,
            head_vel: Vector2::new(0.5, -0.1),
            angle_rates: rates,
        }
    }

    #[test]
    fn straight_snake_at_rest_is_in_equilibrium() {
        for n in [2, 3, 5] {
            let state = SnakeState::straight_rest(n, 0.4);
            let u = ControlVector::zeros(n - 1);
            for env in all_envs() {
                let sol = solve_accelerations(&state, &u, &env, &params(n)).unwrap();
                for i in 0..n {
                    assert!(
                        sol.com_acc_world[i].norm() < 1e-10,
                        "link {i} accelerates in {} with n={n}",
                        env.label()
                    );
                    assert!(sol.angular_acc[i].abs() < 1e-10);
                }
                assert!(sol.head_acc_world.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn internal_forces_cancel_without_external_forces() {
        // Zero reaction forces and no joint damping: the net force on the
        // chain is zero, so the mass-weighted CoM accelerations sum to zero.
        let n = 5;
        let p = params(n);
        let state = bent_state(n);
        let u = ControlVector::from_vector(dvector![0.7, -0.9, 0.4, 1.0]);
        let sol = solve_accelerations(&state, &u, &zero_env(), &p).unwrap();
        let total: Vector2<f64> = sol
            .com_acc_world
            .iter()
            .fold(Vector2::zeros(), |acc, a| acc + a * p.link_mass);
        assert!(total.norm() < 1e-10, "momentum rate {total:?}");
    }

    #[test]
    fn boundary_forces_are_zero() {
        let n = 4;
        let sol = solve_accelerations(
            &bent_state(n),
            &ControlVector::from_vector(dvector![0.5, -0.2, 0.8]),
            &EnvironmentModel::preset_smooth_dry(),
            &params(n),
        )
        .unwrap();
        assert_eq!(sol.internal_forces.len(), n + 1);
        assert_eq!(sol.internal_forces[0], Vector2::zeros());
        assert_eq!(sol.internal_forces[n], Vector2::zeros());
    }

    #[test]
    fn solution_satisfies_chaining_identities() {
        let n = 5;
        let p = params(n);
        let state = bent_state(n);
        let u = ControlVector::from_vector(dvector![0.3, 0.1, -0.6, 0.9]);
        for env in all_envs() {
            let sol = solve_accelerations(&state, &u, &env, &p).unwrap();
            for j in 1..n {
                let chained = sol.angular_acc[j - 1] + sol.rel_angular_acc[j - 1];
                assert!((chained - sol.angular_acc[j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn derivative_position_half_equals_velocity_half() {
        let n = 5;
        let state = bent_state(n);
        let u = ControlVector::from_vector(dvector![0.2, -0.4, 0.6, -0.8]);
        let d = state_derivative(&state, &u, &EnvironmentModel::preset_viscous(), &params(n)).unwrap();
        let x = state.to_vector();
        for i in 0..(n + 2) {
            assert_eq!(d[i], x[n + 2 + i]);
        }
    }

    #[test]
    fn derivative_is_deterministic() {
        let n = 5;
        let state = bent_state(n);
        let u = ControlVector::from_vector(dvector![0.2, -0.4, 0.6, -0.8]);
        let env = EnvironmentModel::preset_fluid();
        let a = state_derivative(&state, &u, &env, &params(n)).unwrap();
        let b = state_derivative(&state, &u, &env, &params(n)).unwrap();
        assert_eq!(a, b, "identical inputs must reproduce bit-exactly");
    }

    #[test]
    fn equilibrium_state_is_unchanged_by_both_integrators() {
        let n = 3;
        let state = SnakeState::straight_rest(n, -0.9);
        let u = ControlVector::zeros(n - 1);
        let env = EnvironmentModel::preset_smooth_dry();
        let p = params(n);
        let euler = step_euler(&state, &u, 0.01, &env, &p).unwrap();
        let rk4 = step_rk4(&state, &u, 0.01, &env, &p).unwrap();
        assert!((euler.to_vector() - state.to_vector()).amax() < 1e-12);
        assert!((rk4.to_vector() - state.to_vector()).amax() < 1e-12);
    }

    #[test]
    fn torque_free_translation_advances_head_exactly() {
        let n = 5;
        let mut state = SnakeState::straight_rest(n, 0.0);
        state.head_vel = Vector2::new(1.0, 0.0);
        let u = ControlVector::zeros(n - 1);
        let next = step_euler(&state, &u, 0.01, &zero_env(), &params(n)).unwrap();
        assert!((next.head_pos - Vector2::new(0.01, 0.0)).norm() < 1e-15);
        assert!((next.head_vel - Vector2::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rk4_is_fourth_order() {
        // Richardson self-convergence on a smooth (viscous) problem with a
        // fixed torque vector held over the whole horizon.
        let n = 4;
        let p = params(n);
        let env = EnvironmentModel::preset_viscous();
        let u = ControlVector::from_vector(dvector![0.6, -0.5, 0.4]);
        let x0 = bent_state(n);

        let rollout = |dt: f64, steps: usize| -> DVector<f64> {
            let mut s = x0.clone();
            for _ in 0..steps {
                s = step_rk4(&s, &u, dt, &env, &p).unwrap();
            }
            s.to_vector()
        };

        // dt must stay well under the viscous time constant m/c_l = 0.02 s.
        let t_final = 0.25;
        let reference = rollout(t_final / 1600.0, 1600);
        let err_coarse = (rollout(t_final / 25.0, 25) - &reference).norm();
        let err_fine = (rollout(t_final / 50.0, 50) - &reference).norm();
        let ratio = err_coarse / err_fine;
        assert!(
            (8.0..40.0).contains(&ratio),
            "halving dt should cut the error ~16x, got ratio {ratio} (errors {err_coarse:.3e}, {err_fine:.3e})"
        );
    }

    #[test]
    fn single_precision_instantiation_agrees_with_f64() {
        let params64 = params(4);
        let params32 = SnakeParams::<f32>::reference();
        let params32 = SnakeParams {
            n_links: 4,
            ..params32
        };
        let state64 = bent_state(4);
        let state32 = SnakeState::<f32>::from_vector(&state64.to_vector().map(|v| v as f32));
        let u64v = ControlVector::from_vector(dvector![0.3, -0.2, 0.5]);
        let u32v = ControlVector::from_vector(dvector![0.3f32, -0.2, 0.5]);
        let env64 = EnvironmentModel::<f64>::preset_smooth_dry();
        let env32 = EnvironmentModel::<f32>::preset_smooth_dry();

        let next64 = step_rk4(&state64, &u64v, 0.01, &env64, &params64).unwrap();
        let next32 = step_rk4(&state32, &u32v, 0.01f32, &env32, &params32).unwrap();
        let diff = (next64.to_vector() - next32.to_vector().map(f64::from)).amax();
        assert!(diff < 1e-4, "f32 and f64 paths diverged by {diff}");
    }

    #[test]
    fn degenerate_parameters_are_reported_singular() {
        // A zero-inertia, zero-mass chain makes the system rank deficient.
        let mut p = params(3);
        p.link_mass = 0.0;
        let state = SnakeState::straight_rest(3, 0.0);
        let u = ControlVector::zeros(2);
        match solve_accelerations(&state, &u, &zero_env(), &p) {
            Err(SimError::SingularSystem { .. }) => {}
            other => panic!("expected singular system, got {other:?}"),
        }
    }
}
