//! Iterative LQR trajectory optimization over a generic discrete-time model:
//! finite-difference linearization of the dynamics, quadratic expansion of
//! the cost, a regularized Riccati-style backward pass, and a line-searched
//! nonlinear forward pass.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::Integrator;
use crate::error::{SimError, SimResult};
use crate::scalar::{real, Real};

/// Discrete-time dynamics `x(t+1) = f(x(t), u(t))` seen by the optimizer.
pub trait DiscreteDynamics<R: Real>: Sync {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    fn step(&self, x: &DVector<R>, u: &DVector<R>) -> SimResult<DVector<R>>;

    /// Project a control onto its admissible set. Defaults to a no-op for
    /// unconstrained problems.
    fn clamp_control(&self, _u: &mut DVector<R>) {}
}

/// Quadratic expansion of the running cost about one `(x, u)` pair.
#[derive(Debug, Clone)]
pub struct CostExpansion<R: Real> {
    pub value: R,
    pub lx: DVector<R>,
    pub lu: DVector<R>,
    pub lxx: DMatrix<R>,
    pub luu: DMatrix<R>,
    pub lux: DMatrix<R>,
}

/// Quadratic expansion of the terminal cost.
#[derive(Debug, Clone)]
pub struct TerminalExpansion<R: Real> {
    pub value: R,
    pub lx: DVector<R>,
    pub lxx: DMatrix<R>,
}

/// Stage and terminal costs with their quadratic expansions.
pub trait CostModel<R: Real>: Sync {
    fn running(&self, x: &DVector<R>, u: &DVector<R>) -> R;
    fn terminal(&self, x: &DVector<R>) -> R;
    fn expand_running(&self, x: &DVector<R>, u: &DVector<R>) -> CostExpansion<R>;
    fn expand_terminal(&self, x: &DVector<R>) -> TerminalExpansion<R>;
}

/// Optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IlqrConfig<R: Real> {
    /// Horizon length N (number of controls per plan).
    pub horizon: usize,
    /// Outer-iteration budget, counting regularization retries.
    pub max_iterations: usize,
    /// Per-dimension perturbation of the central-difference Jacobians.
    pub fd_epsilon: R,
    /// Levenberg-style regularization schedule applied to the control
    /// Hessian: start at `reg_init`, divide by `reg_scale` on accepted steps
    /// (down to `reg_min`), multiply on failures (up to `reg_max`).
    pub reg_init: R,
    pub reg_min: R,
    pub reg_max: R,
    pub reg_scale: R,
    /// Step sizes tried by the forward-pass line search, decreasing in (0, 1].
    pub line_search_alphas: Vec<R>,
    /// Relative improvement (and expected-decrease) threshold that declares
    /// convergence.
    pub cost_tolerance: R,
    /// Integrator used by the internal model.
    pub integrator: Integrator,
}

impl<R: Real> Default for IlqrConfig<R> {
    fn default() -> Self {
        Self {
            horizon: 25,
            max_iterations: 50,
            fd_epsilon: real(1e-5),
            reg_init: real(1e-6),
            reg_min: real(1e-9),
            reg_max: real(1e8),
            reg_scale: real(10.0),
            line_search_alphas: (0..14).map(|k| real(0.5f64.powi(k))).collect(),
            cost_tolerance: real(1e-6),
            integrator: Integrator::Euler,
        }
    }
}

impl<R: Real> IlqrConfig<R> {
    pub fn validate(&self) -> SimResult<()> {
        let mut problems = Vec::new();
        if self.horizon == 0 {
            problems.push("horizon must be at least 1".to_string());
        }
        if self.line_search_alphas.is_empty() {
            problems.push("line_search_alphas must not be empty".to_string());
        }
        for &a in &self.line_search_alphas {
            if !(a > R::zero() && a <= R::one()) {
                problems.push("line-search alphas must lie in (0, 1]".to_string());
                break;
            }
        }
        if !(self.reg_min <= self.reg_init && self.reg_init <= self.reg_max) {
            problems.push("need reg_min <= reg_init <= reg_max".to_string());
        }
        if !(self.reg_scale > R::one()) {
            problems.push("reg_scale must exceed 1".to_string());
        }
        if !(self.fd_epsilon > R::zero()) {
            problems.push("fd_epsilon must be strictly positive".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SimError::InvalidParams(problems.join("; ")))
        }
    }
}

/// A state/control rollout in flattened vector form;
/// `xs.len() == us.len() + 1`.
#[derive(Debug, Clone)]
pub struct Rollout<R: Real> {
    pub xs: Vec<DVector<R>>,
    pub us: Vec<DVector<R>>,
}

/// States beyond this magnitude are treated like non-finite ones: the model
/// has left its trust region and the candidate must be rejected before the
/// trajectory degenerates into overflow noise.
const STATE_GUARD: f64 = 1e8;

fn state_is_sane<R: Real>(x: &DVector<R>) -> bool {
    x.iter().all(|v| v.finite() && v.abs().to_f64() < STATE_GUARD)
}

/// Optimization outcome; `rollout` is the best trajectory found.
#[derive(Debug, Clone)]
pub struct IlqrResult<R: Real> {
    pub rollout: Rollout<R>,
    /// Total cost after each accepted iteration, starting with the initial
    /// rollout; nonincreasing.
    pub cost_history: Vec<R>,
    pub converged: bool,
    pub iterations_used: usize,
}

/// Central-difference Jacobians `(A, B)` of the one-step transition about
/// `(x, u)`.
pub fn linearize_dynamics<R: Real, M: DiscreteDynamics<R>>(
    model: &M,
    x: &DVector<R>,
    u: &DVector<R>,
    fd_epsilon: R,
) -> SimResult<(DMatrix<R>, DMatrix<R>)> {
    let n = model.state_dim();
    let m = model.control_dim();
    let two_eps = fd_epsilon * real(2.0);

    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut x_plus = x.clone();
        let mut x_minus = x.clone();
        x_plus[i] += fd_epsilon;
        x_minus[i] -= fd_epsilon;
        let f_plus = model.step(&x_plus, u)?;
        let f_minus = model.step(&x_minus, u)?;
        a.set_column(i, &((f_plus - f_minus) / two_eps));
    }

    let mut b = DMatrix::zeros(n, m);
    for j in 0..m {
        let mut u_plus = u.clone();
        let mut u_minus = u.clone();
        u_plus[j] += fd_epsilon;
        u_minus[j] -= fd_epsilon;
        let f_plus = model.step(x, &u_plus)?;
        let f_minus = model.step(x, &u_minus)?;
        b.set_column(j, &((f_plus - f_minus) / two_eps));
    }

    Ok((a, b))
}

/// Dynamics linearization and cost expansion for one step of the nominal.
#[derive(Debug, Clone)]
pub struct StepDerivatives<R: Real> {
    pub a: DMatrix<R>,
    pub b: DMatrix<R>,
    pub cost: CostExpansion<R>,
}

/// Time-varying affine policy produced by the backward pass:
/// `δu_t = α·k_t + K_t·δx_t`.
#[derive(Debug, Clone)]
pub struct Gains<R: Real> {
    pub feedforward: Vec<DVector<R>>,
    pub feedback: Vec<DMatrix<R>>,
    /// Linear term of the predicted cost change at α = 1 (non-positive).
    pub d1: R,
    /// Quadratic term of the predicted cost change at α = 1.
    pub d2: R,
}

impl<R: Real> Gains<R> {
    /// Predicted cost decrease for a full step; non-negative whenever the
    /// pass succeeds.
    pub fn expected_decrease(&self) -> R {
        -(self.d1 + self.d2 / real(2.0))
    }
}

/// Regularized Riccati-style recursion from the end of the horizon down to
/// the first step. Fails with [`SimError::NotPositiveDefinite`] when the
/// regularized control Hessian is not positive definite, in which case the
/// caller is expected to raise `reg` and retry.
pub fn backward_pass<R: Real>(
    derivs: &[StepDerivatives<R>],
    terminal: &TerminalExpansion<R>,
    reg: R,
) -> SimResult<Gains<R>> {
    let horizon = derivs.len();
    let mut vx = terminal.lx.clone();
    let mut vxx = terminal.lxx.clone();

    let mut feedforward = vec![DVector::zeros(0); horizon];
    let mut feedback = vec![DMatrix::zeros(0, 0); horizon];
    let mut d1 = R::zero();
    let mut d2 = R::zero();

    for t in (0..horizon).rev() {
        let StepDerivatives { a, b, cost } = &derivs[t];

        let qx = &cost.lx + a.transpose() * &vx;
        let qu = &cost.lu + b.transpose() * &vx;
        let qxx = &cost.lxx + a.transpose() * &vxx * a;
        let qux = &cost.lux + b.transpose() * &vxx * a;
        let quu = &cost.luu + b.transpose() * &vxx * b;

        // Regularize through the dynamics (add reg to the state-value
        // Hessian before it meets B) so the damping scales with the control
        // authority; a plain additive term on Quu is far too weak for
        // control-sensitive chains.
        let mut vxx_reg = vxx.clone();
        for i in 0..vxx_reg.nrows() {
            vxx_reg[(i, i)] += reg;
        }
        let quu_reg = &cost.luu + b.transpose() * &vxx_reg * b;
        let qux_reg = &cost.lux + b.transpose() * &vxx_reg * a;

        let chol = quu_reg
            .clone()
            .cholesky()
            .ok_or(SimError::NotPositiveDefinite { step: t })?;
        let k = -chol.solve(&qu);
        let big_k = -chol.solve(&qux_reg);

        d1 += k.dot(&qu);
        d2 += (k.transpose() * &quu_reg * &k)[(0, 0)];

        vx = &qx + big_k.transpose() * &quu * &k
            + big_k.transpose() * &qu
            + qux.transpose() * &k;
        vxx = &qxx + big_k.transpose() * &quu * &big_k
            + big_k.transpose() * &qux
            + qux.transpose() * &big_k;
        // Keep the value Hessian symmetric against round-off drift.
        vxx = (&vxx + vxx.transpose()) * real::<R>(0.5);

        feedforward[t] = k;
        feedback[t] = big_k;
    }

    Ok(Gains {
        feedforward,
        feedback,
        d1,
        d2,
    })
}

/// Roll a control sequence out through the model, clamping each control, and
/// accumulate its total cost.
pub fn rollout<R: Real, M: DiscreteDynamics<R>, C: CostModel<R>>(
    model: &M,
    cost: &C,
    x0: &DVector<R>,
    us: &[DVector<R>],
) -> SimResult<(Rollout<R>, R)> {
    let mut xs = Vec::with_capacity(us.len() + 1);
    let mut clamped = Vec::with_capacity(us.len());
    xs.push(x0.clone());
    let mut total = R::zero();
    for (t, u) in us.iter().enumerate() {
        let mut u = u.clone();
        model.clamp_control(&mut u);
        let x = xs.last().unwrap();
        total += cost.running(x, &u);
        let next = model.step(x, &u)?;
        if !state_is_sane(&next) {
            return Err(SimError::NonFinite { step: t });
        }
        xs.push(next);
        clamped.push(u);
    }
    total += cost.terminal(xs.last().unwrap());
    Ok((Rollout { xs, us: clamped }, total))
}

/// Roll out the nonlinear dynamics under the affine policy
/// `u_t = ū_t + α·k_t + K_t·(x_t - x̄_t)` with controls clamped, returning
/// the candidate trajectory and its total cost.
pub fn forward_pass<R: Real, M: DiscreteDynamics<R>, C: CostModel<R>>(
    model: &M,
    cost: &C,
    nominal: &Rollout<R>,
    gains: &Gains<R>,
    alpha: R,
) -> SimResult<(Rollout<R>, R)> {
    let horizon = nominal.us.len();
    let mut xs = Vec::with_capacity(horizon + 1);
    let mut us = Vec::with_capacity(horizon);
    xs.push(nominal.xs[0].clone());
    let mut total = R::zero();
    for t in 0..horizon {
        let x = xs.last().unwrap().clone();
        let dx = &x - &nominal.xs[t];
        let mut u = &nominal.us[t] + &gains.feedforward[t] * alpha + &gains.feedback[t] * dx;
        model.clamp_control(&mut u);
        total += cost.running(&x, &u);
        let next = model.step(&x, &u)?;
        if !state_is_sane(&next) {
            return Err(SimError::NonFinite { step: t });
        }
        xs.push(next);
        us.push(u);
    }
    total += cost.terminal(xs.last().unwrap());
    if !total.finite() {
        return Err(SimError::NonFinite { step: horizon });
    }
    Ok((Rollout { xs, us }, total))
}

fn expand_nominal<R: Real, M: DiscreteDynamics<R>, C: CostModel<R>>(
    model: &M,
    cost: &C,
    nominal: &Rollout<R>,
    fd_epsilon: R,
) -> SimResult<(Vec<StepDerivatives<R>>, TerminalExpansion<R>)> {
    // Per-step linearizations are independent; run them in parallel and
    // collect by index so the result does not depend on scheduling.
    let derivs: SimResult<Vec<StepDerivatives<R>>> = (0..nominal.us.len())
        .into_par_iter()
        .map(|t| {
            let (a, b) = linearize_dynamics(model, &nominal.xs[t], &nominal.us[t], fd_epsilon)?;
            let cost = cost.expand_running(&nominal.xs[t], &nominal.us[t]);
            Ok(StepDerivatives { a, b, cost })
        })
        .collect();
    let terminal = cost.expand_terminal(nominal.xs.last().unwrap());
    Ok((derivs?, terminal))
}

/// Full iLQR loop: repeated linearize/expand, backward pass with
/// regularization adaptation, and line-searched forward pass.
///
/// Stops on `max_iterations`, on relative cost improvement below
/// `cost_tolerance`, or on predicted decrease below tolerance (the nominal
/// is already optimal). If every line-search step is rejected at `reg_max`,
/// the best trajectory so far is returned with `converged = false`.
pub fn optimize<R: Real, M: DiscreteDynamics<R>, C: CostModel<R>>(
    model: &M,
    cost: &C,
    x0: &DVector<R>,
    u_init: &[DVector<R>],
    config: &IlqrConfig<R>,
) -> SimResult<IlqrResult<R>> {
    config.validate()?;
    assert_eq!(
        u_init.len(),
        config.horizon,
        "u_init length must equal the horizon"
    );

    let (mut nominal, mut current_cost) = rollout(model, cost, x0, u_init)?;
    let mut history = vec![current_cost];
    let mut reg = config.reg_init.clamp(config.reg_min, config.reg_max);
    let mut converged = false;
    let mut iterations = 0;
    let mut cached: Option<(Vec<StepDerivatives<R>>, TerminalExpansion<R>)> = None;

    while iterations < config.max_iterations {
        iterations += 1;

        if cached.is_none() {
            cached = Some(expand_nominal(model, cost, &nominal, config.fd_epsilon)?);
        }
        let (derivs, terminal) = cached.as_ref().unwrap();

        let gains = match backward_pass(derivs, terminal, reg) {
            Ok(g) => g,
            Err(_) => {
                if reg >= config.reg_max {
                    break;
                }
                reg = (reg * config.reg_scale).min(config.reg_max);
                continue;
            }
        };

        let scale = current_cost.abs().max(R::one());
        if gains.expected_decrease() <= config.cost_tolerance * scale {
            converged = true;
            break;
        }

        let mut accepted = None;
        for &alpha in &config.line_search_alphas {
            if let Ok((candidate, candidate_cost)) = forward_pass(model, cost, &nominal, &gains, alpha)
            {
                if candidate_cost < current_cost {
                    accepted = Some((candidate, candidate_cost));
                    break;
                }
            }
        }

        match accepted {
            Some((candidate, candidate_cost)) => {
                let improvement = (current_cost - candidate_cost) / scale;
                nominal = candidate;
                current_cost = candidate_cost;
                history.push(current_cost);
                cached = None;
                // Back off gently: full reg_scale steps bounce between
                // overshoot and overdamping on control-sensitive problems.
                reg = (reg / config.reg_scale.sqrt()).max(config.reg_min);
                if improvement < config.cost_tolerance {
                    converged = true;
                    break;
                }
            }
            None => {
                if reg >= config.reg_max {
                    break;
                }
                reg = (reg * config.reg_scale).min(config.reg_max);
            }
        }
    }

    Ok(IlqrResult {
        rollout: nominal,
        cost_history: history,
        converged,
        iterations_used: iterations,
    })
}

/// Synthetic problems used to verify the optimizer against closed-form
/// solutions.
pub mod synthetic {
    use super::*;

    /// Linear time-invariant dynamics `x⁺ = A·x + B·u`.
    #[derive(Debug, Clone)]
    pub struct LinearDynamics<R: Real> {
        pub a: DMatrix<R>,
        pub b: DMatrix<R>,
    }

    impl<R: Real> DiscreteDynamics<R> for LinearDynamics<R> {
        fn state_dim(&self) -> usize {
            self.a.nrows()
        }

        fn control_dim(&self) -> usize {
            self.b.ncols()
        }

        fn step(&self, x: &DVector<R>, u: &DVector<R>) -> SimResult<DVector<R>> {
            Ok(&self.a * x + &self.b * u)
        }
    }

    /// Quadratic cost `xᵀQx + uᵀRu` with terminal `xᵀQ_f x`, expanded
    /// analytically.
    #[derive(Debug, Clone)]
    pub struct QuadraticCost<R: Real> {
        pub q: DMatrix<R>,
        pub r: DMatrix<R>,
        pub qf: DMatrix<R>,
    }

    impl<R: Real> CostModel<R> for QuadraticCost<R> {
        fn running(&self, x: &DVector<R>, u: &DVector<R>) -> R {
            (x.transpose() * &self.q * x)[(0, 0)] + (u.transpose() * &self.r * u)[(0, 0)]
        }

        fn terminal(&self, x: &DVector<R>) -> R {
            (x.transpose() * &self.qf * x)[(0, 0)]
        }

        fn expand_running(&self, x: &DVector<R>, u: &DVector<R>) -> CostExpansion<R> {
            let two = real::<R>(2.0);
            CostExpansion {
                value: self.running(x, u),
                lx: &self.q * x * two,
                lu: &self.r * u * two,
                lxx: &self.q * two,
                luu: &self.r * two,
                lux: DMatrix::zeros(self.r.nrows(), self.q.nrows()),
            }
        }

        fn expand_terminal(&self, x: &DVector<R>) -> TerminalExpansion<R> {
            let two = real::<R>(2.0);
            TerminalExpansion {
                value: self.terminal(x),
                lx: &self.qf * x * two,
                lxx: &self.qf * two,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::synthetic::{LinearDynamics, QuadraticCost};
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn double_integrator(dt: f64) -> LinearDynamics<f64> {
        LinearDynamics {
            a: dmatrix![1.0, dt; 0.0, 1.0],
            b: dmatrix![0.0; dt],
        }
    }

    fn reach_cost() -> QuadraticCost<f64> {
        QuadraticCost {
            q: dmatrix![0.1, 0.0; 0.0, 0.1],
            r: dmatrix![0.5],
            qf: dmatrix![50.0, 0.0; 0.0, 50.0],
        }
    }

    #[test]
    fn linearization_recovers_linear_maps_exactly() {
        let model = double_integrator(0.05);
        let x = dvector![0.3, -0.7];
        let u = dvector![0.9];
        let (a, b) = linearize_dynamics(&model, &x, &u, 1e-5).unwrap();
        assert!((a - &model.a).amax() < 1e-8);
        assert!((b - &model.b).amax() < 1e-8);
    }

    #[test]
    fn linearization_error_shrinks_quadratically() {
        // On a smooth nonlinear map, central differences converge at O(ε²).
        struct Cubic;
        impl DiscreteDynamics<f64> for Cubic {
            fn state_dim(&self) -> usize {
                1
            }
            fn control_dim(&self) -> usize {
                1
            }
            fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> SimResult<DVector<f64>> {
                Ok(dvector![x[0] * x[0] * x[0] + u[0]])
            }
        }
        let x = dvector![0.8];
        let u = dvector![0.0];
        let exact = 3.0 * 0.8f64.powi(2);
        let coarse = {
            let (a, _) = linearize_dynamics(&Cubic, &x, &u, 1e-3).unwrap();
            (a[(0, 0)] - exact).abs()
        };
        let fine = {
            let (a, _) = linearize_dynamics(&Cubic, &x, &u, 5e-4).unwrap();
            (a[(0, 0)] - exact).abs()
        };
        let ratio = coarse / fine;
        assert!(
            (2.5..6.0).contains(&ratio),
            "halving epsilon should quarter the Jacobian error, ratio {ratio}"
        );
    }

    #[test]
    fn zero_cost_gradient_gives_zero_feedforward() {
        let model = double_integrator(0.05);
        let cost = reach_cost();
        // The origin is the cost minimum: gradient vanishes there.
        let us = vec![dvector![0.0]; 10];
        let (nominal, _) = rollout(&model, &cost, &dvector![0.0, 0.0], &us).unwrap();
        let (derivs, terminal) = expand_nominal(&model, &cost, &nominal, 1e-5).unwrap();
        let gains = backward_pass(&derivs, &terminal, 0.0).unwrap();
        for k in &gains.feedforward {
            assert!(k.amax() < 1e-12);
        }
        assert!(gains.expected_decrease().abs() < 1e-18);
    }

    #[test]
    fn expected_decrease_is_nonnegative() {
        let model = double_integrator(0.05);
        let cost = reach_cost();
        let us = vec![dvector![0.2]; 15];
        let (nominal, _) = rollout(&model, &cost, &dvector![1.0, 0.0], &us).unwrap();
        let (derivs, terminal) = expand_nominal(&model, &cost, &nominal, 1e-5).unwrap();
        for reg in [0.0, 1e-6, 1e-2, 1.0] {
            let gains = backward_pass(&derivs, &terminal, reg).unwrap();
            assert!(gains.expected_decrease() >= 0.0);
        }
    }

    #[test]
    fn forward_pass_with_zero_alpha_reproduces_nominal() {
        let model = double_integrator(0.05);
        let cost = reach_cost();
        let us = vec![dvector![0.3]; 12];
        let (nominal, nominal_cost) = rollout(&model, &cost, &dvector![1.0, -0.5], &us).unwrap();
        let (derivs, terminal) = expand_nominal(&model, &cost, &nominal, 1e-5).unwrap();
        let gains = backward_pass(&derivs, &terminal, 1e-6).unwrap();
        let (candidate, cost_candidate) = forward_pass(&model, &cost, &nominal, &gains, 0.0).unwrap();
        assert_eq!(cost_candidate, nominal_cost);
        for (a, b) in candidate.xs.iter().zip(nominal.xs.iter()) {
            assert_eq!(a, b, "alpha = 0 must reproduce the nominal bit-exactly");
        }
    }

    #[test]
    fn lqr_problem_solves_in_one_full_step() {
        let model = double_integrator(0.05);
        let cost = reach_cost();
        let x0 = dvector![1.0, 0.0];
        let us = vec![dvector![0.0]; 20];
        let (nominal, cost0) = rollout(&model, &cost, &x0, &us).unwrap();
        let (derivs, terminal) = expand_nominal(&model, &cost, &nominal, 1e-5).unwrap();
        let gains = backward_pass(&derivs, &terminal, 0.0).unwrap();
        let (_, cost1) = forward_pass(&model, &cost, &nominal, &gains, 1.0).unwrap();
        assert!(cost1 < cost0);
        // A second pass from the new nominal cannot improve further than
        // numerical noise: the problem is exactly LQ.
        let config = IlqrConfig {
            horizon: 20,
            cost_tolerance: 1e-10,
            ..IlqrConfig::default()
        };
        let result = optimize(&model, &cost, &x0, &us, &config).unwrap();
        assert!(result.converged);
        let final_cost = *result.cost_history.last().unwrap();
        assert!((final_cost - cost1).abs() <= 1e-9 * cost1.max(1.0));
    }

    #[test]
    fn optimal_initialization_converges_immediately() {
        let model = double_integrator(0.05);
        let cost = reach_cost();
        let x0 = dvector![1.0, 0.0];
        let config = IlqrConfig {
            horizon: 20,
            cost_tolerance: 1e-9,
            ..IlqrConfig::default()
        };
        let first = optimize(&model, &cost, &x0, &vec![dvector![0.0]; 20], &config).unwrap();
        assert!(first.converged);
        let warm: Vec<_> = first.rollout.us.clone();
        let second = optimize(&model, &cost, &x0, &warm, &config).unwrap();
        assert!(second.converged);
        assert!(
            second.iterations_used <= 2,
            "warm-started optimum should stop in <= 2 iterations, used {}",
            second.iterations_used
        );
        let c0 = second.cost_history[0];
        let c1 = *second.cost_history.last().unwrap();
        assert!((c0 - c1).abs() <= 1e-9 * c0);
    }

    #[test]
    fn cost_history_is_nonincreasing() {
        let model = double_integrator(0.05);
        let cost = reach_cost();
        let config = IlqrConfig {
            horizon: 30,
            cost_tolerance: 1e-9,
            ..IlqrConfig::default()
        };
        let result = optimize(&model, &cost, &dvector![2.0, -1.0], &vec![dvector![0.4]; 30], &config)
            .unwrap();
        for pair in result.cost_history.windows(2) {
            assert!(pair[1] <= pair[0]);
        }
        assert!(result.cost_history.last().unwrap() <= &result.cost_history[0]);
    }
}
