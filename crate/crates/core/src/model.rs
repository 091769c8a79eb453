//! Adapters that present the snake dynamics and gait objective through the
//! optimizer's vector interfaces.

use nalgebra::{DMatrix, DVector};

use crate::cost::{final_cost, running_cost, CostSpec};
use crate::dynamics::Integrator;
use crate::env::EnvironmentModel;
use crate::error::SimResult;
use crate::ilqr::{CostExpansion, CostModel, DiscreteDynamics, TerminalExpansion};
use crate::scalar::{real, Real};
use crate::types::{ControlVector, SnakeParams, SnakeState};

/// One-step snake transition `x(t+1) = f(x(t), u(t))` at the control period
/// `params.dt`, with torque clamping as the admissible-control projection.
///
/// `substeps > 1` splits each control period into equal internal integrator
/// steps (control held constant), which keeps the fast Euler model stable at
/// the high joint rates aggressive gaits reach.
#[derive(Debug, Clone)]
pub struct SnakeDynamics<'a, R: Real> {
    pub params: &'a SnakeParams<R>,
    pub env: &'a EnvironmentModel<R>,
    pub integrator: Integrator,
    pub substeps: usize,
}

impl<'a, R: Real> SnakeDynamics<'a, R> {
    pub fn new(params: &'a SnakeParams<R>, env: &'a EnvironmentModel<R>, integrator: Integrator) -> Self {
        Self {
            params,
            env,
            integrator,
            substeps: 1,
        }
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        assert!(substeps >= 1, "substeps must be positive");
        self.substeps = substeps;
        self
    }
}

impl<R: Real> DiscreteDynamics<R> for SnakeDynamics<'_, R> {
    fn state_dim(&self) -> usize {
        self.params.state_dim()
    }

    fn control_dim(&self) -> usize {
        self.params.n_joints()
    }

    fn step(&self, x: &DVector<R>, u: &DVector<R>) -> SimResult<DVector<R>> {
        let mut state = SnakeState::from_vector(x);
        let ctrl = ControlVector::from_vector(u.clone());
        let sub_dt = self.params.dt / crate::scalar::real(self.substeps as f64);
        for _ in 0..self.substeps {
            state = self
                .integrator
                .step(&state, &ctrl, sub_dt, self.env, self.params)?;
        }
        Ok(state.to_vector())
    }

    fn clamp_control(&self, u: &mut DVector<R>) {
        let limit = self.params.torque_limit;
        for v in u.iter_mut() {
            *v = v.clamp(-limit, limit);
        }
    }
}

/// Gait objective in vector form.
///
/// The effort term is expanded analytically (`l_u = 2βu`, `l_uu = 2βI`,
/// `l_ux = 0`); the goal and obstacle terms depend only on the state and are
/// expanded by central finite differences — gradient at `fd_step`, Hessian
/// at the larger `hess_step` to keep the second-difference round-off in
/// check.
#[derive(Debug, Clone)]
pub struct SnakeCost<'a, R: Real> {
    pub spec: &'a CostSpec<R>,
    pub params: &'a SnakeParams<R>,
    fd_step: R,
    hess_step: R,
}

impl<'a, R: Real> SnakeCost<'a, R> {
    pub fn new(spec: &'a CostSpec<R>, params: &'a SnakeParams<R>, fd_epsilon: R) -> Self {
        Self {
            spec,
            params,
            fd_step: fd_epsilon,
            hess_step: fd_epsilon.sqrt(),
        }
    }

    /// State-only part of the stage cost (goal distance plus obstacles).
    fn state_cost(&self, x: &DVector<R>) -> R {
        let state = SnakeState::from_vector(x);
        final_cost(&state, self.spec, self.params)
    }

    /// State entries the cost can depend on: only the head position without
    /// obstacles, the full pose half otherwise. Velocity entries never enter
    /// the stage cost, so their derivative entries are identically zero and
    /// are skipped by the finite differencing.
    fn active_entries(&self, dim: usize) -> std::ops::Range<usize> {
        if self.spec.obstacles.is_empty() {
            0..2
        } else {
            0..(dim / 2 + 1)
        }
    }

    fn state_gradient(&self, x: &DVector<R>) -> DVector<R> {
        let n = x.len();
        let h = self.fd_step;
        let two_h = h * real(2.0);
        let mut grad = DVector::zeros(n);
        let mut probe = x.clone();
        for i in self.active_entries(n) {
            let base = x[i];
            probe[i] = base + h;
            let plus = self.state_cost(&probe);
            probe[i] = base - h;
            let minus = self.state_cost(&probe);
            probe[i] = base;
            grad[i] = (plus - minus) / two_h;
        }
        grad
    }

    fn state_hessian(&self, x: &DVector<R>) -> DMatrix<R> {
        let n = x.len();
        let h = self.hess_step;
        let h2 = h * h;
        let four_h2 = h2 * real(4.0);
        let center = self.state_cost(x);
        let mut hess = DMatrix::zeros(n, n);
        let mut probe = x.clone();
        let active = self.active_entries(n);

        for i in active.clone() {
            let base = x[i];
            probe[i] = base + h;
            let plus = self.state_cost(&probe);
            probe[i] = base - h;
            let minus = self.state_cost(&probe);
            probe[i] = base;
            hess[(i, i)] = (plus - real::<R>(2.0) * center + minus) / h2;
        }
        for i in active.clone() {
            for j in (i + 1)..active.end {
                let (bi, bj) = (x[i], x[j]);
                probe[i] = bi + h;
                probe[j] = bj + h;
                let pp = self.state_cost(&probe);
                probe[j] = bj - h;
                let pm = self.state_cost(&probe);
                probe[i] = bi - h;
                let mm = self.state_cost(&probe);
                probe[j] = bj + h;
                let mp = self.state_cost(&probe);
                probe[i] = bi;
                probe[j] = bj;
                let v = (pp - pm - mp + mm) / four_h2;
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        hess
    }
}

impl<R: Real> CostModel<R> for SnakeCost<'_, R> {
    fn running(&self, x: &DVector<R>, u: &DVector<R>) -> R {
        let state = SnakeState::from_vector(x);
        let ctrl = ControlVector::from_vector(u.clone());
        running_cost(&state, &ctrl, self.spec, self.params)
    }

    fn terminal(&self, x: &DVector<R>) -> R {
        self.state_cost(x)
    }

    fn expand_running(&self, x: &DVector<R>, u: &DVector<R>) -> CostExpansion<R> {
        let two_beta = self.spec.beta * real(2.0);
        let m = u.len();
        let value = self.state_cost(x) + self.spec.beta * u.norm_squared();
        CostExpansion {
            value,
            lx: self.state_gradient(x),
            lu: u * two_beta,
            lxx: self.state_hessian(x),
            luu: DMatrix::identity(m, m) * two_beta,
            lux: DMatrix::zeros(m, x.len()),
        }
    }

    fn expand_terminal(&self, x: &DVector<R>) -> TerminalExpansion<R> {
        TerminalExpansion {
            value: self.state_cost(x),
            lx: self.state_gradient(x),
            lxx: self.state_hessian(x),
        }
    }
}
