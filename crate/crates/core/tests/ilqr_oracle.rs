//! iLQR against the closed-form finite-horizon LQR solution.

mod common;

use common::riccati_recursion;
use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use serpent_core::ilqr::synthetic::{LinearDynamics, QuadraticCost};
use serpent_core::ilqr::{
    backward_pass, forward_pass, linearize_dynamics, optimize, rollout, CostModel, IlqrConfig,
    StepDerivatives,
};

fn double_integrator(dt: f64) -> LinearDynamics<f64> {
    LinearDynamics {
        a: dmatrix![1.0, dt; 0.0, 1.0],
        b: dmatrix![0.5 * dt * dt; dt],
    }
}

fn cost() -> QuadraticCost<f64> {
    QuadraticCost {
        q: dmatrix![0.3, 0.0; 0.0, 0.05],
        r: dmatrix![0.2],
        qf: dmatrix![80.0, 0.0; 0.0, 20.0],
    }
}

fn expand_along(
    model: &LinearDynamics<f64>,
    objective: &QuadraticCost<f64>,
    nominal: &serpent_core::ilqr::Rollout<f64>,
) -> (Vec<StepDerivatives<f64>>, serpent_core::ilqr::TerminalExpansion<f64>) {
    let derivs = (0..nominal.us.len())
        .map(|t| {
            let (a, b) = linearize_dynamics(model, &nominal.xs[t], &nominal.us[t], 1e-5).unwrap();
            StepDerivatives {
                a,
                b,
                cost: objective.expand_running(&nominal.xs[t], &nominal.us[t]),
            }
        })
        .collect();
    (derivs, objective.expand_terminal(nominal.xs.last().unwrap()))
}

#[test]
fn backward_pass_reproduces_riccati_gains() {
    let model = double_integrator(0.1);
    let objective = cost();
    let horizon = 30;
    let x0 = dvector![1.5, -0.4];
    let us = vec![DVector::zeros(1); horizon];
    let (nominal, _) = rollout(&model, &objective, &x0, &us).unwrap();
    let (derivs, terminal) = expand_along(&model, &objective, &nominal);
    let gains = backward_pass(&derivs, &terminal, 0.0).unwrap();

    let riccati = riccati_recursion(
        &model.a,
        &model.b,
        &objective.q,
        &objective.r,
        &objective.qf,
        horizon,
    );
    for t in 0..horizon {
        let diff: DMatrix<f64> = &gains.feedback[t] + &riccati.gains[t];
        assert!(
            diff.amax() < 1e-8,
            "feedback gain mismatch {:.3e} at step {t}",
            diff.amax()
        );
    }
}

#[test]
fn forward_pass_reaches_the_lqr_optimum_in_one_step() {
    let model = double_integrator(0.1);
    let objective = cost();
    let horizon = 30;
    let x0 = dvector![1.5, -0.4];
    let us = vec![DVector::zeros(1); horizon];
    let (nominal, _) = rollout(&model, &objective, &x0, &us).unwrap();
    let (derivs, terminal) = expand_along(&model, &objective, &nominal);
    let gains = backward_pass(&derivs, &terminal, 0.0).unwrap();
    let (_, cost_after) = forward_pass(&model, &objective, &nominal, &gains, 1.0).unwrap();

    let riccati = riccati_recursion(
        &model.a,
        &model.b,
        &objective.q,
        &objective.r,
        &objective.qf,
        horizon,
    );
    let optimal = (x0.transpose() * &riccati.cost_to_go[0] * &x0)[(0, 0)];
    let rel = (cost_after - optimal).abs() / optimal;
    assert!(
        rel < 1e-9,
        "one full LQR step must be optimal: {cost_after} vs {optimal}"
    );
}

#[test]
fn optimize_matches_riccati_cost_to_tolerance() {
    let model = double_integrator(0.1);
    let objective = cost();
    let horizon = 30;
    let x0 = dvector![1.5, -0.4];
    let config = IlqrConfig {
        horizon,
        cost_tolerance: 1e-12,
        ..IlqrConfig::default()
    };
    let result = optimize(&model, &objective, &x0, &vec![DVector::zeros(1); horizon], &config)
        .unwrap();
    assert!(result.converged);

    let riccati = riccati_recursion(
        &model.a,
        &model.b,
        &objective.q,
        &objective.r,
        &objective.qf,
        horizon,
    );
    let optimal = (x0.transpose() * &riccati.cost_to_go[0] * &x0)[(0, 0)];
    let achieved = *result.cost_history.last().unwrap();
    let rel = (achieved - optimal).abs() / optimal;
    assert!(rel < 1e-6, "cost {achieved} vs Riccati {optimal}, rel {rel:.3e}");

    // The realized controls match the Riccati state feedback.
    let mut x = x0.clone();
    for t in 0..horizon {
        let expected = -(&riccati.gains[t] * &x);
        assert!(
            (&result.rollout.us[t] - &expected).amax() < 1e-6,
            "control mismatch at step {t}"
        );
        x = &model.a * &x + &model.b * &result.rollout.us[t];
    }
}

#[test]
fn converged_solution_has_vanishing_cost_gradient() {
    // Finite-difference gradient of the total cost w.r.t. the control
    // sequence at the returned optimum.
    let model = double_integrator(0.1);
    let objective = cost();
    let horizon = 20;
    let x0 = dvector![-0.8, 0.6];
    let config = IlqrConfig {
        horizon,
        cost_tolerance: 1e-12,
        ..IlqrConfig::default()
    };
    let result = optimize(&model, &objective, &x0, &vec![DVector::zeros(1); horizon], &config)
        .unwrap();
    assert!(result.converged);

    let total = |us: &[DVector<f64>]| -> f64 {
        let (_, c) = rollout(&model, &objective, &x0, us).unwrap();
        c
    };
    let h = 1e-6;
    let mut max_grad = 0.0f64;
    for t in 0..horizon {
        let mut plus = result.rollout.us.clone();
        let mut minus = result.rollout.us.clone();
        plus[t][0] += h;
        minus[t][0] -= h;
        max_grad = max_grad.max(((total(&plus) - total(&minus)) / (2.0 * h)).abs());
    }
    assert!(
        max_grad < 1e-4,
        "gradient at converged solution too large: {max_grad:.3e}"
    );
}
