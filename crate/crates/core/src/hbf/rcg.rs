//! Riemannian conjugate gradient on the complex circle manifold with the baseband held fixed.

use super::manifold::{real_inner, retract, riemannian_grad, transport};
use super::{euclidean_grad_with, penalty_objective_with, RcgParams};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::model::PenaltyForm;

#[derive(Debug, Clone)]
pub struct RcgOutcome {
    pub f_rf: CMatrix,
    pub objective: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    /// Objective after every accepted step, starting at the initial point.
    pub objective_trace: Vec<f64>,
}

/// Minimizes the penalty objective over unit-modulus `F_RF` with `F_BB` fixed.
///
/// Polak-Ribiere+ directions with projection transport, Armijo backtracking starting from twice
/// the previous accepted step, restarts every `restart_period` iterations (default `N_t`) or
/// whenever the direction is not a descent direction.
#[allow(clippy::too_many_arguments)]
pub fn rcg_solve(
    target: &CMatrix,
    f_bb: &CMatrix,
    f_rf_init: &CMatrix,
    mu: f64,
    p_max: f64,
    form: PenaltyForm,
    params: &RcgParams,
) -> Result<RcgOutcome> {
    let cost = |x: &CMatrix| penalty_objective_with(form, x, f_bb, target, mu, p_max);
    let rgrad = |x: &CMatrix| riemannian_grad(&euclidean_grad_with(form, x, f_bb, target, mu, p_max), x);
    let period = params.restart_period.unwrap_or(target.nrows()).max(1);

    let mut x = f_rf_init.clone();
    let mut j = cost(&x);
    if !j.is_finite() {
        return Err(Error::NonFinite(format!("penalty objective at mu = {mu}")));
    }
    let mut g = rgrad(&x);
    let mut d = -&g;
    let peak = d.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut step = if peak > 0.0 { 0.5 / peak } else { 1.0 };
    let mut trace = vec![j];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iters {
        let gn = g.norm();
        if gn <= params.grad_tol * (1.0 + j.abs()) {
            converged = true;
            break;
        }
        let mut slope = real_inner(&g, &d);
        if slope >= 0.0 {
            d = -&g;
            slope = -gn * gn;
        }
        let mut alpha = step;
        let mut accepted = None;
        while alpha > 1e-20 {
            let cand = retract(&x, &(&d * C64::new(alpha, 0.0)));
            let jc = cost(&cand);
            if !jc.is_finite() {
                return Err(Error::NonFinite(format!("penalty objective at mu = {mu}")));
            }
            if jc <= j + params.armijo_c1 * alpha * slope {
                accepted = Some((cand, jc));
                break;
            }
            alpha *= params.backtrack;
        }
        let Some((xn, jn)) = accepted else {
            // No decrease representable in floating point: the point is stationary to precision.
            converged = true;
            break;
        };
        iterations += 1;
        step = 2.0 * alpha;
        let gn_new = rgrad(&xn);
        let beta = if iterations % period == 0 {
            0.0
        } else {
            let tg = transport(&xn, &g);
            (real_inner(&gn_new, &(&gn_new - tg)) / (gn * gn)).max(0.0)
        };
        d = -&gn_new + transport(&xn, &d) * C64::new(beta, 0.0);
        x = xn;
        j = jn;
        g = gn_new;
        trace.push(j);
    }
    Ok(RcgOutcome {
        grad_norm: g.norm(),
        f_rf: x,
        objective: j,
        iterations,
        converged,
        objective_trace: trace,
    })
}
