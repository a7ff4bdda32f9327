//! Factorization of a fully-digital beamformer into a unit-modulus analog matrix and a baseband
//! matrix by penalty continuation, Riemannian conjugate gradient, and least-squares baseband
//! updates.

mod design;
mod manifold;
mod rcg;

pub use design::{column_search, design_hybrid, initial_analog, HybridRound, HybridTrace};
pub use manifold::{retract, riemannian_grad, transport};
pub use rcg::{rcg_solve, RcgOutcome};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{frob2, CMatrix, C64};
use crate::metrics::DigitalBeamformer;
use crate::model::{PenaltyForm, ScenarioConfig};

/// `F = F_RF F_BB` with unit-modulus `F_RF` (`N_t x M_t`) and baseband `F_BB` (`M_t x K`).
#[derive(Debug, Clone, PartialEq)]
pub struct HybridBeamformer {
    pub analog: CMatrix,
    pub baseband: CMatrix,
}

impl HybridBeamformer {
    pub fn effective(&self) -> CMatrix {
        &self.analog * &self.baseband
    }

    pub fn to_digital(&self, n_users: usize) -> Result<DigitalBeamformer> {
        DigitalBeamformer::new(self.effective(), n_users)
    }

    pub fn power(&self) -> f64 {
        frob2(&self.effective())
    }

    pub fn n_rfc(&self) -> usize {
        self.analog.ncols()
    }

    /// `max | |F_RF(i,j)| - 1 |`.
    pub fn modulus_error(&self) -> f64 {
        self.analog
            .iter()
            .map(|z| (z.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Multiplies baseband column `n` (hence effective column `n`) by `s`.
    pub fn scale_stream(&mut self, n: usize, s: f64) {
        self.baseband.column_mut(n).scale_mut(s);
    }
}

/// Line-search and restart settings of the conjugate-gradient solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RcgParams {
    pub max_iters: usize,
    pub armijo_c1: f64,
    pub backtrack: f64,
    /// Restart period; `None` uses the antenna count.
    pub restart_period: Option<usize>,
    pub grad_tol: f64,
}

impl Default for RcgParams {
    fn default() -> Self {
        RcgParams {
            max_iters: 100,
            armijo_c1: 1e-4,
            backtrack: 0.5,
            restart_period: None,
            grad_tol: 1e-6,
        }
    }
}

/// Penalty continuation settings: `mu` starts at `mu0` and is divided by `decay` each round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PenaltyParams {
    pub mu0: f64,
    pub decay: f64,
    pub max_continuation_rounds: usize,
    pub max_sweeps: usize,
    pub form: PenaltyForm,
    pub rcg: RcgParams,
    /// Extra attempts while the factorization error stays above `restart_above`.
    pub restarts: usize,
    pub restart_above: f64,
}

impl Default for PenaltyParams {
    fn default() -> Self {
        PenaltyParams {
            mu0: 1.5,
            decay: 0.5,
            max_continuation_rounds: 20,
            max_sweeps: 200,
            form: PenaltyForm::default(),
            rcg: RcgParams::default(),
            restarts: 20,
            restart_above: 0.02,
        }
    }
}

impl PenaltyParams {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        PenaltyParams {
            mu0: cfg.solver.mu0,
            decay: cfg.solver.mu_decay,
            max_continuation_rounds: cfg.solver.max_continuation_rounds,
            form: cfg.solver.penalty,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu0 > 1.0) {
            return Err(Error::InvalidArgument("mu0 must exceed 1".into()));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::InvalidArgument("decay must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// `||F~ - F_RF F_BB||_F^2 + mu (||F_RF F_BB||_F^2 - P_t)`.
pub fn penalty_objective(f_rf: &CMatrix, f_bb: &CMatrix, target: &CMatrix, mu: f64, p_max: f64) -> f64 {
    penalty_objective_with(PenaltyForm::Linear, f_rf, f_bb, target, mu, p_max)
}

/// Penalty objective with either the linear or the hinge power term.
pub fn penalty_objective_with(
    form: PenaltyForm,
    f_rf: &CMatrix,
    f_bb: &CMatrix,
    target: &CMatrix,
    mu: f64,
    p_max: f64,
) -> f64 {
    let prod = f_rf * f_bb;
    let over = frob2(&prod) - p_max;
    let pen = match form {
        PenaltyForm::Linear => over,
        PenaltyForm::Hinge => over.max(0.0),
    };
    frob2(&(target - prod)) + mu * pen
}

/// Conjugate-Wirtinger gradient (factor 2) of [`penalty_objective`] in `F_RF`:
/// `2 ((1 + mu) F_RF F_BB F_BB^H - F~ F_BB^H)`.
pub fn euclidean_grad(f_rf: &CMatrix, f_bb: &CMatrix, target: &CMatrix, mu: f64) -> CMatrix {
    let bbh = f_bb * f_bb.adjoint();
    (f_rf * &bbh * C64::new(1.0 + mu, 0.0) - target * f_bb.adjoint()) * C64::new(2.0, 0.0)
}

/// Gradient of [`penalty_objective_with`]; the hinge term contributes only above the budget.
pub fn euclidean_grad_with(
    form: PenaltyForm,
    f_rf: &CMatrix,
    f_bb: &CMatrix,
    target: &CMatrix,
    mu: f64,
    p_max: f64,
) -> CMatrix {
    let active = match form {
        PenaltyForm::Linear => true,
        PenaltyForm::Hinge => frob2(&(f_rf * f_bb)) > p_max,
    };
    euclidean_grad(f_rf, f_bb, target, if active { mu } else { 0.0 })
}

/// Condition number above which the analog matrix is treated as rank deficient.
pub const MAX_CONDITION: f64 = 1e10;

/// Least-squares baseband `(F_RF^H F_RF)^{-1} F_RF^H F~`, computed through the SVD of `F_RF`.
pub fn ls_baseband(f_rf: &CMatrix, target: &CMatrix) -> Result<CMatrix> {
    if f_rf.nrows() != target.nrows() {
        return Err(Error::InvalidArgument(
            "analog matrix and target differ in rows".into(),
        ));
    }
    let svd = f_rf.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) || f_rf.ncols() > f_rf.nrows() {
        return Err(Error::RankDeficient { condition });
    }
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let inv = CMatrix::from_diagonal(&svd.singular_values.map(|s| C64::new(1.0 / s, 0.0)));
    Ok(v_t.adjoint() * inv * u.adjoint() * target)
}
