//! The relaxed per-iteration design problem over stream covariances.

use std::f64::consts::LN_2;

use super::program::{ConcaveProgram, LogTerm};
use super::{barrier, frank_wolfe, linear, CovariancePool, LinearSdp, Sense, TraceConstraint};
use crate::error::{ConstraintId, Error, Result};
use crate::linalg::{orthonormal_span, outer, CMatrix, CVector, C64};
use crate::metrics::{interference_plus_noise, DigitalBeamformer};
use crate::model::{ChannelSet, ScenarioConfig, SdrMethod, SurrogateKind};

/// Data of one relaxed inner problem. Streams `0..M` serve users, `M..M+L` serve targets.
#[derive(Debug, Clone)]
pub struct SdrProblem {
    /// `h_m`, one per user.
    pub channels: Vec<CVector>,
    /// Interference-plus-noise `Phi_m` frozen at the previous beamformer.
    pub interference: Vec<f64>,
    /// `a(theta_l)`, one per target.
    pub steering: Vec<CVector>,
    pub tau: Vec<f64>,
    pub gamma: Vec<f64>,
    pub noise: f64,
    pub p_max: f64,
    pub lambda_price: f64,
    /// Multiplier of the transmit power inside the price term.
    pub power_weight: f64,
    pub surrogate: SurrogateKind,
    pub method: SdrMethod,
}

/// Solution of [`solve_sdr`].
#[derive(Debug, Clone)]
pub struct SdrSolution {
    pub pool: CovariancePool,
    /// Surrogate rate minus the power price, in bits/s/Hz.
    pub objective: f64,
    pub gap_bound: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Optimal minimum relative slack of the feasibility phase.
    pub feasibility_slack: f64,
    /// Objective per iteration (conditional-gradient method only).
    pub trace: Vec<f64>,
}

const BARRIER_TOL: f64 = 1e-7;
const FW_TOL: f64 = 1e-6;
const FW_MAX_ITERS: usize = 200;

impl SdrProblem {
    /// Inner problem of the scenario at price `lambda`, with `Phi_m` measured on `f_prev`.
    pub fn from_scenario(
        cfg: &ScenarioConfig,
        channels: &ChannelSet,
        f_prev: &DigitalBeamformer,
        lambda: f64,
    ) -> Self {
        SdrProblem {
            channels: channels.channels.clone(),
            interference: (0..channels.n_users())
                .map(|m| interference_plus_noise(channels, f_prev, m, cfg.noise_power))
                .collect(),
            steering: cfg.target_steering(),
            tau: cfg.sinr_thresholds.clone(),
            gamma: cfg.beampattern_thresholds.clone(),
            noise: cfg.noise_power,
            p_max: cfg.max_tx_power,
            lambda_price: lambda,
            power_weight: cfg.amplifier_efficiency,
            surrogate: cfg.solver.surrogate,
            method: cfg.solver.sdr_method,
        }
    }

    pub fn n_users(&self) -> usize {
        self.channels.len()
    }

    pub fn n_targets(&self) -> usize {
        self.steering.len()
    }

    pub fn n_streams(&self) -> usize {
        self.n_users() + self.n_targets()
    }

    pub fn n_tx(&self) -> usize {
        self.channels
            .first()
            .or(self.steering.first())
            .map_or(0, |v| v.len())
    }

    /// `Q_m = h_m h_m^H / Phi_m`.
    pub fn q_matrix(&self, m: usize) -> CMatrix {
        outer(&self.channels[m]) * C64::new(1.0 / self.interference[m], 0.0)
    }

    /// Constraint identities in the order used by the solvers: SINR floors, beampattern floors,
    /// power budget.
    pub fn constraint_ids(&self) -> Vec<ConstraintId> {
        (0..self.n_users())
            .map(|user| ConstraintId::Sinr { user })
            .chain((0..self.n_targets()).map(|target| ConstraintId::Beampattern { target }))
            .chain(std::iter::once(ConstraintId::Power))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let m = self.n_users();
        if m == 0 && self.n_targets() == 0 {
            return Err(Error::InvalidArgument("inner problem has no streams".into()));
        }
        if self.interference.len() != m || self.tau.len() != m || self.gamma.len() != self.n_targets() {
            return Err(Error::InvalidArgument(
                "inner problem lists disagree in length".into(),
            ));
        }
        let n = self.n_tx();
        if self.channels.iter().chain(&self.steering).any(|v| v.len() != n) {
            return Err(Error::InvalidArgument("vectors differ in length".into()));
        }
        let positive = self
            .tau
            .iter()
            .chain(&self.gamma)
            .chain(&self.interference)
            .chain([&self.noise, &self.p_max]);
        for v in positive {
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "non-positive inner-problem constant {v}"
                )));
            }
        }
        if !(self.lambda_price >= 0.0 && self.power_weight >= 0.0) {
            return Err(Error::InvalidArgument(
                "price and power weight must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Orthonormal basis `U` of the span of all channels and steering vectors. Every datum of the
    /// problem is the identity or rank one inside this span, so `T_n = U Y_n U^H` loses nothing:
    /// compressing any feasible point onto the span keeps every quadratic form and does not
    /// increase the power.
    pub fn subspace(&self) -> CMatrix {
        let vecs: Vec<CVector> = self.channels.iter().chain(&self.steering).cloned().collect();
        orthonormal_span(&vecs, 1e-10).unwrap_or_else(|| {
            let mut u = CMatrix::zeros(self.n_tx(), 1);
            u[(0, 0)] = C64::new(1.0, 0.0);
            u
        })
    }

    /// The concave program in the coordinates of `basis`, with channels measured in units of
    /// the noise amplitude.
    fn program(&self, basis: &CMatrix) -> ConcaveProgram {
        let r = basis.ncols();
        let k = self.n_streams();
        let m_users = self.n_users();
        let scale = C64::new(1.0 / self.noise.sqrt(), 0.0);
        let hq: Vec<CMatrix> = self
            .channels
            .iter()
            .map(|h| outer(&(basis.adjoint() * h * scale)))
            .collect();
        let aq: Vec<CMatrix> = self
            .steering
            .iter()
            .map(|a| outer(&(basis.adjoint() * a)))
            .collect();
        let phi: Vec<f64> = self.interference.iter().map(|p| p / self.noise).collect();
        let eye = CMatrix::identity(r, r);
        let price = self.lambda_price * self.power_weight;
        let mut linear = vec![eye.clone() * C64::new(-price, 0.0); k];
        let mut logs = Vec::new();
        let mut constant = 0.0;
        let mut constraints = Vec::new();
        for m in 0..m_users {
            match self.surrogate {
                SurrogateKind::FrozenQ => {
                    logs.push(LogTerm {
                        weight: 1.0 / LN_2,
                        terms: vec![(m, &hq[m] * C64::new(1.0 / phi[m], 0.0))],
                        offset: 1.0,
                    });
                    constraints.push(TraceConstraint::new(
                        vec![(m, hq[m].clone())],
                        Sense::Ge,
                        self.tau[m] * phi[m],
                    ));
                }
                SurrogateKind::Linearized => {
                    logs.push(LogTerm {
                        weight: 1.0 / LN_2,
                        terms: (0..k).map(|n| (n, hq[m].clone())).collect(),
                        offset: 1.0,
                    });
                    for (n, lin) in linear.iter_mut().enumerate() {
                        if n != m {
                            *lin -= &hq[m] * C64::new(1.0 / (phi[m] * LN_2), 0.0);
                        }
                    }
                    constant -= phi[m].log2() + (1.0 - phi[m]) / (phi[m] * LN_2);
                    let terms = (0..k)
                        .map(|n| {
                            let w = if n == m { 1.0 } else { -self.tau[m] };
                            (n, &hq[m] * C64::new(w, 0.0))
                        })
                        .collect();
                    constraints.push(TraceConstraint::new(terms, Sense::Ge, self.tau[m]));
                }
            }
        }
        for (l, a) in aq.iter().enumerate() {
            constraints.push(TraceConstraint::new(
                (0..k).map(|n| (n, a.clone())).collect(),
                Sense::Ge,
                self.gamma[l],
            ));
        }
        constraints.push(TraceConstraint::new(
            (0..k).map(|n| (n, eye.clone())).collect(),
            Sense::Le,
            self.p_max,
        ));
        ConcaveProgram {
            dim: r,
            blocks: k,
            logs,
            linear,
            constant,
            constraints,
        }
    }
}

/// Names the constraint responsible for infeasibility: the soft constraint that is least
/// satisfiable on its own under the hard ones, or the one with the largest multiplier when each
/// is satisfiable alone.
fn blame(
    phase1: &LinearSdp,
    soft: &[Option<f64>],
    ids: &[ConstraintId],
    fallback: Option<usize>,
) -> Result<ConstraintId> {
    let mut lowest: Option<(usize, f64)> = None;
    for i in (0..soft.len()).filter(|&i| soft[i].is_some()) {
        let keep: Vec<usize> = (0..soft.len()).filter(|&j| j == i || soft[j].is_none()).collect();
        let single = LinearSdp {
            constraints: keep.iter().map(|&j| phase1.constraints[j].clone()).collect(),
            ..phase1.clone()
        };
        let w: Vec<Option<f64>> = keep.iter().map(|&j| soft[j]).collect();
        let s = linear::feasibility_phase(&single, &w)?.slack;
        if lowest.is_none_or(|(_, best)| s < best) {
            lowest = Some((i, s));
        }
    }
    Ok(match lowest {
        Some((i, s)) if s <= 1e-9 => ids[i],
        _ => fallback.map_or(ConstraintId::Power, |i| ids[i]),
    })
}

/// Solves the relaxed problem: maximize the surrogate sum-rate minus the power price over PSD
/// stream covariances subject to SINR floors, beampattern floors and the power budget.
///
/// A feasibility phase maximizing the minimum relative constraint slack runs first; a
/// non-positive optimum is reported as [`Error::Infeasible`] naming the binding constraint.
pub fn solve_sdr(problem: &SdrProblem) -> Result<SdrSolution> {
    problem.validate()?;
    let basis = problem.subspace();
    let prog = problem.program(&basis);
    let r = prog.dim;
    let k = prog.blocks;
    let ids = problem.constraint_ids();

    let phase1 = LinearSdp {
        dim: r,
        blocks: k,
        cost: vec![CMatrix::zeros(r, r); k],
        constraints: prog.constraints.clone(),
    };
    let soft: Vec<Option<f64>> = prog
        .constraints
        .iter()
        .zip(&ids)
        .map(|(c, id)| match id {
            ConstraintId::Power => None,
            _ => Some(c.rhs),
        })
        .collect();
    let rep = linear::feasibility_phase(&phase1, &soft)?;
    if !(rep.slack > 1e-9) {
        return Err(Error::Infeasible {
            constraint: blame(&phase1, &soft, &ids, rep.worst)?,
            slack: rep.slack,
        });
    }

    // Strictly feasible start: pull the phase-one point toward a scaled identity.
    let c = problem.p_max / (2.0 * (k * r) as f64);
    let ident: Vec<CMatrix> = vec![CMatrix::identity(r, r) * C64::new(c, 0.0); k];
    let rel_min = prog
        .constraints
        .iter()
        .zip(&soft)
        .filter_map(|(con, w)| w.map(|w| con.slack(&ident) / w))
        .fold(f64::INFINITY, f64::min);
    let theta = if rel_min >= 0.0 {
        0.5
    } else {
        (0.5 * rep.slack / (rep.slack - rel_min)).min(0.5)
    };
    let start: Vec<CMatrix> = rep
        .point
        .iter()
        .zip(&ident)
        .map(|(p, i)| p * C64::new(1.0 - theta, 0.0) + i * C64::new(theta, 0.0))
        .collect();

    let (blocks, objective, gap_bound, converged, iterations, trace) = match problem.method {
        SdrMethod::Barrier => {
            let res = barrier::maximize(&prog, &start, BARRIER_TOL)?;
            (
                res.blocks,
                res.objective,
                res.gap_bound,
                res.converged,
                res.newton_steps,
                Vec::new(),
            )
        }
        SdrMethod::FrankWolfe => {
            let res = frank_wolfe::maximize(&prog, &start, FW_MAX_ITERS, FW_TOL)?;
            (
                res.blocks,
                res.objective,
                res.gap,
                res.converged,
                res.iterations,
                res.trace,
            )
        }
    };
    let residuals = prog.constraints.iter().map(|c| c.slack(&blocks)).collect();
    Ok(SdrSolution {
        pool: CovariancePool {
            basis: Some(basis),
            blocks,
            n_users: problem.n_users(),
            objective_value: objective,
            feasibility_residuals: residuals,
        },
        objective,
        gap_bound,
        converged,
        iterations,
        feasibility_slack: rep.slack,
        trace,
    })
}
