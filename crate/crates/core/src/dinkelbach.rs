//! Outer price loop for the energy-efficiency ratio, producing the fully-digital beamformer.

use crate::error::Result;
use crate::linalg::{CMatrix, CVector, C64};
use crate::metrics::{build_q, energy_efficiency, interference_plus_noise, DigitalBeamformer};
use crate::model::{ChannelSet, QRefresh, ScenarioConfig};
use crate::sdpcore::{purify, rank_one_extract, repair_feasibility, solve_sdr, SdrProblem};

/// Relative tolerance on price decreases attributed to inexact inner solves.
pub const MONOTONE_TOL: f64 = 1e-6;

const INNER_REFRESH_ROUNDS: usize = 20;
const INNER_REFRESH_TOL: f64 = 1e-6;

/// Progress of the price loop.
#[derive(Debug, Clone)]
pub struct DinkelbachState {
    pub price: f64,
    pub iterate: DigitalBeamformer,
    pub q_cache: Vec<CMatrix>,
    pub rel_change: f64,
    pub iteration: usize,
    /// Price after each iteration, starting with the initial price.
    pub lambda_trace: Vec<f64>,
    /// Energy efficiency of each iterate (equal to the price once the iterate is feasible).
    pub ee_trace: Vec<f64>,
    /// Optimal inner value minus the price times the static power, per iteration.
    pub subtractive_trace: Vec<f64>,
    pub defects: Vec<f64>,
    pub inner_solves: usize,
    pub converged: bool,
    /// `(iteration, relative drop)` of the first price decrease beyond [`MONOTONE_TOL`].
    pub monotone_violation: Option<(usize, f64)>,
    /// Whether the returned iterate meets every constraint.
    pub feasible: bool,
}

/// `lambda = sum-rate / dissipated power` at `f`.
pub fn price_update(channels: &ChannelSet, f: &DigitalBeamformer, cfg: &ScenarioConfig) -> f64 {
    energy_efficiency(channels, f, cfg)
}

/// Equal-power start: user columns along `h_m / ||h_m||`, target columns along `a(theta_l)`,
/// using the whole budget.
pub fn initial_beamformer(channels: &ChannelSet, cfg: &ScenarioConfig) -> DigitalBeamformer {
    let k = cfg.n_users + cfg.n_targets;
    let amp = C64::new((cfg.max_tx_power / k as f64).sqrt(), 0.0);
    let mut cols: Vec<CVector> = channels
        .channels
        .iter()
        .map(|h| {
            let n = h.norm();
            if n > 0.0 {
                h * (amp / n)
            } else {
                CVector::zeros(h.len())
            }
        })
        .collect();
    cols.extend(cfg.target_steering().into_iter().map(|a| a * amp));
    DigitalBeamformer::from_columns(&cols, cfg.n_users).expect("finite initial beamformer")
}

fn meets_constraints(problem: &SdrProblem, f: &DigitalBeamformer) -> bool {
    let rep = repair_feasibility(f, problem);
    rep.feasible && rep.scales.iter().all(|s| *s == 1.0)
}

/// One inner solve at price `lambda` around `f_prev`, followed by purification, extraction and
/// repair. Returns the new beamformer, the inner optimum and the rank-one defects.
fn inner_step(
    channels: &ChannelSet,
    cfg: &ScenarioConfig,
    f_prev: &DigitalBeamformer,
    lambda: f64,
) -> Result<(DigitalBeamformer, f64, Vec<f64>, bool)> {
    let problem = SdrProblem::from_scenario(cfg, channels, f_prev, lambda);
    let sol = solve_sdr(&problem)?;
    let pure = purify(&sol.pool, &problem);
    let ex = rank_one_extract(&pure);
    let rep = repair_feasibility(&ex.beamformer, &problem);
    Ok((rep.beamformer, sol.objective, ex.defects, rep.feasible))
}

/// Runs the price loop: refresh the interference terms at the current iterate, solve the relaxed
/// problem at the current price, extract and repair a beamformer, update the price; stop when
/// the relative price change is at most `tol_dinkelbach` or after `max_outer_iters` iterations.
pub fn design_digital(
    channels: &ChannelSet,
    cfg: &ScenarioConfig,
) -> Result<(DigitalBeamformer, DinkelbachState)> {
    cfg.validate()?;
    let f1 = initial_beamformer(channels, cfg);
    let probe = SdrProblem::from_scenario(cfg, channels, &f1, 0.0);
    let start_feasible = meets_constraints(&probe, &f1);
    let lambda1 = if start_feasible {
        price_update(channels, &f1, cfg)
    } else {
        0.0
    };
    let static_power = cfg.n_rfc as f64 * cfg.rfc_static_power;

    let mut st = DinkelbachState {
        price: lambda1,
        q_cache: (0..cfg.n_users)
            .map(|m| build_q(channels, &f1, m, cfg.noise_power))
            .collect(),
        iterate: f1.clone(),
        rel_change: f64::INFINITY,
        iteration: 0,
        lambda_trace: vec![lambda1],
        ee_trace: vec![price_update(channels, &f1, cfg)],
        subtractive_trace: Vec::new(),
        defects: Vec::new(),
        inner_solves: 0,
        converged: false,
        monotone_violation: None,
        feasible: start_feasible,
    };

    for n in 1..=cfg.solver.max_outer_iters {
        st.iteration = n;
        let (mut f, mut value, mut defects, mut feasible) = inner_step(channels, cfg, &st.iterate, st.price)?;
        st.inner_solves += 1;
        if cfg.solver.q_refresh == QRefresh::Inner {
            let mut prev = f.clone();
            for _ in 0..INNER_REFRESH_ROUNDS {
                let (g, v, d, fe) = inner_step(channels, cfg, &prev, st.price)?;
                st.inner_solves += 1;
                let change = (0..cfg.n_users)
                    .map(|m| {
                        let a = interference_plus_noise(channels, &prev, m, cfg.noise_power);
                        let b = interference_plus_noise(channels, &g, m, cfg.noise_power);
                        (a - b).abs() / a
                    })
                    .fold(0.0, f64::max);
                (f, value, defects, feasible) = (g.clone(), v, d, fe);
                prev = g;
                if change <= INNER_REFRESH_TOL {
                    break;
                }
            }
        }
        st.subtractive_trace.push(value - st.price * static_power);
        let lambda = price_update(channels, &f, cfg);
        st.lambda_trace.push(lambda);
        st.ee_trace.push(lambda);
        if lambda < st.price * (1.0 - MONOTONE_TOL) {
            st.monotone_violation = Some((n, (st.price - lambda) / st.price));
            break;
        }
        st.rel_change = if lambda > 0.0 {
            (lambda - st.price) / lambda
        } else {
            0.0
        };
        st.price = lambda;
        st.q_cache = (0..cfg.n_users)
            .map(|m| build_q(channels, &f, m, cfg.noise_power))
            .collect();
        st.iterate = f;
        st.defects = defects;
        st.feasible = feasible;
        if st.rel_change <= cfg.tol_dinkelbach {
            st.converged = true;
            break;
        }
    }
    Ok((st.iterate.clone(), st))
}
