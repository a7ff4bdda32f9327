use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::rcg::rcg_solve;
use super::{ls_baseband, HybridBeamformer, PenaltyParams};
use crate::error::{Error, Result};
use crate::linalg::{frob2, CMatrix, CVector, C64};
use crate::model::ScenarioConfig;

/// Diagnostics of one continuation round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HybridRound {
    pub round: usize,
    pub mu: f64,
    pub factorization_error: f64,
    pub power_overshoot: f64,
    pub rcg_iterations: usize,
    pub sweeps: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct HybridTrace {
    pub rounds: Vec<HybridRound>,
    /// `||F~ - F_RF F_BB||_F / ||F~||_F` of the returned design.
    pub factorization_error: f64,
    pub rcg_iterations: usize,
    /// Power was still over budget after the last round.
    pub continuation_failed: bool,
    /// The baseband was rescaled onto the power budget at exit.
    pub rescaled: bool,
    /// Random restarts tried after the first attempt.
    pub restarts: usize,
}

fn rel_error(target: &CMatrix, f_rf: &CMatrix, f_bb: &CMatrix) -> f64 {
    let t = target.norm();
    if t == 0.0 {
        return (f_rf * f_bb).norm();
    }
    (target - f_rf * f_bb).norm() / t
}

/// Entrywise phases of the leading left singular vectors of `target`, padded with DFT columns
/// when `n_rfc` exceeds the available singular vectors.
pub fn initial_analog(target: &CMatrix, n_rfc: usize) -> CMatrix {
    let n = target.nrows();
    let svd = target.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let peak = svd.singular_values.max();
    let lead: Vec<usize> = order
        .into_iter()
        .filter(|&i| svd.singular_values[i] > 1e-12 * peak && peak > 0.0)
        .take(n_rfc)
        .collect();
    let mut out = CMatrix::zeros(n, n_rfc);
    for (c, &i) in lead.iter().enumerate() {
        for r in 0..n {
            let z = u[(r, i)];
            out[(r, c)] = if z.norm() > 0.0 {
                z / z.norm()
            } else {
                C64::new(1.0, 0.0)
            };
        }
    }
    for c in lead.len()..n_rfc {
        let k = (c - lead.len()) * n / (n_rfc - lead.len()).max(1);
        for r in 0..n {
            out[(r, c)] = C64::from_polar(1.0, 2.0 * PI * (r * k) as f64 / n as f64);
        }
    }
    out
}

/// Factors `target` into unit-modulus `F_RF` and baseband `F_BB`.
///
/// Within a round, conjugate-gradient updates of `F_RF` alternate with least-squares `F_BB`
/// until the relative factorization error changes by at most a fraction `tol_factorization` of
/// itself. Rounds repeat with `mu <- mu / decay` until the power overshoot is at most
/// `tol_power`; a design still over budget is rescaled onto it at exit.
///
/// The first attempt starts from [`initial_analog`]. While the error stays above
/// `params.restart_above`, up to `params.restarts` further attempts are made and the best one is
/// returned: first from [`column_search`], then from seeded random phases.
pub fn design_hybrid(
    target: &CMatrix,
    cfg: &ScenarioConfig,
    params: &PenaltyParams,
) -> Result<(HybridBeamformer, HybridTrace)> {
    params.validate()?;
    let n_rfc = cfg.n_rfc;
    if target.nrows() < n_rfc {
        return Err(Error::InvalidArgument(format!(
            "{n_rfc} RF chains exceed {} antennas",
            target.nrows()
        )));
    }
    let mut best = attempt(target, cfg, params, initial_analog(target, n_rfc))?;
    let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
    let mut restarts = 0;
    while restarts < params.restarts && best.1.factorization_error > params.restart_above {
        restarts += 1;
        let init = if restarts == 1 {
            column_search(target, n_rfc, &mut rng)
        } else {
            random_phases(target.nrows(), n_rfc, &mut rng)
        };
        // A rank-deficient draw is skipped rather than aborting the design.
        if let Ok(cand) = attempt(target, cfg, params, init) {
            let better = (cand.1.continuation_failed, cand.1.factorization_error)
                < (best.1.continuation_failed, best.1.factorization_error);
            if better {
                best = cand;
            }
        }
    }
    best.1.restarts = restarts;
    Ok(best)
}

fn random_phases(n: usize, m: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(n, m, |_, _| C64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI)))
}

fn phases(v: &CVector) -> CVector {
    v.map(|z| {
        if z.norm() > 0.0 {
            z / z.norm()
        } else {
            C64::new(1.0, 0.0)
        }
    })
}

/// Unit-modulus columns close to the range of `target`.
///
/// Alternates `x <- phase(P x)` from random phases, with `P` the projector onto the dominant left
/// singular vectors, then keeps the highest-energy results that are pairwise far from collinear.
/// A realizable target has its analog columns among the fixed points with full energy.
pub fn column_search(target: &CMatrix, n_rfc: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    const STARTS_PER_COLUMN: usize = 10;
    const ITERS: usize = 500;
    const MAX_OVERLAP: f64 = 0.9;
    let n = target.nrows();
    let svd = target.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let peak = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| peak > 0.0 && svd.singular_values[i] > 1e-12 * peak)
        .collect();
    if keep.is_empty() {
        return random_phases(n, n_rfc, rng);
    }
    let basis = u.select_columns(&keep);
    let proj = &basis * basis.adjoint();
    let mut found: Vec<(f64, CVector)> = (0..STARTS_PER_COLUMN * n_rfc)
        .map(|_| {
            let mut x = random_phases(n, 1, rng).column(0).into_owned();
            for _ in 0..ITERS {
                x = phases(&(&proj * &x));
            }
            ((&proj * &x).norm_squared(), x)
        })
        .collect();
    found.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut chosen: Vec<CVector> = Vec::with_capacity(n_rfc);
    for (_, x) in found {
        if chosen.len() == n_rfc {
            break;
        }
        if chosen.iter().all(|c| c.dotc(&x).norm() / n as f64 <= MAX_OVERLAP) {
            chosen.push(x);
        }
    }
    while chosen.len() < n_rfc {
        chosen.push(random_phases(n, 1, rng).column(0).into_owned());
    }
    CMatrix::from_columns(&chosen)
}

const RESTART_SEED: u64 = 0x5eed_0f0f;

/// Beyond this the product `F_RF F_BB` loses too many digits to cancellation.
const MAX_ANALOG_CONDITION: f64 = 1e4;

fn condition(m: &CMatrix) -> f64 {
    let s = m.singular_values();
    s.max() / s.min()
}

fn attempt(
    target: &CMatrix,
    cfg: &ScenarioConfig,
    params: &PenaltyParams,
    init: CMatrix,
) -> Result<(HybridBeamformer, HybridTrace)> {
    let p_max = cfg.max_tx_power;
    let mut f_rf = init;
    let mut f_bb = ls_baseband(&f_rf, target)?;
    let mut trace = HybridTrace::default();
    let mut mu = params.mu0;
    let mut power_ok = false;
    let mut collapsed = false;
    for round in 0..params.max_continuation_rounds {
        let mut prev = rel_error(target, &f_rf, &f_bb);
        let mut rcg_iters = 0;
        let mut sweeps = 0;
        for _ in 0..params.max_sweeps {
            let out = rcg_solve(target, &f_bb, &f_rf, mu, p_max, params.form, &params.rcg)?;
            rcg_iters += out.iterations;
            // A large mu can only cut power by aligning analog columns; once they are
            // close to dependent the last well-conditioned pair is kept.
            let bb = match ls_baseband(&out.f_rf, target) {
                Ok(bb) if condition(&out.f_rf) <= MAX_ANALOG_CONDITION => bb,
                _ => {
                    collapsed = true;
                    break;
                }
            };
            f_rf = out.f_rf;
            f_bb = bb;
            sweeps += 1;
            let e = rel_error(target, &f_rf, &f_bb);
            let change = (prev - e).abs() / prev.max(f64::MIN_POSITIVE);
            prev = e;
            if change <= cfg.tol_factorization {
                break;
            }
        }
        let overshoot = frob2(&(&f_rf * &f_bb)) - p_max;
        trace.rcg_iterations += rcg_iters;
        trace.rounds.push(HybridRound {
            round,
            mu,
            factorization_error: prev,
            power_overshoot: overshoot,
            rcg_iterations: rcg_iters,
            sweeps,
        });
        if overshoot <= cfg.tol_power {
            power_ok = true;
            break;
        }
        if collapsed {
            break;
        }
        mu /= params.decay;
    }
    trace.continuation_failed = !power_ok;
    let power = frob2(&(&f_rf * &f_bb));
    if power > p_max {
        f_bb *= C64::new((p_max / power).sqrt(), 0.0);
        trace.rescaled = true;
    }
    trace.factorization_error = rel_error(target, &f_rf, &f_bb);
    Ok((
        HybridBeamformer {
            analog: f_rf,
            baseband: f_bb,
        },
        trace,
    ))
}
