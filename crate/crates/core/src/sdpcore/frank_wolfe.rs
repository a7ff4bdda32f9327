//! Conditional gradient over linear-SDP atoms with exact line search.

use super::linear::solve_linear_sdp;
use super::program::ConcaveProgram;
use crate::error::Result;
use crate::linalg::{trace_product, CMatrix, C64};

#[derive(Debug, Clone)]
pub(crate) struct FwResult {
    pub blocks: Vec<CMatrix>,
    pub objective: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

/// Directional derivative of the objective along `d` at `t + gamma d`.
fn slope(prog: &ConcaveProgram, args: &[f64], dargs: &[f64], dlin: f64, gamma: f64) -> f64 {
    prog.logs
        .iter()
        .zip(args.iter().zip(dargs))
        .map(|(l, (a, da))| l.weight * da / (a + gamma * da))
        .sum::<f64>()
        + dlin
}

pub(crate) fn maximize(
    prog: &ConcaveProgram,
    start: &[CMatrix],
    max_iters: usize,
    tol: f64,
) -> Result<FwResult> {
    let mut t: Vec<CMatrix> = start.to_vec();
    let mut f = prog.value(&t);
    let mut trace = vec![f];
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        let grad = prog.gradient(&t);
        let atom = solve_linear_sdp(&prog.linear_oracle(grad.clone()))?.pool.blocks;
        let d: Vec<CMatrix> = atom.iter().zip(&t).map(|(s, x)| s - x).collect();
        gap = grad.iter().zip(&d).map(|(g, di)| trace_product(g, di)).sum();
        if gap <= tol * (1.0 + f.abs()) {
            converged = true;
            break;
        }
        iterations += 1;
        let args: Vec<f64> = prog.logs.iter().map(|l| l.argument(&t)).collect();
        let dargs: Vec<f64> = prog
            .logs
            .iter()
            .map(|l| l.terms.iter().map(|(n, b)| trace_product(b, &d[*n])).sum())
            .collect();
        let dlin: f64 = prog
            .linear
            .iter()
            .zip(&d)
            .map(|(c, di)| trace_product(c, di))
            .sum();
        let gamma = if slope(prog, &args, &dargs, dlin, 1.0) >= 0.0 {
            1.0
        } else {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if slope(prog, &args, &dargs, dlin, mid) >= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        let cand: Vec<CMatrix> = t
            .iter()
            .zip(&d)
            .map(|(x, di)| x + di * C64::new(gamma, 0.0))
            .collect();
        let fc = prog.value(&cand);
        if fc >= f {
            t = cand;
            f = fc;
        }
        trace.push(f);
    }
    Ok(FwResult {
        blocks: t,
        objective: f,
        gap,
        iterations,
        converged,
        trace,
    })
}
