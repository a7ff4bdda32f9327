//! Primal-dual path-following for linear block SDPs on the real embedding, with
//! Nesterov-Todd scaling and a Mehrotra predictor-corrector.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, LU};

use super::embed::{embed_real, unembed_real};
use super::{CovariancePool, LinearSdp, Sense, TraceConstraint};
use crate::error::{ConstraintId, Error, Result};
use crate::linalg::{hermitian_part, CMatrix};

type RMat = DMatrix<f64>;

/// One equality row `sum <A_k, X_k> + sum a_j x_j = b` of the real standard form.
#[derive(Debug, Clone, Default)]
struct Row {
    blocks: Vec<(usize, RMat)>,
    lp: Vec<(usize, f64)>,
}

/// `min sum <C_k, X_k> + c_lp . x` subject to the rows, `X_k` PSD, `x >= 0`.
#[derive(Debug, Clone, Default)]
struct RealSdp {
    dims: Vec<usize>,
    n_lp: usize,
    c: Vec<RMat>,
    c_lp: Vec<f64>,
    rows: Vec<Row>,
    b: Vec<f64>,
}

#[derive(Debug, Clone)]
struct RealSolution {
    x: Vec<RMat>,
    x_lp: DVector<f64>,
    y: DVector<f64>,
    pobj: f64,
    dobj: f64,
    gap: f64,
    pinf: f64,
    converged: bool,
    iterations: usize,
}

const MAX_ITERS: usize = 100;
const TOL: f64 = 1e-10;
const STEP_FRACTION: f64 = 0.95;

impl RealSdp {
    fn add_lp(&mut self, cost: f64) -> usize {
        self.c_lp.push(cost);
        self.n_lp += 1;
        self.n_lp - 1
    }

    fn apply(&self, x: &[RMat], x_lp: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().map(|r| {
                r.blocks.iter().map(|(k, a)| a.dot(&x[*k])).sum::<f64>()
                    + r.lp.iter().map(|(j, c)| c * x_lp[*j]).sum::<f64>()
            }),
        )
    }

    fn adjoint(&self, y: &DVector<f64>) -> (Vec<RMat>, DVector<f64>) {
        let mut blocks: Vec<RMat> = self.dims.iter().map(|&d| RMat::zeros(d, d)).collect();
        let mut lp = DVector::zeros(self.n_lp);
        for (i, r) in self.rows.iter().enumerate() {
            for (k, a) in &r.blocks {
                blocks[*k] += a * y[i];
            }
            for (j, c) in &r.lp {
                lp[*j] += c * y[i];
            }
        }
        (blocks, lp)
    }
}

/// Nesterov-Todd scaling of one PSD block pair.
struct Nt {
    g: RMat,
    g_inv: RMat,
    w: RMat,
    v: DVector<f64>,
}

fn chol_lower(x: &RMat) -> Option<RMat> {
    Cholesky::new(sym(x)).map(|c| c.l())
}

fn sym(x: &RMat) -> RMat {
    (x + x.transpose()) * 0.5
}

fn nt_scaling(x: &RMat, s: &RMat) -> Option<Nt> {
    let l = chol_lower(x)?;
    let r = l.transpose() * s * &l;
    let eig = SymmetricEigen::new(sym(&r));
    let floor = eig.eigenvalues.max().abs().max(f64::MIN_POSITIVE) * 1e-30;
    let d: Vec<f64> = eig.eigenvalues.iter().map(|&e| e.max(floor)).collect();
    let n = d.len();
    let u = eig.eigenvectors;
    let g = &l * &u * RMat::from_diagonal(&DVector::from_iterator(n, d.iter().map(|e| e.powf(-0.25))));
    let l_inv = l.solve_lower_triangular(&RMat::identity(n, n))?;
    let g_inv = RMat::from_diagonal(&DVector::from_iterator(n, d.iter().map(|e| e.powf(0.25))))
        * u.transpose()
        * l_inv;
    let w = &g * g.transpose();
    let v = DVector::from_iterator(n, d.iter().map(|e| e.sqrt()));
    Some(Nt { g, g_inv, w, v })
}

/// Largest `alpha` with `X + alpha dX` PSD, given the lower Cholesky factor of `X`.
fn max_step(l: &RMat, dx: &RMat) -> f64 {
    let n = l.nrows();
    let l_inv = match l.clone().solve_lower_triangular(&RMat::identity(n, n)) {
        Some(m) => m,
        None => return 0.0,
    };
    let m = &l_inv * dx * l_inv.transpose();
    let lam = SymmetricEigen::new(sym(&m)).eigenvalues.min();
    if lam < 0.0 {
        -1.0 / lam
    } else {
        f64::INFINITY
    }
}

fn max_step_lp(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    x.iter()
        .zip(dx.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

enum Factor {
    Chol(Cholesky<f64, nalgebra::Dyn>),
    Lu(LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl Factor {
    fn solve(&self, b: &DVector<f64>) -> Option<DVector<f64>> {
        match self {
            Factor::Chol(c) => Some(c.solve(b)),
            Factor::Lu(l) => l.solve(b),
        }
    }
}

fn solve_real(p: &RealSdp) -> RealSolution {
    let m = p.rows.len();
    let nb = p.dims.len();
    let b = DVector::from_vec(p.b.clone());
    let c_lp = DVector::from_vec(p.c_lp.clone());
    let nu = p.dims.iter().sum::<usize>() as f64 + p.n_lp as f64;
    let max_dim = p.dims.iter().copied().max().unwrap_or(1) as f64;

    let norm_c = (p.c.iter().map(|c| c.norm_squared()).sum::<f64>() + c_lp.norm_squared()).sqrt();
    let mut xi_p = 10f64.max(max_dim.sqrt());
    let mut xi_d = xi_p.max(norm_c);
    for (i, r) in p.rows.iter().enumerate() {
        let na = (r.blocks.iter().map(|(_, a)| a.norm_squared()).sum::<f64>()
            + r.lp.iter().map(|(_, c)| c * c).sum::<f64>())
        .sqrt();
        xi_p = xi_p.max(max_dim * (1.0 + p.b[i].abs()) / (1.0 + na));
        xi_d = xi_d.max(na);
    }
    let mut x: Vec<RMat> = p.dims.iter().map(|&d| RMat::identity(d, d) * xi_p).collect();
    let mut s: Vec<RMat> = p.dims.iter().map(|&d| RMat::identity(d, d) * xi_d).collect();
    let mut x_lp = DVector::from_element(p.n_lp, xi_p);
    let mut s_lp = DVector::from_element(p.n_lp, xi_d);
    let mut y = DVector::zeros(m);

    let mut out = RealSolution {
        x: x.clone(),
        x_lp: x_lp.clone(),
        y: y.clone(),
        pobj: f64::NAN,
        dobj: f64::NAN,
        gap: f64::INFINITY,
        pinf: f64::INFINITY,
        converged: false,
        iterations: 0,
    };

    for it in 0..=MAX_ITERS {
        let ax = p.apply(&x, &x_lp);
        let rp = &b - ax;
        let (aty, aty_lp) = p.adjoint(&y);
        let rd: Vec<RMat> = (0..nb).map(|k| &p.c[k] - &aty[k] - &s[k]).collect();
        let rd_lp = &c_lp - aty_lp - &s_lp;
        let pobj = (0..nb).map(|k| p.c[k].dot(&x[k])).sum::<f64>() + c_lp.dot(&x_lp);
        let dobj = b.dot(&y);
        let gap = (0..nb).map(|k| x[k].dot(&s[k])).sum::<f64>() + x_lp.dot(&s_lp);
        let pinf = rp.norm() / (1.0 + b.norm());
        let dinf =
            (rd.iter().map(|r| r.norm_squared()).sum::<f64>() + rd_lp.norm_squared()).sqrt() / (1.0 + norm_c);
        let rel_gap = gap.max((pobj - dobj).abs()) / (1.0 + pobj.abs() + dobj.abs());
        out = RealSolution {
            x: x.clone(),
            x_lp: x_lp.clone(),
            y: y.clone(),
            pobj,
            dobj,
            gap,
            pinf,
            converged: rel_gap <= TOL && pinf <= TOL && dinf <= TOL,
            iterations: it,
        };
        if out.converged || it == MAX_ITERS {
            break;
        }
        let mu = gap / nu;

        let nts: Option<Vec<Nt>> = (0..nb).map(|k| nt_scaling(&x[k], &s[k])).collect();
        let Some(nts) = nts else { break };

        let mut schur = RMat::zeros(m, m);
        let wa: Vec<Vec<(usize, RMat)>> = p
            .rows
            .iter()
            .map(|r| {
                r.blocks
                    .iter()
                    .map(|(k, a)| (*k, &nts[*k].w * a * &nts[*k].w))
                    .collect()
            })
            .collect();
        for i in 0..m {
            for j in i..m {
                let mut v = 0.0;
                for (ki, ai) in &p.rows[i].blocks {
                    for (kj, waj) in &wa[j] {
                        if ki == kj {
                            v += ai.dot(waj);
                        }
                    }
                }
                for (li, ci) in &p.rows[i].lp {
                    for (lj, cj) in &p.rows[j].lp {
                        if li == lj {
                            v += ci * cj * x_lp[*li] / s_lp[*li];
                        }
                    }
                }
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        let factor = match Cholesky::new(schur.clone()) {
            Some(c) => Factor::Chol(c),
            None => {
                let scale = schur.diagonal().amax().max(1.0);
                let reg = &schur + RMat::identity(m, m) * (scale * 1e-14);
                match Cholesky::new(reg) {
                    Some(c) => Factor::Chol(c),
                    None => Factor::Lu(schur.clone().lu()),
                }
            }
        };
        let wrdw: Vec<RMat> = (0..nb).map(|k| &nts[k].w * &rd[k] * &nts[k].w).collect();
        let a_wrdw = p.apply(&wrdw, &DVector::zeros(p.n_lp));

        let direction = |rc: &[RMat],
                         rc_lp: &DVector<f64>|
         -> Option<(Vec<RMat>, DVector<f64>, DVector<f64>, Vec<RMat>, DVector<f64>)> {
            let a_rc = p.apply(rc, &DVector::zeros(p.n_lp));
            let lp_part = DVector::from_iterator(
                p.n_lp,
                (0..p.n_lp).map(|j| rc_lp[j] / s_lp[j] - x_lp[j] / s_lp[j] * rd_lp[j]),
            );
            let a_lp = p.apply(
                &p.dims.iter().map(|&d| RMat::zeros(d, d)).collect::<Vec<_>>(),
                &lp_part,
            );
            let rhs = &rp - a_rc + &a_wrdw - a_lp;
            let dy = factor.solve(&rhs)?;
            let (ady, ady_lp) = p.adjoint(&dy);
            let ds: Vec<RMat> = (0..nb).map(|k| &rd[k] - &ady[k]).collect();
            let ds_lp = &rd_lp - ady_lp;
            let dx: Vec<RMat> = (0..nb)
                .map(|k| sym(&(&rc[k] - &nts[k].w * &ds[k] * &nts[k].w)))
                .collect();
            let dx_lp = DVector::from_iterator(
                p.n_lp,
                (0..p.n_lp).map(|j| (rc_lp[j] - x_lp[j] * ds_lp[j]) / s_lp[j]),
            );
            Some((dx, dx_lp, dy, ds, ds_lp))
        };

        let lx: Option<Vec<RMat>> = x.iter().map(chol_lower).collect();
        let ls: Option<Vec<RMat>> = s.iter().map(chol_lower).collect();
        let (Some(lx), Some(ls)) = (lx, ls) else { break };
        let steps = |dx: &[RMat], dx_lp: &DVector<f64>, ds: &[RMat], ds_lp: &DVector<f64>| {
            let mut ap = max_step_lp(&x_lp, dx_lp);
            let mut ad = max_step_lp(&s_lp, ds_lp);
            for k in 0..nb {
                ap = ap.min(max_step(&lx[k], &dx[k]));
                ad = ad.min(max_step(&ls[k], &ds[k]));
            }
            (ap, ad)
        };

        // Predictor (affine scaling) direction.
        let rc_aff: Vec<RMat> = x.iter().map(|xk| -xk).collect();
        let rc_lp_aff = DVector::from_iterator(p.n_lp, (0..p.n_lp).map(|j| -x_lp[j] * s_lp[j]));
        let Some((dxa, dxa_lp, _, dsa, dsa_lp)) = direction(&rc_aff, &rc_lp_aff) else {
            break;
        };
        let (apa, ada) = steps(&dxa, &dxa_lp, &dsa, &dsa_lp);
        let (apa, ada) = (apa.min(1.0), ada.min(1.0));
        let gap_aff = (0..nb)
            .map(|k| (&x[k] + &dxa[k] * apa).dot(&(&s[k] + &dsa[k] * ada)))
            .sum::<f64>()
            + (&x_lp + &dxa_lp * apa).dot(&(&s_lp + &dsa_lp * ada));
        let sigma = (gap_aff / gap).clamp(0.0, 1.0).powi(3);

        // Corrector direction.
        let mut rc = Vec::with_capacity(nb);
        for k in 0..nb {
            let nt = &nts[k];
            let n = nt.v.len();
            let dxh = &nt.g_inv * &dxa[k] * nt.g_inv.transpose();
            let dsh = nt.g.transpose() * &dsa[k] * &nt.g;
            let cross = &dxh * &dsh + &dsh * &dxh;
            let h = RMat::from_fn(n, n, |i, j| {
                let mut r = -cross[(i, j)];
                if i == j {
                    r += 2.0 * sigma * mu - 2.0 * nt.v[i] * nt.v[i];
                }
                r / (nt.v[i] + nt.v[j])
            });
            rc.push(sym(&(&nt.g * h * nt.g.transpose())));
        }
        let rc_lp = DVector::from_iterator(
            p.n_lp,
            (0..p.n_lp).map(|j| sigma * mu - x_lp[j] * s_lp[j] - dxa_lp[j] * dsa_lp[j]),
        );
        let Some((dx, dx_lp, dy, ds, ds_lp)) = direction(&rc, &rc_lp) else {
            break;
        };
        let (ap, ad) = steps(&dx, &dx_lp, &ds, &ds_lp);
        let ap = (STEP_FRACTION * ap).min(1.0);
        let ad = (STEP_FRACTION * ad).min(1.0);
        for k in 0..nb {
            x[k] = sym(&(&x[k] + &dx[k] * ap));
            s[k] = sym(&(&s[k] + &ds[k] * ad));
        }
        x_lp += dx_lp * ap;
        s_lp += ds_lp * ad;
        y += dy * ad;
    }
    out
}

/// Optimal primal blocks plus dual certificate of a linear SDP.
#[derive(Debug, Clone)]
pub struct LinearSdpSolution {
    pub pool: CovariancePool,
    /// One multiplier per constraint (non-negative for inequalities).
    pub duals: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Complementarity `<X, S>` at the returned pair, in objective units.
    pub gap: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Result of the maximum-minimum-relative-slack problem.
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub point: Vec<CMatrix>,
    /// Optimal minimum relative slack over the soft constraints (capped at 1).
    pub slack: f64,
    /// Soft constraint carrying the largest multiplier, i.e. the binding one.
    pub worst: Option<usize>,
    pub converged: bool,
}

fn check_shape(problem: &LinearSdp) -> Result<()> {
    if problem.dim == 0 || problem.blocks == 0 {
        return Err(Error::InvalidArgument(
            "SDP needs at least one non-empty block".into(),
        ));
    }
    if problem.cost.len() != problem.blocks {
        return Err(Error::InvalidArgument(
            "one cost matrix per block is required".into(),
        ));
    }
    let ok = |m: &CMatrix| m.nrows() == problem.dim && m.ncols() == problem.dim;
    if !problem.cost.iter().all(ok) {
        return Err(Error::InvalidArgument(
            "cost matrix has the wrong dimension".into(),
        ));
    }
    for c in &problem.constraints {
        for (n, a) in &c.terms {
            if *n >= problem.blocks || !ok(a) {
                return Err(Error::InvalidArgument("constraint term out of shape".into()));
            }
        }
        if !c.rhs.is_finite() {
            return Err(Error::NonFinite("constraint right-hand side".into()));
        }
    }
    Ok(())
}

fn base_real(problem: &LinearSdp) -> RealSdp {
    RealSdp {
        dims: vec![2 * problem.dim; problem.blocks],
        c: problem
            .cost
            .iter()
            .map(|c| embed_real(&hermitian_part(c)) * -0.5)
            .collect(),
        ..Default::default()
    }
}

fn real_terms(c: &TraceConstraint) -> Vec<(usize, RMat)> {
    c.terms
        .iter()
        .map(|(n, a)| (*n, embed_real(&hermitian_part(a)) * 0.5))
        .collect()
}

/// Appends a row with a fresh non-negative slack variable according to `sense`.
fn push_row(p: &mut RealSdp, blocks: Vec<(usize, RMat)>, mut lp: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
    match sense {
        Sense::Le => lp.push((p.add_lp(0.0), 1.0)),
        Sense::Ge => lp.push((p.add_lp(0.0), -1.0)),
        Sense::Eq => {}
    }
    p.rows.push(Row { blocks, lp });
    p.b.push(rhs);
}

fn extract_blocks(sol: &RealSolution) -> Vec<CMatrix> {
    sol.x.iter().map(|x| hermitian_part(&unembed_real(x))).collect()
}

/// Maximizes `sum_n Re Tr(C_n T_n)` subject to the trace constraints with every `T_n` PSD.
///
/// Returns the primal blocks with the dual multipliers and the complementarity gap. When the
/// iteration does not reach primal feasibility a maximum-relative-slack problem decides whether
/// the constraints are infeasible, in which case the binding constraint is reported.
pub fn solve_linear_sdp(problem: &LinearSdp) -> Result<LinearSdpSolution> {
    check_shape(problem)?;
    let mut p = base_real(problem);
    for c in &problem.constraints {
        push_row(&mut p, real_terms(c), Vec::new(), c.sense, c.rhs);
    }
    let sol = solve_real(&p);
    if !sol.converged && !(sol.pinf <= 1e-6) {
        let soft: Vec<Option<f64>> = problem
            .constraints
            .iter()
            .map(|c| Some(c.rhs.abs().max(1.0)))
            .collect();
        let rep = feasibility_phase(problem, &soft)?;
        if rep.slack < 0.0 {
            return Err(Error::Infeasible {
                constraint: ConstraintId::Linear {
                    index: rep.worst.unwrap_or(0),
                },
                slack: rep.slack,
            });
        }
    }
    let blocks = extract_blocks(&sol);
    let residuals = problem.constraints.iter().map(|c| c.slack(&blocks)).collect();
    let objective = problem
        .cost
        .iter()
        .zip(&blocks)
        .map(|(c, t)| crate::linalg::trace_product(c, t))
        .sum();
    Ok(LinearSdpSolution {
        pool: CovariancePool {
            basis: None,
            blocks,
            n_users: 0,
            objective_value: objective,
            feasibility_residuals: residuals,
        },
        duals: sol.y.iter().map(|v| v.abs()).collect(),
        primal_objective: -sol.pobj,
        dual_objective: -sol.dobj,
        gap: sol.gap,
        converged: sol.converged,
        iterations: sol.iterations,
    })
}

/// Maximizes the minimum relative slack `s` of the soft constraints (those with `Some(w)`, the
/// slack of constraint `i` being measured in units of `w_i`) while hard constraints hold exactly.
/// The cost of `problem` is ignored. `s` is capped at 1 so the problem stays bounded; the soft
/// constraints are simultaneously satisfiable exactly when the optimum is non-negative.
pub fn feasibility_phase(problem: &LinearSdp, soft: &[Option<f64>]) -> Result<FeasibilityReport> {
    check_shape(problem)?;
    if soft.len() != problem.constraints.len() {
        return Err(Error::InvalidArgument("one softness entry per constraint".into()));
    }
    let mut p = base_real(problem);
    p.c.iter_mut().for_each(|c| c.fill(0.0));
    // u = s + 1 >= 0.
    let u = p.add_lp(-1.0);
    let mut soft_rows = Vec::new();
    for (c, w) in problem.constraints.iter().zip(soft) {
        match (w, c.sense) {
            (Some(w), Sense::Ge) => {
                soft_rows.push(Some(p.rows.len()));
                push_row(&mut p, real_terms(c), vec![(u, -w)], Sense::Ge, c.rhs - w);
            }
            (Some(w), Sense::Le) => {
                soft_rows.push(Some(p.rows.len()));
                push_row(&mut p, real_terms(c), vec![(u, *w)], Sense::Le, c.rhs + w);
            }
            _ => {
                soft_rows.push(None);
                push_row(&mut p, real_terms(c), Vec::new(), c.sense, c.rhs);
            }
        }
    }
    push_row(&mut p, Vec::new(), vec![(u, 1.0)], Sense::Le, 2.0);
    let sol = solve_real(&p);
    let point = extract_blocks(&sol);
    let worst = soft_rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|row| (i, sol.y[row].abs())))
        .fold(None::<(usize, f64)>, |acc, (i, v)| match acc {
            Some((_, best)) if best >= v => acc,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i);
    Ok(FeasibilityReport {
        point,
        slack: sol.x_lp[u] - 1.0,
        worst,
        converged: sol.converged,
    })
}
