//! Rank-one extraction, rank reduction of relaxed covariances, and post-extraction repair.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::program::Coords;
use super::{CovariancePool, SdrProblem};
use crate::error::ConstraintId;
use crate::linalg::{hermitian_part, outer, quad_form, CMatrix, CVector, C64};
use crate::metrics::DigitalBeamformer;

/// Beamformer columns read off a covariance pool.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub beamformer: DigitalBeamformer,
    /// `1 - lambda_max / Tr` per block (0 for a zero block).
    pub defects: Vec<f64>,
}

const TIE_TOL: f64 = 1e-9;

fn phase_normalize(v: &mut CVector) {
    let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-12 * peak).copied() {
        let rot = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= rot);
    }
}

/// Principal eigenvector of each block scaled by the square root of its eigenvalue.
///
/// Among equal top eigenvalues the direction is the projection of the lowest-index standard
/// basis vector onto the top eigenspace; the first non-negligible entry is made real positive.
pub fn rank_one_extract(pool: &CovariancePool) -> Extraction {
    let n_amb = pool.ambient_dim();
    let mut columns = Vec::with_capacity(pool.len());
    let mut defects = Vec::with_capacity(pool.len());
    for block in &pool.blocks {
        let h = hermitian_part(block);
        let tr = h.trace().re;
        let eig = SymmetricEigen::new(h);
        let lmax = eig.eigenvalues.max();
        if !(tr > 0.0 && lmax > 0.0) {
            columns.push(CVector::zeros(n_amb));
            defects.push(0.0);
            continue;
        }
        let top: Vec<usize> = (0..eig.eigenvalues.len())
            .filter(|&i| eig.eigenvalues[i] >= lmax * (1.0 - TIE_TOL))
            .collect();
        let mut u = if top.len() == 1 {
            pool.lift(&eig.eigenvectors.column(top[0]).into_owned())
        } else {
            let v = CMatrix::from_columns(
                &top.iter()
                    .map(|&i| eig.eigenvectors.column(i))
                    .collect::<Vec<_>>(),
            );
            let mut chosen = pool.lift(&v.column(0).into_owned());
            for i in 0..n_amb {
                // Reduced coordinates of e_i, then its projection onto the top eigenspace.
                let ei = match &pool.basis {
                    Some(b) => b.row(i).adjoint(),
                    None => {
                        let mut e = CVector::zeros(n_amb);
                        e[i] = C64::new(1.0, 0.0);
                        e
                    }
                };
                let proj = pool.lift(&(&v * (v.adjoint() * ei)));
                let nrm = proj.norm();
                if nrm > 1e-8 {
                    chosen = proj / C64::new(nrm, 0.0);
                    break;
                }
            }
            chosen
        };
        let nrm = u.norm();
        u /= C64::new(nrm, 0.0);
        phase_normalize(&mut u);
        columns.push(u * C64::new(lmax.sqrt(), 0.0));
        defects.push((1.0 - lmax / tr).max(0.0));
    }
    let matrix = CMatrix::from_columns(&columns);
    let beamformer = DigitalBeamformer::new(matrix, pool.n_users)
        .unwrap_or_else(|_| DigitalBeamformer::zeros(n_amb, pool.n_users, pool.len() - pool.n_users));
    Extraction { beamformer, defects }
}

/// PSD factor `V` with `V V^H = R`, dropping negligible eigenvalues.
fn psd_factor(r: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(r));
    let lmax = eig.eigenvalues.max().max(0.0);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > 1e-12 * lmax && eig.eigenvalues[i] > 0.0)
        .collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let cols: Vec<CVector> = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i) * C64::new(eig.eigenvalues[i].sqrt(), 0.0))
        .collect();
    let v = if cols.is_empty() {
        CMatrix::zeros(r.nrows(), 0)
    } else {
        CMatrix::from_columns(&cols)
    };
    (vals, v)
}

/// Lowers the rank of `R = V V^H` while keeping `Re Tr(A_i R)` fixed for every `A_i`, until
/// `rank^2 <= len(A)` or `rank <= target_rank`.
fn reduce_rank(r: &CMatrix, constraints: &[CMatrix], target_rank: usize) -> CMatrix {
    let (_, mut v) = psd_factor(r);
    let p = constraints.len();
    while v.ncols() > target_rank && v.ncols() * v.ncols() > p {
        let k = v.ncols();
        let coords = Coords { dim: k, blocks: 1 };
        let mut a = DMatrix::zeros(p, coords.len());
        for (i, c) in constraints.iter().enumerate() {
            let g = coords.functional(&[(0, v.adjoint() * c * &v)]);
            a.row_mut(i).copy_from(&g.transpose());
        }
        // A null-space direction: the right singular vector of the smallest singular value of
        // the square completion.
        let mut full = DMatrix::zeros(coords.len(), coords.len());
        full.view_mut((0, 0), (p, coords.len())).copy_from(&a);
        let svd = full.svd(false, true);
        let Some(vt) = svd.v_t else { break };
        let idx = svd.singular_values.imin();
        let dir = DVector::from_iterator(coords.len(), vt.row(idx).iter().copied());
        let delta = coords.block(&dir, 0);
        let eig = SymmetricEigen::new(delta);
        let lead = eig
            .eigenvalues
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(0.0);
        if lead.abs() < 1e-300 {
            break;
        }
        // I - Delta / lead is PSD with at least one zero eigenvalue.
        let shrink: Vec<f64> = eig
            .eigenvalues
            .iter()
            .map(|e| (1.0 - e / lead).max(0.0))
            .collect();
        let m = &eig.eigenvectors
            * CMatrix::from_diagonal(&DVector::from_iterator(
                k,
                shrink.iter().map(|s| C64::new(*s, 0.0)),
            ))
            * eig.eigenvectors.adjoint();
        let next = &v * m * v.adjoint();
        let (_, nv) = psd_factor(&next);
        if nv.ncols() >= k {
            break;
        }
        v = nv;
    }
    &v * v.adjoint()
}

/// Rank-one purification of a relaxed solution that keeps every SINR, beampattern gain and the
/// transmit power of the pool.
///
/// Each user block is replaced by `f f^H` with `f = T h / sqrt(h^H T h)`; the remainder is
/// invisible to its own user and joins the sensing covariance. The sensing covariance is then
/// rank-reduced while preserving its trace and all quadratic forms in the channels and target
/// steering vectors, and split into one rank-one block per target (its leading eigenpairs).
/// With no targets the remainder is dropped, which only lowers interference and power.
pub fn purify(pool: &CovariancePool, problem: &SdrProblem) -> CovariancePool {
    let m_users = problem.n_users();
    let n_targets = problem.n_targets();
    let project = |v: &CVector| match &pool.basis {
        Some(u) => u.adjoint() * v,
        None => v.clone(),
    };
    let h: Vec<CVector> = problem.channels.iter().map(project).collect();
    let a: Vec<CVector> = problem.steering.iter().map(project).collect();
    let dim = pool.blocks.first().map_or(0, |b| b.nrows());
    let mut blocks = Vec::with_capacity(pool.len());
    let mut radar = CMatrix::zeros(dim, dim);
    for (m, hm) in h.iter().enumerate() {
        let t = hermitian_part(&pool.blocks[m]);
        let g = quad_form(&t, hm);
        if g > 0.0 {
            let f = &t * hm / C64::new(g.sqrt(), 0.0);
            let ff = outer(&f);
            radar += &t - &ff;
            blocks.push(ff);
        } else {
            radar += t;
            blocks.push(CMatrix::zeros(dim, dim));
        }
    }
    if n_targets > 0 {
        for l in 0..n_targets {
            radar += hermitian_part(&pool.blocks[m_users + l]);
        }
        let mut cons = vec![CMatrix::identity(dim, dim)];
        cons.extend(h.iter().map(outer));
        cons.extend(a.iter().map(outer));
        let reduced = reduce_rank(&radar, &cons, n_targets);
        let (_, v) = psd_factor(&reduced);
        for l in 0..n_targets {
            blocks.push(if l < v.ncols() {
                outer(&v.column(l).into_owned())
            } else {
                CMatrix::zeros(dim, dim)
            });
        }
    }
    CovariancePool {
        basis: pool.basis.clone(),
        blocks,
        n_users: pool.n_users,
        objective_value: pool.objective_value,
        feasibility_residuals: pool.feasibility_residuals.clone(),
    }
}

/// Outcome of [`repair_feasibility`].
#[derive(Debug, Clone)]
pub struct Repair {
    pub beamformer: DigitalBeamformer,
    /// Real factor applied to each column.
    pub scales: Vec<f64>,
    pub feasible: bool,
    /// Relative shortfall of every violated constraint of the returned beamformer.
    pub violations: Vec<(ConstraintId, f64)>,
}

const REPAIR_SLACK: f64 = 1e-9;
const REPAIR_MARGIN: f64 = 1e-6;
const REPAIR_ROUNDS: usize = 200;

struct Measured {
    sinr: Vec<f64>,
    gain: Vec<f64>,
    power: f64,
}

fn measure(f: &CMatrix, problem: &SdrProblem) -> Measured {
    let sinr = problem
        .channels
        .iter()
        .enumerate()
        .map(|(m, h)| {
            let p: Vec<f64> = (h.adjoint() * f).iter().map(|z| z.norm_sqr()).collect();
            let interference: f64 = p
                .iter()
                .enumerate()
                .filter(|(n, _)| *n != m)
                .map(|(_, v)| v)
                .sum();
            p[m] / (interference + problem.noise)
        })
        .collect();
    let gain = problem
        .steering
        .iter()
        .map(|a| (a.adjoint() * f).iter().map(|z| z.norm_sqr()).sum())
        .collect();
    Measured {
        sinr,
        gain,
        power: crate::linalg::frob2(f),
    }
}

fn violations(ms: &Measured, problem: &SdrProblem) -> Vec<(ConstraintId, f64)> {
    let mut out = Vec::new();
    for (user, (s, t)) in ms.sinr.iter().zip(&problem.tau).enumerate() {
        if *s < t * (1.0 - REPAIR_SLACK) {
            out.push((ConstraintId::Sinr { user }, (t - s) / t));
        }
    }
    for (target, (g, t)) in ms.gain.iter().zip(&problem.gamma).enumerate() {
        if *g < t * (1.0 - REPAIR_SLACK) {
            out.push((ConstraintId::Beampattern { target }, (t - g) / t));
        }
    }
    if ms.power > problem.p_max * (1.0 + REPAIR_SLACK) {
        out.push((ConstraintId::Power, (ms.power - problem.p_max) / problem.p_max));
    }
    out
}

/// Restores the constraints of `problem` by rescaling columns: a common shrink when the power
/// budget is exceeded, and growth of the violating user columns (and of the target column most
/// aligned with a violated target direction) otherwise. A feasible input is returned unchanged;
/// if the floors cannot be met, the least-violating iterate is returned and flagged.
pub fn repair_feasibility(f: &DigitalBeamformer, problem: &SdrProblem) -> Repair {
    let k = f.n_streams();
    let mut mat = f.matrix().clone();
    let mut scales = vec![1.0; k];
    let mut best: Option<(f64, CMatrix, Vec<f64>, Vec<(ConstraintId, f64)>)> = None;
    for _ in 0..REPAIR_ROUNDS {
        let ms = measure(&mat, problem);
        let viol = violations(&ms, problem);
        if viol.is_empty() {
            return Repair {
                beamformer: DigitalBeamformer::new(mat, f.n_users()).expect("finite repair"),
                scales,
                feasible: true,
                violations: viol,
            };
        }
        let worst = viol.iter().map(|(_, v)| *v).fold(0.0, f64::max);
        if best.as_ref().is_none_or(|b| worst < b.0) {
            best = Some((worst, mat.clone(), scales.clone(), viol.clone()));
        }
        let mut col_scale = vec![1.0f64; k];
        if ms.power > problem.p_max * (1.0 + REPAIR_SLACK) {
            col_scale
                .iter_mut()
                .for_each(|c| *c = (problem.p_max / ms.power).sqrt());
        } else {
            let mut stuck = true;
            for (id, _) in &viol {
                match *id {
                    ConstraintId::Sinr { user } if ms.sinr[user] > 0.0 => {
                        let c = (problem.tau[user] * (1.0 + REPAIR_MARGIN) / ms.sinr[user]).sqrt();
                        col_scale[user] = col_scale[user].max(c);
                        stuck = false;
                    }
                    ConstraintId::Beampattern { target } => {
                        let a = &problem.steering[target];
                        let per: Vec<f64> = (a.adjoint() * &mat).iter().map(|z| z.norm_sqr()).collect();
                        let candidates = if problem.n_targets() > 0 && k > problem.n_users() {
                            problem.n_users()..k
                        } else {
                            0..k
                        };
                        if let Some(n) = candidates
                            .clone()
                            .max_by(|&x, &y| per[x].total_cmp(&per[y]))
                            .filter(|&n| per[n] > 0.0)
                        {
                            let need = problem.gamma[target] * (1.0 + REPAIR_MARGIN) - ms.gain[target];
                            let c = (1.0 + need / per[n]).sqrt();
                            col_scale[n] = col_scale[n].max(c);
                            stuck = false;
                        }
                    }
                    _ => {}
                }
            }
            if stuck {
                break;
            }
        }
        for (n, c) in col_scale.iter().enumerate() {
            mat.column_mut(n).scale_mut(*c);
            scales[n] *= c;
        }
    }
    let ms = measure(&mat, problem);
    let viol = violations(&ms, problem);
    let worst = viol.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    if viol.is_empty() {
        return Repair {
            beamformer: DigitalBeamformer::new(mat, f.n_users()).expect("finite repair"),
            scales,
            feasible: true,
            violations: viol,
        };
    }
    let (_, mat, scales, viol) = match best {
        Some(b) if b.0 < worst => b,
        _ => (worst, mat, scales, viol),
    };
    Repair {
        beamformer: DigitalBeamformer::new(mat, f.n_users()).expect("finite repair"),
        scales,
        feasible: false,
        violations: viol,
    }
}
