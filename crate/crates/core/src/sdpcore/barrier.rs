//! Log-barrier path following for [`ConcaveProgram`] with damped Newton centering.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::program::{ConcaveProgram, Coords};
use super::Sense;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

#[derive(Debug, Clone)]
pub(crate) struct BarrierResult {
    pub blocks: Vec<CMatrix>,
    pub objective: f64,
    /// Upper bound on the distance to the optimal value.
    pub gap_bound: f64,
    pub converged: bool,
    pub newton_steps: usize,
}

struct Affine {
    g: DVector<f64>,
    d: f64,
}

struct Setup {
    coords: Coords,
    logs: Vec<(f64, Affine)>,
    /// Barrier slacks `g . y - d > 0`.
    slacks: Vec<Affine>,
    c: DVector<f64>,
    constant: f64,
    basis: Vec<CMatrix>,
}

impl Setup {
    fn new(prog: &ConcaveProgram) -> Result<Self> {
        let coords = Coords {
            dim: prog.dim,
            blocks: prog.blocks,
        };
        let logs = prog
            .logs
            .iter()
            .map(|l| {
                (
                    l.weight,
                    Affine {
                        g: coords.functional(&l.terms),
                        d: -l.offset,
                    },
                )
            })
            .collect();
        let slacks = prog
            .constraints
            .iter()
            .map(|c| {
                let g = coords.functional(&c.terms);
                match c.sense {
                    Sense::Ge => Ok(Affine { g, d: c.rhs }),
                    Sense::Le => Ok(Affine { g: -g, d: -c.rhs }),
                    Sense::Eq => Err(Error::InvalidArgument(
                        "barrier solver handles inequality constraints only".into(),
                    )),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let terms: Vec<(usize, CMatrix)> = prog.linear.iter().cloned().enumerate().collect();
        Ok(Setup {
            c: coords.functional(&terms),
            constant: prog.constant,
            basis: coords.basis(),
            coords,
            logs,
            slacks,
        })
    }

    fn objective(&self, y: &DVector<f64>) -> f64 {
        let mut v = self.constant + self.c.dot(y);
        for (w, a) in &self.logs {
            let arg = a.g.dot(y) - a.d;
            if !(arg > 0.0) {
                return f64::NEG_INFINITY;
            }
            v += w * arg.ln();
        }
        v
    }

    fn block_factors(&self, y: &DVector<f64>) -> Option<Vec<Cholesky<C64, nalgebra::Dyn>>> {
        (0..self.coords.blocks)
            .map(|n| Cholesky::new(self.coords.block(y, n)))
            .collect()
    }

    /// Barrier function `-t f(y) - sum ln(slack) - sum ln det Y_n`; `None` outside the domain.
    fn phi(&self, y: &DVector<f64>, t: f64) -> Option<f64> {
        let f = self.objective(y);
        if !f.is_finite() {
            return None;
        }
        let mut v = -t * f;
        for s in &self.slacks {
            let sl = s.g.dot(y) - s.d;
            if !(sl > 0.0) {
                return None;
            }
            v -= sl.ln();
        }
        for ch in self.block_factors(y)? {
            let l = ch.l();
            v -= 2.0 * (0..l.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>();
        }
        Some(v)
    }

    fn grad_hess(&self, y: &DVector<f64>, t: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let n = self.coords.len();
        let mut grad = -&self.c * t;
        let mut hess = DMatrix::zeros(n, n);
        for (w, a) in &self.logs {
            let arg = a.g.dot(y) - a.d;
            grad.axpy(-t * w / arg, &a.g, 1.0);
            hess.ger(t * w / (arg * arg), &a.g, &a.g, 1.0);
        }
        for s in &self.slacks {
            let sl = s.g.dot(y) - s.d;
            grad.axpy(-1.0 / sl, &s.g, 1.0);
            hess.ger(1.0 / (sl * sl), &s.g, &s.g, 1.0);
        }
        let per = self.coords.per_block();
        let one = Coords {
            dim: self.coords.dim,
            blocks: 1,
        };
        for (k, ch) in self.block_factors(y)?.into_iter().enumerate() {
            let z = ch.inverse();
            let mut gz = DVector::zeros(per);
            one.add_coefficients(0, &z, 1.0, &mut gz);
            for a in 0..per {
                grad[k * per + a] -= gz[a];
            }
            for (b, e) in self.basis.iter().enumerate() {
                let zez = &z * e * &z;
                let mut col = DVector::zeros(per);
                one.add_coefficients(0, &zez, 1.0, &mut col);
                for a in 0..per {
                    hess[(k * per + a, k * per + b)] += col[a];
                }
            }
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        Some((grad, hess))
    }
}

fn newton_direction(grad: &DVector<f64>, hess: DMatrix<f64>) -> Option<DVector<f64>> {
    let n = grad.len();
    if let Some(ch) = Cholesky::new(hess.clone()) {
        return Some(ch.solve(&-grad));
    }
    let scale = hess.diagonal().amax().max(f64::MIN_POSITIVE);
    for k in [1e-14, 1e-12, 1e-10, 1e-8] {
        if let Some(ch) = Cholesky::new(&hess + DMatrix::identity(n, n) * (scale * k)) {
            return Some(ch.solve(&-grad));
        }
    }
    hess.lu().solve(&-grad)
}

/// Maximizes `prog` from the strictly feasible `start` until the barrier duality bound falls
/// below `tol * (1 + |f|)`.
pub(crate) fn maximize(prog: &ConcaveProgram, start: &[CMatrix], tol: f64) -> Result<BarrierResult> {
    let setup = Setup::new(prog)?;
    let mut y = setup.coords.vector(start);
    if setup.phi(&y, 1.0).is_none() {
        return Err(Error::Numerical("barrier start is not strictly feasible".into()));
    }
    let nu = (prog.blocks * prog.dim + setup.slacks.len()) as f64;
    let mut t = nu / (1.0 + setup.objective(&y).abs());
    let mut steps = 0usize;
    let mut converged = false;
    for _ in 0..80 {
        for _ in 0..60 {
            let Some((grad, hess)) = setup.grad_hess(&y, t) else {
                return Err(Error::Numerical("barrier iterate left the domain".into()));
            };
            let Some(dir) = newton_direction(&grad, hess) else {
                break;
            };
            let dec2 = -grad.dot(&dir);
            if !(dec2 > 1e-12) {
                break;
            }
            steps += 1;
            let phi0 = setup.phi(&y, t).unwrap_or(f64::INFINITY);
            let mut alpha = 1.0;
            let mut accepted = false;
            while alpha > 1e-14 {
                let cand = &y + &dir * alpha;
                if let Some(v) = setup.phi(&cand, t) {
                    // Inside the quadratic-convergence region the full step is taken without a
                    // value test, since the decrease there is below round-off of t * f.
                    if (dec2 < 0.1 && alpha == 1.0) || v <= phi0 - 0.25 * alpha * dec2 {
                        y = cand;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted || dec2 < 1e-9 {
                break;
            }
        }
        let f = setup.objective(&y);
        if nu / t <= tol * (1.0 + f.abs()) {
            converged = true;
            break;
        }
        t *= 10.0;
    }
    let f = setup.objective(&y);
    Ok(BarrierResult {
        blocks: setup.coords.blocks_of(&y),
        objective: f,
        gap_bound: nu / t,
        converged,
        newton_steps: steps,
    })
}
