//! Concave programs `sum_j w_j ln(<B_j, T> + d_j) + <C, T> + c0` over PSD blocks, and the real
//! coordinates used by the second-order solver.

use nalgebra::DVector;

use super::{LinearSdp, TraceConstraint};
use crate::linalg::{trace_product, CMatrix, C64};

/// `weight * ln(sum_{(n, B)} Re Tr(B T_n) + offset)`.
#[derive(Debug, Clone)]
pub(crate) struct LogTerm {
    pub weight: f64,
    pub terms: Vec<(usize, CMatrix)>,
    pub offset: f64,
}

impl LogTerm {
    pub fn argument(&self, t: &[CMatrix]) -> f64 {
        self.terms
            .iter()
            .map(|(n, b)| trace_product(b, &t[*n]))
            .sum::<f64>()
            + self.offset
    }
}

#[derive(Debug, Clone)]
pub(crate) struct ConcaveProgram {
    pub dim: usize,
    pub blocks: usize,
    pub logs: Vec<LogTerm>,
    pub linear: Vec<CMatrix>,
    pub constant: f64,
    pub constraints: Vec<TraceConstraint>,
}

impl ConcaveProgram {
    /// Objective value; `-inf` outside the domain of the logarithms.
    pub fn value(&self, t: &[CMatrix]) -> f64 {
        let mut v = self.constant;
        for l in &self.logs {
            let a = l.argument(t);
            if !(a > 0.0) {
                return f64::NEG_INFINITY;
            }
            v += l.weight * a.ln();
        }
        v + self
            .linear
            .iter()
            .zip(t)
            .map(|(c, x)| trace_product(c, x))
            .sum::<f64>()
    }

    /// Gradient blocks (Hermitian), so that `d value = sum_n Re Tr(G_n dT_n)`.
    pub fn gradient(&self, t: &[CMatrix]) -> Vec<CMatrix> {
        let mut g = self.linear.clone();
        for l in &self.logs {
            let s = l.weight / l.argument(t);
            for (n, b) in &l.terms {
                g[*n] += b * C64::new(s, 0.0);
            }
        }
        g
    }

    /// The linear SDP that maximizes `sum_n <cost_n, S_n>` over this program's feasible set.
    pub fn linear_oracle(&self, cost: Vec<CMatrix>) -> LinearSdp {
        LinearSdp {
            dim: self.dim,
            blocks: self.blocks,
            cost,
            constraints: self.constraints.clone(),
        }
    }
}

/// Real coordinates of `blocks` Hermitian `dim x dim` matrices: per block the diagonal, then
/// real and imaginary parts of the strict upper triangle.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Coords {
    pub dim: usize,
    pub blocks: usize,
}

impl Coords {
    pub fn per_block(&self) -> usize {
        self.dim * self.dim
    }

    pub fn len(&self) -> usize {
        self.blocks * self.per_block()
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let d = self.dim;
        (0..d).flat_map(move |i| (i + 1..d).map(move |j| (i, j)))
    }

    /// Writes `<E_a, P>` for the basis of block `n` into `out`.
    pub fn add_coefficients(&self, n: usize, p: &CMatrix, scale: f64, out: &mut DVector<f64>) {
        let base = n * self.per_block();
        for i in 0..self.dim {
            out[base + i] += scale * p[(i, i)].re;
        }
        for (k, (i, j)) in self.pairs().enumerate() {
            let z = p[(i, j)] + p[(j, i)].conj();
            out[base + self.dim + 2 * k] += scale * z.re;
            out[base + self.dim + 2 * k + 1] += scale * z.im;
        }
    }

    /// `g` such that `g . y = sum_{(n, A)} Re Tr(A Y_n)`.
    pub fn functional(&self, terms: &[(usize, CMatrix)]) -> DVector<f64> {
        let mut g = DVector::zeros(self.len());
        for (n, a) in terms {
            self.add_coefficients(*n, a, 1.0, &mut g);
        }
        g
    }

    pub fn block(&self, y: &DVector<f64>, n: usize) -> CMatrix {
        let base = n * self.per_block();
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            m[(i, i)] = C64::new(y[base + i], 0.0);
        }
        for (k, (i, j)) in self.pairs().enumerate() {
            let z = C64::new(y[base + self.dim + 2 * k], y[base + self.dim + 2 * k + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
        m
    }

    pub fn blocks_of(&self, y: &DVector<f64>) -> Vec<CMatrix> {
        (0..self.blocks).map(|n| self.block(y, n)).collect()
    }

    pub fn vector(&self, blocks: &[CMatrix]) -> DVector<f64> {
        let mut y = DVector::zeros(self.len());
        for (n, b) in blocks.iter().enumerate() {
            let base = n * self.per_block();
            for i in 0..self.dim {
                y[base + i] = b[(i, i)].re;
            }
            for (k, (i, j)) in self.pairs().enumerate() {
                let z = (b[(i, j)] + b[(j, i)].conj()) * 0.5;
                y[base + self.dim + 2 * k] = z.re;
                y[base + self.dim + 2 * k + 1] = z.im;
            }
        }
        y
    }

    /// Basis matrices `E_a` of one block.
    pub fn basis(&self) -> Vec<CMatrix> {
        let one = Coords {
            dim: self.dim,
            blocks: 1,
        };
        (0..self.per_block())
            .map(|a| {
                let mut y = DVector::zeros(self.per_block());
                y[a] = 1.0;
                one.block(&y, 0)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinates_round_trip_and_pair_with_functionals() {
        let c = Coords { dim: 3, blocks: 2 };
        let a = CMatrix::from_fn(3, 3, |i, j| {
            C64::new((i * 3 + j) as f64, i as f64 - 2.0 * j as f64)
        });
        let a = crate::linalg::hermitian_part(&a);
        let b = CMatrix::from_fn(3, 3, |i, j| {
            C64::new(1.0 + (i + j) as f64, (i as f64) * (j as f64) - 1.0)
        });
        let b = crate::linalg::hermitian_part(&b);
        let y = c.vector(&[a.clone(), b.clone()]);
        assert!((c.block(&y, 0) - &a).norm() < 1e-14);
        assert!((c.block(&y, 1) - &b).norm() < 1e-14);
        let g = c.functional(&[(1, a.clone())]);
        assert!((g.dot(&y) - trace_product(&a, &b)).abs() < 1e-12);
    }
}
