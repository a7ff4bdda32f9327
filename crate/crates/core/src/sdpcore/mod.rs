//! Dense complex-Hermitian semidefinite programming: the real embedding, a primal-dual
//! interior-point solver for linear block SDPs, a log-barrier and a conditional-gradient solver
//! for the concave relaxed design problem, and rank-one extraction with feasibility repair.

mod barrier;
mod embed;
mod extract;
mod frank_wolfe;
mod linear;
mod program;
mod sdr;

pub use embed::{embed_real, unembed_real};
pub use extract::{purify, rank_one_extract, repair_feasibility, Extraction, Repair};
pub use linear::{feasibility_phase, solve_linear_sdp, FeasibilityReport, LinearSdpSolution};
pub use sdr::{solve_sdr, SdrProblem, SdrSolution};

use crate::linalg::{CMatrix, CVector};

/// Direction of a trace constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// `sum_{(n, A) in terms} Re Tr(A T_n)  (sense)  rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceConstraint {
    pub terms: Vec<(usize, CMatrix)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl TraceConstraint {
    pub fn new(terms: Vec<(usize, CMatrix)>, sense: Sense, rhs: f64) -> Self {
        TraceConstraint { terms, sense, rhs }
    }

    /// Left-hand side at `blocks`.
    pub fn lhs(&self, blocks: &[CMatrix]) -> f64 {
        self.terms
            .iter()
            .map(|(n, a)| crate::linalg::trace_product(a, &blocks[*n]))
            .sum()
    }

    /// Signed slack: non-negative iff the constraint holds (equalities report `-|residual|`).
    pub fn slack(&self, blocks: &[CMatrix]) -> f64 {
        let v = self.lhs(blocks);
        match self.sense {
            Sense::Le => self.rhs - v,
            Sense::Ge => v - self.rhs,
            Sense::Eq => -(v - self.rhs).abs(),
        }
    }
}

/// Maximize `sum_n Re Tr(C_n T_n)` over `blocks` Hermitian PSD `dim x dim` matrices subject to
/// trace constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSdp {
    pub dim: usize,
    pub blocks: usize,
    pub cost: Vec<CMatrix>,
    pub constraints: Vec<TraceConstraint>,
}

/// A set of Hermitian PSD blocks `T_n = U Y_n U^H`. When `basis` is `None` the stored blocks are
/// the full matrices themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariancePool {
    pub basis: Option<CMatrix>,
    pub blocks: Vec<CMatrix>,
    pub n_users: usize,
    pub objective_value: f64,
    pub feasibility_residuals: Vec<f64>,
}

impl CovariancePool {
    pub fn full(blocks: Vec<CMatrix>, n_users: usize) -> Self {
        CovariancePool {
            basis: None,
            blocks,
            n_users,
            objective_value: 0.0,
            feasibility_residuals: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Ambient dimension of the blocks.
    pub fn ambient_dim(&self) -> usize {
        match &self.basis {
            Some(u) => u.nrows(),
            None => self.blocks.first().map_or(0, |b| b.nrows()),
        }
    }

    /// Block `n` in the ambient space.
    pub fn full_block(&self, n: usize) -> CMatrix {
        match &self.basis {
            Some(u) => u * &self.blocks[n] * u.adjoint(),
            None => self.blocks[n].clone(),
        }
    }

    pub fn full_blocks(&self) -> Vec<CMatrix> {
        (0..self.blocks.len()).map(|n| self.full_block(n)).collect()
    }

    /// Maps a vector of the reduced space into the ambient space.
    pub(crate) fn lift(&self, v: &CVector) -> CVector {
        match &self.basis {
            Some(u) => u * v,
            None => v.clone(),
        }
    }

    pub fn total_trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace().re).sum()
    }
}
