//! Performance functionals of a beamformer and the rank-one SINR data matrix.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{outer, CMatrix, CVector, C64};
use crate::model::{ArrayGeometry, ChannelSet, ScenarioConfig};

/// Fully-digital beamformer `F` (`N_t x K`). The first `n_users` columns carry user streams,
/// the remaining ones carry the sensing streams.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalBeamformer {
    matrix: CMatrix,
    n_users: usize,
}

impl DigitalBeamformer {
    pub fn new(matrix: CMatrix, n_users: usize) -> Result<Self> {
        if n_users > matrix.ncols() {
            return Err(Error::InvalidArgument(format!(
                "{n_users} user streams but only {} columns",
                matrix.ncols()
            )));
        }
        if !crate::linalg::is_finite(&matrix) {
            return Err(Error::NonFinite("beamformer entries".into()));
        }
        Ok(DigitalBeamformer { matrix, n_users })
    }

    pub fn from_columns(columns: &[CVector], n_users: usize) -> Result<Self> {
        let n_tx = columns
            .first()
            .map(|c| c.len())
            .ok_or_else(|| Error::InvalidArgument("no columns".into()))?;
        if columns.iter().any(|c| c.len() != n_tx) {
            return Err(Error::InvalidArgument("columns differ in length".into()));
        }
        Self::new(CMatrix::from_columns(columns), n_users)
    }

    pub fn zeros(n_tx: usize, n_users: usize, n_targets: usize) -> Self {
        DigitalBeamformer {
            matrix: CMatrix::zeros(n_tx, n_users + n_targets),
            n_users,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn column(&self, n: usize) -> CVector {
        self.matrix.column(n).into_owned()
    }

    pub fn n_tx(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_streams(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_targets(&self) -> usize {
        self.matrix.ncols() - self.n_users
    }

    /// `sum_n ||f_n||^2`.
    pub fn total_power(&self) -> f64 {
        crate::linalg::frob2(&self.matrix)
    }

    /// Multiplies column `n` by the real factor `s`.
    pub fn scale_column(&mut self, n: usize, s: f64) {
        self.matrix.column_mut(n).scale_mut(s);
    }
}

/// `|h_m^H f_n|^2` for every stream `n`.
fn stream_powers(h: &CVector, f: &DigitalBeamformer) -> Vec<f64> {
    let row = h.adjoint() * f.matrix();
    row.iter().map(|z| z.norm_sqr()).collect()
}

/// `sum_{n != m} |h_m^H f_n|^2 + noise`.
pub fn interference_plus_noise(channels: &ChannelSet, f: &DigitalBeamformer, m: usize, noise: f64) -> f64 {
    let p = stream_powers(&channels.channels[m], f);
    p.iter()
        .enumerate()
        .filter(|(n, _)| *n != m)
        .map(|(_, v)| v)
        .sum::<f64>()
        + noise
}

/// SINR of user `m`; every other column (user or sensing) counts as interference.
pub fn sinr(channels: &ChannelSet, f: &DigitalBeamformer, m: usize, noise: f64) -> f64 {
    let p = stream_powers(&channels.channels[m], f);
    let interference: f64 = p
        .iter()
        .enumerate()
        .filter(|(n, _)| *n != m)
        .map(|(_, v)| v)
        .sum();
    p[m] / (interference + noise)
}

pub fn sinrs(channels: &ChannelSet, f: &DigitalBeamformer, noise: f64) -> Vec<f64> {
    (0..channels.n_users())
        .map(|m| sinr(channels, f, m, noise))
        .collect()
}

/// `sum_m log2(1 + sinr_m)`.
pub fn sum_rate_from_sinr(sinr: &[f64]) -> f64 {
    sinr.iter().map(|s| (1.0 + s).log2()).sum()
}

pub fn sum_rate(channels: &ChannelSet, f: &DigitalBeamformer, noise: f64) -> f64 {
    sum_rate_from_sinr(&sinrs(channels, f, noise))
}

/// `a^H F F^H a` for a given steering vector.
pub fn gain_along(a: &CVector, f: &DigitalBeamformer) -> f64 {
    let row = a.adjoint() * f.matrix();
    row.iter().map(|z| z.norm_sqr()).sum()
}

/// Transmit beampattern gain toward `theta` (angle in the steering-phase convention).
pub fn beampattern_gain(geometry: &ArrayGeometry, theta: f64, f: &DigitalBeamformer) -> f64 {
    gain_along(&geometry.steering(theta), f)
}

/// `eta * sum_n ||f_n||^2 + n_rfc * p_static`.
pub fn dissipated_power(f: &DigitalBeamformer, eta: f64, n_rfc: usize, p_static: f64) -> f64 {
    eta * f.total_power() + n_rfc as f64 * p_static
}

/// Sum-rate over dissipated power, with `cfg.n_rfc` RF chains.
pub fn energy_efficiency(channels: &ChannelSet, f: &DigitalBeamformer, cfg: &ScenarioConfig) -> f64 {
    energy_efficiency_with_chains(channels, f, cfg, cfg.n_rfc)
}

pub fn energy_efficiency_with_chains(
    channels: &ChannelSet,
    f: &DigitalBeamformer,
    cfg: &ScenarioConfig,
    n_chains: usize,
) -> f64 {
    sum_rate(channels, f, cfg.noise_power)
        / dissipated_power(f, cfg.amplifier_efficiency, n_chains, cfg.rfc_static_power)
}

/// `Q_m = h_m h_m^H / Phi_m` with `Phi_m` the interference-plus-noise seen under `f_prev`, so that
/// `f_m^H Q_m f_m` reproduces the SINR of user `m` at `f_prev`.
pub fn build_q(channels: &ChannelSet, f_prev: &DigitalBeamformer, m: usize, noise: f64) -> CMatrix {
    let phi = interference_plus_noise(channels, f_prev, m, noise);
    outer(&channels.channels[m]) * C64::new(1.0 / phi, 0.0)
}

/// Stage iteration counts of one design.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IterationCounts {
    pub outer: usize,
    pub inner_solves: usize,
    pub continuation_rounds: usize,
    pub rcg: usize,
}

/// Everything measured on one finished design.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DesignReport {
    pub method: String,
    pub feasible: bool,
    pub converged: bool,
    pub energy_efficiency: f64,
    pub sum_rate: f64,
    pub per_user_sinr: Vec<f64>,
    pub per_target_gain: Vec<f64>,
    pub tx_power: f64,
    pub dissipated_power: f64,
    pub lambda_trace: Vec<f64>,
    pub ee_trace: Vec<f64>,
    pub rank_one_defect: Vec<f64>,
    pub factorization_error: f64,
    /// Efficiency of the fully-digital design before factorization (hybrid methods only).
    pub digital_energy_efficiency: Option<f64>,
    pub iterations: IterationCounts,
    pub wall_time: f64,
    pub warnings: Vec<String>,
}

impl DesignReport {
    /// Fills the performance fields from the effective beamformer `f` driven by `n_chains` RF chains.
    pub fn measure(
        method: &str,
        channels: &ChannelSet,
        f: &DigitalBeamformer,
        cfg: &ScenarioConfig,
        n_chains: usize,
    ) -> Self {
        let per_user_sinr = sinrs(channels, f, cfg.noise_power);
        let per_target_gain: Vec<f64> = cfg.target_steering().iter().map(|a| gain_along(a, f)).collect();
        let sum_rate = sum_rate_from_sinr(&per_user_sinr);
        let dissipated = dissipated_power(f, cfg.amplifier_efficiency, n_chains, cfg.rfc_static_power);
        let tol = 1e-3;
        let feasible = per_user_sinr
            .iter()
            .zip(&cfg.sinr_thresholds)
            .all(|(s, t)| *s >= t * (1.0 - tol))
            && per_target_gain
                .iter()
                .zip(&cfg.beampattern_thresholds)
                .all(|(g, t)| *g >= t * (1.0 - tol))
            && f.total_power() <= cfg.max_tx_power * (1.0 + 1e-6);
        DesignReport {
            method: method.to_string(),
            feasible,
            energy_efficiency: sum_rate / dissipated,
            sum_rate,
            per_user_sinr,
            per_target_gain,
            tx_power: f.total_power(),
            dissipated_power: dissipated,
            ..Default::default()
        }
    }

    pub fn min_user_sinr(&self) -> f64 {
        self.per_user_sinr.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_target_gain(&self) -> f64 {
        self.per_target_gain.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ArrayGeometry;
    use approx::assert_relative_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn two_antenna(h: [f64; 2]) -> ChannelSet {
        ChannelSet::from_vectors(
            ArrayGeometry::half_wavelength(2),
            vec![CVector::from_vec(vec![c(h[0]), c(h[1])])],
        )
    }

    #[test]
    fn sinr_without_interference() {
        let ch = two_antenna([1.0, 0.0]);
        let f = DigitalBeamformer::new(
            CMatrix::from_row_slice(2, 2, &[c(2.0), c(0.0), c(0.0), c(3.0)]),
            1,
        )
        .unwrap();
        assert_relative_eq!(sinr(&ch, &f, 0, 1.0), 4.0);
    }

    #[test]
    fn sinr_with_equal_interference() {
        let ch = two_antenna([1.0, 0.0]);
        let f = DigitalBeamformer::new(
            CMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(0.0)]),
            1,
        )
        .unwrap();
        assert_relative_eq!(sinr(&ch, &f, 0, 1.0), 0.5);
    }

    #[test]
    fn sum_rate_examples() {
        assert_relative_eq!(sum_rate_from_sinr(&[1.0, 1.0]), 2.0);
        assert_relative_eq!(sum_rate_from_sinr(&[0.0, 0.0]), 0.0);
        assert_relative_eq!(sum_rate_from_sinr(&[3.0, 15.0]), 6.0);
    }

    #[test]
    fn dissipated_power_examples() {
        let mut m = CMatrix::zeros(2, 1);
        m[(0, 0)] = c(10f64.sqrt());
        let f = DigitalBeamformer::new(m, 1).unwrap();
        assert_relative_eq!(dissipated_power(&f, 0.3, 4, 1.0), 7.0, epsilon = 1e-12);
        assert_relative_eq!(dissipated_power(&f, 0.0, 4, 1.0), 4.0);
        let z = DigitalBeamformer::zeros(2, 1, 0);
        assert_relative_eq!(dissipated_power(&z, 0.3, 4, 1.0), 4.0);
    }

    #[test]
    fn steered_column_gain_is_its_power() {
        let geom = ArrayGeometry::half_wavelength(8);
        let a = geom.steering(1.0);
        let f = DigitalBeamformer::from_columns(&[&a * c(3f64.sqrt())], 0).unwrap();
        assert_relative_eq!(beampattern_gain(&geom, 1.0, &f), 3.0, epsilon = 1e-12);
        let z = DigitalBeamformer::zeros(8, 0, 1);
        assert_eq!(beampattern_gain(&geom, 0.4, &z), 0.0);
    }

    #[test]
    fn q_without_interference_is_snr_matrix() {
        let ch = two_antenna([1.0, 2.0]);
        let z = DigitalBeamformer::zeros(2, 1, 0);
        let q = build_q(&ch, &z, 0, 0.5);
        assert_relative_eq!(q[(1, 1)].re, 8.0);
        assert_relative_eq!(q[(0, 1)].re, 4.0);
    }
}
