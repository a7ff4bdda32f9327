//! Comparison designs: greedy steering-dictionary factorization and fully-digital efficiency.

use crate::error::{Error, Result};
use crate::hbf::{ls_baseband, HybridBeamformer};
use crate::linalg::{frob2, CMatrix, C64};
use crate::metrics::{dissipated_power, sum_rate, DigitalBeamformer};
use crate::model::{ArrayGeometry, ChannelSet, ScenarioConfig};

/// Steering vectors on an angle grid.
#[derive(Debug, Clone)]
pub struct SteeringDictionary {
    pub atoms: CMatrix,
    pub angles: Vec<f64>,
}

impl SteeringDictionary {
    /// `size` angles uniform in `cos(theta)` over `[-1, 1)`.
    pub fn uniform_cosine(geometry: &ArrayGeometry, size: usize) -> Self {
        let angles: Vec<f64> = (0..size)
            .map(|g| (-1.0 + 2.0 * g as f64 / size as f64).clamp(-1.0, 1.0).acos())
            .collect();
        Self::from_angles(geometry, angles)
    }

    pub fn from_angles(geometry: &ArrayGeometry, angles: Vec<f64>) -> Self {
        let cols: Vec<_> = angles.iter().map(|&t| geometry.steering(t)).collect();
        SteeringDictionary {
            atoms: CMatrix::from_columns(&cols),
            angles,
        }
    }

    /// The default grid of `4 N_t` atoms.
    pub fn for_array(geometry: &ArrayGeometry) -> Self {
        Self::uniform_cosine(geometry, 4 * geometry.n_tx)
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// Greedy factorization: pick the atom most correlated with the residual, refit the baseband by
/// least squares, repeat `m_t` times. Analog columns are the picked atoms scaled to unit-modulus
/// entries; the result is rescaled onto `p_max` if it exceeds it.
pub fn omp_hybrid(
    target: &CMatrix,
    dict: &SteeringDictionary,
    m_t: usize,
    p_max: f64,
) -> Result<HybridBeamformer> {
    Ok(omp_with_residuals(target, dict, m_t, p_max)?.0)
}

/// [`omp_hybrid`] plus the residual Frobenius norm after each selection.
pub fn omp_with_residuals(
    target: &CMatrix,
    dict: &SteeringDictionary,
    m_t: usize,
    p_max: f64,
) -> Result<(HybridBeamformer, Vec<f64>)> {
    if dict.len() < m_t {
        return Err(Error::InvalidArgument(format!(
            "dictionary of {} atoms is smaller than {m_t} RF chains",
            dict.len()
        )));
    }
    if dict.atoms.nrows() != target.nrows() {
        return Err(Error::InvalidArgument(
            "dictionary and target differ in rows".into(),
        ));
    }
    let n = target.nrows();
    let amp = C64::new((n as f64).sqrt(), 0.0);
    let mut chosen: Vec<usize> = Vec::with_capacity(m_t);
    let mut residual = target.clone();
    let mut residuals = Vec::with_capacity(m_t);
    let mut f_rf = CMatrix::zeros(n, 0);
    let mut f_bb = CMatrix::zeros(0, target.ncols());
    for _ in 0..m_t {
        let corr = dict.atoms.adjoint() * &residual;
        let best = (0..dict.len())
            .filter(|g| !chosen.contains(g))
            .max_by(|&a, &b| {
                let ra: f64 = corr.row(a).iter().map(|z| z.norm_sqr()).sum();
                let rb: f64 = corr.row(b).iter().map(|z| z.norm_sqr()).sum();
                ra.total_cmp(&rb).then(b.cmp(&a))
            })
            .expect("dictionary has unused atoms");
        chosen.push(best);
        let cols: Vec<_> = chosen.iter().map(|&g| dict.atoms.column(g) * amp).collect();
        f_rf = CMatrix::from_columns(&cols);
        f_bb = ls_baseband(&f_rf, target)?;
        residual = target - &f_rf * &f_bb;
        residuals.push(residual.norm());
    }
    let power = frob2(&(&f_rf * &f_bb));
    if power > p_max {
        f_bb *= C64::new((p_max / power).sqrt(), 0.0);
    }
    Ok((
        HybridBeamformer {
            analog: f_rf,
            baseband: f_bb,
        },
        residuals,
    ))
}

/// Energy efficiency with one RF chain per antenna: `P_diss = eta sum ||f_n||^2 + N_t P_c`.
pub fn fully_digital_ee(channels: &ChannelSet, f: &DigitalBeamformer, cfg: &ScenarioConfig) -> f64 {
    sum_rate(channels, f, cfg.noise_power)
        / dissipated_power(f, cfg.amplifier_efficiency, f.n_tx(), cfg.rfc_static_power)
}
