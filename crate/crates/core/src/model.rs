//! Scenario configuration, ULA steering vectors and the multipath mmWave channel model.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{db_to_linear, CVector, C64};

/// Speed of light used to derive the baseline wavelength at 28 GHz.
const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// How the configured angles are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AngleConvention {
    /// Angles measured from array broadside (0 rad = broadside); the steering phase uses
    /// `cos(theta + pi/2)`. This matches the way the figures label user/target directions.
    #[default]
    Broadside,
    /// Angles enter the steering phase directly as `cos(theta)` (0 rad = endfire).
    Cosine,
}

/// Surrogate used for the per-user rate inside the relaxed inner problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateKind {
    /// Rate `log2(1 + Tr(Q_m T_m))` with `Q_m` frozen at the previous iterate; SINR floors as
    /// `Tr(Q_m T_m) >= tau_m`.
    FrozenQ,
    /// Frozen `Q_m` plus a first-order correction for the change in interference. The surrogate
    /// is a global minorizer of the true rate that is tight at the previous iterate, and the SINR
    /// floors are imposed in their exact linear form.
    #[default]
    Linearized,
}

/// Algorithm used for the relaxed inner problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SdrMethod {
    /// Log-barrier interior-point method on the concave objective.
    #[default]
    Barrier,
    /// Conditional gradient over linear-SDP atoms with exact line search.
    FrankWolfe,
}

/// Form of the power penalty in the analog factorization step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyForm {
    /// `mu * (||F_RF F_BB||^2 - P_t)`.
    Linear,
    /// `mu * max(0, ||F_RF F_BB||^2 - P_t)`.
    #[default]
    Hinge,
}

/// When the interference terms inside `Q_m` are refreshed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QRefresh {
    /// Once per outer price iteration.
    #[default]
    Outer,
    /// To convergence at fixed price before every price update.
    Inner,
}

/// Algorithmic switches that are not part of the physical scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub surrogate: SurrogateKind,
    pub sdr_method: SdrMethod,
    pub penalty: PenaltyForm,
    pub q_refresh: QRefresh,
    pub max_outer_iters: usize,
    pub mu0: f64,
    pub mu_decay: f64,
    pub max_continuation_rounds: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            surrogate: SurrogateKind::default(),
            sdr_method: SdrMethod::default(),
            penalty: PenaltyForm::default(),
            q_refresh: QRefresh::default(),
            max_outer_iters: 50,
            mu0: 1.5,
            mu_decay: 0.5,
            max_continuation_rounds: 20,
        }
    }
}

/// Every physical and algorithmic constant of one scenario. All values are linear except the
/// path-loss intercept and the shadowing deviation, which are dB by nature of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_tx: usize,
    pub n_rfc: usize,
    pub n_users: usize,
    pub n_targets: usize,
    pub n_streams: usize,
    pub carrier_wavelength: f64,
    #[serde(default)]
    pub antenna_spacing: Option<f64>,
    pub n_paths_per_user: usize,
    pub noise_power: f64,
    pub max_tx_power: f64,
    pub sinr_thresholds: Vec<f64>,
    pub beampattern_thresholds: Vec<f64>,
    pub amplifier_efficiency: f64,
    pub rfc_static_power: f64,
    pub user_angles: Vec<f64>,
    pub target_angles: Vec<f64>,
    pub user_distances: Vec<f64>,
    pub pathloss_intercept: f64,
    pub pathloss_exponent: f64,
    pub shadowing_std: f64,
    pub tol_dinkelbach: f64,
    pub tol_factorization: f64,
    pub tol_power: f64,
    pub rng_seed: u64,
    #[serde(default)]
    pub angle_convention: AngleConvention,
    /// Draw each user's mean departure angle uniformly instead of using `user_angles`.
    #[serde(default)]
    pub uniform_mean_angles: bool,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl ScenarioConfig {
    /// The simulation constants of the reference scenario: 64 antennas, 4 RF chains, two users at
    /// 30 and 60 degrees, two targets at -60 and -20 degrees, 28 GHz carrier, 100 W budget,
    /// -91 dBm noise, 10 dB SINR and 5 dB beampattern floors, eta = 0.3, 1 W per RF chain.
    pub fn baseline() -> Self {
        let wavelength = SPEED_OF_LIGHT / 28e9;
        ScenarioConfig {
            n_tx: 64,
            n_rfc: 4,
            n_users: 2,
            n_targets: 2,
            n_streams: 4,
            carrier_wavelength: wavelength,
            antenna_spacing: None,
            n_paths_per_user: 10,
            noise_power: db_to_linear(-91.0) * 1e-3,
            max_tx_power: db_to_linear(20.0),
            sinr_thresholds: vec![db_to_linear(10.0); 2],
            beampattern_thresholds: vec![db_to_linear(5.0); 2],
            amplifier_efficiency: 0.3,
            rfc_static_power: db_to_linear(30.0) * 1e-3,
            user_angles: vec![30f64.to_radians(), 60f64.to_radians()],
            target_angles: vec![(-60f64).to_radians(), (-20f64).to_radians()],
            user_distances: vec![50.0, 50.0],
            pathloss_intercept: 61.4,
            pathloss_exponent: 2.0,
            shadowing_std: 5.8,
            tol_dinkelbach: 1e-3,
            tol_factorization: 1e-3,
            tol_power: 1e-3,
            rng_seed: 1,
            angle_convention: AngleConvention::Broadside,
            uniform_mean_angles: false,
            solver: SolverOptions::default(),
        }
    }

    /// Parses and validates a JSON scenario.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn spacing(&self) -> f64 {
        self.antenna_spacing.unwrap_or(self.carrier_wavelength / 2.0)
    }

    pub fn geometry(&self) -> ArrayGeometry {
        ArrayGeometry {
            n_tx: self.n_tx,
            spacing: self.spacing(),
            wavelength: self.carrier_wavelength,
        }
    }

    /// Converts a configured angle into the angle whose cosine drives the steering phase.
    pub fn physical_angle(&self, theta: f64) -> f64 {
        match self.angle_convention {
            AngleConvention::Cosine => theta,
            AngleConvention::Broadside => wrap_angle(theta + PI / 2.0),
        }
    }

    pub fn target_steering(&self) -> Vec<CVector> {
        let geom = self.geometry();
        self.target_angles
            .iter()
            .map(|&t| geom.steering(self.physical_angle(t)))
            .collect()
    }

    /// Same scenario with the sensing targets removed (communication-only design).
    pub fn without_targets(&self) -> Self {
        let mut cfg = self.clone();
        cfg.n_targets = 0;
        cfg.n_streams = cfg.n_users;
        cfg.beampattern_thresholds.clear();
        cfg.target_angles.clear();
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_tx == 0 || self.n_rfc == 0 {
            return bad("n_tx and n_rfc must be positive".into());
        }
        if self.n_users == 0 {
            return bad("n_users must be positive".into());
        }
        if self.n_streams != self.n_users + self.n_targets {
            return bad(format!(
                "n_streams ({}) must equal n_users + n_targets ({})",
                self.n_streams,
                self.n_users + self.n_targets
            ));
        }
        if self.n_rfc < self.n_streams {
            return bad(format!(
                "n_rfc ({}) must be at least n_streams ({})",
                self.n_rfc, self.n_streams
            ));
        }
        if self.n_rfc > self.n_tx {
            return bad(format!("n_rfc ({}) exceeds n_tx ({})", self.n_rfc, self.n_tx));
        }
        if self.n_paths_per_user == 0 {
            return bad("n_paths_per_user must be positive".into());
        }
        let lens = [
            ("sinr_thresholds", self.sinr_thresholds.len(), self.n_users),
            ("user_angles", self.user_angles.len(), self.n_users),
            ("user_distances", self.user_distances.len(), self.n_users),
            (
                "beampattern_thresholds",
                self.beampattern_thresholds.len(),
                self.n_targets,
            ),
            ("target_angles", self.target_angles.len(), self.n_targets),
        ];
        for (name, got, want) in lens {
            if got != want {
                return bad(format!("{name} has {got} entries, expected {want}"));
            }
        }
        let positive = [
            ("carrier_wavelength", self.carrier_wavelength),
            ("antenna_spacing", self.spacing()),
            ("noise_power", self.noise_power),
            ("max_tx_power", self.max_tx_power),
            ("rfc_static_power", self.rfc_static_power),
            ("tol_factorization", self.tol_factorization),
            ("tol_power", self.tol_power),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be finite and positive, got {v}"));
            }
        }
        if !(self.tol_dinkelbach.is_finite() && self.tol_dinkelbach >= 0.0) {
            return bad("tol_dinkelbach must be non-negative".into());
        }
        for (name, list) in [
            ("sinr_thresholds", &self.sinr_thresholds),
            ("beampattern_thresholds", &self.beampattern_thresholds),
            ("user_distances", &self.user_distances),
        ] {
            if let Some(v) = list.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return bad(format!("{name} entries must be finite and positive, got {v}"));
            }
        }
        for (name, list) in [
            ("user_angles", &self.user_angles),
            ("target_angles", &self.target_angles),
        ] {
            if let Some(v) = list.iter().find(|v| !(v.is_finite() && **v > -PI && **v <= PI)) {
                return bad(format!("{name} entries must lie in (-pi, pi], got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.amplifier_efficiency) {
            return bad("amplifier_efficiency must lie in [0, 1]".into());
        }
        if !(self.pathloss_intercept.is_finite() && self.pathloss_exponent.is_finite()) {
            return bad("path-loss parameters must be finite".into());
        }
        if !(self.shadowing_std.is_finite() && self.shadowing_std >= 0.0) {
            return bad("shadowing_std must be non-negative".into());
        }
        let s = &self.solver;
        if !(s.mu0 > 1.0) {
            return bad("solver.mu0 must exceed 1".into());
        }
        if !(s.mu_decay > 0.0 && s.mu_decay < 1.0) {
            return bad("solver.mu_decay must lie in (0, 1)".into());
        }
        if s.max_outer_iters == 0 {
            return bad("solver.max_outer_iters must be positive".into());
        }
        Ok(())
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Uniform linear array description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub n_tx: usize,
    pub spacing: f64,
    pub wavelength: f64,
}

impl ArrayGeometry {
    pub fn half_wavelength(n_tx: usize) -> Self {
        ArrayGeometry {
            n_tx,
            spacing: 0.5,
            wavelength: 1.0,
        }
    }

    /// Steering vector toward `theta`; panics on a non-finite angle (use [`steering_vector`]
    /// for the checked form).
    pub fn steering(&self, theta: f64) -> CVector {
        steering_vector(theta, self.n_tx, self.spacing, self.wavelength)
            .expect("steering angle must be finite")
    }
}

/// ULA response `a(theta)` with element `n` equal to `exp(j 2 pi b n cos(theta) / lambda) / sqrt(N)`.
pub fn steering_vector(theta: f64, n_tx: usize, spacing: f64, wavelength: f64) -> Result<CVector> {
    if !theta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "non-finite steering angle {theta}"
        )));
    }
    if n_tx == 0 {
        return Err(Error::InvalidArgument(
            "steering vector needs at least one antenna".into(),
        ));
    }
    if !(wavelength > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    let scale = 1.0 / (n_tx as f64).sqrt();
    let k = 2.0 * PI / wavelength * spacing * theta.cos();
    Ok(CVector::from_fn(n_tx, |n, _| {
        C64::from_polar(scale, k * n as f64)
    }))
}

/// Log-distance path loss in dB with a caller-supplied shadowing draw.
pub fn path_loss_db(distance: f64, intercept: f64, exponent: f64, shadowing: f64) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "distance must be positive, got {distance}"
        )));
    }
    Ok(intercept + 10.0 * exponent * distance.log10() + shadowing)
}

/// Per-user multipath channels. `channels[m]` holds `h_m`, so the channel row is `h_m^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub channels: Vec<CVector>,
    pub path_gains: Vec<Vec<C64>>,
    pub path_angles: Vec<Vec<f64>>,
    pub pathloss_db: Vec<f64>,
    pub geometry: ArrayGeometry,
}

impl ChannelSet {
    /// Assembles channels from explicit path parameters (`h_m^H = sum_i alpha_i a^H(theta_i)`).
    pub fn from_paths(
        geometry: ArrayGeometry,
        path_gains: Vec<Vec<C64>>,
        path_angles: Vec<Vec<f64>>,
        pathloss_db: Vec<f64>,
    ) -> Result<Self> {
        if path_gains.len() != path_angles.len() || path_gains.len() != pathloss_db.len() {
            return Err(Error::InvalidArgument(
                "path parameter lists disagree in length".into(),
            ));
        }
        let channels = path_gains
            .iter()
            .zip(&path_angles)
            .map(|(gains, angles)| {
                if gains.len() != angles.len() {
                    return Err(Error::InvalidArgument("path gains and angles disagree".into()));
                }
                assemble_channel(&geometry, gains, angles)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ChannelSet {
            channels,
            path_gains,
            path_angles,
            pathloss_db,
            geometry,
        })
    }

    /// Wraps explicit channel vectors (no path bookkeeping).
    pub fn from_vectors(geometry: ArrayGeometry, channels: Vec<CVector>) -> Self {
        let m = channels.len();
        ChannelSet {
            channels,
            path_gains: vec![Vec::new(); m],
            path_angles: vec![Vec::new(); m],
            pathloss_db: vec![0.0; m],
            geometry,
        }
    }

    pub fn n_users(&self) -> usize {
        self.channels.len()
    }

    pub fn n_tx(&self) -> usize {
        self.geometry.n_tx
    }

    /// Rebuilds user `m`'s channel from its stored paths.
    pub fn regenerate(&self, m: usize) -> Result<CVector> {
        assemble_channel(&self.geometry, &self.path_gains[m], &self.path_angles[m])
    }
}

fn assemble_channel(geometry: &ArrayGeometry, gains: &[C64], angles: &[f64]) -> Result<CVector> {
    let mut h = CVector::zeros(geometry.n_tx);
    for (alpha, &theta) in gains.iter().zip(angles) {
        let a = steering_vector(theta, geometry.n_tx, geometry.spacing, geometry.wavelength)?;
        // h^H gains alpha * a^H, so h gains conj(alpha) * a.
        h.axpy(alpha.conj(), &a, C64::new(1.0, 0.0));
    }
    Ok(h)
}

/// Draws from a Laplacian with the given mean and standard deviation, truncated to
/// `mean +- half_width`.
pub fn truncated_laplacian<R: Rng + ?Sized>(rng: &mut R, mean: f64, std: f64, half_width: f64) -> f64 {
    let scale = std / std::f64::consts::SQRT_2;
    loop {
        let u: f64 = rng.gen::<f64>() - 0.5;
        let x = -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln();
        if x.is_finite() && x.abs() <= half_width {
            return mean + x;
        }
    }
}

/// Random multipath channels per the scenario: per-user shadowing, complex Gaussian path gains
/// with variance `(N_t / N_p) 10^(-PL/10)`, departure angles from a truncated Laplacian of
/// standard deviation `pi / (2 N_t)` around the user's mean direction.
pub fn generate_channels<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<ChannelSet> {
    cfg.validate()?;
    let geometry = cfg.geometry();
    let n_paths = cfg.n_paths_per_user;
    let spread = PI / (2.0 * cfg.n_tx as f64);
    let beta2 = cfg.n_tx as f64 / n_paths as f64;
    let shadow = Normal::new(0.0, cfg.shadowing_std)
        .map_err(|e| Error::InvalidConfig(format!("shadowing distribution: {e}")))?;

    let mut gains = Vec::with_capacity(cfg.n_users);
    let mut angles = Vec::with_capacity(cfg.n_users);
    let mut pathloss = Vec::with_capacity(cfg.n_users);
    for m in 0..cfg.n_users {
        let pl = path_loss_db(
            cfg.user_distances[m],
            cfg.pathloss_intercept,
            cfg.pathloss_exponent,
            shadow.sample(rng),
        )?;
        let variance = beta2 * db_to_linear(-pl);
        let mean = if cfg.uniform_mean_angles {
            cfg.physical_angle(rng.gen_range(-PI / 2.0..PI / 2.0))
        } else {
            cfg.physical_angle(cfg.user_angles[m])
        };
        let sd = (variance / 2.0).sqrt();
        let mut g = Vec::with_capacity(n_paths);
        let mut th = Vec::with_capacity(n_paths);
        for _ in 0..n_paths {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            g.push(C64::new(sd * re, sd * im));
            th.push(truncated_laplacian(rng, mean, spread, PI / 2.0));
        }
        gains.push(g);
        angles.push(th);
        pathloss.push(pl);
    }
    ChannelSet::from_paths(geometry, gains, angles, pathloss)
}

/// Channels from a fresh generator seeded with `seed`.
pub fn generate_channels_seeded(cfg: &ScenarioConfig, seed: u64) -> Result<ChannelSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_channels(cfg, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn broadside_steering_is_flat() {
        let a = steering_vector(PI / 2.0, 4, 0.5, 1.0).unwrap();
        for z in a.iter() {
            assert_relative_eq!(z.re, 0.5, epsilon = 1e-15);
            assert!(z.im.abs() < 1e-15);
        }
    }

    #[test]
    fn endfire_two_elements_alternate() {
        let a = steering_vector(0.0, 2, 0.5, 1.0).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert_relative_eq!(a[0].re, s, epsilon = 1e-15);
        assert_relative_eq!(a[1].re, -s, epsilon = 1e-15);
        assert!(a[1].im.abs() < 1e-15);
    }

    #[test]
    fn sixty_degrees_quarter_turns() {
        let a = steering_vector(PI / 3.0, 8, 0.5, 1.0).unwrap();
        for n in 0..8 {
            let want = C64::from_polar(1.0 / 8f64.sqrt(), PI * n as f64 / 2.0);
            assert!((a[n] - want).norm() < 1e-14, "element {n}");
        }
    }

    #[test]
    fn steering_rejects_nan() {
        assert!(matches!(
            steering_vector(f64::NAN, 4, 0.5, 1.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn path_loss_values() {
        assert_relative_eq!(path_loss_db(1.0, 61.4, 2.0, 0.0).unwrap(), 61.4);
        assert_relative_eq!(path_loss_db(10.0, 61.4, 2.0, 0.0).unwrap(), 81.4, epsilon = 1e-12);
        let hand = 61.4 + 20.0 * 50f64.log10() + 1.2;
        assert_relative_eq!(path_loss_db(50.0, 61.4, 2.0, 1.2).unwrap(), hand, epsilon = 1e-12);
        assert_relative_eq!(hand, 96.5794, epsilon = 1e-4);
        assert!(path_loss_db(0.0, 61.4, 2.0, 0.0).is_err());
        assert!(path_loss_db(-3.0, 61.4, 2.0, 0.0).is_err());
    }

    #[test]
    fn single_unit_path_is_one_steering_row() {
        let geom = ArrayGeometry::half_wavelength(16);
        let theta = 1.1;
        let set = ChannelSet::from_paths(geom, vec![vec![C64::new(1.0, 0.0)]], vec![vec![theta]], vec![0.0])
            .unwrap();
        let a = geom.steering(theta);
        assert!((&set.channels[0] - &a).norm() < 1e-15);
    }

    #[test]
    fn baseline_is_valid() {
        let cfg = ScenarioConfig::baseline();
        cfg.validate().unwrap();
        assert_relative_eq!(cfg.rfc_static_power, 1.0, epsilon = 1e-12);
        assert_relative_eq!(cfg.max_tx_power, 100.0, epsilon = 1e-9);
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = ScenarioConfig::baseline();
        let a = generate_channels_seeded(&cfg, 42).unwrap();
        let b = generate_channels_seeded(&cfg, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_channels_seeded(&cfg, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut cfg = ScenarioConfig::baseline();
        cfg.n_rfc = 3;
        assert!(cfg.validate().is_err());
        let mut cfg = ScenarioConfig::baseline();
        cfg.user_angles[0] = 4.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ScenarioConfig::baseline();
        cfg.sinr_thresholds.pop();
        assert!(cfg.validate().is_err());
        let mut cfg = ScenarioConfig::baseline();
        cfg.noise_power = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_and_missing_fields_are_rejected() {
        let cfg = ScenarioConfig::baseline();
        let mut v = serde_json::to_value(&cfg).unwrap();
        v["bogus"] = serde_json::json!(1);
        let err = ScenarioConfig::from_json_str(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");

        let mut v = serde_json::to_value(&cfg).unwrap();
        v.as_object_mut().unwrap().remove("noise_power");
        let err = ScenarioConfig::from_json_str(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("noise_power"), "{err}");
    }

    #[test]
    fn wrap_angle_range() {
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
        assert_relative_eq!(wrap_angle(-PI), PI, epsilon = 1e-15);
        assert_relative_eq!(wrap_angle(0.3), 0.3);
    }
}
