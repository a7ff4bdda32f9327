mod common;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use beamkit::linalg::C64;
use beamkit::model::*;
use beamkit::Error;

#[test]
fn steering_at_sixty_degrees_quarter_turn_per_element() {
    let a = steering_vector(PI / 3.0, 8, 0.5, 1.0).unwrap();
    for n in 0..8 {
        let expect = C64::from_polar(1.0 / 8f64.sqrt(), PI * n as f64 / 2.0);
        assert!((a[n] - expect).norm() < 1e-12, "element {n}");
    }
}

#[test]
fn steering_endfire_alternates_sign() {
    let a = steering_vector(0.0, 2, 0.5, 1.0).unwrap();
    assert!((a[0] - C64::new(0.5f64.sqrt(), 0.0)).norm() < 1e-12);
    assert!((a[1] + C64::new(0.5f64.sqrt(), 0.0)).norm() < 1e-12);
}

#[test]
fn steering_rejects_bad_input() {
    assert!(matches!(
        steering_vector(f64::NAN, 4, 0.5, 1.0),
        Err(Error::InvalidArgument(_))
    ));
    assert!(steering_vector(0.3, 0, 0.5, 1.0).is_err());
    assert!(steering_vector(0.3, 4, 0.5, 0.0).is_err());
}

#[test]
fn path_loss_values() {
    assert_relative_eq!(path_loss_db(1.0, 61.4, 2.0, 0.0).unwrap(), 61.4, epsilon = 1e-12);
    assert_relative_eq!(path_loss_db(10.0, 61.4, 2.0, 0.0).unwrap(), 81.4, epsilon = 1e-12);
    assert_relative_eq!(
        path_loss_db(50.0, 61.4, 2.0, 1.2).unwrap(),
        62.6 + 20.0 * 50f64.log10(),
        epsilon = 1e-12
    );
    assert!((path_loss_db(50.0, 61.4, 2.0, 1.2).unwrap() - 96.5794).abs() < 1e-4);
    assert!(path_loss_db(0.0, 61.4, 2.0, 0.0).is_err());
    assert!(path_loss_db(-3.0, 61.4, 2.0, 0.0).is_err());
}

#[test]
fn single_forced_path_is_one_steering_row() {
    let geom = ArrayGeometry::half_wavelength(16);
    let theta = 1.1;
    let ch =
        ChannelSet::from_paths(geom, vec![vec![C64::new(1.0, 0.0)]], vec![vec![theta]], vec![0.0]).unwrap();
    assert!((&ch.channels[0] - geom.steering(theta)).norm() < 1e-14);
}

#[test]
fn channels_are_bit_identical_under_seed() {
    let cfg = ScenarioConfig::baseline();
    let a = generate_channels_seeded(&cfg, 42).unwrap();
    let b = generate_channels_seeded(&cfg, 42).unwrap();
    assert_eq!(a, b);
    let c = generate_channels_seeded(&cfg, 43).unwrap();
    assert_ne!(a.path_gains, c.path_gains);
}

#[test]
fn regeneration_matches_stored_rows() {
    let cfg = ScenarioConfig::baseline();
    for seed in 0..20 {
        let ch = generate_channels_seeded(&cfg, seed).unwrap();
        for m in 0..ch.n_users() {
            let h = ch.regenerate(m).unwrap();
            assert!((&h - &ch.channels[m]).norm() <= 1e-12 * ch.channels[m].norm());
        }
    }
}

#[test]
fn mean_channel_power_matches_gain_variance() {
    // E ||h||^2 = N_p beta^2 10^(-PL/10) = N_t 10^(-PL/10), conditional on the realized path loss.
    let cfg = ScenarioConfig::baseline();
    let mut rng = common::rng(5);
    let draws = 10_000;
    let mut acc = 0.0;
    for _ in 0..draws {
        let ch = generate_channels(&cfg, &mut rng).unwrap();
        acc += ch.channels[0].norm_squared() * 10f64.powf(ch.pathloss_db[0] / 10.0);
    }
    let mean = acc / draws as f64;
    assert!(
        (mean / cfg.n_tx as f64 - 1.0).abs() < 0.05,
        "normalized mean power {mean}"
    );
}

#[test]
fn path_gain_variance_chi_square() {
    // Normalized |alpha|^2 / (beta^2 10^(-PL/10)) is Exp(1); 2x that is chi-square with 2 dof.
    let cfg = ScenarioConfig::baseline();
    let mut rng = common::rng(9);
    let beta2 = cfg.n_tx as f64 / cfg.n_paths_per_user as f64;
    let mut samples = Vec::new();
    while samples.len() < 10_000 {
        let ch = generate_channels(&cfg, &mut rng).unwrap();
        for m in 0..ch.n_users() {
            let var = beta2 * 10f64.powf(-ch.pathloss_db[m] / 10.0);
            samples.extend(ch.path_gains[m].iter().map(|g| g.norm_sqr() / var));
        }
    }
    // Goodness of fit over 10 equiprobable bins of Exp(1).
    let bins = 10;
    let mut counts = vec![0usize; bins];
    for s in &samples {
        let cdf = 1.0 - (-s).exp();
        counts[((cdf * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let expect = samples.len() as f64 / bins as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
    // 99.9% quantile of chi-square with 9 degrees of freedom.
    assert!(chi2 < 27.88, "chi-square statistic {chi2}");
}

#[test]
fn departure_angles_stay_within_truncation() {
    let cfg = ScenarioConfig::baseline();
    for seed in 0..20 {
        let ch = generate_channels_seeded(&cfg, seed).unwrap();
        for (m, angles) in ch.path_angles.iter().enumerate() {
            let mean = cfg.physical_angle(cfg.user_angles[m]);
            assert!(angles.iter().all(|t| (t - mean).abs() <= PI / 2.0));
        }
    }
}

#[test]
fn laplacian_spread_matches_requested_deviation() {
    let mut rng = common::rng(11);
    let std = 0.05;
    let n = 50_000;
    let xs: Vec<f64> = (0..n)
        .map(|_| truncated_laplacian(&mut rng, 1.0, std, PI / 2.0))
        .collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    assert!((mean - 1.0).abs() < 3e-3);
    assert!((sd / std - 1.0).abs() < 0.03, "sample deviation {sd}");
}

#[test]
fn config_rejects_unknown_and_missing_fields() {
    let mut v = serde_json::to_value(ScenarioConfig::baseline()).unwrap();
    v["bogus"] = serde_json::json!(1);
    let err = ScenarioConfig::from_json_str(&v.to_string())
        .unwrap_err()
        .to_string();
    assert!(err.contains("bogus"), "{err}");

    let mut v = serde_json::to_value(ScenarioConfig::baseline()).unwrap();
    v.as_object_mut().unwrap().remove("noise_power");
    let err = ScenarioConfig::from_json_str(&v.to_string())
        .unwrap_err()
        .to_string();
    assert!(err.contains("noise_power"), "{err}");
}

#[test]
fn config_validation_catches_inconsistency() {
    let mut cfg = ScenarioConfig::baseline();
    cfg.sinr_thresholds.pop();
    assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    let mut cfg = ScenarioConfig::baseline();
    cfg.n_rfc = 3;
    assert!(cfg.validate().is_err());
    let mut cfg = ScenarioConfig::baseline();
    cfg.noise_power = 0.0;
    assert!(cfg.validate().is_err());
}

#[test]
fn config_json_round_trip() {
    let cfg = ScenarioConfig::baseline();
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(ScenarioConfig::from_json_str(&text).unwrap(), cfg);
}
