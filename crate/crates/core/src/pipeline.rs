//! End-to-end designs per method on one channel realization.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{omp_hybrid, SteeringDictionary};
use crate::dinkelbach::{design_digital, DinkelbachState};
use crate::error::{Error, Result};
use crate::hbf::{design_hybrid, HybridBeamformer, HybridTrace, PenaltyParams};
use crate::metrics::{DesignReport, DigitalBeamformer, IterationCounts};
use crate::model::{ChannelSet, ScenarioConfig};
use crate::sdpcore::{repair_feasibility, SdrProblem};

/// Design schemes compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Price loop plus manifold factorization.
    Proposed,
    /// Price loop plus greedy dictionary factorization.
    Omp,
    /// The fully-digital beamformer with one RF chain per antenna.
    Fdb,
    /// The proposed design with the sensing streams and floors removed.
    CommOnly,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Proposed, Method::Omp, Method::Fdb, Method::CommOnly];

    pub fn name(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Omp => "omp",
            Method::Fdb => "fdb",
            Method::CommOnly => "comm_only",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

/// A finished design of one method.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub method: Method,
    pub report: DesignReport,
    /// Effective beamformer actually transmitted.
    pub effective: DigitalBeamformer,
    pub hybrid: Option<HybridBeamformer>,
    pub hybrid_trace: Option<HybridTrace>,
    pub digital: Option<DinkelbachState>,
}

struct Digital {
    f: DigitalBeamformer,
    state: DinkelbachState,
    secs: f64,
}

fn digital(channels: &ChannelSet, cfg: &ScenarioConfig) -> Result<Digital> {
    let t0 = Instant::now();
    let (f, state) = design_digital(channels, cfg)?;
    Ok(Digital {
        f,
        state,
        secs: t0.elapsed().as_secs_f64(),
    })
}

fn digital_fields(report: &mut DesignReport, d: &Digital) {
    report.lambda_trace = d.state.lambda_trace.clone();
    report.ee_trace = d.state.ee_trace.clone();
    report.rank_one_defect = d.state.defects.clone();
    report.converged = d.state.converged;
    report.iterations.outer = d.state.iteration;
    report.iterations.inner_solves = d.state.inner_solves;
    if let Some((n, drop)) = d.state.monotone_violation {
        report.warnings.push(format!(
            "price decreased by {drop:.3e} (relative) at iteration {n}"
        ));
    }
    if !d.state.feasible {
        report
            .warnings
            .push("digital design violates a constraint after repair".into());
    }
}

/// Applies the column repair to a hybrid design through its baseband and measures it.
fn finish_hybrid(
    method: Method,
    channels: &ChannelSet,
    cfg: &ScenarioConfig,
    mut hybrid: HybridBeamformer,
) -> Result<(HybridBeamformer, DigitalBeamformer, DesignReport)> {
    let eff = hybrid.to_digital(cfg.n_users)?;
    let problem = SdrProblem::from_scenario(cfg, channels, &eff, 0.0);
    let rep = repair_feasibility(&eff, &problem);
    for (n, s) in rep.scales.iter().enumerate() {
        hybrid.scale_stream(n, *s);
    }
    let eff = hybrid.to_digital(cfg.n_users)?;
    let mut report = DesignReport::measure(method.name(), channels, &eff, cfg, cfg.n_rfc);
    report.feasible &= rep.feasible;
    Ok((hybrid, eff, report))
}

fn hybrid_method(
    method: Method,
    channels: &ChannelSet,
    cfg: &ScenarioConfig,
    d: &Digital,
) -> Result<MethodOutcome> {
    let t0 = Instant::now();
    let digital_ee = crate::metrics::energy_efficiency(channels, &d.f, cfg);
    let (hybrid, trace) = match method {
        Method::Omp => {
            let dict = SteeringDictionary::for_array(&cfg.geometry());
            let h = omp_hybrid(d.f.matrix(), &dict, cfg.n_rfc, cfg.max_tx_power)?;
            let err = (d.f.matrix() - h.effective()).norm() / d.f.matrix().norm().max(f64::MIN_POSITIVE);
            (
                h,
                HybridTrace {
                    factorization_error: err,
                    ..Default::default()
                },
            )
        }
        _ => design_hybrid(d.f.matrix(), cfg, &PenaltyParams::from_config(cfg))?,
    };
    let (hybrid, eff, mut report) = finish_hybrid(method, channels, cfg, hybrid)?;
    digital_fields(&mut report, d);
    report.converged &= !trace.continuation_failed;
    report.factorization_error = trace.factorization_error;
    report.digital_energy_efficiency = Some(digital_ee);
    report.iterations.continuation_rounds = trace.rounds.len();
    report.iterations.rcg = trace.rcg_iterations;
    if trace.continuation_failed {
        report
            .warnings
            .push("penalty continuation ended over the power budget".into());
    }
    report.wall_time = d.secs + t0.elapsed().as_secs_f64();
    Ok(MethodOutcome {
        method,
        report,
        effective: eff,
        hybrid: Some(hybrid),
        hybrid_trace: Some(trace),
        digital: Some(d.state.clone()),
    })
}

fn fdb(channels: &ChannelSet, cfg: &ScenarioConfig, d: &Digital) -> MethodOutcome {
    let mut report = DesignReport::measure(Method::Fdb.name(), channels, &d.f, cfg, cfg.n_tx);
    digital_fields(&mut report, d);
    report.wall_time = d.secs;
    MethodOutcome {
        method: Method::Fdb,
        report,
        effective: d.f.clone(),
        hybrid: None,
        hybrid_trace: None,
        digital: Some(d.state.clone()),
    }
}

/// Runs one method end to end.
pub fn run_method(channels: &ChannelSet, cfg: &ScenarioConfig, method: Method) -> Result<MethodOutcome> {
    run_methods(channels, cfg, &[method]).pop().expect("one method").1
}

/// Runs several methods on one channel realization, sharing the fully-digital design between
/// the proposed, OMP and fully-digital schemes.
pub fn run_methods(
    channels: &ChannelSet,
    cfg: &ScenarioConfig,
    methods: &[Method],
) -> Vec<(Method, Result<MethodOutcome>)> {
    let needs_digital = methods.iter().any(|m| *m != Method::CommOnly);
    let shared = if needs_digital {
        Some(digital(channels, cfg))
    } else {
        None
    };
    let mut comm: Option<Result<MethodOutcome>> = None;
    methods
        .iter()
        .map(|&m| {
            let out = match m {
                Method::CommOnly => comm
                    .get_or_insert_with(|| {
                        let c = cfg.without_targets();
                        let d = digital(channels, &c)?;
                        hybrid_method(Method::CommOnly, channels, &c, &d)
                    })
                    .as_ref()
                    .map(|o| o.clone())
                    .map_err(clone_error),
                _ => match shared.as_ref().expect("digital design requested") {
                    Ok(d) => match m {
                        Method::Fdb => Ok(fdb(channels, cfg, d)),
                        _ => hybrid_method(m, channels, cfg, d),
                    },
                    Err(e) => Err(clone_error(e)),
                },
            };
            (m, out)
        })
        .collect()
}

fn clone_error(e: &Error) -> Error {
    match e {
        Error::Infeasible { constraint, slack } => Error::Infeasible {
            constraint: *constraint,
            slack: *slack,
        },
        Error::RankDeficient { condition } => Error::RankDeficient {
            condition: *condition,
        },
        Error::InvalidArgument(s) => Error::InvalidArgument(s.clone()),
        Error::InvalidConfig(s) => Error::InvalidConfig(s.clone()),
        Error::NonFinite(s) => Error::NonFinite(s.clone()),
        other => Error::Numerical(other.to_string()),
    }
}

/// Report of a design that could not be produced (all performance fields NaN).
pub fn failed_report(method: Method, err: &Error) -> DesignReport {
    DesignReport {
        method: method.name().to_string(),
        feasible: false,
        converged: false,
        energy_efficiency: f64::NAN,
        sum_rate: f64::NAN,
        tx_power: f64::NAN,
        dissipated_power: f64::NAN,
        factorization_error: f64::NAN,
        iterations: IterationCounts::default(),
        warnings: vec![err.to_string()],
        ..Default::default()
    }
}
