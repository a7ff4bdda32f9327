//! Seeded Monte-Carlo sweeps over `beamkit` designs and their CSV/JSON emission.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use beamkit::linalg::{db_to_linear, linear_to_db};
use beamkit::metrics::gain_along;
use beamkit::model::generate_channels_seeded;
use beamkit::pipeline::{failed_report, run_methods, Method, MethodOutcome};
use beamkit::{DesignReport, ScenarioConfig};
use rayon::prelude::*;
use serde::Serialize;

/// Header of the per-trial CSV.
pub const CSV_HEADER: [&str; 11] = [
    "sweep_value",
    "method",
    "trial",
    "ee_bits_per_hz_joule",
    "sum_rate",
    "min_user_sinr_db",
    "min_target_gain_db",
    "tx_power_w",
    "feasible",
    "outer_iters",
    "wall_ms",
];

/// Columns that the aggregate file summarizes with `_mean` and `_stderr`.
pub const AGG_COLUMNS: [&str; 7] = [
    "ee_bits_per_hz_joule",
    "sum_rate",
    "min_user_sinr_db",
    "min_target_gain_db",
    "tx_power_w",
    "outer_iters",
    "wall_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Snr,
    Gamma,
    Rfc,
    Convergence,
    Beampattern,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Snr => "snr",
            SweepKind::Gamma => "gamma",
            SweepKind::Rfc => "rfc",
            SweepKind::Convergence => "convergence",
            SweepKind::Beampattern => "beampattern",
        }
    }

    /// SNR and Γ in dB, RF-chain counts, SINR thresholds in dB for the beampattern sweep.
    pub fn default_grid(self) -> Vec<f64> {
        match self {
            SweepKind::Snr => (-10..=30).step_by(5).map(f64::from).collect(),
            SweepKind::Gamma => (1..=13).step_by(2).map(f64::from).collect(),
            SweepKind::Rfc => (4..=12).map(f64::from).collect(),
            SweepKind::Convergence => vec![4.0, 6.0],
            SweepKind::Beampattern => vec![10.0, 15.0],
        }
    }

    pub fn default_methods(self) -> Vec<Method> {
        match self {
            SweepKind::Snr => vec![Method::Proposed, Method::Omp, Method::Fdb],
            SweepKind::Gamma => vec![Method::Proposed, Method::CommOnly],
            SweepKind::Rfc => vec![Method::Proposed, Method::Omp],
            SweepKind::Convergence | SweepKind::Beampattern => vec![Method::Proposed],
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [
            SweepKind::Snr,
            SweepKind::Gamma,
            SweepKind::Rfc,
            SweepKind::Convergence,
            SweepKind::Beampattern,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| format!("unknown sweep kind `{s}`"))
    }
}

/// One sweep: a grid of values applied to `base`, `trials` channel draws per value.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub grid: Vec<f64>,
    pub trials: usize,
    pub base: ScenarioConfig,
    pub methods: Vec<Method>,
    /// Seed of trial 0; trial `t` uses `seed + t` at every grid point.
    pub seed: u64,
    /// Transmit power in watts at 0 dB of the SNR sweep.
    pub snr_reference: f64,
    /// Record wall-clock times; otherwise `wall_ms` is written as 0 to keep output reproducible.
    pub timing: bool,
}

impl SweepSpec {
    pub fn new(kind: SweepKind, base: ScenarioConfig) -> Self {
        SweepSpec {
            kind,
            grid: kind.default_grid(),
            trials: 50,
            seed: base.rng_seed,
            base,
            methods: kind.default_methods(),
            snr_reference: 1.0,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.grid.is_empty() {
            return Err("sweep grid is empty".into());
        }
        if self.trials == 0 {
            return Err("at least one trial is required".into());
        }
        if self.methods.is_empty() {
            return Err("no methods selected".into());
        }
        if !(self.snr_reference > 0.0) {
            return Err("snr reference power must be positive".into());
        }
        for &v in &self.grid {
            self.config_at(v)?.validate().map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    /// The scenario at one grid value.
    pub fn config_at(&self, value: f64) -> Result<ScenarioConfig, String> {
        let mut cfg = self.base.clone();
        match self.kind {
            SweepKind::Snr => cfg.max_tx_power = self.snr_reference * db_to_linear(value),
            SweepKind::Gamma => cfg.beampattern_thresholds = vec![db_to_linear(value); cfg.n_targets],
            SweepKind::Beampattern => cfg.sinr_thresholds = vec![db_to_linear(value); cfg.n_users],
            SweepKind::Rfc | SweepKind::Convergence => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(format!("RF-chain count {value} is not a positive integer"));
                }
                cfg.n_rfc = value as usize;
            }
        }
        Ok(cfg)
    }
}

/// One per-trial CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub method: Method,
    pub trial: usize,
    pub ee_bits_per_hz_joule: f64,
    pub sum_rate: f64,
    pub min_user_sinr_db: f64,
    pub min_target_gain_db: f64,
    pub tx_power_w: f64,
    pub feasible: bool,
    pub outer_iters: usize,
    pub wall_ms: f64,
}

impl SweepRow {
    pub fn column(&self, name: &str) -> f64 {
        match name {
            "ee_bits_per_hz_joule" => self.ee_bits_per_hz_joule,
            "sum_rate" => self.sum_rate,
            "min_user_sinr_db" => self.min_user_sinr_db,
            "min_target_gain_db" => self.min_target_gain_db,
            "tx_power_w" => self.tx_power_w,
            "outer_iters" => self.outer_iters as f64,
            "wall_ms" => self.wall_ms,
            other => panic!("no numeric column `{other}`"),
        }
    }
}

/// Mean and standard error of every aggregate column over the feasible trials of one
/// grid value and method.
#[derive(Debug, Clone, PartialEq)]
pub struct AggRow {
    pub sweep_value: f64,
    pub method: Method,
    pub n_trials: usize,
    pub n_feasible: usize,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl AggRow {
    pub fn mean_of(&self, column: &str) -> f64 {
        self.mean[column_index(column)]
    }

    pub fn stderr_of(&self, column: &str) -> f64 {
        self.stderr[column_index(column)]
    }
}

fn column_index(column: &str) -> usize {
    AGG_COLUMNS
        .iter()
        .position(|c| *c == column)
        .unwrap_or_else(|| panic!("no aggregate column `{column}`"))
}

/// Per-iteration price trace of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub sweep_value: f64,
    pub method: Method,
    pub trial: usize,
    pub iteration: usize,
    pub ee: f64,
}

/// Beampattern gain of one trial at one angle (configured convention, degrees).
#[derive(Debug, Clone, PartialEq)]
pub struct GainRow {
    pub sweep_value: f64,
    pub method: Method,
    pub trial: usize,
    pub angle_deg: f64,
    pub gain_db: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub agg: Vec<AggRow>,
    pub traces: Vec<TraceRow>,
    pub gains: Vec<GainRow>,
}

impl SweepResult {
    pub fn agg_for(&self, method: Method) -> Vec<&AggRow> {
        self.agg.iter().filter(|a| a.method == method).collect()
    }
}

/// Angles of the beampattern table, degrees.
pub fn beampattern_angles() -> Vec<f64> {
    (-180..=180).map(|i| f64::from(i) * 0.5).collect()
}

fn min_db(v: impl Iterator<Item = f64>) -> f64 {
    v.map(linear_to_db).fold(f64::NAN, f64::min)
}

struct TrialOutput {
    rows: Vec<SweepRow>,
    traces: Vec<TraceRow>,
    gains: Vec<GainRow>,
}

fn run_trial(spec: &SweepSpec, value: f64, cfg: &ScenarioConfig, trial: usize) -> TrialOutput {
    let seed = spec.seed.wrapping_add(trial as u64);
    let outcomes: Vec<(Method, Result<MethodOutcome, beamkit::Error>)> =
        match generate_channels_seeded(cfg, seed) {
            Ok(ch) => run_methods(&ch, cfg, &spec.methods),
            Err(e) => spec
                .methods
                .iter()
                .map(|&m| (m, Err(beamkit::Error::Numerical(e.to_string()))))
                .collect(),
        };
    let targets = cfg.target_steering();
    let geom = cfg.geometry();
    let mut out = TrialOutput {
        rows: Vec::new(),
        traces: Vec::new(),
        gains: Vec::new(),
    };
    for (method, res) in outcomes {
        let (report, effective): (DesignReport, _) = match res {
            Ok(o) => (o.report, Some(o.effective)),
            Err(e) => (failed_report(method, &e), None),
        };
        let min_target_gain_db = match &effective {
            Some(f) => min_db(targets.iter().map(|a| gain_along(a, f))),
            None => f64::NAN,
        };
        out.rows.push(SweepRow {
            sweep_value: value,
            method,
            trial,
            ee_bits_per_hz_joule: report.energy_efficiency,
            sum_rate: report.sum_rate,
            min_user_sinr_db: min_db(report.per_user_sinr.iter().copied()),
            min_target_gain_db,
            tx_power_w: report.tx_power,
            feasible: report.feasible,
            outer_iters: report.iterations.outer,
            wall_ms: if spec.timing { report.wall_time * 1e3 } else { 0.0 },
        });
        if spec.kind == SweepKind::Convergence {
            out.traces
                .extend(report.ee_trace.iter().enumerate().map(|(i, &ee)| TraceRow {
                    sweep_value: value,
                    method,
                    trial,
                    iteration: i + 1,
                    ee,
                }));
        }
        if spec.kind == SweepKind::Beampattern {
            if let Some(f) = &effective {
                out.gains
                    .extend(beampattern_angles().into_iter().map(|deg| GainRow {
                        sweep_value: value,
                        method,
                        trial,
                        angle_deg: deg,
                        gain_db: linear_to_db(gain_along(
                            &geom.steering(cfg.physical_angle(deg.to_radians())),
                            f,
                        )),
                    }));
            }
        }
    }
    out
}

fn mean_stderr(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Aggregates per-trial rows per grid value and method, keeping the order of first appearance.
pub fn aggregate(rows: &[SweepRow]) -> Vec<AggRow> {
    let mut keys: Vec<(f64, Method)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|k| k.0 == r.sweep_value && k.1 == r.method) {
            keys.push((r.sweep_value, r.method));
        }
    }
    keys.into_iter()
        .map(|(v, m)| {
            let group: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.sweep_value == v && r.method == m)
                .collect();
            let feasible: Vec<&SweepRow> = group.iter().copied().filter(|r| r.feasible).collect();
            let (mean, stderr) = AGG_COLUMNS
                .iter()
                .map(|c| mean_stderr(&feasible.iter().map(|r| r.column(c)).collect::<Vec<_>>()))
                .unzip();
            AggRow {
                sweep_value: v,
                method: m,
                n_trials: group.len(),
                n_feasible: feasible.len(),
                mean,
                stderr,
            }
        })
        .collect()
}

/// Worker count: `BEAMKIT_THREADS` if set, else available parallelism.
pub fn worker_count() -> usize {
    std::env::var("BEAMKIT_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs every grid value and trial on a pool of `threads` workers. Output order is grid value,
/// then trial, then method, independent of scheduling.
pub fn run_sweep(spec: &SweepSpec, threads: usize) -> Result<SweepResult, String> {
    spec.validate()?;
    let configs: Vec<ScenarioConfig> = spec
        .grid
        .iter()
        .map(|&v| spec.config_at(v))
        .collect::<Result<_, _>>()?;
    let items: Vec<(usize, usize)> = (0..spec.grid.len())
        .flat_map(|g| (0..spec.trials).map(move |t| (g, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| e.to_string())?;
    let outputs: Vec<TrialOutput> = pool.install(|| {
        items
            .par_iter()
            .map(|&(g, t)| run_trial(spec, spec.grid[g], &configs[g], t))
            .collect()
    });
    let mut result = SweepResult::default();
    for o in outputs {
        result.rows.extend(o.rows);
        result.traces.extend(o.traces);
        result.gains.extend(o.gains);
    }
    result.agg = aggregate(&result.rows);
    Ok(result)
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn io_err(path: &Path, e: impl fmt::Display) -> String {
    format!("{}: {e}", path.display())
}

fn write_csv(
    path: &Path,
    header: &[String],
    records: impl Iterator<Item = Vec<String>>,
) -> Result<(), String> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in records {
        w.write_record(&r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

#[derive(Serialize)]
struct Meta<'a> {
    toolkit: &'static str,
    version: &'static str,
    kind: SweepKind,
    grid: &'a [f64],
    trials: usize,
    seed: u64,
    methods: &'a [Method],
    snr_reference_w: f64,
    timing: bool,
    files: Vec<String>,
    config: &'a ScenarioConfig,
}

/// Writes `<kind>.csv`, `<kind>_agg.csv`, the trace or gain tables when present, and
/// `meta.json`. Returns the paths written.
pub fn write_outputs(spec: &SweepSpec, result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>, String> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let kind = spec.kind.name();
    let mut written = Vec::new();

    let path = dir.join(format!("{kind}.csv"));
    write_csv(
        &path,
        &CSV_HEADER.map(String::from),
        result.rows.iter().map(|r| {
            vec![
                num(r.sweep_value),
                r.method.to_string(),
                r.trial.to_string(),
                num(r.ee_bits_per_hz_joule),
                num(r.sum_rate),
                num(r.min_user_sinr_db),
                num(r.min_target_gain_db),
                num(r.tx_power_w),
                r.feasible.to_string(),
                r.outer_iters.to_string(),
                num(r.wall_ms),
            ]
        }),
    )?;
    written.push(path);

    let path = dir.join(format!("{kind}_agg.csv"));
    let mut header: Vec<String> = ["sweep_value", "method", "n_trials", "n_feasible"]
        .map(String::from)
        .to_vec();
    for c in AGG_COLUMNS {
        header.push(format!("{c}_mean"));
        header.push(format!("{c}_stderr"));
    }
    write_csv(
        &path,
        &header,
        result.agg.iter().map(|a| {
            let mut rec = vec![
                num(a.sweep_value),
                a.method.to_string(),
                a.n_trials.to_string(),
                a.n_feasible.to_string(),
            ];
            for (m, s) in a.mean.iter().zip(&a.stderr) {
                rec.push(num(*m));
                rec.push(num(*s));
            }
            rec
        }),
    )?;
    written.push(path);

    if spec.kind == SweepKind::Convergence {
        let path = dir.join("convergence_trace.csv");
        write_csv(
            &path,
            &[
                "sweep_value",
                "method",
                "trial",
                "iteration",
                "ee_bits_per_hz_joule",
            ]
            .map(String::from),
            result.traces.iter().map(|t| {
                vec![
                    num(t.sweep_value),
                    t.method.to_string(),
                    t.trial.to_string(),
                    t.iteration.to_string(),
                    num(t.ee),
                ]
            }),
        )?;
        written.push(path);
    }
    if spec.kind == SweepKind::Beampattern {
        let path = dir.join("beampattern_gain.csv");
        write_csv(
            &path,
            &["sweep_value", "method", "trial", "angle_deg", "gain_db"].map(String::from),
            result.gains.iter().map(|g| {
                vec![
                    num(g.sweep_value),
                    g.method.to_string(),
                    g.trial.to_string(),
                    num(g.angle_deg),
                    num(g.gain_db),
                ]
            }),
        )?;
        written.push(path);
    }

    let path = dir.join("meta.json");
    let meta = Meta {
        toolkit: "beamkit",
        version: env!("CARGO_PKG_VERSION"),
        kind: spec.kind,
        grid: &spec.grid,
        trials: spec.trials,
        seed: spec.seed,
        methods: &spec.methods,
        snr_reference_w: spec.snr_reference,
        timing: spec.timing,
        files: written
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
        config: &spec.base,
    };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| e.to_string())?;
    fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    written.push(path);
    Ok(written)
}

/// Exit status of the `design` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignStatus {
    Converged = 0,
    InvalidInput = 1,
    Infeasible = 2,
    NotConverged = 3,
}

/// Runs one method on the configured seed. Returns the report (if any), a message for stderr
/// and the exit status.
pub fn run_single(path: &Path, method: Method) -> (Option<DesignReport>, Option<String>, DesignStatus) {
    let cfg = match ScenarioConfig::from_json_file(path) {
        Ok(c) => c,
        Err(e) => {
            return (
                None,
                Some(format!("{}: {e}", path.display())),
                DesignStatus::InvalidInput,
            )
        }
    };
    let ch = match generate_channels_seeded(&cfg, cfg.rng_seed) {
        Ok(c) => c,
        Err(e) => return (None, Some(e.to_string()), DesignStatus::InvalidInput),
    };
    match beamkit::pipeline::run_method(&ch, &cfg, method) {
        Ok(o) => {
            let r = o.report;
            if !r.feasible {
                let msg = "final design violates a constraint".to_string();
                (Some(r), Some(msg), DesignStatus::Infeasible)
            } else if !r.converged {
                (
                    Some(r),
                    Some("iteration limit reached before convergence".into()),
                    DesignStatus::NotConverged,
                )
            } else {
                (Some(r), None, DesignStatus::Converged)
            }
        }
        Err(e @ beamkit::Error::Infeasible { .. }) => (None, Some(e.to_string()), DesignStatus::Infeasible),
        Err(e @ (beamkit::Error::InvalidConfig(_) | beamkit::Error::InvalidArgument(_))) => {
            (None, Some(e.to_string()), DesignStatus::InvalidInput)
        }
        Err(e) => (None, Some(e.to_string()), DesignStatus::NotConverged),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: f64, trial: usize, ee: f64, feasible: bool) -> SweepRow {
        SweepRow {
            sweep_value: v,
            method: Method::Proposed,
            trial,
            ee_bits_per_hz_joule: ee,
            sum_rate: 1.0,
            min_user_sinr_db: 10.0,
            min_target_gain_db: 5.0,
            tx_power_w: 2.0,
            feasible,
            outer_iters: 3,
            wall_ms: 0.0,
        }
    }

    #[test]
    fn aggregate_skips_infeasible_trials() {
        let rows = vec![
            row(0.0, 0, 1.0, true),
            row(0.0, 1, 3.0, true),
            row(0.0, 2, 100.0, false),
        ];
        let a = aggregate(&rows);
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].n_trials, 3);
        assert_eq!(a[0].n_feasible, 2);
        assert_eq!(a[0].mean_of("ee_bits_per_hz_joule"), 2.0);
        assert!((a[0].stderr_of("ee_bits_per_hz_joule") - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_values_map_onto_config() {
        let spec = SweepSpec::new(SweepKind::Snr, ScenarioConfig::baseline());
        assert_eq!(spec.config_at(10.0).unwrap().max_tx_power, 10.0);
        let spec = SweepSpec::new(SweepKind::Rfc, ScenarioConfig::baseline());
        assert_eq!(spec.config_at(6.0).unwrap().n_rfc, 6);
        assert!(spec.config_at(6.5).is_err());
    }

    #[test]
    fn kinds_round_trip() {
        for k in ["snr", "gamma", "rfc", "convergence", "beampattern"] {
            assert_eq!(k.parse::<SweepKind>().unwrap().name(), k);
        }
        assert!("fig9".parse::<SweepKind>().is_err());
    }
}
