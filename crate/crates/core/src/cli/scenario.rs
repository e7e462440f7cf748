//! Named experiments and their on-disk artifacts.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use super::config::{ScenarioConfig, ScenarioName};
use crate::mfc::{ControllerSpec, EstimatorConfig};
use crate::poly::{
    expand_pole, ip_charpoly, ipd_gains_from_target, max_real_part_of_roots, pid_gains_from_target, routh_hurwitz,
    IpLoopParams, PolyError, StabilityKind,
};
use crate::sim::{
    compute_metrics, run_closed_loop, LtiPlant, Metrics, NoiseModel, ReferenceTrajectory, SimConfig, SimError,
    SimulationTrace, TraceMeta,
};
use crate::stabmap::{
    cross_validate, export_grid, log_spaced, sweep, Aggregation, Axis, CellVerdict, GridSpec, StabilityGrid,
    StabmapError,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Stabmap(#[from] StabmapError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

/// What a scenario produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    /// Ordered `key = value` pairs, exactly as written to `metrics.txt`.
    pub metrics: Vec<(String, String)>,
}

impl ScenarioOutcome {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.metrics.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    Ipd,
    Pid,
}

impl ControllerKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Ipd => "ipd",
            Self::Pid => "pid",
        }
    }
}

/// iPD gains `(K_P, K_D)` placing the error dynamics at `(s + pole)²`.
pub fn ipd_gains(cfg: &ScenarioConfig) -> Result<(f64, f64), PolyError> {
    ipd_gains_from_target(&expand_pole(cfg.ipd_pole, 2))
}

/// PID gains `(k_P, k_I, k_D)` placing the nominal loop at `(s + pole)³`.
/// They are tuned at δ = 1 and reused for every δ.
pub fn pid_gains(cfg: &ScenarioConfig) -> Result<(f64, f64, f64), PolyError> {
    pid_gains_from_target(&LtiPlant::unstable_example(), &expand_pole(cfg.pid_pole, 3))
}

fn reference(cfg: &ScenarioConfig) -> ReferenceTrajectory {
    ReferenceTrajectory::SmoothStep { y_start: cfg.ref_start, y_end: cfg.ref_end, t_start: cfg.ref_t0, t_end: cfg.ref_t1 }
}

fn base_sim(
    cfg: &ScenarioConfig,
    controller: ControllerSpec,
    estimator: EstimatorConfig,
    delta: f64,
    seed: u64,
) -> Result<SimConfig, ScenarioError> {
    Ok(SimConfig {
        plant: LtiPlant::unstable_example().with_delta(delta)?,
        controller,
        estimator,
        reference: reference(cfg),
        noise: NoiseModel::new(cfg.sigma, seed),
        h: cfg.h,
        duration: cfg.duration,
        y0: cfg.y0,
        ydot0: 0.0,
        meta: TraceMeta { scenario: cfg.name.as_str().into(), seed, controller: controller.label().into() },
    })
}

/// Closed-loop configuration for `kind` at actuator effectiveness `delta`.
///
/// Both controllers carry the same ν = 2 delayed-input estimator; for the
/// PID it only observes.
pub fn controller_sim(cfg: &ScenarioConfig, kind: ControllerKind, delta: f64, seed: u64) -> Result<SimConfig, ScenarioError> {
    let estimator = EstimatorConfig::delayed_input(2, cfg.alpha, cfg.t_filter);
    let controller = match kind {
        ControllerKind::Ipd => {
            let (kp, kd) = ipd_gains(cfg)?;
            ControllerSpec::Ipd { alpha: cfg.alpha, kp, kd }
        }
        ControllerKind::Pid => {
            let (kp, ki, kd) = pid_gains(cfg)?;
            ControllerSpec::ClassicPid { kp, ki, kd }
        }
    };
    base_sim(cfg, controller, estimator, delta, seed)
}

/// iP loop with the analysis-form estimator; `kp` follows the quartic's convention.
pub fn ip_sim(cfg: &ScenarioConfig, alpha: f64, kp: f64, seed: u64) -> Result<SimConfig, ScenarioError> {
    let params = IpLoopParams::new(alpha, kp, cfg.t_filter)?;
    let controller = ControllerSpec::Ip { alpha, kp: params.law_gain() };
    let estimator = EstimatorConfig::analysis_form(1, alpha, cfg.t_filter);
    base_sim(cfg, controller, estimator, cfg.delta, seed)
}

/// Formats δ for file names: `1`, `0.8`, `0.5`.
pub fn delta_tag(delta: f64) -> String {
    format!("{delta}")
}

pub fn trace_file_name(controller: &str, delta: f64) -> String {
    format!("trace_{controller}_{}.csv", delta_tag(delta))
}

/// Per-controller, per-δ results of the `compare` scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    /// In run order: for each δ, iPD then PID.
    pub entries: Vec<CompareEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareEntry {
    pub controller: &'static str,
    pub delta: f64,
    pub metrics: Metrics,
}

impl CompareReport {
    pub fn deltas(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for e in &self.entries {
            if !out.contains(&e.delta) {
                out.push(e.delta);
            }
        }
        out
    }

    pub fn metrics(&self, controller: &str, delta: f64) -> Option<&Metrics> {
        self.entries.iter().find(|e| e.controller == controller && e.delta == delta).map(|e| &e.metrics)
    }

    /// Controller with the smaller tail error at `delta`; the iPD keeps ties.
    pub fn winner(&self, delta: f64) -> Option<&'static str> {
        let ipd = self.metrics("ipd", delta)?;
        let pid = self.metrics("pid", delta)?;
        Some(winner_of(ipd, pid))
    }

    /// `controller,delta,rmse,iae,tail_max_abs_error,diverged,winner`
    pub fn summary_csv(&self) -> String {
        let mut s = String::from("controller,delta,rmse,iae,tail_max_abs_error,diverged,winner\n");
        for e in &self.entries {
            let winner = self.winner(e.delta).unwrap_or("none");
            let m = &e.metrics;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                e.controller,
                delta_tag(e.delta),
                m.rmse,
                m.iae,
                m.tail_max_abs_error,
                m.diverged,
                winner
            );
        }
        s
    }
}

/// A diverged run always loses; otherwise the smaller tail error wins.
pub fn winner_of(ipd: &Metrics, pid: &Metrics) -> &'static str {
    match (ipd.diverged, pid.diverged) {
        (false, true) => "ipd",
        (true, false) => "pid",
        _ if ipd.tail_max_abs_error <= pid.tail_max_abs_error => "ipd",
        _ => "pid",
    }
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
    metrics: Vec<(String, String)>,
}

impl Writer {
    fn new(cfg: &ScenarioConfig) -> Result<Self, ScenarioError> {
        let dir = cfg.scenario_dir();
        fs::create_dir_all(&dir).map_err(|source| ScenarioError::Io { path: dir.clone(), source })?;
        let mut w = Self { dir, files: Vec::new(), metrics: Vec::new() };
        w.put("scenario", cfg.name.as_str());
        w.put("seed", cfg.seed);
        Ok(w)
    }

    fn put(&mut self, key: impl Into<String>, value: impl ToString) {
        self.metrics.push((key.into(), value.to_string()));
    }

    fn put_metrics(&mut self, prefix: &str, m: &Metrics) {
        self.put(format!("{prefix}.rmse"), m.rmse);
        self.put(format!("{prefix}.iae"), m.iae);
        self.put(format!("{prefix}.tail_max_abs_error"), m.tail_max_abs_error);
        self.put(format!("{prefix}.diverged"), m.diverged);
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, ScenarioError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| ScenarioError::Io { path: path.clone(), source })?;
        self.files.push(path.clone());
        Ok(path)
    }

    fn write_trace(&mut self, name: &str, trace: &SimulationTrace) -> Result<(), ScenarioError> {
        self.write(name, &trace.to_csv_string()).map(|_| ())
    }

    fn finish(mut self) -> Result<ScenarioOutcome, ScenarioError> {
        let mut text = String::new();
        for (k, v) in &self.metrics {
            let _ = writeln!(text, "{k} = {v}");
        }
        self.write("metrics.txt", &text)?;
        Ok(ScenarioOutcome { dir: self.dir, files: self.files, metrics: self.metrics })
    }
}

/// Runs the scenario and writes its artifacts under `<out>/<scenario>/`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome, ScenarioError> {
    match cfg.name {
        ScenarioName::IpdNominal | ScenarioName::IpdDelta => run_single(cfg, ControllerKind::Ipd),
        ScenarioName::PidNominal | ScenarioName::PidDelta => run_single(cfg, ControllerKind::Pid),
        ScenarioName::Compare => run_compare(cfg).map(|(outcome, _)| outcome),
        ScenarioName::IpAttempt => run_ip_attempt(cfg),
        ScenarioName::StabmapFixedT | ScenarioName::StabmapAllT => run_stabmap(cfg),
    }
}

fn put_gains(w: &mut Writer, cfg: &ScenarioConfig, kind: ControllerKind) -> Result<(), ScenarioError> {
    match kind {
        ControllerKind::Ipd => {
            let (kp, kd) = ipd_gains(cfg)?;
            w.put("ipd.alpha", cfg.alpha);
            w.put("ipd.kp", kp);
            w.put("ipd.kd", kd);
        }
        ControllerKind::Pid => {
            let (kp, ki, kd) = pid_gains(cfg)?;
            w.put("pid.kp", kp);
            w.put("pid.ki", ki);
            w.put("pid.kd", kd);
        }
    }
    Ok(())
}

fn simulate_matrix(
    cfg: &ScenarioConfig,
    runs: &[(ControllerKind, f64)],
) -> Result<Vec<(SimulationTrace, Metrics)>, ScenarioError> {
    runs.par_iter()
        .map(|&(kind, delta)| {
            let trace = run_closed_loop(&controller_sim(cfg, kind, delta, cfg.seed)?)?;
            let metrics = compute_metrics(&trace)?;
            Ok((trace, metrics))
        })
        .collect()
}

fn run_single(cfg: &ScenarioConfig, kind: ControllerKind) -> Result<ScenarioOutcome, ScenarioError> {
    let runs: Vec<_> = cfg.delta_set().into_iter().map(|d| (kind, d)).collect();
    let results = simulate_matrix(cfg, &runs)?;
    let mut w = Writer::new(cfg)?;
    put_gains(&mut w, cfg, kind)?;
    w.put("t_filter", cfg.t_filter);
    for ((_, delta), (trace, metrics)) in runs.iter().zip(&results) {
        w.write_trace(&trace_file_name(kind.label(), *delta), trace)?;
        w.put_metrics(&format!("{}.delta_{}", kind.label(), delta_tag(*delta)), metrics);
    }
    w.finish()
}

/// Runs iPD and PID for every δ of the scenario, with the same noise
/// realization for both controllers.
pub fn run_compare(cfg: &ScenarioConfig) -> Result<(ScenarioOutcome, CompareReport), ScenarioError> {
    let runs: Vec<_> = cfg
        .delta_set()
        .into_iter()
        .flat_map(|d| [(ControllerKind::Ipd, d), (ControllerKind::Pid, d)])
        .collect();
    let results = simulate_matrix(cfg, &runs)?;
    let report = CompareReport {
        entries: runs
            .iter()
            .zip(&results)
            .map(|(&(kind, delta), (_, metrics))| CompareEntry { controller: kind.label(), delta, metrics: *metrics })
            .collect(),
    };

    let mut w = Writer::new(cfg)?;
    put_gains(&mut w, cfg, ControllerKind::Ipd)?;
    put_gains(&mut w, cfg, ControllerKind::Pid)?;
    w.put("t_filter", cfg.t_filter);
    for ((kind, delta), (trace, metrics)) in runs.iter().zip(&results) {
        w.write_trace(&trace_file_name(kind.label(), *delta), trace)?;
        w.put_metrics(&format!("{}.delta_{}", kind.label(), delta_tag(*delta)), metrics);
    }
    for delta in report.deltas() {
        if let Some(winner) = report.winner(delta) {
            w.put(format!("winner.delta_{}", delta_tag(delta)), winner);
        }
    }
    w.write("summary.csv", &report.summary_csv())?;
    Ok((w.finish()?, report))
}

fn grid_spec(cfg: &ScenarioConfig, aggregation: Aggregation) -> GridSpec {
    let t_values = match aggregation {
        Aggregation::FixedT(_) => vec![cfg.t_filter],
        Aggregation::ForAllT => log_spaced(cfg.t_min, cfg.t_max, cfg.t_count),
    };
    GridSpec {
        kp_axis: Axis::new(cfg.kp_min, cfg.kp_max, cfg.kp_count),
        alpha_axis: Axis::new(cfg.alpha_min, cfg.alpha_max, cfg.alpha_count),
        t_values,
        aggregation,
    }
}

/// Stable cell of `grid` whose quartic has the most negative slowest root.
pub fn most_stable_cell(grid: &StabilityGrid, t_filter: f64) -> Result<Option<(f64, f64, f64)>, ScenarioError> {
    let mut best: Option<(f64, f64, f64)> = None;
    for (i, j) in grid.indices() {
        if grid.verdict(i, j) != CellVerdict::Stable {
            continue;
        }
        let (kp, alpha) = (grid.kp(i), grid.alpha(j));
        let max_re = max_real_part_of_roots(&ip_charpoly(&IpLoopParams::new(alpha, kp, t_filter)?)?)?;
        if best.is_none_or(|(_, _, m)| max_re < m) {
            best = Some((alpha, kp, max_re));
        }
    }
    Ok(best)
}

fn stability_token(kind: StabilityKind) -> &'static str {
    match kind {
        StabilityKind::Hurwitz => "stable",
        StabilityKind::Unstable => "unstable",
        StabilityKind::Marginal => "marginal",
    }
}

fn run_ip_attempt(cfg: &ScenarioConfig) -> Result<ScenarioOutcome, ScenarioError> {
    let grid = sweep(&grid_spec(cfg, Aggregation::FixedT(0)))?;
    let counterpart = most_stable_cell(&grid, cfg.t_filter)?;

    let mut cases = vec![("ip", cfg.ip_alpha, cfg.ip_kp)];
    if let Some((alpha, kp, _)) = counterpart {
        cases.push(("ip-stable", alpha, kp));
    }
    let results: Vec<(SimulationTrace, Metrics)> = cases
        .par_iter()
        .map(|&(_, alpha, kp)| {
            let trace = run_closed_loop(&ip_sim(cfg, alpha, kp, cfg.seed)?)?;
            let metrics = compute_metrics(&trace)?;
            Ok((trace, metrics))
        })
        .collect::<Result<_, ScenarioError>>()?;

    let mut w = Writer::new(cfg)?;
    w.put("t_filter", cfg.t_filter);
    w.put("delta", cfg.delta);
    for ((label, alpha, kp), (trace, metrics)) in cases.iter().zip(&results) {
        let quartic = ip_charpoly(&IpLoopParams::new(*alpha, *kp, cfg.t_filter)?)?;
        w.put(format!("{label}.alpha"), alpha);
        w.put(format!("{label}.kp"), kp);
        w.put(format!("{label}.routh"), stability_token(routh_hurwitz(&quartic)?.kind));
        w.put(format!("{label}.max_real_part"), max_real_part_of_roots(&quartic)?);
        w.put_metrics(label, metrics);
        w.write_trace(&trace_file_name(label, cfg.delta), trace)?;
    }
    if counterpart.is_none() {
        w.put("ip-stable", "none");
    }
    w.finish()
}

fn run_stabmap(cfg: &ScenarioConfig) -> Result<ScenarioOutcome, ScenarioError> {
    let aggregation = match cfg.name {
        ScenarioName::StabmapAllT => Aggregation::ForAllT,
        _ => Aggregation::FixedT(0),
    };
    let grid = sweep(&grid_spec(cfg, aggregation))?;
    let report = cross_validate(&grid, cfg.xval_samples, cfg.seed)?;

    let mut w = Writer::new(cfg)?;
    let grid_path = w.dir.join("grid.csv");
    export_grid(&grid, &grid_path)?;
    w.files.push(grid_path.clone());
    w.files.push(crate::stabmap::summary_path(&grid_path));

    match aggregation {
        Aggregation::FixedT(_) => w.put("t", cfg.t_filter),
        Aggregation::ForAllT => {
            w.put("t_min", cfg.t_min);
            w.put("t_max", cfg.t_max);
            w.put("t_count", cfg.t_count);
        }
    }
    w.put("cells", grid.cells.len());
    for v in [CellVerdict::Stable, CellVerdict::Unstable, CellVerdict::Marginal, CellVerdict::Excluded] {
        w.put(format!("cells.{}", v.token()), grid.count(v));
    }
    w.put("stable_fraction", grid.stable_fraction);
    w.put("xval.samples", report.checks.len());
    w.put("xval.agreed", report.agreed());
    w.put("xval.skipped_in_band", report.skipped_in_band);
    w.put("xval.agreement_rate", report.agreement_rate);
    w.finish()
}

/// Reads `metrics.txt` back into ordered pairs.
pub fn read_metrics(path: &Path) -> io::Result<Vec<(String, String)>> {
    Ok(fs::read_to_string(path)?
        .lines()
        .filter_map(|l| l.split_once(" = ").map(|(k, v)| (k.to_string(), v.to_string())))
        .collect())
}
