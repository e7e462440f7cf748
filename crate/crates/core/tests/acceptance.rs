//! Acceptance run: one PASS/FAIL line per criterion and a summary line.
//!
//! The exit status is zero so the rest of the workspace suite still runs;
//! set `ACCEPTANCE_STRICT=1` to exit nonzero when any criterion failed.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mfc_core::cli::{controller_sim, parse_config, run_scenario, ControllerKind, FlagOverrides, ScenarioConfig, ScenarioName};
use mfc_core::mfc::{ControllerSpec, EstimatorConfig};
use mfc_core::poly::{
    expand_pole, ip_charpoly, ipd_gains_from_target, max_real_part_of_roots, pid_gains_from_target, routh_hurwitz,
    IpLoopParams, Polynomial, StabilityKind,
};
use mfc_core::sim::{compute_metrics, run_closed_loop, LtiPlant, NoiseModel, ReferenceTrajectory, SimConfig, TraceMeta};
use mfc_core::stabmap::{cross_validate, sweep, Aggregation, CellVerdict, GridSpec, StabilityGrid};

const ROUTH_SAMPLES: usize = 10_000;
const ROUTH_MARGIN: f64 = 1e-6;
const NARROW_UPPER: f64 = 0.25;
const AGREEMENT_MIN: f64 = 0.9;
const XVAL_SAMPLES: usize = 50;
const GAIN_RELATIVE: f64 = 1e-9;
const TAIL_SIGMAS: f64 = 5.0;
const ORACLE_TRACKING: f64 = 1e-4;
const ESTIMATOR_RELATIVE: f64 = 0.05;
const ESTIMATOR_FLOOR: f64 = 0.05;
const ROBUSTNESS_SEEDS: u64 = 10;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    check: fn() -> Outcome,
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fixed_grid(t: f64) -> GridSpec {
    GridSpec::default_fixed(t)
}

fn stable_cells(grid: &StabilityGrid) -> impl Iterator<Item = (usize, usize)> + '_ {
    grid.indices().filter(|&(i, j)| grid.verdict(i, j) == CellVerdict::Stable)
}

fn routh_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut checked, mut excluded, mut mismatches) = (0usize, 0usize, Vec::new());
    while checked < ROUTH_SAMPLES {
        let degree = rng.random_range(1..=6usize);
        let coeffs: Vec<f64> = (0..=degree).map(|_| rng.random_range(-10.0..=10.0)).collect();
        let p = Polynomial::new(coeffs.clone());
        if p.degree() == 0 {
            continue;
        }
        let max_re = max_real_part_of_roots(&p).map_err(|e| e.to_string())?;
        if max_re.abs() <= ROUTH_MARGIN {
            excluded += 1;
            continue;
        }
        checked += 1;
        let kind = routh_hurwitz(&p).map_err(|e| e.to_string())?.kind;
        let expected = if max_re < 0.0 { StabilityKind::Hurwitz } else { StabilityKind::Unstable };
        if kind != expected {
            mismatches.push((coeffs, kind, max_re));
        }
    }
    ensure(
        mismatches.is_empty(),
        format!(
            "{checked} polynomials, {excluded} in the margin band, {} mismatches{}",
            mismatches.len(),
            mismatches.first().map(|m| format!(", first {m:?}")).unwrap_or_default()
        ),
    )
}

fn necessary_conditions() -> Outcome {
    let grid = sweep(&fixed_grid(0.1)).map_err(|e| e.to_string())?;
    let same_sign = stable_cells(&grid).filter(|&(i, j)| grid.kp(i) * grid.alpha(j) >= 0.0).count();

    let long = [2.0, 3.0, 5.0];
    let mut long_stable = 0;
    for k in 0..long.len() {
        let spec = GridSpec { t_values: long.to_vec(), aggregation: Aggregation::FixedT(k), ..fixed_grid(0.1) };
        long_stable += grid_stable_count(&sweep(&spec).map_err(|e| e.to_string())?);
    }
    ensure(
        same_sign == 0 && long_stable == 0,
        format!("stable cells with K_P*alpha >= 0: {same_sign}; stable cells over T in {long:?}: {long_stable}"),
    )
}

fn grid_stable_count(grid: &StabilityGrid) -> usize {
    grid.count(CellVerdict::Stable)
}

fn alpha_minus_one() -> Outcome {
    let spec = fixed_grid(0.1);
    let j = (0..spec.alpha_axis.count)
        .find(|&j| spec.alpha_axis.value(j) == -1.0)
        .ok_or("alpha = -1 is not on the default axis")?;
    let fixed = sweep(&spec).map_err(|e| e.to_string())?;
    let all_t = sweep(&GridSpec::default_for_all_t()).map_err(|e| e.to_string())?;
    let row_stable = |g: &StabilityGrid| (0..g.spec.kp_axis.count).filter(|&i| g.verdict(i, j) == CellVerdict::Stable).count();
    let (fixed_count, all_count) = (row_stable(&fixed), row_stable(&all_t));

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let t_axis = &all_t.spec.t_values;
    let mut oracle_stable = 0;
    for _ in 0..20 {
        let kp = fixed.kp(rng.random_range(0..spec.kp_axis.count));
        let t = t_axis[rng.random_range(0..t_axis.len())];
        let q = ip_charpoly(&IpLoopParams::new(-1.0, kp, t).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        if max_real_part_of_roots(&q).map_err(|e| e.to_string())? < 0.0 {
            oracle_stable += 1;
        }
    }
    ensure(
        fixed_count == 0 && all_count == 0 && oracle_stable == 0,
        format!("stable cells on the row: T=0.1 {fixed_count}, all T {all_count}; oracle-stable samples {oracle_stable}/20"),
    )
}

fn narrowness() -> Outcome {
    let fixed = sweep(&fixed_grid(0.1)).map_err(|e| e.to_string())?;
    let all_t = sweep(&GridSpec::default_for_all_t()).map_err(|e| e.to_string())?;
    let (f, a) = (fixed.stable_fraction, all_t.stable_fraction);
    ensure(
        f > 0.0 && f < NARROW_UPPER && a <= f,
        format!("stable_fraction T=0.1 {f:.6} ({} cells), all T {a:.6}", fixed.count(CellVerdict::Stable)),
    )
}

fn cross_validation() -> Outcome {
    let grid = sweep(&fixed_grid(0.1)).map_err(|e| e.to_string())?;
    let report = cross_validate(&grid, XVAL_SAMPLES, 11).map_err(|e| e.to_string())?;
    let stable = report.checks.iter().filter(|c| c.verdict == CellVerdict::Stable).count();
    ensure(
        report.checks.len() == XVAL_SAMPLES && report.agreement_rate >= AGREEMENT_MIN,
        format!(
            "{}/{} agree ({:.2}), {stable} stable and {} unstable cells, {} skipped in band",
            report.agreed(),
            report.checks.len(),
            report.agreement_rate,
            report.checks.len() - stable,
            report.skipped_in_band
        ),
    )
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= GAIN_RELATIVE * b.abs()
}

fn pole_placement() -> Outcome {
    let (kp, kd) = ipd_gains_from_target(&expand_pole(0.5, 2)).map_err(|e| e.to_string())?;
    let (pkp, pki, pkd) =
        pid_gains_from_target(&LtiPlant::unstable_example(), &expand_pole(0.66, 3)).map_err(|e| e.to_string())?;
    ensure(
        kp == 0.25 && kd == 1.0 && rel_close(pkp, 1.3068) && rel_close(pki, 0.287496) && rel_close(pkd, 2.98),
        format!("iPD (K_P, K_D) = ({kp}, {kd}); PID (k_P, k_I, k_D) = ({pkp}, {pki}, {pkd})"),
    )
}

fn nominal_config() -> ScenarioConfig {
    ScenarioConfig::defaults(ScenarioName::IpdNominal)
}

/// Max distance of the oracle-estimator iPD error from the analytic solution
/// of ë + ė + e/4 = 0 with e(0) = -y0, ė(0) = 0 (double root at -1/2).
fn oracle_deviation(cfg: &ScenarioConfig, reference: ReferenceTrajectory) -> Result<f64, String> {
    let (kp, kd) = ipd_gains_from_target(&expand_pole(cfg.ipd_pole, 2)).map_err(|e| e.to_string())?;
    let oracle = SimConfig {
        plant: LtiPlant::unstable_example(),
        controller: ControllerSpec::Ipd { alpha: cfg.alpha, kp, kd },
        estimator: EstimatorConfig::oracle(2, cfg.alpha, cfg.t_filter),
        reference,
        noise: NoiseModel::silent(),
        h: cfg.h,
        duration: cfg.duration,
        y0: cfg.y0,
        ydot0: 0.0,
        meta: TraceMeta::default(),
    };
    let exact = run_closed_loop(&oracle).map_err(|e| e.to_string())?;
    let e0 = -cfg.y0;
    Ok(exact
        .t
        .iter()
        .zip(&exact.e)
        .map(|(&t, &e)| (e - e0 * (1.0 + 0.5 * t) * (-0.5 * t).exp()).abs())
        .fold(0.0, f64::max))
}

fn ipd_nominal() -> Outcome {
    let cfg = nominal_config();
    let trace = run_closed_loop(&controller_sim(&cfg, ControllerKind::Ipd, 1.0, cfg.seed).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let tail = compute_metrics(&trace).map_err(|e| e.to_string())?.tail_max_abs_error;
    let deviation = oracle_deviation(&cfg, ReferenceTrajectory::default())?;
    let regulation = oracle_deviation(&cfg, ReferenceTrajectory::Constant(0.0))?;
    ensure(
        !trace.diverged && tail <= TAIL_SIGMAS * cfg.sigma && deviation <= ORACLE_TRACKING,
        format!(
            "tail max |e| {tail:.5} (limit {:.3}); oracle run max deviation {deviation:.2e} (limit {ORACLE_TRACKING:.0e}); \
             info: constant-reference oracle run {regulation:.2e}",
            TAIL_SIGMAS * cfg.sigma
        ),
    )
}

fn robustness_ordering() -> Outcome {
    let cfg = ScenarioConfig::defaults(ScenarioName::Compare);
    let mean_tail = |kind, delta| -> Result<f64, String> {
        let mut total = 0.0;
        for seed in 1..=ROBUSTNESS_SEEDS {
            let trace = run_closed_loop(&controller_sim(&cfg, kind, delta, seed).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let m = compute_metrics(&trace).map_err(|e| e.to_string())?;
            if m.diverged {
                return Err(format!("{kind:?} diverged at delta {delta}, seed {seed}"));
            }
            total += m.tail_max_abs_error;
        }
        Ok(total / ROBUSTNESS_SEEDS as f64)
    };
    let (ipd8, pid8) = (mean_tail(ControllerKind::Ipd, 0.8)?, mean_tail(ControllerKind::Pid, 0.8)?);
    let (ipd5, pid5) = (mean_tail(ControllerKind::Ipd, 0.5)?, mean_tail(ControllerKind::Pid, 0.5)?);
    let (r8, r5) = (pid8 / ipd8, pid5 / ipd5);
    ensure(
        ipd8 <= pid8 && r5 > r8,
        format!("mean tail delta=0.8: iPD {ipd8:.4} PID {pid8:.4} (ratio {r8:.2}); delta=0.5: iPD {ipd5:.4} PID {pid5:.4} (ratio {r5:.2})"),
    )
}

/// Worst excess of |F̂ - f| over the bound after 10T, across the (ν, α) matrix,
/// with the estimator observing a PID loop that follows `reference`.
fn estimator_excess(cfg: &ScenarioConfig, reference: ReferenceTrajectory) -> Result<(f64, usize, f64), String> {
    let (kp, ki, kd) =
        pid_gains_from_target(&LtiPlant::unstable_example(), &expand_pole(cfg.pid_pole, 3)).map_err(|e| e.to_string())?;
    let mut worst = (f64::NEG_INFINITY, 0, 0.0);
    for nu in [1usize, 2] {
        for alpha in [0.5, 1.0, 2.0] {
            let sim = SimConfig {
                plant: LtiPlant::unstable_example(),
                controller: ControllerSpec::ClassicPid { kp, ki, kd },
                estimator: EstimatorConfig::delayed_input(nu, alpha, cfg.t_filter),
                reference,
                noise: NoiseModel::silent(),
                h: cfg.h,
                duration: cfg.duration,
                y0: cfg.y0,
                ydot0: 0.0,
                meta: TraceMeta::default(),
            };
            let trace = run_closed_loop(&sim).map_err(|e| e.to_string())?;
            for k in (0..trace.len()).filter(|&k| trace.t[k] >= 10.0 * cfg.t_filter) {
                let excess = (trace.f_hat[k] - trace.f_true[k]).abs()
                    - (ESTIMATOR_RELATIVE * trace.f_true[k].abs() + ESTIMATOR_FLOOR);
                if excess > worst.0 {
                    worst = (excess, nu, alpha);
                }
            }
        }
    }
    Ok(worst)
}

fn estimator_convergence() -> Outcome {
    let cfg = nominal_config();
    let worst = estimator_excess(&cfg, ReferenceTrajectory::default())?;
    let regulation = estimator_excess(&cfg, ReferenceTrajectory::Constant(0.0))?;
    ensure(
        worst.0 <= 0.0,
        format!(
            "worst excess over the bound {:.4} (nu = {}, alpha = {}), negative means inside; \
             info: constant-reference run worst excess {:.4} (nu = {}, alpha = {})",
            worst.0, worst.1, worst.2, regulation.0, regulation.1, regulation.2
        ),
    )
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    let mut compared = 0;
    for name in ScenarioName::ALL {
        for root in [a.path(), b.path()] {
            let flags = FlagOverrides {
                scenario: Some(name.as_str().into()),
                out: Some(root.to_path_buf()),
                seed: Some(3),
                sets: Vec::new(),
            };
            run_scenario(&parse_config(None, &flags).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        }
        let (sa, sb) = (snapshot(&a.path().join(name.as_str())), snapshot(&b.path().join(name.as_str())));
        if sa != sb {
            return Err(format!("{name}: artifacts differ between runs"));
        }
        compared += sa.len();
    }
    Ok(format!("{} scenarios, {compared} files byte-identical across two runs", ScenarioName::ALL.len()))
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "Routh oracle equivalence", budget: Some(Duration::from_secs(10)), check: routh_oracle },
        Criterion { id: 2, name: "quartic necessary conditions", budget: Some(Duration::from_secs(30)), check: necessary_conditions },
        Criterion { id: 3, name: "alpha = -1 never stabilizes", budget: Some(Duration::from_secs(5)), check: alpha_minus_one },
        Criterion { id: 4, name: "narrow stability region", budget: Some(Duration::from_secs(60)), check: narrowness },
        Criterion { id: 5, name: "cross-validation agreement", budget: Some(Duration::from_secs(120)), check: cross_validation },
        Criterion { id: 6, name: "pole placement exactness", budget: None, check: pole_placement },
        Criterion { id: 7, name: "iPD nominal tracking", budget: None, check: ipd_nominal },
        Criterion { id: 8, name: "robustness ordering", budget: None, check: robustness_ordering },
        Criterion { id: 9, name: "estimator convergence", budget: None, check: estimator_convergence },
        Criterion { id: 10, name: "determinism", budget: None, check: determinism },
    ];

    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.check)();
        let elapsed = start.elapsed();
        let over_budget = c.budget.is_some_and(|b| elapsed > b);
        let (verdict, mut detail) = match &outcome {
            Ok(d) if !over_budget => ("PASS", d.clone()),
            Ok(d) => ("FAIL", d.clone()),
            Err(d) => ("FAIL", d.clone()),
        };
        let timing = match c.budget {
            Some(b) => format!("{:.2}s, budget {}s", elapsed.as_secs_f64(), b.as_secs()),
            None => format!("{:.2}s", elapsed.as_secs_f64()),
        };
        if over_budget {
            detail.push_str("; over the runtime budget");
        }
        if verdict == "FAIL" {
            failed += 1;
        }
        println!("{verdict} [{:>2}] {}: {detail} ({timing})", c.id, c.name);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
