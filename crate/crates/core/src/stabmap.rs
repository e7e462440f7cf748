//! Stability maps of the filtered iP loop over `(K_P, α, T)` grids.
//!
//! Each cell is classified by the Routh-Hurwitz test on the closed-loop
//! quartic from [`ip_charpoly`]. A grid is evaluated either at one filter
//! constant or aggregated over a list of them, in which case a cell is
//! stable only when it is stable for every listed `T`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::mfc::{ControllerSpec, EstimatorConfig};
use crate::poly::{ip_charpoly, max_real_part_of_roots, routh_hurwitz, IpLoopParams, PolyError, StabilityKind};
use crate::sim::{run_closed_loop, LtiPlant, NoiseModel, ReferenceTrajectory, SimConfig, SimError, TraceMeta};

/// Cells with `|α|` below this are excluded: every law divides by `α`.
pub const ALPHA_EXCLUSION: f64 = 1e-9;

/// Cross-validation ignores cells whose slowest root lies within this band of the axis.
pub const BOUNDARY_BAND: f64 = 0.05;

#[derive(Debug, Error)]
pub enum StabmapError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

/// Evenly spaced axis `min, ..., max` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Self { min, max, count }
    }

    pub fn value(&self, i: usize) -> f64 {
        let n = (self.count - 1) as f64;
        (self.min * (n - i as f64) + self.max * i as f64) / n
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }

    fn validate(&self, name: &str) -> Result<(), StabmapError> {
        if self.count < 2 {
            return Err(StabmapError::InvalidGrid(format!("{name} axis needs at least 2 points")));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(StabmapError::InvalidGrid(format!(
                "{name} axis must be strictly increasing ({} .. {})",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    /// Classify at `t_values[index]` only.
    FixedT(usize),
    /// Stable only if stable at every `T` in `t_values`.
    ForAllT,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub kp_axis: Axis,
    pub alpha_axis: Axis,
    pub t_values: Vec<f64>,
    pub aggregation: Aggregation,
}

impl GridSpec {
    /// `K_P, α ∈ [-5, 5]` at 201 points each, evaluated at `T = t`.
    pub fn default_fixed(t: f64) -> Self {
        Self {
            kp_axis: Axis::new(-5.0, 5.0, 201),
            alpha_axis: Axis::new(-5.0, 5.0, 201),
            t_values: vec![t],
            aggregation: Aggregation::FixedT(0),
        }
    }

    /// Default axes, aggregated over 25 log-spaced `T` in `[1e-3, 1.9]`.
    pub fn default_for_all_t() -> Self {
        Self {
            kp_axis: Axis::new(-5.0, 5.0, 201),
            alpha_axis: Axis::new(-5.0, 5.0, 201),
            t_values: log_spaced(1e-3, 1.9, 25),
            aggregation: Aggregation::ForAllT,
        }
    }

    pub fn validate(&self) -> Result<(), StabmapError> {
        self.kp_axis.validate("kp")?;
        self.alpha_axis.validate("alpha")?;
        if self.t_values.is_empty() {
            return Err(StabmapError::InvalidGrid("t axis is empty".into()));
        }
        if self.t_values.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(StabmapError::InvalidGrid("all T values must be > 0".into()));
        }
        if self.t_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(StabmapError::InvalidGrid("T values must be strictly increasing".into()));
        }
        if let Aggregation::FixedT(i) = self.aggregation {
            if i >= self.t_values.len() {
                return Err(StabmapError::InvalidGrid(format!(
                    "fixed T index {i} out of range for {} values",
                    self.t_values.len()
                )));
            }
        }
        Ok(())
    }

    /// The `T` values a cell verdict depends on.
    fn active_t(&self) -> &[f64] {
        match self.aggregation {
            Aggregation::FixedT(i) => &self.t_values[i..=i],
            Aggregation::ForAllT => &self.t_values,
        }
    }
}

/// `count` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellVerdict {
    Stable,
    Unstable,
    Marginal,
    Excluded,
}

impl CellVerdict {
    pub fn token(&self) -> &'static str {
        match self {
            Self::Stable => "stable",
            Self::Unstable => "unstable",
            Self::Marginal => "marginal",
            Self::Excluded => "excluded",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityGrid {
    pub spec: GridSpec,
    /// Row-major: `cells[kp_index * alpha_count + alpha_index]`.
    pub cells: Vec<CellVerdict>,
    pub stable_fraction: f64,
}

impl StabilityGrid {
    pub fn verdict(&self, kp_index: usize, alpha_index: usize) -> CellVerdict {
        self.cells[kp_index * self.spec.alpha_axis.count + alpha_index]
    }

    pub fn kp(&self, kp_index: usize) -> f64 {
        self.spec.kp_axis.value(kp_index)
    }

    pub fn alpha(&self, alpha_index: usize) -> f64 {
        self.spec.alpha_axis.value(alpha_index)
    }

    pub fn count(&self, verdict: CellVerdict) -> usize {
        self.cells.iter().filter(|&&c| c == verdict).count()
    }

    /// `(kp_index, alpha_index)` of every cell.
    pub fn indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let na = self.spec.alpha_axis.count;
        (0..self.cells.len()).map(move |i| (i / na, i % na))
    }
}

/// Routh verdict for one `(α, K_P, T)`.
pub fn classify(alpha: f64, kp: f64, t: f64) -> Result<StabilityKind, StabmapError> {
    let quartic = ip_charpoly(&IpLoopParams::new(alpha, kp, t)?)?;
    Ok(routh_hurwitz(&quartic)?.kind)
}

fn classify_cell(spec: &GridSpec, alpha: f64, kp: f64) -> Result<CellVerdict, StabmapError> {
    if alpha.abs() < ALPHA_EXCLUSION {
        return Ok(CellVerdict::Excluded);
    }
    let mut marginal = false;
    for &t in spec.active_t() {
        match classify(alpha, kp, t)? {
            StabilityKind::Hurwitz => {}
            StabilityKind::Unstable => return Ok(CellVerdict::Unstable),
            StabilityKind::Marginal => marginal = true,
        }
    }
    Ok(if marginal { CellVerdict::Marginal } else { CellVerdict::Stable })
}

/// Classifies every cell. Rows are evaluated in parallel and merged by index,
/// so the result does not depend on scheduling.
pub fn sweep(spec: &GridSpec) -> Result<StabilityGrid, StabmapError> {
    spec.validate()?;
    let kps = spec.kp_axis.values();
    let alphas = spec.alpha_axis.values();
    let rows: Vec<Vec<CellVerdict>> = kps
        .par_iter()
        .map(|&kp| alphas.iter().map(|&alpha| classify_cell(spec, alpha, kp)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;
    let cells: Vec<CellVerdict> = rows.into_iter().flatten().collect();
    let included = cells.iter().filter(|&&c| c != CellVerdict::Excluded).count();
    let stable = cells.iter().filter(|&&c| c == CellVerdict::Stable).count();
    let stable_fraction = if included == 0 { 0.0 } else { stable as f64 / included as f64 };
    Ok(StabilityGrid { spec: spec.clone(), cells, stable_fraction })
}

/// Writes the grid as CSV and a one-line summary next to it
/// (`<path>.summary.txt`, containing `stable_fraction = <value>`).
///
/// `ForAllT` grids use the header `kp,alpha,verdict`; `FixedT` grids add the
/// filter constant: `kp,alpha,t,verdict`.
pub fn export_grid(grid: &StabilityGrid, path: &Path) -> Result<(), StabmapError> {
    let io_err = |source| StabmapError::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(io_err)?;
    write_grid_csv(grid, BufWriter::new(file)).map_err(io_err)?;
    let summary = summary_path(path);
    std::fs::write(&summary, format!("stable_fraction = {}\n", grid.stable_fraction))
        .map_err(|source| StabmapError::Io { path: summary, source })
}

pub fn summary_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".summary.txt");
    PathBuf::from(s)
}

pub fn write_grid_csv<W: Write>(grid: &StabilityGrid, mut w: W) -> io::Result<()> {
    let fixed_t = match grid.spec.aggregation {
        Aggregation::FixedT(i) => Some(grid.spec.t_values[i]),
        Aggregation::ForAllT => None,
    };
    match fixed_t {
        Some(_) => writeln!(w, "kp,alpha,t,verdict")?,
        None => writeln!(w, "kp,alpha,verdict")?,
    }
    for (i, j) in grid.indices() {
        let verdict = grid.verdict(i, j).token();
        match fixed_t {
            Some(t) => writeln!(w, "{},{},{},{}", grid.kp(i), grid.alpha(j), t, verdict)?,
            None => writeln!(w, "{},{},{}", grid.kp(i), grid.alpha(j), verdict)?,
        }
    }
    w.flush()
}

/// One simulated cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCheck {
    pub kp: f64,
    pub alpha: f64,
    pub t_filter: f64,
    pub verdict: CellVerdict,
    pub max_real_part: f64,
    pub diverged: bool,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    pub checks: Vec<CrossCheck>,
    /// Cells drawn but skipped because their slowest root lies in the boundary band.
    pub skipped_in_band: usize,
    pub agreement_rate: f64,
}

impl AgreementReport {
    pub fn agreed(&self) -> usize {
        self.checks.iter().filter(|c| c.agrees).count()
    }
}

/// Simulation settings used to confirm a Routh verdict.
pub fn cross_validation_config(alpha: f64, kp: f64, t_filter: f64) -> Result<SimConfig, StabmapError> {
    let params = IpLoopParams::new(alpha, kp, t_filter)?;
    Ok(SimConfig {
        plant: LtiPlant::unstable_example(),
        controller: ControllerSpec::Ip { alpha, kp: params.law_gain() },
        estimator: EstimatorConfig::analysis_form(1, alpha, t_filter),
        reference: ReferenceTrajectory::Constant(0.0),
        noise: NoiseModel::silent(),
        h: crate::sim::DEFAULT_STEP,
        duration: crate::sim::DEFAULT_DURATION,
        y0: -0.05,
        ydot0: 0.0,
        meta: TraceMeta { scenario: "cross-validate".into(), seed: 0, controller: "ip".into() },
    })
}

/// Simulates up to `samples` cells drawn round-robin from the stable and
/// unstable verdict classes (seeded shuffle within each class) and checks
/// that stable cells stay bounded and unstable cells blow up within the
/// horizon. Cells whose quartic has its slowest root within
/// [`BOUNDARY_BAND`] of the imaginary axis are skipped and not counted.
///
/// For `ForAllT` grids a stable cell is simulated at a seeded random `T`
/// from the axis, an unstable one at the first `T` where it is unstable.
pub fn cross_validate(grid: &StabilityGrid, samples: usize, seed: u64) -> Result<AgreementReport, StabmapError> {
    if samples == 0 {
        return Err(StabmapError::InvalidGrid("cross-validation needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classes: Vec<Vec<(usize, usize)>> = [CellVerdict::Stable, CellVerdict::Unstable]
        .iter()
        .map(|&v| grid.indices().filter(|&(i, j)| grid.verdict(i, j) == v).collect())
        .collect();
    for class in &mut classes {
        class.shuffle(&mut rng);
    }

    let mut chosen: Vec<(f64, f64, f64, CellVerdict, f64)> = Vec::with_capacity(samples);
    let mut skipped_in_band = 0;
    let mut cursors = vec![0usize; classes.len()];
    'draw: while chosen.len() < samples {
        let mut progressed = false;
        for (c, class) in classes.iter().enumerate() {
            if chosen.len() == samples {
                break 'draw;
            }
            let Some(&(i, j)) = class.get(cursors[c]) else { continue };
            cursors[c] += 1;
            progressed = true;
            let (kp, alpha, verdict) = (grid.kp(i), grid.alpha(j), grid.verdict(i, j));
            let t = match (grid.spec.aggregation, verdict) {
                (Aggregation::FixedT(k), _) => grid.spec.t_values[k],
                (Aggregation::ForAllT, CellVerdict::Stable) => *grid.spec.t_values.choose(&mut rng).unwrap(),
                (Aggregation::ForAllT, _) => {
                    let mut first = grid.spec.t_values[0];
                    for &t in &grid.spec.t_values {
                        if classify(alpha, kp, t)? == StabilityKind::Unstable {
                            first = t;
                            break;
                        }
                    }
                    first
                }
            };
            let quartic = ip_charpoly(&IpLoopParams::new(alpha, kp, t)?)?;
            let max_re = max_real_part_of_roots(&quartic)?;
            if max_re.abs() <= BOUNDARY_BAND {
                skipped_in_band += 1;
                continue;
            }
            chosen.push((kp, alpha, t, verdict, max_re));
        }
        if !progressed {
            break;
        }
    }

    let checks: Vec<CrossCheck> = chosen
        .par_iter()
        .map(|&(kp, alpha, t, verdict, max_real_part)| {
            let trace = run_closed_loop(&cross_validation_config(alpha, kp, t)?)?;
            let expect_diverge = verdict != CellVerdict::Stable;
            Ok(CrossCheck {
                kp,
                alpha,
                t_filter: t,
                verdict,
                max_real_part,
                diverged: trace.diverged,
                agrees: trace.diverged == expect_diverge,
            })
        })
        .collect::<Result<_, StabmapError>>()?;
    let agreement_rate =
        if checks.is_empty() { 0.0 } else { checks.iter().filter(|c| c.agrees).count() as f64 / checks.len() as f64 };
    Ok(AgreementReport { checks, skipped_in_band, agreement_rate })
}
