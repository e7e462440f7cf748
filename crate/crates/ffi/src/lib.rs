//! C ABI over `mfc_core`.
//!
//! Every function returns an [`MfcStatus`]; outputs go through pointer
//! arguments. On failure, [`mfc_last_error_message`] describes the most recent
//! error on the calling thread. Objects are opaque handles created by a
//! `*_new` function, `mfc_simulate` or `mfc_stabmap_sweep` and released with the matching
//! `*_free`; freeing a null handle is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mfc_core::mfc::{ControllerSpec, EstimatorConfig, FEstimator};
use mfc_core::poly::{self, IpLoopParams, Polynomial, StabilityKind};
use mfc_core::sim::{self, LtiPlant, NoiseModel, ReferenceTrajectory, SimConfig, SimulationTrace, TraceMeta};
use mfc_core::stabmap::{self, Aggregation, Axis, CellVerdict, GridSpec, StabilityGrid};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// A numerical routine failed (e.g. root finding did not converge).
    Numerical = 3,
    BufferTooSmall = 4,
    OutOfRange = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfcStability {
    Hurwitz = 0,
    Unstable = 1,
    Marginal = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfcVerdict {
    Stable = 0,
    Unstable = 1,
    Marginal = 2,
    Excluded = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfcController {
    Ip = 0,
    Ipi = 1,
    Ipd = 2,
    Ipid = 3,
    ClassicPid = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfcColumn {
    Time = 0,
    Control = 1,
    OutputTrue = 2,
    OutputMeasured = 3,
    Reference = 4,
    Error = 5,
    FHat = 6,
    FTrue = 7,
}

/// Closed-loop run on `ÿ + a1·ẏ + a0·y = b·delta·u` with a smooth 0 to 1
/// reference step over `[1, 6]` s. Intelligent controllers use the
/// delayed-input estimate of order 1 (iP, iPI) or 2 (iPD, iPID); the classic
/// PID runs an order-2 estimator as an observer.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfcSimParams {
    pub controller: MfcController,
    pub alpha: f64,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub t_filter: f64,
    pub a1: f64,
    pub a0: f64,
    pub b: f64,
    pub delta: f64,
    pub sigma: f64,
    pub seed: u64,
    pub h: f64,
    pub duration: f64,
    pub y0: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfcMetrics {
    pub rmse: f64,
    pub iae: f64,
    pub tail_max_abs_error: f64,
    pub diverged: bool,
}

/// Opaque `F` estimator.
pub struct MfcEstimator(FEstimator);

/// Opaque simulation trace.
pub struct MfcTrace(SimulationTrace);

/// Opaque stability grid.
pub struct MfcGrid(StabilityGrid);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(MfcStatus, String);

impl Failure {
    fn invalid(msg: impl ToString) -> Self {
        Self(MfcStatus::InvalidArgument, msg.to_string())
    }
}

impl From<poly::PolyError> for Failure {
    fn from(e: poly::PolyError) -> Self {
        let status = match e {
            poly::PolyError::ConvergenceFailure { .. } => MfcStatus::Numerical,
            _ => MfcStatus::InvalidArgument,
        };
        Self(status, e.to_string())
    }
}

impl From<sim::SimError> for Failure {
    fn from(e: sim::SimError) -> Self {
        Self::invalid(e)
    }
}

impl From<stabmap::StabmapError> for Failure {
    fn from(e: stabmap::StabmapError) -> Self {
        match e {
            stabmap::StabmapError::Poly(p) => p.into(),
            other => Self::invalid(other),
        }
    }
}

impl From<mfc_core::mfc::MfcError> for Failure {
    fn from(e: mfc_core::mfc::MfcError) -> Self {
        Self::invalid(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> MfcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MfcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MfcStatus::Internal
        }
    }
}

fn out_ref<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: the caller guarantees that a non-null pointer is valid and aligned.
    unsafe { p.as_mut() }.ok_or_else(|| Failure(MfcStatus::NullPointer, format!("`{name}` is null")))
}

fn in_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    // SAFETY: as above.
    unsafe { p.as_ref() }.ok_or_else(|| Failure(MfcStatus::NullPointer, format!("`{name}` is null")))
}

fn in_slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure(MfcStatus::NullPointer, format!("`{name}` is null")));
    }
    // SAFETY: the caller guarantees `len` readable elements at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn out_slice<'a>(p: *mut f64, len: usize, name: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(Failure(MfcStatus::NullPointer, format!("`{name}` is null")));
    }
    // SAFETY: the caller guarantees `len` writable elements at `p`.
    Ok(unsafe { std::slice::from_raw_parts_mut(p, len) })
}

fn copy_out(src: &[f64], dst: *mut f64, capacity: usize, name: &str) -> Result<(), Failure> {
    if capacity < src.len() {
        return Err(Failure(
            MfcStatus::BufferTooSmall,
            format!("`{name}` holds {capacity} values, {} needed", src.len()),
        ));
    }
    out_slice(dst, capacity, name)?[..src.len()].copy_from_slice(src);
    Ok(())
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn mfc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Routh-Hurwitz test on the polynomial with ascending coefficients `coeffs[0..len]`.
///
/// # Safety
/// `coeffs` must point to `len` readable doubles and `kind_out` must be
/// valid; `rhp_count_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn mfc_routh_hurwitz(
    coeffs: *const f64,
    len: usize,
    kind_out: *mut MfcStability,
    rhp_count_out: *mut usize,
) -> MfcStatus {
    guard(|| {
        let p = Polynomial::new(in_slice(coeffs, len, "coeffs")?.to_vec());
        let verdict = poly::routh_hurwitz(&p)?;
        *out_ref(kind_out, "kind_out")? = match verdict.kind {
            StabilityKind::Hurwitz => MfcStability::Hurwitz,
            StabilityKind::Unstable => MfcStability::Unstable,
            StabilityKind::Marginal => MfcStability::Marginal,
        };
        if !rhp_count_out.is_null() {
            *out_ref(rhp_count_out, "rhp_count_out")? = verdict.right_half_plane_count;
        }
        Ok(())
    })
}

/// Largest real part among the roots of `coeffs[0..len]` (ascending).
///
/// # Safety
/// `coeffs` must point to `len` readable doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mfc_max_real_part(coeffs: *const f64, len: usize, out: *mut f64) -> MfcStatus {
    guard(|| {
        let p = Polynomial::new(in_slice(coeffs, len, "coeffs")?.to_vec());
        *out_ref(out, "out")? = poly::max_real_part_of_roots(&p)?;
        Ok(())
    })
}

/// Ascending coefficients of the filtered iP closed-loop quartic, written to `out[0..5]`.
///
/// # Safety
/// `out` must point to 5 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mfc_ip_charpoly(alpha: f64, kp: f64, t_filter: f64, out: *mut f64) -> MfcStatus {
    guard(|| {
        let q = poly::ip_charpoly(&IpLoopParams::new(alpha, kp, t_filter)?)?;
        let dst = out_slice(out, 5, "out")?;
        for (k, slot) in dst.iter_mut().enumerate() {
            *slot = q.coeff(k);
        }
        Ok(())
    })
}

/// Coefficients of `(s + r)^multiplicity`, ascending, into `out[0..=multiplicity]`.
///
/// # Safety
/// `out` must point to `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mfc_expand_pole(r: f64, multiplicity: u32, out: *mut f64, capacity: usize) -> MfcStatus {
    guard(|| {
        if !r.is_finite() {
            return Err(Failure::invalid("r must be finite"));
        }
        copy_out(poly::expand_pole(r, multiplicity).coeffs(), out, capacity, "out")
    })
}

/// iPD gains placing the error dynamics at `(s + pole)²`.
///
/// # Safety
/// The output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mfc_ipd_gains(pole: f64, kp_out: *mut f64, kd_out: *mut f64) -> MfcStatus {
    guard(|| {
        let (kp, kd) = poly::ipd_gains_from_target(&poly::expand_pole(pole, 2))?;
        *out_ref(kp_out, "kp_out")? = kp;
        *out_ref(kd_out, "kd_out")? = kd;
        Ok(())
    })
}

/// PID gains placing the loop around `ÿ + a1·ẏ + a0·y = b·u` at `(s + pole)³`.
///
/// # Safety
/// The output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mfc_pid_gains(
    a1: f64,
    a0: f64,
    b: f64,
    pole: f64,
    kp_out: *mut f64,
    ki_out: *mut f64,
    kd_out: *mut f64,
) -> MfcStatus {
    guard(|| {
        let plant = LtiPlant::new(a1, a0, b, 1.0)?;
        let (kp, ki, kd) = poly::pid_gains_from_target(&plant, &poly::expand_pole(pole, 3))?;
        *out_ref(kp_out, "kp_out")? = kp;
        *out_ref(ki_out, "ki_out")? = ki;
        *out_ref(kd_out, "kd_out")? = kd;
        Ok(())
    })
}

/// Creates a delayed-input estimator of order `nu` (1 or 2).
///
/// # Safety
/// `out` must be valid; the returned handle must be released with [`mfc_estimator_free`].
#[no_mangle]
pub unsafe extern "C" fn mfc_estimator_new(
    nu: u32,
    alpha: f64,
    t_filter: f64,
    h: f64,
    out: *mut *mut MfcEstimator,
) -> MfcStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Failure::invalid(format!("h = {h} must be > 0")));
        }
        let est = FEstimator::new(EstimatorConfig::delayed_input(nu as usize, alpha, t_filter), h)?;
        *slot = Box::into_raw(Box::new(MfcEstimator(est)));
        Ok(())
    })
}

/// Feeds one measurement and the previous control; writes `F̂` to `f_hat_out`.
///
/// # Safety
/// `est` must be a live handle and `f_hat_out` valid.
#[no_mangle]
pub unsafe extern "C" fn mfc_estimator_step(
    est: *mut MfcEstimator,
    y_measured: f64,
    u_prev: f64,
    f_hat_out: *mut f64,
) -> MfcStatus {
    guard(|| {
        let est = out_ref(est, "est")?;
        *out_ref(f_hat_out, "f_hat_out")? = est.0.estimate(y_measured, u_prev);
        Ok(())
    })
}

/// # Safety
/// `est` must be null or a handle from [`mfc_estimator_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mfc_estimator_free(est: *mut MfcEstimator) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}

/// Nominal iPD setup: α = 0.5, gains from `(s + 0.5)²`, T = 0.1, plant
/// `ÿ - ẏ = u`, σ = 0.01, seed 1, h = 1 ms, 20 s, y(0) = -0.05.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mfc_sim_params_default(out: *mut MfcSimParams) -> MfcStatus {
    guard(|| {
        *out_ref(out, "out")? = MfcSimParams {
            controller: MfcController::Ipd,
            alpha: 0.5,
            kp: 0.25,
            ki: 0.0,
            kd: 1.0,
            t_filter: 0.1,
            a1: -1.0,
            a0: 0.0,
            b: 1.0,
            delta: 1.0,
            sigma: 0.01,
            seed: 1,
            h: sim::DEFAULT_STEP,
            duration: sim::DEFAULT_DURATION,
            y0: -0.05,
        };
        Ok(())
    })
}

fn sim_config(p: &MfcSimParams) -> SimConfig {
    let (alpha, kp, ki, kd) = (p.alpha, p.kp, p.ki, p.kd);
    let (controller, nu) = match p.controller {
        MfcController::Ip => (ControllerSpec::Ip { alpha, kp }, 1),
        MfcController::Ipi => (ControllerSpec::Ipi { alpha, kp, ki }, 1),
        MfcController::Ipd => (ControllerSpec::Ipd { alpha, kp, kd }, 2),
        MfcController::Ipid => (ControllerSpec::Ipid { alpha, kp, ki, kd }, 2),
        MfcController::ClassicPid => (ControllerSpec::ClassicPid { kp, ki, kd }, 2),
    };
    SimConfig {
        plant: LtiPlant { a1: p.a1, a0: p.a0, b: p.b, delta: p.delta },
        controller,
        estimator: EstimatorConfig::delayed_input(nu, alpha, p.t_filter),
        reference: ReferenceTrajectory::default(),
        noise: NoiseModel::new(p.sigma, p.seed),
        h: p.h,
        duration: p.duration,
        y0: p.y0,
        ydot0: 0.0,
        meta: TraceMeta { scenario: "ffi".into(), seed: p.seed, controller: controller.label().into() },
    }
}

/// Runs one closed loop. Divergence is reported through [`mfc_trace_metrics`], not as an error.
///
/// # Safety
/// `params` and `out` must be valid; release the trace with [`mfc_trace_free`].
#[no_mangle]
pub unsafe extern "C" fn mfc_simulate(params: *const MfcSimParams, out: *mut *mut MfcTrace) -> MfcStatus {
    guard(|| {
        let params = in_ref(params, "params")?;
        let slot = out_ref(out, "out")?;
        let trace = sim::run_closed_loop(&sim_config(params))?;
        *slot = Box::into_raw(Box::new(MfcTrace(trace)));
        Ok(())
    })
}

/// # Safety
/// `trace` must be a live handle and `len_out` valid.
#[no_mangle]
pub unsafe extern "C" fn mfc_trace_len(trace: *const MfcTrace, len_out: *mut usize) -> MfcStatus {
    guard(|| {
        *out_ref(len_out, "len_out")? = in_ref(trace, "trace")?.0.len();
        Ok(())
    })
}

/// Copies one column into `buf`, which must hold at least `mfc_trace_len` values.
///
/// # Safety
/// `trace` must be a live handle and `buf` must point to `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mfc_trace_column(
    trace: *const MfcTrace,
    column: MfcColumn,
    buf: *mut f64,
    capacity: usize,
) -> MfcStatus {
    guard(|| {
        let t = &in_ref(trace, "trace")?.0;
        let src = match column {
            MfcColumn::Time => &t.t,
            MfcColumn::Control => &t.u,
            MfcColumn::OutputTrue => &t.y_true,
            MfcColumn::OutputMeasured => &t.y_measured,
            MfcColumn::Reference => &t.y_ref,
            MfcColumn::Error => &t.e,
            MfcColumn::FHat => &t.f_hat,
            MfcColumn::FTrue => &t.f_true,
        };
        copy_out(src, buf, capacity, "buf")
    })
}

/// # Safety
/// `trace` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mfc_trace_metrics(trace: *const MfcTrace, out: *mut MfcMetrics) -> MfcStatus {
    guard(|| {
        let m = sim::compute_metrics(&in_ref(trace, "trace")?.0)?;
        *out_ref(out, "out")? =
            MfcMetrics { rmse: m.rmse, iae: m.iae, tail_max_abs_error: m.tail_max_abs_error, diverged: m.diverged };
        Ok(())
    })
}

/// # Safety
/// `trace` must be null or a handle from [`mfc_simulate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mfc_trace_free(trace: *mut MfcTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Sweeps the iP stability map. With `for_all_t` false the grid is
/// classified at `t_values[0]`; otherwise a cell is stable only if it is
/// stable for every `T` in `t_values` (strictly increasing).
///
/// # Safety
/// `t_values` must point to `t_len` readable doubles and `out` must be valid;
/// release the grid with [`mfc_grid_free`].
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn mfc_stabmap_sweep(
    kp_min: f64,
    kp_max: f64,
    kp_count: usize,
    alpha_min: f64,
    alpha_max: f64,
    alpha_count: usize,
    t_values: *const f64,
    t_len: usize,
    for_all_t: bool,
    out: *mut *mut MfcGrid,
) -> MfcStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        let spec = GridSpec {
            kp_axis: Axis::new(kp_min, kp_max, kp_count),
            alpha_axis: Axis::new(alpha_min, alpha_max, alpha_count),
            t_values: in_slice(t_values, t_len, "t_values")?.to_vec(),
            aggregation: if for_all_t { Aggregation::ForAllT } else { Aggregation::FixedT(0) },
        };
        *slot = Box::into_raw(Box::new(MfcGrid(stabmap::sweep(&spec)?)));
        Ok(())
    })
}

/// # Safety
/// `grid` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mfc_grid_stable_fraction(grid: *const MfcGrid, out: *mut f64) -> MfcStatus {
    guard(|| {
        *out_ref(out, "out")? = in_ref(grid, "grid")?.0.stable_fraction;
        Ok(())
    })
}

/// Verdict of the cell at `kp_index`, `alpha_index`.
///
/// # Safety
/// `grid` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mfc_grid_verdict(
    grid: *const MfcGrid,
    kp_index: usize,
    alpha_index: usize,
    out: *mut MfcVerdict,
) -> MfcStatus {
    guard(|| {
        let g = &in_ref(grid, "grid")?.0;
        if kp_index >= g.spec.kp_axis.count || alpha_index >= g.spec.alpha_axis.count {
            return Err(Failure(
                MfcStatus::OutOfRange,
                format!(
                    "cell ({kp_index}, {alpha_index}) outside a {}x{} grid",
                    g.spec.kp_axis.count, g.spec.alpha_axis.count
                ),
            ));
        }
        *out_ref(out, "out")? = match g.verdict(kp_index, alpha_index) {
            CellVerdict::Stable => MfcVerdict::Stable,
            CellVerdict::Unstable => MfcVerdict::Unstable,
            CellVerdict::Marginal => MfcVerdict::Marginal,
            CellVerdict::Excluded => MfcVerdict::Excluded,
        };
        Ok(())
    })
}

/// # Safety
/// `grid` must be null or a handle from [`mfc_stabmap_sweep`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mfc_grid_free(grid: *mut MfcGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}
