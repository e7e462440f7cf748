use super::noise::{NoiseModel, NoiseSource};
use super::plant::{plant_step, LtiPlant, PlantState};
use super::reference::ReferenceTrajectory;
use super::trace::{SimulationTrace, TraceMeta};
use super::SimError;
use crate::mfc::{ControllerSpec, DerivatorFilter, EstimatorConfig, EstimatorVariant, FEstimator, LawInputs, MfcError};

/// A run stops and is flagged diverged once `|y_true|` exceeds this.
pub const BLOW_UP_THRESHOLD: f64 = 1e3;

/// Full description of one closed-loop run.
///
/// The estimator always runs. For the intelligent controllers it must agree
/// with the controller on `ν` and `α` and its output is fed to the law; for
/// the classic PID it only observes and its estimate is logged.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub plant: LtiPlant,
    pub controller: ControllerSpec,
    pub estimator: EstimatorConfig,
    pub reference: ReferenceTrajectory,
    pub noise: NoiseModel,
    pub h: f64,
    pub duration: f64,
    pub y0: f64,
    pub ydot0: f64,
    pub meta: TraceMeta,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.plant.validate()?;
        self.reference.validate()?;
        self.controller.validate()?;
        self.estimator.validate()?;
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(SimError::InvalidConfig(format!("h = {} must be > 0", self.h)));
        }
        if !(self.duration >= 10.0 * self.h && self.duration.is_finite()) {
            return Err(SimError::InvalidConfig(format!(
                "duration = {} must be at least 10 h = {}",
                self.duration,
                10.0 * self.h
            )));
        }
        if !(self.noise.sigma >= 0.0 && self.noise.sigma.is_finite()) {
            return Err(SimError::InvalidConfig(format!("sigma = {} must be >= 0", self.noise.sigma)));
        }
        if !(self.y0.is_finite() && self.ydot0.is_finite()) {
            return Err(SimError::InvalidConfig("initial state must be finite".into()));
        }
        if let (Some(nu), Some(alpha)) = (self.controller.nu(), self.controller.alpha()) {
            if nu != self.estimator.nu || alpha != self.estimator.alpha {
                return Err(MfcError::ConfigMismatch(format!(
                    "{} needs an estimator with nu = {nu}, alpha = {alpha}; got nu = {}, alpha = {}",
                    self.controller.label(),
                    self.estimator.nu,
                    self.estimator.alpha
                ))
                .into());
            }
        } else if self.estimator.variant == EstimatorVariant::Oracle {
            return Err(MfcError::ConfigMismatch("the oracle estimate only drives intelligent controllers".into()).into());
        }
        if self.estimator.variant == EstimatorVariant::Oracle && self.plant.input_gain() == 0.0 {
            return Err(MfcError::ConfigMismatch("the oracle estimate needs a nonzero input gain".into()).into());
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        (self.duration / self.h).round() as usize + 1
    }
}

enum Estimate {
    Filtered(FEstimator),
    Oracle,
}

/// Runs the loop on the grid `t_k = k·h`, `k = 0..=duration/h`.
///
/// Per sample: measure `y_true + noise`, evaluate the reference, update the
/// error integral (trapezoid), update `F̂` from the measurement and the control
/// of the previous sample, compute `u`, log, then integrate the plant over
/// `[t_k, t_k + h)` with `u` held. `f_true` is `y⁽ᵛ⁾ - αu` from the exact plant
/// state with the estimator's `ν` and `α`.
///
/// Divergence is an outcome, not an error: the trace is truncated at the last
/// finite sample below the blow-up threshold and `diverged` is set.
pub fn run_closed_loop(cfg: &SimConfig) -> Result<SimulationTrace, SimError> {
    cfg.validate()?;
    let n = cfg.sample_count();
    let h = cfg.h;
    let plant = cfg.plant;
    let nu = cfg.estimator.nu;
    let alpha = cfg.estimator.alpha;

    let mut estimate = match cfg.estimator.variant {
        EstimatorVariant::Oracle => Estimate::Oracle,
        _ => Estimate::Filtered(FEstimator::new(cfg.estimator, h)?),
    };
    let mut error_derivator = DerivatorFilter::new(1, cfg.estimator.t_filter, h);
    let mut noise = NoiseSource::new(&cfg.noise);

    let mut trace = SimulationTrace { meta: cfg.meta.clone(), h, ..Default::default() };
    for column in [
        &mut trace.t,
        &mut trace.u,
        &mut trace.y_true,
        &mut trace.y_measured,
        &mut trace.y_ref,
        &mut trace.e,
        &mut trace.f_hat,
        &mut trace.f_true,
        &mut trace.y_ref_rate,
        &mut trace.ydot_true,
    ] {
        column.reserve_exact(n);
    }

    let mut state = PlantState { y: cfg.y0, ydot: cfg.ydot0, t: 0.0 };
    let mut u_prev = 0.0;
    let mut e_prev = 0.0;
    let mut e_int = 0.0;

    for k in 0..n {
        let t = k as f64 * h;
        let y_measured = state.y + noise.sample();
        let r = cfg.reference.eval(t);
        let e = r.value - y_measured;
        if k > 0 {
            e_int += 0.5 * h * (e + e_prev);
        }
        let pid_rate = error_derivator.step(e);

        let mut inputs = LawInputs { ystar_dot: r.rate, ystar_ddot: r.accel, e, e_int, ..Default::default() };
        let (u, f_hat) = match &mut estimate {
            Estimate::Filtered(est) => {
                let f_hat = est.estimate(y_measured, u_prev);
                inputs.f_hat = f_hat;
                inputs.e_dot = if cfg.controller.is_intelligent() { r.rate - est.measurement_rate() } else { pid_rate };
                (cfg.controller.command(&inputs), f_hat)
            }
            Estimate::Oracle => {
                // F depends on u through ÿ: F(u) = F0 + (bδ - α)u. Solve the
                // law and the model together for the consistent pair.
                inputs.e_dot = r.rate - state.ydot;
                let f0 = -plant.a1 * state.ydot - plant.a0 * state.y;
                let gain = plant.input_gain();
                let drive = alpha * cfg.controller.command(&inputs); // law with F̂ = 0
                let u = (drive - f0) / gain;
                let f_hat = f0 + (gain - alpha) * u;
                inputs.f_hat = f_hat;
                (cfg.controller.command(&inputs), f_hat)
            }
        };

        let f_true = match nu {
            1 => state.ydot - alpha * u,
            _ => plant.acceleration(state.y, state.ydot, u) - alpha * u,
        };

        trace.t.push(t);
        trace.u.push(u);
        trace.y_true.push(state.y);
        trace.y_measured.push(y_measured);
        trace.y_ref.push(r.value);
        trace.e.push(e);
        trace.f_hat.push(f_hat);
        trace.f_true.push(f_true);
        trace.y_ref_rate.push(r.rate);
        trace.ydot_true.push(state.ydot);

        if k + 1 == n {
            break;
        }
        if !u.is_finite() {
            trace.diverged = true;
            break;
        }
        match plant_step(&plant, state, u, h) {
            Ok(next) if next.y.abs() <= BLOW_UP_THRESHOLD => state = next,
            Ok(_) | Err(SimError::NonFiniteState { .. }) => {
                trace.diverged = true;
                break;
            }
            Err(other) => return Err(other),
        }
        u_prev = u;
        e_prev = e;
    }
    Ok(trace)
}
