//! Fixed-step closed-loop simulation of `ÿ + a₁ẏ + a₀y = b·δ·u` with
//! measurement noise, smooth references and tracking metrics.

mod noise;
mod plant;
mod reference;
mod runner;
mod trace;

use thiserror::Error;

use crate::mfc::MfcError;

pub use noise::{NoiseModel, NoiseSource};
pub use plant::{plant_step, LtiPlant, PlantState};
pub use reference::{ReferenceSample, ReferenceTrajectory};
pub use runner::{run_closed_loop, SimConfig, BLOW_UP_THRESHOLD};
pub use trace::{compute_metrics, error_metrics, tail_start, Metrics, SimulationTrace, TraceMeta, TRACE_HEADER};

/// Default sample and integration period, seconds.
pub const DEFAULT_STEP: f64 = 1e-3;
/// Default horizon, seconds.
pub const DEFAULT_DURATION: f64 = 20.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("integration produced a non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("invalid simulation configuration: {0}")]
    InvalidConfig(String),
    #[error("trace is empty")]
    EmptyTrace,
    #[error(transparent)]
    Mfc(#[from] MfcError),
}
