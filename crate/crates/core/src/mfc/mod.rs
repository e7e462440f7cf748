//! Ultra-local model machinery: derivator filters, estimators of `F` and the
//! intelligent control laws.

mod control;
mod estimator;
mod filter;

use thiserror::Error;

pub use control::{
    control_classic_pid, control_ip, control_ipd, control_ipi, control_ipid, ControllerSpec, LawInputs,
};
pub use estimator::{EstimatorConfig, EstimatorVariant, FEstimator};
pub use filter::{DerivatorFilter, LagFilter};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MfcError {
    #[error("estimator configuration mismatch: {0}")]
    ConfigMismatch(String),
    #[error("invalid controller: {0}")]
    InvalidController(String),
}
