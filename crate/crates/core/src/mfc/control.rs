//! Intelligent control laws and the classic PID used for comparison.
//!
//! All intelligent variants share one core,
//!
//! ```text
//! u = -(F̂ - y*⁽ᵛ⁾ - K_P e - K_I ∫e - K_D ė) / α
//! ```
//!
//! where the reference derivative is `ẏ*` for the iP (ν = 1) and `ÿ*` for the
//! ν = 2 variants. iPI, iPD and iP are the core with the absent gains masked
//! to zero.

use super::MfcError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControllerSpec {
    Ip { alpha: f64, kp: f64 },
    Ipi { alpha: f64, kp: f64, ki: f64 },
    Ipd { alpha: f64, kp: f64, kd: f64 },
    Ipid { alpha: f64, kp: f64, ki: f64, kd: f64 },
    ClassicPid { kp: f64, ki: f64, kd: f64 },
}

/// Everything a control law may read at one sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LawInputs {
    pub f_hat: f64,
    pub ystar_dot: f64,
    pub ystar_ddot: f64,
    pub e: f64,
    pub e_int: f64,
    pub e_dot: f64,
}

impl ControllerSpec {
    /// `(α, K_P, K_I, K_D)` for the intelligent variants.
    fn intelligent_gains(&self) -> Option<(f64, f64, f64, f64)> {
        match *self {
            Self::Ip { alpha, kp } => Some((alpha, kp, 0.0, 0.0)),
            Self::Ipi { alpha, kp, ki } => Some((alpha, kp, ki, 0.0)),
            Self::Ipd { alpha, kp, kd } => Some((alpha, kp, 0.0, kd)),
            Self::Ipid { alpha, kp, ki, kd } => Some((alpha, kp, ki, kd)),
            Self::ClassicPid { .. } => None,
        }
    }

    pub fn is_intelligent(&self) -> bool {
        self.intelligent_gains().is_some()
    }

    pub fn alpha(&self) -> Option<f64> {
        self.intelligent_gains().map(|g| g.0)
    }

    /// Derivation order of the ultra-local model behind the law; `None` for the classic PID.
    pub fn nu(&self) -> Option<usize> {
        match self {
            Self::Ip { .. } => Some(1),
            Self::Ipi { .. } | Self::Ipd { .. } | Self::Ipid { .. } => Some(2),
            Self::ClassicPid { .. } => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Ip { .. } => "ip",
            Self::Ipi { .. } => "ipi",
            Self::Ipd { .. } => "ipd",
            Self::Ipid { .. } => "ipid",
            Self::ClassicPid { .. } => "pid",
        }
    }

    pub fn validate(&self) -> Result<(), MfcError> {
        let gains: Vec<f64> = match *self {
            Self::Ip { alpha, kp } => vec![alpha, kp],
            Self::Ipi { alpha, kp, ki } => vec![alpha, kp, ki],
            Self::Ipd { alpha, kp, kd } => vec![alpha, kp, kd],
            Self::Ipid { alpha, kp, ki, kd } => vec![alpha, kp, ki, kd],
            Self::ClassicPid { kp, ki, kd } => vec![kp, ki, kd],
        };
        if gains.iter().any(|g| !g.is_finite()) {
            return Err(MfcError::InvalidController(format!("{}: gains must be finite", self.label())));
        }
        if self.alpha() == Some(0.0) {
            return Err(MfcError::InvalidController(format!("{}: alpha must be nonzero", self.label())));
        }
        Ok(())
    }

    /// Control value for one sample.
    pub fn command(&self, x: &LawInputs) -> f64 {
        match *self {
            Self::Ip { alpha, kp } => control_ip(x.f_hat, x.ystar_dot, x.e, kp, alpha),
            Self::ClassicPid { kp, ki, kd } => control_classic_pid(x.e, x.e_int, x.e_dot, kp, ki, kd),
            _ => {
                let (alpha, kp, ki, kd) = self.intelligent_gains().unwrap();
                control_ipid(x.f_hat, x.ystar_ddot, x.e, x.e_int, x.e_dot, kp, ki, kd, alpha)
            }
        }
    }
}

/// iPID: `u = -(F̂ - ÿ* - K_P e - K_I ∫e - K_D ė)/α`.
#[allow(clippy::too_many_arguments)]
pub fn control_ipid(f_hat: f64, ystar_ddot: f64, e: f64, e_int: f64, e_dot: f64, kp: f64, ki: f64, kd: f64, alpha: f64) -> f64 {
    -(f_hat - ystar_ddot - kp * e - ki * e_int - kd * e_dot) / alpha
}

/// iP: `u = -(F̂ - ẏ* - K_P e)/α`.
pub fn control_ip(f_hat: f64, ystar_dot: f64, e: f64, kp: f64, alpha: f64) -> f64 {
    control_ipid(f_hat, ystar_dot, e, 0.0, 0.0, kp, 0.0, 0.0, alpha)
}

pub fn control_ipd(f_hat: f64, ystar_ddot: f64, e: f64, e_dot: f64, kp: f64, kd: f64, alpha: f64) -> f64 {
    control_ipid(f_hat, ystar_ddot, e, 0.0, e_dot, kp, 0.0, kd, alpha)
}

/// iPI; `ystar_deriv` is `ÿ*` here since the iPI runs with ν = 2.
pub fn control_ipi(f_hat: f64, ystar_deriv: f64, e: f64, e_int: f64, kp: f64, ki: f64, alpha: f64) -> f64 {
    control_ipid(f_hat, ystar_deriv, e, e_int, 0.0, kp, ki, 0.0, alpha)
}

/// `u = k_P e + k_I ∫e + k_D ė`, with `ė` taken from the filtered error.
pub fn control_classic_pid(e: f64, e_int: f64, e_dot: f64, kp: f64, ki: f64, kd: f64) -> f64 {
    kp * e + ki * e_int + kd * e_dot
}
