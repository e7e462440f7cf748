use super::SimError;

/// Reference value with its first two time derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSample {
    pub value: f64,
    pub rate: f64,
    pub accel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceTrajectory {
    Constant(f64),
    /// Quintic transition from `y_start` to `y_end` over `[t_start, t_end]`,
    /// with zero velocity and acceleration at both ends.
    SmoothStep { y_start: f64, y_end: f64, t_start: f64, t_end: f64 },
}

impl ReferenceTrajectory {
    pub fn validate(&self) -> Result<(), SimError> {
        match *self {
            Self::Constant(level) if !level.is_finite() => {
                Err(SimError::InvalidConfig("reference level must be finite".into()))
            }
            Self::SmoothStep { y_start, y_end, t_start, t_end } => {
                if !(y_start.is_finite() && y_end.is_finite() && t_start.is_finite() && t_end.is_finite()) {
                    return Err(SimError::InvalidConfig("reference parameters must be finite".into()));
                }
                if t_end <= t_start {
                    return Err(SimError::InvalidConfig(format!(
                        "reference t_end = {t_end} must exceed t_start = {t_start}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64) -> ReferenceSample {
        match *self {
            Self::Constant(level) => ReferenceSample { value: level, rate: 0.0, accel: 0.0 },
            Self::SmoothStep { y_start, y_end, t_start, t_end } => {
                let span = t_end - t_start;
                let delta = y_end - y_start;
                if t <= t_start {
                    return ReferenceSample { value: y_start, rate: 0.0, accel: 0.0 };
                }
                if t >= t_end {
                    return ReferenceSample { value: y_end, rate: 0.0, accel: 0.0 };
                }
                let s = (t - t_start) / span;
                let s2 = s * s;
                let s3 = s2 * s;
                ReferenceSample {
                    value: y_start + delta * s3 * (10.0 - 15.0 * s + 6.0 * s2),
                    rate: delta * 30.0 * s2 * (1.0 - s) * (1.0 - s) / span,
                    accel: delta * 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / (span * span),
                }
            }
        }
    }
}

impl Default for ReferenceTrajectory {
    fn default() -> Self {
        Self::SmoothStep { y_start: 0.0, y_end: 1.0, t_start: 1.0, t_end: 6.0 }
    }
}
