//! Online estimation of the lumped term `F` in `y⁽ᵛ⁾ = F + αu`.

use super::filter::{DerivatorFilter, LagFilter};
use super::MfcError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorVariant {
    /// `F̂ = D_ν[y] - α·L_ν[u_prev]`.
    ///
    /// `D_ν` is the derivator `s^ν/(Ts+1)^ν` and `L_ν = 1/(Ts+1)^ν` the matching
    /// lag, applied to the control held over the previous sample. Both signals
    /// pass through the same low-pass kernel, so on noise-free data
    /// `F̂ = L_ν[F]`. No plant knowledge is needed.
    DelayedInput,
    /// The ultra-local relation with `u` eliminated through the plant model
    /// `ÿ + a₁ẏ + a₀y = b·u`, written with filtered derivatives. On
    /// `ÿ - ẏ = u` this is `F̂ = -α D₂[y] + (1+α) D₁[y]` for ν = 1 and
    /// `F̂ = (1-α) D₂[y] + α D₁[y]` for ν = 2.
    AnalysisForm { a1: f64, a0: f64, b: f64 },
    /// Exact `F` from the simulated plant state. Only the closed-loop
    /// simulator can provide it; it exists for verification runs.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub nu: usize,
    pub alpha: f64,
    pub t_filter: f64,
    pub variant: EstimatorVariant,
}

impl EstimatorConfig {
    pub fn delayed_input(nu: usize, alpha: f64, t_filter: f64) -> Self {
        Self { nu, alpha, t_filter, variant: EstimatorVariant::DelayedInput }
    }

    /// Analysis form on `ÿ - ẏ = u`.
    pub fn analysis_form(nu: usize, alpha: f64, t_filter: f64) -> Self {
        Self { nu, alpha, t_filter, variant: EstimatorVariant::AnalysisForm { a1: -1.0, a0: 0.0, b: 1.0 } }
    }

    pub fn oracle(nu: usize, alpha: f64, t_filter: f64) -> Self {
        Self { nu, alpha, t_filter, variant: EstimatorVariant::Oracle }
    }

    pub fn validate(&self) -> Result<(), MfcError> {
        if self.nu != 1 && self.nu != 2 {
            return Err(MfcError::ConfigMismatch(format!("nu = {} must be 1 or 2", self.nu)));
        }
        if !self.alpha.is_finite() || self.alpha == 0.0 {
            return Err(MfcError::ConfigMismatch(format!("alpha = {} must be finite and nonzero", self.alpha)));
        }
        if !(self.t_filter > 0.0 && self.t_filter.is_finite()) {
            return Err(MfcError::ConfigMismatch(format!("t_filter = {} must be > 0", self.t_filter)));
        }
        match self.variant {
            EstimatorVariant::AnalysisForm { b: 0.0, .. } => {
                Err(MfcError::ConfigMismatch("analysis form needs a nonzero plant input gain".into()))
            }
            EstimatorVariant::Oracle if self.nu != 2 => Err(MfcError::ConfigMismatch(
                "oracle estimate requires nu = 2: with nu = 1 the law has no u to solve for".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Stateful estimator for one control loop.
#[derive(Debug, Clone)]
pub struct FEstimator {
    cfg: EstimatorConfig,
    derivator: DerivatorFilter,
    input_lag: LagFilter,
}

impl FEstimator {
    /// Builds the filter bank for sample period `h`. The oracle variant is
    /// rejected: it has no filter realization.
    pub fn new(cfg: EstimatorConfig, h: f64) -> Result<Self, MfcError> {
        cfg.validate()?;
        if cfg.variant == EstimatorVariant::Oracle {
            return Err(MfcError::ConfigMismatch("the oracle estimate is produced by the simulator".into()));
        }
        if h.is_nan() || h <= 0.0 {
            return Err(MfcError::ConfigMismatch(format!("sample period h = {h} must be > 0")));
        }
        // The analysis form always needs both derivative orders.
        let order = match cfg.variant {
            EstimatorVariant::AnalysisForm { .. } => 2,
            _ => cfg.nu,
        };
        Ok(Self {
            cfg,
            derivator: DerivatorFilter::new(order, cfg.t_filter, h),
            input_lag: LagFilter::new(cfg.nu, cfg.t_filter, h),
        })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    /// Feeds the current measurement and the control applied over the
    /// previous sample, returns `F̂` for the current sample.
    pub fn estimate(&mut self, y_measured: f64, u_prev: f64) -> f64 {
        let alpha = self.cfg.alpha;
        self.derivator.step(y_measured);
        match self.cfg.variant {
            EstimatorVariant::DelayedInput => {
                let lagged_u = self.input_lag.step(u_prev);
                self.derivator.derivative(self.cfg.nu) - alpha * lagged_u
            }
            EstimatorVariant::AnalysisForm { a1, a0, b } => {
                let (d1, d2) = (self.derivator.derivative(1), self.derivator.derivative(2));
                let k = alpha / b;
                match self.cfg.nu {
                    1 => -k * d2 + (1.0 - k * a1) * d1 - k * a0 * y_measured,
                    _ => (1.0 - k) * d2 - k * a1 * d1 - k * a0 * y_measured,
                }
            }
            EstimatorVariant::Oracle => unreachable!("rejected in FEstimator::new"),
        }
    }

    /// Filtered first derivative of the measurement at the last sample.
    pub fn measurement_rate(&self) -> f64 {
        self.derivator.derivative(1)
    }

    pub fn reset(&mut self) {
        self.derivator.reset();
        self.input_lag.reset();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silent_signals_give_zero() {
        for cfg in [EstimatorConfig::delayed_input(1, 0.5, 0.1), EstimatorConfig::analysis_form(2, 0.5, 0.1)] {
            let mut est = FEstimator::new(cfg, 1e-3).unwrap();
            assert!((0..100).all(|_| est.estimate(0.0, 0.0) == 0.0));
        }
    }

    #[test]
    fn config_errors() {
        assert!(matches!(FEstimator::new(EstimatorConfig::delayed_input(3, 0.5, 0.1), 1e-3), Err(MfcError::ConfigMismatch(_))));
        assert!(FEstimator::new(EstimatorConfig::delayed_input(1, 0.0, 0.1), 1e-3).is_err());
        assert!(FEstimator::new(EstimatorConfig::delayed_input(1, 1.0, 0.0), 1e-3).is_err());
        assert!(FEstimator::new(EstimatorConfig::oracle(2, 1.0, 0.1), 1e-3).is_err());
        assert!(EstimatorConfig::oracle(1, 1.0, 0.1).validate().is_err());
        assert!(EstimatorConfig::oracle(2, 1.0, 0.1).validate().is_ok());
    }

    #[test]
    fn delayed_input_on_open_loop_plant() {
        // ÿ = ẏ + u with u = 1 from rest: ẏ = e^t - 1, ÿ = e^t, so for ν = 2
        // F = ÿ - αu = e^t - α. Compare after the filter transient.
        let (alpha, t_filter, h) = (0.5, 0.02, 1e-4);
        let mut est = FEstimator::new(EstimatorConfig::delayed_input(2, alpha, t_filter), h).unwrap();
        let mut f_hat = 0.0;
        let mut u_prev = 0.0;
        let n = 10_000;
        for k in 0..=n {
            let t = k as f64 * h;
            let y = t.exp() - 1.0 - t;
            f_hat = est.estimate(y, u_prev);
            u_prev = 1.0;
        }
        let t = n as f64 * h;
        let f = t.exp() - alpha;
        assert!((f_hat - f).abs() <= 0.05 * (1.0 + f.abs()), "{f_hat} vs {f}");
    }
}
