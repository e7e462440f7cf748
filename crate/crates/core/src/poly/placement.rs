use super::{PolyError, Polynomial};
use crate::sim::LtiPlant;

/// Parameters of the filtered iP loop around `ÿ - ẏ = u`.
///
/// `kp` is expressed in the sign convention of the closed-loop quartic
/// returned by [`ip_charpoly`], where the proportional term enters the
/// characteristic polynomial as `-K_P/α`. The iP law `u = -(F̂ - ẏ* - K e)/α`
/// with `e = y* - y` realizes that quartic for `K = -kp`; see
/// [`IpLoopParams::law_gain`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpLoopParams {
    pub alpha: f64,
    pub kp: f64,
    pub t_filter: f64,
}

impl IpLoopParams {
    pub fn new(alpha: f64, kp: f64, t_filter: f64) -> Result<Self, PolyError> {
        let p = Self { alpha, kp, t_filter };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PolyError> {
        if !(self.alpha.is_finite() && self.kp.is_finite() && self.t_filter.is_finite()) {
            return Err(PolyError::InvalidParams("parameters must be finite".into()));
        }
        if self.alpha == 0.0 {
            return Err(PolyError::InvalidParams("alpha must be nonzero".into()));
        }
        if self.t_filter <= 0.0 {
            return Err(PolyError::InvalidParams(format!("t_filter = {} must be > 0", self.t_filter)));
        }
        Ok(())
    }

    /// Proportional gain to hand to the iP control law so that the simulated
    /// loop has [`ip_charpoly`] as its characteristic polynomial.
    pub fn law_gain(&self) -> f64 {
        -self.kp
    }
}

/// Characteristic polynomial of the iP loop on `ÿ - ẏ = u` with the
/// analysis-form estimator `F̂ = -α s²/(Ts+1)² y + (1+α) s/(Ts+1) y`:
///
/// ```text
/// T²s⁴ + (2T - T²)s³ + (-2T + T(1 + 1/α) - T²K_P/α)s² + (1/α - 2TK_P/α)s - K_P/α
/// ```
///
/// The leading coefficient is `T²`; the polynomial is not made monic.
pub fn ip_charpoly(params: &IpLoopParams) -> Result<Polynomial, PolyError> {
    params.validate()?;
    let IpLoopParams { alpha, kp, t_filter: t } = *params;
    let t2 = t * t;
    Ok(Polynomial::new(vec![
        -kp / alpha,
        1.0 / alpha - 2.0 * t * kp / alpha,
        -2.0 * t + t * (1.0 + 1.0 / alpha) - t2 * kp / alpha,
        2.0 * t - t2,
        t2,
    ]))
}

/// `(s + r)^multiplicity` from binomial coefficients.
pub fn expand_pole(r: f64, multiplicity: u32) -> Polynomial {
    let m = multiplicity as usize;
    let mut coeffs = vec![0.0; m + 1];
    let mut binom = 1.0_f64;
    for k in 0..=m {
        // coefficient of s^k is C(m, k) r^(m-k)
        coeffs[k] = binom * r.powi((m - k) as i32);
        binom = binom * (m - k) as f64 / (k + 1) as f64;
    }
    Polynomial::new(coeffs)
}

fn require_monic(target: &Polynomial, degree: usize) -> Result<(), PolyError> {
    if target.degree() != degree {
        return Err(PolyError::WrongDegree { expected: degree, found: target.degree() });
    }
    if !target.is_monic() {
        return Err(PolyError::NotMonic(target.leading()));
    }
    Ok(())
}

/// Gains `(K_P, K_D)` placing the iPD error dynamics `ë + K_D ė + K_P e` on a
/// monic quadratic target.
pub fn ipd_gains_from_target(target: &Polynomial) -> Result<(f64, f64), PolyError> {
    require_monic(target, 2)?;
    Ok((target.coeff(0), target.coeff(1)))
}

/// Gains `(k_P, k_I, k_D)` of `u = k_P e + k_I ∫e + k_D ė` making the closed
/// loop around `ÿ + a₁ẏ + a₀y = b·δ·u` have the monic cubic `target` as
/// characteristic polynomial.
pub fn pid_gains_from_target(plant: &LtiPlant, target: &Polynomial) -> Result<(f64, f64, f64), PolyError> {
    require_monic(target, 3)?;
    let gain = plant.input_gain();
    if gain == 0.0 {
        return Err(PolyError::ZeroInputGain);
    }
    let kd = (target.coeff(2) - plant.a1) / gain;
    let kp = (target.coeff(1) - plant.a0) / gain;
    let ki = target.coeff(0) / gain;
    Ok((kp, ki, kd))
}

/// `s³ + (a₁ + g k_D)s² + (a₀ + g k_P)s + g k_I` with `g = b·δ`: the
/// unfiltered PID loop's characteristic polynomial.
pub fn pid_closed_loop(plant: &LtiPlant, kp: f64, ki: f64, kd: f64) -> Polynomial {
    let g = plant.input_gain();
    Polynomial::new(vec![g * ki, plant.a0 + g * kp, plant.a1 + g * kd, 1.0])
}
