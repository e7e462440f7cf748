use super::SimError;

/// Second-order SISO plant `ÿ + a₁ẏ + a₀y = b·δ·u`.
///
/// `delta` is the actuator effectiveness: 1 for a healthy actuator, lower
/// values model a loss of actuator power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LtiPlant {
    pub a1: f64,
    pub a0: f64,
    pub b: f64,
    pub delta: f64,
}

impl LtiPlant {
    pub fn new(a1: f64, a0: f64, b: f64, delta: f64) -> Result<Self, SimError> {
        let plant = Self { a1, a0, b, delta };
        plant.validate()?;
        Ok(plant)
    }

    /// `ÿ - ẏ = u`: open-loop poles at 0 and +1.
    pub fn unstable_example() -> Self {
        Self { a1: -1.0, a0: 0.0, b: 1.0, delta: 1.0 }
    }

    pub fn with_delta(self, delta: f64) -> Result<Self, SimError> {
        Self::new(self.a1, self.a0, self.b, delta)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.a1.is_finite() && self.a0.is_finite() && self.b.is_finite()) {
            return Err(SimError::InvalidConfig("plant coefficients must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(SimError::InvalidConfig(format!(
                "delta = {} must satisfy 0 <= delta <= 1",
                self.delta
            )));
        }
        Ok(())
    }

    /// Effective input gain `b·δ`.
    pub fn input_gain(&self) -> f64 {
        self.b * self.delta
    }

    pub fn acceleration(&self, y: f64, ydot: f64, u: f64) -> f64 {
        -self.a1 * ydot - self.a0 * y + self.input_gain() * u
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    pub y: f64,
    pub ydot: f64,
    pub t: f64,
}

impl PlantState {
    pub fn at_rest(y: f64) -> Self {
        Self { y, ydot: 0.0, t: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.y.is_finite() && self.ydot.is_finite()
    }
}

/// One classical RK4 step of length `h` with `u` held constant.
pub fn plant_step(plant: &LtiPlant, state: PlantState, u: f64, h: f64) -> Result<PlantState, SimError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(SimError::InvalidConfig(format!("step h = {h} must be > 0")));
    }
    let f = |y: f64, v: f64| (v, plant.acceleration(y, v, u));
    let (k1y, k1v) = f(state.y, state.ydot);
    let (k2y, k2v) = f(state.y + 0.5 * h * k1y, state.ydot + 0.5 * h * k1v);
    let (k3y, k3v) = f(state.y + 0.5 * h * k2y, state.ydot + 0.5 * h * k2v);
    let (k4y, k4v) = f(state.y + h * k3y, state.ydot + h * k3v);
    let next = PlantState {
        y: state.y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
        ydot: state.ydot + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        t: state.t + h,
    };
    if !next.is_finite() {
        return Err(SimError::NonFiniteState { t: next.t });
    }
    Ok(next)
}
