//! Discretized derivator filters `s/(Ts+1)` and `s²/(Ts+1)²`.
//!
//! Every first-order section is discretized with backward Euler,
//! `s -> (1 - z⁻¹)/h`. A derivator section then reads
//!
//! ```text
//! out[k] = (T·out[k-1] + in[k] - in[k-1]) / (T + h)
//! ```
//!
//! which is a backward difference feeding a backward-Euler lag. The
//! second-order derivator is two identical sections in cascade, so its
//! intermediate output is the first-order estimate. On its first sample a
//! section primes its memory with the input, which makes a constant signal
//! start in steady state instead of producing a spurious kick.

#[derive(Debug, Clone, Copy, PartialEq)]
struct DerivatorStage {
    prev_in: Option<f64>,
    out: f64,
}

impl DerivatorStage {
    const fn new() -> Self {
        Self { prev_in: None, out: 0.0 }
    }

    fn step(&mut self, x: f64, t: f64, h: f64) -> f64 {
        let prev = self.prev_in.unwrap_or(x);
        self.out = (t * self.out + (x - prev)) / (t + h);
        self.prev_in = Some(x);
        self.out
    }
}

/// Cascade of `order` derivator sections with time constant `t_filter`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivatorFilter {
    t_filter: f64,
    h: f64,
    stages: Vec<DerivatorStage>,
}

impl DerivatorFilter {
    /// # Panics
    /// If `order` is not 1 or 2, or `t_filter`/`h` are not positive.
    pub fn new(order: usize, t_filter: f64, h: f64) -> Self {
        assert!(order == 1 || order == 2, "derivator order must be 1 or 2");
        assert!(t_filter > 0.0 && h > 0.0, "filter constant and sample period must be positive");
        Self { t_filter, h, stages: vec![DerivatorStage::new(); order] }
    }

    pub fn order(&self) -> usize {
        self.stages.len()
    }

    /// Feeds one sample and returns the derivative estimate of the filter's order.
    pub fn step(&mut self, y: f64) -> f64 {
        let (t, h) = (self.t_filter, self.h);
        self.stages.iter_mut().fold(y, |x, stage| stage.step(x, t, h))
    }

    /// Latest output of the `k`-th section: the filtered derivative of order `k`.
    pub fn derivative(&self, k: usize) -> f64 {
        self.stages[k - 1].out
    }

    pub fn reset(&mut self) {
        self.stages.iter_mut().for_each(|s| *s = DerivatorStage::new());
    }
}

/// Cascade of `order` backward-Euler lags `1/(Ts+1)`, starting from zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LagFilter {
    t_filter: f64,
    h: f64,
    states: Vec<f64>,
}

impl LagFilter {
    pub fn new(order: usize, t_filter: f64, h: f64) -> Self {
        assert!(t_filter > 0.0 && h > 0.0, "filter constant and sample period must be positive");
        Self { t_filter, h, states: vec![0.0; order] }
    }

    pub fn step(&mut self, x: f64) -> f64 {
        let (t, h) = (self.t_filter, self.h);
        self.states.iter_mut().fold(x, |input, s| {
            *s = (t * *s + h * input) / (t + h);
            *s
        })
    }

    pub fn reset(&mut self) {
        self.states.iter_mut().for_each(|s| *s = 0.0);
    }
}
