use std::io::{self, Write};

use super::SimError;

pub const TRACE_HEADER: &str = "t,u,y_true,y_measured,y_ref,e,f_hat,f_true";

/// Fraction of samples, counted from the end, that form the tail window.
pub const TAIL_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceMeta {
    pub scenario: String,
    pub seed: u64,
    pub controller: String,
}

/// Uniformly sampled closed-loop record.
///
/// The exported columns are `t, u, y_true, y_measured, y_ref, e, f_hat, f_true`.
/// `y_ref_rate` and `ydot_true` are kept for analysis but not written to CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimulationTrace {
    pub meta: TraceMeta,
    pub h: f64,
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub y_true: Vec<f64>,
    pub y_measured: Vec<f64>,
    pub y_ref: Vec<f64>,
    pub e: Vec<f64>,
    pub f_hat: Vec<f64>,
    pub f_true: Vec<f64>,
    pub y_ref_rate: Vec<f64>,
    pub ydot_true: Vec<f64>,
    /// Set when `|y_true|` crossed the blow-up threshold and the run stopped early.
    pub diverged: bool,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for k in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                self.t[k],
                self.u[k],
                self.y_true[k],
                self.y_measured[k],
                self.y_ref[k],
                self.e[k],
                self.f_hat[k],
                self.f_true[k]
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub rmse: f64,
    /// Trapezoid integral of `|e|`.
    pub iae: f64,
    /// Largest `|e|` over the final 20% of the samples.
    pub tail_max_abs_error: f64,
    pub diverged: bool,
}

/// Index of the first sample of the tail window.
pub fn tail_start(n: usize) -> usize {
    n - ((n as f64 * TAIL_FRACTION).round() as usize).clamp(1, n)
}

pub fn compute_metrics(trace: &SimulationTrace) -> Result<Metrics, SimError> {
    error_metrics(&trace.e, trace.h, trace.diverged)
}

/// Metrics of an error sequence sampled every `h` seconds.
pub fn error_metrics(e: &[f64], h: f64, diverged: bool) -> Result<Metrics, SimError> {
    if e.is_empty() {
        return Err(SimError::EmptyTrace);
    }
    let n = e.len();
    let rmse = (e.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
    let iae = e.windows(2).map(|w| 0.5 * h * (w[0].abs() + w[1].abs())).sum();
    let tail_max_abs_error = e[tail_start(n)..].iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    Ok(Metrics { rmse, iae, tail_max_abs_error, diverged })
}
