//! Real polynomials in the Laplace variable `s`.
//!
//! Coefficients are stored in ascending degree order: `coeffs[k]` multiplies
//! `s^k`. Besides plain arithmetic this module hosts everything that works on
//! characteristic polynomials: the Routh-Hurwitz test, a numeric root oracle,
//! the closed-loop quartic of the filtered iP loop and the pole-placement
//! solvers used to tune the iPD and classic PID loops.

mod placement;
mod roots;
mod routh;

use std::fmt;

use thiserror::Error;

pub use placement::{
    expand_pole, ip_charpoly, ipd_gains_from_target, pid_closed_loop, pid_gains_from_target, IpLoopParams,
};
pub use roots::{max_real_part_of_roots, roots};
pub use routh::{routh_hurwitz, StabilityKind, StabilityVerdict};

/// Coefficients with `|c| <= TRIM_RELATIVE * max|c|` at the top end are dropped.
pub const TRIM_RELATIVE: f64 = 1e-12;

/// Stability operations refuse polynomials above this degree.
pub const MAX_DEGREE: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("zero polynomial has no stability meaning")]
    ZeroPolynomial,
    #[error("constant polynomial has no stability meaning")]
    DegreeZero,
    #[error("degree {0} exceeds the supported maximum of {MAX_DEGREE}")]
    DegreeTooHigh(usize),
    #[error("polynomial has a non-finite coefficient")]
    NonFiniteCoefficient,
    #[error("invalid loop parameters: {0}")]
    InvalidParams(String),
    #[error("target polynomial is not monic (leading coefficient {0})")]
    NotMonic(f64),
    #[error("target polynomial has degree {found}, expected {expected}")]
    WrongDegree { expected: usize, found: usize },
    #[error("plant input gain b is zero")]
    ZeroInputGain,
    #[error("root finder did not converge for degree {degree} after {iterations} iterations (eps {eps:e})")]
    ConvergenceFailure { degree: usize, iterations: usize, eps: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Builds a polynomial from ascending coefficients, trimming negligible
    /// leading terms. An empty or all-zero input yields the zero polynomial `[0]`.
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        let mut coeffs = coeffs.into();
        let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        while coeffs.len() > 1 {
            let last = *coeffs.last().unwrap();
            if last.abs() <= TRIM_RELATIVE * scale {
                coeffs.pop();
            } else {
                break;
            }
        }
        if coeffs.is_empty() || (coeffs.len() == 1 && coeffs[0].abs() <= TRIM_RELATIVE * scale) {
            return Self { coeffs: vec![0.0] };
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![0.0] }
    }

    pub fn one() -> Self {
        Self { coeffs: vec![1.0] }
    }

    /// `s + r`
    pub fn linear_factor(r: f64) -> Self {
        Self { coeffs: vec![r, 1.0] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    /// Coefficient of `s^k`, zero beyond the degree.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn is_monic(&self) -> bool {
        self.leading() == 1.0
    }

    /// Horner evaluation at a real point.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        if self.degree() == 0 {
            return Self::zero();
        }
        let coeffs: Vec<f64> = self.coeffs.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect();
        Self::new(coeffs)
    }

    pub fn mul(&self, other: &Polynomial) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * factor).collect::<Vec<_>>())
    }

    /// Multiplies by -1 when the leading coefficient is negative. Roots are unchanged.
    pub fn with_positive_leading(&self) -> Self {
        if self.leading() < 0.0 {
            self.scale(-1.0)
        } else {
            self.clone()
        }
    }

    pub(crate) fn check_for_stability(&self) -> Result<(), PolyError> {
        if self.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(PolyError::NonFiniteCoefficient);
        }
        if self.is_zero() {
            return Err(PolyError::ZeroPolynomial);
        }
        match self.degree() {
            0 => Err(PolyError::DegreeZero),
            d if d > MAX_DEGREE => Err(PolyError::DegreeTooHigh(d)),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 && self.degree() > 0 {
                continue;
            }
            if !first {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            let m = c.abs();
            match k {
                0 => write!(f, "{m}")?,
                1 => write!(f, "{m}s")?,
                _ => write!(f, "{m}s^{k}")?,
            }
            first = false;
        }
        Ok(())
    }
}
