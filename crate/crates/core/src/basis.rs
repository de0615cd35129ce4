//! Orthonormal cosine basis on the segment `[0, T]`.
//!
//! `q(0, t) = 1/sqrt(T)` and `q(i, t) = sqrt(2/T) cos(i pi t / T)` for
//! `i >= 1`. Outside the segment the basis functions are either continued
//! by the same formula (natural extension, the default) or set to zero;
//! the two conventions produce different time-shift matrices.

use crate::error::{Result, SpectralError};
use crate::quad;
use crate::signals::SpectralVec;

/// Behavior of the basis functions for `t` outside `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Extension {
    #[default]
    Natural,
    Zero,
}

/// Cosine basis parameters: time horizon `T`, truncation order `L`, and
/// the beyond-segment extension mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    pub horizon: f64,
    pub len: usize,
    pub extension: Extension,
}

impl BasisSpec {
    pub fn new(horizon: f64, len: usize) -> Self {
        Self::with_extension(horizon, len, Extension::Natural)
    }

    pub fn with_extension(horizon: f64, len: usize, extension: Extension) -> Self {
        assert!(horizon > 0.0, "time horizon must be positive");
        assert!(len >= 1, "truncation order must be at least 1");
        Self { horizon, len, extension }
    }

    /// Evaluates `q(i, t)` under the configured extension mode.
    pub fn eval(&self, i: usize, t: f64) -> f64 {
        assert!(i < self.len, "basis index {i} out of range (L = {})", self.len);
        if self.extension == Extension::Zero && !(0.0..=self.horizon).contains(&t) {
            return 0.0;
        }
        unclamped_eval(self.horizon, i, t)
    }

    /// Reconstructs the time-domain samples `sum_i coeffs[i] q(i, t_k)`.
    pub fn reconstruct(&self, coeffs: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.len {
            return Err(SpectralError::ShapeMismatch(format!(
                "reconstruct: {} coefficients for truncation order {}",
                coeffs.len(),
                self.len
            )));
        }
        let mut out = Vec::with_capacity(grid.len());
        for &t in grid {
            let mut s = 0.0;
            for (i, c) in coeffs.iter().enumerate() {
                s += c * self.eval(i, t);
            }
            out.push(s);
        }
        Ok(out)
    }

    /// Projects `f` onto the basis by adaptive composite Gauss-Legendre
    /// quadrature of `int q(i, t) f(t) dt`, aiming at absolute accuracy
    /// 1e-10 per coefficient.
    ///
    /// This is the verification oracle for the closed-form spectral
    /// characteristics; it never shares code with them.
    pub fn project_quadrature(&self, f: &dyn Fn(f64) -> f64) -> Result<SpectralVec> {
        let mut coeffs = Vec::with_capacity(self.len);
        for i in 0..self.len {
            let t = self.horizon;
            let integrand = move |x: f64| unclamped_eval(t, i, x) * f(x);
            // At least one panel per basis half-period keeps the cosine factor
            // resolved; the adaptive doubling handles whatever f adds.
            let initial = (i / 2 + 4).max(4);
            let value = quad::adaptive(&integrand, 0.0, self.horizon, 1e-11, initial)
                .ok_or(SpectralError::QuadratureNonConvergence { index: i })?;
            coeffs.push(value);
        }
        Ok(SpectralVec::new(coeffs, self.horizon, "quadrature projection"))
    }
}

pub(crate) fn unclamped_eval(horizon: f64, i: usize, t: f64) -> f64 {
    if i == 0 {
        (1.0 / horizon).sqrt()
    } else {
        (2.0 / horizon).sqrt() * (i as f64 * std::f64::consts::PI * t / horizon).cos()
    }
}
