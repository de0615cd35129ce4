//! Closed-form spectral characteristics of test signals.
//!
//! A signal is represented by the column of its expansion coefficients
//! relative to the cosine basis on `[0, T]`. Closed forms are provided for
//! `sin(omega t)`, `cos(omega t)`, and standard Gaussian white noise; other
//! signals go through the quadrature projection in [`crate::basis`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::SpectralError;

/// Relative tolerance for detecting the resonance branch `i*pi == T*omega`.
///
/// Experiment frequencies are exact multiples of pi, so the comparison has
/// to absorb floating-point error in `pi` itself.
const RESONANCE_REL_TOL: f64 = 1e-12;

/// Truncated spectral characteristic of a signal: `L` cosine coefficients
/// on the segment `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVec {
    pub coeffs: Vec<f64>,
    pub horizon: f64,
    pub label: String,
}

impl SpectralVec {
    pub fn new(coeffs: Vec<f64>, horizon: f64, label: impl Into<String>) -> Self {
        assert!(!coeffs.is_empty(), "spectral vector must have L >= 1");
        assert!(horizon > 0.0, "time horizon must be positive");
        Self { coeffs, horizon, label: label.into() }
    }

    pub fn zeros(len: usize, horizon: f64, label: impl Into<String>) -> Self {
        Self::new(vec![0.0; len], horizon, label)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Euclidean norm of the coefficient column; equals the L2 norm of the
    /// truncated signal by orthonormality.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

fn resonant(i: usize, horizon: f64, omega: f64) -> bool {
    let lhs = i as f64 * std::f64::consts::PI;
    let rhs = horizon * omega;
    (lhs - rhs).abs() <= RESONANCE_REL_TOL * rhs.abs().max(1.0)
}

/// Spectral characteristic of `f(t) = sin(omega t)` on `[0, T]`.
pub fn spectral_sin(omega: f64, horizon: f64, len: usize) -> SpectralVec {
    assert!(omega > 0.0, "frequency must be positive");
    let t = horizon;
    let mut coeffs = vec![0.0; len];
    coeffs[0] = (1.0 - (t * omega).cos()) / (t.sqrt() * omega);
    for (i, c) in coeffs.iter_mut().enumerate().skip(1) {
        if resonant(i, t, omega) {
            *c = 0.0;
        } else {
            let ipi = i as f64 * std::f64::consts::PI;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            *c = t * (2.0 * t).sqrt() * omega * (sign * (t * omega).cos() - 1.0)
                / (ipi * ipi - t * t * omega * omega);
        }
    }
    SpectralVec::new(coeffs, horizon, format!("sin({omega}t)"))
}

/// Spectral characteristic of `f(t) = cos(omega t)` on `[0, T]`.
pub fn spectral_cos(omega: f64, horizon: f64, len: usize) -> SpectralVec {
    assert!(omega > 0.0, "frequency must be positive");
    let t = horizon;
    let mut coeffs = vec![0.0; len];
    coeffs[0] = (t * omega).sin() / (t.sqrt() * omega);
    for (i, c) in coeffs.iter_mut().enumerate().skip(1) {
        if resonant(i, t, omega) {
            *c = (t / 2.0).sqrt();
        } else {
            let ipi = i as f64 * std::f64::consts::PI;
            let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
            *c = t * (2.0 * t).sqrt() * sign * omega * (t * omega).sin()
                / (ipi * ipi - t * t * omega * omega);
        }
    }
    SpectralVec::new(coeffs, horizon, format!("cos({omega}t)"))
}

/// Spectral characteristic of scaled standard Gaussian white noise.
///
/// Coefficients are `sigma` times independent standard normal draws. The
/// stream is keyed by `(seed, realization)`: the master seed selects the
/// generator key and the realization index selects the stream, so distinct
/// realizations are independent and can be produced in any order while
/// staying bit-identical across runs.
pub fn spectral_white_noise(
    sigma: f64,
    horizon: f64,
    len: usize,
    seed: u64,
    realization: u64,
) -> SpectralVec {
    assert!(sigma >= 0.0, "noise intensity must be nonnegative");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(realization);
    let coeffs = (0..len)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma * z
        })
        .collect();
    SpectralVec::new(coeffs, horizon, format!("white-noise(sigma={sigma}, j={realization})"))
}

/// Element-wise linear combination of spectral characteristics.
pub fn combine(terms: &[(f64, &SpectralVec)]) -> Result<SpectralVec, SpectralError> {
    let (_, first) = terms.first().ok_or_else(|| {
        SpectralError::InvalidParameter("combine requires at least one term".into())
    })?;
    let len = first.len();
    let horizon = first.horizon;
    for (_, v) in terms {
        if v.len() != len || v.horizon != horizon {
            return Err(SpectralError::ShapeMismatch(format!(
                "combine: expected (T={horizon}, L={len}), got (T={}, L={})",
                v.horizon,
                v.len()
            )));
        }
    }
    let mut coeffs = vec![0.0; len];
    for (scale, v) in terms {
        for (c, x) in coeffs.iter_mut().zip(v.coeffs.iter()) {
            *c += scale * x;
        }
    }
    Ok(SpectralVec::new(coeffs, horizon, "combination"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn sin_resonant_index_is_zero() {
        let f = spectral_sin(10.0 * PI, 1.0, 64);
        assert_eq!(f.coeffs[10], 0.0);
        assert_abs_diff_eq!(f.coeffs[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn cos_resonant_index_is_sqrt_half_t() {
        let f = spectral_cos(95.0 * PI, 1.0, 128);
        assert_abs_diff_eq!(f.coeffs[95], 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.coeffs[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn cos_2pi_first_coefficient_vanishes() {
        let f = spectral_cos(2.0 * PI, 1.0, 8);
        assert_abs_diff_eq!(f.coeffs[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn sin_norm_approaches_parseval_limit() {
        let f = spectral_sin(10.0 * PI, 1.0, 1024);
        let norm_sq: f64 = f.coeffs.iter().map(|c| c * c).sum();
        assert!((norm_sq - 0.5).abs() < 1e-3);
    }

    #[test]
    fn white_noise_zero_sigma_is_zero_vector() {
        let v = spectral_white_noise(0.0, 1.0, 32, 7, 0);
        assert!(v.coeffs.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn white_noise_streams_are_reproducible_and_distinct() {
        let a = spectral_white_noise(0.01, 1.0, 64, 42, 3);
        let b = spectral_white_noise(0.01, 1.0, 64, 42, 3);
        let c = spectral_white_noise(0.01, 1.0, 64, 42, 4);
        assert_eq!(a.coeffs, b.coeffs);
        assert_ne!(a.coeffs, c.coeffs);
    }

    #[test]
    fn combine_matches_hand_sum() {
        let u = spectral_sin(10.0 * PI, 1.0, 16);
        let v = spectral_cos(6.0 * PI, 1.0, 16);
        let w = combine(&[(1.0, &u), (0.5, &v)]).unwrap();
        for i in 0..16 {
            assert_abs_diff_eq!(w.coeffs[i], u.coeffs[i] + 0.5 * v.coeffs[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn combine_rejects_shape_mismatch() {
        let u = spectral_sin(10.0 * PI, 1.0, 16);
        let v = spectral_sin(10.0 * PI, 1.0, 32);
        assert!(combine(&[(1.0, &u), (1.0, &v)]).is_err());
    }

    #[test]
    fn deterministic_noise_norm_matches_reported_values() {
        // ||0.2 (V1 + V2 + V3)|| for the 78/95/112 pi mixture.
        for (len, expected) in [(128, 0.244825), (256, 0.245471), (512, 0.245497), (1024, 0.245500)] {
            let v1 = spectral_sin(78.0 * PI, 1.0, len);
            let v2 = spectral_cos(95.0 * PI, 1.0, len);
            let v3 = spectral_sin(112.0 * PI, 1.0, len);
            let v = combine(&[(0.2, &v1), (0.2, &v2), (0.2, &v3)]).unwrap();
            assert!(
                (v.norm() - expected).abs() < 5e-6,
                "L={len}: got {}, expected {expected}",
                v.norm()
            );
        }
    }
}
