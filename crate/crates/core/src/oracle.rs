//! Time-domain cross-validation oracle.
//!
//! Rebuilds each filter as an ordinary differential equation in
//! controllable canonical form and integrates it with a fixed-step
//! classical Runge-Kutta scheme. Apart from the pole set itself, nothing
//! is shared with the spectral pipeline, so agreement between the two is
//! meaningful evidence.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::basis::BasisSpec;
use crate::error::{Result, SpectralError};
use crate::filters::FilterDesign;
use crate::signals::SpectralVec;

/// Integration blows up past this state norm.
const BLOWUP_NORM: f64 = 1e12;

/// Relative imaginary residue allowed when collapsing the complex pole
/// product to real polynomial coefficients.
const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// Expands `prod_k (s - p_k)` into monic real coefficients
/// `[a_0, ..., a_{n-1}, 1]`, low order first.
pub fn poly_from_poles(poles: &[Complex64]) -> Result<Vec<f64>> {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); poles.len() + 1];
    coeffs[0] = Complex64::new(1.0, 0.0);
    let mut degree = 0usize;
    for p in poles {
        // Multiply the accumulated polynomial by (s - p).
        for k in (0..=degree).rev() {
            let c = coeffs[k];
            coeffs[k + 1] += c;
            coeffs[k] = -p * c;
        }
        degree += 1;
    }
    let scale = coeffs.iter().map(|c| c.norm()).fold(1.0f64, f64::max);
    let mut real = Vec::with_capacity(coeffs.len());
    for c in &coeffs {
        if c.im.abs() > IMAG_RESIDUE_TOL * scale {
            return Err(SpectralError::InvalidParameter(format!(
                "pole set is not closed under conjugation: imaginary residue {:.3e}",
                c.im
            )));
        }
        real.push(c.re);
    }
    Ok(real)
}

/// `dx/dt = A x + b u(t)`, `y = c . x` in controllable canonical form.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
}

impl StateSpace {
    /// Builds the canonical realization of an all-pole low-pass design:
    /// `H(s) = gain * cutoff^n / prod(s - cutoff * s_k)`.
    pub fn from_design(design: &FilterDesign) -> Result<Self> {
        if design.kind != crate::filters::PassKind::LowPass {
            return Err(SpectralError::InvalidParameter(
                "the time-domain oracle models low-pass designs only".into(),
            ));
        }
        let cutoff = design.cutoff;
        let scaled: Vec<Complex64> =
            design.poles().iter().map(|p| p * cutoff).collect();
        let n = scaled.len();
        let denom = poly_from_poles(&scaled)?;
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n - 1 {
            a[(i, i + 1)] = 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = -denom[j];
        }
        let mut b = DVector::zeros(n);
        b[n - 1] = 1.0;
        let mut c = DVector::zeros(n);
        c[0] = design.gain() * cutoff.powi(n as i32);
        Ok(Self { a, b, c })
    }

    fn derivative(&self, state: &DVector<f64>, input: f64) -> DVector<f64> {
        &self.a * state + &self.b * input
    }
}

/// Integrates the state space from rest over `[0, horizon]` with the
/// classical fourth-order Runge-Kutta scheme and returns the output
/// samples `y(k h)` for `k = 0, ..., steps`.
pub fn integrate(
    system: &StateSpace,
    input: &dyn Fn(f64) -> f64,
    horizon: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    if steps == 0 || horizon <= 0.0 {
        return Err(SpectralError::InvalidParameter(
            "integration needs a positive horizon and at least one step".into(),
        ));
    }
    let h = horizon / steps as f64;
    let mut state = DVector::zeros(system.b.len());
    let mut out = Vec::with_capacity(steps + 1);
    out.push(system.c.dot(&state));
    for k in 0..steps {
        let t = k as f64 * h;
        let k1 = system.derivative(&state, input(t));
        let k2 = system.derivative(&(&state + &k1 * (0.5 * h)), input(t + 0.5 * h));
        let k3 = system.derivative(&(&state + &k2 * (0.5 * h)), input(t + 0.5 * h));
        let k4 = system.derivative(&(&state + &k3 * h), input(t + h));
        state += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if state.norm() > BLOWUP_NORM {
            return Err(SpectralError::IntegrationBlowup { t: t + h });
        }
        out.push(system.c.dot(&state));
    }
    Ok(out)
}

/// Runs a design through the time-domain oracle.
///
/// The step count is chosen so that `h <= 1e-4 * horizon`.
pub fn ode_filter(
    design: &FilterDesign,
    input: &dyn Fn(f64) -> f64,
    horizon: f64,
) -> Result<Vec<f64>> {
    let system = StateSpace::from_design(design)?;
    integrate(&system, input, horizon, 10_000)
}

/// L2 distance on `[0, horizon]` between the spectral-form output (given
/// by its coefficient vector) and the oracle's samples, by the composite
/// trapezoidal rule on the oracle grid.
pub fn cross_validate(
    design: &FilterDesign,
    input: &dyn Fn(f64) -> f64,
    spectral_output: &SpectralVec,
) -> Result<f64> {
    let horizon = spectral_output.horizon;
    let oracle = ode_filter(design, input, horizon)?;
    let steps = oracle.len() - 1;
    let grid: Vec<f64> =
        (0..=steps).map(|k| horizon * k as f64 / steps as f64).collect();
    let spec = BasisSpec::new(horizon, spectral_output.len());
    let reconstructed = spec.reconstruct(&spectral_output.coeffs, &grid)?;
    let h = horizon / steps as f64;
    let mut acc = 0.0;
    for k in 0..=steps {
        let d = reconstructed[k] - oracle[k];
        let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
        acc += w * d * d;
    }
    Ok((acc * h).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::{FilterFamily, PassKind};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn design(family: FilterFamily, n: usize, ripple: Option<f64>, cutoff: f64) -> FilterDesign {
        FilterDesign::new(family, n, ripple, cutoff, PassKind::LowPass).unwrap()
    }

    #[test]
    fn poly_expansion_matches_hand_result() {
        // (s + 1)(s + 2) = s^2 + 3s + 2.
        let poles = [Complex64::new(-1.0, 0.0), Complex64::new(-2.0, 0.0)];
        let c = poly_from_poles(&poles).unwrap();
        assert_abs_diff_eq!(c[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c[1], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c[2], 1.0, epsilon = 1e-14);
        // Conjugate pair (s - (-1 + 2i))(s - (-1 - 2i)) = s^2 + 2s + 5.
        let pair = [Complex64::new(-1.0, 2.0), Complex64::new(-1.0, -2.0)];
        let c = poly_from_poles(&pair).unwrap();
        assert_abs_diff_eq!(c[0], 5.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn poly_expansion_rejects_unbalanced_poles() {
        let poles = [Complex64::new(-1.0, 2.0)];
        assert!(poly_from_poles(&poles).is_err());
    }

    #[test]
    fn first_order_step_response_is_exponential() {
        // H(s) = 1/(s + 1): unit step response 1 - exp(-t).
        let d = design(FilterFamily::Butterworth, 1, None, 1.0);
        let sys = StateSpace::from_design(&d).unwrap();
        let out = integrate(&sys, &|_| 1.0, 5.0, 50_000).unwrap();
        for (k, y) in out.iter().enumerate() {
            let t = 5.0 * k as f64 / 50_000.0;
            assert!((y - (1.0 - (-t).exp())).abs() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn companion_eigenvalues_are_the_scaled_poles() {
        // Prototype scale: at large cutoffs the companion coefficients span
        // ten orders of magnitude and the eigensolver loses several digits.
        let d = design(FilterFamily::ChebyshevI, 5, Some(0.1), 1.0);
        let sys = StateSpace::from_design(&d).unwrap();
        let mut eigen: Vec<Complex64> = sys.a.complex_eigenvalues().iter().copied().collect();
        let mut expected: Vec<Complex64> =
            d.poles().iter().map(|p| p * d.cutoff).collect();
        let key = |z: &Complex64| (z.im, z.re);
        eigen.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        expected.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        for (e, x) in eigen.iter().zip(expected.iter()) {
            assert!((e - x).norm() < 1e-8 * x.norm(), "{e} vs {x}");
        }
    }

    #[test]
    fn dc_gain_is_unity_for_butterworth() {
        // Long constant input settles at the DC gain.
        let d = design(FilterFamily::Butterworth, 4, None, 40.0 * PI);
        let sys = StateSpace::from_design(&d).unwrap();
        let out = integrate(&sys, &|_| 1.0, 2.0, 20_000).unwrap();
        assert_abs_diff_eq!(*out.last().unwrap(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn step_halving_converges_at_fourth_order() {
        let d = design(FilterFamily::Butterworth, 3, None, 40.0 * PI);
        let sys = StateSpace::from_design(&d).unwrap();
        let input = |t: f64| (10.0 * PI * t).sin();
        let coarse = integrate(&sys, &input, 1.0, 10_000).unwrap();
        let fine = integrate(&sys, &input, 1.0, 20_000).unwrap();
        let gap = (coarse.last().unwrap() - fine.last().unwrap()).abs();
        assert!(gap < 1e-8, "step-halving gap {gap}");
    }

    #[test]
    fn unstable_system_triggers_blowup_error() {
        let sys = StateSpace {
            a: DMatrix::from_row_slice(1, 1, &[40.0]),
            b: DVector::from_row_slice(&[1.0]),
            c: DVector::from_row_slice(&[1.0]),
        };
        match integrate(&sys, &|_| 1.0, 2.0, 2_000) {
            Err(SpectralError::IntegrationBlowup { t }) => assert!(t > 0.0 && t <= 2.0),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn spectral_and_ode_outputs_agree() {
        use crate::modeling::{self, RunConfig, ShiftMode, Tone, Wave};
        let cfg = RunConfig {
            design: design(FilterFamily::Butterworth, 3, None, 40.0 * PI),
            horizon: 1.0,
            len: 512,
            signal: Tone { wave: Wave::Sin, omega: 10.0 * PI },
            noise: modeling::standard_deterministic_noise(),
            seed: 0,
            shift_mode: ShiftMode::Natural,
        };
        let u = cfg.signal.spectral(1.0, 512);
        let v = modeling::deterministic_noise(&cfg).unwrap();
        let g = crate::signals::combine(&[(1.0, &u), (1.0, &v)]).unwrap();
        let prep = cfg.design.ntf_factored().prepare(1.0, 512).unwrap();
        let x = modeling::apply_filter(&prep, &g).unwrap();
        let input = move |t: f64| {
            (10.0 * PI * t).sin()
                + 0.2 * ((78.0 * PI * t).sin() + (95.0 * PI * t).cos() + (112.0 * PI * t).sin())
        };
        let l2 = cross_validate(&cfg.design, &input, &x).unwrap();
        assert!(l2 < 1e-2, "L2 disagreement {l2}");
    }
}
