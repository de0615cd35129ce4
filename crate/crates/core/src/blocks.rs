//! Truncated operator matrices of the elementary blocks over the cosine
//! basis: derivative `P`, integral `P^-1`, proportional gain with an
//! indicator weight `A`, and pure time shift `S` (natural extension, plus
//! the zero-extension variants `S+`/`S-`).
//!
//! All matrices are built dense and materialized once; at the truncation
//! orders used here (`L <= 1024`) a matrix is at most 8 MB.

use nalgebra::DMatrix;
use std::f64::consts::PI;

use crate::basis::unclamped_eval;
use crate::error::{Result, SpectralError};
use crate::quad;

/// Identifies which elementary block a matrix represents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockKind {
    Derivative,
    Integral,
    /// Proportional block with gain equal to the indicator of `[0, c]`.
    IndicatorGain(f64),
    /// Pure time shift with naturally extended basis functions.
    ShiftNatural(f64),
    /// Pure time shift, zero-extended basis, `tau > 0`.
    ShiftZeroPos(f64),
    /// Pure time shift, zero-extended basis, `tau < 0`.
    ShiftZeroNeg(f64),
    Identity,
    Composite,
}

/// Truncated two-dimensional non-stationary transfer function of a block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    pub data: DMatrix<f64>,
    pub horizon: f64,
    pub kind: BlockKind,
}

impl BlockMatrix {
    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn identity(horizon: f64, len: usize) -> Self {
        Self { data: DMatrix::identity(len, len), horizon, kind: BlockKind::Identity }
    }

    /// Derivative block matrix `P`.
    pub fn derivative(horizon: f64, len: usize) -> Self {
        assert!(horizon > 0.0 && len >= 1);
        let t = horizon;
        let data = DMatrix::from_fn(len, len, |i, j| match (i, j) {
            (0, 0) => 1.0 / t,
            (0, j) => neg_pow(j) * 2f64.sqrt() / t,
            (_, 0) => 2f64.sqrt() / t,
            (i, j) if i == j => 2.0 / t,
            (i, j) => {
                let (fi, fj) = (i as f64, j as f64);
                2.0 * (fi * fi - neg_pow(i + j) * fj * fj) / (t * (fi * fi - fj * fj))
            }
        });
        Self { data, horizon, kind: BlockKind::Derivative }
    }

    /// Integral block matrix `P^-1`.
    pub fn integral(horizon: f64, len: usize) -> Self {
        assert!(horizon > 0.0 && len >= 1);
        let t = horizon;
        let data = DMatrix::from_fn(len, len, |i, j| match (i, j) {
            (0, 0) => t / 2.0,
            (0, j) => 2f64.sqrt() * t * (1.0 - neg_pow(j)) / ((j * j) as f64 * PI * PI),
            (i, 0) => -(2f64.sqrt() * t * (1.0 - neg_pow(i)) / ((i * i) as f64 * PI * PI)),
            (i, j) if i == j => 0.0,
            (i, j) => {
                let (fi, fj) = (i as f64, j as f64);
                2.0 * t * (neg_pow(i + j) - 1.0) / ((fi * fi - fj * fj) * PI * PI)
            }
        });
        Self { data, horizon, kind: BlockKind::Integral }
    }

    /// Proportional block with gain equal to the indicator of `[0, c]`.
    ///
    /// The cut point is an explicit parameter; the experiment pipeline
    /// passes `c = T - tau_phi` to weight errors on the comparison segment.
    pub fn indicator_gain(horizon: f64, len: usize, cut: f64) -> Result<Self> {
        assert!(horizon > 0.0 && len >= 1);
        if !(0.0..=horizon).contains(&cut) {
            return Err(SpectralError::InvalidParameter(format!(
                "indicator cut point {cut} outside [0, {horizon}]"
            )));
        }
        let t = horizon;
        let mut data = DMatrix::zeros(len, len);
        for i in 0..len {
            for j in 0..=i {
                let v = match (i, j) {
                    (0, 0) => cut / t,
                    (i, 0) => {
                        let fi = i as f64;
                        2f64.sqrt() / (fi * PI) * (fi * PI * cut / t).sin()
                    }
                    (i, j) if i == j => {
                        let fi = i as f64;
                        cut / t + (2.0 * fi * PI * cut / t).sin() / (2.0 * fi * PI)
                    }
                    (i, j) => {
                        let (fi, fj) = (i as f64, j as f64);
                        let (si, ci) = (fi * PI * cut / t).sin_cos();
                        let (sj, cj) = (fj * PI * cut / t).sin_cos();
                        2.0 / ((fi * fi - fj * fj) * PI) * (fi * si * cj - fj * ci * sj)
                    }
                };
                data[(i, j)] = v;
                data[(j, i)] = v;
            }
        }
        Ok(Self { data, horizon, kind: BlockKind::IndicatorGain(cut) })
    }

    /// Pure time shift by `tau` with naturally extended basis functions.
    ///
    /// `tau > 0` is a time advance, `tau < 0` a delay; the closed form is
    /// valid for both signs.
    pub fn shift_natural(horizon: f64, len: usize, tau: f64) -> Result<Self> {
        assert!(horizon > 0.0 && len >= 1);
        if tau.abs() >= horizon {
            return Err(SpectralError::InvalidParameter(format!(
                "shift {tau} must satisfy |tau| < T = {horizon}"
            )));
        }
        let t = horizon;
        let data = DMatrix::from_fn(len, len, |i, j| match (i, j) {
            (0, 0) => 1.0,
            (0, j) => {
                let fj = j as f64;
                2f64.sqrt() * (neg_pow(j) - 1.0) / (fj * PI) * (fj * PI * tau / t).sin()
            }
            (_, 0) => 0.0,
            (i, j) if i == j => (i as f64 * PI * tau / t).cos(),
            (i, j) => {
                let (fi, fj) = (i as f64, j as f64);
                2.0 * fj * (1.0 - neg_pow(i + j)) / ((fi * fi - fj * fj) * PI)
                    * (fj * PI * tau / t).sin()
            }
        });
        Ok(Self { data, horizon, kind: BlockKind::ShiftNatural(tau) })
    }

    /// Pure time shift by `tau` with zero-extended basis functions.
    ///
    /// Rejects `tau = 0`; the caller should use the identity there.
    pub fn shift_zero_ext(horizon: f64, len: usize, tau: f64) -> Result<Self> {
        assert!(horizon > 0.0 && len >= 1);
        if tau == 0.0 {
            return Err(SpectralError::InvalidParameter(
                "zero-extension shift with tau = 0; use the identity".into(),
            ));
        }
        if tau.abs() >= horizon {
            return Err(SpectralError::InvalidParameter(format!(
                "shift {tau} must satisfy 0 < |tau| < T = {horizon}"
            )));
        }
        let t = horizon;
        let data = if tau > 0.0 {
            DMatrix::from_fn(len, len, |i, j| match (i, j) {
                (0, 0) => (t - tau) / t,
                (0, j) => {
                    let fj = j as f64;
                    -(2f64.sqrt() / (fj * PI)) * (fj * PI * tau / t).sin()
                }
                (i, 0) => {
                    let fi = i as f64;
                    2f64.sqrt() / (fi * PI) * (fi * PI * (t - tau) / t).sin()
                }
                (i, j) if i == j => {
                    let fi = i as f64;
                    (t - tau) / t * (fi * PI * tau / t).cos()
                        - (fi * PI * tau / t).sin() / (fi * PI)
                }
                (i, j) => {
                    let (fi, fj) = (i as f64, j as f64);
                    2.0 / ((fi * fi - fj * fj) * PI)
                        * (fj * (fj * PI * tau / t).sin()
                            - fi * neg_pow(i + j) * (fi * PI * tau / t).sin())
                }
            })
        } else {
            DMatrix::from_fn(len, len, |i, j| match (i, j) {
                (0, 0) => (t + tau) / t,
                (0, j) => {
                    let fj = j as f64;
                    2f64.sqrt() / (fj * PI) * (fj * PI * (t + tau) / t).sin()
                }
                (i, 0) => {
                    let fi = i as f64;
                    2f64.sqrt() / (fi * PI) * (fi * PI * tau / t).sin()
                }
                (i, j) if i == j => {
                    let fi = i as f64;
                    (t + tau) / t * (fi * PI * tau / t).cos()
                        + (fi * PI * tau / t).sin() / (fi * PI)
                }
                (i, j) => {
                    let (fi, fj) = (i as f64, j as f64);
                    2.0 / ((fi * fi - fj * fj) * PI)
                        * (fi * (fi * PI * tau / t).sin()
                            - fj * neg_pow(i + j) * (fj * PI * tau / t).sin())
                }
            })
        };
        let kind =
            if tau > 0.0 { BlockKind::ShiftZeroPos(tau) } else { BlockKind::ShiftZeroNeg(tau) };
        Ok(Self { data, horizon, kind })
    }
}

fn neg_pow(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Numerical quadrature of the defining integral for a single matrix
/// element, to absolute accuracy 1e-10. Independent of the closed forms
/// above; this is the verification oracle.
pub fn matrix_element_oracle(kind: BlockKind, horizon: f64, i: usize, j: usize) -> Result<f64> {
    let t = horizon;
    let initial = (i + j + 8).max(8);
    let fail = SpectralError::QuadratureNonConvergence { index: i * 10_000 + j };
    match kind {
        BlockKind::Derivative => {
            // P_ij = q(i,0) q(j,0) + int q(i,t) q'(j,t) dt
            let boundary = unclamped_eval(t, i, 0.0) * unclamped_eval(t, j, 0.0);
            let integrand = move |x: f64| unclamped_eval(t, i, x) * basis_derivative(t, j, x);
            let integral = quad::adaptive(&integrand, 0.0, t, 1e-11, initial).ok_or(fail)?;
            Ok(boundary + integral)
        }
        BlockKind::Integral => {
            // Inner antiderivative of q(j, .) from 0 is analytic.
            let integrand = move |x: f64| unclamped_eval(t, i, x) * basis_antiderivative(t, j, x);
            quad::adaptive(&integrand, 0.0, t, 1e-11, initial).ok_or(fail)
        }
        BlockKind::IndicatorGain(cut) => {
            if cut == 0.0 {
                return Ok(0.0);
            }
            let integrand = move |x: f64| unclamped_eval(t, i, x) * unclamped_eval(t, j, x);
            quad::adaptive(&integrand, 0.0, cut, 1e-11, initial).ok_or(fail)
        }
        BlockKind::ShiftNatural(tau) => {
            let integrand = move |x: f64| unclamped_eval(t, i, x) * unclamped_eval(t, j, x + tau);
            quad::adaptive(&integrand, 0.0, t, 1e-11, initial).ok_or(fail)
        }
        BlockKind::ShiftZeroPos(tau) | BlockKind::ShiftZeroNeg(tau) => {
            // Integrand vanishes where t + tau leaves the segment.
            let (lo, hi) = if tau > 0.0 { (0.0, t - tau) } else { (-tau, t) };
            if hi <= lo {
                return Ok(0.0);
            }
            let integrand = move |x: f64| unclamped_eval(t, i, x) * unclamped_eval(t, j, x + tau);
            quad::adaptive(&integrand, lo, hi, 1e-11, initial).ok_or(fail)
        }
        BlockKind::Identity => Ok(if i == j { 1.0 } else { 0.0 }),
        BlockKind::Composite => Err(SpectralError::InvalidParameter(
            "no defining integral for composite matrices".into(),
        )),
    }
}

fn basis_derivative(horizon: f64, j: usize, t: f64) -> f64 {
    if j == 0 {
        0.0
    } else {
        let w = j as f64 * PI / horizon;
        -(2.0 / horizon).sqrt() * w * (w * t).sin()
    }
}

fn basis_antiderivative(horizon: f64, j: usize, t: f64) -> f64 {
    if j == 0 {
        t / horizon.sqrt()
    } else {
        let w = j as f64 * PI / horizon;
        (2.0 / horizon).sqrt() * (w * t).sin() / w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSpec;
    use crate::signals::spectral_cos;
    use approx::assert_abs_diff_eq;

    #[test]
    fn derivative_matrix_known_entries() {
        let p = BlockMatrix::derivative(1.0, 4);
        assert_abs_diff_eq!(p.data[(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.data[(0, 1)], -2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(p.data[(1, 0)], 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(p.data[(2, 1)], 10.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn integral_matrix_known_entries() {
        let pinv = BlockMatrix::integral(1.0, 4);
        assert_abs_diff_eq!(pinv.data[(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(pinv.data[(1, 1)], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pinv.data[(0, 1)], 2.0 * 2f64.sqrt() / (PI * PI), epsilon = 1e-14);
    }

    #[test]
    fn indicator_gain_limits() {
        let full = BlockMatrix::indicator_gain(1.0, 16, 1.0).unwrap();
        let id = DMatrix::<f64>::identity(16, 16);
        assert!((&full.data - &id).abs().max() < 1e-12);
        let empty = BlockMatrix::indicator_gain(1.0, 16, 0.0).unwrap();
        assert_eq!(empty.data.abs().max(), 0.0);
    }

    #[test]
    fn indicator_gain_half_cut_entries() {
        let a = BlockMatrix::indicator_gain(1.0, 4, 0.5).unwrap();
        assert_abs_diff_eq!(a.data[(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a.data[(0, 1)], 2f64.sqrt() / PI, epsilon = 1e-14);
        // Symmetric by construction.
        assert_eq!(a.data, a.data.transpose());
    }

    #[test]
    fn indicator_gain_rejects_out_of_range_cut() {
        assert!(BlockMatrix::indicator_gain(1.0, 4, 1.5).is_err());
        assert!(BlockMatrix::indicator_gain(1.0, 4, -0.1).is_err());
    }

    #[test]
    fn shift_natural_zero_tau_is_identity() {
        let s = BlockMatrix::shift_natural(1.0, 16, 0.0).unwrap();
        let id = DMatrix::<f64>::identity(16, 16);
        assert_eq!(s.data, id);
    }

    #[test]
    fn shift_natural_known_entries() {
        let s = BlockMatrix::shift_natural(1.0, 4, 0.1).unwrap();
        assert_abs_diff_eq!(s.data[(1, 1)], (0.1 * PI).cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.data[(2, 1)], 4.0 * (0.1 * PI).sin() / (3.0 * PI), epsilon = 1e-14);
    }

    #[test]
    fn shift_natural_rejects_large_tau() {
        assert!(BlockMatrix::shift_natural(1.0, 4, 1.0).is_err());
        assert!(BlockMatrix::shift_natural(1.0, 4, -1.2).is_err());
    }

    #[test]
    fn shift_zero_ext_known_entries() {
        let sp = BlockMatrix::shift_zero_ext(1.0, 4, 0.1).unwrap();
        assert_abs_diff_eq!(sp.data[(0, 0)], 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(
            sp.data[(1, 1)],
            0.9 * (0.1 * PI).cos() - (0.1 * PI).sin() / PI,
            epsilon = 1e-14
        );
        let sm = BlockMatrix::shift_zero_ext(1.0, 4, -0.1).unwrap();
        assert_abs_diff_eq!(sm.data[(0, 0)], 0.9, epsilon = 1e-15);
    }

    #[test]
    fn shift_zero_ext_rejects_zero_and_large_tau() {
        assert!(BlockMatrix::shift_zero_ext(1.0, 4, 0.0).is_err());
        assert!(BlockMatrix::shift_zero_ext(1.0, 4, 1.5).is_err());
    }

    #[test]
    fn oracle_spot_values() {
        assert_abs_diff_eq!(
            matrix_element_oracle(BlockKind::Derivative, 1.0, 0, 0).unwrap(),
            1.0,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            matrix_element_oracle(BlockKind::Integral, 1.0, 1, 1).unwrap(),
            0.0,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            matrix_element_oracle(BlockKind::ShiftNatural(0.1), 1.0, 2, 2).unwrap(),
            (0.2 * PI).cos(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn closed_forms_agree_with_oracle() {
        let t = 1.0;
        let n = 12;
        let cases: Vec<(BlockKind, BlockMatrix)> = vec![
            (BlockKind::Derivative, BlockMatrix::derivative(t, n)),
            (BlockKind::Integral, BlockMatrix::integral(t, n)),
            (BlockKind::IndicatorGain(0.35), BlockMatrix::indicator_gain(t, n, 0.35).unwrap()),
            (BlockKind::ShiftNatural(0.07), BlockMatrix::shift_natural(t, n, 0.07).unwrap()),
            (BlockKind::ShiftZeroPos(0.07), BlockMatrix::shift_zero_ext(t, n, 0.07).unwrap()),
            (BlockKind::ShiftZeroNeg(-0.07), BlockMatrix::shift_zero_ext(t, n, -0.07).unwrap()),
        ];
        for (kind, m) in cases {
            for i in 0..n {
                for j in 0..n {
                    let o = matrix_element_oracle(kind, t, i, j).unwrap();
                    assert!(
                        (m.data[(i, j)] - o).abs() < 1e-8,
                        "{kind:?} ({i},{j}): closed {} vs oracle {o}",
                        m.data[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn derivative_and_integral_are_near_inverse_on_leading_block() {
        let len = 256;
        let p = BlockMatrix::derivative(1.0, len);
        let pinv = BlockMatrix::integral(1.0, len);
        let prod = &p.data * &pinv.data;
        let half = len / 2;
        let mut max_err = 0.0f64;
        for i in 0..half {
            for j in 0..half {
                let expected = if i == j { 1.0 } else { 0.0 };
                max_err = max_err.max((prod[(i, j)] - expected).abs());
            }
        }
        assert!(max_err < 1e-2, "leading-block deviation {max_err}");
    }

    #[test]
    fn shift_acts_on_bandlimited_signal() {
        let (t, len, tau) = (1.0, 512, 0.05);
        let f = spectral_cos(6.0 * PI, t, len);
        let s = BlockMatrix::shift_natural(t, len, tau).unwrap();
        let shifted = &s.data * nalgebra::DVector::from_column_slice(&f.coeffs);
        let spec = BasisSpec::new(t, len);
        let grid: Vec<f64> = (0..2000).map(|k| (t - tau) * k as f64 / 1999.0).collect();
        let samples = spec.reconstruct(shifted.as_slice(), &grid).unwrap();
        let mut err_sq = 0.0;
        for (s_val, tt) in samples.iter().zip(grid.iter()) {
            let d = s_val - (6.0 * PI * (tt + tau)).cos();
            err_sq += d * d;
        }
        let l2 = (err_sq * (t - tau) / grid.len() as f64).sqrt();
        assert!(l2 < 1e-3, "shift-action L2 error {l2}");
    }
}
