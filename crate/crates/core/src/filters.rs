//! Filter design: pole sets and gains for the Butterworth, Linkwitz-Riley,
//! and Chebyshev (Type I/II) families, transfer-function evaluation with
//! cutoff scaling, phase and group delay, and the factored operator form of
//! the truncated transfer matrix over `P` (low-pass) or `P^-1` (high-pass).

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::blocks::BlockMatrix;
use crate::error::{Result, SpectralError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterFamily {
    Butterworth,
    LinkwitzRiley,
    ChebyshevI,
    ChebyshevII,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PassKind {
    #[default]
    LowPass,
    HighPass,
}

/// A validated filter design: family, order, ripple (Chebyshev only),
/// cutoff frequency, and pass kind, together with the derived prototype
/// poles and numerator constant.
#[derive(Debug, Clone)]
pub struct FilterDesign {
    pub family: FilterFamily,
    pub order: usize,
    pub ripple: Option<f64>,
    pub cutoff: f64,
    pub kind: PassKind,
    poles: Vec<Complex64>,
    gain: f64,
}

impl FilterDesign {
    pub fn new(
        family: FilterFamily,
        order: usize,
        ripple: Option<f64>,
        cutoff: f64,
        kind: PassKind,
    ) -> Result<Self> {
        if order == 0 {
            return Err(SpectralError::InvalidParameter("filter order must be positive".into()));
        }
        if cutoff <= 0.0 {
            return Err(SpectralError::InvalidParameter("cutoff frequency must be positive".into()));
        }
        let (poles, gain) = match family {
            FilterFamily::Butterworth => (butterworth_poles(order), 1.0),
            FilterFamily::LinkwitzRiley => {
                if order % 2 != 0 {
                    return Err(SpectralError::InvalidParameter(
                        "Linkwitz-Riley order must be even".into(),
                    ));
                }
                // Squared Butterworth prototype of half the order.
                let half = butterworth_poles(order / 2);
                let mut poles = half.clone();
                poles.extend_from_slice(&half);
                (poles, 1.0)
            }
            FilterFamily::ChebyshevI => {
                let eps = positive_ripple(ripple)?;
                let (poles, gamma) = chebyshev1_poles(order, eps);
                (poles, 1.0 / gamma)
            }
            FilterFamily::ChebyshevII => {
                let eps = positive_ripple(ripple)?;
                let (poles, gamma) = chebyshev2_poles(order, eps);
                (poles, gamma)
            }
        };
        debug_assert!(poles.iter().all(|s| s.re < 0.0), "unstable prototype pole");
        Ok(Self { family, order, ripple, cutoff, kind, poles, gain })
    }

    /// Prototype (unit-cutoff) poles. For Linkwitz-Riley each Butterworth
    /// pole of half the order appears twice.
    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    /// Numerator constant of the prototype transfer function.
    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// Constant multiplying the factored denominator (`gamma` for Chebyshev
    /// Type I, one otherwise); used when visualizing the characteristic
    /// polynomial.
    pub fn denominator_constant(&self) -> f64 {
        match self.family {
            FilterFamily::ChebyshevI => chebyshev_gamma(self.order, self.ripple.unwrap()),
            _ => 1.0,
        }
    }

    /// Chebyshev auxiliary constants `(alpha, beta, lambda, gamma)`.
    pub fn chebyshev_params(&self) -> Option<(f64, f64, f64, f64)> {
        match self.family {
            FilterFamily::ChebyshevI | FilterFamily::ChebyshevII => {
                let eps = self.ripple.unwrap();
                let lambda = (1.0 / self.order as f64) * (1.0 / eps).asinh();
                Some((lambda.sinh(), lambda.cosh(), lambda, chebyshev_gamma(self.order, eps)))
            }
            _ => None,
        }
    }

    /// Maps a point of the scaled domain into the prototype domain:
    /// `s / cutoff` for low-pass, `cutoff / s` for high-pass.
    fn prototype_point(&self, s: Complex64) -> Complex64 {
        match self.kind {
            PassKind::LowPass => s / self.cutoff,
            PassKind::HighPass => Complex64::new(self.cutoff, 0.0) / s,
        }
    }

    /// Evaluates the cutoff-scaled transfer function at `s`.
    pub fn transfer_eval(&self, s: Complex64) -> Result<Complex64> {
        let z = self.prototype_point(s);
        let mut denom = Complex64::new(1.0, 0.0);
        for p in &self.poles {
            denom *= z - p;
        }
        if denom.norm() < 1e-30 {
            return Err(SpectralError::PoleProximity);
        }
        Ok(Complex64::new(self.gain, 0.0) / denom)
    }

    /// Phase delay `-arg H(i omega) / omega` at the signal frequency.
    ///
    /// The argument is accumulated factor by factor: each pole contributes
    /// `arg(z - s_k)`, which stays in `(-pi/2, pi/2)` because the stable
    /// poles keep the real part of `z - s_k` positive. This avoids the
    /// `n pi` ambiguities of a wrapped arctangent of the full product.
    pub fn phase_delay(&self, omega: f64) -> Result<f64> {
        if omega <= 0.0 {
            return Err(SpectralError::InvalidParameter("frequency must be positive".into()));
        }
        let z = self.prototype_point(Complex64::new(0.0, omega));
        let mut total = 0.0;
        for p in &self.poles {
            let d = z - p;
            if d.norm() < 1e-30 {
                return Err(SpectralError::PoleProximity);
            }
            total += d.arg();
        }
        Ok(total / omega)
    }

    /// Group delay `-d arg H(i omega) / d omega`, by analytic per-pole
    /// differentiation.
    pub fn group_delay(&self, omega: f64) -> Result<f64> {
        if omega <= 0.0 {
            return Err(SpectralError::InvalidParameter("frequency must be positive".into()));
        }
        let z = self.prototype_point(Complex64::new(0.0, omega));
        let dz = match self.kind {
            PassKind::LowPass => Complex64::new(0.0, 1.0 / self.cutoff),
            // d/domega of cutoff / (i omega).
            PassKind::HighPass => Complex64::new(0.0, self.cutoff / (omega * omega)),
        };
        let mut total = 0.0;
        for p in &self.poles {
            let d = z - p;
            if d.norm() < 1e-30 {
                return Err(SpectralError::PoleProximity);
            }
            total += (dz / d).im;
        }
        Ok(total)
    }

    /// Emits the real linear/quadratic factor list of the truncated
    /// transfer matrix, with operand `P / cutoff` (low-pass) or
    /// `cutoff * P^-1` (high-pass).
    pub fn ntf_factored(&self) -> FactoredOperator {
        let (proto_order, repeats) = match self.family {
            FilterFamily::LinkwitzRiley => (self.order / 2, 2),
            _ => (self.order, 1),
        };
        let prototype = match self.family {
            FilterFamily::Butterworth | FilterFamily::LinkwitzRiley => {
                real_factors(proto_order, 1.0, 1.0)
            }
            FilterFamily::ChebyshevI => {
                let (alpha, beta, _, _) = self.chebyshev_params().unwrap();
                real_factors(proto_order, alpha, beta)
            }
            FilterFamily::ChebyshevII => {
                let (alpha, beta, _, _) = self.chebyshev_params().unwrap();
                // Each Type-I factor inverted: divide by rho_k^2, real pole 1/alpha.
                let mut factors = real_factors(proto_order, alpha, beta);
                for f in &mut factors {
                    match f {
                        Factor::Quadratic { a, b } => {
                            let rho_sq = *b;
                            *a /= rho_sq;
                            *b = 1.0 / rho_sq;
                        }
                        Factor::Linear { a } => *a = 1.0 / *a,
                    }
                }
                factors
            }
        };
        let mut factors = Vec::with_capacity(prototype.len() * repeats);
        for _ in 0..repeats {
            factors.extend_from_slice(&prototype);
        }
        let operand = match self.kind {
            PassKind::LowPass => {
                Operand { matrix: OperandMatrix::Derivative, scale: 1.0 / self.cutoff }
            }
            PassKind::HighPass => Operand { matrix: OperandMatrix::Integral, scale: self.cutoff },
        };
        FactoredOperator { gain: self.gain, factors, operand }
    }
}

fn positive_ripple(ripple: Option<f64>) -> Result<f64> {
    match ripple {
        Some(eps) if eps > 0.0 => Ok(eps),
        _ => Err(SpectralError::InvalidParameter(
            "Chebyshev designs need a positive ripple factor".into(),
        )),
    }
}

/// `A_k = sin((2k - 1) pi / (2n))` for `k = 1..=n`.
fn pole_sine(n: usize, k: usize) -> f64 {
    ((-PI + 2.0 * PI * k as f64) / (2.0 * n as f64)).sin()
}

fn pole_cosine(n: usize, k: usize) -> f64 {
    ((-PI + 2.0 * PI * k as f64) / (2.0 * n as f64)).cos()
}

/// Butterworth prototype poles: the upper-half-plane roots of
/// `z^{2n} = -1` rotated by `i`, i.e. `s_k = -A_k + i B_k` on the unit
/// circle, all in the left half-plane.
pub fn butterworth_poles(n: usize) -> Vec<Complex64> {
    (1..=n).map(|k| Complex64::new(-pole_sine(n, k), pole_cosine(n, k))).collect()
}

fn chebyshev_gamma(n: usize, eps: f64) -> f64 {
    2f64.powi(n as i32 - 1) * eps
}

/// Chebyshev Type I poles and normalizing coefficient `gamma = 2^{n-1} eps`.
///
/// Poles lie on the ellipse with semi-axes `cosh(lambda)` (real axis) and
/// `sinh(lambda)` (imaginary axis? the other way around after the `i`
/// rotation): `s_k = -alpha A_k + i beta B_k`.
pub fn chebyshev1_poles(n: usize, eps: f64) -> (Vec<Complex64>, f64) {
    assert!(n >= 1 && eps > 0.0);
    let lambda = (1.0 / n as f64) * (1.0 / eps).asinh();
    let (alpha, beta) = (lambda.sinh(), lambda.cosh());
    let poles = (1..=n)
        .map(|k| Complex64::new(-alpha * pole_sine(n, k), beta * pole_cosine(n, k)))
        .collect();
    (poles, chebyshev_gamma(n, eps))
}

/// Chebyshev Type II poles (reciprocals of the Type I poles) and the same
/// normalizing coefficient, used here as the numerator constant.
pub fn chebyshev2_poles(n: usize, eps: f64) -> (Vec<Complex64>, f64) {
    let (ci, gamma) = chebyshev1_poles(n, eps);
    (ci.into_iter().map(|s| s.inv()).collect(), gamma)
}

/// Chebyshev polynomial of the first kind at a complex argument, by the
/// three-term recurrence.
pub fn chebyshev_t(n: usize, z: Complex64) -> Complex64 {
    let mut t0 = Complex64::new(1.0, 0.0);
    let mut t1 = z;
    if n == 0 {
        return t0;
    }
    for _ in 2..=n {
        let t2 = 2.0 * z * t1 - t0;
        t0 = t1;
        t1 = t2;
    }
    t1
}

/// Builds the real factor list for an ellipse-scaled pole set
/// `s_k = -alpha A_k + i beta B_k`: quadratics `s^2 + 2 alpha A_k s +
/// rho_k^2` by ascending `k`, then the real factor `s + alpha` for odd
/// orders.
fn real_factors(n: usize, alpha: f64, beta: f64) -> Vec<Factor> {
    let mut factors = Vec::with_capacity(n.div_ceil(2));
    for k in 1..=n / 2 {
        let (a_k, b_k) = (pole_sine(n, k), pole_cosine(n, k));
        let rho_sq = (alpha * a_k).powi(2) + (beta * b_k).powi(2);
        factors.push(Factor::Quadratic { a: 2.0 * alpha * a_k, b: rho_sq });
    }
    if n % 2 == 1 {
        factors.push(Factor::Linear { a: alpha });
    }
    factors
}

/// A first- or second-degree real polynomial factor in the operand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Factor {
    /// `X + a E`
    Linear { a: f64 },
    /// `X^2 + a X + b E`
    Quadratic { a: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperandMatrix {
    Derivative,
    Integral,
}

/// The matrix substituted for the transfer-function variable: a scaled
/// derivative or integral block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Operand {
    pub matrix: OperandMatrix,
    pub scale: f64,
}

/// Lazily applied representation of the truncated transfer matrix `W`:
/// a scalar gain and an ordered list of denominator factors, each applied
/// by a linear solve.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredOperator {
    pub gain: f64,
    pub factors: Vec<Factor>,
    pub operand: Operand,
}

impl FactoredOperator {
    /// The identity operator (gain one, no factors).
    pub fn identity() -> Self {
        Self {
            gain: 1.0,
            factors: Vec::new(),
            operand: Operand { matrix: OperandMatrix::Derivative, scale: 1.0 },
        }
    }

    pub fn degree(&self) -> usize {
        self.factors
            .iter()
            .map(|f| match f {
                Factor::Linear { .. } => 1,
                Factor::Quadratic { .. } => 2,
            })
            .sum()
    }

    /// Materializes the operand matrix at truncation order `len`.
    pub fn operand_matrix(&self, horizon: f64, len: usize) -> DMatrix<f64> {
        let block = match self.operand.matrix {
            OperandMatrix::Derivative => BlockMatrix::derivative(horizon, len),
            OperandMatrix::Integral => BlockMatrix::integral(horizon, len),
        };
        block.data * self.operand.scale
    }

    /// Factorizes every denominator factor at truncation order `len`.
    pub fn prepare(&self, horizon: f64, len: usize) -> Result<PreparedOperator> {
        let m = self.operand_matrix(horizon, len);
        let needs_square = self.factors.iter().any(|f| matches!(f, Factor::Quadratic { .. }));
        let m_sq = if needs_square { Some(&m * &m) } else { None };
        let mut lus = Vec::with_capacity(self.factors.len());
        for (idx, factor) in self.factors.iter().enumerate() {
            let mat = match factor {
                Factor::Linear { a } => {
                    let mut f = m.clone();
                    for d in 0..len {
                        f[(d, d)] += a;
                    }
                    f
                }
                Factor::Quadratic { a, b } => {
                    let mut f = m_sq.as_ref().unwrap() + &m * *a;
                    for d in 0..len {
                        f[(d, d)] += b;
                    }
                    f
                }
            };
            let lu = mat.lu();
            if lu.determinant().abs() == 0.0 {
                return Err(SpectralError::SingularFactor { index: idx });
            }
            lus.push(lu);
        }
        Ok(PreparedOperator { gain: self.gain, lus, len })
    }
}

/// LU-factorized denominator factors of a [`FactoredOperator`], ready to
/// apply to spectral characteristics by sequential solves.
pub struct PreparedOperator {
    gain: f64,
    lus: Vec<LU<f64, Dyn, Dyn>>,
    len: usize,
}

impl PreparedOperator {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Applies `W` to a coefficient column: one linear solve per factor in
    /// the stored order, then the gain.
    pub fn apply(&self, input: &DVector<f64>) -> Result<DVector<f64>> {
        if input.len() != self.len {
            return Err(SpectralError::ShapeMismatch(format!(
                "operator of size {} applied to vector of length {}",
                self.len,
                input.len()
            )));
        }
        let mut x = input.clone();
        for (idx, lu) in self.lus.iter().enumerate() {
            x = lu.solve(&x).ok_or(SpectralError::SingularFactor { index: idx })?;
        }
        Ok(x * self.gain)
    }

    /// Explicit dense realization of `W`, for tests and dumps.
    pub fn materialize(&self) -> Result<DMatrix<f64>> {
        let mut x = DMatrix::identity(self.len, self.len);
        for (idx, lu) in self.lus.iter().enumerate() {
            x = lu.solve(&x).ok_or(SpectralError::SingularFactor { index: idx })?;
        }
        Ok(x * self.gain)
    }
}

/// Materializes `W` from the complex linear factorization
/// `gain * prod (X - s_k E)^{-1}`; the alternate route used to check the
/// real quadratic form.
pub fn ntf_materialize_complex(
    design: &FilterDesign,
    horizon: f64,
    len: usize,
) -> Result<DMatrix<f64>> {
    let op = design.ntf_factored();
    let m_real = op.operand_matrix(horizon, len);
    let m = m_real.map(|v| Complex64::new(v, 0.0));
    let mut x = DMatrix::<Complex64>::identity(len, len);
    for (idx, pole) in design.poles().iter().enumerate() {
        let mut f = m.clone();
        for d in 0..len {
            f[(d, d)] -= pole;
        }
        x = f.lu().solve(&x).ok_or(SpectralError::SingularFactor { index: idx })?;
    }
    x *= Complex64::new(design.gain(), 0.0);
    let scale = x.map(|v| v.norm()).max().max(1.0);
    let max_imag = x.map(|v| v.im.abs()).max();
    if max_imag > 1e-8 * scale {
        return Err(SpectralError::NegativeQuadraticForm(max_imag));
    }
    Ok(x.map(|v| v.re))
}
