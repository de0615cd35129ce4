//! End-to-end experiment pipeline: output `X = W G`, delay compensation
//! `X* = S W G`, the error metrics, and the Monte Carlo protocol for
//! random noise.

use nalgebra::{DMatrix, DVector};

use crate::blocks::BlockMatrix;
use crate::error::{Result, SpectralError};
use crate::filters::{FilterDesign, PreparedOperator};
use crate::signals::{self, SpectralVec};

/// Tolerance below which a negative quadratic-form value is treated as
/// roundoff and clamped to zero.
const QUADRATIC_FORM_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wave {
    Sin,
    Cos,
}

/// A pure tone `sin(omega t)` or `cos(omega t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tone {
    pub wave: Wave,
    pub omega: f64,
}

impl Tone {
    pub fn spectral(&self, horizon: f64, len: usize) -> SpectralVec {
        match self.wave {
            Wave::Sin => signals::spectral_sin(self.omega, horizon, len),
            Wave::Cos => signals::spectral_cos(self.omega, horizon, len),
        }
    }

    pub fn sample(&self, t: f64) -> f64 {
        match self.wave {
            Wave::Sin => (self.omega * t).sin(),
            Wave::Cos => (self.omega * t).cos(),
        }
    }
}

/// Noise added to the original signal before filtering.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    /// `sigma * sum of tones` (the reference 78/95/112 pi mixture by default).
    Deterministic { sigma: f64, tones: Vec<Tone> },
    /// `sigma * eta(t)` with standard Gaussian white noise `eta`.
    Random { sigma: f64, realizations: usize },
}

/// Which time-shift matrix compensates the phase delay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftMode {
    #[default]
    Natural,
    ZeroExt,
}

/// Everything needed for one experiment cell: a design, the segment and
/// truncation order, the original signal, the noise, and the RNG seed.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub design: FilterDesign,
    pub horizon: f64,
    pub len: usize,
    pub signal: Tone,
    pub noise: NoiseSpec,
    pub seed: u64,
    pub shift_mode: ShiftMode,
}

/// Monte Carlo estimates: mean and biased standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloStats {
    pub mean: f64,
    pub std_dev: f64,
}

/// Error metrics of one experiment cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// Filtering error on `[0, T - tau_phi]`.
    pub filtering_error: f64,
    /// A-priori noise error on the same segment (for random noise, the
    /// mean over the realizations).
    pub apriori_error: f64,
    /// Full-segment upper estimate `||V||`.
    pub apriori_upper: f64,
    pub phase_delay: f64,
    /// For random noise: statistics of the filtering error and of the
    /// a-priori upper estimate over the realizations.
    pub monte_carlo: Option<(MonteCarloStats, MonteCarloStats)>,
}

/// `X = W G`, applied factor by factor.
pub fn apply_filter(op: &PreparedOperator, input: &SpectralVec) -> Result<SpectralVec> {
    let g = DVector::from_column_slice(&input.coeffs);
    let x = op.apply(&g)?;
    Ok(SpectralVec::new(x.as_slice().to_vec(), input.horizon, "filter output"))
}

/// `X* = S X`.
pub fn compensate_delay(shift: &BlockMatrix, x: &SpectralVec) -> Result<SpectralVec> {
    if shift.len() != x.len() {
        return Err(SpectralError::ShapeMismatch(format!(
            "shift matrix of size {} applied to vector of length {}",
            shift.len(),
            x.len()
        )));
    }
    let v = &shift.data * DVector::from_column_slice(&x.coeffs);
    Ok(SpectralVec::new(v.as_slice().to_vec(), x.horizon, "delay-compensated output"))
}

fn quadratic_form(diff: &DVector<f64>, weight: &DMatrix<f64>) -> Result<f64> {
    let val = diff.dot(&(weight * diff));
    if val < -QUADRATIC_FORM_SLACK {
        return Err(SpectralError::NegativeQuadraticForm(val));
    }
    Ok(val.max(0.0).sqrt())
}

/// Filtering error `sqrt((X* - U)^T A (X* - U))`.
pub fn error_metric(
    x_star: &SpectralVec,
    original: &SpectralVec,
    weight: &BlockMatrix,
) -> Result<f64> {
    if x_star.len() != original.len() || x_star.len() != weight.len() {
        return Err(SpectralError::ShapeMismatch("error_metric operand sizes differ".into()));
    }
    let diff = DVector::from_iterator(
        x_star.len(),
        x_star.coeffs.iter().zip(original.coeffs.iter()).map(|(x, u)| x - u),
    );
    quadratic_form(&diff, &weight.data)
}

/// A-priori errors `(sqrt(V^T A V), sqrt(V^T V))`.
pub fn apriori_errors(noise: &SpectralVec, weight: &BlockMatrix) -> Result<(f64, f64)> {
    if noise.len() != weight.len() {
        return Err(SpectralError::ShapeMismatch("apriori_errors operand sizes differ".into()));
    }
    let v = DVector::from_column_slice(&noise.coeffs);
    Ok((quadratic_form(&v, &weight.data)?, noise.norm()))
}

/// Builds the delay-compensation shift for `tau` under the configured
/// extension mode; `tau = 0` is the identity in both modes.
pub fn compensation_shift(
    mode: ShiftMode,
    horizon: f64,
    len: usize,
    tau: f64,
) -> Result<BlockMatrix> {
    if tau == 0.0 {
        return Ok(BlockMatrix::identity(horizon, len));
    }
    match mode {
        ShiftMode::Natural => BlockMatrix::shift_natural(horizon, len, tau),
        ShiftMode::ZeroExt => BlockMatrix::shift_zero_ext(horizon, len, tau),
    }
}

/// The deterministic noise column of a config; errors if the noise is
/// random.
pub fn deterministic_noise(cfg: &RunConfig) -> Result<SpectralVec> {
    match &cfg.noise {
        NoiseSpec::Deterministic { sigma, tones } => {
            let parts: Vec<SpectralVec> =
                tones.iter().map(|t| t.spectral(cfg.horizon, cfg.len)).collect();
            let terms: Vec<(f64, &SpectralVec)> = parts.iter().map(|p| (*sigma, p)).collect();
            if terms.is_empty() {
                return Ok(SpectralVec::zeros(cfg.len, cfg.horizon, "empty noise"));
            }
            signals::combine(&terms)
        }
        NoiseSpec::Random { .. } => Err(SpectralError::InvalidParameter(
            "deterministic pipeline invoked with random noise".into(),
        )),
    }
}

/// Runs the full deterministic pipeline: `G = U + V`, `X* = S W G`, and
/// the three error metrics.
pub fn run_deterministic(cfg: &RunConfig) -> Result<ErrorReport> {
    let u = cfg.signal.spectral(cfg.horizon, cfg.len);
    let v = deterministic_noise(cfg)?;
    let g = signals::combine(&[(1.0, &u), (1.0, &v)])?;
    let prepared = cfg.design.ntf_factored().prepare(cfg.horizon, cfg.len)?;
    let x = apply_filter(&prepared, &g)?;
    let tau = cfg.design.phase_delay(cfg.signal.omega)?;
    let shift = compensation_shift(cfg.shift_mode, cfg.horizon, cfg.len, tau)?;
    let x_star = compensate_delay(&shift, &x)?;
    let weight = BlockMatrix::indicator_gain(cfg.horizon, cfg.len, cfg.horizon - tau)?;
    let filtering_error = error_metric(&x_star, &u, &weight)?;
    let (apriori_error, apriori_upper) = apriori_errors(&v, &weight)?;
    Ok(ErrorReport {
        filtering_error,
        apriori_error,
        apriori_upper,
        phase_delay: tau,
        monte_carlo: None,
    })
}

/// One Monte Carlo realization through the direct pipeline; the slow
/// reference for [`run_monte_carlo`]'s reduced evaluation.
pub fn monte_carlo_realization(cfg: &RunConfig, realization: u64) -> Result<(f64, f64)> {
    let sigma = match &cfg.noise {
        NoiseSpec::Random { sigma, .. } => *sigma,
        NoiseSpec::Deterministic { .. } => {
            return Err(SpectralError::InvalidParameter(
                "monte_carlo_realization needs random noise".into(),
            ))
        }
    };
    let u = cfg.signal.spectral(cfg.horizon, cfg.len);
    let v = signals::spectral_white_noise(sigma, cfg.horizon, cfg.len, cfg.seed, realization);
    let g = signals::combine(&[(1.0, &u), (1.0, &v)])?;
    let prepared = cfg.design.ntf_factored().prepare(cfg.horizon, cfg.len)?;
    let x = apply_filter(&prepared, &g)?;
    let tau = cfg.design.phase_delay(cfg.signal.omega)?;
    let shift = compensation_shift(cfg.shift_mode, cfg.horizon, cfg.len, tau)?;
    let x_star = compensate_delay(&shift, &x)?;
    let weight = BlockMatrix::indicator_gain(cfg.horizon, cfg.len, cfg.horizon - tau)?;
    Ok((error_metric(&x_star, &u, &weight)?, v.norm()))
}

/// Runs the Monte Carlo protocol over `M` seeded realizations.
///
/// The per-realization error reduces algebraically: with `B = sigma S W`,
/// `c = S W U - U`, and unit-normal columns `Q_j`,
/// `E_j^2 = Q_j^T (B^T A B) Q_j + (2 B^T A c) . Q_j + c^T A c`, so each
/// realization costs one matrix-vector product after a one-time setup.
/// Realizations are processed in index order; the reduction is ordered,
/// which keeps the report bit-identical for a fixed seed.
pub fn run_monte_carlo(cfg: &RunConfig) -> Result<ErrorReport> {
    let (sigma, m) = match &cfg.noise {
        NoiseSpec::Random { sigma, realizations } => (*sigma, *realizations),
        NoiseSpec::Deterministic { .. } => {
            return Err(SpectralError::InvalidParameter(
                "run_monte_carlo needs random noise".into(),
            ))
        }
    };
    if m == 0 {
        return Err(SpectralError::InvalidParameter("realization count must be >= 1".into()));
    }
    let len = cfg.len;
    let u = cfg.signal.spectral(cfg.horizon, len);
    let u_vec = DVector::from_column_slice(&u.coeffs);
    let prepared = cfg.design.ntf_factored().prepare(cfg.horizon, len)?;
    let w = prepared.materialize()?;
    let tau = cfg.design.phase_delay(cfg.signal.omega)?;
    let shift = compensation_shift(cfg.shift_mode, cfg.horizon, len, tau)?;
    let weight = BlockMatrix::indicator_gain(cfg.horizon, len, cfg.horizon - tau)?;

    let sw = &shift.data * &w;
    let offset = &sw * &u_vec - &u_vec; // c
    let b = sw * sigma;
    let a_b = &weight.data * &b;
    let quad = b.transpose() * &a_b; // K = B^T A B
    let linear = b.transpose() * (&weight.data * &offset) * 2.0; // 2 B^T A c
    let constant = offset.dot(&(&weight.data * &offset));

    const CHUNK: usize = 128;
    let mut errors = Vec::with_capacity(m);
    let mut aprioris = Vec::with_capacity(m);
    let mut uppers = Vec::with_capacity(m);
    let mut batch = DMatrix::zeros(len, CHUNK);
    let mut j = 0usize;
    while j < m {
        let cols = CHUNK.min(m - j);
        for c in 0..cols {
            let q = signals::spectral_white_noise(1.0, cfg.horizon, len, cfg.seed, (j + c) as u64);
            for (r, val) in q.coeffs.iter().enumerate() {
                batch[(r, c)] = *val;
            }
        }
        let q_block = batch.columns(0, cols);
        let kq = &quad * q_block;
        let aq = &weight.data * q_block;
        for c in 0..cols {
            let q_col = q_block.column(c);
            let sq = q_col.dot(&kq.column(c)) + linear.dot(&q_col) + constant;
            if sq < -QUADRATIC_FORM_SLACK {
                return Err(SpectralError::NegativeQuadraticForm(sq));
            }
            errors.push(sq.max(0.0).sqrt());
            let asq = q_col.dot(&aq.column(c));
            if asq < -QUADRATIC_FORM_SLACK {
                return Err(SpectralError::NegativeQuadraticForm(asq));
            }
            aprioris.push(sigma * asq.max(0.0).sqrt());
            uppers.push(sigma * q_col.norm());
        }
        j += cols;
    }

    let err_stats = stats(&errors);
    let upper_stats = stats(&uppers);
    Ok(ErrorReport {
        filtering_error: err_stats.mean,
        apriori_error: stats(&aprioris).mean,
        apriori_upper: upper_stats.mean,
        phase_delay: tau,
        monte_carlo: Some((err_stats, upper_stats)),
    })
}

fn stats(samples: &[f64]) -> MonteCarloStats {
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / m;
    MonteCarloStats { mean, std_dev: var.sqrt() }
}

/// One published a-priori error value used to recover the cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationAnchor {
    pub len: usize,
    pub apriori_error: f64,
}

/// Result of the cutoff recovery: the per-anchor estimates and the one
/// taken from the largest truncation order.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    /// `(L, tau_phi, cutoff)` per anchor, in input order.
    pub per_anchor: Vec<(usize, f64, f64)>,
    pub cutoff: f64,
    /// Largest relative spread of the per-anchor cutoffs around the result.
    pub spread: f64,
}

/// Bisection for a continuous scalar equation `f(x) = 0` on `[lo, hi]`.
fn bisect(f: &dyn Fn(f64) -> Result<f64>, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(SpectralError::CalibrationBracket(format!(
            "no sign change on [{lo}, {hi}]: f = {f_lo:.6e}, {f_hi:.6e}"
        )));
    }
    let mut f_lo = f_lo;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Inverts `tau |-> sqrt(V^T A(T - tau) V)` for the delay that reproduces
/// a published a-priori error, using the same truncation order as the
/// publication.
pub fn tau_for_apriori_anchor(noise: &SpectralVec, target: f64) -> Result<f64> {
    let horizon = noise.horizon;
    let len = noise.len();
    let objective = |tau: f64| -> Result<f64> {
        let a = BlockMatrix::indicator_gain(horizon, len, horizon - tau)?;
        let v = DVector::from_column_slice(&noise.coeffs);
        Ok(quadratic_form(&v, &a.data)? - target)
    };
    // The a-priori error shrinks as the window shrinks, so the objective
    // is decreasing in tau; a quarter of the segment safely brackets the
    // phase delays of all designs considered here.
    bisect(&objective, 0.0, 0.25 * horizon, 1e-13 * horizon)
}

/// Inverts `cutoff |-> phase delay at omega` for a design template whose
/// cutoff is unknown.
pub fn cutoff_for_phase_delay(
    template: &dyn Fn(f64) -> Result<FilterDesign>,
    omega: f64,
    tau: f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let objective = |cutoff: f64| -> Result<f64> {
        Ok(template(cutoff)?.phase_delay(omega)? - tau)
    };
    bisect(&objective, lo, hi, 1e-11 * (hi - lo))
}

/// Recovers the cutoff from published a-priori errors of one design.
///
/// Each anchor yields a delay `tau_phi` (inverted through the truncated
/// quadratic form at the anchor's own `L`) and from it a cutoff; the
/// report carries the estimate from the largest `L` together with the
/// spread of the others around it.
pub fn calibrate_cutoff(
    template: &dyn Fn(f64) -> Result<FilterDesign>,
    horizon: f64,
    signal_omega: f64,
    noise: &NoiseSpec,
    anchors: &[CalibrationAnchor],
    lo: f64,
    hi: f64,
) -> Result<CalibrationReport> {
    let tones = match noise {
        NoiseSpec::Deterministic { sigma, tones } => (*sigma, tones.clone()),
        NoiseSpec::Random { .. } => {
            return Err(SpectralError::InvalidParameter(
                "calibration requires deterministic noise".into(),
            ))
        }
    };
    if anchors.is_empty() {
        return Err(SpectralError::InvalidParameter("calibration needs at least one anchor".into()));
    }
    let mut per_anchor = Vec::with_capacity(anchors.len());
    for anchor in anchors {
        let cfg_noise = NoiseSpec::Deterministic { sigma: tones.0, tones: tones.1.clone() };
        let cfg = RunConfig {
            design: template(0.5 * (lo + hi))?,
            horizon,
            len: anchor.len,
            signal: Tone { wave: Wave::Sin, omega: signal_omega },
            noise: cfg_noise,
            seed: 0,
            shift_mode: ShiftMode::Natural,
        };
        let v = deterministic_noise(&cfg)?;
        let tau = tau_for_apriori_anchor(&v, anchor.apriori_error)?;
        let cutoff = cutoff_for_phase_delay(template, signal_omega, tau, lo, hi)?;
        per_anchor.push((anchor.len, tau, cutoff));
    }
    let best = per_anchor.iter().max_by_key(|(len, _, _)| *len).unwrap();
    let cutoff = best.2;
    let spread = per_anchor
        .iter()
        .map(|(_, _, c)| (c - cutoff).abs() / cutoff)
        .fold(0.0f64, f64::max);
    Ok(CalibrationReport { per_anchor, cutoff, spread })
}

/// The reference deterministic noise mixture.
pub fn standard_deterministic_noise() -> NoiseSpec {
    use std::f64::consts::PI;
    NoiseSpec::Deterministic {
        sigma: 0.2,
        tones: vec![
            Tone { wave: Wave::Sin, omega: 78.0 * PI },
            Tone { wave: Wave::Cos, omega: 95.0 * PI },
            Tone { wave: Wave::Sin, omega: 112.0 * PI },
        ],
    }
}
