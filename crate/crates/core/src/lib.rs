//! Continuous-time modeling of analog filters over a cosine spectral basis.
//!
//! Signals are represented by truncated vectors of expansion coefficients
//! relative to an orthonormal cosine basis on a fixed time segment, and
//! linear filters by truncated operator matrices acting on those vectors.
//! The crate covers Butterworth, Linkwitz-Riley, and Chebyshev (Type I/II)
//! designs, phase-delay compensation, error metrics, Monte Carlo noise
//! experiments, an independent time-domain ODE reference, and rendering of
//! characteristic polynomials via domain coloring.

pub mod basis;
pub mod blocks;
pub mod config;
pub mod error;
pub mod filters;
pub mod modeling;
pub mod oracle;
pub mod quad;
pub mod render;
pub mod signals;

pub use error::SpectralError;
