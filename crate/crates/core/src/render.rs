//! Figure outputs: domain-coloring images of characteristic polynomials
//! and CSV sampling of signal pairs for external plotting.

use std::io::Write;

use num_complex::Complex64;

use crate::basis::BasisSpec;
use crate::error::{Result, SpectralError};
use crate::filters::FilterDesign;
use crate::signals::SpectralVec;

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexRect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl ComplexRect {
    /// The standard viewing region `Re z, Im z in [-2, 2]`.
    pub fn standard() -> Self {
        Self { re_min: -2.0, re_max: 2.0, im_min: -2.0, im_max: 2.0 }
    }
}

/// 8-bit RGB raster, rows stored top to bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let k = 3 * (row * self.width + col);
        [self.pixels[k], self.pixels[k + 1], self.pixels[k + 2]]
    }
}

/// The characteristic polynomial of a design: the prototype
/// transfer-function denominator `const * prod_k (s - s_k)`.
pub fn characteristic_value(design: &FilterDesign, s: Complex64) -> Complex64 {
    let mut d = Complex64::new(design.denominator_constant(), 0.0);
    for p in design.poles() {
        d *= s - p;
    }
    d
}

/// Standard hexcone HLS -> RGB conversion; `h` in degrees, `l` and `s`
/// in `[0, 1]`.
pub fn hls_to_rgb(h: f64, l: f64, s: f64) -> [u8; 3] {
    fn channel(m1: f64, m2: f64, mut hue: f64) -> f64 {
        hue = hue.rem_euclid(360.0);
        if hue < 60.0 {
            m1 + (m2 - m1) * hue / 60.0
        } else if hue < 180.0 {
            m2
        } else if hue < 240.0 {
            m1 + (m2 - m1) * (240.0 - hue) / 60.0
        } else {
            m1
        }
    }
    let m2 = if l <= 0.5 { l * (1.0 + s) } else { l + s - l * s };
    let m1 = 2.0 * l - m2;
    let quantize = |x: f64| (x.clamp(0.0, 1.0) * 255.0).round() as u8;
    if s == 0.0 {
        let g = quantize(l);
        return [g, g, g];
    }
    [
        quantize(channel(m1, m2, h + 120.0)),
        quantize(channel(m1, m2, h)),
        quantize(channel(m1, m2, h - 120.0)),
    ]
}

/// Colors one complex value: Hue maps `arg` in `(-pi, pi]` linearly onto
/// `[0, 360)` degrees, Lightness maps `arctan|.|` in `[0, pi/2)` linearly
/// onto `[0, 1)`, Saturation is 100%.
pub fn color_of(value: Complex64) -> [u8; 3] {
    use std::f64::consts::PI;
    let hue = (value.arg() + PI) / (2.0 * PI) * 360.0;
    let lightness = value.norm().atan() / (PI / 2.0);
    hls_to_rgb(hue, lightness, 1.0)
}

/// Domain-coloring raster of a complex function over a rectangle; the
/// top pixel row corresponds to the maximal imaginary part.
pub fn domain_coloring(
    f: &dyn Fn(Complex64) -> Complex64,
    rect: ComplexRect,
    width: usize,
    height: usize,
) -> Result<Image> {
    if width < 16 || height < 16 {
        return Err(SpectralError::InvalidParameter(
            "render resolution must be at least 16x16 pixels".into(),
        ));
    }
    if rect.re_max <= rect.re_min || rect.im_max <= rect.im_min {
        return Err(SpectralError::InvalidParameter("render region must be non-degenerate".into()));
    }
    let mut pixels = Vec::with_capacity(3 * width * height);
    for row in 0..height {
        let im = rect.im_max - (rect.im_max - rect.im_min) * row as f64 / (height - 1) as f64;
        for col in 0..width {
            let re = rect.re_min + (rect.re_max - rect.re_min) * col as f64 / (width - 1) as f64;
            pixels.extend_from_slice(&color_of(f(Complex64::new(re, im))));
        }
    }
    Ok(Image { width, height, pixels })
}

/// Renders the characteristic polynomial of a design.
pub fn render_design(
    design: &FilterDesign,
    rect: ComplexRect,
    width: usize,
    height: usize,
) -> Result<Image> {
    let d = design.clone();
    domain_coloring(&move |s| characteristic_value(&d, s), rect, width, height)
}

/// Writes a binary 8-bit portable pixmap (P6).
pub fn write_ppm(image: &Image, out: &mut dyn Write) -> std::io::Result<()> {
    write!(out, "P6\n{} {}\n255\n", image.width, image.height)?;
    out.write_all(&image.pixels)
}

/// Formats one sample with nine significant decimal digits.
fn format_sample(x: f64) -> String {
    format!("{x:.8e}")
}

/// Reconstructs each labeled vector on the grid and writes the columns
/// `t, series...` as CSV.
pub fn emit_signal_csv(
    pairs: &[(String, SpectralVec)],
    grid: &[f64],
    out: &mut dyn Write,
) -> Result<()> {
    let mut header = String::from("t");
    let mut series = Vec::with_capacity(pairs.len());
    for (label, vec) in pairs {
        header.push(',');
        header.push_str(label);
        let spec = BasisSpec::new(vec.horizon, vec.len());
        series.push(spec.reconstruct(&vec.coeffs, grid)?);
    }
    writeln!(out, "{header}").map_err(SpectralError::Io)?;
    for (k, t) in grid.iter().enumerate() {
        let mut line = format_sample(*t);
        for s in &series {
            line.push(',');
            line.push_str(&format_sample(s[k]));
        }
        writeln!(out, "{line}").map_err(SpectralError::Io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::{FilterFamily, PassKind};
    use crate::signals::spectral_sin;
    use std::f64::consts::PI;

    fn lightness_of(px: [u8; 3]) -> f64 {
        // For saturation 1 the hexcone gives max+min = 2L.
        let max = *px.iter().max().unwrap() as f64;
        let min = *px.iter().min().unwrap() as f64;
        (max + min) / (2.0 * 255.0)
    }

    fn render(design: &FilterDesign, px: usize) -> Image {
        render_design(design, ComplexRect::standard(), px, px).unwrap()
    }

    /// Strict local minima of the continuous lightness field (the 8-bit
    /// raster ties in the flat neighborhood of a zero).
    fn local_lightness_minima(d: &FilterDesign, rect: ComplexRect, px: usize) -> Vec<(usize, usize)> {
        let mut field = vec![0.0f64; px * px];
        for r in 0..px {
            let im = rect.im_max - (rect.im_max - rect.im_min) * r as f64 / (px - 1) as f64;
            for c in 0..px {
                let re = rect.re_min + (rect.re_max - rect.re_min) * c as f64 / (px - 1) as f64;
                field[r * px + c] =
                    characteristic_value(d, Complex64::new(re, im)).norm();
            }
        }
        let mut out = Vec::new();
        for r in 1..px - 1 {
            for c in 1..px - 1 {
                let here = field[r * px + c];
                let mut is_min = true;
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let other = field[((r as i64 + dr) as usize) * px + (c as i64 + dc) as usize];
                        if other <= here {
                            is_min = false;
                        }
                    }
                }
                if is_min {
                    out.push((r, c));
                }
            }
        }
        out
    }

    fn pixel_at(img: &Image, rect: ComplexRect, z: Complex64) -> (usize, usize) {
        let col = ((z.re - rect.re_min) / (rect.re_max - rect.re_min)
            * (img.width - 1) as f64)
            .round() as usize;
        let row = ((rect.im_max - z.im) / (rect.im_max - rect.im_min)
            * (img.height - 1) as f64)
            .round() as usize;
        (row, col)
    }

    #[test]
    fn constant_polynomial_renders_uniformly() {
        let img =
            domain_coloring(&|_| Complex64::new(1.0, 0.0), ComplexRect::standard(), 16, 16).unwrap();
        let first = img.pixel(0, 0);
        for r in 0..16 {
            for c in 0..16 {
                assert_eq!(img.pixel(r, c), first);
            }
        }
    }

    #[test]
    fn rejects_tiny_resolution() {
        assert!(domain_coloring(&|s| s, ComplexRect::standard(), 8, 64).is_err());
    }

    #[test]
    fn butterworth_zeros_are_darkest() {
        let d = FilterDesign::new(FilterFamily::Butterworth, 3, None, 1.0, PassKind::LowPass).unwrap();
        let rect = ComplexRect::standard();
        let img = render(&d, 201);
        // Pole pixels are darker than anything at distance > 0.5 from all poles.
        let pole_lightness: Vec<f64> = d
            .poles()
            .iter()
            .map(|p| {
                let (r, c) = pixel_at(&img, rect, *p);
                lightness_of(img.pixel(r, c))
            })
            .collect();
        let worst_pole = pole_lightness.iter().cloned().fold(0.0f64, f64::max);
        for r in 0..img.height {
            for c in 0..img.width {
                let re = rect.re_min + 4.0 * c as f64 / 200.0;
                let im = rect.im_max - 4.0 * r as f64 / 200.0;
                let z = Complex64::new(re, im);
                if d.poles().iter().all(|p| (z - p).norm() > 0.5) {
                    assert!(lightness_of(img.pixel(r, c)) > worst_pole, "({r},{c})");
                }
            }
        }
    }

    #[test]
    fn chebyshev2_has_exactly_two_lightness_minima() {
        let d =
            FilterDesign::new(FilterFamily::ChebyshevII, 2, Some(0.1), 1.0, PassKind::LowPass).unwrap();
        let rect = ComplexRect::standard();
        let img = render(&d, 201);
        let minima = local_lightness_minima(&d, rect, 201);
        assert_eq!(minima.len(), 2, "minima at {minima:?}");
        // Each minimum sits within two pixels of a computed pole.
        for (r, c) in minima {
            let near = d.poles().iter().any(|p| {
                let (pr, pc) = pixel_at(&img, rect, *p);
                pr.abs_diff(r) <= 2 && pc.abs_diff(c) <= 2
            });
            assert!(near, "spurious minimum at ({r},{c})");
        }
    }

    #[test]
    fn ppm_header_and_size_are_exact() {
        let img =
            domain_coloring(&|s| s, ComplexRect::standard(), 20, 16).unwrap();
        let mut buf = Vec::new();
        write_ppm(&img, &mut buf).unwrap();
        assert!(buf.starts_with(b"P6\n20 16\n255\n"));
        assert_eq!(buf.len(), "P6\n20 16\n255\n".len() + 3 * 20 * 16);
    }

    #[test]
    fn csv_columns_for_identical_vectors_match() {
        let u = spectral_sin(10.0 * PI, 1.0, 512);
        let pairs = vec![("a".to_string(), u.clone()), ("b".to_string(), u)];
        let grid: Vec<f64> = (0..50).map(|k| k as f64 / 49.0).collect();
        let mut buf = Vec::new();
        emit_signal_csv(&pairs, &grid, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,a,b");
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), 3);
            assert_eq!(cols[1], cols[2]);
        }
    }

    #[test]
    fn csv_sample_of_sine_peak() {
        let u = spectral_sin(10.0 * PI, 1.0, 512);
        let mut buf = Vec::new();
        emit_signal_csv(&[("u".to_string(), u)], &[0.05], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let value: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert!((value - 1.0).abs() < 1e-3, "sin(pi/2) sample {value}");
    }
}
