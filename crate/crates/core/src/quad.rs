//! Composite Gauss-Legendre quadrature.
//!
//! The integrands in this crate are products of cosines with smooth or
//! oscillatory factors, so a fixed-order rule applied on panels sized to
//! the fastest oscillation converges quickly. An adaptive wrapper doubles
//! the panel count until the result stabilizes.

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
///
/// Nodes are roots of the Legendre polynomial found by Newton iteration
/// from the usual Chebyshev initial guesses.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for k in 0..m {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        // Newton iteration on P_n(x); derivative via the standard identity.
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[k] = -x;
        nodes[n - 1 - k] = x;
        weights[k] = w;
        weights[n - 1 - k] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Integrates `f` over `[a, b]` with `panels` equal panels of a fixed
/// 16-point Gauss-Legendre rule.
pub fn composite(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let (nodes, weights) = rule16();
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let left = a + p as f64 * h;
        let mid = left + 0.5 * h;
        let half = 0.5 * h;
        let mut acc = 0.0;
        for (x, w) in nodes.iter().zip(weights.iter()) {
            acc += w * f(mid + half * x);
        }
        sum += acc * half;
    }
    sum
}

/// Integrates `f` over `[a, b]`, starting from `initial_panels` panels and
/// doubling until two successive refinements agree within `tol` (absolute).
///
/// Returns `None` if convergence is not reached before the panel cap.
pub fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, initial_panels: usize) -> Option<f64> {
    let mut panels = initial_panels.max(1);
    let mut prev = composite(f, a, b, panels);
    const MAX_PANELS: usize = 1 << 20;
    while panels < MAX_PANELS {
        panels *= 2;
        let next = composite(f, a, b, panels);
        if (next - prev).abs() < tol {
            return Some(next);
        }
        prev = next;
    }
    None
}

fn rule16() -> (&'static [f64], &'static [f64]) {
    use std::sync::OnceLock;
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let (n, w) = RULE.get_or_init(|| gauss_legendre(16));
    (n, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_and_weights_match_known_values() {
        let (nodes, weights) = gauss_legendre(5);
        // Classical 5-point values.
        assert!((nodes[0] + 0.906179845938664).abs() < 1e-14);
        assert!((nodes[2]).abs() < 1e-14);
        assert!((weights[0] - 0.236926885056189).abs() < 1e-14);
        assert!((weights[2] - 0.568888888888889).abs() < 1e-14);
        let total: f64 = weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-13);
    }

    #[test]
    fn composite_integrates_oscillatory_cosine() {
        let omega = 40.0 * std::f64::consts::PI;
        let exact = (omega).sin() / omega;
        let got = composite(&|t: f64| (omega * t).cos(), 0.0, 1.0, 40);
        assert!((got - exact).abs() < 1e-12);
    }

    #[test]
    fn adaptive_reaches_requested_tolerance() {
        let got = adaptive(&|t: f64| t.exp(), 0.0, 1.0, 1e-12, 1).unwrap();
        assert!((got - (1f64.exp() - 1.0)).abs() < 1e-11);
    }
}
