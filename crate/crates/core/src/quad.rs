//! Quadrature rules on finite intervals.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// Gauss–Legendre nodes and weights on [a, b], nodes ascending.
pub fn gauss_legendre(m: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(NonZeroUsize::new(m.max(1)).unwrap());
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut pairs: Vec<(f64, f64)> = rule
        .nodes()
        .zip(rule.weights())
        .map(|(x, w)| (mid + half * x, half * w))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    pairs.into_iter().unzip()
}

/// ∫_a^b f by composite Gauss–Legendre with `panels` panels of `m` nodes.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, m: usize) -> f64 {
    let (x, w) = gauss_legendre(m, 0.0, 1.0);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            total += wi * h * f(lo + h * xi);
        }
    }
    total
}

/// ∫ over [a, b] of a function with square-root endpoint behaviour, via the
/// substitution x = mid + half·sin θ which makes the integrand smooth.
pub fn integrate_sqrt_edges<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, m: usize) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let pi2 = std::f64::consts::FRAC_PI_2;
    integrate(|th| f(mid + half * th.sin()) * half * th.cos(), -pi2, pi2, 8, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        let (x, w) = gauss_legendre(5, -1.0, 2.0);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(9)).sum();
        assert!((s - (2f64.powi(10) - 1.0) / 10.0).abs() < 1e-11);
    }

    #[test]
    fn semicircle_area() {
        let v = integrate_sqrt_edges(|x| (4.0 - x * x).max(0.0).sqrt(), -2.0, 2.0, 32);
        assert!((v - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
