//! Large-N equilibrium densities: semicircle, Marchenko–Pastur, the one-cut
//! Joukowsky solver and the symmetric two-cut quartic.

use std::f64::consts::PI;

use nalgebra::Complex;
use rug::Rational;

use crate::error::{Error, Result};
use crate::model::{series_newton, FormalScalar, Potential};
use crate::quad;

type C64 = Complex<f64>;

pub fn semicircle_density(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * PI)
    }
}

/// Edges (a₋, a₊) = σ²(1 ∓ √u)².
pub fn marchenko_pastur_edges(u: f64, sigma2: f64) -> (f64, f64) {
    let r = u.sqrt();
    (sigma2 * (1.0 - r).powi(2), sigma2 * (1.0 + r).powi(2))
}

/// ∫ √((a₊−x)(x−a₋))/x dx over the support, by quadrature.
pub fn marchenko_pastur_normalization(u: f64, sigma2: f64) -> f64 {
    let (lo, hi) = marchenko_pastur_edges(u, sigma2);
    quad::integrate_sqrt_edges(|x| mp_shape(x, lo, hi), lo, hi, 48)
}

fn mp_shape(x: f64, lo: f64, hi: f64) -> f64 {
    if x <= lo || x >= hi || x <= 0.0 {
        0.0
    } else {
        ((hi - x) * (x - lo)).sqrt() / x
    }
}

/// Marchenko–Pastur density for u ≥ 1, normalized to unit mass by quadrature.
pub fn marchenko_pastur_density(x: f64, u: f64, sigma2: f64) -> Result<f64> {
    if u < 1.0 || !(sigma2 > 0.0) {
        return Err(Error::Invalid(format!("Marchenko–Pastur needs u ≥ 1 and σ² > 0, got u={u}, σ²={sigma2}")));
    }
    let (lo, hi) = marchenko_pastur_edges(u, sigma2);
    Ok(mp_shape(x, lo, hi) / marchenko_pastur_normalization(u, sigma2))
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// [z^j] of p(c + γ(z + 1/z)) for a polynomial with coefficients `p`.
fn laurent_coeff(p: &[f64], c: f64, g: f64, j: i64) -> f64 {
    let j = j.unsigned_abs() as usize;
    let mut total = 0.0;
    for (n, pn) in p.iter().enumerate() {
        if *pn == 0.0 {
            continue;
        }
        for m in (j..=n).step_by(2) {
            total += pn * binomial(n, m) * c.powi((n - m) as i32) * g.powi(m as i32) * binomial(m, (m + j) / 2);
        }
    }
    total
}

fn derivative(p: &[f64]) -> Vec<f64> {
    p.iter().enumerate().skip(1).map(|(k, x)| k as f64 * x).collect()
}

/// One-cut spectral curve x(z) = c + γ(z + 1/z), ω̄(z) = Σ_{k≥1} v_k z^{−k}.
#[derive(Clone, Debug)]
pub struct OneCutCurve {
    pub c: f64,
    pub gamma: f64,
    /// v_0..v_d; v_0 is the residual of the centering condition.
    pub v: Vec<f64>,
    vprime: Vec<f64>,
}

impl OneCutCurve {
    /// Upper edge a = c + 2γ.
    pub fn a(&self) -> f64 {
        self.c + 2.0 * self.gamma
    }

    /// Lower edge b = c − 2γ.
    pub fn b(&self) -> f64 {
        self.c - 2.0 * self.gamma
    }

    pub fn sigma(&self, x: f64) -> f64 {
        (x - self.a()) * (x - self.b())
    }

    /// M(x) = (1/γ) Σ_k v_k U_{k−1}((x − c)/2γ).
    pub fn m(&self, x: f64) -> f64 {
        let w = (x - self.c) / (2.0 * self.gamma);
        let (mut u_prev, mut u) = (0.0, 1.0);
        let mut total = 0.0;
        for vk in self.v.iter().skip(1) {
            total += vk * u;
            let next = 2.0 * w * u - u_prev;
            u_prev = u;
            u = next;
        }
        total / self.gamma
    }

    /// ρ̄(x) = M(x)√((a−x)(x−b))/2π on the cut, 0 elsewhere.
    pub fn density(&self, x: f64) -> f64 {
        if x <= self.b() || x >= self.a() {
            return 0.0;
        }
        self.m(x) * ((self.a() - x) * (x - self.b())).sqrt() / (2.0 * PI)
    }

    pub fn x_of_z(&self, z: C64) -> C64 {
        (z + z.inv()) * self.gamma + self.c
    }

    /// Physical-sheet preimage (|z| > 1) of x off the cut.
    pub fn z_of_x(&self, x: C64) -> C64 {
        let w = (x - self.c) / (2.0 * self.gamma);
        let z = w + (w - 1.0).sqrt() * (w + 1.0).sqrt();
        if z.norm() >= 1.0 {
            z
        } else {
            z.inv()
        }
    }

    pub fn omega_z(&self, z: C64) -> C64 {
        let zi = z.inv();
        let mut p = zi;
        let mut total = C64::new(0.0, 0.0);
        for vk in self.v.iter().skip(1) {
            total += p * *vk;
            p *= zi;
        }
        total
    }

    /// Resolvent ω̄(x) on the physical sheet.
    pub fn resolvent(&self, x: C64) -> C64 {
        self.omega_z(self.z_of_x(x))
    }

    /// max over |z| = 1 of |V'(x(z)) − ω̄(z) − ω̄(1/z)|.
    pub fn rh_residual(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|i| {
                let th = 2.0 * PI * (i as f64 + 0.5) / samples as f64;
                let z = C64::from_polar(1.0, th);
                let x = self.x_of_z(z);
                let vp = self.vprime.iter().rev().fold(C64::new(0.0, 0.0), |acc, t| acc * x + *t);
                (vp - self.omega_z(z) - self.omega_z(z.inv())).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Connected two-point resolvent −B(z₁, 1/z₂)/(dx₁dx₂).
    pub fn two_point(&self, x1: C64, x2: C64) -> Result<C64> {
        let (z1, z2) = (self.z_of_x(x1), self.z_of_x(x2));
        let d = z1 * z2 - 1.0;
        if d.norm() == 0.0 {
            return Err(Error::Invalid("two-point function is singular here".into()));
        }
        let dx1 = (C64::new(1.0, 0.0) - (z1 * z1).inv()) * self.gamma;
        let dx2 = (C64::new(1.0, 0.0) - (z2 * z2).inv()) * self.gamma;
        Ok((d * d * dx1 * dx2).inv())
    }

    /// ∫ρ̄ over the cut.
    pub fn mass(&self) -> f64 {
        quad::integrate_sqrt_edges(|x| self.density(x), self.b(), self.a(), 48)
    }
}

/// Solves v_0 = 0, v_1 = 1/γ by damped Newton from (c, γ) = (0, 1), then
/// checks positivity of the density on a Chebyshev grid of the cut.
pub fn solve_one_cut(v: &Potential) -> Result<OneCutCurve> {
    let p = v.vprime_f64();
    if p.len() < 2 {
        return Err(Error::Invalid("V' must have degree at least 1".into()));
    }
    let pp = derivative(&p);
    let residual = |c: f64, g: f64| -> (f64, f64) {
        (laurent_coeff(&p, c, g, 0), g * laurent_coeff(&p, c, g, 1) - 1.0)
    };
    let (mut c, mut g) = (0.0, 1.0);
    let mut f = residual(c, g);
    let mut converged = false;
    for _ in 0..200 {
        let norm = f.0.hypot(f.1);
        if norm < 1e-15 {
            converged = true;
            break;
        }
        let j11 = laurent_coeff(&pp, c, g, 0);
        let j12 = 2.0 * laurent_coeff(&pp, c, g, 1);
        let j21 = g * laurent_coeff(&pp, c, g, 1);
        let j22 = laurent_coeff(&p, c, g, 1) + g * (laurent_coeff(&pp, c, g, 0) + laurent_coeff(&pp, c, g, 2));
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            return Err(Error::NoConvergence("singular Jacobian in one-cut Newton".into()));
        }
        let dc = (f.0 * j22 - f.1 * j12) / det;
        let dg = (j11 * f.1 - j21 * f.0) / det;
        let mut step = 1.0;
        loop {
            let (nc, ng) = (c - step * dc, g - step * dg);
            if ng > 0.0 {
                let nf = residual(nc, ng);
                if nf.0.hypot(nf.1) < norm || step < 1e-10 {
                    c = nc;
                    g = ng;
                    f = nf;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-12 {
                return Err(Error::NoConvergence("line search failed in one-cut Newton".into()));
            }
        }
        if step * (dc.abs() + dg.abs()) < 1e-16 * (1.0 + c.abs() + g.abs()) {
            converged = f.0.hypot(f.1) < 1e-10;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!(
            "one-cut Newton stalled with residual {:e}",
            f.0.hypot(f.1)
        )));
    }
    let d = p.len() - 1;
    let vs: Vec<f64> = (0..=d).map(|k| laurent_coeff(&p, c, g, k as i64)).collect();
    let curve = OneCutCurve { c, gamma: g, v: vs, vprime: p };
    let n = 1024;
    for i in 0..n {
        let x = c + 2.0 * g * (PI * (i as f64 + 0.5) / n as f64).cos();
        let rho = curve.density(x);
        if rho < -1e-12 {
            return Err(Error::NegativeDensity { x, value: rho });
        }
    }
    Ok(curve)
}

/// One-cut curve of an even formal potential: c = 0 and γ, v_k as series.
#[derive(Clone, Debug)]
pub struct FormalCurve {
    pub gamma2: FormalScalar,
    pub gamma: FormalScalar,
    /// v_0..v_d.
    pub v: Vec<FormalScalar>,
}

fn binom_q(n: usize, k: usize) -> Rational {
    let mut r = Rational::from(1);
    for i in 0..k {
        r *= Rational::from((n - i) as u64);
        r /= Rational::from((i + 1) as u64);
    }
    r
}

/// Formal-series solve: γ² from Σ_j t_{j+1} C(j, (j−1)/2) u^{(j+1)/2} = 1 by
/// series Newton, for even potentials whose order-0 part is t_2 x²/2.
pub fn solve_one_cut_formal(v: &Potential) -> Result<FormalCurve> {
    if !v.is_even() {
        return Err(Error::Invalid("formal one-cut solve supports even potentials only".into()));
    }
    let ts = v.vprime_formal();
    let order = ts.iter().filter_map(|t| t.order()).max().unwrap_or(0);
    let t2 = ts.get(1).map(|t| t.constant().clone()).unwrap_or_default();
    if t2 == 0 || ts.iter().enumerate().any(|(j, t)| j > 1 && *t.constant() != 0) {
        return Err(Error::Invalid("order-0 part of the potential must be t_2 x²/2 with t_2 ≠ 0".into()));
    }
    let f = |u: &FormalScalar| {
        let mut acc = FormalScalar::int(-1);
        let mut upow = u.clone();
        for j in (1..ts.len()).step_by(2) {
            acc += (&ts[j] * &upow).scale(&binom_q(j, (j - 1) / 2));
            upow = &upow * u;
        }
        acc
    };
    let u0 = Rational::from(t2.recip_ref());
    let gamma2 = series_newton(f, &u0, order)?;
    let gamma = gamma2.sqrt()?;
    let d = ts.len() - 1;
    let mut gpow = vec![FormalScalar::one()];
    for j in 1..=d {
        let next = &gpow[j - 1] * &gamma;
        gpow.push(next);
    }
    let vs = (0..=d)
        .map(|k| {
            let mut acc = FormalScalar::zero();
            for j in (k..=d).step_by(2) {
                acc += (&ts[j] * &gpow[j]).scale(&binom_q(j, (j - k) / 2));
            }
            acc
        })
        .collect();
    Ok(FormalCurve { gamma2, gamma, v: vs })
}

/// ω̄(x) from the Tricomi integral over a given one-cut support [b, a].
pub fn tricomi_resolvent(v: &Potential, b: f64, a: f64, x: C64) -> Result<C64> {
    if x.im == 0.0 && x.re >= b && x.re <= a {
        return Err(Error::Invalid(format!("x = {} lies on the cut", x.re)));
    }
    let (mid, half) = (0.5 * (a + b), 0.5 * (a - b));
    let sqrt_sigma = (x - a).sqrt() * (x - b).sqrt();
    let (nodes, weights) = quad::gauss_legendre(64, 0.0, PI);
    let mut total = C64::new(0.0, 0.0);
    for (phi, w) in nodes.iter().zip(&weights) {
        let xp = mid + half * phi.cos();
        total += (x - xp).inv() * (w * v.derivative_f64(xp));
    }
    Ok(sqrt_sigma * total / (2.0 * PI))
}

/// Symmetric two-cut solution of V = (1/t)(x²/2 − x⁴/4), −1/4 < t < 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoCutQuartic {
    pub t: f64,
    pub a: f64,
    pub b: f64,
}

pub fn quartic_two_cut(t: f64) -> Result<TwoCutQuartic> {
    if !(t > -0.25 && t < 0.0) {
        return Err(Error::Invalid(format!("two-cut quartic needs −1/4 < t < 0, got {t}")));
    }
    let s = (-t).sqrt();
    Ok(TwoCutQuartic { t, a: (1.0 + 2.0 * s).sqrt(), b: (1.0 - 2.0 * s).sqrt() })
}

impl TwoCutQuartic {
    /// (1/2t)(x − x³ + x√((x²−a²)(x²−b²))) with the branch ~ 1/x at infinity.
    pub fn resolvent(&self, x: C64) -> C64 {
        let root = (x * x - self.a * self.a).sqrt() * (x * x - self.b * self.b).sqrt();
        let root = if (root / (x * x)).re < 0.0 { -root } else { root };
        (x - x * x * x + x * root) / (2.0 * self.t)
    }

    pub fn density(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax <= self.b || ax >= self.a {
            return 0.0;
        }
        ax * ((self.a * self.a - x * x) * (x * x - self.b * self.b)).sqrt() / (2.0 * PI * self.t.abs())
    }

    pub fn mass(&self) -> f64 {
        2.0 * quad::integrate_sqrt_edges(|x| self.density(x), self.b, self.a, 48)
    }
}
