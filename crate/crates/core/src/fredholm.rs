//! Fredholm determinants det(Id − K_I) by Nyström discretization.

use std::f64::consts::PI;

use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};
use crate::linalg;
use crate::ortho::RecurrenceTable;
use crate::quad::gauss_legendre;

pub enum Kernel<'a> {
    /// sin(π(x−y))/(π(x−y)), unit mean density.
    SineUnitDensity,
    Airy,
    /// Christoffel–Darboux kernel of an N-scaled table.
    FiniteN { table: &'a RecurrenceTable, n: usize },
    User(&'a dyn Fn(f64, f64) -> f64),
}

pub struct KernelSpec<'a> {
    pub kernel: Kernel<'a>,
    pub a: f64,
    /// May be +∞ for Airy and FiniteN.
    pub b: f64,
    pub m: usize,
}

/// Scale of the map x = a + scale·ln(1/(1−u)) for semi-infinite intervals.
pub const TAIL_SCALE: f64 = 3.0;

/// Nodes and weights on [a,b], or on [a,∞) through the logarithmic map.
pub fn nodes(a: f64, b: f64, m: usize) -> (Vec<f64>, Vec<f64>) {
    if b.is_finite() {
        return gauss_legendre(m, a, b);
    }
    let (u, w) = gauss_legendre(m, 0.0, 1.0);
    let x = u.iter().map(|u| a - TAIL_SCALE * (1.0 - u).ln()).collect();
    let w = u.iter().zip(&w).map(|(u, w)| w * TAIL_SCALE / (1.0 - u)).collect();
    (x, w)
}

pub fn sine_kernel(x: f64, y: f64) -> f64 {
    let d = PI * (x - y);
    if d.abs() < 1e-8 {
        1.0 - d * d / 6.0
    } else {
        d.sin() / d
    }
}

fn airy_matrix(x: &[f64]) -> Result<Vec<f64>> {
    let m = x.len();
    let mut ai = Vec::with_capacity(m);
    for &xi in x {
        // Ai(30) ≈ 1e−48: beyond that the kernel is zero in double precision
        ai.push(if xi > 30.0 { (0.0, 0.0) } else { (airy(xi)?, airy_prime(xi)?) });
    }
    let mut k = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let (a1, d1) = ai[i];
            let (a2, d2) = ai[j];
            k[i * m + j] = if i == j {
                d1 * d1 - x[i] * a1 * a1
            } else {
                // (Ai(x)Ai'(y) − Ai'(x)Ai(y))/(x − y), whose diagonal limit is Ai'² − xAi²
                (a1 * d2 - d1 * a2) / (x[i] - x[j])
            };
        }
    }
    Ok(k)
}

fn kernel_matrix(kernel: &Kernel, x: &[f64]) -> Result<Vec<f64>> {
    let m = x.len();
    let fill = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
        let mut k = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                k[i * m + j] = f(x[i], x[j]);
            }
        }
        k
    };
    match kernel {
        Kernel::SineUnitDensity => Ok(fill(&sine_kernel)),
        Kernel::User(f) => Ok(fill(*f)),
        Kernel::Airy => airy_matrix(x),
        Kernel::FiniteN { table, n } => {
            let psi: Vec<Vec<f64>> = x.iter().map(|&xi| table.psi(*n, xi).map(|p| p.0)).collect::<Result<_>>()?;
            let mut k = vec![0.0; m * m];
            for i in 0..m {
                for j in 0..m {
                    k[i * m + j] = (0..*n).map(|l| psi[i][l] * psi[j][l]).sum();
                }
            }
            Ok(k)
        }
    }
}

/// det(δ_ij − √(w_i w_j) K(x_i, x_j)).
pub fn fredholm_det(spec: &KernelSpec) -> Result<f64> {
    if spec.m < 2 {
        return Err(Error::Invalid("Nyström needs at least 2 nodes".into()));
    }
    if spec.b.is_infinite() && matches!(spec.kernel, Kernel::SineUnitDensity | Kernel::User(_)) {
        return Err(Error::Invalid("semi-infinite intervals need a decaying kernel".into()));
    }
    if spec.b <= spec.a {
        return Ok(1.0);
    }
    let (x, w) = nodes(spec.a, spec.b, spec.m);
    let k = kernel_matrix(&spec.kernel, &x)?;
    let m = spec.m;
    let mut a = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let v = k[i * m + j];
            if !v.is_finite() {
                return Err(Error::Invalid(format!("kernel not finite at ({}, {})", x[i], x[j])));
            }
            a[i * m + j] = (i == j) as u8 as f64 - (w[i] * w[j]).sqrt() * v;
        }
    }
    Ok(linalg::det(&a, m))
}

/// E(s) for the unit-density sine kernel on [0, s].
pub fn sine_gap(s: f64, m: usize) -> Result<f64> {
    fredholm_det(&KernelSpec { kernel: Kernel::SineUnitDensity, a: 0.0, b: s, m })
}

#[derive(Clone, Debug)]
pub struct GapCurve {
    pub s: Vec<f64>,
    pub e: Vec<f64>,
    pub p: Option<Vec<f64>>,
}

/// E(s) and P(s) = E''(s) by second differences on a uniform grid.
pub fn spacing_distribution(grid: &[f64], m: usize) -> Result<GapCurve> {
    let n = grid.len();
    if n < 5 {
        return Err(Error::Invalid("spacing grid needs at least 5 points".into()));
    }
    let d = grid[1] - grid[0];
    if d <= 0.0 || grid.windows(2).any(|w| ((w[1] - w[0]) - d).abs() > 1e-9 * d.max(1.0)) {
        return Err(Error::Invalid("spacing grid must be uniform and increasing".into()));
    }
    let e: Vec<f64> = grid.iter().map(|&s| sine_gap(s, m)).collect::<Result<_>>()?;
    let mut p = vec![0.0; n];
    for i in 1..n - 1 {
        p[i] = (e[i + 1] - 2.0 * e[i] + e[i - 1]) / (d * d);
    }
    // second-order one-sided at the ends
    p[0] = (2.0 * e[0] - 5.0 * e[1] + 4.0 * e[2] - e[3]) / (d * d);
    p[n - 1] = (2.0 * e[n - 1] - 5.0 * e[n - 2] + 4.0 * e[n - 3] - e[n - 4]) / (d * d);
    Ok(GapCurve { s: grid.to_vec(), e, p: Some(p) })
}

impl GapCurve {
    /// Spacing CDF 1 + E'(s) on the grid, central differences.
    pub fn spacing_cdf(&self) -> Vec<f64> {
        let n = self.s.len();
        let d = self.s[1] - self.s[0];
        (0..n)
            .map(|i| {
                let de = if i == 0 {
                    (-3.0 * self.e[0] + 4.0 * self.e[1] - self.e[2]) / (2.0 * d)
                } else if i == n - 1 {
                    (3.0 * self.e[n - 1] - 4.0 * self.e[n - 2] + self.e[n - 3]) / (2.0 * d)
                } else {
                    (self.e[i + 1] - self.e[i - 1]) / (2.0 * d)
                };
                1.0 + de
            })
            .collect()
    }

    /// Linear interpolation of a tabulated curve on this grid.
    pub fn interpolate(&self, values: &[f64], s: f64) -> f64 {
        let d = self.s[1] - self.s[0];
        let t = (s - self.s[0]) / d;
        if t <= 0.0 {
            return values[0];
        }
        let i = t.floor() as usize;
        if i + 1 >= values.len() {
            return *values.last().unwrap();
        }
        let f = t - i as f64;
        values[i] * (1.0 - f) + values[i + 1] * f
    }
}

const AIRY_PREC: u32 = 256;

fn airy_series(x: f64) -> (f64, f64) {
    let p = AIRY_PREC;
    let xf = Float::with_val(p, x);
    let x3 = Float::with_val(p, xf.clone().square() * &xf);
    let third = Float::with_val(p, 1) / 3u32;
    let two_thirds = Float::with_val(p, 2) / 3u32;
    // c1 = Ai(0), c2 = −Ai'(0)
    let c1 = Float::with_val(p, 3).pow(-two_thirds.clone()) / two_thirds.gamma();
    let c2 = Float::with_val(p, 3).pow(-third.clone()) / third.gamma();
    let tiny = Float::with_val(p, 2u32).pow(-(p as i32));
    let sum = |mut term: Float, step: &dyn Fn(u32) -> (u32, u32)| -> Float {
        let mut acc = Float::with_val(p, 0);
        let mut k = 0u32;
        loop {
            acc += &term;
            let (d1, d2) = step(k);
            term *= &x3;
            term /= d1;
            term /= d2;
            k += 1;
            if k > 3 && Float::with_val(p, term.abs_ref()) < Float::with_val(p, &tiny * acc.clone().abs()) + &tiny {
                break;
            }
        }
        acc
    };
    let f = sum(Float::with_val(p, 1), &|k| (3 * k + 2, 3 * k + 3));
    let g = sum(xf.clone(), &|k| (3 * k + 3, 3 * k + 4));
    let fp = if x == 0.0 {
        Float::with_val(p, 0)
    } else {
        // p_1 = x²/2, p_{k+1} = p_k x³/(3k(3k+2))
        sum(Float::with_val(p, xf.clone().square() / 2u32), &|k| (3 * (k + 1), 3 * (k + 1) + 2))
    };
    let gp = sum(Float::with_val(p, 1), &|k| (3 * k + 3, 3 * k + 1));
    let ai = Float::with_val(p, &c1 * &f) - Float::with_val(p, &c2 * &g);
    let aip = Float::with_val(p, &c1 * &fp) - Float::with_val(p, &c2 * &gp);
    (ai.to_f64(), aip.to_f64())
}

fn airy_asymptotic(x: f64) -> (f64, f64) {
    let y = x.abs();
    let zeta = 2.0 / 3.0 * y.powf(1.5);
    let mut u = vec![1.0f64];
    let mut v = vec![1.0f64];
    // stop near the smallest term of the divergent series
    for k in 1..60 {
        let kf = k as f64;
        let uk = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        if uk / zeta.powi(k as i32) > u[k - 1] / zeta.powi(k as i32 - 1) {
            break;
        }
        u.push(uk);
        v.push(-(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * uk);
    }
    let sq = PI.sqrt();
    if x > 0.0 {
        let (mut su, mut sv, mut zp) = (0.0, 0.0, 1.0);
        for k in 0..u.len() {
            let sg = if k % 2 == 0 { 1.0 } else { -1.0 };
            su += sg * u[k] / zp;
            sv += sg * v[k] / zp;
            zp *= zeta;
        }
        let e = (-zeta).exp();
        (e / (2.0 * sq * y.powf(0.25)) * su, -y.powf(0.25) * e / (2.0 * sq) * sv)
    } else {
        let th = zeta + PI / 4.0;
        let (mut ue, mut uo, mut ve, mut vo) = (0.0, 0.0, 0.0, 0.0);
        let mut zp = 1.0;
        for k in 0..u.len() {
            let j = k / 2;
            let sg = if j % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 0 {
                ue += sg * u[k] / zp;
                ve += sg * v[k] / zp;
            } else {
                uo += sg * u[k] / zp;
                vo += sg * v[k] / zp;
            }
            zp *= zeta;
        }
        let ai = (th.sin() * ue - th.cos() * uo) / (sq * y.powf(0.25));
        let aip = -y.powf(0.25) / sq * (th.cos() * ve + th.sin() * vo);
        (ai, aip)
    }
}

fn airy_pair(x: f64) -> Result<(f64, f64)> {
    if !(x.abs() <= 30.0) {
        return Err(Error::Invalid(format!("Airy argument {x} outside [-30, 30]")));
    }
    Ok(if x.abs() <= 8.0 { airy_series(x) } else { airy_asymptotic(x) })
}

pub fn airy(x: f64) -> Result<f64> {
    airy_pair(x).map(|p| p.0)
}

pub fn airy_prime(x: f64) -> Result<f64> {
    airy_pair(x).map(|p| p.1)
}

/// Both series branches, exposed for overlap checks.
pub fn airy_by_series(x: f64) -> (f64, f64) {
    airy_series(x)
}

pub fn airy_by_asymptotics(x: f64) -> (f64, f64) {
    airy_asymptotic(x)
}

pub const TW_NODES: usize = 64;

/// F_2(s) = det(Id − K_Airy) on [s, ∞).
pub fn tracy_widom_beta2(s: f64) -> Result<f64> {
    tracy_widom_beta2_with(s, TW_NODES)
}

pub fn tracy_widom_beta2_with(s: f64, m: usize) -> Result<f64> {
    if s < -10.0 {
        return Err(Error::Invalid("Tracy–Widom evaluation needs s ≥ −10".into()));
    }
    if s > 30.0 {
        return Ok(1.0);
    }
    let f = fredholm_det(&KernelSpec { kernel: Kernel::Airy, a: s, b: f64::INFINITY, m })?;
    Ok(f.clamp(0.0, 1.0))
}

/// det(Id − (K_N)_I) for the CD kernel of an N-scaled table on I = [a, b].
pub fn finite_n_gap(table: &RecurrenceTable, n: usize, a: f64, b: f64, m: usize) -> Result<f64> {
    fredholm_det(&KernelSpec { kernel: Kernel::FiniteN { table, n }, a, b, m })
}

/// Density of the largest eigenvalue, d/da E([a, ∞)).
pub fn p_largest(table: &RecurrenceTable, n: usize, a: f64, m: usize) -> Result<f64> {
    let h = 1e-4;
    let ep = finite_n_gap(table, n, a + h, f64::INFINITY, m)?;
    let em = finite_n_gap(table, n, a - h, f64::INFINITY, m)?;
    Ok((ep - em) / (2.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Potential;
    use crate::ortho::{recurrence, scaled_potential};

    #[test]
    fn trivial_kernels() {
        let zero = |_: f64, _: f64| 0.0;
        let d = fredholm_det(&KernelSpec { kernel: Kernel::User(&zero), a: 0.0, b: 1.0, m: 8 }).unwrap();
        assert_eq!(d, 1.0);
        // rank one f(x)g(y): 1 − ∫fg
        let f = |x: f64| (2.0 * x).cos() + x;
        let g = |y: f64| y * y - 0.3;
        let k = move |x: f64, y: f64| f(x) * g(y);
        let d = fredholm_det(&KernelSpec { kernel: Kernel::User(&k), a: 0.0, b: 1.0, m: 20 }).unwrap();
        // ∫₀¹ (cos 2x + x)(x² − 0.3) dx in closed form
        let s2 = 2f64.sin();
        let c2 = 2f64.cos();
        let int_cos_x2 = s2 / 2.0 + c2 / 2.0 - s2 / 4.0;
        let exact = int_cos_x2 - 0.3 * s2 / 2.0 + 0.25 - 0.15;
        assert!((d - (1.0 - exact)).abs() < 1e-12, "{d} vs {}", 1.0 - exact);
    }

    #[test]
    fn sine_gap_convergence_and_small_s() {
        for s in [0.5, 1.0, 2.0, 3.0, 4.0] {
            let e64 = sine_gap(s, 64).unwrap();
            let e128 = sine_gap(s, 128).unwrap();
            assert!((e64 - e128).abs() < 1e-8);
            assert!((0.0..=1.0).contains(&e64));
        }
        // 1 − s + π²s⁴/36 + …
        let s = 0.05;
        let e = sine_gap(s, 16).unwrap();
        assert!((e - (1.0 - s)).abs() < 1e-4 * s);
        assert!((e - (1.0 - s + PI * PI * s.powi(4) / 36.0 - PI.powi(4) * s.powi(6) / 675.0)).abs() < 1e-11);
    }

    #[test]
    fn spacing_law_properties() {
        let grid: Vec<f64> = (0..=600).map(|i| i as f64 * 0.01).collect();
        let gc = spacing_distribution(&grid, 40).unwrap();
        let p = gc.p.as_ref().unwrap();
        assert!(p[0].abs() < 1e-3);
        for w in gc.e.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        let d = 0.01;
        let trap = |f: &dyn Fn(usize) -> f64| (0..grid.len()).map(|i| f(i) * if i == 0 || i == grid.len() - 1 { d / 2.0 } else { d }).sum::<f64>();
        let mass = trap(&|i| p[i]);
        let mean = trap(&|i| p[i] * grid[i]);
        assert!((mass - 1.0).abs() < 1e-4, "mass {mass}");
        assert!((mean - 1.0).abs() < 1e-3, "mean {mean}");
        let sup = grid
            .iter()
            .zip(p)
            .filter(|(s, _)| **s <= 3.0)
            .map(|(s, p)| (p - crate::sampling::wigner_surmise(2, *s).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(sup < 0.02, "sup {sup}");
        assert!(spacing_distribution(&grid[..4], 20).is_err());
    }

    #[test]
    fn airy_values() {
        let ai0 = 0.355_028_053_887_817_2;
        let aip0 = -0.258_819_403_792_806_8;
        assert!((airy(0.0).unwrap() - ai0).abs() < 1e-15);
        assert!((airy_prime(0.0).unwrap() - aip0).abs() < 1e-15);
        // tabulated Ai(1), Ai(−2)
        assert!((airy(1.0).unwrap() - 0.135_292_416_312_881_4).abs() < 1e-14);
        assert!((airy(-2.0).unwrap() - 0.227_407_428_201_685_6).abs() < 1e-14);
        for x in [8.0, -8.0, 9.0, -9.0] {
            let (a, b) = airy_by_series(x);
            let (c, d) = airy_by_asymptotics(x);
            let sc = 1.0 + a.abs();
            assert!((a - c).abs() < 1e-12 * sc && (b - d).abs() < 1e-12 * (1.0 + b.abs()), "x={x}: {a} {c} {b} {d}");
        }
        assert!(airy(31.0).is_err());
    }

    #[test]
    fn airy_ode_residual() {
        let h = 1e-5;
        let mut x = -12.0;
        while x <= 12.0 {
            let app = (airy_prime(x + h).unwrap() - airy_prime(x - h).unwrap()) / (2.0 * h);
            let r = app - x * airy(x).unwrap();
            assert!(r.abs() < 1e-8, "x={x} r={r}");
            x += 0.37;
        }
        let mut prev = airy(1.0).unwrap();
        for i in 1..40 {
            let cur = airy(1.0 + i as f64 * 0.5).unwrap();
            assert!(cur < prev && cur > 0.0);
            prev = cur;
        }
    }

    #[test]
    fn tracy_widom_shape() {
        assert!(1.0 - tracy_widom_beta2(10.0).unwrap() < 1e-12);
        let mut prev = 0.0;
        for i in 0..=40 {
            let s = -8.0 + i as f64 * 0.3;
            let f = tracy_widom_beta2(s).unwrap();
            assert!(f >= prev - 1e-12, "s={s}");
            prev = f;
        }
        for s in [-4.0, -2.0, 0.0, 2.0] {
            let a = tracy_widom_beta2_with(s, 64).unwrap();
            let b = tracy_widom_beta2_with(s, 128).unwrap();
            assert!((a - b).abs() < 1e-9, "s={s}: {a} {b}");
        }
        // mean of TW2 ≈ −1.7711, from the CDF: ∫(1[s>0] − F)ds
        let d = 0.02;
        let mut mean = 0.0;
        let mut s = -9.0;
        while s < 6.0 {
            let f = tracy_widom_beta2(s + d / 2.0).unwrap();
            mean += if s + d / 2.0 > 0.0 { 1.0 - f } else { -f } * d;
            s += d;
        }
        assert!((mean + 1.7711).abs() < 1e-3, "mean {mean}");
    }

    #[test]
    fn finite_n_gaussian_gap() {
        let n = 2;
        let tab = recurrence(&scaled_potential(&Potential::gaussian(), n).unwrap(), 4).unwrap();
        assert_eq!(finite_n_gap(&tab, n, 1.0, 1.0, 16).unwrap(), 1.0);
        assert!(finite_n_gap(&tab, n, -12.0, 12.0, 80).unwrap().abs() < 1e-8);
        // inclusion–exclusion truncates at k = N
        let a = 0.4;
        let (x, w) = nodes(a, f64::INFINITY, 64);
        let k = |p: f64, q: f64| tab.cd_kernel_sum(n, p, q).unwrap();
        let one: f64 = x.iter().zip(&w).map(|(p, wp)| wp * k(*p, *p)).sum();
        let mut two = 0.0;
        for (p, wp) in x.iter().zip(&w) {
            for (q, wq) in x.iter().zip(&w) {
                two += wp * wq * (k(*p, *p) * k(*q, *q) - k(*p, *q) * k(*q, *p));
            }
        }
        let ie = 1.0 - one + two / 2.0;
        let e = finite_n_gap(&tab, n, a, f64::INFINITY, 64).unwrap();
        assert!((e - ie).abs() < 1e-8, "{e} vs {ie}");
        // λ_max density integrates to 1
        let mass = crate::quad::integrate(|a| p_largest(&tab, n, a, 48).unwrap(), -4.0, 5.0, 30, 12);
        assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
    }
}
