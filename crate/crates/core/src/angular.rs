//! Harish-Chandra–Itzykson–Zuber integrals over U(N):
//! Z(X, Y) = ∫ dU exp(−Σ_ij X_i Y_j |U_ij|²) under normalized Haar measure.

use nalgebra::{Complex, DMatrix};
use rug::Float;

use crate::error::{Error, Result};
use crate::ortho::det_float;
use crate::rng::Stream;
use crate::stats::jackknife_stderr;

#[derive(Clone, Debug)]
pub struct AngularProblem {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl AngularProblem {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::Invalid(format!("X and Y need equal nonzero length, got {} and {}", x.len(), y.len())));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite entry".into()));
        }
        Ok(AngularProblem { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    fn min_gap(&self) -> Result<f64> {
        let mut gap = f64::INFINITY;
        for v in [&self.x, &self.y] {
            for i in 0..v.len() {
                for j in i + 1..v.len() {
                    gap = gap.min((v[i] - v[j]).abs());
                }
            }
        }
        if gap == 0.0 {
            return Err(Error::Invalid("coincident entries in X or Y; perturb them or take the limit".into()));
        }
        Ok(gap)
    }

    /// Enough bits to absorb the cancellation of near-coincident entries.
    fn precision(&self) -> Result<u32> {
        let gap = self.min_gap()?;
        let n = self.n() as u32;
        let lost = if gap.is_finite() { (-gap.log2()).max(0.0).ceil() as u32 } else { 0 };
        Ok(128 + 2 * n * n * lost)
    }

    /// E_ij = exp(−X_i Y_j) with each row divided by its largest entry;
    /// returns the matrix and Σ of the removed log factors.
    fn scaled_e(&self, prec: u32) -> (Vec<Vec<Float>>, Float) {
        let mut logscale = Float::with_val(prec, 0);
        let rows = self
            .x
            .iter()
            .map(|&xi| {
                let ex: Vec<Float> = self.y.iter().map(|&yj| -(Float::with_val(prec, xi) * yj)).collect();
                let m = ex.iter().max_by(|a, b| a.partial_cmp(b).unwrap()).unwrap().clone();
                logscale += &m;
                ex.into_iter().map(|e| (e - &m).exp()).collect()
            })
            .collect();
        (rows, logscale)
    }
}

/// (−1)^{N(N−1)/2}: the sign relating Δ(−X) to Δ(X), fixed by the N = 2, 3 MC runs.
pub fn hc_sign(n: usize) -> f64 {
    if (n * (n - 1) / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn vandermonde(v: &[f64], prec: u32) -> Float {
    let mut d = Float::with_val(prec, 1);
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            d *= Float::with_val(prec, v[i]) - v[j];
        }
    }
    d
}

/// Z(X, Y) = (−1)^{N(N−1)/2} Π_{j<N} j! · det e^{−X_i Y_j} / (Δ(X) Δ(Y)).
pub fn hc_integral(p: &AngularProblem) -> Result<f64> {
    let prec = p.precision()?;
    let n = p.n();
    let (e, logscale) = p.scaled_e(prec);
    let mut z = det_float(e, prec) * logscale.exp();
    for j in 1..n {
        for k in 2..=j {
            z *= k as u32;
        }
    }
    z /= vandermonde(&p.x, prec) * vandermonde(&p.y, prec);
    Ok(hc_sign(n) * z.to_f64())
}

/// Morozov's ⟨|U_ij|²⟩ under the measure e^{−Σ X_k Y_l |U_kl|²} dU / Z,
/// as the double residue at (X_i, Y_j) of det(E + (x−X)⁻¹E(y−Y)⁻¹)/det E.
pub fn morozov_moments(p: &AngularProblem) -> Result<Vec<Vec<f64>>> {
    let prec = p.precision()?;
    let n = p.n();
    let (e, _) = p.scaled_e(prec);
    let det_e = det_float(e.clone(), prec);
    let f = |v: f64| Float::with_val(prec, v);
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let g: Vec<Vec<Float>> = (0..n)
                .map(|k| {
                    (0..n)
                        .map(|l| {
                            let ekl = e[k][l].clone();
                            match (k == i, l == j) {
                                (true, true) => ekl,
                                (true, false) => ekl / (f(p.y[j]) - p.y[l]),
                                (false, true) => ekl / (f(p.x[i]) - p.x[k]),
                                (false, false) => {
                                    let r = ((f(p.x[i]) - p.x[k]) * (f(p.y[j]) - p.y[l])).recip();
                                    ekl * (r + 1u32)
                                }
                            }
                        })
                        .collect()
                })
                .collect();
            out[i][j] = (det_float(g, prec) / &det_e).to_f64();
        }
    }
    Ok(out)
}

pub type C64 = Complex<f64>;

#[derive(Clone, Debug)]
pub struct HaarSample {
    pub u: DMatrix<C64>,
    pub seed: u64,
}

fn haar_from_stream(n: usize, rng: &mut Stream) -> DMatrix<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let g = DMatrix::from_fn(n, n, |_, _| C64::new(rng.normal() * s, rng.normal() * s));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Haar unitary from the phase-corrected QR of a complex Ginibre matrix.
pub fn haar_sample(n: usize, seed: u64) -> Result<HaarSample> {
    if n == 0 {
        return Err(Error::Invalid("N must be at least 1".into()));
    }
    Ok(HaarSample { u: haar_from_stream(n, &mut Stream::new(seed, 0)), seed })
}

#[derive(Clone, Debug)]
pub struct McAngular {
    pub estimate: f64,
    pub stderr: f64,
    /// Σ w |U_ij|² / Σ w: the tilted-measure moment matrix.
    pub moments: Vec<Vec<f64>>,
}

/// Sample mean of e^{−Σ X_i Y_j |U_ij|²} over Haar draws, with jackknife error.
/// Draw k uses its own stream, so results do not depend on evaluation order.
pub fn mc_angular(p: &AngularProblem, samples: usize, seed: u64) -> Result<McAngular> {
    if samples < 2 {
        return Err(Error::Invalid("need at least 2 samples".into()));
    }
    let n = p.n();
    let mut w = Vec::with_capacity(samples);
    let mut acc = vec![vec![0.0; n]; n];
    for k in 0..samples {
        let u = haar_from_stream(n, &mut Stream::new(seed, k as u64));
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += p.x[i] * p.y[j] * u[(i, j)].norm_sqr();
            }
        }
        let wk = (-s).exp();
        for i in 0..n {
            for j in 0..n {
                acc[i][j] += wk * u[(i, j)].norm_sqr();
            }
        }
        w.push(wk);
    }
    let total: f64 = w.iter().sum();
    let moments = acc.into_iter().map(|row| row.into_iter().map(|a| a / total).collect()).collect();
    Ok(McAngular { estimate: total / samples as f64, stderr: jackknife_stderr(&w), moments })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prob(x: &[f64], y: &[f64]) -> AngularProblem {
        AngularProblem::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn trivial_cases() {
        let z = hc_integral(&prob(&[0.7], &[1.3])).unwrap();
        assert!((z - (-0.7f64 * 1.3).exp()).abs() < 1e-15);
        assert_eq!(morozov_moments(&prob(&[0.7], &[1.3])).unwrap(), vec![vec![1.0]]);
        let s = 1e-9;
        let z = hc_integral(&prob(&[0.0, 1.0, 2.0], &[0.0, s, 3.0 * s])).unwrap();
        assert!((z - 1.0).abs() < 1e-6);
        assert!(hc_integral(&prob(&[1.0, 1.0], &[0.0, 1.0])).is_err());
        let mc = mc_angular(&prob(&[0.0, 0.0], &[1.0, 2.0]), 10, 1).unwrap();
        assert_eq!((mc.estimate, mc.stderr), (1.0, 0.0));
    }

    #[test]
    fn symmetries() {
        let (x, y) = ([0.3, -1.1, 2.0], [0.5, 1.7, -0.4]);
        let z = hc_integral(&prob(&x, &y)).unwrap();
        assert!((z - hc_integral(&prob(&y, &x)).unwrap()).abs() < 1e-12 * z.abs());
        for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            let xp: Vec<f64> = perm.iter().map(|&i| x[i]).collect();
            assert!((hc_integral(&prob(&xp, &y)).unwrap() - z).abs() < 1e-12 * z.abs());
        }
        let a = hc_integral(&prob(&[0.4, 0.4 + 1e-4, 1.5], &y)).unwrap();
        let b = hc_integral(&prob(&[0.4, 0.4 + 1e-6, 1.5], &y)).unwrap();
        assert!((a - b).abs() < 1e-4 * b.abs());
    }

    #[test]
    fn morozov_sum_rules_and_flat_limit() {
        let m = morozov_moments(&prob(&[0.0, 1.0, 2.5, -0.8], &[0.0, 0.7, 1.3, 2.2])).unwrap();
        for i in 0..4 {
            let r: f64 = m[i].iter().sum();
            let c: f64 = m.iter().map(|row| row[i]).sum();
            assert!((r - 1.0).abs() < 1e-10 && (c - 1.0).abs() < 1e-10);
        }
        let s = 1e-9;
        let m = morozov_moments(&prob(&[0.0, s, 2.0 * s], &[0.0, 0.7, 1.3])).unwrap();
        for row in &m {
            for v in row {
                assert!((v - 1.0 / 3.0).abs() < 1e-6, "{v}");
            }
        }
    }

    #[test]
    fn morozov_is_the_residue_of_the_generating_function() {
        // N = 2: ⟨Tr U†(x−X)⁻¹U(y−Y)⁻¹⟩ = det(E + (x−X)⁻¹E(y−Y)⁻¹)/det E − 1,
        // integrated over small circles around X_i and Y_j.
        let (x, y) = ([0.2, 1.4], [-0.3, 0.9]);
        let m = morozov_moments(&prob(&x, &y)).unwrap();
        let e = |a: f64, b: f64| (-a * b).exp();
        let det_e = e(x[0], y[0]) * e(x[1], y[1]) - e(x[0], y[1]) * e(x[1], y[0]);
        let gen = |zx: C64, zy: C64| {
            let g = |k: usize, l: usize| C64::new(e(x[k], y[l]), 0.0) * (C64::new(1.0, 0.0) + ((zx - x[k]) * (zy - y[l])).inv());
            (g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0)) / det_e - 1.0
        };
        let pts = 64;
        let r = 0.1;
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = C64::new(0.0, 0.0);
                for a in 0..pts {
                    let ta = 2.0 * std::f64::consts::PI * a as f64 / pts as f64;
                    let da = C64::from_polar(r, ta);
                    for b in 0..pts {
                        let tb = 2.0 * std::f64::consts::PI * b as f64 / pts as f64;
                        let db = C64::from_polar(r, tb);
                        acc += gen(x[i] + da, y[j] + db) * da * db;
                    }
                }
                let res = acc / (pts * pts) as f64;
                assert!((res.re - m[i][j]).abs() < 1e-8 && res.im.abs() < 1e-8, "{i}{j}: {res} vs {}", m[i][j]);
            }
        }
    }

    #[test]
    fn haar_properties() {
        let h = haar_sample(5, 3).unwrap();
        let id = &h.u * h.u.adjoint();
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }
        assert!((h.u.determinant().norm() - 1.0).abs() < 1e-12);
        // first moments and the fourth moment ⟨|U_11|⁴⟩ = 2/(N(N+1))
        let (n, draws) = (3, 100_000);
        let (mut m1, mut m2, mut m4, mut tr2) = (C64::new(0.0, 0.0), 0.0, 0.0, 0.0);
        for k in 0..draws {
            let u = haar_from_stream(n, &mut Stream::new(11, k));
            m1 += u[(0, 1)];
            m2 += u[(1, 2)].norm_sqr();
            m4 += u[(0, 0)].norm_sqr().powi(2);
            tr2 += u.trace().norm_sqr();
        }
        let d = draws as f64;
        let sd = |var: f64| 3.0 * (var / d).sqrt();
        assert!((m1 / d).norm() < sd(1.0 / 3.0));
        assert!((m2 / d - 1.0 / 3.0).abs() < sd(1.0 / 3.0 * 2.0 / 3.0));
        assert!((m4 / d - 1.0 / 6.0).abs() < sd(0.1));
        // |Tr U|² has mean 1 under Haar; a wrong phase fix breaks this
        assert!((tr2 / d - 1.0).abs() < sd(1.0));
    }

    #[test]
    fn formula_brackets_monte_carlo() {
        for (x, y) in [(vec![0.0, 1.0], vec![0.0, 1.0]), (vec![0.0, 1.0, 2.5], vec![0.0, 0.7, 1.3])] {
            let p = prob(&x, &y);
            let z = hc_integral(&p).unwrap();
            let mc = mc_angular(&p, 20_000, 5).unwrap();
            assert!((z - mc.estimate).abs() < 3.0 * mc.stderr, "N={}: {z} vs {} ± {}", x.len(), mc.estimate, mc.stderr);
        }
    }
}
