//! Gaussian β-ensembles and Wishart matrices, unfolding and spacing statistics.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::eigenvalues_symmetric;
use crate::rng::Stream;
pub use crate::stats::{histogram, Histogram};

/// Gaussian ensemble with weight exp(−(Nβ/4) Tr M²).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnsembleSpec {
    pub beta: u8,
    pub n: usize,
}

impl EnsembleSpec {
    pub fn new(beta: u8, n: usize) -> Result<Self> {
        if ![1, 2, 4].contains(&beta) {
            return Err(Error::Invalid(format!("beta must be 1, 2 or 4, got {beta}")));
        }
        if n == 0 {
            return Err(Error::Invalid("matrix size must be at least 1".into()));
        }
        Ok(EnsembleSpec { beta, n })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampledSpectrum {
    pub eigenvalues: Vec<f64>,
    pub spec: EnsembleSpec,
    pub seed: u64,
    pub draw: u64,
}

/// One draw; the draw index selects an independent RNG stream.
pub fn sample_gaussian(spec: EnsembleSpec, seed: u64, draw: u64) -> SampledSpectrum {
    let n = spec.n;
    let nf = n as f64;
    let mut rng = Stream::new(seed, draw);
    let eigenvalues = match spec.beta {
        1 => {
            let mut a = vec![0.0; n * n];
            let (sd_diag, sd_off) = ((2.0 / nf).sqrt(), (1.0 / nf).sqrt());
            for i in 0..n {
                a[i * n + i] = sd_diag * rng.normal();
                for j in 0..i {
                    let x = sd_off * rng.normal();
                    a[i * n + j] = x;
                    a[j * n + i] = x;
                }
            }
            eigenvalues_symmetric(&a, n).expect("symmetric by construction")
        }
        2 => {
            let (sd_diag, sd_off) = ((1.0 / nf).sqrt(), (0.5 / nf).sqrt());
            let mut re = vec![0.0; n * n];
            let mut im = vec![0.0; n * n];
            for i in 0..n {
                re[i * n + i] = sd_diag * rng.normal();
                for j in 0..i {
                    let (x, y) = (sd_off * rng.normal(), sd_off * rng.normal());
                    re[i * n + j] = x;
                    re[j * n + i] = x;
                    im[i * n + j] = y;
                    im[j * n + i] = -y;
                }
            }
            let big = embed_hermitian(&re, &im, n);
            every_kth(eigenvalues_symmetric(&big, 2 * n).expect("symmetric"), 2)
        }
        _ => {
            // quaternion self-dual matrix via its 2N×2N complex image
            let (sd_diag, sd_off) = ((0.5 / nf).sqrt(), (0.25 / nf).sqrt());
            let m = 2 * n;
            let mut re = vec![0.0; m * m];
            let mut im = vec![0.0; m * m];
            let mut put = |i: usize, j: usize, q: [f64; 4]| {
                // q = a + b i + c j + d k  ↦  [[a+bi, c+di], [−c+di, a−bi]]
                let [a, b, c, d] = q;
                let (r, s) = (2 * i, 2 * j);
                re[r * m + s] = a;
                im[r * m + s] = b;
                re[r * m + s + 1] = c;
                im[r * m + s + 1] = d;
                re[(r + 1) * m + s] = -c;
                im[(r + 1) * m + s] = d;
                re[(r + 1) * m + s + 1] = a;
                im[(r + 1) * m + s + 1] = -b;
            };
            for i in 0..n {
                put(i, i, [sd_diag * rng.normal(), 0.0, 0.0, 0.0]);
                for j in 0..i {
                    let q = [
                        sd_off * rng.normal(),
                        sd_off * rng.normal(),
                        sd_off * rng.normal(),
                        sd_off * rng.normal(),
                    ];
                    put(i, j, q);
                    put(j, i, [q[0], -q[1], -q[2], -q[3]]);
                }
            }
            let big = embed_hermitian(&re, &im, m);
            every_kth(eigenvalues_symmetric(&big, 2 * m).expect("symmetric"), 4)
        }
    };
    SampledSpectrum { eigenvalues, spec, seed, draw }
}

/// Real symmetric image [[X, −Y], [Y, X]] of the Hermitian matrix X + iY.
fn embed_hermitian(re: &[f64], im: &[f64], n: usize) -> Vec<f64> {
    let m = 2 * n;
    let mut big = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (re[i * n + j], im[i * n + j]);
            big[i * m + j] = x;
            big[(i + n) * m + j + n] = x;
            big[i * m + j + n] = -y;
            big[(i + n) * m + j] = y;
        }
    }
    big
}

/// Collapses k-fold degenerate sorted eigenvalues by averaging each group.
fn every_kth(v: Vec<f64>, k: usize) -> Vec<f64> {
    v.chunks(k).map(|c| c.iter().sum::<f64>() / k as f64).collect()
}

/// Eigenvalues of (1/N) XᵀX with X an N×p matrix of i.i.d. N(0, σ²) entries.
pub fn sample_wishart(p: usize, n: usize, sigma2: f64, seed: u64, draw: u64) -> Result<SampledSpectrum> {
    if p == 0 || p > n {
        return Err(Error::Invalid(format!("Wishart needs 1 ≤ p ≤ N, got p={p}, N={n}")));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::Invalid("sigma2 must be positive".into()));
    }
    let mut rng = Stream::new(seed, draw);
    let sd = sigma2.sqrt();
    let x: Vec<f64> = (0..n * p).map(|_| sd * rng.normal()).collect();
    let mut w = vec![0.0; p * p];
    for r in 0..n {
        let row = &x[r * p..(r + 1) * p];
        for i in 0..p {
            let xi = row[i];
            for j in 0..=i {
                w[i * p + j] += xi * row[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..=i {
            let v = w[i * p + j] / n as f64;
            w[i * p + j] = v;
            w[j * p + i] = v;
        }
    }
    Ok(SampledSpectrum {
        eigenvalues: eigenvalues_symmetric(&w, p)?,
        spec: EnsembleSpec { beta: 1, n: p },
        seed,
        draw,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unfolding {
    /// λ ↦ N ∫_{−2}^{λ} of the semicircle.
    IntegratedSemicircle,
    /// Input is already at unit mean density.
    Identity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpacingSample {
    pub spacings: Vec<f64>,
    pub method: Unfolding,
    pub bulk_fraction: f64,
}

/// Cumulative semicircle mass on (−2, x].
pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        return 0.0;
    }
    if x >= 2.0 {
        return 1.0;
    }
    0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (x / 2.0).asin() / PI
}

pub fn unfold_spacings(eigenvalues: &[f64], method: Unfolding, bulk_fraction: f64) -> Result<SpacingSample> {
    let n = eigenvalues.len();
    let drop = (((1.0 - bulk_fraction) / 2.0) * n as f64).round() as usize;
    if n < 2 * drop + 3 {
        return Err(Error::Invalid(format!(
            "only {} eigenvalues retained; need at least 3",
            n.saturating_sub(2 * drop)
        )));
    }
    let kept = &eigenvalues[drop..n - drop];
    let unfolded: Vec<f64> = match method {
        Unfolding::IntegratedSemicircle => {
            kept.iter().map(|&x| n as f64 * semicircle_cdf(x)).collect()
        }
        Unfolding::Identity => kept.to_vec(),
    };
    Ok(SpacingSample {
        spacings: unfolded.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect(),
        method,
        bulk_fraction,
    })
}

/// Unfolded bulk spacings pooled over `draws` independent draws, sorted.
pub fn pooled_spacings(spec: EnsembleSpec, seed: u64, draws: u64, bulk_fraction: f64) -> Result<Vec<f64>> {
    let mut all = Vec::new();
    for d in 0..draws {
        let s = sample_gaussian(spec, seed, d);
        all.extend(unfold_spacings(&s.eigenvalues, Unfolding::IntegratedSemicircle, bulk_fraction)?.spacings);
    }
    all.sort_by(|a, b| a.total_cmp(b));
    Ok(all)
}

/// All eigenvalues of `draws` draws, sorted.
pub fn pooled_eigenvalues(spec: EnsembleSpec, seed: u64, draws: u64) -> Vec<f64> {
    let mut all: Vec<f64> = (0..draws).flat_map(|d| sample_gaussian(spec, seed, d).eigenvalues).collect();
    all.sort_by(|a, b| a.total_cmp(b));
    all
}

/// Γ(k/2) for positive integers k.
pub fn gamma_half(k: u32) -> f64 {
    assert!(k >= 1);
    if k % 2 == 0 {
        (1..k / 2).map(|j| j as f64).product()
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x < k as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// (C_β, a_β) such that C s^β e^{−a s²} has unit mass and unit mean.
pub fn wigner_constants(beta: u8) -> Result<(f64, f64)> {
    if ![1, 2, 4].contains(&beta) {
        return Err(Error::Invalid(format!("no Wigner surmise for beta = {beta}")));
    }
    let b = beta as u32;
    let (g1, g2) = (gamma_half(b + 1), gamma_half(b + 2));
    let a = (g2 / g1).powi(2);
    let c = 2.0 * a.powf((b as f64 + 1.0) / 2.0) / g1;
    Ok((c, a))
}

pub fn wigner_surmise(beta: u8, s: f64) -> Result<f64> {
    let (c, a) = wigner_constants(beta)?;
    Ok(if s < 0.0 { 0.0 } else { c * s.powi(beta as i32) * (-a * s * s).exp() })
}
