//! Acceptance checks shared by `rmtk selftest` and the acceptance test target.

use std::time::Instant;

use rug::Rational;

use rmtk_core::angular::{hc_integral, mc_angular, morozov_moments, AngularProblem};
use rmtk_core::fredholm::{fredholm_det, sine_gap, spacing_distribution, tracy_widom_beta2, Kernel, KernelSpec};
use rmtk_core::maps::{connected_correlator_coeffs, gaussian_moment, GenusPolynomial, TraceWord};
use rmtk_core::model::{FormalScalar, Potential};
use rmtk_core::ortho::{banded_power_row, hankel_partition, moments, motzkin_paths, motzkin_sum, recurrence, recurrence_from_moments, scaled_potential};
use rmtk_core::quad;
use rmtk_core::saddle::{marchenko_pastur_density, marchenko_pastur_edges, semicircle_density, solve_one_cut, solve_one_cut_formal};
use rmtk_core::sampling::{histogram, pooled_eigenvalues, pooled_spacings, sample_gaussian, sample_wishart, wigner_surmise, EnsembleSpec};
use rmtk_core::stats::ks_distance;
use rmtk_core::toprec::{SpectralCurve, TopRec};

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: u8,
    pub pass: bool,
    pub summary: String,
    pub details: Vec<String>,
    pub seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!("[{:>2}] {} {} ({:.1} s)", self.id, if self.pass { "PASS" } else { "FAIL" }, self.summary, self.seconds)
    }
}

type Check = (bool, String, Vec<String>);

fn timed(id: u8, limit: Option<f64>, f: impl FnOnce() -> Check) -> Outcome {
    let t0 = Instant::now();
    let (mut pass, summary, mut details) = f();
    let seconds = t0.elapsed().as_secs_f64();
    if let Some(l) = limit {
        if seconds > l {
            pass = false;
            details.push(format!("runtime {seconds:.1} s exceeds {l} s"));
        }
    }
    Outcome { id, pass, summary, details, seconds }
}

fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

/// N⟨Tr M⁴⟩ = 2N² + 1.
pub fn criterion_1() -> Outcome {
    timed(1, Some(1.0), || {
        let m4 = gaussian_moment(&TraceWord::new(&[4], 0), false).unwrap().shift(1);
        let want = GenusPolynomial::monomial(2, q(2, 1)).add(&GenusPolynomial::monomial(0, q(1, 1)));
        (m4 == want, format!("Wick: N<Tr M^4> = {m4}, expected 2N^2 + 1"), vec![])
    })
}

/// The (g, n, μ, q) grid on which the recursion must reproduce the map counts.
pub fn oracle_grid() -> Vec<(usize, Vec<usize>, usize)> {
    let mut g = vec![];
    for mu in 2..=6 {
        g.push((0, vec![mu], 2));
    }
    g.push((0, vec![2, 2], 2));
    for mu in 1..=4 {
        g.push((1, vec![mu], 2));
    }
    g.push((0, vec![2, 2, 2], 1));
    g.push((1, vec![2, 2], 1));
    g
}

pub fn criterion_2() -> Outcome {
    timed(2, Some(120.0), || {
        let mut tr = TopRec::new(SpectralCurve::from_potential(&Potential::formal_quartic(2)).unwrap()).unwrap();
        let mut details = vec![];
        let mut checked = 0;
        for (g, mu, order) in oracle_grid() {
            let w = match tr.w_coefficient(g, &mu) {
                Ok(w) => w,
                Err(e) => {
                    details.push(format!("(g={g}, mu={mu:?}) recursion failed: {e}"));
                    continue;
                }
            };
            let table = connected_correlator_coeffs(&mu, order).unwrap();
            for qq in 0..=order {
                let want = table.get(&(g, qq)).cloned().unwrap_or_default();
                checked += 1;
                if w.coeff(qq) != want {
                    details.push(format!("g={g} mu={mu:?} q={qq}: recursion {} vs maps {want}", w.coeff(qq)));
                }
            }
        }
        (details.is_empty(), format!("TR vs map enumeration: {} of {checked} exact coefficients agree", checked - details.len()), details)
    })
}

pub fn criterion_3() -> Outcome {
    timed(3, None, || {
        let curve = solve_one_cut_formal(&Potential::formal_quartic(4)).unwrap();
        let series_ok = curve.gamma2.to_coeffs(3) == vec![q(1, 1), q(3, 1), q(18, 1), q(135, 1)];
        let t = FormalScalar::coupling(4);
        let back = FormalScalar::one() + (&t * &(&curve.gamma2 * &curve.gamma2)).scale(&q(3, 1));
        let back_ok = back == curve.gamma2;
        let c = solve_one_cut(&Potential::scaled_quartic(&q(-1, 2)).unwrap()).unwrap();
        let closed = (1.0 + 7f64.sqrt()) / 6.0;
        let err = (c.gamma * c.gamma - closed).abs();
        let details = vec![format!("gamma^2 series: {:?}", curve.gamma2.to_coeffs(3).iter().map(|r| r.to_string()).collect::<Vec<_>>())];
        (
            series_ok && back_ok && err < 1e-12,
            format!("quartic gamma^2: series {series_ok}, back-substitution {back_ok}, |gamma^2 - (1+sqrt 7)/6| = {err:.1e} at t = -1/2"),
            details,
        )
    })
}

pub fn criterion_4() -> Outcome {
    timed(4, None, || {
        let mut details = vec![];
        let tab = recurrence(&Potential::gaussian(), 20).unwrap();
        let mut gerr: f64 = 0.0;
        for k in 0..=20 {
            gerr = gerr.max(tab.s_f64(k).abs());
            if k >= 1 {
                gerr = gerr.max((tab.gamma_f64(k) - (k as f64).sqrt()).abs());
            }
        }
        let quartic = Potential::from_terms(&[(2, q(1, 1)), (4, q(1, 1))]).unwrap();
        let qt = recurrence(&quartic, 16).unwrap();
        let mut serr: f64 = 0.0;
        for k in 1..=10 {
            let (r1, r2) = qt.string_residual(k).unwrap();
            serr = serr.max(r1.abs()).max(r2.abs());
        }
        let mut zerr: f64 = 0.0;
        for v in [Potential::gaussian(), quartic] {
            let mt = moments(&v, 20).unwrap();
            let t = recurrence_from_moments(&v, &mt, 9).unwrap();
            for n in 1..=8 {
                let z = t.partition_function(n).unwrap().to_f64();
                let h = hankel_partition(&mt, n).unwrap().to_f64();
                zerr = zerr.max(((z - h) / h).abs());
            }
        }
        details.push(format!("Gaussian max |S_k|, |gamma_k - sqrt k| (k <= 20): {gerr:.1e}"));
        details.push(format!("quartic string residual max (k <= 10): {serr:.1e}"));
        details.push(format!("Z_N vs Hankel max relative error (N <= 8): {zerr:.1e}"));
        (gerr < 1e-10 && serr < 1e-8 && zerr < 1e-10, "orthogonal polynomials: Gaussian recurrence, string equation, Hankel".into(), details)
    })
}

pub fn criterion_5() -> Outcome {
    timed(5, None, || {
        let gamma: Vec<Rational> = (0..16).map(|k| if k == 0 { q(0, 1) } else { q(2 * k + 3, k + 2) }).collect();
        let s: Vec<Rational> = (0..16).map(|k| q(k * k + 1, 3 * k + 1)).collect();
        let mut mismatches = 0;
        let mut cases = 0;
        for start in 0..=5 {
            for m in 0..=8 {
                let row = banded_power_row(&gamma, &s, start, m).unwrap();
                cases += 1;
                if row.get(start).cloned().unwrap_or_default() != motzkin_sum(&gamma, &s, start, start, m) {
                    mismatches += 1;
                }
            }
        }
        let mut labels: Vec<String> = motzkin_paths(0, 0, 3).iter().map(|p| p.labels.join("")).collect();
        labels.sort();
        let mut corrected: Vec<String> = ["S0S0S0", "S0γ1γ1", "γ1γ1S0", "γ1S1γ1"].iter().map(|s| s.to_string()).collect();
        corrected.sort();
        let mut literal: Vec<String> = ["S0S0S0", "S0γ1γ1", "γ1γ1S0", "γ1S0γ1"].iter().map(|s| s.to_string()).collect();
        literal.sort();
        let details = vec![
            format!("(Q^3)_00 paths from enumeration: {labels:?}"),
            format!("figure as printed (fourth path γ1S0γ1) matches: {}", labels == literal),
            format!("figure with the flat step at height 1 (γ1S1γ1) matches: {}", labels == corrected),
        ];
        (
            mismatches == 0 && labels == corrected,
            format!("Motzkin sums vs banded powers: {} of {cases} diagonal entries exact; four-path decomposition of (Q^3)_00", cases - mismatches),
            details,
        )
    })
}

pub fn criterion_6() -> Outcome {
    timed(6, Some(60.0), || {
        let n = 200;
        let ev = pooled_eigenvalues(EnsembleSpec::new(2, n).unwrap(), 20260601, 200);
        let h = histogram(&ev, 80, -2.2, 2.2).unwrap();
        let l1_gue = h.l1_distance(semicircle_density);
        let p = 200;
        let mut w = vec![];
        for d in 0..200 {
            w.extend(sample_wishart(p, 4 * p, 4.0, 20260602, d).unwrap().eigenvalues);
        }
        let (lo, hi) = marchenko_pastur_edges(4.0, 1.0);
        let hw = histogram(&w, 80, lo - 0.5, hi + 0.5).unwrap();
        let l1_mp = hw.l1_distance(|x| marchenko_pastur_density(x, 4.0, 1.0).unwrap());
        (
            l1_gue < 0.05 && l1_mp < 0.07,
            format!("GUE N=200 x 200 draws: L1 = {l1_gue:.4} (< 0.05); Wishart u=4: L1 = {l1_mp:.4} (< 0.07), edges ({lo}, {hi})"),
            vec![],
        )
    })
}

pub fn criterion_7() -> Outcome {
    timed(7, Some(300.0), || {
        let sp = pooled_spacings(EnsembleSpec::new(2, 200).unwrap(), 20260603, 1011, 0.5).unwrap();
        let grid: Vec<f64> = (0..=240).map(|i| i as f64 * 0.025).collect();
        let curve = spacing_distribution(&grid, 48).unwrap();
        let cdf = curve.spacing_cdf();
        let ks = ks_distance(&sp, |s| curve.interpolate(&cdf, s).clamp(0.0, 1.0));
        let p = curve.p.as_ref().unwrap();
        let sup = grid
            .iter()
            .zip(p)
            .filter(|(s, _)| **s <= 3.0)
            .map(|(s, p)| (p - wigner_surmise(2, *s).unwrap()).abs())
            .fold(0.0, f64::max);
        (
            sp.len() >= 100_000 && ks < 0.02 && sup < 0.02,
            format!("{} pooled GUE spacings vs Fredholm P(s): KS = {ks:.4} (< 0.02); sup |P - Wigner| on [0,3] = {sup:.4} (< 0.02)", sp.len()),
            vec![],
        )
    })
}

pub fn criterion_8() -> Outcome {
    timed(8, None, || {
        let mut worst: f64 = 0.0;
        for i in 1..=16 {
            let s = 0.25 * i as f64;
            worst = worst.max((sine_gap(s, 64).unwrap() - sine_gap(s, 128).unwrap()).abs());
        }
        let f = |x: f64| (2.0 * x).cos() + x;
        let g = |y: f64| y * y - 0.3;
        let k = move |x: f64, y: f64| f(x) * g(y);
        let d = fredholm_det(&KernelSpec { kernel: Kernel::User(&k), a: 0.0, b: 1.0, m: 20 }).unwrap();
        let (s2, c2) = (2f64.sin(), 2f64.cos());
        // 1 − ∫₀¹ f g
        let exact = 1.0 - (s2 / 2.0 + c2 / 2.0 - s2 / 4.0 - 0.3 * s2 / 2.0 + 0.25 - 0.15);
        let rank1 = (d - exact).abs();
        (
            worst < 1e-8 && rank1 < 1e-12,
            format!("Nystrom: max |E_64 - E_128| (sine, s <= 4) = {worst:.1e} (< 1e-8); rank-one error {rank1:.1e} (< 1e-12)"),
            vec![],
        )
    })
}

pub fn criterion_9() -> Outcome {
    timed(9, Some(600.0), || {
        let n = 100;
        let spec = EnsembleSpec::new(2, n).unwrap();
        let xi: Vec<f64> = (0..2000)
            .map(|d| {
                let ev = sample_gaussian(spec, 20260604, d).eigenvalues;
                let top = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (top - 2.0) * (n as f64).powf(2.0 / 3.0)
            })
            .collect();
        let (lo, step) = (-8.0, 0.02);
        let table: Vec<f64> = (0..=600).map(|i| tracy_widom_beta2(lo + step * i as f64).unwrap()).collect();
        let cdf = |s: f64| {
            let t = (s - lo) / step;
            if t <= 0.0 {
                return table[0];
            }
            let i = t.floor() as usize;
            if i + 1 >= table.len() {
                return 1.0;
            }
            let f = t - i as f64;
            table[i] * (1.0 - f) + table[i + 1] * f
        };
        let ks = ks_distance(&xi, cdf);
        (ks < 0.05, format!("GUE N=100, 2000 draws, scaled largest eigenvalue vs Tracy-Widom F2: KS = {ks:.4} (< 0.05)"), vec![])
    })
}

pub fn criterion_10() -> Outcome {
    timed(10, None, || {
        let mut details = vec![];
        let mut pass = true;
        for (x, y) in [(vec![0.0, 1.0], vec![0.0, 1.0]), (vec![0.0, 1.0, 2.5], vec![0.0, 0.7, 1.3])] {
            let p = AngularProblem::new(x.clone(), y.clone()).unwrap();
            let z = hc_integral(&p).unwrap();
            let mc = mc_angular(&p, 100_000, 20260605).unwrap();
            let dev = (z - mc.estimate).abs() / mc.stderr;
            pass &= dev < 3.0;
            details.push(format!("N={}: formula {z:.6}, MC {:.6} +- {:.6} ({dev:.2} sigma)", x.len(), mc.estimate, mc.stderr));
        }
        let m = morozov_moments(&AngularProblem::new(vec![0.0, 1.0, 2.5, -0.8], vec![0.0, 0.7, 1.3, 2.2]).unwrap()).unwrap();
        let mut sums: f64 = 0.0;
        for i in 0..4 {
            sums = sums.max((m[i].iter().sum::<f64>() - 1.0).abs());
            sums = sums.max((m.iter().map(|r| r[i]).sum::<f64>() - 1.0).abs());
        }
        let eps = 1e-9;
        let flat = morozov_moments(&AngularProblem::new(vec![0.0, eps, 2.0 * eps], vec![0.0, 0.7, 1.3]).unwrap()).unwrap();
        let lim = flat.iter().flatten().map(|v| (v - 1.0 / 3.0).abs()).fold(0.0, f64::max);
        pass &= sums < 1e-10 && lim < 1e-6;
        details.push(format!("Morozov row/column sums: max deviation {sums:.1e}; X -> 0 limit: max |M - 1/N| = {lim:.1e}"));
        (pass, "HCIZ formula vs Haar Monte Carlo (N = 2, 3; 1e5 samples); Morozov sum rules and flat limit".into(), details)
    })
}

pub fn criterion_11() -> Outcome {
    timed(11, None, || {
        let v = Potential::from_terms(&[(2, q(1, 1)), (4, q(1, 1))]).unwrap();
        let curve = solve_one_cut(&v).unwrap();
        let mass = curve.mass();
        let n = 60;
        let tab = recurrence(&scaled_potential(&v, n).unwrap(), n + 1).unwrap();
        let (b, a) = (curve.b(), curve.a());
        let l1 = quad::integrate(|x| (tab.cd_kernel(n, x, x).unwrap() / n as f64 - curve.density(x)).abs(), b - 1.0, a + 1.0, 200, 12);
        (
            (mass - 1.0).abs() < 1e-8 && l1 < 0.08,
            format!("V = x^2/2 + x^4/4: one-cut mass - 1 = {:.1e}; N=60 K_N(x,x)/N vs saddle density L1 = {l1:.4} (< 0.08)", mass - 1.0),
            vec![],
        )
    })
}

/// Criteria run by `rmtk selftest`.
pub fn fast_suite() -> Vec<Outcome> {
    vec![criterion_1(), criterion_3(), criterion_4(), criterion_5(), criterion_8()]
}
