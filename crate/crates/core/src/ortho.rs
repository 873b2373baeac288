//! Orthogonal polynomials for the weight e^{−V} on the real line.
//!
//! Moments are computed in MPFR by the trapezoid rule on ℝ (exponentially
//! convergent for entire, rapidly decaying integrands) and turned into
//! three-term recurrence data by the Chebyshev algorithm at the same precision.

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::Potential;

#[derive(Clone, Debug)]
pub struct MomentTable {
    /// M_0..M_{count−1}.
    pub m: Vec<Float>,
    pub prec: u32,
    /// Closed form (Gaussian) rather than quadrature.
    pub exact: bool,
    /// Number of trapezoid nodes and final step (0 for closed form).
    pub nodes: usize,
    pub step: f64,
}

impl MomentTable {
    pub fn get_f64(&self, k: usize) -> f64 {
        self.m[k].to_f64()
    }
}

/// Working precision in bits for a table of `count` moments.
pub fn working_precision(count: usize) -> u32 {
    128 + 10 * count as u32
}

/// t_k as Floats from an exact or float potential.
fn float_coeffs(v: &Potential, prec: u32) -> Result<Vec<Float>> {
    let ts = v
        .vprime_exact()
        .ok_or_else(|| Error::Invalid("moments need an exact or float potential".into()))?;
    Ok(ts.iter().map(|t| Float::with_val(prec, t)).collect())
}

/// V(x) = Σ (t_k/k) x^k with Floats.
fn eval_v(ts: &[Float], x: &Float) -> Float {
    let prec = x.prec();
    let mut acc = Float::with_val(prec, 0);
    for (i, t) in ts.iter().enumerate().rev() {
        acc *= x;
        acc += Float::with_val(prec, t / (i as u32 + 1));
    }
    acc * x
}

/// N-scaled potential N·V.
pub fn scaled_potential(v: &Potential, n: usize) -> Result<Potential> {
    let ts = v
        .vprime_exact()
        .ok_or_else(|| Error::Invalid("scaling needs an exact or float potential".into()))?;
    Potential::exact(ts.into_iter().map(|t| t * Rational::from(n as u64)).collect())
}

pub fn moments(v: &Potential, count: usize) -> Result<MomentTable> {
    let tsq = v
        .vprime_exact()
        .ok_or_else(|| Error::Invalid("moments need an exact or float potential".into()))?;
    let deg_v = tsq.len();
    if deg_v % 2 != 0 || *tsq.last().unwrap() <= 0 {
        return Err(Error::Invalid(
            "weight e^{-V} diverges: V needs even degree and positive leading coefficient".into(),
        ));
    }
    let prec = working_precision(count);
    let even = v.is_even();

    if deg_v == 2 && tsq[0] == 0 {
        // e^{−t x²/2}: M_{2k} = (2k−1)!! t^{−k} √(2π/t)
        let t = Float::with_val(prec, &tsq[1]);
        let pi = Float::with_val(prec, Constant::Pi);
        let mut m0 = Float::with_val(prec, &pi * 2u32);
        m0 /= &t;
        m0.sqrt_mut();
        let mut m = vec![Float::with_val(prec, 0); count];
        let mut cur = m0;
        for k in (0..count).step_by(2) {
            m[k] = cur.clone();
            cur *= (k + 1) as u32;
            cur /= &t;
        }
        return Ok(MomentTable { m, prec, exact: true, nodes: 0, step: 0.0 });
    }

    let ts = float_coeffs(v, prec)?;
    let vf = |x: f64| v.eval_f64(x);
    // range where x^k e^{−V} is negligible at this precision
    let kmax = count.saturating_sub(1) as f64;
    let budget = prec as f64 * std::f64::consts::LN_2 + 40.0;
    let mut vmin = f64::INFINITY;
    let mut ends = [0.0f64; 2];
    for (side, dir) in [-1.0f64, 1.0].iter().enumerate() {
        let mut x = 0.0;
        let step = 1e-3;
        loop {
            let val = vf(dir * x);
            vmin = vmin.min(val);
            if x > 1.0 && val - kmax * x.ln() - vmin > budget {
                break;
            }
            x += step * (1.0 + x);
            if x > 1e6 {
                return Err(Error::Invalid("weight does not decay".into()));
            }
        }
        ends[side] = dir * x;
    }
    let vmin_f = Float::with_val(prec, vmin);
    let mut h = (ends[1] - ends[0]) / 64.0;
    h = 2f64.powi(h.log2().floor() as i32);

    let mut sums = vec![Float::with_val(prec, 0); count];
    let mut abs_sums = vec![Float::with_val(prec, 0); count];
    let accumulate = |j: i64, hh: f64, sums: &mut [Float], abs_sums: &mut [Float]| {
        let x = Float::with_val(prec, j) * hh;
        let mut w = eval_v(&ts, &x);
        w -= &vmin_f;
        w = -w;
        w.exp_mut();
        let ax = Float::with_val(prec, x.abs_ref());
        let mut p = w.clone();
        let mut pa = w;
        for k in 0..count {
            sums[k] += &p;
            abs_sums[k] += &pa;
            p *= &x;
            pa *= &ax;
        }
    };
    let mut lo = (ends[0] / h).floor() as i64;
    let mut hi = (ends[1] / h).ceil() as i64;
    for j in lo..=hi {
        accumulate(j, h, &mut sums, &mut abs_sums);
    }
    let mut nodes = (hi - lo + 1) as usize;
    let scaled = |s: &[Float], h: f64| -> Vec<Float> { s.iter().map(|x| Float::with_val(prec, x * h)).collect() };
    let mut prev = scaled(&sums, h);
    let tol = Float::with_val(prec, 2u32).pow(-((prec as i32) - 24));
    let mut converged = false;
    for _ in 0..24 {
        let hh = h / 2.0;
        let (lo2, hi2) = ((ends[0] / hh).floor() as i64, (ends[1] / hh).ceil() as i64);
        for j in lo2..=hi2 {
            if j % 2 != 0 || j < 2 * lo || j > 2 * hi {
                accumulate(j, hh, &mut sums, &mut abs_sums);
                nodes += 1;
            }
        }
        lo = lo2.min(2 * lo);
        hi = hi2.max(2 * hi);
        h = hh;
        let cur = scaled(&sums, h);
        let scale = scaled(&abs_sums, h);
        let ok = (0..count).all(|k| {
            let diff = Float::with_val(prec, &cur[k] - &prev[k]).abs();
            diff <= Float::with_val(prec, &scale[k] * &tol)
        });
        prev = cur;
        if ok {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence("moment quadrature did not converge".into()));
    }
    let mut factor = Float::with_val(prec, -&vmin_f);
    factor.exp_mut();
    let mut m: Vec<Float> = prev.into_iter().map(|x| x * &factor).collect();
    if even {
        for k in (1..count).step_by(2) {
            m[k] = Float::with_val(prec, 0);
        }
    }
    Ok(MomentTable { m, prec, exact: false, nodes, step: h })
}

/// Jacobi-matrix data: S_0..S_K, γ_1..γ_K (γ[0] = 0), h_0..h_K.
#[derive(Clone, Debug)]
pub struct RecurrenceTable {
    pub potential: Potential,
    pub gamma: Vec<Float>,
    pub s: Vec<Float>,
    pub h: Vec<Float>,
    pub prec: u32,
}

/// Chebyshev algorithm on M_0..M_{2K+1}, producing depth K.
pub fn recurrence_from_moments(v: &Potential, mt: &MomentTable, depth: usize) -> Result<RecurrenceTable> {
    let need = 2 * depth + 2;
    if mt.m.len() < need {
        return Err(Error::DepthExceeded(format!("depth {depth} needs {need} moments, have {}", mt.m.len())));
    }
    let prec = mt.prec;
    let zero = Float::with_val(prec, 0);
    let len = need;
    let mut sig_prev2 = vec![zero.clone(); len];
    let mut sig_prev = mt.m[..len].to_vec();
    if sig_prev[0] <= 0 {
        return Err(Error::Invalid("loss of positivity at index 0".into()));
    }
    let mut alpha = vec![Float::with_val(prec, &sig_prev[1] / &sig_prev[0])];
    let mut beta = vec![sig_prev[0].clone()];
    let mut h = vec![sig_prev[0].clone()];
    for k in 1..=depth {
        let mut sig = vec![zero.clone(); len];
        for l in k..(len - k) {
            let mut x = sig_prev[l + 1].clone();
            x -= Float::with_val(prec, &alpha[k - 1] * &sig_prev[l]);
            x -= Float::with_val(prec, &beta[k - 1] * &sig_prev2[l]);
            sig[l] = x;
        }
        if sig[k] <= 0 {
            return Err(Error::Invalid(format!("loss of positivity at index {k}: moments are ill-conditioned")));
        }
        let a = Float::with_val(prec, &sig[k + 1] / &sig[k]) - Float::with_val(prec, &sig_prev[k] / &sig_prev[k - 1]);
        let b = Float::with_val(prec, &sig[k] / &sig_prev[k - 1]);
        alpha.push(a);
        beta.push(b);
        h.push(sig[k].clone());
        sig_prev2 = sig_prev;
        sig_prev = sig;
    }
    let mut gamma = vec![zero];
    for b in beta.iter().skip(1) {
        gamma.push(Float::with_val(prec, b.sqrt_ref()));
    }
    Ok(RecurrenceTable { potential: v.clone(), gamma, s: alpha, h, prec })
}

/// Moments and recurrence in one go.
pub fn recurrence(v: &Potential, depth: usize) -> Result<RecurrenceTable> {
    let mt = moments(v, 2 * depth + 2)?;
    recurrence_from_moments(v, &mt, depth)
}

impl RecurrenceTable {
    pub fn depth(&self) -> usize {
        self.s.len() - 1
    }

    pub fn gamma_f64(&self, k: usize) -> f64 {
        self.gamma[k].to_f64()
    }

    pub fn s_f64(&self, k: usize) -> f64 {
        self.s[k].to_f64()
    }

    pub fn h_f64(&self, k: usize) -> f64 {
        self.h[k].to_f64()
    }

    fn check_depth(&self, need: usize) -> Result<()> {
        if need > self.depth() {
            Err(Error::DepthExceeded(format!("need depth {need}, table has {}", self.depth())))
        } else {
            Ok(())
        }
    }

    /// Q as f64 vectors (γ, S) for banded work.
    pub fn jacobi_f64(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.gamma.iter().map(|x| x.to_f64()).collect(),
            self.s.iter().map(|x| x.to_f64()).collect(),
        )
    }

    /// p_k(λ) from the monic recurrence.
    pub fn orthopoly(&self, k: usize, x: f64) -> Result<f64> {
        self.check_depth(k)?;
        let (mut p0, mut p1) = (0.0, 1.0);
        for j in 0..k {
            let g2 = if j == 0 { 0.0 } else { self.gamma_f64(j).powi(2) };
            let next = (x - self.s_f64(j)) * p1 - g2 * p0;
            p0 = p1;
            p1 = next;
        }
        Ok(p1)
    }

    /// p_k(λ) = det(λ − Q_k) with Q_k the leading k×k block of Q.
    pub fn orthopoly_minor(&self, k: usize, x: f64) -> Result<f64> {
        self.check_depth(k)?;
        let mut a = vec![0.0; k * k];
        for i in 0..k {
            a[i * k + i] = x - self.s_f64(i);
            if i + 1 < k {
                a[i * k + i + 1] = -self.gamma_f64(i + 1);
                a[(i + 1) * k + i] = -self.gamma_f64(i + 1);
            }
        }
        Ok(linalg::det(&a, k))
    }

    /// ψ_0..ψ_n at x and their derivatives, by the normalized recurrence.
    pub fn psi(&self, n: usize, x: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_depth(n)?;
        let v = self.potential.eval_f64(x);
        let vp = self.potential.derivative_f64(x);
        let mut psi = vec![(-0.5 * v).exp() / self.h_f64(0).sqrt()];
        let mut dpsi = vec![-0.5 * vp * psi[0]];
        for k in 0..n {
            let g_next = self.gamma_f64(k + 1);
            let (pm, dpm) = if k == 0 { (0.0, 0.0) } else { (psi[k - 1], dpsi[k - 1]) };
            let gk = if k == 0 { 0.0 } else { self.gamma_f64(k) };
            let s = self.s_f64(k);
            psi.push(((x - s) * psi[k] - gk * pm) / g_next);
            dpsi.push((psi[k] + (x - s) * dpsi[k] - gk * dpm) / g_next);
        }
        Ok((psi, dpsi))
    }

    /// Christoffel–Darboux kernel K_N(x, y).
    pub fn cd_kernel(&self, n: usize, x: f64, y: f64) -> Result<f64> {
        if n == 0 {
            return Ok(0.0);
        }
        let g = self.gamma_f64(n);
        let (px, dpx) = self.psi(n, x)?;
        if x == y {
            return Ok(g * (dpx[n] * px[n - 1] - dpx[n - 1] * px[n]));
        }
        let (py, _) = self.psi(n, y)?;
        Ok(g * (px[n - 1] * py[n] - px[n] * py[n - 1]) / (y - x))
    }

    /// Σ_{k<N} ψ_k(x)ψ_k(y).
    pub fn cd_kernel_sum(&self, n: usize, x: f64, y: f64) -> Result<f64> {
        let (px, _) = self.psi(n, x)?;
        let (py, _) = self.psi(n, y)?;
        Ok((0..n).map(|k| px[k] * py[k]).sum())
    }

    /// R_k(λ_1..λ_k) = ((N−k)!/N!) det K_N(λ_i, λ_j).
    pub fn joint_density(&self, n: usize, points: &[f64]) -> Result<f64> {
        let k = points.len();
        if k > n {
            return Err(Error::Invalid(format!("k = {k} exceeds N = {n}")));
        }
        let mut a = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                a[i * k + j] = self.cd_kernel(n, points[i], points[j])?;
            }
        }
        let ratio: f64 = ((n - k + 1)..=n).map(|j| 1.0 / j as f64).product();
        Ok(ratio * linalg::det(&a, k))
    }

    /// Z_N = Π_{k<N} h_k.
    pub fn partition_function(&self, n: usize) -> Result<Float> {
        if n > self.h.len() {
            return Err(Error::DepthExceeded(format!("need {n} norms, have {}", self.h.len())));
        }
        let mut z = Float::with_val(self.prec, 1);
        for hk in &self.h[..n] {
            z *= hk;
        }
        Ok(z)
    }

    /// p̃_n(x)/p_n(x), with p̃ the same recurrence started from (p̃_0, p̃_1) = (0, 1).
    pub fn resolvent_continued_fraction(&self, x: f64, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::Invalid("continued fraction needs n ≥ 1".into()));
        }
        self.check_depth(n)?;
        let (mut pa, mut pb) = (1.0, x - self.s_f64(0));
        let (mut qa, mut qb) = (0.0, 1.0);
        for k in 1..n {
            let g2 = self.gamma_f64(k).powi(2);
            let d = x - self.s_f64(k);
            (pa, pb) = (pb, d * pb - g2 * pa);
            (qa, qb) = (qb, d * qb - g2 * qa);
        }
        if pb == 0.0 {
            return Err(Error::Invalid("p_n(x) vanishes; x lies in the spectral region".into()));
        }
        Ok(qb / pb)
    }

    /// Tr Π_N Q^m in f64.
    pub fn trace_moment(&self, n: usize, m: usize) -> Result<f64> {
        self.check_depth(n + m)?;
        let (g, s) = self.jacobi_f64();
        let mut acc = 0.0;
        for k in 0..n {
            acc += banded_power_row(&g, &s, k, m)?[k];
        }
        Ok(acc)
    }

    /// ((V'(Q))_{k,k−1} − k/γ_k, (V'(Q))_{k,k}) at the table precision.
    pub fn string_residual(&self, k: usize) -> Result<(f64, f64)> {
        if k == 0 {
            return Err(Error::Invalid("string residual needs k ≥ 1".into()));
        }
        let row = self.vprime_row(k)?;
        let mut r1 = row[k - 1].clone();
        r1 -= Float::with_val(self.prec, k as u32) / &self.gamma[k];
        Ok((r1.to_f64(), row[k].to_f64()))
    }

    /// Row k of V'(Q) in MPFR.
    fn vprime_row(&self, k: usize) -> Result<Vec<Float>> {
        let ts = float_coeffs(&self.potential, self.prec)?;
        let deg = ts.len().saturating_sub(1);
        self.check_depth(k + deg)?;
        let g = FloatW::wrap(&self.gamma);
        let s = FloatW::wrap(&self.s);
        let mut acc = vec![Float::with_val(self.prec, 0); k + deg + 1];
        for (j, t) in ts.iter().enumerate() {
            let row = banded_power_row(&g, &s, k, j)?;
            for (i, r) in row.iter().enumerate() {
                acc[i] += Float::with_val(self.prec, &r.0 * t);
            }
        }
        Ok(acc)
    }

    /// Σ_{k<n}([Q,P]_{kk} + 1) with P = ½((V'(Q))_+ − (V'(Q))_−),
    /// which telescopes to −γ_n r_n.
    pub fn commutator_trace_defect(&self, n: usize) -> Result<f64> {
        let mut total = Float::with_val(self.prec, 0);
        let mut below = Vec::new();
        for k in 0..=n {
            let row = self.vprime_row(k)?;
            below.push(if k == 0 { Float::with_val(self.prec, 0) } else { row[k - 1].clone() });
        }
        // [Q,P]_{kk} = γ_k V'_{k,k−1} − γ_{k+1} V'_{k+1,k}
        for k in 0..n {
            let mut d = Float::with_val(self.prec, &self.gamma[k] * &below[k]);
            d -= Float::with_val(self.prec, &self.gamma[k + 1] * &below[k + 1]);
            d += 1u32;
            total += d;
        }
        Ok(total.to_f64())
    }
}

/// det(M_{i+j})_{0≤i,j<N} by Gaussian elimination at the table precision.
pub fn hankel_partition(mt: &MomentTable, n: usize) -> Result<Float> {
    if 2 * n > mt.m.len() + 1 {
        return Err(Error::DepthExceeded(format!("N = {n} needs {} moments", 2 * n - 1)));
    }
    let rows: Vec<Vec<Float>> = (0..n).map(|i| (0..n).map(|j| mt.m[i + j].clone()).collect()).collect();
    Ok(det_float(rows, mt.prec))
}

pub(crate) fn det_float(mut a: Vec<Vec<Float>>, prec: u32) -> Float {
    let n = a.len();
    let mut det = Float::with_val(prec, 1);
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| a[i][c].clone().abs().partial_cmp(&a[j][c].clone().abs()).unwrap())
            .unwrap();
        if a[piv][c] == 0 {
            return Float::with_val(prec, 0);
        }
        if piv != c {
            a.swap(piv, c);
            det = -det;
        }
        det *= &a[c][c];
        for r in c + 1..n {
            let f = Float::with_val(prec, &a[r][c] / &a[c][c]);
            for k in c..n {
                let sub = Float::with_val(prec, &f * &a[c][k]);
                a[r][k] -= sub;
            }
        }
    }
    det
}

/// p_k(λ) via the Hankel determinant formula.
pub fn orthopoly_hankel(mt: &MomentTable, k: usize, x: f64) -> Result<f64> {
    if 2 * k > mt.m.len() {
        return Err(Error::DepthExceeded(format!("degree {k} needs {} moments", 2 * k)));
    }
    let prec = mt.prec;
    let xf = Float::with_val(prec, x);
    let mut rows: Vec<Vec<Float>> = (0..k).map(|i| (0..=k).map(|j| mt.m[i + j].clone()).collect()).collect();
    let mut last = Vec::with_capacity(k + 1);
    let mut p = Float::with_val(prec, 1);
    for _ in 0..=k {
        last.push(p.clone());
        p *= &xf;
    }
    rows.push(last);
    let num = det_float(rows, prec);
    let den = hankel_partition(mt, k)?;
    Ok(Float::with_val(prec, &num / &den).to_f64())
}


/// Minimal ring interface for banded powers and path sums.
pub trait Weight: Clone {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
}

impl Weight for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
}

impl Weight for Rational {
    fn zero() -> Self {
        Rational::new()
    }
    fn one() -> Self {
        Rational::from(1)
    }
    fn add(&self, o: &Self) -> Self {
        Rational::from(self + o)
    }
    fn mul(&self, o: &Self) -> Self {
        Rational::from(self * o)
    }
}

// MPFR values carry their own precision; zero/one are created exact and
// widened on the first operation.
#[derive(Clone, Debug)]
struct FloatW(Float);

impl FloatW {
    fn wrap(xs: &[Float]) -> Vec<FloatW> {
        xs.iter().cloned().map(FloatW).collect()
    }
}

impl Weight for FloatW {
    fn zero() -> Self {
        FloatW(Float::new(2))
    }
    fn one() -> Self {
        FloatW(Float::with_val(2, 1))
    }
    fn add(&self, o: &Self) -> Self {
        let p = self.0.prec().max(o.0.prec());
        FloatW(Float::with_val(p, &self.0 + &o.0))
    }
    fn mul(&self, o: &Self) -> Self {
        let p = self.0.prec().max(o.0.prec());
        FloatW(Float::with_val(p, &self.0 * &o.0))
    }
}

/// Row `start` of Q^m on the tridiagonal band, Q_{kk} = S_k,
/// Q_{k,k+1} = Q_{k+1,k} = γ_{k+1}. Needs indices up to start + m.
pub fn banded_power_row<T: Weight>(gamma: &[T], s: &[T], start: usize, m: usize) -> Result<Vec<T>> {
    let need = start + m;
    if s.len() <= need || gamma.len() <= need {
        return Err(Error::DepthExceeded(format!("banded power needs index {need}")));
    }
    let width = need + 1;
    let mut row = vec![T::zero(); width];
    row[start] = T::one();
    for step in 0..m {
        let mut next = vec![T::zero(); width];
        let hi = (start + step).min(width - 1);
        let lo = start.saturating_sub(step);
        for k in lo..=hi {
            let r = &row[k];
            next[k] = next[k].add(&r.mul(&s[k]));
            if k + 1 < width {
                next[k + 1] = next[k + 1].add(&r.mul(&gamma[k + 1]));
            }
            if k >= 1 {
                next[k - 1] = next[k - 1].add(&r.mul(&gamma[k]));
            }
        }
        row = next;
    }
    Ok(row)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Up,
    Flat,
    Down,
}

/// One Motzkin path with its factor labels, e.g. ["γ1", "S1", "γ1"].
#[derive(Clone, Debug, PartialEq)]
pub struct MotzkinPath {
    pub steps: Vec<Step>,
    pub labels: Vec<String>,
}

/// All Motzkin paths of the given length from height `from` to height `to`
/// staying ≥ 0. An up step k→k+1 and a down step k+1→k both weigh γ_{k+1};
/// a flat step at height k weighs S_k.
pub fn motzkin_paths(from: usize, to: usize, length: usize) -> Vec<MotzkinPath> {
    fn go(h: usize, to: usize, left: usize, cur: &mut MotzkinPath, out: &mut Vec<MotzkinPath>) {
        if left == 0 {
            if h == to {
                out.push(cur.clone());
            }
            return;
        }
        if h.abs_diff(to) > left {
            return;
        }
        for st in [Step::Flat, Step::Up, Step::Down] {
            let (nh, label) = match st {
                Step::Up => (h + 1, format!("γ{}", h + 1)),
                Step::Flat => (h, format!("S{h}")),
                Step::Down => {
                    if h == 0 {
                        continue;
                    }
                    (h - 1, format!("γ{h}"))
                }
            };
            cur.steps.push(st);
            cur.labels.push(label);
            go(nh, to, left - 1, cur, out);
            cur.steps.pop();
            cur.labels.pop();
        }
    }
    let mut out = Vec::new();
    let mut cur = MotzkinPath { steps: vec![], labels: vec![] };
    go(from, to, length, &mut cur, &mut out);
    out
}

impl MotzkinPath {
    pub fn weight<T: Weight>(&self, gamma: &[T], s: &[T], from: usize) -> T {
        let mut h = from;
        let mut w = T::one();
        for st in &self.steps {
            w = match st {
                Step::Up => {
                    h += 1;
                    w.mul(&gamma[h])
                }
                Step::Flat => w.mul(&s[h]),
                Step::Down => {
                    h -= 1;
                    w.mul(&gamma[h + 1])
                }
            };
        }
        w
    }
}

/// (Q^m)_{from,to} as a sum over Motzkin paths.
pub fn motzkin_sum<T: Weight>(gamma: &[T], s: &[T], from: usize, to: usize, m: usize) -> T {
    motzkin_paths(from, to, m)
        .iter()
        .fold(T::zero(), |acc, p| acc.add(&p.weight(gamma, s, from)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quartic(t2: i64, t4: i64) -> Potential {
        Potential::from_terms(&[(2, Rational::from(t2)), (4, Rational::from(t4))]).unwrap()
    }

    #[test]
    fn gaussian_recurrence_exact() {
        let tab = recurrence(&Potential::gaussian(), 20).unwrap();
        for k in 0..=20 {
            assert!(tab.s_f64(k).abs() < 1e-25, "S_{k}");
        }
        for k in 1..=20 {
            assert!((tab.gamma_f64(k) - (k as f64).sqrt()).abs() < 1e-12, "γ_{k}");
        }
        for k in 1..=10 {
            let (r1, r2) = tab.string_residual(k).unwrap();
            assert!(r1.abs() < 1e-12 && r2.abs() < 1e-12);
        }
    }

    #[test]
    fn quartic_string_equation() {
        // e^{−x²/2 − x⁴/4}
        let v = quartic(1, 1);
        let tab = recurrence(&v, 16).unwrap();
        for k in 1..=10 {
            let (r1, r2) = tab.string_residual(k).unwrap();
            assert!(r1.abs() < 1e-8, "k={k} r1={r1}");
            assert!(r2.abs() < 1e-8, "k={k} r2={r2}");
        }
        for n in 1..=6 {
            let d = tab.commutator_trace_defect(n).unwrap();
            let (r1, _) = tab.string_residual(n).unwrap();
            assert!((d + tab.gamma_f64(n) * r1).abs() < 1e-20 + 1e-12 * d.abs());
        }
    }

    #[test]
    fn quartic_moments_against_quadrature() {
        // independent check with composite Gauss–Legendre in f64
        let v = quartic(1, 1);
        let mt = moments(&v, 9).unwrap();
        assert!(!mt.exact);
        for k in 0..9 {
            let q = crate::quad::integrate(|x| x.powi(k as i32) * (-v.eval_f64(x)).exp(), -12.0, 12.0, 96, 20);
            let m = mt.get_f64(k);
            assert!((m - q).abs() < 1e-12 * (1.0 + q.abs()), "k={k}: {m} vs {q}");
        }
    }

    #[test]
    fn asymmetric_weight_orthogonality() {
        // V = x²/2 + x³/3 + x⁴/4 rescaled to 2: non-even, S_k ≠ 0
        let v = Potential::from_terms(&[
            (2, Rational::from(1)),
            (3, Rational::from((1, 2))),
            (4, Rational::from(1)),
        ])
        .unwrap();
        let tab = recurrence(&v, 8).unwrap();
        assert!(tab.s_f64(0).abs() > 1e-3);
        for j in 0..6 {
            for k in 0..=j {
                let ip = crate::quad::integrate(
                    |x| tab.orthopoly(j, x).unwrap() * tab.orthopoly(k, x).unwrap() * (-v.eval_f64(x)).exp(),
                    -10.0,
                    10.0,
                    96,
                    20,
                );
                let target = if j == k { tab.h_f64(k) } else { 0.0 };
                assert!((ip - target).abs() < 1e-10 * tab.h_f64(j).max(tab.h_f64(k)), "<{j},{k}> = {ip}");
            }
        }
        for k in 1..=5 {
            let (r1, r2) = tab.string_residual(k).unwrap();
            assert!(r1.abs() < 1e-10 && r2.abs() < 1e-10);
        }
    }

    #[test]
    fn partition_equals_hankel() {
        for v in [Potential::gaussian(), quartic(1, 1), quartic(-1, 1)] {
            let mt = moments(&v, 20).unwrap();
            let tab = recurrence_from_moments(&v, &mt, 9).unwrap();
            for n in 1..=8 {
                let z = tab.partition_function(n).unwrap().to_f64();
                let hz = hankel_partition(&mt, n).unwrap().to_f64();
                assert!(((z - hz) / hz).abs() < 1e-10, "N={n}: {z} vs {hz}");
            }
        }
    }

    #[test]
    fn three_orthopoly_evaluators_agree() {
        let v = quartic(-1, 1);
        let mt = moments(&v, 20).unwrap();
        let tab = recurrence_from_moments(&v, &mt, 9).unwrap();
        for k in 0..=8 {
            for &x in &[-2.3, -0.4, 0.0, 0.9, 1.7] {
                let a = tab.orthopoly(k, x).unwrap();
                let b = tab.orthopoly_minor(k, x).unwrap();
                let c = orthopoly_hankel(&mt, k, x).unwrap();
                let sc = 1.0 + a.abs();
                assert!((a - b).abs() < 1e-10 * sc && (a - c).abs() < 1e-10 * sc, "k={k} x={x}: {a} {b} {c}");
            }
        }
        // Hermite: p_2 = x² − 1, p_3 = x³ − 3x
        let g = recurrence(&Potential::gaussian(), 4).unwrap();
        assert!((g.orthopoly(2, 1.5).unwrap() - 1.25).abs() < 1e-14);
        assert!((g.orthopoly(3, 2.0).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cd_kernel_forms() {
        let v = quartic(1, 1);
        let tab = recurrence(&v, 12).unwrap();
        for &(x, y) in &[(0.3, -0.8), (1.1, 1.1000001), (0.0, 2.0), (-0.5, -0.5)] {
            let a = tab.cd_kernel(10, x, y).unwrap();
            let b = tab.cd_kernel_sum(10, x, y).unwrap();
            assert!((a - b).abs() < 1e-6 * (1.0 + b.abs()), "({x},{y}) {a} {b}");
        }
        // ∫ K_N(x,x) dx = N
        let mass = crate::quad::integrate(|x| tab.cd_kernel(10, x, x).unwrap(), -8.0, 8.0, 64, 20);
        assert!((mass - 10.0).abs() < 1e-8);
    }

    #[test]
    fn joint_density_marginals() {
        let tab = recurrence(&Potential::gaussian(), 6).unwrap();
        let n = 3;
        // R_1 = K/N integrates to 1; ∫R_2(x, y)dy = (N−1)/N... in this normalization ∫R_2 dy = R_1
        let r1 = |x: f64| tab.joint_density(n, &[x]).unwrap();
        let tot = crate::quad::integrate(r1, -10.0, 10.0, 40, 20);
        assert!((tot - 1.0).abs() < 1e-10);
        let x = 0.7;
        let marg = crate::quad::integrate(|y| tab.joint_density(n, &[x, y]).unwrap(), -10.0, 10.0, 40, 20);
        assert!((marg - r1(x)).abs() < 1e-10);
        // R_N vanishes at coincident points
        assert!(tab.joint_density(n, &[0.2, 0.2, -1.0]).unwrap().abs() < 1e-14);
    }

    #[test]
    fn scaled_gaussian_trace_moments() {
        for n in [3usize, 10, 40] {
            let v = scaled_potential(&Potential::gaussian(), n).unwrap();
            let tab = recurrence(&v, n + 4).unwrap();
            for k in 1..=n {
                assert!((tab.gamma_f64(k).powi(2) - k as f64 / n as f64).abs() < 1e-12);
            }
            let nf = n as f64;
            assert!((tab.trace_moment(n, 2).unwrap() - nf).abs() < 1e-10 * nf);
            assert!((tab.trace_moment(n, 4).unwrap() - (2.0 * nf + 1.0 / nf)).abs() < 1e-10 * nf);
        }
    }

    #[test]
    fn motzkin_matches_banded_power() {
        let gamma: Vec<Rational> = (0..12).map(|k| Rational::from((2 * k + 3, k + 2))).collect();
        let s: Vec<Rational> = (0..12).map(|k| Rational::from((k * k + 1, 3 * k + 1))).collect();
        for m in 0..=7 {
            for i in 0..3 {
                let row = banded_power_row(&gamma, &s, i, m).unwrap();
                for j in 0..row.len() {
                    assert_eq!(row[j], motzkin_sum(&gamma, &s, i, j, m), "m={m} ({i},{j})");
                }
            }
        }
        let labels: Vec<String> = motzkin_paths(0, 0, 3).iter().map(|p| p.labels.join("")).collect();
        assert_eq!(labels.len(), 4);
        for want in ["S0S0S0", "S0γ1γ1", "γ1γ1S0", "γ1S1γ1"] {
            assert!(labels.iter().any(|l| l == want), "{want} missing from {labels:?}");
        }
    }

    #[test]
    fn continued_fraction_converges() {
        // outside the support the CF tends to ∫ψ_0²/(x − λ)
        let v = quartic(1, 1);
        let tab = recurrence(&v, 30).unwrap();
        let x = 3.5;
        let z = crate::quad::integrate(|l| (-v.eval_f64(l)).exp(), -8.0, 8.0, 64, 20);
        let target = crate::quad::integrate(|l| (-v.eval_f64(l)).exp() / (x - l), -8.0, 8.0, 64, 20) / z;
        let f1 = tab.resolvent_continued_fraction(x, 1).unwrap();
        assert!((f1 - 1.0 / (x - tab.s_f64(0))).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for n in [2, 4, 8, 16, 30] {
            let err = (tab.resolvent_continued_fraction(x, n).unwrap() - target).abs();
            assert!(err <= prev + 1e-15);
            prev = err;
        }
        assert!(prev < 1e-12);
    }

    #[test]
    fn divergent_weight_rejected() {
        assert!(moments(&quartic(1, -1), 6).is_err());
        let cubic = Potential::from_terms(&[(3, Rational::from(1))]).unwrap();
        assert!(moments(&cubic, 6).is_err());
    }

    #[test]
    fn large_n_density_matches_saddle() {
        let v = quartic(1, 1);
        let n = 60;
        let tab = recurrence(&scaled_potential(&v, n).unwrap(), n + 1).unwrap();
        let curve = crate::saddle::solve_one_cut(&v).unwrap();
        let (b, a) = (curve.b(), curve.a());
        let l1 = crate::quad::integrate(
            |x| (tab.cd_kernel(n, x, x).unwrap() / n as f64 - curve.density(x)).abs(),
            b - 1.0,
            a + 1.0,
            200,
            12,
        );
        assert!(l1 < 0.08, "L1 = {l1}");
    }

    #[test]
    fn kernel_reproduces_itself() {
        let tab = recurrence(&quartic(-1, 1), 8).unwrap();
        let n = 6;
        let mut rng = crate::rng::Stream::new(5, 0);
        for _ in 0..10 {
            let x = 4.0 * rng.uniform() - 2.0;
            let y = 4.0 * rng.uniform() - 2.0;
            let kk = crate::quad::integrate(|t| tab.cd_kernel(n, x, t).unwrap() * tab.cd_kernel(n, t, y).unwrap(), -8.0, 8.0, 64, 16);
            assert!((kk - tab.cd_kernel(n, x, y).unwrap()).abs() < 1e-7);
        }
        let g = recurrence(&Potential::gaussian(), 2).unwrap();
        let (x, y) = (0.4, -1.3);
        let want = (-(x * x + y * y) / 4.0f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((g.cd_kernel(1, x, y).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn gaussian_continued_fraction() {
        // x = 8: the Gaussian mass beyond x is below 1e−14
        let tab = recurrence(&Potential::gaussian(), 60).unwrap();
        let x = 8.0;
        let target = crate::quad::integrate(
            |l| (-l * l / 2.0f64).exp() / ((x - l) * (2.0 * std::f64::consts::PI).sqrt()),
            -14.0,
            x - 1e-3,
            400,
            20,
        );
        assert!((tab.resolvent_continued_fraction(x, 60).unwrap() - target).abs() < 1e-8);
        // all zeros of p_n lie left of x for n ≤ 12: convergents rise monotonically
        let conv: Vec<f64> = (1..=12).map(|n| tab.resolvent_continued_fraction(x, n).unwrap()).collect();
        assert!(conv.windows(2).all(|w| w[0] < w[1]) && conv[11] < target + 1e-15, "{conv:?}");
    }
}
