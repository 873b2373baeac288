//! One-cut topological recursion on x(z) = γ(z + 1/z), branch points z = ±1,
//! involution z ↦ 1/z. Everything is exact over the coupling ring.

use std::collections::{BTreeMap, HashMap};

use rug::Rational;

use crate::error::{Error, Result};
use crate::laurent::{Laurent, EXACT};
use crate::model::{FormalScalar, Potential};
use crate::saddle::solve_one_cut_formal;

/// Slot term 1/(z − s)^k, stored as (k, s) with s = ±1.
pub type Slot = (u32, i8);
pub type Key = Vec<Slot>;

pub const DEFAULT_DEPTH: i32 = 32;
pub const MAX_DEPTH: i32 = 256;

/// Largest pole order allowed per (g, n).
pub fn pole_cap(g: usize, n: usize) -> Option<u32> {
    match (g, n) {
        (0, 3) => Some(2),
        (1, 1) | (0, 4) => Some(4),
        (1, 2) => Some(6),
        (2, 1) => Some(10),
        _ => None,
    }
}

#[derive(Clone, Debug)]
pub struct SpectralCurve {
    pub gamma: FormalScalar,
    /// v_k = [z^k] V'(x(z)); y(z) = Σ_{k≥1} v_k z^{−k} is W_{0,1}(x(z)).
    pub v: Vec<FormalScalar>,
}

impl SpectralCurve {
    pub fn from_potential(v: &Potential) -> Result<Self> {
        let c = solve_one_cut_formal(v)?;
        Ok(SpectralCurve { gamma: c.gamma, v: c.v })
    }

    pub fn gaussian() -> Self {
        Self::from_potential(&Potential::gaussian()).expect("Gaussian curve")
    }

    /// x(z) as a Laurent polynomial in z.
    pub fn x_poly(&self) -> Laurent {
        Laurent::poly(-1, vec![self.gamma.clone(), FormalScalar::zero(), self.gamma.clone()], EXACT)
    }

    pub fn y_poly(&self) -> Laurent {
        let d = self.v.len() as i32 - 1;
        let mut c: Vec<FormalScalar> = (1..=d).rev().map(|k| self.v[k as usize].clone()).collect();
        if c.is_empty() {
            c.push(FormalScalar::zero());
        }
        Laurent::poly(-d.max(1), c, EXACT)
    }

    /// w(z) = y(z) − y(1/z).
    pub fn w_poly(&self) -> Laurent {
        let y = self.y_poly();
        y.sub(&reflect(&y))
    }
}

/// f(z) ↦ f(1/z) for a Laurent polynomial.
pub fn reflect(p: &Laurent) -> Laurent {
    let hi = p.lo + p.c.len() as i32 - 1;
    let c: Vec<FormalScalar> = p.c.iter().rev().cloned().collect();
    Laurent::poly(-hi, c, EXACT)
}

/// B(z1, z2) = 1/(z1 − z2)², the coefficient of dz1 dz2.
pub fn bergman(z1: &Rational, z2: &Rational) -> Result<Rational> {
    if z1 == z2 {
        return Err(Error::Invalid("Bergman kernel at coincident points".into()));
    }
    let d = Rational::from(z1 - z2);
    Ok(Rational::from(d.square_ref()).recip())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatorForm {
    pub g: usize,
    pub n: usize,
    pub terms: BTreeMap<Key, FormalScalar>,
}

impl CorrelatorForm {
    pub fn max_pole(&self) -> u32 {
        self.terms.keys().flat_map(|k| k.iter().map(|s| s.0)).max().unwrap_or(0)
    }

    pub fn has_residue_terms(&self) -> bool {
        self.terms.keys().any(|k| k.iter().any(|s| s.0 == 1))
    }

    /// Coefficient-tensor invariance under every slot permutation.
    pub fn is_symmetric(&self) -> bool {
        let perms = permutations(self.n);
        self.terms.iter().all(|(k, c)| {
            perms.iter().all(|p| {
                let pk: Key = p.iter().map(|&i| k[i]).collect();
                self.terms.get(&pk).map_or(false, |d| d == c)
            })
        })
    }

    /// Value of the coefficient of dz_1…dz_n at rational points and coupling t.
    pub fn eval_f64(&self, z: &[f64], t: f64) -> f64 {
        self.terms
            .iter()
            .map(|(k, c)| {
                c.eval_f64(t) * k.iter().zip(z).map(|(s, zi)| (zi - s.1 as f64).powi(-(s.0 as i32))).product::<f64>()
            })
            .sum()
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = vec![];
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Local data at the branch point a = ±1, in u = z − a.
struct Local {
    a: i8,
    top: i32,
    zinv: Laurent,
    eps: Laurent,
    /// d(1/z)/dz = −1/z².
    dsig: Laurent,
    den_inv: Laurent,
    kern: Vec<Laurent>,
    slot_cache: HashMap<(u32, i8, bool), Laurent>,
}

fn fs(n: i64) -> FormalScalar {
    FormalScalar::int(n)
}

impl Local {
    fn new(curve: &SpectralCurve, a: i8, top: i32) -> Result<Self> {
        let af = a as i64;
        let z = Laurent::rational_poly(0, &[af, 1], EXACT);
        let zinv = z.inv(top + 8)?;
        let eps = zinv.sub(&Laurent::rational_poly(0, &[af], EXACT));
        let dsig = zinv.mul(&zinv).neg();
        // w(z) = Σ v_k (z^{−k} − z^k), x'(z) = γ(1 − z^{−2})
        let mut w = Laurent::zero(top + 8);
        let mut zi = Laurent::monomial(0, FormalScalar::one(), EXACT);
        let mut zp = Laurent::monomial(0, FormalScalar::one(), EXACT);
        for k in 1..curve.v.len() {
            zi = zi.mul(&zinv);
            zp = zp.mul(&z);
            if !curve.v[k].is_zero() {
                w = w.add(&zi.sub(&zp).scale(&curve.v[k]));
            }
        }
        let xp = Laurent::rational_poly(0, &[1], EXACT).add(&dsig).scale(&curve.gamma);
        let den = w.mul(&xp);
        if den.clone().normalize().lo != 2 {
            return Err(Error::Invalid("branch point is not simple".into()));
        }
        let den_inv = den.inv(top)?;
        Ok(Local { a, top, zinv, eps, dsig, den_inv, kern: vec![], slot_cache: HashMap::new() })
    }

    /// K_j(u): coefficient of dz0/(z0 − a)^{j+1} in the recursion kernel.
    fn kernel(&mut self, j: usize) -> &Laurent {
        while self.kern.len() <= j {
            let jj = self.kern.len() as u32;
            let uj = Laurent::monomial(jj as i32, FormalScalar::one(), EXACT);
            let k = uj.sub(&self.eps.pow(jj)).mul(&self.den_inv).scale_rational(&Rational::from((1, 2)));
            self.kern.push(k);
        }
        &self.kern[j]
    }

    /// 1/(z − s)^k (at_inv = false) or 1/(1/z − s)^k (at_inv = true) near a.
    fn slot(&mut self, k: u32, s: i8, at_inv: bool) -> Result<Laurent> {
        if let Some(l) = self.slot_cache.get(&(k, s, at_inv)) {
            return Ok(l.clone());
        }
        let base = if at_inv { self.eps.clone() } else { Laurent::monomial(1, FormalScalar::one(), EXACT) };
        let r = if s == self.a {
            if at_inv {
                base.inv(self.top + 2 * k as i32)?.pow(k)
            } else {
                Laurent::monomial(-(k as i32), FormalScalar::one(), EXACT)
            }
        } else {
            base.add(&Laurent::rational_poly(0, &[2 * self.a as i64], EXACT)).inv(self.top + 8)?.pow(k)
        };
        self.slot_cache.insert((k, s, at_inv), r.clone());
        Ok(r)
    }
}

type Partial = BTreeMap<Key, Laurent>;

fn accumulate(p: &mut Partial, key: Key, s: Laurent) {
    match p.get_mut(&key) {
        Some(x) => *x = x.add(&s),
        None => {
            p.insert(key, s);
        }
    }
}

fn min_valuation(p: &Partial) -> Option<i32> {
    p.values().filter_map(|l| l.valuation()).min()
}

pub struct TopRec {
    pub curve: SpectralCurve,
    depth: i32,
    memo: HashMap<(usize, usize), CorrelatorForm>,
    locals: Vec<Local>,
}

impl TopRec {
    pub fn new(curve: SpectralCurve) -> Result<Self> {
        Self::with_depth(curve, DEFAULT_DEPTH)
    }

    pub fn with_depth(curve: SpectralCurve, depth: i32) -> Result<Self> {
        let locals = vec![Local::new(&curve, 1, depth)?, Local::new(&curve, -1, depth)?];
        Ok(TopRec { curve, depth, memo: HashMap::new(), locals })
    }

    pub fn depth(&self) -> i32 {
        self.depth
    }

    /// ω_{g,n}, memoized; doubles the series depth on truncation failures.
    pub fn omega(&mut self, g: usize, n: usize) -> Result<CorrelatorForm> {
        if 2 * g + n < 3 {
            return Err(Error::Invalid(format!("ω_{{{g},{n}}} is not produced by the recursion")));
        }
        loop {
            match self.omega_inner(g, n) {
                Err(Error::DepthExceeded(msg)) => {
                    if self.depth * 2 > MAX_DEPTH {
                        return Err(Error::DepthExceeded(format!("{msg} (depth cap {MAX_DEPTH})")));
                    }
                    let d = self.depth * 2;
                    *self = Self::with_depth(self.curve.clone(), d)?;
                }
                r => return r,
            }
        }
    }

    fn omega_inner(&mut self, g: usize, n: usize) -> Result<CorrelatorForm> {
        if let Some(f) = self.memo.get(&(g, n)) {
            return Ok(f.clone());
        }
        let m = n - 1;
        // lower forms first, so the memo holds them
        let mut lower: HashMap<(usize, usize), CorrelatorForm> = HashMap::new();
        if g >= 1 && !(g == 1 && n == 1) {
            lower.insert((g - 1, n + 1), self.omega_inner(g - 1, n + 1)?);
        }
        for h in 0..=g {
            for i in 0..=m {
                for (hh, ii) in [(h, i), (g - h, m - i)] {
                    if 2 * hh + ii + 1 >= 3 && !lower.contains_key(&(hh, ii + 1)) && (hh, ii + 1) != (g, n) {
                        lower.insert((hh, ii + 1), self.omega_inner(hh, ii + 1)?);
                    }
                }
            }
        }
        let mut terms: BTreeMap<Key, FormalScalar> = BTreeMap::new();
        for li in 0..self.locals.len() {
            let partial = self.integrand(li, g, n, &lower)?;
            let loc = &mut self.locals[li];
            let a = loc.a;
            for (jkey, s) in partial {
                let s = s.normalize();
                let Some(val) = s.valuation() else { continue };
                let jmax = 1 - val;
                for j in 1..=jmax.max(0) as usize {
                    let r = loc.kernel(j).mul(&s).residue()?;
                    if r.is_zero() {
                        continue;
                    }
                    let mut key = vec![(j as u32 + 1, a)];
                    key.extend(jkey.iter().copied());
                    let e = terms.entry(key).or_insert_with(FormalScalar::zero);
                    *e += r;
                }
            }
        }
        terms.retain(|_, c| !c.is_zero());
        let form = CorrelatorForm { g, n, terms };
        if let Some(cap) = pole_cap(g, n) {
            if form.max_pole() > cap {
                return Err(Error::CapExceeded(format!("ω_{{{g},{n}}} has pole order {} > {cap}", form.max_pole())));
            }
        }
        self.memo.insert((g, n), form.clone());
        Ok(form)
    }

    /// Bracket of the recursion near branch point `li`, keyed by the
    /// J-slot terms, as series in u (already including all differentials).
    fn integrand(&mut self, li: usize, g: usize, n: usize, lower: &HashMap<(usize, usize), CorrelatorForm>) -> Result<Partial> {
        let m = n - 1;
        let loc = &mut self.locals[li];
        let a = loc.a;
        let mut partial = Partial::new();
        if g >= 1 {
            if g == 1 && n == 1 {
                // B(z, 1/z) d(1/z)/dz
                let d = Laurent::monomial(1, FormalScalar::one(), EXACT).sub(&loc.eps);
                let s = d.inv(loc.top)?.pow(2).mul(&loc.dsig);
                accumulate(&mut partial, vec![], s);
            } else {
                let f = &lower[&(g - 1, n + 1)];
                for (key, c) in &f.terms {
                    let s = loc.slot(key[0].0, key[0].1, false)?.mul(&loc.slot(key[1].0, key[1].1, true)?).mul(&loc.dsig).scale(c);
                    accumulate(&mut partial, key[2..].to_vec(), s);
                }
            }
        }
        for h in 0..=g {
            for mask in 0u32..(1 << m) {
                let ni = mask.count_ones() as usize;
                if (h == 0 && ni == 0) || (h == g && ni == m) {
                    continue;
                }
                let (hc, nc) = (g - h, m - ni);
                let a_is_b = h == 0 && ni == 1;
                let c_is_b = hc == 0 && nc == 1;
                let mut cpart = Partial::new();
                if !c_is_b {
                    for (key, c) in &lower[&(hc, nc + 1)].terms {
                        let s = loc.slot(key[0].0, key[0].1, true)?.mul(&loc.dsig).scale(c);
                        accumulate(&mut cpart, key[1..].to_vec(), s);
                    }
                }
                let mut apart = Partial::new();
                if !a_is_b {
                    for (key, c) in &lower[&(h, ni + 1)].terms {
                        let s = loc.slot(key[0].0, key[0].1, false)?.scale(c);
                        accumulate(&mut apart, key[1..].to_vec(), s);
                    }
                }
                if a_is_b {
                    let mmax = if c_is_b { 0 } else { (-min_valuation(&cpart).unwrap_or(1)).max(0) };
                    for mm in 0..=mmax {
                        apart.insert(vec![(mm as u32 + 2, a)], Laurent::monomial(mm, fs(mm as i64 + 1), EXACT));
                    }
                }
                if c_is_b {
                    let mmax = if a_is_b { 0 } else { (-min_valuation(&apart).unwrap_or(1)).max(0) };
                    for mm in 0..=mmax {
                        let s = loc.eps.pow(mm as u32).mul(&loc.dsig).scale(&fs(mm as i64 + 1));
                        cpart.insert(vec![(mm as u32 + 2, a)], s);
                    }
                }
                for (ka, sa) in &apart {
                    for (kc, sc) in &cpart {
                        let (mut ia, mut ic) = (ka.iter(), kc.iter());
                        let key: Key = (0..m)
                            .map(|bit| if mask >> bit & 1 == 1 { *ia.next().unwrap() } else { *ic.next().unwrap() })
                            .collect();
                        accumulate(&mut partial, key, sa.mul(sc));
                    }
                }
            }
        }
        Ok(partial)
    }

    /// Series of K(z0, z) at branch point a in u for a fixed rational z0.
    pub fn kernel_series(&mut self, a: i8, z0: &Rational) -> Result<Laurent> {
        let li = if a == 1 { 0 } else { 1 };
        let loc = &mut self.locals[li];
        let d = FormalScalar::from(Rational::from(z0 - a as i64));
        let p1 = Laurent::poly(0, vec![d.clone(), fs(-1)], EXACT).inv(loc.top)?;
        let p2 = Laurent::poly(0, vec![d], EXACT).sub(&loc.eps).inv(loc.top)?;
        Ok(p1.sub(&p2).mul(&loc.den_inv).scale_rational(&Rational::from((1, 2))))
    }

    /// Closed-form K(z0, z) (per dz0/dz) in floating point at coupling t.
    pub fn kernel_f64(&self, z0: f64, z: f64, t: f64) -> f64 {
        let w: f64 = (1..self.curve.v.len()).map(|k| self.curve.v[k].eval_f64(t) * (z.powi(-(k as i32)) - z.powi(k as i32))).sum();
        let xp = self.curve.gamma.eval_f64(t) * (1.0 - 1.0 / (z * z));
        0.5 * (1.0 / (z0 - z) - 1.0 / (z0 - 1.0 / z)) / (w * xp)
    }

    /// Coefficient of Π x_i^{−μ_i−1} in W_{g,n}.
    pub fn w_coefficient(&mut self, g: usize, mu: &[usize]) -> Result<FormalScalar> {
        let n = mu.len();
        match (g, n) {
            (0, 1) => Ok(self.w01(mu[0])),
            (0, 2) => Ok(self.w02(mu[0], mu[1])),
            _ => {
                let f = self.omega(g, n)?;
                self.expand_to_w(&f, mu)
            }
        }
    }

    /// X_j = [z^j] x(z)^μ.
    fn x_power_coeff(&self, mu: usize, j: i64) -> FormalScalar {
        if j.unsigned_abs() as usize > mu || (mu as i64 + j) % 2 != 0 {
            return FormalScalar::zero();
        }
        let i = ((mu as i64 + j) / 2) as u32;
        self.curve.gamma.pow(mu as u32).scale(&binomial(mu as u32, i))
    }

    /// Large-x coefficients of a form: Σ_m C(k+m−1, m) s^m X_{k+m−1} per slot.
    pub fn expand_to_w(&self, form: &CorrelatorForm, mu: &[usize]) -> Result<FormalScalar> {
        if mu.len() != form.n || mu.iter().any(|&x| x == 0) {
            return Err(Error::Invalid("expand_to_W needs one order μ_i ≥ 1 per slot".into()));
        }
        let mut slot_cache: HashMap<(usize, Slot), FormalScalar> = HashMap::new();
        let mut total = FormalScalar::zero();
        for (key, c) in &form.terms {
            let mut prod = c.clone();
            for (i, slot) in key.iter().enumerate() {
                let f = slot_cache
                    .entry((mu[i], *slot))
                    .or_insert_with(|| {
                        let (k, s) = (slot.0 as i64, slot.1 as i64);
                        let mut acc = FormalScalar::zero();
                        let mut mm = 0i64;
                        while k + mm - 1 <= mu[i] as i64 {
                            let x = self.x_power_coeff(mu[i], k + mm - 1);
                            if !x.is_zero() {
                                let b = binomial((k + mm - 1) as u32, mm as u32);
                                let sign = if s < 0 && mm % 2 == 1 { -1 } else { 1 };
                                acc += x.scale(&Rational::from(b * sign));
                            }
                            mm += 1;
                        }
                        acc
                    })
                    .clone();
                prod = &prod * &f;
                if prod.is_zero() {
                    break;
                }
            }
            total += prod;
        }
        Ok(total)
    }

    /// [x^{−μ−1}] W_{0,1} = [z^{−1}] x^μ y x'.
    pub fn w01(&self, mu: usize) -> FormalScalar {
        let xp = Laurent::poly(0, vec![self.curve.gamma.clone(), FormalScalar::zero(), -&self.curve.gamma], EXACT)
            .mul(&Laurent::monomial(0, FormalScalar::one(), EXACT));
        let xp = Laurent { lo: 0, top: EXACT, c: xp.c };
        // x'(z) = γ − γ z^{−2}: shift to exponents −2..0
        let xp = Laurent::poly(-2, vec![xp.c[2].clone(), FormalScalar::zero(), xp.c[0].clone()], EXACT);
        let xm = self.curve.x_poly().pow(mu as u32);
        xm.mul(&self.curve.y_poly()).mul(&xp).coeff(-1).unwrap_or_else(|_| FormalScalar::zero())
    }

    /// [x1^{−μ1−1} x2^{−μ2−1}] W_{0,2} = Σ_{m≥0} (m+1) X^{μ1}_{m+1} X^{μ2}_{−m−1}.
    pub fn w02(&self, mu1: usize, mu2: usize) -> FormalScalar {
        let mut acc = FormalScalar::zero();
        for m in 0..mu1.max(mu2) as i64 {
            let a = self.x_power_coeff(mu1, m + 1);
            let b = self.x_power_coeff(mu2, -m - 1);
            if !a.is_zero() && !b.is_zero() {
                acc += (&a * &b).scale(&Rational::from(m + 1));
            }
        }
        acc
    }

    /// F_g = (1/(2−2g)) Σ_a Res Φ ω_{g,1}, Φ the local primitive of ω_{0,1}
    /// with constant `shift`.
    pub fn free_energy_with_constant(&mut self, g: usize, shift: &Rational) -> Result<FormalScalar> {
        if g < 2 {
            return Err(Error::Invalid("free energies are defined here for g ≥ 2".into()));
        }
        let f = self.omega(g, 1)?;
        let mut total = FormalScalar::zero();
        for li in 0..self.locals.len() {
            let loc = &self.locals[li];
            let a = loc.a as i64;
            let z = Laurent::rational_poly(0, &[a, 1], EXACT);
            // y(z) x'(z) in u
            let mut y = Laurent::zero(loc.top);
            let mut zi = Laurent::monomial(0, FormalScalar::one(), EXACT);
            for k in 1..self.curve.v.len() {
                zi = zi.mul(&loc.zinv);
                y = y.add(&zi.scale(&self.curve.v[k]));
            }
            let xp = Laurent::rational_poly(0, &[1], EXACT).add(&loc.dsig).scale(&self.curve.gamma);
            let _ = z;
            let phi = y.mul(&xp).primitive()?.add(&Laurent::monomial(0, FormalScalar::from(shift.clone()), EXACT));
            for (key, c) in &f.terms {
                let (k, s) = key[0];
                if s as i64 != a {
                    continue;
                }
                total += &phi.coeff(k as i32 - 1)? * c;
            }
        }
        Ok(total.scale(&Rational::from((1, 2 - 2 * g as i64))))
    }

    pub fn free_energy(&mut self, g: usize) -> Result<FormalScalar> {
        self.free_energy_with_constant(g, &Rational::new())
    }
}

fn binomial(n: u32, k: u32) -> Rational {
    let mut r = Rational::from(1);
    for i in 0..k {
        r *= Rational::from(n - i);
        r /= Rational::from(i + 1);
    }
    r
}
