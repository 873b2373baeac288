//! Exact Gaussian matrix integrals by Wick enumeration over labeled half-edges.
//!
//! Propagator ⟨M_ij M_kl⟩ = δ_il δ_jk / N, so a matching with E edges and F
//! faces contributes N^{F−E}. Quartic vertices come from exp(N t Tr M⁴/4).

use std::collections::BTreeMap;
use std::fmt;

use rug::ops::Pow;
use rug::{Integer, Rational};

use crate::error::{Error, Result};

/// Largest number of half-edges enumerated (17!! ≈ 3.4·10⁷ matchings).
pub const HALF_EDGE_CAP: usize = 18;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceWord {
    pub mu: Vec<usize>,
    pub q: usize,
}

impl TraceWord {
    pub fn new(mu: &[usize], q: usize) -> Self {
        TraceWord { mu: mu.to_vec(), q }
    }

    pub fn half_edges(&self) -> usize {
        self.mu.iter().sum::<usize>() + 4 * self.q
    }

    fn degrees(&self) -> Vec<usize> {
        let mut d = self.mu.clone();
        d.extend(std::iter::repeat(4).take(self.q));
        d
    }
}

/// Σ_e c_e N^e with exact rational coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GenusPolynomial {
    pub terms: BTreeMap<i64, Rational>,
}

impl GenusPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(e: i64, c: Rational) -> Self {
        let mut p = Self::zero();
        p.add_term(e, c);
        p
    }

    fn add_term(&mut self, e: i64, c: Rational) {
        let entry = self.terms.entry(e).or_default();
        *entry += c;
        if *entry == 0 {
            self.terms.remove(&e);
        }
    }

    pub fn coeff(&self, e: i64) -> Rational {
        self.terms.get(&e).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (e, c) in &o.terms {
            r.add_term(*e, c.clone());
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&Rational::from(-1)))
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut r = Self::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                r.add_term(e1 + e2, Rational::from(c1 * c2));
            }
        }
        r
    }

    pub fn scale(&self, s: &Rational) -> Self {
        let mut r = Self::zero();
        for (e, c) in &self.terms {
            r.add_term(*e, Rational::from(c * s));
        }
        r
    }

    pub fn shift(&self, by: i64) -> Self {
        GenusPolynomial { terms: self.terms.iter().map(|(e, c)| (e + by, c.clone())).collect() }
    }

    pub fn eval(&self, n: &Rational) -> Rational {
        let mut acc = Rational::new();
        for (e, c) in &self.terms {
            let p = if *e >= 0 {
                Rational::from(n.clone().pow(*e as u32))
            } else {
                Rational::from(n.clone().recip().pow((-e) as u32))
            };
            acc += Rational::from(c * &p);
        }
        acc
    }
}

impl fmt::Display for GenusPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().rev().map(|(e, c)| format!("{c}*N^{e}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

struct Enumerator {
    sigma: Vec<usize>,
    vertex: Vec<usize>,
    nvert: usize,
    mate: Vec<usize>,
    connected: bool,
    // count of matchings by face number
    faces: Vec<u64>,
}

impl Enumerator {
    fn run(&mut self) {
        let h = self.sigma.len();
        let first = (0..h).find(|&i| self.mate[i] == usize::MAX);
        let Some(a) = first else {
            self.leaf();
            return;
        };
        for b in a + 1..h {
            if self.mate[b] == usize::MAX {
                self.mate[a] = b;
                self.mate[b] = a;
                self.run();
                self.mate[a] = usize::MAX;
                self.mate[b] = usize::MAX;
            }
        }
    }

    fn leaf(&mut self) {
        let h = self.sigma.len();
        if self.connected && !self.is_connected() {
            return;
        }
        let mut seen = vec![false; h];
        let mut f = 0;
        for s in 0..h {
            if seen[s] {
                continue;
            }
            f += 1;
            let mut i = s;
            while !seen[i] {
                seen[i] = true;
                i = self.sigma[self.mate[i]];
            }
        }
        if self.faces.len() <= f {
            self.faces.resize(f + 1, 0);
        }
        self.faces[f] += 1;
    }

    fn is_connected(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.nvert).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut comps = self.nvert;
        for i in 0..self.sigma.len() {
            let (a, b) = (find(&mut parent, self.vertex[i]), find(&mut parent, self.vertex[self.mate[i]]));
            if a != b {
                parent[a] = b;
                comps -= 1;
            }
        }
        comps == 1
    }
}

/// Face-number histogram over all (connected) matchings of the word.
pub fn face_counts(word: &TraceWord, connected: bool) -> Result<Vec<u64>> {
    let h = word.half_edges();
    if h > HALF_EDGE_CAP {
        return Err(Error::CapExceeded(format!("{h} half-edges exceed the cap of {HALF_EDGE_CAP}")));
    }
    if word.mu.iter().any(|&m| m == 0) {
        return Err(Error::Invalid("trace degrees must be positive".into()));
    }
    if h % 2 == 1 {
        return Ok(vec![]);
    }
    let degs = word.degrees();
    let mut sigma = Vec::with_capacity(h);
    let mut vertex = Vec::with_capacity(h);
    let mut start = 0;
    for (v, &d) in degs.iter().enumerate() {
        for j in 0..d {
            sigma.push(start + (j + 1) % d);
            vertex.push(v);
        }
        start += d;
    }
    let mut en = Enumerator { sigma, vertex, nvert: degs.len(), mate: vec![usize::MAX; h], connected, faces: vec![] };
    if h == 0 {
        return Ok(if degs.len() <= 1 || !connected { vec![1] } else { vec![] });
    }
    en.run();
    Ok(en.faces)
}

/// ⟨Π Tr M^{μ_i} (Tr M⁴)^q⟩ under the Gaussian measure, or its connected part.
pub fn gaussian_moment(word: &TraceWord, connected: bool) -> Result<GenusPolynomial> {
    let counts = face_counts(word, connected)?;
    let e = (word.half_edges() / 2) as i64;
    let mut p = GenusPolynomial::zero();
    for (f, c) in counts.iter().enumerate() {
        if *c > 0 {
            p.add_term(f as i64 - e, Rational::from(Integer::from(*c)));
        }
    }
    Ok(p)
}

/// Coefficients of W_{g,n} at x^{−μ−1} t^q: entries (g, q) ↦ rational.
pub fn connected_correlator_coeffs(mu: &[usize], t_order: usize) -> Result<BTreeMap<(usize, usize), Rational>> {
    let n = mu.len() as i64;
    if n == 0 {
        return Err(Error::Invalid("at least one marked trace".into()));
    }
    let mut table = BTreeMap::new();
    let mut fact = Integer::from(1);
    for q in 0..=t_order {
        if q > 0 {
            fact *= q as u32;
        }
        let gp = gaussian_moment(&TraceWord::new(mu, q), true)?;
        // (N t/4)^q / q!
        let weight = Rational::from((Integer::from(1), Integer::from(Integer::u_pow_u(4, q as u32)) * &fact));
        for (e, c) in &gp.terms {
            let chi = e + q as i64;
            let two_g = 2 - n - chi;
            if two_g < 0 || two_g % 2 != 0 {
                return Err(Error::Invalid(format!("exponent {chi} is not of the form 2 − 2g − n")));
            }
            table.insert(((two_g / 2) as usize, q), Rational::from(c * &weight));
        }
    }
    Ok(table)
}

/// Coefficients of F_g at t^q (q ≥ 1) from connected vacuum maps: (g, q) ↦ rational.
pub fn free_energy_coeffs(t_order: usize) -> Result<BTreeMap<(usize, usize), Rational>> {
    let mut table = BTreeMap::new();
    let mut fact = Integer::from(1);
    for q in 1..=t_order {
        fact *= q as u32;
        let gp = gaussian_moment(&TraceWord::new(&[], q), true)?;
        let weight = Rational::from((Integer::from(1), Integer::from(Integer::u_pow_u(4, q as u32)) * &fact));
        for (e, c) in &gp.terms {
            let two_g = 2 - (e + q as i64);
            if two_g < 0 || two_g % 2 != 0 {
                return Err(Error::Invalid(format!("vacuum exponent {} is not of the form 2 − 2g", e + q as i64)));
            }
            table.insert(((two_g / 2) as usize, q), Rational::from(c * &weight));
        }
    }
    Ok(table)
}

/// Power-sum expansion of e_j: map from sorted partitions to coefficients.
fn elementary_in_power_sums(k: usize) -> Vec<BTreeMap<Vec<usize>, Rational>> {
    let mut e: Vec<BTreeMap<Vec<usize>, Rational>> = vec![BTreeMap::from([(vec![], Rational::from(1))])];
    for j in 1..=k {
        // j e_j = Σ_{i=1}^j (−1)^{i−1} e_{j−i} p_i
        let mut cur = BTreeMap::new();
        for i in 1..=j {
            let sign = if i % 2 == 1 { 1 } else { -1 };
            for (part, c) in &e[j - i] {
                let mut p = part.clone();
                p.push(i);
                p.sort_unstable();
                let add = Rational::from(c * sign) / j as u32;
                let entry: &mut Rational = cur.entry(p).or_default();
                *entry += add;
            }
        }
        cur.retain(|_, c: &mut Rational| *c != 0);
        e.push(cur);
    }
    e
}

/// Coefficients (constant first) of ⟨det(λ − M)⟩ over k×k Gaussian matrices
/// with weight e^{−Tr M²/2}.
pub fn heine_polynomial(k: usize) -> Result<Vec<Rational>> {
    if k > 4 {
        return Err(Error::CapExceeded(format!("Heine oracle supports k ≤ 4, got {k}")));
    }
    let e = elementary_in_power_sums(k);
    let kn = Rational::from(k as u32);
    let mut coeffs = vec![Rational::new(); k + 1];
    for j in 0..=k {
        let mut ej = Rational::new();
        for (part, c) in &e[j] {
            // unit propagator: Σ k^F = k^E · Σ k^{F−E}
            let word = TraceWord::new(part, 0);
            let m = gaussian_moment(&word, false)?.shift((word.half_edges() / 2) as i64);
            ej += Rational::from(c * &m.eval(&kn));
        }
        let signed = if j % 2 == 0 { ej } else { -ej };
        coeffs[k - j] = signed;
    }
    Ok(coeffs)
}

pub fn heine_oracle(k: usize, lambda: &Rational) -> Result<Rational> {
    let c = heine_polynomial(k)?;
    Ok(c.iter().rev().fold(Rational::new(), |acc, x| acc * lambda + x))
}
