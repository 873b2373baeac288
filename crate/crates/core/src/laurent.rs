//! Truncated Laurent series Σ c_e u^e with FormalScalar coefficients.
//! Exponents lo..=top are known (entries past the end of `c` are zero);
//! everything above top is unknown.

use rug::Rational;

use crate::error::{Error, Result};
use crate::model::FormalScalar;

#[derive(Clone, Debug)]
pub struct Laurent {
    pub lo: i32,
    pub top: i32,
    pub c: Vec<FormalScalar>,
}

impl Laurent {
    pub fn zero(top: i32) -> Self {
        Laurent { lo: top + 1, top, c: vec![] }
    }

    /// c·u^e, known through `top`.
    pub fn monomial(e: i32, coef: FormalScalar, top: i32) -> Self {
        Self::poly(e, vec![coef], top)
    }

    /// Σ coeffs[i] u^{lo+i}, an exact polynomial truncated at `top`.
    pub fn poly(lo: i32, coeffs: Vec<FormalScalar>, top: i32) -> Self {
        let len = (top as i64 - lo as i64 + 1).max(0) as usize;
        let mut c = coeffs;
        c.truncate(len);
        Laurent { lo, top, c }
    }

    pub fn rational_poly(lo: i32, coeffs: &[i64], top: i32) -> Self {
        Self::poly(lo, coeffs.iter().map(|&x| FormalScalar::int(x)).collect(), top)
    }

    pub fn coeff(&self, e: i32) -> Result<FormalScalar> {
        if e > self.top {
            return Err(Error::DepthExceeded(format!("u^{e} requested, series known through u^{}", self.top)));
        }
        if e < self.lo {
            return Ok(FormalScalar::zero());
        }
        Ok(self.c.get((e - self.lo) as usize).cloned().unwrap_or_else(FormalScalar::zero))
    }

    /// Residue: coefficient of u^{−1}.
    pub fn residue(&self) -> Result<FormalScalar> {
        self.coeff(-1)
    }

    /// Drop exactly-zero leading coefficients.
    pub fn normalize(mut self) -> Self {
        let k = self.c.iter().take_while(|x| x.is_zero()).count();
        self.c.drain(..k);
        self.lo += k as i32;
        self
    }

    /// Lowest exponent carrying a nonzero coefficient, if any.
    pub fn valuation(&self) -> Option<i32> {
        self.c.iter().position(|x| !x.is_zero()).map(|i| self.lo + i as i32)
    }

    fn end(&self) -> i32 {
        self.lo + self.c.len() as i32
    }

    pub fn add(&self, o: &Self) -> Self {
        let top = self.top.min(o.top);
        let lo = self.lo.min(o.lo);
        let end = self.end().max(o.end()).min(top.saturating_add(1));
        let zero = FormalScalar::zero();
        let get = |s: &Self, e: i32| -> FormalScalar {
            if e >= s.lo && e < s.end() {
                s.c[(e - s.lo) as usize].clone()
            } else {
                zero.clone()
            }
        };
        let c = (lo..end).map(|e| &get(self, e) + &get(o, e)).collect();
        Laurent { lo, top, c }
    }

    pub fn neg(&self) -> Self {
        Laurent { lo: self.lo, top: self.top, c: self.c.iter().map(|x| -x).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn scale(&self, s: &FormalScalar) -> Self {
        Laurent { lo: self.lo, top: self.top, c: self.c.iter().map(|x| x * s).collect() }
    }

    pub fn scale_rational(&self, s: &Rational) -> Self {
        Laurent { lo: self.lo, top: self.top, c: self.c.iter().map(|x| x.scale(s)).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let a = self.clone().normalize();
        let b = o.clone().normalize();
        let lo = a.lo + b.lo;
        let top = a.top.saturating_add(b.lo).min(b.top.saturating_add(a.lo));
        let len = ((top as i64 - lo as i64 + 1).max(0) as usize).min((a.c.len() + b.c.len()).saturating_sub(1));
        let mut c = vec![FormalScalar::zero(); len];
        for (i, x) in a.c.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.c.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                if y.is_zero() {
                    continue;
                }
                c[i + j] += x * y;
            }
        }
        Laurent { lo, top, c }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut r = Laurent::monomial(0, FormalScalar::one(), EXACT);
        let mut b = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                r = r.mul(&b);
            }
            k >>= 1;
            if k > 0 {
                b = b.mul(&b);
            }
        }
        r
    }

    /// 1/self, known through min(natural precision, `limit`); the leading
    /// coefficient must be invertible in the coupling ring.
    pub fn inv(&self, limit: i32) -> Result<Self> {
        let a = self.clone().normalize();
        if a.c.is_empty() {
            return Err(Error::NotInvertible);
        }
        let top = (a.top as i64 - 2 * a.lo as i64).min(limit as i64) as i32;
        let n = (top as i64 + a.lo as i64 + 1).max(0) as usize;
        let d0 = a.c[0].inverse()?;
        let mut d: Vec<FormalScalar> = Vec::with_capacity(n);
        if n > 0 {
            d.push(d0.clone());
        }
        for k in 1..n {
            let mut s = FormalScalar::zero();
            for j in 1..=k.min(a.c.len() - 1) {
                if !a.c[j].is_zero() {
                    s += &a.c[j] * &d[k - j];
                }
            }
            d.push(-(&d0 * &s));
        }
        Ok(Laurent { lo: -a.lo, top, c: d })
    }

    /// Term-wise primitive with zero constant; fails on a u^{−1} term.
    pub fn primitive(&self) -> Result<Self> {
        let mut c = vec![FormalScalar::zero(); self.c.len()];
        for (i, x) in self.c.iter().enumerate() {
            let e = self.lo + i as i32;
            if e == -1 {
                if !x.is_zero() {
                    return Err(Error::Invalid("primitive of a series with a residue".into()));
                }
                continue;
            }
            c[i] = x.scale(&Rational::from((1, e + 1)));
        }
        // shift exponents by one; the constant slot (exponent 0) stays zero
        let mut r = Laurent { lo: self.lo + 1, top: self.top.saturating_add(1), c };
        if r.lo > 0 {
            let pad = r.lo as usize;
            let mut c = vec![FormalScalar::zero(); pad];
            c.append(&mut r.c);
            r = Laurent { lo: 0, top: r.top, c };
        }
        Ok(r)
    }

    /// Numeric evaluation at small u and coupling t (truncated sum).
    pub fn eval_f64(&self, u: f64, t: f64) -> f64 {
        self.c.iter().enumerate().map(|(i, x)| x.eval_f64(t) * u.powi(self.lo + i as i32)).sum()
    }
}

/// `top` for exactly known polynomials.
pub const EXACT: i32 = i32::MAX / 4;
