//! Scalars, potentials and the order-by-order Newton solver shared by all modules.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::{Integer, Rational};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Exact rational, or a power series c_0 + c_1 t + ... + c_p t^p in one
/// coupling t, truncated at order p.
#[derive(Clone, Debug)]
pub enum FormalScalar {
    Rational(Rational),
    Series(Vec<Rational>),
}

impl FormalScalar {
    pub fn zero() -> Self {
        FormalScalar::Rational(Rational::new())
    }

    pub fn one() -> Self {
        FormalScalar::Rational(Rational::from(1))
    }

    pub fn int(n: i64) -> Self {
        FormalScalar::Rational(Rational::from(n))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        FormalScalar::Rational(Rational::from((num, den)))
    }

    /// The coupling t itself, truncated at `order`.
    pub fn coupling(order: usize) -> Self {
        let mut c = vec![Rational::new(); order + 1];
        if order >= 1 {
            c[1] = Rational::from(1);
        }
        FormalScalar::Series(c)
    }

    pub fn series(coeffs: Vec<Rational>) -> Self {
        assert!(!coeffs.is_empty(), "series needs at least the constant term");
        FormalScalar::Series(coeffs)
    }

    /// Truncation order; `None` for an exact rational.
    pub fn order(&self) -> Option<usize> {
        match self {
            FormalScalar::Rational(_) => None,
            FormalScalar::Series(c) => Some(c.len() - 1),
        }
    }

    pub fn coeff(&self, k: usize) -> Rational {
        match self {
            FormalScalar::Rational(r) => {
                if k == 0 {
                    r.clone()
                } else {
                    Rational::new()
                }
            }
            FormalScalar::Series(c) => c.get(k).cloned().unwrap_or_default(),
        }
    }

    pub fn constant(&self) -> &Rational {
        match self {
            FormalScalar::Rational(r) => r,
            FormalScalar::Series(c) => &c[0],
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FormalScalar::Rational(r) => *r == 0,
            FormalScalar::Series(c) => c.iter().all(|x| *x == 0),
        }
    }

    /// Coefficients up to `order`, padding with zeros.
    pub fn to_coeffs(&self, order: usize) -> Vec<Rational> {
        (0..=order).map(|k| self.coeff(k)).collect()
    }

    pub fn truncate(&self, order: usize) -> Self {
        match self {
            FormalScalar::Rational(_) => self.clone(),
            FormalScalar::Series(c) => {
                FormalScalar::Series(c[..(order + 1).min(c.len())].to_vec())
            }
        }
    }

    pub fn scale(&self, r: &Rational) -> Self {
        match self {
            FormalScalar::Rational(x) => FormalScalar::Rational(Rational::from(x * r)),
            FormalScalar::Series(c) => {
                FormalScalar::Series(c.iter().map(|x| Rational::from(x * r)).collect())
            }
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = FormalScalar::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn inverse(&self) -> Result<Self> {
        match self {
            FormalScalar::Rational(r) => {
                if *r == 0 {
                    Err(Error::NotInvertible)
                } else {
                    Ok(FormalScalar::Rational(Rational::from(r.recip_ref())))
                }
            }
            FormalScalar::Series(a) => {
                if a[0] == 0 {
                    return Err(Error::NotInvertible);
                }
                let inv0 = Rational::from(a[0].recip_ref());
                let mut b = vec![inv0.clone()];
                for k in 1..a.len() {
                    let mut s = Rational::new();
                    for j in 1..=k {
                        s += Rational::from(&a[j] * &b[k - j]);
                    }
                    b.push(-(s * &inv0));
                }
                Ok(FormalScalar::Series(b))
            }
        }
    }

    pub fn sqrt(&self) -> Result<Self> {
        let s0 = rational_sqrt(self.constant())
            .ok_or_else(|| Error::NoSquareRoot(self.constant().to_string()))?;
        match self {
            FormalScalar::Rational(_) => Ok(FormalScalar::Rational(s0)),
            FormalScalar::Series(a) => {
                let two_s0 = Rational::from(&s0 * 2u32);
                let mut s = vec![s0];
                for k in 1..a.len() {
                    let mut acc = a[k].clone();
                    for j in 1..k {
                        acc -= Rational::from(&s[j] * &s[k - j]);
                    }
                    s.push(acc / &two_s0);
                }
                Ok(FormalScalar::Series(s))
            }
        }
    }

    /// Numerical value at a given coupling (for float cross-checks).
    pub fn eval_f64(&self, t: f64) -> f64 {
        match self {
            FormalScalar::Rational(r) => r.to_f64(),
            FormalScalar::Series(c) => c.iter().rev().fold(0.0, |acc, x| acc * t + x.to_f64()),
        }
    }

    fn binary(&self, other: &Self, op: impl Fn(&Rational, &Rational) -> Rational) -> Self {
        match (self, other) {
            (FormalScalar::Rational(a), FormalScalar::Rational(b)) => {
                FormalScalar::Rational(op(a, b))
            }
            _ => {
                let p = min_order(self, other);
                FormalScalar::Series(
                    (0..=p).map(|k| op(&self.coeff(k), &other.coeff(k))).collect(),
                )
            }
        }
    }
}

fn min_order(a: &FormalScalar, b: &FormalScalar) -> usize {
    match (a.order(), b.order()) {
        (Some(p), Some(q)) => p.min(q),
        (Some(p), None) | (None, Some(p)) => p,
        (None, None) => 0,
    }
}

/// Square root of a nonnegative rational when it is a perfect square.
pub fn rational_sqrt(r: &Rational) -> Option<Rational> {
    if *r < 0 {
        return None;
    }
    let (n, d) = (r.numer(), r.denom());
    if !n.is_perfect_square() || !d.is_perfect_square() {
        return None;
    }
    Some(Rational::from((Integer::from(n.sqrt_ref()), Integer::from(d.sqrt_ref()))))
}

impl PartialEq for FormalScalar {
    /// Equality up to the common truncation order.
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (FormalScalar::Rational(a), FormalScalar::Rational(b)) => a == b,
            _ => (0..=min_order(self, other)).all(|k| self.coeff(k) == other.coeff(k)),
        }
    }
}

impl From<Rational> for FormalScalar {
    fn from(r: Rational) -> Self {
        FormalScalar::Rational(r)
    }
}

impl From<i64> for FormalScalar {
    fn from(n: i64) -> Self {
        FormalScalar::int(n)
    }
}

impl fmt::Display for FormalScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormalScalar::Rational(r) => write!(f, "{r}"),
            FormalScalar::Series(c) => {
                let mut first = true;
                for (k, x) in c.iter().enumerate() {
                    if *x == 0 {
                        continue;
                    }
                    if !first {
                        write!(f, " + ")?;
                    }
                    first = false;
                    match k {
                        0 => write!(f, "{x}")?,
                        1 => write!(f, "{x}*t")?,
                        _ => write!(f, "{x}*t^{k}")?,
                    }
                }
                if first {
                    write!(f, "0")?;
                }
                write!(f, " + O(t^{})", c.len())
            }
        }
    }
}

impl<'a> Add<&'a FormalScalar> for &'a FormalScalar {
    type Output = FormalScalar;
    fn add(self, o: &FormalScalar) -> FormalScalar {
        self.binary(o, |a, b| Rational::from(a + b))
    }
}

impl<'a> Sub<&'a FormalScalar> for &'a FormalScalar {
    type Output = FormalScalar;
    fn sub(self, o: &FormalScalar) -> FormalScalar {
        self.binary(o, |a, b| Rational::from(a - b))
    }
}

impl<'a> Mul<&'a FormalScalar> for &'a FormalScalar {
    type Output = FormalScalar;
    fn mul(self, o: &FormalScalar) -> FormalScalar {
        match (self, o) {
            (FormalScalar::Rational(a), FormalScalar::Rational(b)) => {
                FormalScalar::Rational(Rational::from(a * b))
            }
            (FormalScalar::Rational(a), s) | (s, FormalScalar::Rational(a)) => s.scale(a),
            (FormalScalar::Series(a), FormalScalar::Series(b)) => {
                let p = (a.len()).min(b.len());
                let mut c = vec![Rational::new(); p];
                for (i, x) in a.iter().enumerate().take(p) {
                    if *x == 0 {
                        continue;
                    }
                    for (j, y) in b.iter().enumerate().take(p - i) {
                        c[i + j] += Rational::from(x * y);
                    }
                }
                FormalScalar::Series(c)
            }
        }
    }
}

impl Neg for &FormalScalar {
    type Output = FormalScalar;
    fn neg(self) -> FormalScalar {
        match self {
            FormalScalar::Rational(r) => FormalScalar::Rational(Rational::from(-r)),
            FormalScalar::Series(c) => {
                FormalScalar::Series(c.iter().map(|x| Rational::from(-x)).collect())
            }
        }
    }
}

macro_rules! owned_ops {
    ($tr:ident, $m:ident, $atr:ident, $am:ident) => {
        impl $tr<FormalScalar> for FormalScalar {
            type Output = FormalScalar;
            fn $m(self, o: FormalScalar) -> FormalScalar {
                (&self).$m(&o)
            }
        }
        impl<'a> $tr<&'a FormalScalar> for FormalScalar {
            type Output = FormalScalar;
            fn $m(self, o: &FormalScalar) -> FormalScalar {
                (&self).$m(o)
            }
        }
        impl<'a> $tr<FormalScalar> for &'a FormalScalar {
            type Output = FormalScalar;
            fn $m(self, o: FormalScalar) -> FormalScalar {
                self.$m(&o)
            }
        }
        impl<'a> $atr<&'a FormalScalar> for FormalScalar {
            fn $am(&mut self, o: &FormalScalar) {
                *self = (&*self).$m(o);
            }
        }
        impl $atr<FormalScalar> for FormalScalar {
            fn $am(&mut self, o: FormalScalar) {
                *self = (&*self).$m(&o);
            }
        }
    };
}

owned_ops!(Add, add, AddAssign, add_assign);
owned_ops!(Sub, sub, SubAssign, sub_assign);
owned_ops!(Mul, mul, MulAssign, mul_assign);

impl Neg for FormalScalar {
    type Output = FormalScalar;
    fn neg(self) -> FormalScalar {
        -&self
    }
}

/// Solves F(u) = 0 order by order in the coupling, starting from the exact
/// order-0 root `u0`. The order-0 derivative is read off exactly as
/// [t^1]F(u0 + t) − [t^1]F(u0).
pub fn series_newton<F>(f: F, u0: &Rational, order: usize) -> Result<FormalScalar>
where
    F: Fn(&FormalScalar) -> FormalScalar,
{
    let mut u = vec![Rational::new(); order + 1];
    u[0] = u0.clone();
    let base = f(&FormalScalar::Series(u.clone()));
    if base.coeff(0) != 0 {
        return Err(Error::Invalid(format!(
            "F(u0) = {} is not zero at order 0",
            base.coeff(0)
        )));
    }
    if order == 0 {
        return Ok(FormalScalar::Series(u));
    }
    let mut shifted = vec![Rational::new(); order.max(1) + 1];
    shifted[0] = u0.clone();
    shifted[1] = Rational::from(1);
    let d0 = f(&FormalScalar::Series(shifted)).coeff(1) - base.coeff(1);
    if d0 == 0 {
        return Err(Error::SingularDerivative);
    }
    for k in 1..=order {
        let r = f(&FormalScalar::Series(u.clone())).coeff(k);
        u[k] -= r / &d0;
    }
    Ok(FormalScalar::Series(u))
}

/// A value in one of the three coefficient rings a potential can live in.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(Rational),
    Float(f64),
    Formal(FormalScalar),
}

impl Scalar {
    fn ring(&self) -> &'static str {
        match self {
            Scalar::Exact(_) => "exact",
            Scalar::Float(_) => "float",
            Scalar::Formal(_) => "formal",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarKind {
    Exact,
    Float,
    Formal,
}

#[derive(Clone, Debug, PartialEq)]
enum Coeffs {
    Exact(Vec<Rational>),
    Float(Vec<f64>),
    Formal(Vec<FormalScalar>),
}

/// Polynomial potential V(x) = Σ_k (t_k/k) x^k, k ≥ 1.
///
/// Storage is the coefficient list of V': slot i holds t_{i+1}, so the list
/// length minus one is d = deg V'.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    coeffs: Coeffs,
}

impl Potential {
    /// `ts[i]` is t_{i+1}. Trailing zeros are dropped.
    pub fn exact(mut ts: Vec<Rational>) -> Result<Self> {
        while ts.last().is_some_and(|x| *x == 0) {
            ts.pop();
        }
        if ts.is_empty() {
            return Err(Error::Invalid("potential has no nonzero coefficient".into()));
        }
        Ok(Potential { coeffs: Coeffs::Exact(ts) })
    }

    pub fn float(mut ts: Vec<f64>) -> Result<Self> {
        while ts.last().is_some_and(|x| *x == 0.0) {
            ts.pop();
        }
        if ts.is_empty() || ts.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("potential needs finite, not all zero coefficients".into()));
        }
        Ok(Potential { coeffs: Coeffs::Float(ts) })
    }

    pub fn formal(mut ts: Vec<FormalScalar>) -> Result<Self> {
        while ts.last().is_some_and(|x| x.is_zero()) {
            ts.pop();
        }
        if ts.is_empty() {
            return Err(Error::Invalid("potential has no nonzero coefficient".into()));
        }
        Ok(Potential { coeffs: Coeffs::Formal(ts) })
    }

    /// Builds an exact potential from (k, t_k) pairs.
    pub fn from_terms(terms: &[(usize, Rational)]) -> Result<Self> {
        let len = terms.iter().map(|(k, _)| *k).max().unwrap_or(0);
        let mut ts = vec![Rational::new(); len];
        for (k, v) in terms {
            if *k == 0 {
                return Err(Error::Invalid("t_0 is not part of a potential".into()));
            }
            ts[k - 1] += v;
        }
        Potential::exact(ts)
    }

    /// V = x²/2.
    pub fn gaussian() -> Self {
        Potential::exact(vec![Rational::new(), Rational::from(1)]).unwrap()
    }

    /// V = (1/t)(x²/2 − x⁴/4), i.e. t_2 = 1/t, t_4 = −1/t.
    pub fn scaled_quartic(t: &Rational) -> Result<Self> {
        if *t == 0 {
            return Err(Error::Invalid("t must be nonzero".into()));
        }
        let inv = Rational::from(t.recip_ref());
        Potential::from_terms(&[(2, inv.clone()), (4, -inv)])
    }

    /// Formal quartic model V = x²/2 − (t/4) x⁴ truncated at `order` in t.
    pub fn formal_quartic(order: usize) -> Self {
        let t = FormalScalar::coupling(order);
        Potential::formal(vec![
            FormalScalar::zero(),
            FormalScalar::one(),
            FormalScalar::zero(),
            -t,
        ])
        .unwrap()
    }

    pub fn kind(&self) -> ScalarKind {
        match self.coeffs {
            Coeffs::Exact(_) => ScalarKind::Exact,
            Coeffs::Float(_) => ScalarKind::Float,
            Coeffs::Formal(_) => ScalarKind::Formal,
        }
    }

    fn len(&self) -> usize {
        match &self.coeffs {
            Coeffs::Exact(v) => v.len(),
            Coeffs::Float(v) => v.len(),
            Coeffs::Formal(v) => v.len(),
        }
    }

    /// d = deg V'.
    pub fn degree_vprime(&self) -> usize {
        self.len() - 1
    }

    /// t_k as a scalar; zero beyond the degree.
    pub fn t(&self, k: usize) -> Scalar {
        assert!(k >= 1, "t_0 is not part of a potential");
        match &self.coeffs {
            Coeffs::Exact(v) => Scalar::Exact(v.get(k - 1).cloned().unwrap_or_default()),
            Coeffs::Float(v) => Scalar::Float(v.get(k - 1).copied().unwrap_or(0.0)),
            Coeffs::Formal(v) => {
                Scalar::Formal(v.get(k - 1).cloned().unwrap_or_else(FormalScalar::zero))
            }
        }
    }

    /// Coefficients of V' in f64 (formal potentials are evaluated at t = 0).
    pub fn vprime_f64(&self) -> Vec<f64> {
        match &self.coeffs {
            Coeffs::Exact(v) => v.iter().map(|x| x.to_f64()).collect(),
            Coeffs::Float(v) => v.clone(),
            Coeffs::Formal(v) => v.iter().map(|x| x.constant().to_f64()).collect(),
        }
    }

    /// Coefficients of V' as exact rationals; floats convert exactly.
    pub fn vprime_exact(&self) -> Option<Vec<Rational>> {
        match &self.coeffs {
            Coeffs::Exact(v) => Some(v.clone()),
            Coeffs::Float(v) => v.iter().map(|x| Rational::from_f64(*x)).collect(),
            Coeffs::Formal(_) => None,
        }
    }

    pub fn vprime_formal(&self) -> Vec<FormalScalar> {
        match &self.coeffs {
            Coeffs::Exact(v) => v.iter().cloned().map(FormalScalar::from).collect(),
            Coeffs::Float(v) => v
                .iter()
                .map(|x| FormalScalar::from(Rational::from_f64(*x).unwrap()))
                .collect(),
            Coeffs::Formal(v) => v.clone(),
        }
    }

    /// Whether every odd-power term of V vanishes.
    pub fn is_even(&self) -> bool {
        (1..=self.len()).step_by(2).all(|k| match self.t(k) {
            Scalar::Exact(r) => r == 0,
            Scalar::Float(f) => f == 0.0,
            Scalar::Formal(s) => s.is_zero(),
        })
    }

    pub fn eval(&self, x: &Scalar) -> Result<Scalar> {
        self.horner(x, false)
    }

    /// V'(x).
    pub fn eval_derivative(&self, x: &Scalar) -> Result<Scalar> {
        self.horner(x, true)
    }

    fn horner(&self, x: &Scalar, derivative: bool) -> Result<Scalar> {
        let mismatch = || Error::RingMismatch {
            potential: match self.kind() {
                ScalarKind::Exact => "exact",
                ScalarKind::Float => "float",
                ScalarKind::Formal => "formal",
            },
            argument: x.ring(),
        };
        match (&self.coeffs, x) {
            (Coeffs::Float(v), Scalar::Float(x)) => {
                let mut acc = 0.0;
                for (i, t) in v.iter().enumerate().rev() {
                    let c = if derivative { *t } else { t / (i + 1) as f64 };
                    acc = acc * x + c;
                }
                Ok(Scalar::Float(if derivative { acc } else { acc * x }))
            }
            (Coeffs::Exact(v), Scalar::Exact(x)) => {
                let mut acc = Rational::new();
                for (i, t) in v.iter().enumerate().rev() {
                    acc *= x;
                    if derivative {
                        acc += t;
                    } else {
                        acc += Rational::from(t / (i as u32 + 1));
                    }
                }
                if !derivative {
                    acc *= x;
                }
                Ok(Scalar::Exact(acc))
            }
            (Coeffs::Formal(v), Scalar::Formal(_)) | (Coeffs::Formal(v), Scalar::Exact(_)) => {
                let x = match x {
                    Scalar::Formal(s) => s.clone(),
                    Scalar::Exact(r) => FormalScalar::from(r.clone()),
                    Scalar::Float(_) => unreachable!(),
                };
                let mut acc = FormalScalar::zero();
                for (i, t) in v.iter().enumerate().rev() {
                    acc = &acc * &x;
                    if derivative {
                        acc += t;
                    } else {
                        acc += t.scale(&Rational::from((1, i as u32 + 1)));
                    }
                }
                if !derivative {
                    acc = &acc * &x;
                }
                Ok(Scalar::Formal(acc))
            }
            _ => Err(mismatch()),
        }
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let v = self.vprime_f64();
        x * v
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (i, t)| acc * x + t / (i + 1) as f64)
    }

    pub fn derivative_f64(&self, x: f64) -> f64 {
        self.vprime_f64().iter().rev().fold(0.0, |acc, t| acc * x + t)
    }

    /// JSON array of {k, numerator, denominator}; formal potentials are not serializable.
    pub fn to_json(&self) -> Result<Value> {
        let ts = self
            .vprime_exact()
            .ok_or_else(|| Error::Invalid("formal potentials have no JSON form".into()))?;
        Ok(Value::Array(
            ts.iter()
                .enumerate()
                .filter(|(_, t)| **t != 0)
                .map(|(i, t)| {
                    json!({
                        "k": i + 1,
                        "numerator": integer_json(t.numer()),
                        "denominator": integer_json(t.denom()),
                    })
                })
                .collect(),
        ))
    }

    /// Parses the JSON form. Numbers may be integers, decimal strings, or
    /// floats; floats are taken as their exact binary value.
    pub fn from_json(v: &Value) -> Result<Self> {
        let arr = v
            .as_array()
            .ok_or_else(|| Error::Invalid("potential JSON must be an array".into()))?;
        let mut terms = Vec::new();
        for e in arr {
            let k = e
                .get("k")
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::Invalid(format!("entry {e} lacks integer k")))?;
            let num = json_rational(e.get("numerator"))?;
            let den = match e.get("denominator") {
                None => Rational::from(1),
                d => json_rational(d)?,
            };
            if den == 0 {
                return Err(Error::Invalid(format!("zero denominator in {e}")));
            }
            terms.push((k as usize, num / den));
        }
        Potential::from_terms(&terms)
    }
}

fn integer_json(n: &Integer) -> Value {
    match n.to_i64() {
        Some(x) => json!(x),
        None => json!(n.to_string()),
    }
}

fn json_rational(v: Option<&Value>) -> Result<Rational> {
    match v {
        Some(Value::Number(n)) => {
            if let Some(i) = n.as_i64() {
                Ok(Rational::from(i))
            } else {
                n.as_f64()
                    .and_then(Rational::from_f64)
                    .ok_or_else(|| Error::Invalid(format!("bad number {n}")))
            }
        }
        Some(Value::String(s)) => parse_rational(s),
        _ => Err(Error::Invalid("missing numerator".into())),
    }
}

/// Parses "p", "p/q" or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Ok(r) = s.parse::<Rational>() {
        return Ok(r);
    }
    if let Ok(f) = s.parse::<f64>() {
        if let Some((int, frac)) = s.split_once('.') {
            if !s.contains(['e', 'E']) {
                let digits = format!("{int}{frac}");
                if let Ok(n) = digits.parse::<Integer>() {
                    return Ok(Rational::from((n, Integer::from(Integer::u_pow_u(10, frac.len() as u32)))));
                }
            }
        }
        return Rational::from_f64(f).ok_or_else(|| Error::Invalid(format!("bad number {s}")));
    }
    Err(Error::Invalid(format!("cannot parse {s:?} as a rational")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn series(cs: &[i64]) -> FormalScalar {
        FormalScalar::series(cs.iter().map(|&c| Rational::from(c)).collect())
    }

    #[test]
    fn gaussian_potential_at_two() {
        let v = Potential::gaussian();
        assert_eq!(v.eval(&Scalar::Exact(q(2, 1))).unwrap(), Scalar::Exact(q(2, 1)));
        assert_eq!(v.eval(&Scalar::Exact(q(0, 1))).unwrap(), Scalar::Exact(q(0, 1)));
    }

    #[test]
    fn formal_quartic_at_one() {
        let v = Potential::formal_quartic(3);
        let got = v.eval(&Scalar::Exact(q(1, 1))).unwrap();
        let mut want = vec![Rational::new(); 4];
        want[0] = q(1, 2);
        want[1] = q(-1, 4);
        assert_eq!(got, Scalar::Formal(FormalScalar::series(want)));
    }

    #[test]
    fn ring_mismatch_is_reported() {
        let v = Potential::gaussian();
        assert!(matches!(
            v.eval(&Scalar::Float(1.0)),
            Err(Error::RingMismatch { .. })
        ));
        let f = Potential::float(vec![0.0, 1.0]).unwrap();
        assert!(f.eval(&Scalar::Exact(q(1, 1))).is_err());
    }

    #[test]
    fn degree_and_even() {
        let v = Potential::scaled_quartic(&q(-1, 2)).unwrap();
        assert_eq!(v.degree_vprime(), 3);
        assert!(v.is_even());
        assert_eq!(v.t(2), Scalar::Exact(q(-2, 1)));
        assert_eq!(v.t(4), Scalar::Exact(q(2, 1)));
        assert!(!Potential::from_terms(&[(1, q(1, 1)), (2, q(1, 1))]).unwrap().is_even());
    }

    #[test]
    fn json_round_trip() {
        let v = Potential::from_terms(&[(2, q(1, 1)), (3, q(-2, 7)), (4, q(1, 5))]).unwrap();
        let j = v.to_json().unwrap();
        assert_eq!(Potential::from_json(&j).unwrap(), v);
        let parsed = Potential::from_json(&serde_json::json!([
            {"k": 2, "numerator": 0.5, "denominator": 1},
            {"k": 4, "numerator": "3/2", "denominator": "2"}
        ]))
        .unwrap();
        assert_eq!(parsed.t(2), Scalar::Exact(q(1, 2)));
        assert_eq!(parsed.t(4), Scalar::Exact(q(3, 4)));
    }

    #[test]
    fn parse_decimal_is_exact() {
        assert_eq!(parse_rational("0.1").unwrap(), q(1, 10));
        assert_eq!(parse_rational("-3/4").unwrap(), q(-3, 4));
        assert_eq!(parse_rational("7").unwrap(), q(7, 1));
    }

    #[test]
    fn inverse_and_sqrt() {
        let a = series(&[1, 2, 3, 4, 5]);
        let one = &a * &a.inverse().unwrap();
        assert_eq!(one, series(&[1, 0, 0, 0, 0]));
        assert!(series(&[0, 1]).inverse().is_err());
        let sq = series(&[4, 1, 7, -3]);
        let r = sq.sqrt().unwrap();
        assert_eq!(&r * &r, sq);
        assert!(series(&[2, 1]).sqrt().is_err());
        assert!(series(&[-4, 1]).sqrt().is_err());
        assert_eq!(
            FormalScalar::from(q(9, 4)).sqrt().unwrap(),
            FormalScalar::from(q(3, 2))
        );
    }

    #[test]
    fn quartic_fixed_point() {
        // u = 1 + 3t u²
        let p = 6;
        let t = FormalScalar::coupling(p);
        let u = series_newton(
            |u| u - &(FormalScalar::one() + &t * &(u * u).scale(&q(3, 1))),
            &q(1, 1),
            p,
        )
        .unwrap();
        assert_eq!(u.to_coeffs(3), vec![q(1, 1), q(3, 1), q(18, 1), q(135, 1)]);
        // back-substitution
        let back = FormalScalar::one() + &t * &(&u * &u).scale(&q(3, 1));
        assert_eq!(back, u);
        // closed form (1 − √(1−12t))/(6t) = Σ Catalan(k) 3^k t^k
        let catalan = [1, 1, 2, 5, 14, 42, 132];
        for (k, c) in catalan.iter().enumerate() {
            assert_eq!(u.coeff(k), Rational::from(c * 3i64.pow(k as u32)));
        }
    }

    #[test]
    fn catalan_fixed_point() {
        // u = t + u²
        let t = FormalScalar::coupling(5);
        let u = series_newton(|u| u - &(&t + &(u * u)), &q(0, 1), 5).unwrap();
        assert_eq!(u.to_coeffs(5), vec![q(0, 1), q(1, 1), q(1, 1), q(2, 1), q(5, 1), q(14, 1)]);
        assert!((u.clone() - (&t + &(&u * &u))).is_zero());
    }

    #[test]
    fn identity_fixed_point() {
        let c = q(5, 3);
        let cc = FormalScalar::from(c.clone());
        let u = series_newton(|u| u - &cc, &c, 4).unwrap();
        assert_eq!(u, FormalScalar::from(c));
        assert_eq!(u.order(), Some(4));
    }

    #[test]
    fn newton_errors() {
        let t = FormalScalar::coupling(3);
        assert!(matches!(
            series_newton(|u| u * u - &t, &q(0, 1), 3),
            Err(Error::SingularDerivative)
        ));
        assert!(series_newton(|u| u - &t, &q(1, 1), 3).is_err());
    }

    #[test]
    fn display() {
        assert_eq!(series(&[1, 0, -2]).to_string(), "1 + -2*t^2 + O(t^3)");
    }
}
