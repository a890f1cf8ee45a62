//! Truncated q-series with rational exponents over a fixed denominator, optionally with
//! monomials ζ^r in N elliptic variables.

use std::collections::BTreeMap;

use num::integer::Integer;
use num::{BigInt, ToPrimitive};
use serde_json::{json, Map, Value};

use crate::cyclotomic::{Coeff, Cyclotomic};
use crate::enumerate::{Certificate, SeriesValue};
use crate::rational::{fmt_rat, parse_rat, Rat};
use crate::{e, Acc, Error, Result, C64};

/// (numerator of the q-exponent, ζ-exponent vector).
pub type Key = (i64, Vec<i64>);

#[derive(Clone, Debug, PartialEq)]
pub struct QSeries<C: Coeff> {
    denom: i64,
    /// Exclusive truncation order, in units of 1/denom.
    order: i64,
    nvars: usize,
    terms: BTreeMap<Key, C>,
}

pub type ExactSeries = QSeries<Cyclotomic>;
pub type FloatSeries = QSeries<C64>;

impl<C: Coeff> QSeries<C> {
    pub fn new(denom: i64, order: i64, nvars: usize) -> Result<Self> {
        if denom <= 0 {
            return Err(Error::Invalid(format!("series denominator must be positive, got {denom}")));
        }
        Ok(QSeries { denom, order, nvars, terms: BTreeMap::new() })
    }

    pub fn constant(c: C, order: i64) -> Self {
        let mut s = QSeries { denom: 1, order, nvars: 0, terms: BTreeMap::new() };
        s.add_term(0, vec![], c);
        s
    }

    pub fn denom(&self) -> i64 {
        self.denom
    }

    pub fn order(&self) -> i64 {
        self.order
    }

    /// Truncation order as a rational exponent.
    pub fn order_rat(&self) -> Rat {
        Rat::new(self.order.into(), self.denom.into())
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Key, &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds c·q^{n/denom}ζ^r; terms at or beyond the order are dropped.
    pub fn add_term(&mut self, n: i64, r: Vec<i64>, c: C) {
        assert_eq!(r.len(), self.nvars, "ζ-exponent length");
        if n >= self.order || c.is_zero() {
            return;
        }
        let key = (n, r);
        let v = match self.terms.remove(&key) {
            Some(old) => old.add(&c),
            None => c,
        };
        if !v.is_zero() {
            self.terms.insert(key, v);
        }
    }

    /// Lowest q-exponent numerator present (the order for the zero series).
    pub fn valuation(&self) -> i64 {
        self.terms.keys().map(|k| k.0).min().unwrap_or(self.order)
    }

    /// Same series written over a multiple of the denominator.
    pub fn with_denom(&self, d: i64) -> Result<Self> {
        if d <= 0 || d % self.denom != 0 {
            return Err(Error::Invalid(format!("{d} is not a multiple of {}", self.denom)));
        }
        let f = d / self.denom;
        Ok(QSeries {
            denom: d,
            order: self.order.saturating_mul(f),
            nvars: self.nvars,
            terms: self.terms.iter().map(|((n, r), c)| ((n * f, r.clone()), c.clone())).collect(),
        })
    }

    /// Divides out the common factor of denominator, exponents and order.
    pub fn reduced(&self) -> Self {
        let g = self.terms.keys().fold(self.denom.gcd(&self.order), |g, k| g.gcd(&k.0)).max(1);
        QSeries {
            denom: self.denom / g,
            order: self.order / g,
            nvars: self.nvars,
            terms: self.terms.iter().map(|((n, r), c)| ((n / g, r.clone()), c.clone())).collect(),
        }
    }

    fn aligned(&self, o: &Self) -> Result<(Self, Self)> {
        if self.nvars != o.nvars {
            return Err(Error::Invalid(format!(
                "variable mismatch: {} vs {} elliptic variables",
                self.nvars, o.nvars
            )));
        }
        let d = self.denom.lcm(&o.denom);
        Ok((self.with_denom(d)?, o.with_denom(d)?))
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        let (a, b) = self.aligned(o)?;
        let mut out = QSeries { denom: a.denom, order: a.order.min(b.order), nvars: a.nvars, terms: BTreeMap::new() };
        for ((n, r), c) in a.terms.into_iter().chain(b.terms) {
            out.add_term(n, r, c);
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        QSeries { terms: self.terms.iter().map(|(k, c)| (k.clone(), c.neg())).collect(), ..self.clone() }
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = QSeries { terms: BTreeMap::new(), ..self.clone() };
        for ((n, r), x) in &self.terms {
            out.add_term(*n, r.clone(), x.mul(c));
        }
        out
    }

    /// Multiplication; the product is known below min(ord_a + val_b, ord_b + val_a).
    pub fn mul(&self, o: &Self) -> Result<Self> {
        let (a, b) = self.aligned(o)?;
        let order = (a.order.saturating_add(b.valuation())).min(b.order.saturating_add(a.valuation()));
        let mut out = QSeries { denom: a.denom, order, nvars: a.nvars, terms: BTreeMap::new() };
        for ((n1, r1), c1) in &a.terms {
            for ((n2, r2), c2) in &b.terms {
                if n1 + n2 >= order {
                    continue;
                }
                let r: Vec<i64> = r1.iter().zip(r2).map(|(x, y)| x + y).collect();
                out.add_term(n1 + n2, r, c1.mul(c2));
            }
        }
        Ok(out)
    }

    /// Multiplication by q^{n/d}; the order moves with the series.
    pub fn shift(&self, exponent: &Rat) -> Result<Self> {
        let d = self.denom.lcm(&exponent.denom().to_i64().ok_or_else(|| Error::Invalid("huge denominator".into()))?);
        let s = self.with_denom(d)?;
        let k = (exponent * Rat::from_integer(BigInt::from(d))).to_integer().to_i64().expect("small exponent");
        Ok(QSeries {
            denom: d,
            order: s.order.saturating_add(k),
            nvars: s.nvars,
            terms: s.terms.into_iter().map(|((n, r), c)| ((n + k, r), c)).collect(),
        })
    }

    /// Coefficient of q^{exponent}ζ^{zexp}; absent terms are zero.
    pub fn extract(&self, exponent: &Rat, zexp: Option<&[i64]>) -> Result<C> {
        if exponent >= &self.order_rat() {
            return Err(Error::BeyondTruncation { exponent: fmt_rat(exponent), order: fmt_rat(&self.order_rat()) });
        }
        let r: Vec<i64> = zexp.map(|z| z.to_vec()).unwrap_or_else(|| vec![0; self.nvars]);
        if r.len() != self.nvars {
            return Err(Error::Dimension { expected: self.nvars, got: r.len() });
        }
        let scaled = exponent * Rat::from_integer(BigInt::from(self.denom));
        if !scaled.is_integer() {
            return Ok(C::zero());
        }
        let n = scaled.to_integer().to_i64().expect("small exponent");
        Ok(self.terms.get(&(n, r)).cloned().unwrap_or_else(C::zero))
    }

    /// Σ c·q^{n/d}ζ^r at (τ, z), with a tail estimate extrapolated from the last unit
    /// interval of retained exponents.
    pub fn eval(&self, tau: C64, z: Option<&[C64]>) -> Result<SeriesValue> {
        if !(tau.im > 0.0) {
            return Err(Error::Domain("Im tau must be positive".into()));
        }
        let zero = vec![C64::new(0.0, 0.0); self.nvars];
        let z = z.unwrap_or(&zero);
        if z.len() != self.nvars {
            return Err(Error::Dimension { expected: self.nvars, got: z.len() });
        }
        let mut acc = Acc::default();
        let mut abs_sum = 0.0;
        let mut last = 0.0;
        for ((n, r), c) in &self.terms {
            let mut arg = tau * (*n as f64 / self.denom as f64);
            for (ri, zi) in r.iter().zip(z) {
                arg += zi * *ri as f64;
            }
            let t = c.to_c64() * e(arg);
            acc.add(t);
            abs_sum += t.norm();
            if *n >= self.order - self.denom {
                last += t.norm();
            }
        }
        let aq = (-crate::TAU * tau.im).exp();
        let tail = if self.order == i64::MAX { 0.0 } else { last * aq / (1.0 - aq) };
        Ok(SeriesValue {
            value: acc.value(),
            cert: Certificate {
                radius: self.order as f64 / self.denom as f64,
                tail,
                roundoff: 4.0 * f64::EPSILON * abs_sum,
                shells: self.terms.len(),
            },
        })
    }

    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> QSeries<D> {
        let mut out = QSeries { denom: self.denom, order: self.order, nvars: self.nvars, terms: BTreeMap::new() };
        for ((n, r), c) in &self.terms {
            out.add_term(*n, r.clone(), f(c));
        }
        out
    }

    pub fn to_float(&self) -> FloatSeries {
        self.map(|c| c.to_c64())
    }

    pub fn to_json(&self) -> Value {
        let mut terms = Map::new();
        for ((n, r), c) in &self.terms {
            let key = if r.is_empty() {
                n.to_string()
            } else {
                format!("{n};{}", r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
            };
            terms.insert(key, c.to_json());
        }
        let mut v = json!({"denom": self.denom, "terms": terms, "order": self.order});
        if self.nvars > 0 {
            v["nvars"] = json!(self.nvars);
        }
        v
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let field = |k: &str| v.get(k).ok_or_else(|| Error::Parse(format!("series JSON lacks field {k:?}")));
        let denom = field("denom")?.as_i64().ok_or_else(|| Error::Parse("denom: expected integer".into()))?;
        let order = field("order")?.as_i64().ok_or_else(|| Error::Parse("order: expected integer".into()))?;
        let nvars = v.get("nvars").and_then(Value::as_u64).unwrap_or(0) as usize;
        let mut s = Self::new(denom, order, nvars)?;
        let terms = field("terms")?.as_object().ok_or_else(|| Error::Parse("terms: expected object".into()))?;
        for (k, c) in terms {
            let bad = || Error::Parse(format!("terms: bad key {k:?}"));
            let (n, r) = match k.split_once(';') {
                Some((n, r)) => (
                    n.trim().parse::<i64>().map_err(|_| bad())?,
                    r.split(',').map(|x| x.trim().parse::<i64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?,
                ),
                None => (k.trim().parse::<i64>().map_err(|_| bad())?, vec![]),
            };
            if r.len() != nvars {
                return Err(bad());
            }
            if n >= order {
                return Err(Error::Parse(format!("terms: key {k:?} beyond order {order}")));
            }
            s.add_term(n, r, C::from_json(c)?);
        }
        Ok(s)
    }
}

/// Parses an exponent given as "p/q".
pub fn parse_exponent(s: &str) -> Result<Rat> {
    parse_rat(s)
}

/// q^{1/24}∏_{n≥1}(1 − qⁿ) to exclusive order `order/24`.
pub fn eta_series<C: Coeff>(order: i64) -> QSeries<C> {
    // Euler's pentagonal theorem: Σ (−1)^k q^{k(3k−1)/2}
    let mut s = QSeries::new(24, order, 0).expect("positive denominator");
    let mut k: i64 = 0;
    loop {
        let mut any = false;
        for kk in if k == 0 { vec![0] } else { vec![k, -k] } {
            let p = kk * (3 * kk - 1) / 2;
            let n = 24 * p + 1;
            if n < order {
                any = true;
                let c = if kk.rem_euclid(2) == 0 { C::one() } else { C::one().neg() };
                s.add_term(n, vec![], c);
            }
        }
        if !any {
            break;
        }
        k += 1;
    }
    s
}

/// ∏_{n=1}^{m}(1 − qⁿ) by repeated multiplication (independent of the pentagonal formula).
pub fn euler_product<C: Coeff>(m: i64, order: i64) -> QSeries<C> {
    let mut p = QSeries::constant(C::one(), order);
    for n in 1..=m {
        let mut f = QSeries::constant(C::one(), order);
        f.add_term(n, vec![], C::one().neg());
        p = p.mul(&f).expect("same variables");
        p.order = order;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(n: i64) -> Cyclotomic {
        Cyclotomic::from_int(n)
    }

    #[test]
    fn geometric_series_inverts_one_minus_q() {
        let mut a = ExactSeries::new(1, 20, 0).unwrap();
        a.add_term(0, vec![], ex(1));
        a.add_term(1, vec![], ex(-1));
        let mut b = ExactSeries::new(1, 20, 0).unwrap();
        for n in 0..20 {
            b.add_term(n, vec![], ex(1));
        }
        let p = a.mul(&b).unwrap();
        assert_eq!(p.order(), 20);
        assert_eq!(p.len(), 1);
        assert_eq!(p.extract(&crate::rational::rat(0), None).unwrap(), ex(1));
    }

    #[test]
    fn pentagonal_matches_product() {
        let a: ExactSeries = eta_series(24 * 11);
        let b: ExactSeries = euler_product(20, 11).shift(&crate::rational::ratio(1, 24)).unwrap();
        let b = QSeries { order: a.order, ..b.with_denom(24).unwrap() };
        assert_eq!(a, b);
    }

    #[test]
    fn beyond_truncation_is_an_error() {
        let a: ExactSeries = eta_series(24 * 3);
        assert!(matches!(a.extract(&crate::rational::rat(3), None), Err(Error::BeyondTruncation { .. })));
        assert_eq!(a.extract(&crate::rational::ratio(5, 24), None).unwrap(), ex(0));
        assert_eq!(a.extract(&crate::rational::ratio(25, 24), None).unwrap(), ex(-1));
    }
}
