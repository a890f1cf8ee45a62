//! Exact elements of cyclotomic fields Q(ζ_N), and the coefficient trait shared by exact
//! and floating-point q-series.

use std::fmt;

use num::integer::Integer;
use num::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::rational::{fmt_rat, parse_rat, rat, to_f64, Rat};
use crate::{er, Error, Result, C64};

/// Φ_N as integer coefficients, lowest degree first.
pub fn cyclotomic_poly(n: u64) -> Vec<i64> {
    assert!(n > 0);
    // x^n − 1 divided by Φ_d for all proper divisors d
    let mut p = vec![0i64; n as usize + 1];
    p[0] = -1;
    p[n as usize] = 1;
    for d in 1..n {
        if n % d == 0 {
            p = poly_div_exact(&p, &cyclotomic_poly(d));
        }
    }
    p
}

fn poly_div_exact(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = *b.last().unwrap();
    let mut q = vec![0i64; r.len() - db];
    for i in (0..q.len()).rev() {
        let c = r[i + db] / lead;
        q[i] = c;
        for (j, bj) in b.iter().enumerate() {
            r[i + j] -= c * bj;
        }
    }
    debug_assert!(r.iter().all(|&x| x == 0));
    q
}

/// x ∈ Q(ζ_N) as Σ cᵢ ζ_Nⁱ with i < φ(N), reduced modulo Φ_N.
#[derive(Clone, Debug)]
pub struct Cyclotomic {
    n: u64,
    c: Vec<Rat>,
}

impl Cyclotomic {
    pub fn from_rat(r: Rat) -> Self {
        Cyclotomic { n: 1, c: vec![r] }.normalized()
    }

    pub fn from_int(k: i64) -> Self {
        Self::from_rat(rat(k))
    }

    /// ζ_N^k.
    pub fn root(n: u64, k: i64) -> Self {
        let n = n.max(1);
        let k = k.rem_euclid(n as i64) as usize;
        let mut c = vec![Rat::zero(); n as usize];
        c[k] = Rat::one();
        Self::reduce(n, c)
    }

    /// Σ_k counts[k] ζ_N^k.
    pub fn from_powers(n: u64, counts: &[i64]) -> Self {
        Self::reduce(n, counts.iter().map(|&x| rat(x)).collect())
    }

    pub fn order(&self) -> u64 {
        self.n
    }

    pub fn basis(&self) -> &[Rat] {
        &self.c
    }

    fn reduce(n: u64, mut c: Vec<Rat>) -> Self {
        let phi = cyclotomic_poly(n);
        let deg = phi.len() - 1;
        // Φ_N is monic
        for i in (deg..c.len()).rev() {
            if c[i].is_zero() {
                continue;
            }
            let f = c[i].clone();
            for (j, pj) in phi.iter().enumerate() {
                let t = &f * rat(*pj);
                c[i - deg + j] -= t;
            }
        }
        c.truncate(deg);
        Cyclotomic { n, c }.normalized()
    }

    /// Drops to Q when only the constant coefficient survives.
    fn normalized(mut self) -> Self {
        while self.c.len() > 1 && self.c.last().is_some_and(|x| x.is_zero()) {
            self.c.pop();
        }
        if self.c.iter().skip(1).all(|x| x.is_zero()) {
            let r = self.c.first().cloned().unwrap_or_else(Rat::zero);
            return Cyclotomic { n: 1, c: vec![r] };
        }
        self
    }

    /// The same element written over Q(ζ_M) with N | M.
    fn lift(&self, m: u64) -> Vec<Rat> {
        let step = (m / self.n) as usize;
        let mut out = vec![Rat::zero(); m as usize];
        for (i, x) in self.c.iter().enumerate() {
            out[(i * step) % m as usize] += x;
        }
        out
    }

    fn common(&self, o: &Self) -> u64 {
        self.n.lcm(&o.n)
    }

    pub fn as_rat(&self) -> Option<&Rat> {
        (self.n == 1).then(|| &self.c[0])
    }

    pub fn to_c64(&self) -> C64 {
        self.c.iter().enumerate().map(|(i, x)| er(i as f64 / self.n as f64) * to_f64(x)).sum()
    }

    pub fn to_json(&self) -> Value {
        match self.as_rat() {
            Some(r) => Value::String(fmt_rat(r)),
            None => json!({"zeta_order": self.n, "basis": self.c.iter().map(fmt_rat).collect::<Vec<_>>()}),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => Ok(Self::from_rat(parse_rat(s)?)),
            Value::Number(n) => n
                .as_i64()
                .map(Self::from_int)
                .ok_or_else(|| Error::Parse(format!("coefficient {n} is not an integer"))),
            Value::Object(o) => {
                let n = o
                    .get("zeta_order")
                    .and_then(Value::as_u64)
                    .filter(|&n| n > 0)
                    .ok_or_else(|| Error::Parse("cyclotomic coefficient needs zeta_order".into()))?;
                let basis = o
                    .get("basis")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Parse("cyclotomic coefficient needs basis".into()))?;
                let c: Vec<Rat> = basis
                    .iter()
                    .map(|b| b.as_str().ok_or_else(|| Error::Parse("basis entries are strings".into())).and_then(parse_rat))
                    .collect::<Result<_>>()?;
                if c.len() as u64 > n {
                    return Err(Error::Parse("basis longer than zeta_order".into()));
                }
                Ok(Self::reduce(n, c))
            }
            _ => Err(Error::Parse(format!("invalid coefficient {v}"))),
        }
    }
}

impl PartialEq for Cyclotomic {
    fn eq(&self, o: &Self) -> bool {
        let m = self.common(o);
        Self::reduce(m, self.lift(m)).c == Self::reduce(m, o.lift(m)).c
    }
}

impl fmt::Display for Cyclotomic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = self.as_rat() {
            return write!(f, "{}", fmt_rat(r));
        }
        let mut first = true;
        for (i, x) in self.c.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            let sign = if x.is_negative() { "-" } else if first { "" } else { "+" };
            let a = x.abs();
            let coef = if a.is_one() && i > 0 { String::new() } else { fmt_rat(&a) };
            let mon = match i {
                0 => String::new(),
                1 => format!("z{}", self.n),
                _ => format!("z{}^{}", self.n, i),
            };
            let sep = if !coef.is_empty() && !mon.is_empty() { "*" } else { "" };
            write!(f, "{sign}{coef}{sep}{mon}")?;
            first = false;
        }
        Ok(())
    }
}

/// Coefficient ring of a q-series.
pub trait Coeff: Clone + fmt::Debug + PartialEq {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn to_c64(&self) -> C64;
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;
}

impl Coeff for Cyclotomic {
    fn zero() -> Self {
        Self::from_int(0)
    }
    fn one() -> Self {
        Self::from_int(1)
    }
    fn is_zero(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }
    fn add(&self, o: &Self) -> Self {
        let m = self.common(o);
        let (a, b) = (self.lift(m), o.lift(m));
        Self::reduce(m, a.into_iter().zip(b).map(|(x, y)| x + y).collect())
    }
    fn mul(&self, o: &Self) -> Self {
        let m = self.common(o);
        let (a, b) = (self.lift(m), o.lift(m));
        let mu = m as usize;
        let mut c = vec![Rat::zero(); mu];
        for (i, x) in a.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
            for (j, y) in b.iter().enumerate().filter(|(_, y)| !y.is_zero()) {
                c[(i + j) % mu] += x * y;
            }
        }
        Self::reduce(m, c)
    }
    fn neg(&self) -> Self {
        Cyclotomic { n: self.n, c: self.c.iter().map(|x| -x).collect() }
    }
    fn to_c64(&self) -> C64 {
        Cyclotomic::to_c64(self)
    }
    fn to_json(&self) -> Value {
        Cyclotomic::to_json(self)
    }
    fn from_json(v: &Value) -> Result<Self> {
        Cyclotomic::from_json(v)
    }
}

impl Coeff for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        *self == C64::new(0.0, 0.0)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn to_c64(&self) -> C64 {
        *self
    }
    fn to_json(&self) -> Value {
        complex_json(*self)
    }
    fn from_json(v: &Value) -> Result<Self> {
        complex_from_json(v)
    }
}

/// {"re": "...", "im": "..."} with shortest round-trip decimal strings.
pub fn complex_json(z: C64) -> Value {
    json!({"re": format!("{:?}", z.re), "im": format!("{:?}", z.im)})
}

pub fn complex_from_json(v: &Value) -> Result<C64> {
    let part = |k: &str| -> Result<f64> {
        match v.get(k) {
            Some(Value::String(s)) => s.parse().map_err(|_| Error::Parse(format!("{k}: not a number: {s:?}"))),
            Some(Value::Number(n)) => n.as_f64().ok_or_else(|| Error::Parse(format!("{k}: not a number"))),
            _ => Err(Error::Parse(format!("complex value needs field {k:?}"))),
        }
    };
    Ok(C64::new(part("re")?, part("im")?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclotomic_polynomials() {
        assert_eq!(cyclotomic_poly(1), vec![-1, 1]);
        assert_eq!(cyclotomic_poly(4), vec![1, 0, 1]);
        assert_eq!(cyclotomic_poly(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic_poly(12), vec![1, 0, -1, 0, 1]);
    }

    #[test]
    fn roots_multiply_and_reduce() {
        let z6 = Cyclotomic::root(6, 1);
        let mut p = Cyclotomic::one();
        for _ in 0..3 {
            p = p.mul(&z6);
        }
        assert_eq!(p, Cyclotomic::from_int(-1));
        // ζ₃ = ζ₆²  and 1 + ζ₃ + ζ₃² = 0
        assert_eq!(Cyclotomic::root(3, 1), Cyclotomic::root(6, 2));
        let s = Cyclotomic::one().add(&Cyclotomic::root(3, 1)).add(&Cyclotomic::root(3, 2));
        assert!(s.is_zero());
        assert!((Cyclotomic::root(6, 1).to_c64() - er(1.0 / 6.0)).norm() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let x = Cyclotomic::root(12, 5).add(&Cyclotomic::from_rat(crate::rational::ratio(3, 7)));
        assert_eq!(Cyclotomic::from_json(&x.to_json()).unwrap(), x);
        assert_eq!(Cyclotomic::from_int(-2).to_json(), Value::String("-2".into()));
    }
}
