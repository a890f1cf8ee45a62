//! Indefinite theta series θ_L^{E,E′} attached to a compatible pair of partial frames.
//!
//! The kernel ρ^e − ρ^{e′} is evaluated in log-magnitude form so that products with the
//! exponentially large factors e(Q(ν)τ) along negative directions never overflow.

use num::{Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::cyclotomic::{complex_json, Cyclotomic};
use crate::enumerate::{points_within, sum_lattice, Majorant, SeriesValue, Term};
use crate::jacobigroup::TorsionPoint;
use crate::lattice::{
    classify, find_replacement_vector, normalize_frames, validate_compatible_pair, CompatiblePair, DiscElement, Frame,
    Lattice, VecClass,
};
use crate::qseries::ExactSeries;
use crate::rational::{dot, lcm_denoms, mat_f64, mat_vec, rat, to_f64, vec_f64, RMat, RVec, Rat};
use crate::specfun::{sgn, SignedComplement};
use crate::{Error, Precision, Result, C64, TAU};

#[derive(Clone, Debug)]
struct KernelVec {
    /// G·e, so that B(e, x) = row·x.
    row: Vec<f64>,
    /// 1/√(−Q(e)) for negative e; None for isotropic e.
    scale: Option<f64>,
    /// B(e, Zᴺ) = g·Z.
    period: f64,
}

impl KernelVec {
    fn new(l: &Lattice, e: &RVec) -> Self {
        let row = mat_vec(l.gram(), e);
        let q = l.q(e);
        let scale = q.is_negative().then(|| 1.0 / (-to_f64(&q)).sqrt());
        KernelVec { row: vec_f64(&row), scale, period: to_f64(&rational_gcd(&row)) }
    }

    fn b(&self, x: &[f64]) -> f64 {
        self.row.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    fn rho(&self, x: &[f64], y: f64) -> SignedComplement {
        let t = self.b(x);
        match self.scale {
            None => SignedComplement::sgn(t),
            Some(s) => SignedComplement::e(t * (y.sqrt() * s)),
        }
    }
}

/// Positive generator of the group Σ rᵢZ.
fn rational_gcd(r: &[Rat]) -> Rat {
    use num::Integer;
    let d = lcm_denoms(r);
    let g = r
        .iter()
        .map(|x| (x * Rat::from_integer(d.clone())).to_integer())
        .fold(num::BigInt::zero(), |acc, x| acc.gcd(&x));
    Rat::new(g, d)
}

/// Lattice, validated compatible pair, component shift and evaluation precision.
#[derive(Clone, Debug)]
pub struct ThetaSpec {
    lattice: Lattice,
    pair: CompatiblePair,
    flipped: Vec<usize>,
    shift: RVec,
    pub prec: Precision,
    kernel: Vec<(KernelVec, KernelVec)>,
    majorant: Majorant,
    majorant_gram: RMat,
}

impl ThetaSpec {
    /// Validates (E, E′) and orients every pair into one component of the negative cone: when
    /// B(eᵢ, e′ᵢ) > 0 the series written literally diverges, and e′ᵢ is replaced by −e′ᵢ.
    pub fn new(lattice: &Lattice, e: &Frame, ep: &Frame, prec: Precision) -> Result<Self> {
        if lattice.is_degenerate() {
            return Err(Error::Invalid("indefinite theta series need a non-degenerate lattice".into()));
        }
        for (name, f) in [("E", e), ("E'", ep)] {
            if f.vectors.iter().any(|x| x.len() != lattice.rank()) {
                return Err(Error::Dimension { expected: lattice.rank(), got: f.vectors.iter().map(|x| x.len()).min().unwrap_or(0) });
            }
            if let Some(i) = f.vectors.iter().position(|x| classify(lattice, x) == VecClass::Positive) {
                return Err(Error::Invalid(format!("positive frame vector: {name}[{i}] has Q > 0")));
            }
        }
        let pair = validate_compatible_pair(lattice, e, ep);
        if !pair.is_valid() {
            return Err(Error::Invalid(format!("invalid compatible pair: {}", pair.validation.failures().join("; "))));
        }
        let (pair, flipped) = pair.oriented(lattice);
        let kernel = pair
            .e
            .vectors
            .iter()
            .zip(&pair.ep.vectors)
            .map(|(a, b)| (KernelVec::new(lattice, a), KernelVec::new(lattice, b)))
            .collect();
        // majorant G − Σ (Gnᵢ)(Gnᵢ)ᵀ/Q(nᵢ) with nᵢ a negative vector in the i-th pair plane
        let n = lattice.rank();
        let mut mg = lattice.gram().clone();
        for i in 0..pair.e.len() {
            let (a, b) = (&pair.e.vectors[i], &pair.ep.vectors[i]);
            let nv = if classify(lattice, a) == VecClass::Negative {
                a.clone()
            } else if classify(lattice, b) == VecClass::Negative {
                b.clone()
            } else {
                find_replacement_vector(lattice, &pair.e, &pair.ep, i, 4)?
            };
            let gn = mat_vec(lattice.gram(), &nv);
            let q = lattice.q(&nv);
            for r in 0..n {
                for c in 0..n {
                    mg[r][c] -= &gn[r] * &gn[c] / &q;
                }
            }
        }
        let p: Vec<Vec<f64>> = mat_f64(&mg).into_iter().map(|r| r.into_iter().map(|x| x / 2.0).collect()).collect();
        let majorant = Majorant::new(p).ok_or_else(|| Error::Invalid("majorant is not positive definite".into()))?;
        Ok(ThetaSpec { lattice: lattice.clone(), pair, flipped, shift: vec![Rat::zero(); n], prec, kernel, majorant, majorant_gram: mg })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn pair(&self) -> &CompatiblePair {
        &self.pair
    }

    /// Indices i where e′ᵢ was negated to orient the pair.
    pub fn flipped(&self) -> &[usize] {
        &self.flipped
    }

    pub fn shift(&self) -> &RVec {
        &self.shift
    }

    pub fn majorant_gram(&self) -> &RMat {
        &self.majorant_gram
    }

    /// The component θ|(0, λ) = Σ_{ν ∈ λ + Zᴺ}.
    pub fn with_shift(&self, lambda: &[Rat]) -> Result<Self> {
        if lambda.len() != self.lattice.rank() {
            return Err(Error::Dimension { expected: self.lattice.rank(), got: lambda.len() });
        }
        Ok(ThetaSpec { shift: lambda.to_vec(), ..self.clone() })
    }

    /// Π(ρ^{eᵢ} − ρ^{e′ᵢ}) at x = ν + v/y as (sign, ln|·|).
    fn kernel_log(&self, x: &[f64], y: f64) -> (f64, f64) {
        let mut s = 1.0;
        let mut l = 0.0;
        for (a, b) in &self.kernel {
            let (si, li) = SignedComplement::diff(a.rho(x, y), b.rho(x, y));
            if si == 0.0 {
                return (0.0, f64::NEG_INFINITY);
            }
            s *= si;
            l += li;
        }
        (s, l)
    }

    /// Π(ρ^{eᵢ} − ρ^{e′ᵢ})(x) with x = ν + v/y.
    pub fn kernel(&self, x: &[f64], y: f64) -> f64 {
        let (s, l) = self.kernel_log(x, y);
        s * l.exp()
    }

    /// Isotropic frame vectors e with B(e, shift + v/y) ∈ B(e, Zᴺ): sgn meets 0 on a whole line.
    fn domain_violation(&self, y: f64, v: &[f64]) -> Option<String> {
        let lam = vec_f64(&self.shift);
        let x: Vec<f64> = (0..v.len()).map(|i| lam[i] + v[i] / y).collect();
        for (i, (a, b)) in self.kernel.iter().enumerate() {
            for (name, k) in [("E", a), ("E'", b)] {
                if k.scale.is_none() {
                    let t = k.b(&x) / k.period;
                    if (t - t.round()).abs() < 1e-9 {
                        return Some(format!("B({name}[{i}], v/y) is integral"));
                    }
                }
            }
        }
        None
    }

    /// θ at (τ, z), summed over majorant shells until the tail bound is below ε/10.
    pub fn eval(&self, tau: C64, z: &[C64]) -> Result<SeriesValue> {
        self.eval_with(tau, z, None)
    }

    pub fn eval_with(&self, tau: C64, z: &[C64], fixed_radius: Option<f64>) -> Result<SeriesValue> {
        let n = self.lattice.rank();
        if z.len() != n {
            return Err(Error::Dimension { expected: n, got: z.len() });
        }
        if !(tau.im > 0.0) {
            return Err(Error::Domain("Im tau must be positive".into()));
        }
        let y = tau.im;
        let v: Vec<f64> = z.iter().map(|w| w.im).collect();
        if let Some(msg) = self.domain_violation(y, &v) {
            return Err(Error::Domain(format!("point outside D(E) ∩ D(E'): {msg}")));
        }
        let lam = vec_f64(&self.shift);
        let shift: Vec<f64> = (0..n).map(|i| lam[i] + v[i] / y).collect();
        let l = &self.lattice;
        Ok(sum_lattice(&self.majorant, &shift, self.prec.eps, fixed_radius, 0.0, |nu, x| {
            let (s, lk) = self.kernel_log(x, y);
            if s == 0.0 {
                return Term::new(C64::new(0.0, 0.0), 0.0);
            }
            let nuf: Vec<f64> = (0..n).map(|i| nu[i] as f64 + lam[i]).collect();
            let arg = C64::new(0.0, TAU) * (tau * l.q_f(&nuf) + l.b_fc(&nuf, z));
            Term::new(C64::from_polar((lk + arg.re).exp(), arg.im) * s, arg.norm())
        }))
    }

    /// Vector of components (θ|(0, λ))_{λ ∈ disc(L)} in the order of the discriminant group.
    pub fn components(&self, tau: C64, z: &[C64]) -> Result<Vec<(DiscElement, SeriesValue)>> {
        if !self.lattice.is_even() {
            return Err(Error::Invalid("vector-valued components need an even lattice".into()));
        }
        let group = self.lattice.discriminant_group()?;
        group
            .elements
            .iter()
            .map(|lam| Ok((lam.clone(), self.with_shift(&lam.0)?.eval(tau, z)?)))
            .collect()
    }

    /// Lower bound c with Q(x) ≥ c·M(x) on the support of the sgn-limit kernel (None when the
    /// support touches an isotropic ray).
    fn support_ratio(&self) -> Option<f64> {
        let l = &self.lattice;
        let m = |x: &RVec| to_f64(&dot(x, &mat_vec(&self.majorant_gram, x))) / 2.0;
        let mut c: f64 = 1.0;
        for (a, b) in self.pair.e.vectors.iter().zip(&self.pair.ep.vectors) {
            let bab = l.b(a, b);
            let r1: RVec = a.iter().zip(b).map(|(x, y)| &bab * x - l.q(a) * rat(2) * y).collect();
            let r2: RVec = a.iter().zip(b).map(|(x, y)| l.q(b) * rat(2) * x - &bab * y).collect();
            for r in [r1, r2] {
                let q = to_f64(&l.q(&r));
                if q <= 0.0 {
                    return None;
                }
                c = c.min(q / m(&r));
            }
        }
        Some(c)
    }

    /// Holomorphic part at the torsion point (α, β): every ρ^e replaced by its limit
    /// sgn(B(e, ν + α)), expanded as Σ e(B(ν+α, β)) q^{Q(ν+α)} below q^{order}.
    pub fn holomorphic_part_qexp(&self, t: &TorsionPoint, order: &Rat) -> Result<ExactSeries> {
        let l = &self.lattice;
        let n = l.rank();
        if t.alpha.len() != n {
            return Err(Error::Dimension { expected: n, got: t.alpha.len() });
        }
        let alpha: RVec = t.alpha.iter().zip(&self.shift).map(|(a, s)| a + s).collect();
        let beta = &t.beta;
        let ga = mat_vec(l.gram(), &alpha);
        let gb = mat_vec(l.gram(), beta);
        let qa = l.q(&alpha);
        let bab = dot(&alpha, &gb);
        // Q(ν) has denominators dividing those of G/2
        let half_gram = l.gram().iter().flatten().map(|x| x / rat(2)).collect::<Vec<_>>();
        let denom = lcm_denoms(half_gram.iter().chain(&ga).chain(std::iter::once(&qa)));
        let zeta = lcm_denoms(gb.iter().chain(std::iter::once(&bab)));
        let denom = denom.to_i64().ok_or_else(|| Error::Invalid("exponent denominator too large".into()))?;
        let zeta = zeta.to_u64().ok_or_else(|| Error::Invalid("root of unity order too large".into()))?;
        let dr = Rat::from_integer(denom.into());
        let ord_num = (order * &dr).ceil().to_integer().to_i64().ok_or_else(|| Error::Invalid("order too large".into()))?;
        let rows: Vec<(RVec, RVec)> = self
            .pair
            .e
            .vectors
            .iter()
            .zip(&self.pair.ep.vectors)
            .map(|(a, b)| (mat_vec(l.gram(), a), mat_vec(l.gram(), b)))
            .collect();
        let collect = |radius: f64| -> ExactSeries {
            let mut acc: std::collections::BTreeMap<i64, Vec<i64>> = Default::default();
            let af = vec_f64(&alpha);
            points_within(&self.majorant, &af, radius, |nu, _, _| {
                let x: RVec = (0..n).map(|i| rat(nu[i]) + &alpha[i]).collect();
                let mut w: i64 = 1;
                for (ra, rb) in &rows {
                    let d = sgn(to_f64(&dot(ra, &x))) - sgn(to_f64(&dot(rb, &x)));
                    w *= d as i64;
                    if w == 0 {
                        return;
                    }
                }
                let ex = l.q(&x) * &dr;
                debug_assert!(ex.is_integer());
                let ex = ex.to_integer().to_i64().expect("small exponent");
                if ex >= ord_num {
                    return;
                }
                let ph = (dot(&x, &gb) * Rat::from_integer(zeta.into())).to_integer();
                let k = ph.to_i64().expect("small phase").rem_euclid(zeta as i64) as usize;
                acc.entry(ex).or_insert_with(|| vec![0; zeta as usize])[k] += w;
            });
            let mut s = ExactSeries::new(denom, ord_num, 0).expect("positive denominator");
            for (ex, counts) in acc {
                s.add_term(ex, vec![], Cyclotomic::from_powers(zeta, &counts));
            }
            s
        };
        let ordf = to_f64(order).max(0.0);
        match self.support_ratio() {
            Some(c) => Ok(collect((ordf / c).sqrt() + 1.0)),
            None => {
                // isotropic boundary rays: grow the radius until the expansion stabilizes
                let mut r = (ordf + 1.0).sqrt() + 2.0;
                let mut prev = collect(r);
                for _ in 0..12 {
                    r *= 1.5;
                    let next = collect(r);
                    if next == prev {
                        return Ok(next);
                    }
                    prev = next;
                }
                Err(Error::Invalid("holomorphic part did not stabilize; torsion point may violate D(E)".into()))
            }
        }
    }
}

/// ρ^e(x) for a single frame vector at x = ν + v/y.
pub fn rho_factor(l: &Lattice, e: &[Rat], y: f64, v: &[f64], nu: &[f64]) -> Result<f64> {
    if e.len() != l.rank() || v.len() != l.rank() || nu.len() != l.rank() {
        return Err(Error::Dimension { expected: l.rank(), got: e.len() });
    }
    if classify(l, e) == VecClass::Positive {
        return Err(Error::Invalid("positive frame vector: rho^e is undefined".into()));
    }
    let k = KernelVec::new(l, &e.to_vec());
    let x: Vec<f64> = nu.iter().zip(v).map(|(a, b)| a + b / y).collect();
    Ok(k.rho(&x, y).value())
}

/// True iff B(e, v/y) ∉ Z for every isotropic e in the frame.
pub fn domain_check(l: &Lattice, e: &Frame, y: f64, v: &[f64]) -> bool {
    let x: Vec<f64> = v.iter().map(|w| w / y).collect();
    e.vectors.iter().filter(|a| classify(l, a) == VecClass::Isotropic).all(|a| {
        let t = l.b_f(&vec_f64(a), &x);
        (t - t.round()).abs() > 1e-12
    })
}

/// θ^{E,E′} = sign·θ^{Ẽ,Ẽ′} with Ẽ′ preferring isotropic vectors.
pub fn normalized_spec(l: &Lattice, e: &Frame, ep: &Frame, prec: Precision) -> Result<(ThetaSpec, i32)> {
    let (a, b, sign) = normalize_frames(l, e, ep)?;
    Ok((ThetaSpec::new(l, &a, &b, prec)?, sign))
}

pub fn value_json(sv: &SeriesValue) -> Value {
    json!({"value": complex_json(sv.value), "certificate": sv.cert.to_json()})
}
