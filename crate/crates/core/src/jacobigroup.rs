//! The Jacobi group SL₂(Z) ⋉ (Qᴺ × Qᴺ), its slash actions and torsion-point specialization.

use num::Zero;
use serde_json::{json, Value};

use crate::lattice::{parse_vector, vector_json, Lattice};
use crate::rational::{dot, to_f64, vec_f64, RVec, Rat};
use crate::{e, Error, Result, C64};

/// A function on H × Cᴺ that may fail at singular points.
pub type Evaluatable<'a> = dyn Fn(C64, &[C64]) -> Result<C64> + Sync + 'a;

/// (γ, λ, μ) with γ = [[a, b], [c, d]].
#[derive(Clone, Debug, PartialEq)]
pub struct JacobiElement {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
    pub lambda: RVec,
    pub mu: RVec,
}

impl JacobiElement {
    pub fn new(gamma: [[i64; 2]; 2], lambda: RVec, mu: RVec) -> Result<Self> {
        let [[a, b], [c, d]] = gamma;
        if a * d - b * c != 1 {
            return Err(Error::Invalid(format!("det of {gamma:?} is not 1")));
        }
        if lambda.len() != mu.len() {
            return Err(Error::Dimension { expected: lambda.len(), got: mu.len() });
        }
        Ok(JacobiElement { a, b, c, d, lambda, mu })
    }

    pub fn identity(n: usize) -> Self {
        Self::modular([[1, 0], [0, 1]], n)
    }

    pub fn modular(gamma: [[i64; 2]; 2], n: usize) -> Self {
        Self::new(gamma, vec![Rat::zero(); n], vec![Rat::zero(); n]).expect("det 1")
    }

    pub fn t(n: usize) -> Self {
        Self::modular([[1, 1], [0, 1]], n)
    }

    pub fn s(n: usize) -> Self {
        Self::modular([[0, -1], [1, 0]], n)
    }

    pub fn heisenberg(lambda: RVec, mu: RVec) -> Result<Self> {
        Self::new([[1, 0], [0, 1]], lambda, mu)
    }

    pub fn rank(&self) -> usize {
        self.lambda.len()
    }

    /// (γ, λ, μ)(γ′, λ′, μ′) = (γγ′, (λ, μ)γ′ + (λ′, μ′)).
    pub fn compose(&self, o: &Self) -> Result<Self> {
        if self.rank() != o.rank() {
            return Err(Error::Dimension { expected: self.rank(), got: o.rank() });
        }
        let r = |x: i64| Rat::from_integer(x.into());
        let lambda = (0..self.rank())
            .map(|i| &self.lambda[i] * r(o.a) + &self.mu[i] * r(o.c) + &o.lambda[i])
            .collect();
        let mu = (0..self.rank())
            .map(|i| &self.lambda[i] * r(o.b) + &self.mu[i] * r(o.d) + &o.mu[i])
            .collect();
        Self::new(
            [
                [self.a * o.a + self.b * o.c, self.a * o.b + self.b * o.d],
                [self.c * o.a + self.d * o.c, self.c * o.b + self.d * o.d],
            ],
            lambda,
            mu,
        )
    }

    pub fn inverse(&self) -> Self {
        // (γ, λ, μ)⁻¹ = (γ⁻¹, −(λ, μ)γ⁻¹)
        let (a, b, c, d) = (self.d, -self.b, -self.c, self.a);
        let r = |x: i64| Rat::from_integer(x.into());
        let lambda = (0..self.rank()).map(|i| -(&self.lambda[i] * r(a) + &self.mu[i] * r(c))).collect();
        let mu = (0..self.rank()).map(|i| -(&self.lambda[i] * r(b) + &self.mu[i] * r(d))).collect();
        JacobiElement { a, b, c, d, lambda, mu }
    }

    /// γτ and (z + λτ + μ)/(cτ + d).
    pub fn act(&self, tau: C64, z: &[C64]) -> (C64, Vec<C64>) {
        let j = tau * self.c as f64 + self.d as f64;
        let gt = (tau * self.a as f64 + self.b as f64) / j;
        let (l, m) = (vec_f64(&self.lambda), vec_f64(&self.mu));
        let gz = z.iter().enumerate().map(|(i, zi)| (zi + tau * l[i] + m[i]) / j).collect();
        (gt, gz)
    }

    pub fn to_json(&self) -> Value {
        json!({"gamma": [[self.a, self.b], [self.c, self.d]], "lambda": vector_json(&self.lambda), "mu": vector_json(&self.mu)})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let g = v
            .get("gamma")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("gamma: expected [[a,b],[c,d]]".into()))?;
        let ent = |i: usize, j: usize| -> Result<i64> {
            g.get(i)
                .and_then(|r| r.get(j))
                .and_then(Value::as_i64)
                .ok_or_else(|| Error::Parse("gamma: expected integer entries".into()))
        };
        let gamma = [[ent(0, 0)?, ent(0, 1)?], [ent(1, 0)?, ent(1, 1)?]];
        Self::new(gamma, parse_vector(v, "lambda")?, parse_vector(v, "mu")?)
    }
}

/// Holomorphic and antiholomorphic weights of the two-weight action.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlashWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl SlashWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let d = 2.0 * (alpha - beta);
        if (d - d.round()).abs() > 1e-12 {
            return Err(Error::Invalid(format!("alpha - beta = {} is not in Z/2", alpha - beta)));
        }
        Ok(SlashWeights { alpha, beta })
    }

    pub fn holomorphic(k: f64) -> Self {
        SlashWeights { alpha: k, beta: 0.0 }
    }

    /// Weights of the E-skew action: (k − #E/2, #E/2).
    pub fn skew(k: f64, frame_len: usize) -> Self {
        SlashWeights { alpha: k - frame_len as f64 / 2.0, beta: frame_len as f64 / 2.0 }
    }
}

/// Index-dependent cocycle e(−cQ(z+λτ+μ)/(cτ+d) + Q(λ)τ + B(λ,z) + B(λ,μ)).
fn index_factor(l: &Lattice, g: &JacobiElement, tau: C64, z: &[C64]) -> C64 {
    let lam = vec_f64(&g.lambda);
    let mu = vec_f64(&g.mu);
    let w: Vec<C64> = z.iter().enumerate().map(|(i, zi)| zi + tau * lam[i] + mu[i]).collect();
    let j = tau * g.c as f64 + g.d as f64;
    let b_lm = to_f64(&dot(&g.lambda, &crate::rational::mat_vec(l.gram(), &g.mu)));
    let arg = -(l.q_c(&w) * g.c as f64) / j + tau * l.q_f(&lam) + l.b_fc(&lam, z) + b_lm;
    e(arg)
}

fn check(l: &Lattice, g: &JacobiElement, tau: C64, z: &[C64]) -> Result<C64> {
    if z.len() != l.rank() || g.rank() != l.rank() {
        return Err(Error::Dimension { expected: l.rank(), got: z.len().min(g.rank()) });
    }
    if !(tau.im > 0.0) {
        return Err(Error::Domain("Im tau must be positive".into()));
    }
    Ok(tau * g.c as f64 + g.d as f64)
}

/// The full factor (cτ+d)^{−α}(cτ̄+d)^{−β}·(index cocycle) multiplying φ(g(τ, z)) in the slash.
pub fn automorphy_factor(w: SlashWeights, l: &Lattice, g: &JacobiElement, tau: C64, z: &[C64]) -> Result<C64> {
    let j = check(l, g, tau, z)?;
    let jb = tau.conj() * g.c as f64 + g.d as f64;
    Ok(j.powf(-w.alpha) * jb.powf(-w.beta) * index_factor(l, g, tau, z))
}

/// (φ|_{k,L} g)(τ, z).
pub fn apply_slash(phi: &Evaluatable, k: f64, l: &Lattice, g: &JacobiElement, tau: C64, z: &[C64]) -> Result<C64> {
    let j = check(l, g, tau, z)?;
    let (gt, gz) = g.act(tau, z);
    Ok(j.powf(-k) * index_factor(l, g, tau, z) * phi(gt, &gz)?)
}

/// (φ|_{α,β,L} g)(τ, z) with automorphy factor (cτ+d)^{−α}(cτ̄+d)^{−β}.
pub fn apply_two_weight_slash(
    phi: &Evaluatable,
    w: SlashWeights,
    l: &Lattice,
    g: &JacobiElement,
    tau: C64,
    z: &[C64],
) -> Result<C64> {
    let j = check(l, g, tau, z)?;
    let jb = tau.conj() * g.c as f64 + g.d as f64;
    let (gt, gz) = g.act(tau, z);
    Ok(j.powf(-w.alpha) * jb.powf(-w.beta) * index_factor(l, g, tau, z) * phi(gt, &gz)?)
}

/// Singular divisor {λ(z) ∈ Zτ + Z} given by the linear form z ↦ Σ wᵢzᵢ.
#[derive(Clone, Debug, PartialEq)]
pub struct Divisor {
    pub form: RVec,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TorsionPoint {
    pub alpha: RVec,
    pub beta: RVec,
}

impl TorsionPoint {
    pub fn new(alpha: RVec, beta: RVec) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::Dimension { expected: alpha.len(), got: beta.len() });
        }
        Ok(TorsionPoint { alpha, beta })
    }

    pub fn z(&self, tau: C64) -> Vec<C64> {
        vec_f64(&self.alpha).iter().zip(vec_f64(&self.beta)).map(|(a, b)| tau * *a + b).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({"alpha": vector_json(&self.alpha), "beta": vector_json(&self.beta)})
    }
}

/// τ ↦ φ(τ, ατ + β) together with the shift it was taken at.
pub struct Specialized<'a> {
    phi: &'a Evaluatable<'a>,
    pub point: TorsionPoint,
}

impl Specialized<'_> {
    pub fn eval(&self, tau: C64) -> Result<C64> {
        (self.phi)(tau, &self.point.z(tau))
    }
}

/// Restricts φ to the torsion path. Along z = ατ + β a divisor λ(z) ∈ Zτ + Z can only be met
/// identically (λ(α), λ(β) ∈ Z), since otherwise the solutions τ are real.
pub fn specialize_torsion<'a>(phi: &'a Evaluatable<'a>, t: &TorsionPoint, divisors: &[Divisor]) -> Result<Specialized<'a>> {
    for d in divisors {
        if d.form.len() != t.alpha.len() {
            return Err(Error::Dimension { expected: t.alpha.len(), got: d.form.len() });
        }
        if dot(&d.form, &t.alpha).is_integer() && dot(&d.form, &t.beta).is_integer() {
            return Err(Error::Pole(format!("torsion path lies on the divisor {}", d.label)));
        }
    }
    Ok(Specialized { phi, point: t.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{from_ints, ratio};

    #[test]
    fn group_law_and_inverse() {
        let g = JacobiElement::new([[2, 1], [1, 1]], vec![ratio(1, 2), ratio(1, 3)], vec![ratio(-1, 5), ratio(2, 1)]).unwrap();
        let h = JacobiElement::new([[1, -2], [0, 1]], from_ints(&[1, -1]), from_ints(&[0, 3])).unwrap();
        let gh = g.compose(&h).unwrap();
        assert_eq!(gh.a * gh.d - gh.b * gh.c, 1);
        assert_eq!(g.compose(&g.inverse()).unwrap(), JacobiElement::identity(2));
        let k = JacobiElement::s(2);
        assert_eq!(g.compose(&h).unwrap().compose(&k).unwrap(), g.compose(&h.compose(&k).unwrap()).unwrap());
    }

    #[test]
    fn torsion_divisor_collision() {
        let t = TorsionPoint::new(vec![ratio(1, 2)], vec![ratio(0, 1)]).unwrap();
        let phi = |_: C64, _: &[C64]| Ok(C64::new(1.0, 0.0));
        let d = Divisor { form: from_ints(&[2]), label: "2z".into() };
        assert!(specialize_torsion(&phi, &t, &[d]).is_err());
        let d = Divisor { form: from_ints(&[1]), label: "z".into() };
        assert!(specialize_torsion(&phi, &t, &[d]).is_ok());
    }
}
