//! Exact lattice algebra.
//!
//! Internally every lattice is stored through its Gram matrix `G` with
//! `Q(x) = ½ xᵀGx` and `B(x, y) = xᵀGy`, so that `Q(x + y) − Q(x) − Q(y) = B(x, y)`.
//! A matrix `L` given in [`Mode::PaperL`] describes `Q(x) = xᵀLx` and is ingested as `G = 2L`.

use std::collections::{BTreeSet, VecDeque};

use num::bigint::BigInt;
use num::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::rational::*;
use crate::{er, Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    PaperL,
    Gram,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::PaperL => "paper-L",
            Mode::Gram => "gram",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "paper-L" | "paper-l" | "L" => Ok(Mode::PaperL),
            "gram" => Ok(Mode::Gram),
            _ => Err(Error::Parse(format!("mode must be \"paper-L\" or \"gram\", got {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    pub pos: usize,
    pub neg: usize,
    pub zero: usize,
}

#[derive(Clone, Debug)]
pub struct Lattice {
    mode: Mode,
    matrix: RMat,
    gram: RMat,
    signature: Signature,
    det: Rat,
    nd_projector: RMat,
    radical: Vec<RVec>,
    gram_f: Vec<Vec<f64>>,
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.mode == other.mode && self.matrix == other.matrix
    }
}

impl Lattice {
    pub fn new(matrix: RMat, mode: Mode) -> Result<Self> {
        let n = matrix.len();
        if n == 0 {
            return Err(Error::Invalid("lattice of rank 0".into()));
        }
        if !is_symmetric(&matrix) {
            return Err(Error::Invalid("gram matrix is not symmetric".into()));
        }
        if mode == Mode::PaperL && matrix.iter().enumerate().any(|(i, r)| !r[i].is_integer()) {
            return Err(Error::Invalid("paper-L matrix must have integral diagonal".into()));
        }
        let gram: RMat = match mode {
            Mode::PaperL => matrix.iter().map(|r| r.iter().map(|x| x * rat(2)).collect()).collect(),
            Mode::Gram => matrix.clone(),
        };
        let (pos, neg, zero) = inertia(&gram);
        let radical = nullspace(&gram, n);
        let nd_projector = if radical.is_empty() {
            identity(n)
        } else {
            // π = I − K(KᵀK)⁻¹Kᵀ with K the radical basis as columns
            let k = transpose(&radical);
            let ktk = mat_mul(&radical, &k);
            let inv = inverse(&ktk).expect("radical basis is independent");
            let p = mat_mul(&mat_mul(&k, &inv), &radical);
            (0..n)
                .map(|i| (0..n).map(|j| identity(n)[i][j].clone() - &p[i][j]).collect())
                .collect()
        };
        let det = det(&matrix);
        let gram_f = mat_f64(&gram);
        Ok(Lattice {
            mode,
            matrix,
            gram,
            signature: Signature { pos, neg, zero },
            det,
            nd_projector,
            radical,
            gram_f,
        })
    }

    pub fn from_ints(m: &[Vec<i64>], mode: Mode) -> Result<Self> {
        Self::new(mat_from_ints(m), mode)
    }

    /// Parses an inline matrix such as `[[3,4],[4,3]]`; entries may be integers or "p/q" strings.
    pub fn parse_inline(s: &str, mode: Mode) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| Error::Parse(format!("matrix: {e}")))?;
        Self::new(parse_matrix(&v, "gram")?, mode)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let mode = v
            .get("mode")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse("lattice: missing field \"mode\"".into()))?;
        let gram = v.get("gram").ok_or_else(|| Error::Parse("lattice: missing field \"gram\"".into()))?;
        Self::new(parse_matrix(gram, "gram")?, Mode::parse(mode)?)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "mode": self.mode.as_str(),
            "gram": self.matrix.iter().map(|r| r.iter().map(fmt_rat).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }

    pub fn rank(&self) -> usize {
        self.gram.len()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// The matrix as supplied by the caller.
    pub fn matrix(&self) -> &RMat {
        &self.matrix
    }

    /// Gram matrix of the canonical convention Q(x) = ½xᵀGx.
    pub fn gram(&self) -> &RMat {
        &self.gram
    }

    pub fn gram_f64(&self) -> &[Vec<f64>] {
        &self.gram_f
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    /// Determinant of the matrix as supplied.
    pub fn det(&self) -> &Rat {
        &self.det
    }

    pub fn nd_projector(&self) -> &RMat {
        &self.nd_projector
    }

    pub fn radical(&self) -> &[RVec] {
        &self.radical
    }

    pub fn is_degenerate(&self) -> bool {
        self.signature.zero > 0
    }

    pub fn is_integral(&self) -> bool {
        self.gram.iter().flatten().all(|x| x.is_integer())
    }

    /// Q is integer valued on Zᴺ.
    pub fn is_even(&self) -> bool {
        self.is_integral()
            && self.gram.iter().enumerate().all(|(i, r)| (r[i].to_integer() % BigInt::from(2)).is_zero())
    }

    fn check_dim(&self, x: &[Rat]) -> Result<()> {
        if x.len() != self.rank() {
            return Err(Error::Dimension { expected: self.rank(), got: x.len() });
        }
        Ok(())
    }

    pub fn q(&self, x: &[Rat]) -> Rat {
        dot(x, &mat_vec(&self.gram, x)) / rat(2)
    }

    pub fn b(&self, x: &[Rat], y: &[Rat]) -> Rat {
        dot(x, &mat_vec(&self.gram, y))
    }

    /// Q(x) when `y` is absent, B(x, y) otherwise.
    pub fn evaluate_form(&self, x: &[Rat], y: Option<&[Rat]>) -> Result<Rat> {
        self.check_dim(x)?;
        match y {
            None => Ok(self.q(x)),
            Some(y) => {
                self.check_dim(y)?;
                Ok(self.b(x, y))
            }
        }
    }

    pub fn q_f(&self, x: &[f64]) -> f64 {
        0.5 * self.b_f(x, x)
    }

    pub fn b_f(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, row) in self.gram_f.iter().enumerate() {
            let mut t = 0.0;
            for (j, g) in row.iter().enumerate() {
                t += g * y[j];
            }
            s += x[i] * t;
        }
        s
    }

    /// B(x, z) for real x and complex z.
    pub fn b_fc(&self, x: &[f64], z: &[C64]) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (i, row) in self.gram_f.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                s += z[j] * (x[i] * g);
            }
        }
        s
    }

    /// Q(z) for complex z.
    pub fn q_c(&self, z: &[C64]) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (i, row) in self.gram_f.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                s += z[i] * z[j] * *g;
            }
        }
        s * 0.5
    }

    /// Moore–Penrose pseudo-inverse of G: kernel equal to the radical, G·G⁺ = π_nd.
    pub fn gram_pinv(&self) -> RMat {
        let n = self.rank();
        let prad: RMat = (0..n)
            .map(|i| (0..n).map(|j| identity(n)[i][j].clone() - &self.nd_projector[i][j]).collect())
            .collect();
        let m: RMat = (0..n).map(|i| (0..n).map(|j| &self.gram[i][j] + &prad[i][j]).collect()).collect();
        let inv = inverse(&m).expect("G + P_rad is invertible");
        (0..n).map(|i| (0..n).map(|j| &inv[i][j] - &prad[i][j]).collect()).collect()
    }

    pub fn analyze(&self) -> Analysis {
        Analysis {
            signature: self.signature.clone(),
            det: self.det.clone(),
            gram_det: det(&self.gram),
            nd_projector: self.nd_projector.clone(),
            radical: self.radical.clone(),
            integral: self.is_integral(),
            even: self.is_even(),
        }
    }

    pub fn discriminant_group(&self) -> Result<DiscGroup> {
        DiscGroup::new(self)
    }

    pub fn weil_representation(&self) -> Result<WeilRep> {
        WeilRep::new(self)
    }

    /// Direct sum of two lattices; both must be given in the same mode.
    pub fn direct_sum(&self, other: &Lattice) -> Result<Lattice> {
        if self.mode != other.mode {
            return Err(Error::Invalid("direct sum of lattices in different modes".into()));
        }
        let (n, m) = (self.rank(), other.rank());
        let mut a = vec![vec![Rat::zero(); n + m]; n + m];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = self.matrix[i][j].clone();
            }
        }
        for i in 0..m {
            for j in 0..m {
                a[n + i][n + j] = other.matrix[i][j].clone();
            }
        }
        Lattice::new(a, self.mode)
    }
}

pub fn parse_matrix(v: &Value, field: &str) -> Result<RMat> {
    let rows = v.as_array().ok_or_else(|| Error::Parse(format!("{field}: expected array of rows")))?;
    rows.iter().map(|r| parse_vector(r, field)).collect()
}

pub fn parse_vector(v: &Value, field: &str) -> Result<RVec> {
    let xs = v.as_array().ok_or_else(|| Error::Parse(format!("{field}: expected array")))?;
    xs.iter()
        .map(|x| match x {
            Value::String(s) => parse_rat(s).map_err(|_| Error::Parse(format!("{field}: bad rational {s:?}"))),
            Value::Number(n) => n
                .as_i64()
                .map(rat)
                .ok_or_else(|| Error::Parse(format!("{field}: non-integral number {n}; use \"p/q\""))),
            _ => Err(Error::Parse(format!("{field}: expected number or \"p/q\" string"))),
        })
        .collect()
}

pub fn vector_json(v: &[Rat]) -> Value {
    Value::Array(v.iter().map(|x| Value::String(fmt_rat(x))).collect())
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub signature: Signature,
    pub det: Rat,
    pub gram_det: Rat,
    pub nd_projector: RMat,
    pub radical: Vec<RVec>,
    pub integral: bool,
    pub even: bool,
}

impl Analysis {
    pub fn to_json(&self) -> Value {
        let s = &self.signature;
        json!({
            "signature": [s.pos, s.neg, s.zero],
            "det": fmt_rat(&self.det),
            "gram_det": fmt_rat(&self.gram_det),
            "nd_projector": self.nd_projector.iter().map(|r| vector_json(r)).collect::<Vec<_>>(),
            "radical": self.radical.iter().map(|r| vector_json(r)).collect::<Vec<_>>(),
            "integral": self.integral,
            "even": self.even,
        })
    }
}

// ---------------------------------------------------------------------------
// discriminant group

/// Coset of the dual lattice modulo Zᴺ, stored by its representative in [0,1)ᴺ.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DiscElement(pub RVec);

impl DiscElement {
    pub fn reduce(v: &[Rat]) -> Self {
        DiscElement(v.iter().map(frac).collect())
    }

    pub fn zero(n: usize) -> Self {
        DiscElement(vec![Rat::zero(); n])
    }

    pub fn neg(&self) -> Self {
        Self::reduce(&self.0.iter().map(|x| -x).collect::<Vec<_>>())
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::reduce(&self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect::<Vec<_>>())
    }

    pub fn to_json(&self) -> Value {
        vector_json(&self.0)
    }
}

#[derive(Clone, Debug)]
pub struct DiscGroup {
    pub elements: Vec<DiscElement>,
    /// Invariant factors > 1 of the Smith normal form of G.
    pub invariants: Vec<u64>,
}

impl DiscGroup {
    pub fn new(l: &Lattice) -> Result<Self> {
        if l.is_degenerate() {
            return Err(Error::Invalid("discriminant undefined for a degenerate lattice".into()));
        }
        if !l.is_integral() {
            return Err(Error::Invalid("discriminant group needs an integral Gram matrix".into()));
        }
        let n = l.rank();
        let g: Vec<Vec<i128>> = l
            .gram()
            .iter()
            .map(|r| r.iter().map(|x| x.to_integer().to_i128().expect("small gram entries")).collect())
            .collect();
        let invariants: Vec<u64> = smith_diagonal(g).into_iter().filter(|&d| d > 1).map(|d| d as u64).collect();
        let ginv = inverse(l.gram()).expect("non-degenerate");
        let gens: Vec<DiscElement> =
            (0..n).map(|j| DiscElement::reduce(&ginv.iter().map(|r| r[j].clone()).collect::<Vec<_>>())).collect();
        // closure under addition
        let zero = DiscElement::zero(n);
        let mut seen: BTreeSet<DiscElement> = BTreeSet::from([zero.clone()]);
        let mut queue = VecDeque::from([zero]);
        while let Some(x) = queue.pop_front() {
            for gen in &gens {
                let y = x.add(gen);
                if seen.insert(y.clone()) {
                    queue.push_back(y);
                }
            }
        }
        let order = det(l.gram()).abs();
        debug_assert_eq!(Rat::from_integer(BigInt::from(seen.len())), order);
        Ok(DiscGroup { elements: seen.into_iter().collect(), invariants })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn index_of(&self, x: &DiscElement) -> Option<usize> {
        self.elements.binary_search(x).ok()
    }
}

/// Diagonal of the Smith normal form of an integer matrix.
pub fn smith_diagonal(mut a: Vec<Vec<i128>>) -> Vec<i128> {
    let n = a.len();
    let m = a.first().map_or(0, |r| r.len());
    let mut diag = Vec::new();
    for t in 0..n.min(m) {
        // pivot: smallest nonzero absolute value in the remaining block
        loop {
            let Some((pi, pj)) = (t..n)
                .flat_map(|i| (t..m).map(move |j| (i, j)))
                .filter(|&(i, j)| a[i][j] != 0)
                .min_by_key(|&(i, j)| a[i][j].abs())
            else {
                diag.extend(std::iter::repeat(0).take(n.min(m) - t));
                return diag;
            };
            a.swap(t, pi);
            for r in a.iter_mut() {
                r.swap(t, pj);
            }
            let p = a[t][t];
            let mut clean = true;
            for i in t + 1..n {
                let f = a[i][t] / p;
                for j in t..m {
                    a[i][j] -= f * a[t][j];
                }
                clean &= a[i][t] == 0;
            }
            for j in t + 1..m {
                let f = a[t][j] / p;
                for i in t..n {
                    a[i][j] -= f * a[i][t];
                }
                clean &= a[t][j] == 0;
            }
            if !clean {
                continue;
            }
            // divisibility condition
            if let Some((i, _)) =
                (t + 1..n).flat_map(|i| (t + 1..m).map(move |j| (i, j))).find(|&(i, j)| a[i][j] % p != 0)
            {
                for j in t..m {
                    let v = a[i][j];
                    a[t][j] += v;
                }
                continue;
            }
            diag.push(p.abs());
            break;
        }
    }
    diag
}

// ---------------------------------------------------------------------------
// Weil representation

#[derive(Clone, Debug)]
pub struct WeilRep {
    pub group: DiscGroup,
    pub t: Vec<Vec<C64>>,
    pub s: Vec<Vec<C64>>,
    /// σ = e((b⁻ − b⁺)/8).
    pub sigma: C64,
}

impl WeilRep {
    pub fn new(l: &Lattice) -> Result<Self> {
        if !l.is_even() {
            return Err(Error::Invalid("Weil representation needs an even lattice".into()));
        }
        let group = l.discriminant_group()?;
        let sig = l.signature();
        let sigma = er((sig.neg as f64 - sig.pos as f64) / 8.0);
        let d = group.order();
        let norm = 1.0 / (d as f64).sqrt();
        let els = &group.elements;
        let mut t = vec![vec![C64::new(0.0, 0.0); d]; d];
        let mut s = vec![vec![C64::new(0.0, 0.0); d]; d];
        for (i, a) in els.iter().enumerate() {
            t[i][i] = er(to_f64(&frac(&l.q(&a.0))));
            for (j, b) in els.iter().enumerate() {
                s[j][i] = sigma * norm * er(-to_f64(&frac(&l.b(&a.0, &b.0))));
            }
        }
        Ok(WeilRep { group, t, s, sigma })
    }

    pub fn dim(&self) -> usize {
        self.group.order()
    }
}

pub fn cmat_mul(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let n = b[0].len();
    a.iter()
        .map(|row| (0..n).map(|j| row.iter().zip(b).map(|(x, br)| x * br[j]).sum()).collect())
        .collect()
}

pub fn cmat_vec(a: &[Vec<C64>], v: &[C64]) -> Vec<C64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn cmat_dist(a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// frames and compatible pairs

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VecClass {
    Positive,
    Negative,
    Isotropic,
}

pub fn classify(l: &Lattice, e: &[Rat]) -> VecClass {
    let q = l.q(e);
    if q.is_positive() {
        VecClass::Positive
    } else if q.is_negative() {
        VecClass::Negative
    } else {
        VecClass::Isotropic
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub vectors: Vec<RVec>,
}

impl Frame {
    pub fn new(vectors: Vec<RVec>) -> Self {
        Frame { vectors }
    }

    pub fn from_ints(v: &[Vec<i64>]) -> Self {
        Frame { vectors: v.iter().map(|x| from_ints(x)).collect() }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn classes(&self, l: &Lattice) -> Vec<VecClass> {
        self.vectors.iter().map(|e| classify(l, e)).collect()
    }

    pub fn is_independent(&self) -> bool {
        rank(&self.vectors) == self.vectors.len()
    }

    pub fn from_json(v: &Value, field: &str) -> Result<Self> {
        Ok(Frame { vectors: parse_matrix(v, field)? })
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.vectors.iter().map(|x| vector_json(x)).collect())
    }
}

/// Per-condition outcome of the compatible-pair validation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PairValidation {
    pub dimensions_ok: bool,
    pub lengths_match_negative_index: bool,
    pub independent: bool,
    pub no_positive_vectors: bool,
    pub spans_signature_11: Vec<bool>,
    pub spans_mutually_orthogonal: bool,
    pub frames_internally_orthogonal: bool,
    pub complements_positive: bool,
}

impl PairValidation {
    pub fn valid(&self) -> bool {
        self.dimensions_ok
            && self.lengths_match_negative_index
            && self.independent
            && self.no_positive_vectors
            && self.spans_signature_11.iter().all(|&b| b)
            && self.spans_mutually_orthogonal
            && self.frames_internally_orthogonal
            && self.complements_positive
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut chk = |ok: bool, s: &str| {
            if !ok {
                out.push(s.to_string())
            }
        };
        chk(self.dimensions_ok, "frame vectors have wrong dimension or frames differ in length");
        chk(self.lengths_match_negative_index, "frame length differs from the negative index");
        chk(self.independent, "frame vectors are linearly dependent");
        chk(self.no_positive_vectors, "positive frame vector");
        for (i, &b) in self.spans_signature_11.iter().enumerate() {
            chk(b, &format!("span(e_{i}, e'_{i}) is not of signature (1,1)"));
        }
        chk(self.spans_mutually_orthogonal, "paired spans are not mutually orthogonal");
        chk(self.frames_internally_orthogonal, "frame vectors are not mutually orthogonal");
        chk(self.complements_positive, "orthogonal complement of a frame is not positive");
        out
    }
}

#[derive(Clone, Debug)]
pub struct CompatiblePair {
    pub e: Frame,
    pub ep: Frame,
    pub validation: PairValidation,
}

fn complement_is_positive(l: &Lattice, f: &Frame) -> bool {
    let n = l.rank();
    let rows: Vec<RVec> = f.vectors.iter().map(|e| mat_vec(l.gram(), e)).collect();
    let w = if rows.is_empty() { identity(n) } else { nullspace(&rows, n) };
    if w.is_empty() {
        return true;
    }
    let gw: RMat = w.iter().map(|a| w.iter().map(|b| l.b(a, b)).collect()).collect();
    inertia(&gw).1 == 0
}

pub fn validate_compatible_pair(l: &Lattice, e: &Frame, ep: &Frame) -> CompatiblePair {
    let n = l.rank();
    let mut v = PairValidation {
        dimensions_ok: e.len() == ep.len() && e.vectors.iter().chain(&ep.vectors).all(|x| x.len() == n),
        ..Default::default()
    };
    if !v.dimensions_ok {
        return CompatiblePair { e: e.clone(), ep: ep.clone(), validation: v };
    }
    v.lengths_match_negative_index = e.len() == l.signature().neg;
    v.independent = e.is_independent() && ep.is_independent();
    v.no_positive_vectors = e.vectors.iter().chain(&ep.vectors).all(|x| classify(l, x) != VecClass::Positive);
    v.spans_signature_11 = e
        .vectors
        .iter()
        .zip(&ep.vectors)
        .map(|(a, b)| {
            let m = vec![vec![l.b(a, a), l.b(a, b)], vec![l.b(b, a), l.b(b, b)]];
            det(&m).is_negative()
        })
        .collect();
    let k = e.len();
    v.spans_mutually_orthogonal = (0..k).all(|i| {
        (0..k).filter(|&j| j != i).all(|j| {
            [&e.vectors[i], &ep.vectors[i]]
                .iter()
                .all(|a| [&e.vectors[j], &ep.vectors[j]].iter().all(|b| l.b(a, b).is_zero()))
        })
    });
    let internal = |f: &Frame| (0..f.len()).all(|i| (0..i).all(|j| l.b(&f.vectors[i], &f.vectors[j]).is_zero()));
    v.frames_internally_orthogonal = internal(e) && internal(ep);
    v.complements_positive = complement_is_positive(l, e) && complement_is_positive(l, ep);
    CompatiblePair { e: e.clone(), ep: ep.clone(), validation: v }
}

impl CompatiblePair {
    pub fn is_valid(&self) -> bool {
        self.validation.valid()
    }

    /// Replaces e′ᵢ by −e′ᵢ whenever B(eᵢ, e′ᵢ) > 0, so that both vectors of each pair lie in
    /// the closure of one component of the negative cone. Returns the flipped indices.
    pub fn oriented(&self, l: &Lattice) -> (CompatiblePair, Vec<usize>) {
        let mut out = self.clone();
        let mut flipped = Vec::new();
        for (i, (a, b)) in self.e.vectors.iter().zip(&self.ep.vectors).enumerate() {
            if l.b(a, b).is_positive() {
                out.ep.vectors[i] = b.iter().map(|x| -x).collect();
                flipped.push(i);
            }
        }
        (out, flipped)
    }
}

/// Swaps eᵢ ↔ e′ᵢ whenever eᵢ is isotropic and e′ᵢ negative; returns (Ẽ, Ẽ′, (−1)^{#swaps}).
pub fn normalize_frames(l: &Lattice, e: &Frame, ep: &Frame) -> Result<(Frame, Frame, i32)> {
    let p = validate_compatible_pair(l, e, ep);
    if !p.is_valid() {
        return Err(Error::Invalid(format!("invalid compatible pair: {}", p.validation.failures().join("; "))));
    }
    let (mut a, mut b, mut sign) = (e.clone(), ep.clone(), 1);
    for i in 0..a.len() {
        if classify(l, &a.vectors[i]) == VecClass::Isotropic && classify(l, &b.vectors[i]) == VecClass::Negative {
            std::mem::swap(&mut a.vectors[i], &mut b.vectors[i]);
            sign = -sign;
        }
    }
    Ok((a, b, sign))
}

/// Rational negative vector ẽ that may replace eᵢ (or e′ᵢ) in the pair.
///
/// Candidates are integer combinations of an integral basis of the orthogonal complement of
/// the other pairs, ordered by (denominator, euclidean norm, coordinates).
pub fn find_replacement_vector(l: &Lattice, e: &Frame, ep: &Frame, i: usize, height: i64) -> Result<RVec> {
    let p = validate_compatible_pair(l, e, ep);
    if !p.is_valid() {
        return Err(Error::Invalid(format!("invalid compatible pair: {}", p.validation.failures().join("; "))));
    }
    if i >= e.len() {
        return Err(Error::Invalid(format!("index {i} out of range")));
    }
    let n = l.rank();
    let rows: Vec<RVec> = (0..e.len())
        .filter(|&j| j != i)
        .flat_map(|j| [mat_vec(l.gram(), &e.vectors[j]), mat_vec(l.gram(), &ep.vectors[j])])
        .collect();
    let basis: Vec<Vec<BigInt>> =
        if rows.is_empty() { identity(n) } else { nullspace(&rows, n) }.iter().map(|b| primitive(b)).collect();
    let basis: Vec<RVec> = basis.iter().map(|b| b.iter().map(|x| Rat::from_integer(x.clone())).collect()).collect();
    let d = basis.len();
    let mut cands: Vec<(Rat, RVec)> = Vec::new();
    let mut coeff = vec![-height; d];
    loop {
        let x: RVec = (0..n)
            .map(|k| (0..d).fold(Rat::zero(), |acc, j| acc + rat(coeff[j]) * &basis[j][k]))
            .collect();
        if l.q(&x).is_negative() {
            cands.push((dot(&x, &x), x));
        }
        // odometer
        let mut j = 0;
        while j < d {
            coeff[j] += 1;
            if coeff[j] <= height {
                break;
            }
            coeff[j] = -height;
            j += 1;
        }
        if j == d {
            break;
        }
    }
    cands.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    for (_, x) in cands {
        if l.b(&x, &e.vectors[i]).is_zero() || l.b(&x, &ep.vectors[i]).is_zero() {
            continue;
        }
        let mut e2 = e.clone();
        e2.vectors[i] = x.clone();
        let mut ep2 = ep.clone();
        ep2.vectors[i] = x.clone();
        if validate_compatible_pair(l, &e2, ep).is_valid() && validate_compatible_pair(l, e, &ep2).is_valid() {
            return Ok(x);
        }
    }
    Err(Error::Invalid(format!("no replacement within bound {height}")))
}

/// Q(e)/|e|² and the euclidean norm |e| of a frame vector.
pub fn unit_data(l: &Lattice, e: &[Rat]) -> (f64, f64) {
    let norm2 = to_f64(&dot(e, e));
    (to_f64(&l.q(e)) / norm2, norm2.sqrt())
}

pub fn one() -> Rat {
    Rat::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smith_of_hyperbolic_and_a2() {
        assert_eq!(smith_diagonal(vec![vec![2, 1], vec![1, 2]]), vec![1, 3]);
        assert_eq!(smith_diagonal(vec![vec![6, 8], vec![8, 6]]), vec![2, 14]);
        assert_eq!(smith_diagonal(vec![vec![0, 1], vec![1, 0]]), vec![1, 1]);
    }

    #[test]
    fn nd_projector_of_degenerate() {
        let l = Lattice::from_ints(&[vec![1, 0], vec![0, 0]], Mode::PaperL).unwrap();
        assert_eq!(l.nd_projector(), &mat_from_ints(&[vec![1, 0], vec![0, 0]]));
        let l = Lattice::from_ints(&[vec![1, 1], vec![1, 1]], Mode::Gram).unwrap();
        let p = l.nd_projector();
        assert_eq!(mat_mul(p, p), *p);
        assert_eq!(mat_vec(p, &from_ints(&[1, -1])), from_ints(&[0, 0]));
        let gp = l.gram_pinv();
        assert_eq!(mat_mul(l.gram(), &gp), *p);
    }

    #[test]
    fn paper_l_diagonal_must_be_integral() {
        let m = vec![vec![ratio(1, 2), rat(0)], vec![rat(0), rat(1)]];
        assert!(Lattice::new(m.clone(), Mode::PaperL).is_err());
        assert!(Lattice::new(m, Mode::Gram).is_ok());
    }
}
