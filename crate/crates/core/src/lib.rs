//! Numerics for real-analytic Jacobi forms of lattice index.
//!
//! The crate is organised bottom-up: exact lattice algebra ([`lattice`]),
//! special functions ([`specfun`]), truncated q-series ([`qseries`]), the
//! Jacobi group ([`jacobigroup`]), indefinite theta series ([`theta`]),
//! the μ-function family ([`mu`]), covariant differential operators
//! ([`diffops`]) and the verification suites built on top of them ([`verify`]).

pub mod cyclotomic;
pub mod diffops;
pub mod enumerate;
pub mod jacobigroup;
pub mod lattice;
pub mod mu;
pub mod qseries;
pub mod rational;
pub mod specfun;
pub mod theta;
pub mod verify;

pub use num::complex::Complex64 as C64;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("{0}")]
    Domain(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
    #[error("beyond truncation: exponent {exponent} not below order {order}")]
    BeyondTruncation { exponent: String, order: String },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Working precision: f64 arithmetic with a target absolute error.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Precision {
    pub eps: f64,
}

impl Precision {
    pub const fn new(eps: f64) -> Self {
        Precision { eps }
    }

    /// Significant decimal digits carried by the working type.
    pub fn digits(&self) -> u32 {
        f64::DIGITS
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision { eps: 1e-13 }
    }
}

pub const TAU: f64 = std::f64::consts::TAU;
pub const PI: f64 = std::f64::consts::PI;

/// e(x) = exp(2πix) for complex x.
#[inline]
pub fn e(x: C64) -> C64 {
    (C64::new(0.0, TAU) * x).exp()
}

/// e(x) for real x.
#[inline]
pub fn er(x: f64) -> C64 {
    C64::from_polar(1.0, TAU * x)
}

/// A point (τ, z) of the Jacobi upper half plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub tau: C64,
    pub z: Vec<C64>,
}

impl Point {
    pub fn new(tau: C64, z: Vec<C64>) -> Result<Self> {
        if !(tau.im > 0.0) {
            return Err(Error::Domain(format!("Im tau must be positive, got {}", tau.im)));
        }
        Ok(Point { tau, z })
    }

    pub fn y(&self) -> f64 {
        self.tau.im
    }

    pub fn v(&self) -> Vec<f64> {
        self.z.iter().map(|z| z.im).collect()
    }
}

/// Compensated (Neumaier) complex accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct Acc {
    re: f64,
    im: f64,
    cre: f64,
    cim: f64,
}

impl Acc {
    #[inline]
    fn add1(s: &mut f64, c: &mut f64, x: f64) {
        let t = *s + x;
        if s.abs() >= x.abs() {
            *c += (*s - t) + x;
        } else {
            *c += (x - t) + *s;
        }
        *s = t;
    }

    #[inline]
    pub fn add(&mut self, z: C64) {
        Self::add1(&mut self.re, &mut self.cre, z.re);
        Self::add1(&mut self.im, &mut self.cim, z.im);
    }

    pub fn value(&self) -> C64 {
        C64::new(self.re + self.cre, self.im + self.cim)
    }
}
