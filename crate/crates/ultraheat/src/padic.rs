//! Exact arithmetic and analytic primitives of `Q_p` and `Q_p^N`.
//!
//! A nonzero `x` in `Q_p` factors uniquely as `x = p^ord(x) * u` with `u` a
//! unit, and carries the norm `|x|_p = p^(-ord(x))`, `|0|_p = 0`. On vectors
//! the norm is the coordinate maximum. The fractional part `{x}_p` keeps the
//! digits of negative valuation, and `chi_p(y) = exp(2*pi*i*{y}_p)` is the
//! additive character that drives every Fourier sum in this crate.
//!
//! Everything here is exact: rationals stay rationals, phases stay rationals,
//! and floating point appears only when a [`UnitComplex`] is materialised as
//! a `Complex64`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// `ord(x)`: the exponent of `p` in `x`, with `ord(0) = +infinity`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Valuation {
    Finite(i64),
    /// The distinguished value reserved for zero.
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

/// p-adic valuation of a big integer; `None` for zero.
pub fn int_valuation(n: &BigInt, p: u32) -> Option<i64> {
    if n.is_zero() {
        return None;
    }
    let p_big = BigInt::from(p);
    let mut v = 0i64;
    let mut cur = n.abs();
    // Repeated squaring of the divisor keeps this O(log(v)^2) divisions.
    loop {
        let (q, r) = cur.div_rem(&p_big);
        if !r.is_zero() {
            return Some(v);
        }
        v += 1;
        cur = q;
        let mut pow = &p_big * &p_big;
        let mut step = 2i64;
        loop {
            let (q, r) = cur.div_rem(&pow);
            if !r.is_zero() {
                break;
            }
            cur = q;
            v += step;
            pow = &pow * &pow;
            step *= 2;
        }
    }
}

/// Valuation of an exact rational.
pub fn rational_valuation(x: &BigRational, p: u32) -> Valuation {
    if x.is_zero() {
        return Valuation::Infinite;
    }
    let vn = int_valuation(x.numer(), p).expect("nonzero numerator");
    let vd = int_valuation(x.denom(), p).expect("nonzero denominator");
    Valuation::Finite(vn - vd)
}

/// Returns `(ord(x), |x|_p)` with `|x|_p = p^(-ord(x))` and `(INF, 0)` for zero.
pub fn valuation_and_norm(x: &BigRational, p: u32) -> (Valuation, BigRational) {
    match rational_valuation(x, p) {
        Valuation::Infinite => (Valuation::Infinite, BigRational::zero()),
        Valuation::Finite(v) => (Valuation::Finite(v), pow_rational(p, -v)),
    }
}

/// `p^e` as an exact rational, for any sign of `e`.
pub fn pow_rational(p: u32, e: i64) -> BigRational {
    let base = BigInt::from(p);
    if e >= 0 {
        BigRational::from_integer(base.pow(e as u32))
    } else {
        BigRational::new(BigInt::one(), base.pow((-e) as u32))
    }
}

/// Haar volume `p^(gamma*N)` of the ball `B_gamma^N`, normalised so that
/// `vol(B_0^N) = 1`.
pub fn ball_volume(gamma: i64, dim: u32, p: u32) -> BigRational {
    pow_rational(p, gamma * dim as i64)
}

fn mod_inverse(a: &BigInt, modulus: &BigInt) -> BigInt {
    let e = a.extended_gcd(modulus);
    debug_assert!(e.gcd.is_one(), "inverse of non-unit");
    let mut inv = e.x % modulus;
    if inv.is_negative() {
        inv += modulus;
    }
    inv
}

/// The fractional part `{x}_p`: zero when `ord(x) >= 0`, otherwise the
/// rational `p^ord(x) * sum_{j < -ord(x)} x_j p^j` built from the canonical
/// digits. The result lies in `[0, 1)` and its denominator is exactly
/// `p^(-ord(x))`.
pub fn fractional_part(x: &BigRational, p: u32) -> BigRational {
    let v = match rational_valuation(x, p) {
        Valuation::Infinite => return BigRational::zero(),
        Valuation::Finite(v) => v,
    };
    if v >= 0 {
        return BigRational::zero();
    }
    let k = (-v) as u32;
    let pk = BigInt::from(p).pow(k);
    // x = p^v * a/b with a, b coprime to p; the first k digits of the unit
    // a/b are a * b^{-1} mod p^k.
    let p_big = BigInt::from(p);
    let mut a = x.numer().clone();
    let mut b = x.denom().clone();
    let va = int_valuation(&a, p).expect("nonzero");
    let vb = int_valuation(&b, p).expect("nonzero");
    a /= p_big.pow(va as u32);
    b /= p_big.pow(vb as u32);
    let mut r = (a * mod_inverse(&b, &pk)) % &pk;
    if r.is_negative() {
        r += &pk;
    }
    BigRational::new(r, pk)
}

/// A complex number of modulus one stored by its exact rational phase
/// `q` in `[0, 1)`, standing for `exp(2*pi*i*q)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitComplex {
    phase: BigRational,
}

impl UnitComplex {
    pub fn from_phase(q: BigRational) -> Self {
        UnitComplex {
            phase: normalize_phase(q),
        }
    }

    pub fn one() -> Self {
        UnitComplex {
            phase: BigRational::zero(),
        }
    }

    pub fn phase(&self) -> &BigRational {
        &self.phase
    }

    /// Materialise as a floating complex number.
    pub fn value(&self) -> Complex64 {
        let q = self.phase.to_f64().expect("phase in [0,1)");
        let (s, c) = (2.0 * std::f64::consts::PI * q).sin_cos();
        Complex64::new(c, s)
    }

    pub fn conj(&self) -> Self {
        UnitComplex::from_phase(-self.phase.clone())
    }

    /// Group law: phases add modulo one.
    pub fn mul(&self, other: &UnitComplex) -> Self {
        UnitComplex::from_phase(&self.phase + &other.phase)
    }
}

fn normalize_phase(q: BigRational) -> BigRational {
    let f = q.floor();
    q - f
}

/// The additive character `chi_p(y) = exp(2*pi*i*{y}_p)`.
pub fn character(y: &BigRational, p: u32) -> UnitComplex {
    UnitComplex::from_phase(fractional_part(y, p))
}

/// `chi_p(-xi . x)` with the exact rational dot product `xi . x = sum xi_j x_j`.
pub fn pairing(xi: &[BigRational], x: &[BigRational], p: u32) -> Result<UnitComplex> {
    if xi.len() != x.len() {
        return Err(Error::DimensionMismatch(xi.len(), x.len()));
    }
    let mut dot = BigRational::zero();
    for (a, b) in xi.iter().zip(x) {
        dot += a * b;
    }
    Ok(character(&(-dot), p))
}

/// An element of `Q_p` held at a fixed digit precision `K`: the valuation
/// plus the first `K` base-`p` digits of the unit part, leading digit
/// nonzero. Zero is the pair `(INF, [])`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PAdicScalar {
    prime: u32,
    valuation: Valuation,
    digits: Vec<u32>,
}

/// Digit budget that keeps every evaluation of a degree-`d` homogeneous
/// polynomial on an `(M, m)` lattice exact: `(M+m) + d*(M+m)` digits.
pub fn default_precision(support: i64, resolution: i64, degree: u32) -> usize {
    let span = (support + resolution).max(1) as usize;
    span + degree as usize * span
}

impl PAdicScalar {
    pub fn zero(prime: u32, _precision: usize) -> Self {
        PAdicScalar {
            prime,
            valuation: Valuation::Infinite,
            digits: Vec::new(),
        }
    }

    /// Truncate an exact rational to `precision` digits.
    pub fn from_rational(x: &BigRational, prime: u32, precision: usize) -> Self {
        let v = match rational_valuation(x, prime) {
            Valuation::Infinite => return Self::zero(prime, precision),
            Valuation::Finite(v) => v,
        };
        let p_big = BigInt::from(prime);
        let pk = p_big.pow(precision as u32);
        let mut a = x.numer().clone();
        let mut b = x.denom().clone();
        let va = int_valuation(&a, prime).expect("nonzero");
        let vb = int_valuation(&b, prime).expect("nonzero");
        a /= p_big.pow(va as u32);
        b /= p_big.pow(vb as u32);
        let mut r = (a * mod_inverse(&b, &pk)) % &pk;
        if r.is_negative() {
            r += &pk;
        }
        PAdicScalar {
            prime,
            valuation: Valuation::Finite(v),
            digits: digits_base_p(&r, prime, precision),
        }
    }

    pub fn from_integer(n: i64, prime: u32, precision: usize) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(n)), prime, precision)
    }

    pub fn prime(&self) -> u32 {
        self.prime
    }

    pub fn valuation(&self) -> Valuation {
        self.valuation
    }

    pub fn is_zero(&self) -> bool {
        self.valuation == Valuation::Infinite
    }

    /// Least-significant first; leading (first) digit nonzero unless zero.
    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn precision(&self) -> usize {
        self.digits.len()
    }

    /// `|x|_p = p^(-ord(x))` as an exact rational; 0 for zero.
    pub fn norm(&self) -> BigRational {
        match self.valuation {
            Valuation::Infinite => BigRational::zero(),
            Valuation::Finite(v) => pow_rational(self.prime, -v),
        }
    }

    /// The exact rational value of the stored truncated expansion.
    pub fn to_rational(&self) -> BigRational {
        match self.valuation {
            Valuation::Infinite => BigRational::zero(),
            Valuation::Finite(v) => {
                let mut unit = BigInt::zero();
                let p_big = BigInt::from(self.prime);
                for &d in self.digits.iter().rev() {
                    unit = unit * &p_big + BigInt::from(d);
                }
                pow_rational(self.prime, v) * BigRational::from_integer(unit)
            }
        }
    }

    /// Product at the shared precision: valuations add, units multiply
    /// modulo `p^K`.
    pub fn mul(&self, other: &PAdicScalar) -> PAdicScalar {
        assert_eq!(self.prime, other.prime, "mixed primes");
        let (va, vb) = match (self.valuation, other.valuation) {
            (Valuation::Finite(a), Valuation::Finite(b)) => (a, b),
            _ => return Self::zero(self.prime, self.precision().max(other.precision())),
        };
        let k = self.precision().min(other.precision()).max(1);
        let pk = BigInt::from(self.prime).pow(k as u32);
        let ua = unit_from_digits(&self.digits, self.prime);
        let ub = unit_from_digits(&other.digits, other.prime);
        let r = (ua * ub) % &pk;
        PAdicScalar {
            prime: self.prime,
            valuation: Valuation::Finite(va + vb),
            digits: digits_base_p(&r, self.prime, k),
        }
    }

    /// Sum at the shared precision. Cancellation that pushes the valuation
    /// beyond the digit window collapses to zero; that is the honest answer
    /// at precision `K`.
    pub fn add(&self, other: &PAdicScalar) -> PAdicScalar {
        assert_eq!(self.prime, other.prime, "mixed primes");
        let (va, vb) = match (self.valuation, other.valuation) {
            (Valuation::Finite(a), Valuation::Finite(b)) => (a, b),
            (Valuation::Infinite, _) => return other.clone(),
            (_, Valuation::Infinite) => return self.clone(),
        };
        let k = self.precision().min(other.precision()).max(1);
        let v = va.min(vb);
        let p_big = BigInt::from(self.prime);
        let pk = p_big.pow(k as u32);
        let ua = unit_from_digits(&self.digits, self.prime) * p_big.pow((va - v) as u32);
        let ub = unit_from_digits(&other.digits, other.prime) * p_big.pow((vb - v) as u32);
        let mut r = (ua + ub) % &pk;
        if r.is_zero() {
            return Self::zero(self.prime, k);
        }
        let shift = int_valuation(&r, self.prime).expect("nonzero") as u32;
        r /= p_big.pow(shift);
        PAdicScalar {
            prime: self.prime,
            valuation: Valuation::Finite(v + shift as i64),
            digits: digits_base_p(&r, self.prime, k - shift as usize),
        }
    }
}

fn unit_from_digits(digits: &[u32], p: u32) -> BigInt {
    let p_big = BigInt::from(p);
    let mut unit = BigInt::zero();
    for &d in digits.iter().rev() {
        unit = unit * &p_big + BigInt::from(d);
    }
    unit
}

fn digits_base_p(r: &BigInt, p: u32, k: usize) -> Vec<u32> {
    let p_big = BigInt::from(p);
    let mut digits = Vec::with_capacity(k);
    let mut cur = r.clone();
    for _ in 0..k {
        let (q, rem) = cur.div_rem(&p_big);
        digits.push(rem.to_u32().expect("digit < p"));
        cur = q;
    }
    digits
}

/// A vector in `Q_p^N` with the sup norm `||x||_p = max_i |x_i|_p` and
/// `ord(x) = min_i ord(x_i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PAdicVector {
    components: Vec<PAdicScalar>,
}

impl PAdicVector {
    pub fn new(components: Vec<PAdicScalar>) -> Self {
        if let Some(first) = components.first() {
            assert!(
                components.iter().all(|c| c.prime() == first.prime()),
                "mixed primes"
            );
        }
        PAdicVector { components }
    }

    pub fn from_rationals(xs: &[BigRational], prime: u32, precision: usize) -> Self {
        PAdicVector {
            components: xs
                .iter()
                .map(|x| PAdicScalar::from_rational(x, prime, precision))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[PAdicScalar] {
        &self.components
    }

    pub fn valuation(&self) -> Valuation {
        self.components
            .iter()
            .map(|c| c.valuation())
            .min()
            .unwrap_or(Valuation::Infinite)
    }

    pub fn norm(&self) -> BigRational {
        self.components
            .iter()
            .map(|c| c.norm())
            .max()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn to_rationals(&self) -> Vec<BigRational> {
        self.components.iter().map(|c| c.to_rational()).collect()
    }

    /// `chi_p(-xi . x)`.
    pub fn pairing(&self, x: &PAdicVector) -> Result<UnitComplex> {
        pairing(
            &self.to_rationals(),
            &x.to_rationals(),
            self.components
                .first()
                .map(|c| c.prime())
                .unwrap_or(x.components.first().map(|c| c.prime()).unwrap_or(2)),
        )
    }
}
