//! Exact scalars.
//!
//! [`ExactScalar`] is an element of the fraction field of the ring
//! `Q(sqrt k_1, ..., sqrt k_m)[c_i, s_i] / (c_i^2 + s_i^2 - 1)`. Each `(c_i, s_i)`
//! pair stands for the cosine and sine of one angle whose numeric value is only
//! known to interval arithmetic (see [`eval`]). The zero test is exact: a
//! fraction is zero iff its numerator is the zero polynomial.
//!
//! Denominators are normalized so that they contain no radicals and no sine
//! symbols, have leading coefficient one, and share no power of any `c_i` with
//! the numerator. Constant denominators are folded into the numerator.

pub mod eval;
pub mod expr;
pub mod interval;
pub mod ring;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub use eval::{
    certify_sign, eval_interval, Bindings, Evaluator, PairDef, PrecisionConfig, Sign, SymbolEnv,
};
pub use expr::{parse_scalar, ExprError};
pub use interval::Interval;
use ring::{square_free_split, Monomial, Poly};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("zero divisor")]
    ZeroDivisor,
    #[error("no exact square root for {0}")]
    NoSquareRoot(String),
    #[error("missing binding for symbol {0}")]
    MissingBinding(String),
    #[error("undecided sign after {bits} bits")]
    UndecidedSign { bits: u32 },
    #[error("symbol pair {pair}: {reason}")]
    BadPair { pair: u32, reason: String },
    #[error("invalid precision configuration: {0}")]
    BadPrecision(String),
}

/// Element of the fraction field of the scalar ring. Denominators are kept
/// free of radicals and sines; equality is semantic (cross-multiplication),
/// since fractions over several symbol pairs are not fully reduced.
#[derive(Clone, Debug)]
pub struct ExactScalar {
    num: Poly,
    den: Poly,
}

impl Default for ExactScalar {
    fn default() -> Self {
        ExactScalar::zero()
    }
}

impl ExactScalar {
    pub fn zero() -> Self {
        ExactScalar {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Self {
        ExactScalar::int(1)
    }

    pub fn int(n: i64) -> Self {
        ExactScalar::rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        ExactScalar::rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn rational(q: BigRational) -> Self {
        ExactScalar {
            num: Poly::from_rational(q),
            den: Poly::one(),
        }
    }

    /// `sqrt(k)` for a non-negative integer `k`, reduced to `m*sqrt(r)`.
    pub fn sqrt_int(k: u64) -> Self {
        if k == 0 {
            return ExactScalar::zero();
        }
        let (m, r) = square_free_split(k);
        ExactScalar {
            num: Poly::from_term(
                Monomial::sqrt(r),
                BigRational::from_integer(BigInt::from(m)),
            ),
            den: Poly::one(),
        }
    }

    /// `c_pair`.
    pub fn cos_sym(pair: u32) -> Self {
        ExactScalar::from_poly(Poly::from_term(Monomial::symbol(pair, 1, 0), BigRational::one()))
    }

    /// `s_pair`.
    pub fn sin_sym(pair: u32) -> Self {
        ExactScalar::from_poly(Poly::from_term(Monomial::symbol(pair, 0, 1), BigRational::one()))
    }

    pub(crate) fn from_poly(num: Poly) -> Self {
        ExactScalar {
            num,
            den: Poly::one(),
        }
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    /// Rational value if the scalar has no radicals and no symbols.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.den.is_one() {
            self.num.as_rational()
        } else {
            None
        }
    }

    /// True when no trigonometric symbol occurs.
    pub fn is_symbol_free(&self) -> bool {
        self.num.is_symbol_free() && self.den.is_symbol_free()
    }

    pub fn radicals(&self) -> Vec<u64> {
        let mut r = self.num.radicals();
        r.extend(self.den.radicals());
        r.sort_unstable();
        r.dedup();
        r
    }

    pub fn pairs(&self) -> Vec<u32> {
        let mut p = self.num.pairs();
        p.extend(self.den.pairs());
        p.sort_unstable();
        p.dedup();
        p
    }

    pub fn checked_div(&self, other: &ExactScalar) -> Result<ExactScalar, ScalarError> {
        if other.is_zero() {
            return Err(ScalarError::ZeroDivisor);
        }
        normalize(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    pub fn recip(&self) -> Result<ExactScalar, ScalarError> {
        ExactScalar::one().checked_div(self)
    }

    pub fn square(&self) -> ExactScalar {
        self * self
    }

    pub fn pow(&self, n: u32) -> ExactScalar {
        let mut acc = ExactScalar::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Exact square root of a non-negative rational scalar, as `m*sqrt(r)/d`.
    pub fn sqrt_rational(&self) -> Result<ExactScalar, ScalarError> {
        let q = self
            .as_rational()
            .ok_or_else(|| ScalarError::NoSquareRoot(self.to_string()))?;
        if q.is_negative() {
            return Err(ScalarError::NoSquareRoot(self.to_string()));
        }
        if q.is_zero() {
            return Ok(ExactScalar::zero());
        }
        // sqrt(a/b) = sqrt(a*b)/b
        let ab = q.numer() * q.denom();
        let ab: u64 = ab
            .try_into()
            .map_err(|_| ScalarError::NoSquareRoot(self.to_string()))?;
        let root = ExactScalar::sqrt_int(ab);
        Ok(&root * &ExactScalar::rational(BigRational::from_integer(q.denom().clone()).recip()))
    }

    /// Rational multiple of `self`.
    pub fn scale(&self, k: &BigRational) -> ExactScalar {
        if k.is_zero() {
            return ExactScalar::zero();
        }
        ExactScalar {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }
}

/// Brings `num/den` into the canonical shape described in the module docs.
fn normalize(mut num: Poly, mut den: Poly) -> Result<ExactScalar, ScalarError> {
    if den.is_zero() {
        return Err(ScalarError::ZeroDivisor);
    }
    if num.is_zero() {
        return Ok(ExactScalar::zero());
    }
    if den.is_one() {
        return Ok(ExactScalar { num, den });
    }
    for p in den.radical_primes() {
        let conj = den.conj_radical(p);
        num = num.mul(&conj);
        den = den.mul(&conj);
    }
    for pair in den.sine_pairs() {
        let conj = den.conj_sine(pair);
        num = num.mul(&conj);
        den = den.mul(&conj);
    }
    debug_assert!(den.radicals().is_empty() && den.sine_pairs().is_empty());
    for pair in den.pairs() {
        let k = den.min_c_exp(pair).min(num.min_c_exp(pair));
        if k > 0 {
            den = den.shift_down_c(pair, k);
            num = num.shift_down_c(pair, k);
        }
    }
    if let [pair] = den.pairs()[..] {
        (num, den) = cancel_univariate(pair, num, den);
    }
    let lead = den
        .leading()
        .map(|(_, q)| q.clone())
        .expect("nonzero denominator has a leading term");
    let inv = lead.recip();
    num = num.scale(&inv);
    den = den.scale(&inv);
    if let Some(q) = den.as_rational() {
        // leading coefficient is one, so a constant denominator is exactly 1
        debug_assert!(q.is_one());
    }
    Ok(ExactScalar { num, den })
}

/// Cancels the common factor of `num` and a denominator that only involves
/// `c_pair`, computed as a gcd over `Q[c_pair]`.
fn cancel_univariate(pair: u32, num: Poly, den: Poly) -> (Poly, Poly) {
    let den_parts = den.split_in_c(pair);
    let Some(d) = den_parts.get(&Monomial::one()).filter(|_| den_parts.len() == 1) else {
        return (num, den);
    };
    let num_parts = num.split_in_c(pair);
    let mut g = d.clone();
    for coeffs in num_parts.values() {
        g = upoly_gcd(&g, coeffs);
        if g.len() <= 1 {
            return (num, den);
        }
    }
    let num_parts = num_parts
        .into_iter()
        .map(|(m, c)| (m, upoly_divexact(&c, &g)))
        .collect();
    let den_parts = [(Monomial::one(), upoly_divexact(d, &g))].into_iter().collect();
    (Poly::join_in_c(pair, &num_parts), Poly::join_in_c(pair, &den_parts))
}

fn upoly_trim(mut p: Vec<BigRational>) -> Vec<BigRational> {
    while p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

/// Quotient and remainder over `Q`; `b` must be trimmed and nonzero.
fn upoly_divrem(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut r = upoly_trim(a.to_vec());
    let db = b.len() - 1;
    let lead = b[db].clone();
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let mut q = vec![BigRational::zero(); r.len() - db];
    while r.len() >= b.len() {
        let shift = r.len() - b.len();
        let f = r.last().expect("nonempty remainder") / &lead;
        for (i, bi) in b.iter().enumerate() {
            r[shift + i] -= &f * bi;
        }
        q[shift] = f;
        r.pop();
        r = upoly_trim(r);
    }
    (q, r)
}

/// Monic gcd; the zero polynomial is the empty vector.
fn upoly_gcd(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let a = upoly_trim(a.to_vec());
    let b = upoly_trim(b.to_vec());
    if a.len() > 1 && b.len() > 1 && coprime_mod_p(&a, &b) {
        return vec![BigRational::one()];
    }
    // primitive remainder sequence over Z: no rational normalization per step
    let (mut a, mut b) = (primitive(&a), primitive(&b));
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    while !b.is_empty() {
        let r = primitive_rem(&a, &b);
        a = b;
        b = r;
    }
    upoly_monic(a.into_iter().map(BigRational::from_integer).collect())
}

/// Integer multiple of `a` with coprime coefficients.
fn primitive(a: &[BigRational]) -> Vec<BigInt> {
    let den = a.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
    content_free(a.iter().map(|x| x.numer() * (&den / x.denom())).collect())
}

fn content_free(mut a: Vec<BigInt>) -> Vec<BigInt> {
    while a.last().is_some_and(Zero::is_zero) {
        a.pop();
    }
    let g = a.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if !g.is_zero() && !g.is_one() {
        for x in &mut a {
            *x /= &g;
        }
    }
    a
}

/// Primitive part of the pseudo-remainder of `a` by `b`.
fn primitive_rem(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut r = a.to_vec();
    let lb = b.last().expect("nonzero divisor").clone();
    while r.len() >= b.len() {
        let lr = r.last().expect("nonempty").clone();
        let shift = r.len() - b.len();
        for x in &mut r {
            *x *= &lb;
        }
        for (i, bi) in b.iter().enumerate() {
            r[shift + i] -= &lr * bi;
        }
        while r.last().is_some_and(Zero::is_zero) {
            r.pop();
        }
    }
    content_free(r)
}

fn upoly_monic(mut a: Vec<BigRational>) -> Vec<BigRational> {
    if let Some(lead) = a.last().cloned() {
        for x in &mut a {
            *x /= &lead;
        }
    }
    a
}

const GCD_PRIME: u64 = (1 << 61) - 1;

fn mod_p(x: &BigRational) -> Option<u64> {
    let p = BigInt::from(GCD_PRIME);
    let reduce = |n: &BigInt| -> u64 {
        let r = n % &p;
        let r = if r.is_negative() { r + &p } else { r };
        r.try_into().expect("reduced below p")
    };
    let den = reduce(x.denom());
    (den != 0).then(|| mul_p(reduce(x.numer()), pow_p(den, GCD_PRIME - 2)))
}

fn mul_p(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % GCD_PRIME as u128) as u64
}

fn pow_p(mut b: u64, mut e: u64) -> u64 {
    let mut acc = 1;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_p(acc, b);
        }
        b = mul_p(b, b);
        e >>= 1;
    }
    acc
}

/// True when the images mod p of two polynomials are coprime, which
/// implies coprimality over Q. False means
/// "don't know".
fn coprime_mod_p(a: &[BigRational], b: &[BigRational]) -> bool {
    let image = |v: &[BigRational]| v.iter().map(mod_p).collect::<Option<Vec<u64>>>();
    let (Some(mut a), Some(mut b)) = (image(a), image(b)) else {
        return false;
    };
    // degrees must survive the reduction
    if a.last() == Some(&0) || b.last() == Some(&0) {
        return false;
    }
    let trim = |v: &mut Vec<u64>| {
        while v.last() == Some(&0) {
            v.pop();
        }
    };
    while !b.is_empty() {
        let inv = pow_p(*b.last().expect("nonempty"), GCD_PRIME - 2);
        while a.len() >= b.len() {
            let f = mul_p(*a.last().expect("nonempty"), inv);
            let shift = a.len() - b.len();
            for (i, &bi) in b.iter().enumerate() {
                a[shift + i] = (a[shift + i] + GCD_PRIME - mul_p(f, bi)) % GCD_PRIME;
            }
            trim(&mut a);
        }
        std::mem::swap(&mut a, &mut b);
    }
    a.len() == 1
}

fn upoly_divexact(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let (q, r) = upoly_divrem(a, b);
    debug_assert!(r.is_empty(), "inexact polynomial division");
    q
}

impl PartialEq for ExactScalar {
    fn eq(&self, other: &Self) -> bool {
        if self.den == other.den {
            return self.num == other.num;
        }
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }
}

impl Eq for ExactScalar {}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

impl<'a> Add<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn add(self, rhs: &ExactScalar) -> ExactScalar {
        if self.den == rhs.den {
            return normalize(self.num.add(&rhs.num), self.den.clone())
                .expect("denominator already nonzero");
        }
        normalize(
            self.num.mul(&rhs.den).add(&rhs.num.mul(&self.den)),
            self.den.mul(&rhs.den),
        )
        .expect("product of nonzero denominators is nonzero")
    }
}

impl<'a> Sub<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn sub(self, rhs: &ExactScalar) -> ExactScalar {
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn mul(self, rhs: &ExactScalar) -> ExactScalar {
        if self.den.is_one() && rhs.den.is_one() {
            return ExactScalar::from_poly(self.num.mul(&rhs.num));
        }
        normalize(self.num.mul(&rhs.num), self.den.mul(&rhs.den))
            .expect("product of nonzero denominators is nonzero")
    }
}

impl Neg for &ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<ExactScalar> for ExactScalar {
            type Output = ExactScalar;
            fn $m(self, rhs: ExactScalar) -> ExactScalar {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a ExactScalar> for ExactScalar {
            type Output = ExactScalar;
            fn $m(self, rhs: &ExactScalar) -> ExactScalar {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        -&self
    }
}

impl From<i64> for ExactScalar {
    fn from(n: i64) -> Self {
        ExactScalar::int(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(k: u64) -> ExactScalar {
        ExactScalar::sqrt_int(k)
    }

    #[test]
    fn sqrt_two_squared() {
        assert_eq!(sq(2) * sq(2), ExactScalar::int(2));
    }

    #[test]
    fn quotient_relation() {
        let c = ExactScalar::cos_sym(1);
        let s = ExactScalar::sin_sym(1);
        assert_eq!(&c * &c + &s * &s, ExactScalar::one());
        assert!((&c * &c + &s * &s - ExactScalar::one()).is_zero());
    }

    #[test]
    fn conjugate_product() {
        let one = ExactScalar::one();
        let a = &one + &sq(3);
        let b = &one - &sq(3);
        // (1 + sqrt3)(1 - sqrt3) = 1 - 3
        assert_eq!(a * b, ExactScalar::int(-2));
    }

    #[test]
    fn zero_tests() {
        assert!(ExactScalar::zero().is_zero());
        assert!(!(sq(2) - ExactScalar::one()).is_zero());
    }

    #[test]
    fn division_rationalizes() {
        let inv = sq(3).recip().unwrap();
        assert_eq!(inv, sq(3).scale(&BigRational::new(1.into(), 3.into())));
        assert_eq!(inv.to_string(), "sqrt(3)/3");
        let x = (ExactScalar::one() + sq(2) + sq(3)).recip().unwrap();
        assert_eq!(x * (ExactScalar::one() + sq(2) + sq(3)), ExactScalar::one());
    }

    #[test]
    fn zero_divisor_is_error() {
        let z = sq(2) * sq(2) - ExactScalar::int(2);
        assert_eq!(ExactScalar::one().checked_div(&z), Err(ScalarError::ZeroDivisor));
    }

    #[test]
    fn symbolic_division_round_trips() {
        let c = ExactScalar::cos_sym(1);
        let s = ExactScalar::sin_sym(1);
        let d = &ExactScalar::one() + &(&c * &s);
        let q = ExactScalar::int(3).checked_div(&d).unwrap();
        assert_eq!(&q * &d, ExactScalar::int(3));
        let t = s.checked_div(&c).unwrap();
        // tan^2 + 1 = 1/c^2
        let lhs = &t * &t + ExactScalar::one();
        assert_eq!(lhs, (&c * &c).recip().unwrap());
        // 1/s has no sine in the denominator after normalization
        let inv_s = s.recip().unwrap();
        assert!(inv_s.denominator().sine_pairs().is_empty());
        assert_eq!(inv_s * s, ExactScalar::one());
    }

    #[test]
    fn rational_square_roots() {
        assert_eq!(ExactScalar::ratio(9, 4).sqrt_rational().unwrap(), ExactScalar::ratio(3, 2));
        let r = ExactScalar::ratio(3, 2).sqrt_rational().unwrap();
        assert_eq!(&r * &r, ExactScalar::ratio(3, 2));
        assert!(ExactScalar::int(-1).sqrt_rational().is_err());
    }
}
