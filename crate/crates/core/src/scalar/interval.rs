//! Outward-rounded rational intervals.
//!
//! Endpoints are dyadic rationals on the grid `2^-precision_bits` (plus a few
//! guard bits inside the transcendental kernels). Every operation rounds the
//! lower end down and the upper end up, so the true value is always enclosed.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign as BigSign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Closed interval `[lo, hi] * 2^-precision_bits` with integer endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    lo: BigInt,
    hi: BigInt,
    precision_bits: u32,
}

fn pow2(bits: u32) -> BigInt {
    BigInt::one() << bits as usize
}

/// `floor(x / 2^k)`.
fn floor_shift(x: &BigInt, k: u32) -> BigInt {
    if x.sign() != BigSign::Minus {
        x >> k as usize
    } else {
        let t: BigInt = -x + pow2(k) - 1;
        -(t >> k as usize)
    }
}

/// `ceil(x / 2^k)`.
fn ceil_shift(x: &BigInt, k: u32) -> BigInt {
    -floor_shift(&-x, k)
}

fn floor_scaled(q: &BigRational, bits: u32) -> BigInt {
    (q.numer() << bits as usize).div_floor(q.denom())
}

fn ceil_scaled(q: &BigRational, bits: u32) -> BigInt {
    (q.numer() << bits as usize).div_ceil(q.denom())
}

fn isqrt_ceil(n: &BigInt) -> BigInt {
    let r = n.sqrt();
    if &r * &r < *n {
        r + 1
    } else {
        r
    }
}

impl Interval {
    /// Encloses `[lo, hi]` after outward rounding. Panics if `lo > hi`.
    pub fn new(lo: BigRational, hi: BigRational, precision_bits: u32) -> Self {
        assert!(lo <= hi, "interval lower bound exceeds upper bound");
        Interval {
            lo: floor_scaled(&lo, precision_bits),
            hi: ceil_scaled(&hi, precision_bits),
            precision_bits,
        }
    }

    fn raw(lo: BigInt, hi: BigInt, precision_bits: u32) -> Self {
        debug_assert!(lo <= hi);
        Interval {
            lo,
            hi,
            precision_bits,
        }
    }

    pub fn point(q: &BigRational, precision_bits: u32) -> Self {
        Interval::new(q.clone(), q.clone(), precision_bits)
    }

    pub fn from_int(n: i64, precision_bits: u32) -> Self {
        let v = BigInt::from(n) << precision_bits as usize;
        Interval::raw(v.clone(), v, precision_bits)
    }

    pub fn from_f64_bounds(lo: f64, hi: f64, precision_bits: u32) -> Self {
        let lo = BigRational::from_float(lo).expect("finite lower bound");
        let hi = BigRational::from_float(hi).expect("finite upper bound");
        Interval::new(lo, hi, precision_bits)
    }

    pub fn lo(&self) -> BigRational {
        BigRational::new(self.lo.clone(), pow2(self.precision_bits))
    }

    pub fn hi(&self) -> BigRational {
        BigRational::new(self.hi.clone(), pow2(self.precision_bits))
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    /// Re-grids to `bits`, rounding outward when precision drops.
    pub fn with_precision(&self, bits: u32) -> Interval {
        match bits.cmp(&self.precision_bits) {
            Ordering::Equal => self.clone(),
            Ordering::Greater => {
                let k = (bits - self.precision_bits) as usize;
                Interval::raw(&self.lo << k, &self.hi << k, bits)
            }
            Ordering::Less => {
                let k = self.precision_bits - bits;
                Interval::raw(floor_shift(&self.lo, k), ceil_shift(&self.hi, k), bits)
            }
        }
    }

    pub fn width(&self) -> BigRational {
        BigRational::new(&self.hi - &self.lo, pow2(self.precision_bits))
    }

    pub fn mid(&self) -> BigRational {
        BigRational::new(&self.hi + &self.lo, pow2(self.precision_bits + 1))
    }

    pub fn mid_f64(&self) -> f64 {
        self.mid().to_f64().unwrap_or(f64::NAN)
    }

    pub fn lo_f64(&self) -> f64 {
        self.lo().to_f64().unwrap_or(f64::NAN)
    }

    pub fn hi_f64(&self) -> f64 {
        self.hi().to_f64().unwrap_or(f64::NAN)
    }

    pub fn contains(&self, q: &BigRational) -> bool {
        self.lo() <= *q && *q <= self.hi()
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        BigRational::from_float(x).is_some_and(|q| self.contains(&q))
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo() <= self.lo() && self.hi() <= other.hi()
    }

    /// `Less` if entirely below zero, `Greater` if entirely above, `None` otherwise.
    pub fn sign(&self) -> Option<Ordering> {
        if self.hi.is_negative() {
            Some(Ordering::Less)
        } else if self.lo.is_positive() {
            Some(Ordering::Greater)
        } else {
            None
        }
    }

    /// Both operands on a common grid.
    fn aligned(&self, other: &Interval) -> (Interval, Interval) {
        let bits = self.precision_bits.max(other.precision_bits);
        (self.with_precision(bits), other.with_precision(bits))
    }

    pub fn add(&self, other: &Interval) -> Interval {
        let (a, b) = self.aligned(other);
        Interval::raw(a.lo + b.lo, a.hi + b.hi, a.precision_bits)
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        let (a, b) = self.aligned(other);
        Interval::raw(a.lo - b.hi, a.hi - b.lo, a.precision_bits)
    }

    pub fn neg(&self) -> Interval {
        Interval::raw(-&self.hi, -&self.lo, self.precision_bits)
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let (a, b) = self.aligned(other);
        let bits = a.precision_bits;
        let products = [&a.lo * &b.lo, &a.lo * &b.hi, &a.hi * &b.lo, &a.hi * &b.hi];
        let lo = products.iter().min().expect("four products");
        let hi = products.iter().max().expect("four products");
        Interval::raw(floor_shift(lo, bits), ceil_shift(hi, bits), bits)
    }

    pub fn scale(&self, k: &BigRational) -> Interval {
        let (p, q) = (k.numer(), k.denom());
        let a = &self.lo * p;
        let b = &self.hi * p;
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        Interval::raw(a.div_floor(q), b.div_ceil(q), self.precision_bits)
    }

    /// `None` if the interval contains zero.
    pub fn recip(&self) -> Option<Interval> {
        if self.contains_zero() {
            return None;
        }
        let one = pow2(2 * self.precision_bits);
        Some(Interval::raw(
            one.div_floor(&self.hi),
            one.div_ceil(&self.lo),
            self.precision_bits,
        ))
    }

    pub fn div(&self, other: &Interval) -> Option<Interval> {
        let (a, b) = self.aligned(other);
        b.recip().map(|r| a.mul(&r))
    }

    pub fn square(&self) -> Interval {
        if self.contains_zero() {
            let m = self.lo.abs().max(self.hi.abs());
            Interval::raw(BigInt::zero(), ceil_shift(&(&m * &m), self.precision_bits), self.precision_bits)
        } else {
            let (a, b) = (self.lo.abs(), self.hi.abs());
            let (small, large) = if a <= b { (a, b) } else { (b, a) };
            Interval::raw(
                floor_shift(&(&small * &small), self.precision_bits),
                ceil_shift(&(&large * &large), self.precision_bits),
                self.precision_bits,
            )
        }
    }

    pub fn powi(&self, n: u32) -> Interval {
        let mut acc = Interval::from_int(1, self.precision_bits);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Square root; negative parts of the input are clipped to zero. Returns
    /// `None` if the whole interval is negative.
    pub fn sqrt(&self) -> Option<Interval> {
        if self.hi.is_negative() {
            return None;
        }
        let k = self.precision_bits as usize;
        let lo = if self.lo.is_negative() {
            BigInt::zero()
        } else {
            (&self.lo << k).sqrt()
        };
        let hi = isqrt_ceil(&(&self.hi << k));
        Some(Interval::raw(lo, hi, self.precision_bits))
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        let (a, b) = self.aligned(other);
        Interval::raw(a.lo.min(b.lo), a.hi.max(b.hi), a.precision_bits)
    }

    /// Largest endpoint magnitude, in units of the grid.
    fn magnitude_ulps(&self) -> BigInt {
        self.lo.abs().max(self.hi.abs())
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", decimal_down(&self.lo(), 12), decimal_up(&self.hi(), 12))
    }
}

/// Decimal string of `q` rounded toward negative infinity at `digits` places.
pub fn decimal_down(q: &BigRational, digits: usize) -> String {
    decimal(q, digits, false)
}

pub fn decimal_up(q: &BigRational, digits: usize) -> String {
    decimal(q, digits, true)
}

fn decimal(q: &BigRational, digits: usize, up: bool) -> String {
    let scale = BigInt::from(10).pow(digits as u32);
    let scaled = q.numer() * &scale;
    let n = if up {
        scaled.div_ceil(q.denom())
    } else {
        scaled.div_floor(q.denom())
    };
    let neg = n.sign() == BigSign::Minus;
    let mut s = n.abs().to_string();
    if s.len() <= digits {
        s = format!("{}{}", "0".repeat(digits + 1 - s.len()), s);
    }
    let split = s.len() - digits;
    let out = format!("{}.{}", &s[..split], &s[split..]);
    if neg {
        format!("-{out}")
    } else {
        out
    }
}

/// Guard bits used inside series evaluations.
const GUARD: u32 = 32;

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// arctan(1/k) for integer k >= 2 by its alternating series.
fn atan_inv(k: i64, bits: u32) -> Interval {
    let wp = bits + GUARD;
    let k2 = rat(k * k).recip();
    let mut power = Interval::point(&rat(k).recip(), wp);
    let mut sum = Interval::from_int(0, wp);
    let mut j = 0i64;
    loop {
        let term = power.scale(&rat(2 * j + 1).recip());
        if term.magnitude_ulps() <= BigInt::one() {
            // alternating, decreasing terms: remainder bounded by this term
            let rem = Interval::raw(-term.hi.clone(), term.hi.clone(), wp);
            return sum.add(&rem).with_precision(bits);
        }
        sum = if j % 2 == 0 { sum.add(&term) } else { sum.sub(&term) };
        power = power.scale(&k2);
        j += 1;
    }
}

/// Enclosure of pi via Machin's formula.
pub fn pi(bits: u32) -> Interval {
    let a = atan_inv(5, bits + 8).scale(&rat(16));
    let b = atan_inv(239, bits + 8).scale(&rat(4));
    a.sub(&b).with_precision(bits)
}

/// Enclosure of `cos(q)` for a rational `|q| <= 4`.
pub fn cos_point(q: &BigRational, bits: u32) -> Interval {
    assert!(q.abs() <= rat(4), "cos_point argument out of range");
    cos_series(&Interval::point(q, bits + GUARD), bits)
}

/// Taylor series of cosine on an enclosure `x` with `|x| <= 4`; valid for
/// any such interval since every partial sum is evaluated in interval
/// arithmetic and the tail is bounded by the first omitted term.
fn cos_series(x: &Interval, bits: u32) -> Interval {
    let wp = x.precision_bits;
    let x2 = x.square();
    let mut term = Interval::from_int(1, wp);
    let mut sum = Interval::from_int(0, wp);
    let mut k = 0i64;
    loop {
        // |term| decreases once (2k+1)(2k+2) > 16, i.e. from k = 2 on
        if k >= 3 && term.magnitude_ulps() <= BigInt::one() {
            let m = term.magnitude_ulps();
            let rem = Interval::raw(-m.clone(), m, wp);
            return sum.add(&rem).with_precision(bits);
        }
        sum = sum.add(&term);
        term = term.mul(&x2).scale(&rat((2 * k + 1) * (2 * k + 2)).recip()).neg();
        k += 1;
    }
}

/// Enclosure of `cos(x)` for `x` inside `[0, pi]`, where cosine decreases.
pub fn cos_on_upper_half(x: &Interval) -> Interval {
    let bits = x.precision_bits;
    let at_hi = cos_point(&x.hi(), bits);
    let at_lo = cos_point(&x.lo(), bits);
    Interval::raw(at_hi.lo, at_lo.hi, bits)
}

/// Enclosure of `arccos(x)` for `x` inside `[-1, 1]`: Newton iteration to a
/// candidate, then a bracket certified by two cosine evaluations. Near
/// `x = +-1` (and if certification fails) it falls back to bisection.
pub fn arccos(x: &Interval) -> Interval {
    let bits = x.precision_bits;
    let wp = bits + GUARD;
    let xs = x.with_precision(wp);
    let xm = xs.mid();
    let xf = xs.mid_f64();
    if xf.abs() > 0.999 {
        return arccos_bisect(x);
    }
    let one = rat(1);
    let round = |q: BigRational| Interval::point(&q, wp).mid();
    let mut t = BigRational::from_float(xf.acos()).expect("finite");
    let mut sin_t = BigRational::from_float(xf.acos().sin()).expect("finite");
    let mut prec = 50u32;
    loop {
        let c = cos_point(&t, wp).mid();
        sin_t = Interval::point(&(&one - &c * &c), wp).sqrt().map_or(sin_t, |r| r.mid());
        t = round(&t + (c - &xm) / &sin_t);
        if prec > wp {
            break;
        }
        prec *= 2;
    }
    let ulp = BigRational::new(BigInt::one(), pow2(bits));
    let mut delta = (&ulp + xs.width() / &sin_t) * rat(4);
    for _ in 0..8 {
        let lo = &t - &delta;
        let hi = &t + &delta;
        if cos_point(&lo, wp).lo() > xs.hi() && cos_point(&hi, wp).hi() < xs.lo() {
            return Interval::new(lo, hi, bits);
        }
        delta *= rat(16);
    }
    arccos_bisect(x)
}

/// Two one-sided bisections on `[0, pi]`, where cosine decreases.
fn arccos_bisect(x: &Interval) -> Interval {
    let bits = x.precision_bits;
    let wp = bits + 8;
    let xs = x.with_precision(wp);
    let (x_lo, x_hi) = (xs.lo(), xs.hi());
    let top = pi(wp).hi();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    // below: the largest t found with cos(t) > x_hi certified
    let (mut a, mut b) = (BigRational::zero(), top.clone());
    for _ in 0..(wp + 4) {
        let mid = (&a + &b) * &half;
        if cos_point(&mid, wp).lo() > x_hi {
            a = mid;
        } else {
            b = mid;
        }
    }
    let below = a;
    // above: the smallest t found with cos(t) < x_lo certified
    let (mut a, mut b) = (BigRational::zero(), top);
    for _ in 0..(wp + 4) {
        let mid = (&a + &b) * &half;
        if cos_point(&mid, wp).hi() < x_lo {
            b = mid;
        } else {
            a = mid;
        }
    }
    Interval::new(below, b, bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_digits() {
        let p = pi(128);
        assert!(p.width() < BigRational::new(BigInt::one(), pow2(120)));
        assert_eq!(decimal_down(&p.lo(), 10), "3.1415926535");
        assert_eq!(decimal_up(&p.hi(), 10), "3.1415926536");
    }

    #[test]
    fn cos_matches_float() {
        for &x in &[0.0f64, 0.5, 1.0, 2.0, 3.0] {
            let q = BigRational::from_float(x).unwrap();
            let c = cos_point(&q, 100);
            assert!((c.mid_f64() - x.cos()).abs() < 1e-14);
            assert!(c.width() < BigRational::new(BigInt::one(), pow2(90)));
        }
    }

    #[test]
    fn arccos_of_half_root_two() {
        let r = Interval::point(&rat(2), 200).sqrt().unwrap().scale(&BigRational::new(BigInt::one(), BigInt::from(2)));
        let t = arccos(&r);
        let quarter = pi(200).scale(&BigRational::new(BigInt::one(), BigInt::from(4)));
        assert!(t.width() < BigRational::new(BigInt::one(), pow2(150)));
        assert!(t.contains(&quarter.mid()));
    }

    #[test]
    fn arccos_of_minus_one_over_root_three() {
        let x = Interval::point(&rat(3), 200).sqrt().unwrap().recip().unwrap().neg();
        let t = arccos(&x);
        let deg = t.mid_f64().to_degrees();
        assert!((deg - 125.26438968).abs() < 1e-6);
        assert!(t.width() < BigRational::new(BigInt::one(), pow2(150)));
    }

    #[test]
    fn sqrt_encloses() {
        let r = Interval::from_int(2, 64).sqrt().unwrap();
        assert!(r.width() < BigRational::new(BigInt::one(), pow2(60)));
        assert!(r.square().contains(&rat(2)));
    }

    #[test]
    fn decimal_rounding_directions() {
        let q = BigRational::new(BigInt::from(-1), BigInt::from(3));
        assert_eq!(decimal_down(&q, 3), "-0.334");
        assert_eq!(decimal_up(&q, 3), "-0.333");
    }
}
