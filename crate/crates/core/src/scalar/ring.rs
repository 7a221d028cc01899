//! Polynomial layer of the scalar ring.
//!
//! A [`Poly`] is an element of `F[c_1, s_1, ..., c_k, s_k] / (c_i^2 + s_i^2 - 1)`
//! where `F` is the multi-quadratic field generated by square roots of
//! square-free integers. The canonical basis is
//! `sqrt(r) * prod c_i^a_i * s_i^b_i` with `r` square-free and `b_i` in `{0, 1}`;
//! every `s_i^2` is rewritten to `1 - c_i^2` as soon as it appears.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Power of one trigonometric symbol pair inside a monomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymPower {
    pub pair: u32,
    pub c: u32,
    pub s: u8,
}

/// `sqrt(radical) * prod c^a s^b`. `radical == 1` is the rational part.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub radical: u64,
    pub powers: Vec<SymPower>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial {
            radical: 1,
            powers: Vec::new(),
        }
    }

    pub fn sqrt(radical: u64) -> Self {
        Monomial {
            radical,
            powers: Vec::new(),
        }
    }

    pub fn symbol(pair: u32, c: u32, s: u8) -> Self {
        Monomial {
            radical: 1,
            powers: vec![SymPower { pair, c, s }],
        }
    }

    pub fn c_exp(&self, pair: u32) -> u32 {
        self.power(pair).map_or(0, |p| p.c)
    }

    pub fn s_exp(&self, pair: u32) -> u8 {
        self.power(pair).map_or(0, |p| p.s)
    }

    fn power(&self, pair: u32) -> Option<&SymPower> {
        self.powers.iter().find(|p| p.pair == pair)
    }

    pub fn is_symbol_free(&self) -> bool {
        self.powers.is_empty()
    }

    fn set_c(&mut self, pair: u32, c: u32) {
        match self.powers.iter().position(|p| p.pair == pair) {
            Some(i) => {
                self.powers[i].c = c;
                if c == 0 && self.powers[i].s == 0 {
                    self.powers.remove(i);
                }
            }
            None if c > 0 => {
                let i = self.powers.partition_point(|p| p.pair < pair);
                self.powers.insert(i, SymPower { pair, c, s: 0 });
            }
            None => {}
        }
    }

    /// Total symbol degree, used only for ordering leading terms.
    fn degree(&self) -> u32 {
        self.powers.iter().map(|p| p.c + p.s as u32).sum()
    }
}

/// Product of two monomials before the `s^2` rewrite: the integer factor
/// pulled out of the radicals, the merged monomial (with `s` exponents
/// possibly equal to 2).
fn raw_product(a: &Monomial, b: &Monomial) -> (u64, Monomial) {
    let g = a.radical.gcd(&b.radical);
    let radical = (a.radical / g)
        .checked_mul(b.radical / g)
        .expect("radical product overflows u64");
    let mut powers = Vec::with_capacity(a.powers.len() + b.powers.len());
    let (mut i, mut j) = (0, 0);
    while i < a.powers.len() || j < b.powers.len() {
        let take_a = j >= b.powers.len()
            || (i < a.powers.len() && a.powers[i].pair < b.powers[j].pair);
        let take_b = i >= a.powers.len()
            || (j < b.powers.len() && b.powers[j].pair < a.powers[i].pair);
        if take_a {
            powers.push(a.powers[i]);
            i += 1;
        } else if take_b {
            powers.push(b.powers[j]);
            j += 1;
        } else {
            let (pa, pb) = (a.powers[i], b.powers[j]);
            powers.push(SymPower {
                pair: pa.pair,
                c: pa.c + pb.c,
                s: pa.s + pb.s,
            });
            i += 1;
            j += 1;
        }
    }
    (g, Monomial { radical, powers })
}

/// Element of the polynomial quotient ring in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::from_rational(BigRational::one())
    }

    pub fn from_rational(q: BigRational) -> Self {
        Poly::from_term(Monomial::one(), q)
    }

    pub fn from_term(m: Monomial, q: BigRational) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, q);
        p
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .get(&Monomial::one())
                .is_some_and(|q| q.is_one())
    }

    /// Rational value when the polynomial is a plain rational constant.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn is_symbol_free(&self) -> bool {
        self.terms.keys().all(Monomial::is_symbol_free)
    }

    fn add_term(&mut self, m: Monomial, q: BigRational) {
        if q.is_zero() {
            return;
        }
        // A monomial may carry s^2 only transiently; rewrite before storing.
        if let Some(pos) = m.powers.iter().position(|p| p.s >= 2) {
            let mut base = m.clone();
            base.powers[pos].s -= 2;
            let mut shifted = base.clone();
            shifted.powers[pos].c += 2;
            base.powers.retain(|p| p.c != 0 || p.s != 0);
            self.add_term(base, q.clone());
            self.add_term(shifted, -q);
            return;
        }
        let mut m = m;
        m.powers.retain(|p| p.c != 0 || p.s != 0);
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(q);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += q;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, q) in &other.terms {
            out.add_term(m.clone(), q.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, q) in &other.terms {
            out.add_term(m.clone(), -q.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, q)| (m.clone(), -q.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, k: &BigRational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, q)| (m.clone(), q * k))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, qa) in &self.terms {
            for (mb, qb) in &other.terms {
                let (g, m) = raw_product(ma, mb);
                let mut q = qa * qb;
                if g != 1 {
                    q *= BigRational::from_integer(BigInt::from(g));
                }
                out.add_term(m, q);
            }
        }
        out
    }

    /// Image under the field automorphism `sqrt(p) -> -sqrt(p)`.
    pub fn conj_radical(&self, p: u64) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, q)| {
                    if m.radical % p == 0 {
                        (m.clone(), -q.clone())
                    } else {
                        (m.clone(), q.clone())
                    }
                })
                .collect(),
        }
    }

    /// Image under the ring automorphism `s_pair -> -s_pair`.
    pub fn conj_sine(&self, pair: u32) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, q)| {
                    if m.s_exp(pair) == 1 {
                        (m.clone(), -q.clone())
                    } else {
                        (m.clone(), q.clone())
                    }
                })
                .collect(),
        }
    }

    /// Primes dividing some radical that occurs in the polynomial.
    pub fn radical_primes(&self) -> Vec<u64> {
        let mut primes: Vec<u64> = self
            .terms
            .keys()
            .flat_map(|m| prime_factors(m.radical))
            .collect();
        primes.sort_unstable();
        primes.dedup();
        primes
    }

    /// Pairs whose sine symbol occurs.
    pub fn sine_pairs(&self) -> Vec<u32> {
        let mut pairs: Vec<u32> = self
            .terms
            .keys()
            .flat_map(|m| m.powers.iter().filter(|p| p.s > 0).map(|p| p.pair))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    pub fn pairs(&self) -> Vec<u32> {
        let mut pairs: Vec<u32> = self
            .terms
            .keys()
            .flat_map(|m| m.powers.iter().map(|p| p.pair))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    pub fn radicals(&self) -> Vec<u64> {
        let mut r: Vec<u64> = self
            .terms
            .keys()
            .map(|m| m.radical)
            .filter(|&r| r != 1)
            .collect();
        r.sort_unstable();
        r.dedup();
        r
    }

    /// Term of highest total degree, ties broken by the monomial order.
    pub fn leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms
            .iter()
            .max_by(|a, b| a.0.degree().cmp(&b.0.degree()).then(a.0.cmp(b.0)))
    }

    /// Views the polynomial as univariate in `c_pair`: maps each cofactor
    /// monomial (with `c_pair` removed) to its coefficient list, lowest degree first.
    pub fn split_in_c(&self, pair: u32) -> BTreeMap<Monomial, Vec<BigRational>> {
        let mut out: BTreeMap<Monomial, Vec<BigRational>> = BTreeMap::new();
        for (m, q) in &self.terms {
            let k = m.c_exp(pair) as usize;
            let mut rest = m.clone();
            rest.set_c(pair, 0);
            let coeffs = out.entry(rest).or_default();
            if coeffs.len() <= k {
                coeffs.resize(k + 1, BigRational::zero());
            }
            coeffs[k] = q.clone();
        }
        out
    }

    /// Inverse of [`Poly::split_in_c`].
    pub fn join_in_c(pair: u32, parts: &BTreeMap<Monomial, Vec<BigRational>>) -> Poly {
        let mut out = Poly::zero();
        for (rest, coeffs) in parts {
            for (k, q) in coeffs.iter().enumerate() {
                if !q.is_zero() {
                    let mut m = rest.clone();
                    m.set_c(pair, k as u32);
                    out.add_term(m, q.clone());
                }
            }
        }
        out
    }

    /// Smallest exponent of `c_pair` over all terms.
    pub fn min_c_exp(&self, pair: u32) -> u32 {
        self.terms.keys().map(|m| m.c_exp(pair)).min().unwrap_or(0)
    }

    /// Divides every term by `c_pair^k`; caller guarantees divisibility.
    pub fn shift_down_c(&self, pair: u32, k: u32) -> Poly {
        if k == 0 {
            return self.clone();
        }
        let mut out = Poly::zero();
        for (m, q) in &self.terms {
            let mut m = m.clone();
            let p = m
                .powers
                .iter_mut()
                .find(|p| p.pair == pair)
                .expect("shift_down_c on missing symbol");
            p.c -= k;
            out.add_term(m, q.clone());
        }
        out
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, q)) in self.terms.iter().enumerate() {
            let neg = q.is_negative();
            if i == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else if neg {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            write_term(f, m, &q.abs())?;
        }
        Ok(())
    }
}

/// `N*sqrt(r)*c1*c1*s1/D`, omitting unit factors.
fn write_term(f: &mut fmt::Formatter<'_>, m: &Monomial, q: &BigRational) -> fmt::Result {
    let mut factors: Vec<String> = Vec::new();
    let numer = q.numer();
    let has_symbols = m.radical != 1 || !m.powers.is_empty();
    if !numer.is_one() || !has_symbols {
        factors.push(numer.to_string());
    }
    if m.radical != 1 {
        factors.push(format!("sqrt({})", m.radical));
    }
    for p in &m.powers {
        for _ in 0..p.c {
            factors.push(format!("c{}", p.pair));
        }
        for _ in 0..p.s {
            factors.push(format!("s{}", p.pair));
        }
    }
    f.write_str(&factors.join("*"))?;
    if !q.denom().is_one() {
        write!(f, "/{}", q.denom())?;
    }
    Ok(())
}

/// Prime factors of `n` without multiplicity.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Splits `n > 0` as `m^2 * r` with `r` square-free.
pub fn square_free_split(mut n: u64) -> (u64, u64) {
    let mut square = 1u64;
    let mut free = 1u64;
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        let mut e = 0;
        while n % d == 0 {
            n /= d;
            e += 1;
        }
        for _ in 0..e / 2 {
            square *= d;
        }
        if e % 2 == 1 {
            free *= d;
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        free *= n;
    }
    (square, free)
}
