//! Certified numeric evaluation of exact scalars.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::interval::{arccos, cos_on_upper_half, Interval};
use super::ring::Poly;
use super::{ExactScalar, ScalarError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrecisionConfig {
    pub precision_bits: u32,
    /// Tolerance for the residual checks that are decided numerically.
    pub zero_tolerance: BigRational,
    /// Ceiling for the refinement loop of [`certify_sign`].
    pub max_precision_bits: u32,
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        PrecisionConfig {
            precision_bits: 256,
            zero_tolerance: BigRational::new(BigInt::one(), BigInt::from(10).pow(30)),
            max_precision_bits: 4096,
        }
    }
}

impl PrecisionConfig {
    pub fn with_bits(bits: u32) -> Self {
        PrecisionConfig {
            precision_bits: bits,
            ..PrecisionConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ScalarError> {
        if self.precision_bits < 64 {
            return Err(ScalarError::BadPrecision(format!(
                "precision_bits must be at least 64, got {}",
                self.precision_bits
            )));
        }
        if self.zero_tolerance <= BigRational::zero() {
            return Err(ScalarError::BadPrecision("zero_tolerance must be positive".into()));
        }
        if self.max_precision_bits < self.precision_bits {
            return Err(ScalarError::BadPrecision(
                "max_precision_bits below precision_bits".into(),
            ));
        }
        Ok(())
    }
}

/// Numeric meaning of one `(c_i, s_i)` pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PairDef {
    /// `c = cos(theta/steps)`, `s = sin(theta/steps)` with `cos(theta)` given
    /// exactly (symbol-free).
    Rotation {
        cos_theta: ExactScalar,
        steps: u32,
    },
    /// `c = 1/sqrt(alpha)`, `s = sqrt(1 - c^2)` where
    /// `alpha = kappa * c_rotation^steps`. Needs `alpha >= 1`.
    Scale {
        kappa: ExactScalar,
        rotation: u32,
        steps: u32,
    },
}

/// Interval values for every symbol a scalar may mention.
#[derive(Clone, Debug, Default)]
pub struct Bindings {
    pub sqrt: BTreeMap<u64, Interval>,
    pub trig: BTreeMap<u32, (Interval, Interval)>,
}

impl Bindings {
    /// Adds enclosures of `sqrt(r)` for every radical of `a` not yet bound.
    pub fn with_radicals_of(mut self, a: &ExactScalar, bits: u32) -> Self {
        self.add_radicals(&a.radicals(), bits);
        self
    }

    pub fn add_radicals(&mut self, radicals: &[u64], bits: u32) {
        for &r in radicals {
            self.sqrt.entry(r).or_insert_with(|| sqrt_enclosure(r, bits));
        }
    }
}

/// Definitions of all symbol pairs in play; produces [`Bindings`] at any
/// precision.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolEnv {
    pub pairs: BTreeMap<u32, PairDef>,
}

impl SymbolEnv {
    pub fn new() -> Self {
        SymbolEnv::default()
    }

    pub fn define(&mut self, pair: u32, def: PairDef) {
        self.pairs.insert(pair, def);
    }

    pub fn next_free_pair(&self) -> u32 {
        self.pairs.keys().next_back().map_or(1, |k| k + 1)
    }

    /// Bindings for all pairs plus the radicals they need.
    pub fn bindings(&self, bits: u32) -> Result<Bindings, ScalarError> {
        let wp = bits + 16;
        let mut b = Bindings::default();
        for (&pair, def) in &self.pairs {
            if let PairDef::Rotation { cos_theta, steps } = def {
                if !cos_theta.is_symbol_free() {
                    return Err(ScalarError::BadPair {
                        pair,
                        reason: "cos(theta) must not contain symbols".into(),
                    });
                }
                if *steps == 0 {
                    return Err(ScalarError::BadPair {
                        pair,
                        reason: "step count must be positive".into(),
                    });
                }
                b.add_radicals(&cos_theta.radicals(), wp);
                let x = eval_poly_ratio(cos_theta, &b, wp)?;
                if x.lo() < -BigRational::one() || x.hi() > BigRational::one() {
                    return Err(ScalarError::BadPair {
                        pair,
                        reason: "cos(theta) outside [-1, 1]".into(),
                    });
                }
                let theta = arccos(&x);
                let phi = theta.scale(&BigRational::from_integer(BigInt::from(*steps)).recip());
                let c = cos_on_upper_half(&phi);
                let s = sine_from_cosine(&c);
                b.trig.insert(pair, (c.with_precision(bits), s.with_precision(bits)));
            }
        }
        for (&pair, def) in &self.pairs {
            if let PairDef::Scale {
                kappa,
                rotation,
                steps,
            } = def
            {
                let (c_rot, _) = b.trig.get(rotation).cloned().ok_or_else(|| ScalarError::BadPair {
                    pair,
                    reason: format!("references undefined rotation pair {rotation}"),
                })?;
                if !kappa.is_symbol_free() {
                    return Err(ScalarError::BadPair {
                        pair,
                        reason: "kappa must not contain symbols".into(),
                    });
                }
                b.add_radicals(&kappa.radicals(), wp);
                let k = eval_poly_ratio(kappa, &b, wp)?;
                let alpha = k.mul(&c_rot.with_precision(wp).powi(*steps));
                if alpha.lo() < BigRational::one() {
                    return Err(ScalarError::BadPair {
                        pair,
                        reason: "scale factor not certified >= 1".into(),
                    });
                }
                let c = alpha.sqrt().and_then(|r| r.recip()).expect("alpha >= 1");
                let s = sine_from_cosine(&c);
                b.trig.insert(pair, (c.with_precision(bits), s.with_precision(bits)));
            }
        }
        Ok(b)
    }
}

/// `sqrt(1 - c^2)` computed as `sqrt((1 - c)(1 + c))`.
fn sine_from_cosine(c: &Interval) -> Interval {
    let bits = c.precision_bits();
    let one = Interval::from_int(1, bits);
    one.sub(c)
        .mul(&one.add(c))
        .sqrt()
        .unwrap_or_else(|| Interval::from_int(0, bits))
}

fn sqrt_enclosure(r: u64, bits: u32) -> Interval {
    Interval::point(&BigRational::from_integer(BigInt::from(r)), bits + 8)
        .sqrt()
        .expect("positive radicand")
        .with_precision(bits)
}

/// With `auto_radicals`, square roots missing from `b` are computed on the fly.
fn eval_poly(p: &Poly, b: &Bindings, bits: u32, auto_radicals: bool) -> Result<Interval, ScalarError> {
    let mut acc = Interval::from_int(0, bits);
    for (m, q) in p.terms() {
        let mut t = Interval::point(q, bits);
        if m.radical != 1 {
            match b.sqrt.get(&m.radical) {
                Some(r) => t = t.mul(r),
                None if auto_radicals => t = t.mul(&sqrt_enclosure(m.radical, bits)),
                None => return Err(ScalarError::MissingBinding(format!("sqrt({})", m.radical))),
            }
        }
        for pw in &m.powers {
            let (c, s) = b
                .trig
                .get(&pw.pair)
                .ok_or_else(|| ScalarError::MissingBinding(format!("c{}", pw.pair)))?;
            if pw.c > 0 {
                t = t.mul(&c.with_precision(bits).powi(pw.c));
            }
            if pw.s > 0 {
                t = t.mul(&s.with_precision(bits).powi(pw.s as u32));
            }
        }
        acc = acc.add(&t);
    }
    Ok(acc)
}

fn eval_poly_ratio(a: &ExactScalar, b: &Bindings, bits: u32) -> Result<Interval, ScalarError> {
    eval_ratio(a, b, bits, false)
}

fn eval_ratio(a: &ExactScalar, b: &Bindings, bits: u32, auto: bool) -> Result<Interval, ScalarError> {
    let n = eval_poly(a.numerator(), b, bits, auto)?;
    if a.denominator().is_one() {
        return Ok(n);
    }
    let d = eval_poly(a.denominator(), b, bits, auto)?;
    n.div(&d).ok_or(ScalarError::UndecidedSign { bits })
}

/// Encloses the real value of `a` under `bindings`.
pub fn eval_interval(
    a: &ExactScalar,
    bindings: &Bindings,
    cfg: &PrecisionConfig,
) -> Result<Interval, ScalarError> {
    eval_poly_ratio(a, bindings, cfg.precision_bits + 16)
        .map(|iv| iv.with_precision(cfg.precision_bits))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl From<Ordering> for Sign {
    fn from(o: Ordering) -> Self {
        match o {
            Ordering::Less => Sign::Negative,
            Ordering::Equal => Sign::Zero,
            Ordering::Greater => Sign::Positive,
        }
    }
}

/// Sign of `a`: exact zero test first, then doubling precision until the
/// enclosure excludes zero.
pub fn certify_sign(
    a: &ExactScalar,
    env: &SymbolEnv,
    cfg: &PrecisionConfig,
) -> Result<Sign, ScalarError> {
    Evaluator::new(env.clone(), cfg.clone())?.sign(a)
}

/// Evaluation under one [`SymbolEnv`], caching the bindings per precision.
/// Radicals are bound on demand.
#[derive(Debug)]
pub struct Evaluator {
    env: SymbolEnv,
    cfg: PrecisionConfig,
    cache: Mutex<BTreeMap<u32, Arc<Bindings>>>,
}

impl Evaluator {
    pub fn new(env: SymbolEnv, cfg: PrecisionConfig) -> Result<Self, ScalarError> {
        cfg.validate()?;
        Ok(Evaluator {
            env,
            cfg,
            cache: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn env(&self) -> &SymbolEnv {
        &self.env
    }

    /// Adds or replaces a pair definition; cached bindings are dropped.
    pub fn define(&mut self, pair: u32, def: PairDef) {
        self.env.define(pair, def);
        self.cache.get_mut().expect("binding cache poisoned").clear();
    }

    pub fn cfg(&self) -> &PrecisionConfig {
        &self.cfg
    }

    pub fn bindings(&self, bits: u32) -> Result<Arc<Bindings>, ScalarError> {
        if let Some(b) = self.cache.lock().expect("binding cache poisoned").get(&bits) {
            return Ok(b.clone());
        }
        // computed outside the lock; a racing duplicate is harmless
        let b = Arc::new(self.env.bindings(bits)?);
        self.cache
            .lock()
            .expect("binding cache poisoned")
            .entry(bits)
            .or_insert(b.clone());
        Ok(b)
    }

    /// Enclosure at `bits` of precision.
    pub fn interval_at(&self, a: &ExactScalar, bits: u32) -> Result<Interval, ScalarError> {
        let b = self.bindings(bits)?;
        eval_ratio(a, &b, bits + 16, true).map(|iv| iv.with_precision(bits))
    }

    /// Enclosure at the configured precision.
    pub fn interval(&self, a: &ExactScalar) -> Result<Interval, ScalarError> {
        self.interval_at(a, self.cfg.precision_bits)
    }

    pub fn sign(&self, a: &ExactScalar) -> Result<Sign, ScalarError> {
        if a.is_zero() {
            return Ok(Sign::Zero);
        }
        let mut bits = self.cfg.precision_bits;
        loop {
            match self.interval_at(a, bits) {
                Ok(iv) => {
                    if let Some(o) = iv.sign() {
                        return Ok(o.into());
                    }
                }
                // denominator enclosure straddles zero: refine
                Err(ScalarError::UndecidedSign { .. }) => {}
                Err(e) => return Err(e),
            }
            if bits >= self.cfg.max_precision_bits {
                return Err(ScalarError::UndecidedSign { bits });
            }
            bits = (bits * 2).min(self.cfg.max_precision_bits);
        }
    }

    /// True iff the enclosure of `a` lies strictly inside `(-tol, tol)`.
    pub fn within_tolerance(&self, a: &ExactScalar) -> Result<(bool, Interval), ScalarError> {
        let iv = self.interval(a)?;
        let tol = &self.cfg.zero_tolerance;
        Ok((-tol.clone() < iv.lo() && iv.hi() < *tol, iv))
    }
}
