//! Vectors in a real 3-space with a fixed orthonormal frame, the affine plane
//! `S(g)` with its Parseval inner product, and the `w` combinator.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use thiserror::Error;

use crate::scalar::{ExactScalar, ScalarError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("zero vector where a nonzero vector is required")]
    ZeroVector,
    #[error("vectors are not orthogonal")]
    NotOrthogonal,
    #[error("vector is not in S(g): <X, g> = {0}")]
    NotInPlane(String),
    #[error("frame is not orthonormal: {0}")]
    BadFrame(String),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// Coordinates relative to the standard orthonormal basis `e1, e2, e3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vector3 {
    pub coords: [ExactScalar; 3],
}

impl Vector3 {
    pub fn new(x: ExactScalar, y: ExactScalar, z: ExactScalar) -> Self {
        Vector3 { coords: [x, y, z] }
    }

    pub fn from_ints(x: i64, y: i64, z: i64) -> Self {
        Vector3::new(x.into(), y.into(), z.into())
    }

    pub fn zero() -> Self {
        Vector3::from_ints(0, 0, 0)
    }

    /// Standard basis vector `e_k`, `k` in `1..=3`.
    pub fn basis(k: usize) -> Self {
        assert!((1..=3).contains(&k), "basis index out of range");
        let mut v = Vector3::zero();
        v.coords[k - 1] = ExactScalar::one();
        v
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(ExactScalar::is_zero)
    }

    pub fn scale(&self, k: &ExactScalar) -> Vector3 {
        Vector3 {
            coords: [&self.coords[0] * k, &self.coords[1] * k, &self.coords[2] * k],
        }
    }

    /// Divides by a scalar certified nonzero.
    pub fn div(&self, k: &ExactScalar) -> Result<Vector3, ScalarError> {
        let inv = k.recip()?;
        Ok(self.scale(&inv))
    }

    /// Leading (first nonzero) coordinate, if it is the one that normal
    /// form pins to 1: it is free of chain symbols, or it is the only
    /// nonzero coordinate. Dividing by a symbol expression would trade a
    /// polynomial vector for a much larger rational one.
    fn pinned_lead(&self) -> Option<&ExactScalar> {
        let mut nonzero = self.coords.iter().filter(|c| !c.is_zero());
        let lead = nonzero.next()?;
        (lead.is_symbol_free() || nonzero.next().is_none()).then_some(lead)
    }

    /// Representative whose pinned leading coordinate is 1.
    pub fn normal_form(&self) -> Result<Vector3, ScalarError> {
        match self.pinned_lead() {
            Some(lead) if !lead.is_one() => {
                let q = |x: &ExactScalar| if x.is_zero() { Ok(x.clone()) } else { x.checked_div(lead) };
                let [a, b, c] = &self.coords;
                Ok(Vector3::new(q(a)?, q(b)?, q(c)?))
            }
            _ => Ok(self.clone()),
        }
    }

    pub fn is_normal(&self) -> bool {
        self.pinned_lead().is_none_or(ExactScalar::is_one) && !self.is_zero()
    }

    pub fn cross(&self, other: &Vector3) -> Vector3 {
        let [a0, a1, a2] = &self.coords;
        let [b0, b1, b2] = &other.coords;
        Vector3::new(
            &(a1 * b2) - &(a2 * b1),
            &(a2 * b0) - &(a0 * b2),
            &(a0 * b1) - &(a1 * b0),
        )
    }

    pub fn scalars(&self) -> impl Iterator<Item = &ExactScalar> {
        self.coords.iter()
    }
}

impl<'a> Add<&'a Vector3> for &'a Vector3 {
    type Output = Vector3;
    fn add(self, rhs: &Vector3) -> Vector3 {
        Vector3 {
            coords: [
                &self.coords[0] + &rhs.coords[0],
                &self.coords[1] + &rhs.coords[1],
                &self.coords[2] + &rhs.coords[2],
            ],
        }
    }
}

impl<'a> Sub<&'a Vector3> for &'a Vector3 {
    type Output = Vector3;
    fn sub(self, rhs: &Vector3) -> Vector3 {
        Vector3 {
            coords: [
                &self.coords[0] - &rhs.coords[0],
                &self.coords[1] - &rhs.coords[1],
                &self.coords[2] - &rhs.coords[2],
            ],
        }
    }
}

impl Neg for &Vector3 {
    type Output = Vector3;
    fn neg(self) -> Vector3 {
        self.scale(&ExactScalar::int(-1))
    }
}

impl fmt::Display for Vector3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.coords[0], self.coords[1], self.coords[2])
    }
}

/// Ambient inner product.
pub fn inner(u: &Vector3, v: &Vector3) -> ExactScalar {
    let mut acc = &u.coords[0] * &v.coords[0];
    acc = &acc + &(&u.coords[1] * &v.coords[1]);
    &acc + &(&u.coords[2] * &v.coords[2])
}

pub fn norm2(u: &Vector3) -> ExactScalar {
    inner(u, u)
}

/// `det[a, b, c]`, i.e. `<a, b x c>`.
pub fn det3(a: &Vector3, b: &Vector3, c: &Vector3) -> ExactScalar {
    inner(a, &b.cross(c))
}

/// Orthonormal frame `{g, h1, h2}`; `g` is the distinguished unit vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    g: Vector3,
    h1: Vector3,
    h2: Vector3,
}

impl Frame {
    pub fn new(g: Vector3, h1: Vector3, h2: Vector3) -> Result<Self, GeometryError> {
        let vs = [&g, &h1, &h2];
        for (i, a) in vs.iter().enumerate() {
            if !norm2(a).is_one() {
                return Err(GeometryError::BadFrame(format!("entry {} is not a unit vector", i + 1)));
            }
            for b in &vs[i + 1..] {
                if !inner(a, b).is_zero() {
                    return Err(GeometryError::BadFrame("entries are not orthogonal".into()));
                }
            }
        }
        Ok(Frame { g, h1, h2 })
    }

    /// `{e_k, e_{k+1}, e_{k+2}}` with indices taken cyclically, `k` in `1..=3`.
    pub fn standard(k: usize) -> Self {
        let idx = |j: usize| (k - 1 + j) % 3 + 1;
        Frame {
            g: Vector3::basis(idx(0)),
            h1: Vector3::basis(idx(1)),
            h2: Vector3::basis(idx(2)),
        }
    }

    pub fn g(&self) -> &Vector3 {
        &self.g
    }

    pub fn h1(&self) -> &Vector3 {
        &self.h1
    }

    pub fn h2(&self) -> &Vector3 {
        &self.h2
    }

    /// `g x v`: rotates the plane orthogonal to `g` by a quarter turn.
    pub fn quarter_turn(&self, v: &Vector3) -> Vector3 {
        self.g.cross(v)
    }

    /// Parseval form on `S(g)`: `<a,h1><b,h1> + <a,h2><b,h2>`.
    pub fn s_inner(&self, a: &Vector3, b: &Vector3) -> ExactScalar {
        &(&inner(a, &self.h1) * &inner(b, &self.h1)) + &(&inner(a, &self.h2) * &inner(b, &self.h2))
    }

    pub fn s_norm2(&self, a: &Vector3) -> ExactScalar {
        self.s_inner(a, a)
    }

    pub fn contains(&self, v: &Vector3) -> bool {
        inner(v, &self.g).is_one()
    }

    /// The element of `S(g)` on the line through `v`: `v / <v, g>`.
    pub fn normalize_into(&self, v: &Vector3) -> Result<SVector, GeometryError> {
        let k = inner(v, &self.g);
        if k.is_zero() {
            return Err(GeometryError::NotInPlane(k.to_string()));
        }
        Ok(SVector {
            base: v.div(&k)?,
            frame: self.clone(),
        })
    }

    /// `g + offset` for `offset` orthogonal to `g`.
    pub fn point(&self, offset: &Vector3) -> Result<SVector, GeometryError> {
        SVector::new(&self.g + offset, self.clone())
    }
}

/// Point of the affine plane `S(g) = {h : <g, h> = 1}`, viewed as a vector
/// space with origin `g`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SVector {
    base: Vector3,
    frame: Frame,
}

impl SVector {
    pub fn new(base: Vector3, frame: Frame) -> Result<Self, GeometryError> {
        let k = inner(&base, frame.g());
        if !k.is_one() {
            return Err(GeometryError::NotInPlane(k.to_string()));
        }
        Ok(SVector { base, frame })
    }

    pub fn base(&self) -> &Vector3 {
        &self.base
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn into_base(self) -> Vector3 {
        self.base
    }

    /// `X - g`, the position relative to the origin of `S(g)`.
    pub fn offset(&self) -> Vector3 {
        &self.base - self.frame.g()
    }

    /// True iff this is the origin `g`.
    pub fn is_origin(&self) -> bool {
        self.offset().is_zero()
    }

    pub fn s_inner(&self, other: &SVector) -> ExactScalar {
        self.frame.s_inner(&self.base, &other.base)
    }

    pub fn s_norm2(&self) -> ExactScalar {
        self.frame.s_norm2(&self.base)
    }

    /// Vector-space sum in `S(g)`: `g + (X - g) + (Y - g)`.
    pub fn s_add(&self, other: &SVector) -> SVector {
        self.shifted(&other.offset())
    }

    /// Vector-space difference in `S(g)`: `g + (X - g) - (Y - g)`.
    pub fn s_sub(&self, other: &SVector) -> SVector {
        self.shifted(&-&other.offset())
    }

    /// Scalar multiple in `S(g)`: `g + k (X - g)`.
    pub fn s_scale(&self, k: &ExactScalar) -> SVector {
        SVector {
            base: self.frame.g() + &self.offset().scale(k),
            frame: self.frame.clone(),
        }
    }

    fn shifted(&self, delta: &Vector3) -> SVector {
        SVector {
            base: &self.base + delta,
            frame: self.frame.clone(),
        }
    }
}

/// Which norms feed the `w` combinator.
#[derive(Clone, Copy, Debug)]
pub enum Form<'a> {
    Ambient,
    Plane(&'a Frame),
}

/// `(2 + |x|^2 + |y|^2)^-1 [(1 + |y|^2) x + (1 + |x|^2) y]` with the norms of
/// the chosen form.
pub fn w_combine(x: &Vector3, y: &Vector3, form: Form<'_>) -> Result<Vector3, ScalarError> {
    let (nx, ny) = match form {
        Form::Ambient => (norm2(x), norm2(y)),
        Form::Plane(f) => (f.s_norm2(x), f.s_norm2(y)),
    };
    let one = ExactScalar::one();
    let d = &(&ExactScalar::int(2) + &nx) + &ny;
    let combo = &x.scale(&(&one + &ny)) + &y.scale(&(&one + &nx));
    combo.div(&d)
}

/// `w_S(X, Y)` as an element of `S(g)`.
pub fn w_s(x: &SVector, y: &SVector) -> Result<SVector, GeometryError> {
    let w = w_combine(x.base(), y.base(), Form::Plane(x.frame()))?;
    Ok(SVector {
        base: w,
        frame: x.frame().clone(),
    })
}

/// Unnormalized third member of an orthogonal triple: `u x v`.
pub fn complete_triple(u: &Vector3, v: &Vector3) -> Result<Vector3, GeometryError> {
    if u.is_zero() || v.is_zero() {
        return Err(GeometryError::ZeroVector);
    }
    if !inner(u, v).is_zero() {
        return Err(GeometryError::NotOrthogonal);
    }
    Ok(u.cross(v))
}

/// True iff `u = k v` for a nonzero scalar `k`, decided by the 2x2 minors.
pub fn projectively_equal(u: &Vector3, v: &Vector3) -> Result<bool, GeometryError> {
    if u.is_zero() || v.is_zero() {
        return Err(GeometryError::ZeroVector);
    }
    Ok(u.cross(v).is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::parse_scalar;

    fn v(a: &str, b: &str, c: &str) -> Vector3 {
        Vector3::new(parse_scalar(a).unwrap(), parse_scalar(b).unwrap(), parse_scalar(c).unwrap())
    }

    #[test]
    fn inner_examples() {
        let f = Frame::standard(1);
        let (g, z) = (f.g().clone(), f.h2().clone());
        assert!(inner(&g, &g).is_one());
        assert!(inner(&(&g + &z), &(&g - &z)).is_zero());
        let big = v("1", "1", "sqrt(2)");
        assert!(inner(&big, &v("1", "-1", "0")).is_zero());
    }

    #[test]
    fn s_inner_examples() {
        let f = Frame::standard(1);
        assert!(f.s_inner(f.g(), f.g()).is_zero());
        let y = SVector::new(v("1", "1", "sqrt(2)"), f.clone()).unwrap();
        let x = SVector::new(v("1", "-1", "0"), f.clone()).unwrap();
        assert_eq!(y.s_norm2(), ExactScalar::int(3));
        assert_eq!(x.s_inner(&y), ExactScalar::int(-1));
        assert_eq!(x.s_norm2(), ExactScalar::int(1));
    }

    #[test]
    fn w_examples() {
        let x = Vector3::basis(1);
        let y = Vector3::basis(2);
        let w = w_combine(&x, &y, Form::Ambient).unwrap();
        assert_eq!(w, (&x + &y).scale(&ExactScalar::ratio(1, 2)));

        let f = Frame::standard(1);
        let g = f.g().clone();
        let z = f.h2().clone();
        let a = SVector::new(&g + &z, f.clone()).unwrap();
        let b = SVector::new(&g - &z, f.clone()).unwrap();
        assert_eq!(w_s(&a, &b).unwrap().base(), &g);

        // Equal S-norms make w_S the midpoint: with A = g + y/2 ± sqrt(1 + |y|^2/4) z
        // it lands on g + y/2, so reaching g + y takes A = g + y ± sqrt(1 + |y|^2) z.
        let yt = Vector3::basis(2);
        let half = &g + &yt.scale(&ExactScalar::ratio(1, 2));
        let r = ExactScalar::ratio(5, 4).sqrt_rational().unwrap();
        let ap = SVector::new(&half + &z.scale(&r), f.clone()).unwrap();
        let am = SVector::new(&half - &z.scale(&r), f.clone()).unwrap();
        assert_eq!(ap.s_inner(&am), ExactScalar::int(-1));
        assert_eq!(w_s(&ap, &am).unwrap().base(), &half);

        let full = &g + &yt;
        let r = ExactScalar::int(2).sqrt_rational().unwrap();
        let ap = SVector::new(&full + &z.scale(&r), f.clone()).unwrap();
        let am = SVector::new(&full - &z.scale(&r), f.clone()).unwrap();
        assert_eq!(ap.s_inner(&am), ExactScalar::int(-1));
        assert_eq!(ap.s_norm2(), ExactScalar::int(3));
        assert_eq!(w_s(&ap, &am).unwrap().base(), &full);
    }

    #[test]
    fn complete_triple_cases() {
        let c = complete_triple(&Vector3::basis(1), &Vector3::basis(2)).unwrap();
        assert!(projectively_equal(&c, &Vector3::basis(3)).unwrap());
        let f = Frame::standard(1);
        let c = complete_triple(&(f.g() + f.h2()), &(f.g() - f.h2())).unwrap();
        assert!(projectively_equal(&c, f.h1()).unwrap());
        assert_eq!(complete_triple(&Vector3::basis(1), &Vector3::zero()), Err(GeometryError::ZeroVector));
        assert_eq!(
            complete_triple(&Vector3::basis(1), &Vector3::from_ints(1, 1, 0)),
            Err(GeometryError::NotOrthogonal)
        );
    }

    #[test]
    fn projective_equality() {
        assert!(projectively_equal(&Vector3::from_ints(1, 0, 0), &Vector3::from_ints(-2, 0, 0)).unwrap());
        assert!(!projectively_equal(&Vector3::from_ints(1, 1, 0), &Vector3::from_ints(1, -1, 0)).unwrap());
        assert!(projectively_equal(&v("1", "1", "sqrt(2)"), &v("1/2", "1/2", "sqrt(2)/2")).unwrap());
        assert!(projectively_equal(&Vector3::zero(), &Vector3::basis(1)).is_err());
    }

    #[test]
    fn normal_forms() {
        assert_eq!(v("0", "-2", "sqrt(2)").normal_form().unwrap(), v("0", "1", "-sqrt(2)/2"));
        assert!(v("0", "1", "-sqrt(2)/2").is_normal());
        assert!(!v("0", "-1", "0").is_normal());
        // a lone symbol coordinate is still pinned
        assert_eq!(v("0", "c1*c1", "0").normal_form().unwrap(), Vector3::basis(2));
        // a symbol lead next to other coordinates is left alone
        let w = v("c1", "1", "0");
        assert!(w.is_normal());
        assert_eq!(w.normal_form().unwrap(), w);
        assert!(!Vector3::zero().is_normal());
    }

    #[test]
    fn frame_validation() {
        assert!(Frame::new(Vector3::basis(1), Vector3::basis(2), Vector3::basis(3)).is_ok());
        assert!(Frame::new(Vector3::basis(1), Vector3::from_ints(1, 1, 0), Vector3::basis(3)).is_err());
        let f = Frame::standard(3);
        assert_eq!(f.g(), &Vector3::basis(3));
        assert_eq!(f.h1(), &Vector3::basis(1));
        assert!(f.normalize_into(&Vector3::basis(1)).is_err());
        let p = f.normalize_into(&Vector3::from_ints(1, 0, 2)).unwrap();
        assert_eq!(p.base(), &v("1/2", "0", "1"));
    }
}
