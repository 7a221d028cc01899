//! Cosine chains: `<X,X>_S < <Y,Y>_S` gives `v(Y) <= v(X)` through a
//! sequence of Monotone steps that rotate `Y` onto the line of `X`.
//!
//! The chain is anchored at `Y`: `Y_n = Y` exactly and
//! `Y_{i-1} = c (c Y_i - s J Y_i)` (offsets from `g`), so every step identity
//! holds in the `(c, s)` ring. The far end `Y_0` agrees with `alpha X` only
//! numerically; that single residual is an interval check.

use thiserror::Error;

use crate::geometry::{det3, Frame, SVector, Vector3};
use crate::rules::{verify_derivation, Builder, Conclusion, NodeId, Rule, RuleError, VecId, VectorTable};
use crate::scalar::interval::{arccos, pi};
use crate::scalar::{Evaluator, ExactScalar, Interval, PairDef, ScalarError, Sign, SymbolEnv};

/// Default cap for the linear search over `n`.
pub const DEFAULT_MAX_STEPS: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("chain needs <X,X>_S < <Y,Y>_S, got beta_X = {beta_x}, beta_Y = {beta_y}")]
    NotIncreasing { beta_x: String, beta_y: String },
    #[error("X and Y must be nonzero in S(g)")]
    Degenerate,
    #[error("beta_Y / beta_X = {0} has no usable square root")]
    IrrationalRatio(String),
    #[error("no n <= {0} gives alpha >= 1")]
    StepCapExceeded(u32),
    #[error("X and Y are collinear; use ScaleDown with lambda = {0}")]
    UseScaleDown(String),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

/// Data of one chain, independent of the symbol pairs it will use.
#[derive(Clone, Debug)]
pub struct ChainParams {
    pub beta_x: ExactScalar,
    pub beta_y: ExactScalar,
    pub beta_xy: ExactScalar,
    pub cos_theta: ExactScalar,
    /// Enclosure of `theta` in radians.
    pub theta: Interval,
    /// `sqrt(beta_Y / beta_X)`.
    pub kappa: ExactScalar,
    pub n: u32,
    /// Enclosure of `alpha = kappa cos(theta/n)^n`.
    pub alpha: Interval,
}

impl ChainParams {
    /// `alpha` in the ring extended by rotation pair `rotation`.
    pub fn alpha(&self, rotation: u32) -> ExactScalar {
        &self.kappa * &ExactScalar::cos_sym(rotation).pow(self.n)
    }

    pub fn theta_degrees(&self) -> Interval {
        let bits = self.theta.precision_bits();
        let deg = Interval::from_int(180, bits).div(&pi(bits)).expect("pi is positive");
        self.theta.mul(&deg)
    }
}

/// `kappa cos(theta/n)^n` under a scratch environment.
fn alpha_sign(ev: &Evaluator, cos_theta: &ExactScalar, kappa: &ExactScalar, n: u32) -> Result<(Sign, Interval), ScalarError> {
    let mut env = SymbolEnv::new();
    env.define(
        1,
        PairDef::Rotation {
            cos_theta: cos_theta.clone(),
            steps: n,
        },
    );
    let scratch = Evaluator::new(env, ev.cfg().clone())?;
    let a = kappa * &ExactScalar::cos_sym(1).pow(n);
    let iv = scratch.interval(&a)?;
    Ok((scratch.sign(&(&a - &ExactScalar::one()))?, iv))
}

/// Finds the smallest `n` for which `alpha >= 1` is certified, searching
/// `1..=max_steps`.
pub fn chain_params(x: &SVector, y: &SVector, ev: &Evaluator, max_steps: u32) -> Result<ChainParams, ChainError> {
    if x.is_origin() || y.is_origin() {
        return Err(ChainError::Degenerate);
    }
    let beta_x = x.s_norm2();
    let beta_y = y.s_norm2();
    let beta_xy = x.s_inner(y);
    if ev.sign(&(&beta_y - &beta_x))? != Sign::Positive {
        return Err(ChainError::NotIncreasing {
            beta_x: beta_x.to_string(),
            beta_y: beta_y.to_string(),
        });
    }
    let ratio = beta_y.checked_div(&beta_x)?;
    let kappa = ratio
        .sqrt_rational()
        .map_err(|_| ChainError::IrrationalRatio(ratio.to_string()))?;
    let cos_theta = beta_xy.checked_div(&(&kappa * &beta_x))?;
    if cos_theta.is_one() {
        return Err(ChainError::UseScaleDown(kappa.to_string()));
    }
    let theta = arccos(&ev.interval(&cos_theta)?);
    for n in 1..=max_steps {
        let (sign, alpha) = match alpha_sign(ev, &cos_theta, &kappa, n) {
            // alpha = 1 exactly cannot be certified; the next n clears it
            Err(ScalarError::UndecidedSign { .. }) => continue,
            r => r?,
        };
        if sign != Sign::Negative {
            return Ok(ChainParams {
                beta_x,
                beta_y,
                beta_xy,
                cos_theta,
                theta,
                kappa,
                n,
                alpha,
            });
        }
    }
    Err(ChainError::StepCapExceeded(max_steps))
}

/// The standard example: `X` and `Y` in `S(e1)` with `beta_X = 1`,
/// `beta_Y = 3` and `cos theta = -1/sqrt(3)`.
pub fn worked_example_pair() -> (SVector, SVector) {
    let frame = Frame::standard(1);
    let x = frame.point(&Vector3::from_ints(0, -1, 0)).expect("offset is orthogonal to e1");
    let off = Vector3::new(ExactScalar::zero(), ExactScalar::one(), ExactScalar::sqrt_int(2));
    (x, frame.point(&off).expect("offset is orthogonal to e1"))
}

/// Numbers of the standard example, as enclosures.
#[derive(Clone, Debug)]
pub struct WorkedExample {
    pub theta_degrees: Interval,
    /// `cos(theta/(n-1))^(n-1)`, which falls short.
    pub short_power: Interval,
    /// `cos(theta/n)^n`.
    pub power: Interval,
    pub alpha: Interval,
    pub n: u32,
    /// Vectors from `Y` down to `X`, both included.
    pub chain_length: usize,
}

/// Builds and verifies the standard example's chain.
pub fn worked_example(ev: &mut Evaluator) -> Result<WorkedExample, ChainError> {
    let (x, y) = worked_example_pair();
    let p = chain_params(&x, &y, ev, DEFAULT_MAX_STEPS)?;
    let one = ExactScalar::one();
    let (_, short_power) = alpha_sign(ev, &p.cos_theta, &one, p.n - 1)?;
    let (_, power) = alpha_sign(ev, &p.cos_theta, &one, p.n)?;
    let mut table = VectorTable::new();
    let mut b = Builder::new(&mut table, ev, x.frame().clone())?;
    let chain = build_chain(&mut b, &p, &x, &y)?;
    conclude_lemma2(&mut b, &chain)?;
    let d = b.finish();
    let report = verify_derivation(&d, &table, ev)?;
    if !report.passed {
        let why = report.first_failure().map(|(_, r)| r).unwrap_or_default();
        return Err(RuleError::Precondition(format!("example chain does not verify: {why}")).into());
    }
    Ok(WorkedExample {
        theta_degrees: p.theta_degrees(),
        short_power,
        power,
        alpha: p.alpha,
        n: p.n,
        chain_length: chain.points.len() + 1,
    })
}

/// A constructed chain inside a builder.
#[derive(Clone, Debug)]
pub struct Chain {
    pub params: ChainParams,
    pub rotation: u32,
    pub scale: u32,
    pub x: VecId,
    pub y: VecId,
    /// `Y_0, ..., Y_n`.
    pub points: Vec<SVector>,
    pub point_ids: Vec<VecId>,
    /// One Monotone node per step, `Y_{i-1}` to `Y_i`.
    pub steps: Vec<NodeId>,
    /// `v(alpha X) <= v(X)`.
    pub scale_down: NodeId,
}

/// Allocates fresh symbol pairs, builds `Y_n, ..., Y_0` and emits the step
/// and ScaleDown nodes.
pub fn build_chain(b: &mut Builder<'_>, p: &ChainParams, x: &SVector, y: &SVector) -> Result<Chain, ChainError> {
    let rotation = b.evaluator().env().next_free_pair();
    let scale = rotation + 1;
    b.evaluator_mut().define(
        rotation,
        PairDef::Rotation {
            cos_theta: p.cos_theta.clone(),
            steps: p.n,
        },
    );
    b.evaluator_mut().define(
        scale,
        PairDef::Scale {
            kappa: p.kappa.clone(),
            rotation,
            steps: p.n,
        },
    );
    let c = ExactScalar::cos_sym(rotation);
    let s = ExactScalar::sin_sym(rotation);
    let frame = b.frame().clone();
    // Turn Y back toward X: clockwise if X -> Y is counterclockwise about g.
    let orient = b.evaluator().sign(&det3(frame.g(), &x.offset(), &y.offset()))?;
    let s = if orient == Sign::Negative { -&s } else { s };

    let mut rev = vec![y.clone()];
    for _ in 0..p.n {
        let cur = rev.last().expect("nonempty").offset();
        let turned = frame.quarter_turn(&cur);
        let prev = &cur.scale(&c.square()) - &turned.scale(&(&c * &s));
        rev.push(frame.point(&prev).map_err(RuleError::from)?);
    }
    rev.reverse();
    let points = rev;

    let mut point_ids = Vec::with_capacity(points.len());
    for pt in &points {
        point_ids.push(b.intern(pt.base().clone())?);
    }
    let mut steps = Vec::with_capacity(p.n as usize);
    for i in 1..points.len() {
        let d = points[i].s_sub(&points[i - 1]);
        steps.push(b.apply_monotone(&d, &points[i - 1])?);
    }
    let cs = ExactScalar::cos_sym(scale);
    let lambda = cs.square().recip()?;
    let mu = ExactScalar::sin_sym(scale).checked_div(&cs)?;
    let scale_down = b.apply_scale_down(x, &lambda, &mu)?;
    let x_id = b.intern(x.base().clone())?;
    let y_id = *point_ids.last().expect("nonempty");
    Ok(Chain {
        params: p.clone(),
        rotation,
        scale,
        x: x_id,
        y: y_id,
        points,
        point_ids,
        steps,
        scale_down,
    })
}

/// The composite node `v(Y) <= v(X)`.
pub fn conclude_lemma2(b: &mut Builder<'_>, chain: &Chain) -> Result<NodeId, ChainError> {
    let mut premises = vec![b.root()];
    premises.extend(&chain.steps);
    premises.push(chain.scale_down);
    Ok(b.push(
        Rule::ChainLink {
            x: chain.x,
            y: chain.y,
            rotation: chain.rotation,
            scale: chain.scale,
            points: chain.point_ids.clone(),
        },
        premises,
    )?)
}

/// `v(Y) <= v(X)` by whichever route applies: a ScaleDown when `Y` is a
/// multiple of `X` in `S(g)` with a rational factor, a cosine chain otherwise.
pub fn chain_or_scale(b: &mut Builder<'_>, x: &SVector, y: &SVector, max_steps: u32) -> Result<NodeId, ChainError> {
    match chain_params(x, y, b.evaluator(), max_steps) {
        Ok(p) => {
            let chain = build_chain(b, &p, x, y)?;
            conclude_lemma2(b, &chain)
        }
        Err(ChainError::UseScaleDown(_)) => {
            let lambda = y.s_norm2().checked_div(&x.s_norm2())?.sqrt_rational()?;
            let mu = (&lambda - &ExactScalar::one()).sqrt_rational()?;
            let id = b.apply_scale_down(x, &lambda, &mu)?;
            debug_assert!(matches!(b.node(id).conclusion, Conclusion::Le { .. }));
            Ok(id)
        }
        Err(e) => Err(e),
    }
}
