//! The two top-level constructions: the vanishing step (`v(g + y~) = 0`
//! for every nonzero `y~ ⟂ g`) and the per-seed contradiction built from two
//! applications of it.

use thiserror::Error;

use crate::chain::{chain_or_scale, ChainError};
use crate::geometry::{inner, norm2, Frame, GeometryError, Vector3};
use crate::rules::{Builder, Derivation, NodeId, Rule, RuleError, VectorTable};
use crate::scalar::{Evaluator, ExactScalar, ScalarError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("target {0} lies in the span of the seed")]
    TargetInSeedSpan(String),
    #[error("offset {0} is not orthogonal to the seed")]
    NotOrthogonal(String),
    #[error("seed axis must be 1, 2 or 3, got {0}")]
    BadAxis(usize),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// Tunables for one generator run.
#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub max_chain_steps: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            max_chain_steps: crate::chain::DEFAULT_MAX_STEPS,
        }
    }
}

/// Unit vector orthogonal to both `g` and the nonzero offset `y`.
fn unit_normal(frame: &Frame, y: &Vector3) -> Result<Vector3, PipelineError> {
    let n = frame.g().cross(y);
    let len = norm2(&n).sqrt_rational()?;
    Ok(n.div(&len)?)
}

/// The points `A± = g + y~ ± sqrt(1 + |y~|^2) z`, for which
/// `s_inner(A+, A-) = -1` and `w_S(A+, A-) = g + y~`.
pub fn a_pair(frame: &Frame, y: &Vector3, z: &Vector3) -> Result<[Vector3; 2], PipelineError> {
    let r = (&ExactScalar::one() + &norm2(y)).sqrt_rational()?;
    let rz = z.scale(&r);
    let g = frame.g();
    Ok([&(g + y) + &rz, &(g + y) - &rz])
}

/// Derives `v(g + y) = 0` for nonzero `y ⟂ g`. Returns the closing node.
pub fn vanishing(b: &mut Builder<'_>, y: &Vector3, cfg: &PipelineConfig) -> Result<NodeId, PipelineError> {
    let frame = b.frame().clone();
    if !inner(y, frame.g()).is_zero() {
        return Err(PipelineError::NotOrthogonal(y.to_string()));
    }
    if y.is_zero() {
        return Err(PipelineError::TargetInSeedSpan(frame.g().to_string()));
    }
    let z = unit_normal(&frame, y)?;
    let [ap, am] = a_pair(&frame, y, &z)?;
    let (sap, sam) = (frame.point(&(&ap - frame.g()))?, frame.point(&(&am - frame.g()))?);
    let sum = b.apply_sum_rule(&sap, &sam)?;

    let split = b.apply_case_split(&z)?;
    let (plus, minus) = match b.node(split).rule {
        Rule::CaseSplit { plus, minus, .. } => (plus, minus),
        _ => unreachable!("apply_case_split builds a CaseSplit"),
    };
    let mut arms: [Vec<NodeId>; 2] = [Vec::new(), Vec::new()];
    for (arm, members) in arms.iter_mut().enumerate() {
        let assumption = b.open_arm(split, arm as u8)?;
        // arm 0 sets v(g + z) = 1, so g - z is the 0-valued end
        let zero = if arm == 0 { minus } else { plus };
        let sx = b.s_vector(zero)?;
        let up = chain_or_scale(b, &sx, &sap, cfg.max_chain_steps)?;
        let down = chain_or_scale(b, &sx, &sam, cfg.max_chain_steps)?;
        members.extend([assumption, up, down]);
        b.close_arm();
    }
    let target = b.intern(frame.g() + y)?;
    Ok(b.push(Rule::Lemma3Conclusion { target, split, arms }, vec![split, sum])?)
}

/// `y~` with `h ~ x + y~` in `S(x)`; a target orthogonal to `x` is first
/// replaced by `h + x`.
pub fn target_offset(frame: &Frame, h: &Vector3) -> Result<Vector3, PipelineError> {
    let x = frame.g();
    let mut t = h.clone();
    if inner(&t, x).is_zero() {
        t = &t + x;
    }
    let k = inner(&t, x);
    let y = &t.div(&k)? - x;
    if y.is_zero() {
        return Err(PipelineError::TargetInSeedSpan(h.to_string()));
    }
    Ok(y)
}

/// Default target for seed axis `k`: `e_k + e_{k+1}`.
pub fn default_target(k: usize) -> Vector3 {
    &Vector3::basis(k) + &Vector3::basis(k % 3 + 1)
}

/// The full derivation for seed `e_k`: `v(x + y~) = 0`, `v(x - alpha y~) = 0`,
/// and the split `v(x + y~) + v(x - alpha y~) = 1` close to a contradiction.
pub fn seed_contradiction(
    table: &mut VectorTable,
    ev: &mut Evaluator,
    k: usize,
    target: &Vector3,
    cfg: &PipelineConfig,
) -> Result<Derivation, PipelineError> {
    if !(1..=3).contains(&k) {
        return Err(PipelineError::BadAxis(k));
    }
    let frame = Frame::standard(k);
    let y = target_offset(&frame, target)?;
    let alpha = norm2(&y).recip()?;
    let mut b = Builder::new(table, ev, frame)?;
    let first = vanishing(&mut b, &y, cfg)?;
    let second = vanishing(&mut b, &-&y.scale(&alpha), cfg)?;
    let split = b.apply_case_split(&y)?;
    let mut arms: [Vec<NodeId>; 2] = [Vec::new(), Vec::new()];
    for (arm, members) in arms.iter_mut().enumerate() {
        members.push(b.open_arm(split, arm as u8)?);
        b.close_arm();
    }
    b.push(Rule::TheoremContradiction { split, arms }, vec![split, first, second])?;
    Ok(b.finish())
}
