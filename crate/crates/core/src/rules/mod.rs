//! Derivation engine: valuation facts, the inference rules that produce them,
//! and the exact side conditions each rule carries.
//!
//! A [`Derivation`] is a list of [`Node`]s in topological order. Every node
//! names its vectors by [`VecId`] in a shared [`VectorTable`]; the verifier
//! recomputes every auxiliary vector from the node's primary inputs, so the
//! stored table is never trusted beyond projective equality.

mod build;
mod checks;
mod logic;
mod verify;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{projectively_equal, Frame, GeometryError, Vector3};
use crate::scalar::{Evaluator, ExactScalar, ScalarError};

pub use build::Builder;
pub use checks::{sum_rule_aux, SumAux};
pub use logic::{entails, Assignment, LogicError};
pub use verify::{verify_derivation, ConditionOutcome, NodeReport, VerificationReport};

pub type VecId = usize;
pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("malformed derivation: {0}")]
    Structure(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// How a side condition is decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    /// Exact zero test in the scalar ring.
    Exact,
    /// Certified interval evaluation.
    Interval,
}

impl CheckKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::Exact => "exact",
            CheckKind::Interval => "interval",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideCondition {
    pub kind: CheckKind,
    pub label: String,
}

/// What a node establishes about the valuation `v`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Conclusion {
    /// `v(x) = value` for each listed pair.
    Facts(Vec<(VecId, u8)>),
    /// `sum coeff * v(x) = rhs`, terms sorted by id with nonzero coefficients.
    Linear { terms: Vec<(VecId, i64)>, rhs: i64 },
    /// `v(lo) <= v(hi)`.
    Le { lo: VecId, hi: VecId },
    Contradiction,
}

impl Conclusion {
    pub fn linear(terms: impl IntoIterator<Item = (VecId, i64)>, rhs: i64) -> Conclusion {
        let mut merged: Vec<(VecId, i64)> = Vec::new();
        let mut all: Vec<(VecId, i64)> = terms.into_iter().collect();
        all.sort_unstable();
        for (id, c) in all {
            match merged.last_mut() {
                Some((last, acc)) if *last == id => *acc += c,
                _ => merged.push((id, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0);
        Conclusion::Linear { terms: merged, rhs }
    }

    pub fn fact(id: VecId, value: u8) -> Conclusion {
        Conclusion::Facts(vec![(id, value)])
    }

    /// Vector ids mentioned.
    pub fn vectors(&self) -> Vec<VecId> {
        match self {
            Conclusion::Facts(fs) => fs.iter().map(|&(v, _)| v).collect(),
            Conclusion::Linear { terms, .. } => terms.iter().map(|&(v, _)| v).collect(),
            Conclusion::Le { lo, hi } => vec![*lo, *hi],
            Conclusion::Contradiction => Vec::new(),
        }
    }

    pub fn has_fact(&self, id: VecId, value: u8) -> bool {
        matches!(self, Conclusion::Facts(fs) if fs.contains(&(id, value)))
    }
}

impl fmt::Display for Conclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conclusion::Facts(fs) => {
                let parts: Vec<String> = fs.iter().map(|(v, b)| format!("v(v{v}) = {b}")).collect();
                write!(f, "{}", parts.join(", "))
            }
            Conclusion::Linear { terms, rhs } => {
                let parts: Vec<String> = terms
                    .iter()
                    .map(|(v, c)| match c {
                        1 => format!("v(v{v})"),
                        -1 => format!("-v(v{v})"),
                        c => format!("{c}*v(v{v})"),
                    })
                    .collect();
                write!(f, "{} = {rhs}", parts.join(" + "))
            }
            Conclusion::Le { lo, hi } => write!(f, "v(v{lo}) <= v(v{hi})"),
            Conclusion::Contradiction => write!(f, "contradiction"),
        }
    }
}

/// Auxiliary vectors of a Monotone application beyond its inputs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonotoneParts {
    /// `X + Y` in `S(g)`.
    pub sum: VecId,
    /// `W = tX + Y`.
    pub big_w: VecId,
    pub z: VecId,
    pub u: VecId,
    pub m: VecId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum Rule {
    /// Root fact `v(vector) = 1`.
    Assumption { vector: VecId },
    /// One arm of a case split, assumed inside that arm only.
    BranchAssumption { split: NodeId, arm: u8 },
    TripleSum { a: VecId, b: VecId, c: VecId },
    OrthForce { x: VecId, y: VecId, u: VecId },
    Scale { from: VecId, to: VecId },
    SumRule { x: VecId, y: VecId, w: VecId, z: VecId, u: VecId, m: VecId },
    /// `parts == None` is the degenerate `X = 0` case.
    Monotone { x: VecId, y: VecId, parts: Option<MonotoneParts> },
    ScaleDown {
        x: VecId,
        #[serde(with = "crate::certificate::scalar_text")]
        lambda: ExactScalar,
        aux: VecId,
        mid: VecId,
        diff: VecId,
        target: VecId,
    },
    CaseSplit { y: VecId, plus: VecId, minus: VecId, z: VecId, u: VecId, m: VecId },
    ChainLink {
        x: VecId,
        y: VecId,
        rotation: u32,
        scale: u32,
        points: Vec<VecId>,
    },
    Lemma3Conclusion { target: VecId, split: NodeId, arms: [Vec<NodeId>; 2] },
    TheoremContradiction { split: NodeId, arms: [Vec<NodeId>; 2] },
}

impl Rule {
    pub fn kind(&self) -> &'static str {
        match self {
            Rule::Assumption { .. } => "Assumption",
            Rule::BranchAssumption { .. } => "BranchAssumption",
            Rule::TripleSum { .. } => "TripleSum",
            Rule::OrthForce { .. } => "OrthForce",
            Rule::Scale { .. } => "Scale",
            Rule::SumRule { .. } => "SumRule",
            Rule::Monotone { .. } => "Monotone",
            Rule::ScaleDown { .. } => "ScaleDown",
            Rule::CaseSplit { .. } => "CaseSplit",
            Rule::ChainLink { .. } => "ChainLink",
            Rule::Lemma3Conclusion { .. } => "Lemma3Conclusion",
            Rule::TheoremContradiction { .. } => "TheoremContradiction",
        }
    }

    /// Every vector id the rule refers to.
    pub fn vectors(&self) -> Vec<VecId> {
        match self {
            Rule::Assumption { vector } => vec![*vector],
            Rule::BranchAssumption { .. } => Vec::new(),
            Rule::TripleSum { a, b, c } => vec![*a, *b, *c],
            Rule::OrthForce { x, y, u } => vec![*x, *y, *u],
            Rule::Scale { from, to } => vec![*from, *to],
            Rule::SumRule { x, y, w, z, u, m } => vec![*x, *y, *w, *z, *u, *m],
            Rule::Monotone { x, y, parts } => {
                let mut v = vec![*x, *y];
                if let Some(p) = parts {
                    v.extend([p.sum, p.big_w, p.z, p.u, p.m]);
                }
                v
            }
            Rule::ScaleDown {
                x,
                aux,
                mid,
                diff,
                target,
                ..
            } => vec![*x, *aux, *mid, *diff, *target],
            Rule::CaseSplit {
                y,
                plus,
                minus,
                z,
                u,
                m,
            } => vec![*y, *plus, *minus, *z, *u, *m],
            Rule::ChainLink { x, y, points, .. } => {
                let mut v = vec![*x, *y];
                v.extend(points.iter().copied());
                v
            }
            Rule::Lemma3Conclusion { target, .. } => vec![*target],
            Rule::TheoremContradiction { .. } => Vec::new(),
        }
    }

    /// Node ids the rule refers to outside its premise list.
    pub fn node_refs(&self) -> Vec<NodeId> {
        match self {
            Rule::BranchAssumption { split, .. } => vec![*split],
            Rule::Lemma3Conclusion { split, arms, .. } | Rule::TheoremContradiction { split, arms } => {
                let mut v = vec![*split];
                v.extend(arms.iter().flatten().copied());
                v
            }
            _ => Vec::new(),
        }
    }
}

/// One inference.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub rule: Rule,
    pub premises: Vec<NodeId>,
    /// Enclosing case-split arms, outermost first.
    pub context: Vec<(NodeId, u8)>,
    pub side_conditions: Vec<SideCondition>,
    pub conclusion: Conclusion,
}

/// A derivation rooted at `v(seed) = 1`, with `S(g)` taken for `g = seed`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub frame: Frame,
    pub seed: VecId,
    pub nodes: Vec<Node>,
}

impl Derivation {
    /// Conclusion of the last node, if any.
    pub fn final_conclusion(&self) -> Option<&Conclusion> {
        self.nodes.last().map(|n| &n.conclusion)
    }
}

/// Vectors shared by all derivations of a certificate. Insertion through
/// [`VectorTable::intern`] deduplicates projectively.
#[derive(Clone, Debug, Default)]
pub struct VectorTable {
    vectors: Vec<Vector3>,
    buckets: HashMap<[i64; 3], Vec<VecId>>,
}

const FINGERPRINT_BITS: u32 = 64;
const FINGERPRINT_GRID: f64 = 1e6;

impl VectorTable {
    pub fn new() -> Self {
        VectorTable::default()
    }

    /// Table with the given vectors in order; no deduplication.
    pub fn from_vectors(vectors: Vec<Vector3>) -> Self {
        VectorTable {
            vectors,
            buckets: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: VecId) -> Result<&Vector3, RuleError> {
        self.vectors
            .get(id)
            .ok_or_else(|| RuleError::Structure(format!("unknown vector id v{id}")))
    }

    pub fn vectors(&self) -> &[Vector3] {
        &self.vectors
    }

    /// Id of a vector projectively equal to `v`, inserting `v` if none exists.
    pub fn intern(&mut self, v: Vector3, ev: &Evaluator) -> Result<VecId, RuleError> {
        if v.is_zero() {
            return Err(GeometryError::ZeroVector.into());
        }
        if self.buckets.is_empty() && !self.vectors.is_empty() {
            self.reindex(ev)?;
        }
        let key = fingerprint(&v, ev)?;
        for dk in neighbours(key) {
            if let Some(ids) = self.buckets.get(&dk) {
                for &id in ids {
                    if projectively_equal(&self.vectors[id], &v)? {
                        return Ok(id);
                    }
                }
            }
        }
        let id = self.vectors.len();
        self.vectors.push(v);
        self.buckets.entry(key).or_default().push(id);
        Ok(id)
    }

    fn reindex(&mut self, ev: &Evaluator) -> Result<(), RuleError> {
        for (id, v) in self.vectors.iter().enumerate() {
            let key = fingerprint(v, ev)?;
            self.buckets.entry(key).or_default().push(id);
        }
        Ok(())
    }
}

/// Unit direction of `v` on a grid; `v` and `-v` probe opposite keys.
fn fingerprint(v: &Vector3, ev: &Evaluator) -> Result<[i64; 3], RuleError> {
    let mut f = [0f64; 3];
    for (slot, c) in f.iter_mut().zip(v.scalars()) {
        *slot = ev.interval_at(c, FINGERPRINT_BITS)?.mid_f64();
    }
    let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok([0, 0, 0]);
    }
    Ok(f.map(|x| (x / norm * FINGERPRINT_GRID).round() as i64))
}

fn neighbours(k: [i64; 3]) -> impl Iterator<Item = [i64; 3]> {
    let flip = k.map(|x| -x);
    [k, flip]
        .into_iter()
        .flat_map(|c| (0..27).map(move |i| [c[0] + i % 3 - 1, c[1] + (i / 3) % 3 - 1, c[2] + i / 9 - 1]))
}

#[cfg(test)]
mod tests;
