//! Expansion of derivations into orthogonal triples: the finite, branch-free
//! vector configuration behind a certificate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{inner, Vector3};
use crate::pipeline::{seed_contradiction, PipelineConfig, PipelineError};
use crate::rules::{verify_derivation, Derivation, NodeId, Rule, RuleError, VecId, VectorTable};
use crate::scalar::Evaluator;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("derivation for seed v{seed} does not verify: {reason}")]
    Unverified { seed: VecId, reason: String },
    #[error("triple {0:?} is not pairwise orthogonal")]
    NotOrthogonal([VecId; 3]),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Where a triple came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    /// The frame triple `{e1, e2, e3}`.
    Base,
    /// Node `node` of the derivation with index `derivation`.
    Node { derivation: usize, node: NodeId },
}

/// Projective points with their orthogonal triples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextSet {
    /// Representative vector id of each point.
    pub points: Vec<VecId>,
    /// Every vector id merged into each point (the representative first).
    pub members: Vec<Vec<VecId>>,
    /// Sorted point indices, sorted and deduplicated.
    pub triples: Vec<[usize; 3]>,
    pub provenance: Vec<Vec<Origin>>,
}

impl ContextSet {
    pub fn point_of(&self, v: VecId) -> Option<usize> {
        self.members.iter().position(|m| m.contains(&v))
    }
}

/// Triples of one node, in vector ids.
pub fn node_triples(d: &Derivation, node: NodeId) -> Vec<[VecId; 3]> {
    let g = d.seed;
    let sum = |x, y, w, z, u, m| vec![[x, y, u], [w, z, u], [z, g, m]];
    match &d.nodes[node].rule {
        Rule::TripleSum { a, b, c } => vec![[*a, *b, *c]],
        Rule::OrthForce { x, y, u } => vec![[*x, *y, *u]],
        Rule::SumRule { x, y, w, z, u, m } => sum(*x, *y, *w, *z, *u, *m),
        Rule::Monotone { y, parts: Some(p), .. } => sum(p.big_w, p.sum, *y, p.z, p.u, p.m),
        Rule::CaseSplit { plus, minus, z, u, m, .. } => sum(*plus, *minus, g, *z, *u, *m),
        _ => Vec::new(),
    }
}

/// Identifications made numerically: a chain's far end and the scaled `X`.
pub fn identifications(d: &Derivation) -> Vec<(VecId, VecId)> {
    let mut out = Vec::new();
    for node in &d.nodes {
        if let Rule::ChainLink { points, .. } = &node.rule {
            for &p in &node.premises {
                if let Rule::ScaleDown { target, .. } = &d.nodes[p].rule {
                    out.push((points[0], *target));
                }
            }
        }
    }
    out
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut i = i;
        while self.0[i] != r {
            let next = self.0[i];
            self.0[i] = r;
            i = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // smaller id stays the representative
        if ra < rb {
            self.0[rb] = ra;
        } else {
            self.0[ra] = rb;
        }
    }
}

/// Builds the context set from raw triples and identifications, all in
/// vector ids of one table.
pub fn collect(raw: &[([VecId; 3], Origin)], equal: &[(VecId, VecId)]) -> ContextSet {
    let n = raw
        .iter()
        .flat_map(|(t, _)| t.iter().copied())
        .chain(equal.iter().flat_map(|&(a, b)| [a, b]))
        .max()
        .map_or(0, |m| m + 1);
    let mut uf = UnionFind((0..n).collect());
    for &(a, b) in equal {
        uf.union(a, b);
    }
    let mut rep_point: BTreeMap<usize, usize> = BTreeMap::new();
    let mut points = Vec::new();
    let mut members: Vec<Vec<VecId>> = Vec::new();
    let mut used = vec![false; n];
    for (t, _) in raw {
        for &v in t {
            used[v] = true;
        }
    }
    for v in 0..n {
        if !used[v] {
            continue;
        }
        let r = uf.find(v);
        let idx = *rep_point.entry(r).or_insert_with(|| {
            points.push(r);
            members.push(Vec::new());
            points.len() - 1
        });
        members[idx].push(v);
    }
    for (idx, m) in members.iter_mut().enumerate() {
        let r = points[idx];
        m.sort_unstable_by_key(|&v| (v != r, v));
    }
    let mut by_triple: BTreeMap<[usize; 3], Vec<Origin>> = BTreeMap::new();
    for (t, origin) in raw {
        let mut p = t.map(|v| rep_point[&uf.find(v)]);
        p.sort_unstable();
        by_triple.entry(p).or_default().push(*origin);
    }
    let (triples, provenance) = by_triple
        .into_iter()
        .map(|(t, mut o)| {
            o.sort_unstable();
            o.dedup();
            (t, o)
        })
        .unzip();
    ContextSet {
        points,
        members,
        triples,
        provenance,
    }
}

/// Raw triples of a derivation, tagged with derivation index `index`.
fn raw_triples(d: &Derivation, index: usize) -> Vec<([VecId; 3], Origin)> {
    (0..d.nodes.len())
        .flat_map(|node| {
            node_triples(d, node).into_iter().map(move |t| {
                (
                    t,
                    Origin::Node {
                        derivation: index,
                        node,
                    },
                )
            })
        })
        .collect()
}

/// Expansion of one derivation, which must verify.
pub fn expand_to_triples(d: &Derivation, table: &VectorTable, ev: &Evaluator) -> Result<ContextSet, CompileError> {
    let report = verify_derivation(d, table, ev)?;
    if !report.passed {
        let reason = report
            .first_failure()
            .map(|(n, r)| match n {
                Some(n) => format!("n{n}: {r}"),
                None => r,
            })
            .unwrap_or_default();
        return Err(CompileError::Unverified { seed: d.seed, reason });
    }
    let set = collect(&raw_triples(d, 0), &identifications(d));
    check_triples(&set, table)?;
    Ok(set)
}

/// Exact pairwise orthogonality of every triple, on its representatives.
/// Triples that only close up through a numeric identification are checked
/// on the members they were emitted with, by the derivation checks instead.
pub fn check_triples(set: &ContextSet, table: &VectorTable) -> Result<(), CompileError> {
    for t in &set.triples {
        let ids = t.map(|p| set.points[p]);
        let vs = ids.map(|v| table.get(v).cloned());
        let [a, b, c] = vs;
        let (a, b, c) = (a?, b?, c?);
        let ok = |u: &Vector3, v: &Vector3| inner(u, v).is_zero();
        if !(ok(&a, &b) && ok(&a, &c) && ok(&b, &c)) && !orthogonal_via_members(set, t, table) {
            return Err(CompileError::NotOrthogonal(ids));
        }
    }
    Ok(())
}

/// Some choice of members of the three points is exactly orthogonal.
fn orthogonal_via_members(set: &ContextSet, t: &[usize; 3], table: &VectorTable) -> bool {
    let vs = table.vectors();
    let ok = |u: VecId, v: VecId| inner(&vs[u], &vs[v]).is_zero();
    set.members[t[0]].iter().any(|&a| {
        set.members[t[1]].iter().any(|&b| {
            ok(a, b) && set.members[t[2]].iter().any(|&c| ok(a, c) && ok(b, c))
        })
    })
}

/// Everything a generator run produces.
#[derive(Debug)]
pub struct Instance {
    pub table: VectorTable,
    pub evaluator: Evaluator,
    /// Seed axes, parallel to `derivations`.
    pub axes: Vec<usize>,
    pub derivations: Vec<Derivation>,
    /// Per-derivation expansions.
    pub sub_instances: Vec<ContextSet>,
    /// Union over all derivations plus the base triple.
    pub context_set: ContextSet,
}

/// Runs the per-seed pipeline for each axis and compiles the union.
pub fn assemble_instance(
    axes: &[usize],
    target: Option<&Vector3>,
    ev: Evaluator,
    cfg: &PipelineConfig,
) -> Result<Instance, CompileError> {
    let mut table = VectorTable::new();
    let mut ev = ev;
    let mut derivations = Vec::new();
    for &k in axes {
        let h = target.cloned().unwrap_or_else(|| crate::pipeline::default_target(k));
        derivations.push(seed_contradiction(&mut table, &mut ev, k, &h, cfg)?);
    }
    let base = [1, 2, 3].map(|k| table.intern(Vector3::basis(k), &ev));
    let [b1, b2, b3] = base;
    let base = [b1?, b2?, b3?];
    // Every node was checked as it was built; `expand_to_triples` re-verifies.
    let mut sub_instances = Vec::new();
    for (i, d) in derivations.iter().enumerate() {
        let set = sub_set(d, i);
        check_triples(&set, &table)?;
        sub_instances.push(set);
    }
    let context_set = union_set(&derivations, base);
    check_triples(&context_set, &table)?;
    Ok(Instance {
        table,
        evaluator: ev,
        axes: axes.to_vec(),
        derivations,
        sub_instances,
        context_set,
    })
}

/// Union of all expansions plus the base triple, without re-verifying.
pub fn union_set(derivations: &[Derivation], base: [VecId; 3]) -> ContextSet {
    let mut raw = vec![(base, Origin::Base)];
    let mut equal = Vec::new();
    for (i, d) in derivations.iter().enumerate() {
        raw.extend(raw_triples(d, i));
        equal.extend(identifications(d));
    }
    collect(&raw, &equal)
}

/// Expansion of derivation number `index` without re-verifying.
pub fn sub_set(d: &Derivation, index: usize) -> ContextSet {
    collect(&raw_triples(d, index), &identifications(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Frame;
    use crate::rules::Builder;
    use crate::scalar::{PrecisionConfig, SymbolEnv};

    fn evaluator() -> Evaluator {
        Evaluator::new(SymbolEnv::new(), PrecisionConfig::default()).unwrap()
    }

    #[test]
    fn single_sum_rule_expansion() {
        let mut table = VectorTable::new();
        let mut ev = evaluator();
        let frame = Frame::standard(1);
        let mut b = Builder::new(&mut table, &mut ev, frame.clone()).unwrap();
        let x = frame.point(&Vector3::basis(3)).unwrap();
        let y = frame.point(&-&Vector3::basis(3)).unwrap();
        b.apply_sum_rule(&x, &y).unwrap();
        let d = b.finish();
        let set = expand_to_triples(&d, &table, &ev).unwrap();
        // w = g, so {w, Z, u} and {Z, g, m} can coincide
        assert!(set.triples.len() <= 3 && !set.triples.is_empty());
        assert!(set.points.len() <= 7);
        assert_eq!(set.provenance.len(), set.triples.len());
    }

    #[test]
    fn orth_force_expansion() {
        let mut table = VectorTable::new();
        let mut ev = evaluator();
        let mut b = Builder::new(&mut table, &mut ev, Frame::standard(1)).unwrap();
        let root = b.root();
        b.apply_orth_force(root, &Vector3::basis(1), &Vector3::from_ints(0, 1, 1))
            .unwrap();
        let d = b.finish();
        let set = expand_to_triples(&d, &table, &ev).unwrap();
        assert_eq!(set.triples.len(), 1);
        assert_eq!(set.points.len(), 3);
    }

    #[test]
    fn identifications_merge_points() {
        let raw = vec![([0, 1, 2], Origin::Base), ([3, 4, 5], Origin::Base), ([2, 1, 0], Origin::Base)];
        let set = collect(&raw, &[(5, 0)]);
        assert_eq!(set.points, vec![0, 1, 2, 3, 4]);
        assert_eq!(set.members[0], vec![0, 5]);
        assert_eq!(set.triples, vec![[0, 1, 2], [0, 3, 4]]);
        assert_eq!(set.point_of(5), Some(0));
    }
}
