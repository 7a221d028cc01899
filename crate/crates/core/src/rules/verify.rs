//! Independent re-check of a derivation.

use std::fmt;

use rayon::prelude::*;

use crate::scalar::Evaluator;

use super::checks::{check_node, Ctx};
use super::{Derivation, NodeId, Rule, RuleError, SideCondition, VectorTable};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionOutcome {
    pub condition: SideCondition,
    pub passed: bool,
    /// Residual enclosure or the reason a check could not run.
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeReport {
    pub node: NodeId,
    pub kind: &'static str,
    pub passed: bool,
    pub conditions: Vec<ConditionOutcome>,
    /// Structural or logical defects beyond the side conditions.
    pub problems: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub nodes: Vec<NodeReport>,
    /// Defects of the derivation as a whole.
    pub problems: Vec<String>,
    pub passed: bool,
}

impl VerificationReport {
    /// First failing node and the reason, in node order.
    pub fn first_failure(&self) -> Option<(Option<NodeId>, String)> {
        for n in &self.nodes {
            if let Some(c) = n.conditions.iter().find(|c| !c.passed) {
                return Some((Some(n.node), c.condition.label.clone()));
            }
            if let Some(p) = n.problems.first() {
                return Some((Some(n.node), p.clone()));
            }
        }
        self.problems.first().map(|p| (None, p.clone()))
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in &self.nodes {
            let verdict = if n.passed { "pass" } else { "FAIL" };
            writeln!(f, "n{} {} {}", n.node, n.kind, verdict)?;
            for c in &n.conditions {
                let mark = if c.passed { "ok" } else { "FAILED" };
                write!(f, "  [{}] {} {}", c.condition.kind.as_str(), c.condition.label, mark)?;
                if let Some(d) = &c.detail {
                    write!(f, " ({d})")?;
                }
                writeln!(f)?;
            }
            for p in &n.problems {
                writeln!(f, "  problem: {p}")?;
            }
        }
        for p in &self.problems {
            writeln!(f, "derivation problem: {p}")?;
        }
        writeln!(f, "verdict: {}", if self.passed { "pass" } else { "FAIL" })
    }
}

/// Structural validation: ids resolve and premises precede their nodes.
fn check_structure(d: &Derivation, table: &VectorTable) -> Result<(), RuleError> {
    let nv = table.len();
    if d.seed >= nv {
        return Err(RuleError::Structure(format!("seed v{} is not in the vector table", d.seed)));
    }
    for (i, node) in d.nodes.iter().enumerate() {
        let vectors = node.rule.vectors().into_iter().chain(node.conclusion.vectors());
        for v in vectors {
            if v >= nv {
                return Err(RuleError::Structure(format!("n{i} references unknown vector v{v}")));
            }
        }
        let refs = node
            .premises
            .iter()
            .chain(node.context.iter().map(|(s, _)| s))
            .copied()
            .chain(node.rule.node_refs());
        for p in refs {
            if p >= d.nodes.len() {
                return Err(RuleError::Structure(format!("n{i} references unknown node n{p}")));
            }
            if p >= i {
                return Err(RuleError::Structure(format!(
                    "n{i} references n{p}, which does not precede it (cycle)"
                )));
            }
        }
    }
    Ok(())
}

/// Checks every node: recomputed side conditions, conclusions, premises and
/// branch scoping. Structural defects are errors; everything else lands in
/// the report.
pub fn verify_derivation(
    d: &Derivation,
    table: &VectorTable,
    ev: &Evaluator,
) -> Result<VerificationReport, RuleError> {
    check_structure(d, table)?;
    let ctx = Ctx {
        table,
        frame: &d.frame,
        seed: d.seed,
        ev,
        nodes: &d.nodes,
    };
    let nodes: Vec<NodeReport> = d
        .nodes
        .par_iter()
        .enumerate()
        .map(|(i, node)| {
            let check = check_node(&ctx, i, node);
            let mut problems = check.problems.clone();
            if check.conditions() != node.side_conditions {
                problems.push("stored side conditions differ from the recomputed list".into());
            }
            match &check.expected {
                Some(c) if *c == node.conclusion => {}
                Some(c) => problems.push(format!("conclusion should be {c}, found {}", node.conclusion)),
                None => problems.push("no conclusion could be derived".into()),
            }
            for &p in &node.premises {
                if !node.context.starts_with(&d.nodes[p].context) {
                    problems.push(format!("premise n{p} lives in an arm this node is not in"));
                }
            }
            for &(s, _) in &node.context {
                if !matches!(d.nodes[s].rule, Rule::CaseSplit { .. }) {
                    problems.push(format!("context entry n{s} is not a case split"));
                }
            }
            let passed = problems.is_empty() && check.outcomes.iter().all(|c| c.passed);
            NodeReport {
                node: i,
                kind: node.rule.kind(),
                passed,
                conditions: check.outcomes,
                problems,
            }
        })
        .collect();

    let mut problems = Vec::new();
    let roots = d
        .nodes
        .iter()
        .filter(|n| matches!(n.rule, Rule::Assumption { .. }))
        .count();
    if roots > 1 {
        problems.push(format!("{roots} root assumptions; at most one is allowed"));
    }
    for (i, node) in d.nodes.iter().enumerate() {
        if matches!(node.rule, Rule::CaseSplit { .. }) {
            let closures = d
                .nodes
                .iter()
                .filter(|n| {
                    matches!(&n.rule, Rule::Lemma3Conclusion { split, .. } | Rule::TheoremContradiction { split, .. } if *split == i)
                })
                .count();
            if closures != 1 {
                problems.push(format!("case split n{i} is closed {closures} times; exactly one closure is required"));
            }
        }
    }
    let passed = problems.is_empty() && nodes.iter().all(|n| n.passed);
    Ok(VerificationReport {
        nodes,
        problems,
        passed,
    })
}
