//! Geometric side conditions and expected conclusions, per rule.
//!
//! The same code runs when a node is built (a failing condition aborts the
//! construction) and when it is verified (conditions are recomputed from the
//! node's primary vectors; stored auxiliaries are only compared against the
//! recomputed ones).

use crate::geometry::{det3, inner, projectively_equal, w_s, Frame, SVector, Vector3};
use crate::scalar::{Evaluator, ExactScalar, PairDef, PrecisionConfig, ScalarError, Sign, SymbolEnv};

use super::logic::entails;
use super::verify::ConditionOutcome;
use super::{CheckKind, Conclusion, MonotoneParts, Node, NodeId, Rule, RuleError, SideCondition, VecId, VectorTable};

/// Everything a node check may read.
pub(crate) struct Ctx<'a> {
    pub table: &'a VectorTable,
    pub frame: &'a Frame,
    pub seed: VecId,
    pub ev: &'a Evaluator,
    pub nodes: &'a [Node],
}

impl Ctx<'_> {
    fn vec(&self, id: VecId) -> Result<&Vector3, RuleError> {
        self.table.get(id)
    }

    /// The element of `S(g)` on the line of vector `id`.
    fn s(&self, id: VecId) -> Result<SVector, RuleError> {
        Ok(self.frame.normalize_into(self.vec(id)?)?)
    }

    fn g(&self) -> &Vector3 {
        self.frame.g()
    }

    fn node(&self, id: NodeId) -> Result<&Node, RuleError> {
        self.nodes
            .get(id)
            .ok_or_else(|| RuleError::Structure(format!("unknown node id n{id}")))
    }
}

/// Result of checking one node.
const SKIPPED: &str = "skipped after an earlier failure";

#[derive(Default)]
pub(crate) struct NodeCheck {
    pub outcomes: Vec<ConditionOutcome>,
    pub problems: Vec<String>,
    pub expected: Option<Conclusion>,
}

impl NodeCheck {
    fn exact(&mut self, label: impl Into<String>, ok: Result<bool, RuleError>) {
        self.push(CheckKind::Exact, label.into(), ok.map(|b| (b, None)));
    }

    /// Like `exact`, but once an earlier condition of the node has failed
    /// the (possibly expensive) evaluation is skipped and recorded as failed.
    fn exact_with(&mut self, label: impl Into<String>, f: impl FnOnce() -> Result<bool, RuleError>) {
        if self.failed() {
            self.push(CheckKind::Exact, label.into(), Ok((false, Some(SKIPPED.into()))));
        } else {
            self.exact(label, f());
        }
    }

    fn failed(&self) -> bool {
        self.outcomes.iter().any(|o| !o.passed)
    }

    fn interval(&mut self, label: impl Into<String>, ok: Result<(bool, Option<String>), RuleError>) {
        self.push(CheckKind::Interval, label.into(), ok);
    }

    fn push(&mut self, kind: CheckKind, label: String, ok: Result<(bool, Option<String>), RuleError>) {
        let (passed, detail) = match ok {
            Ok((b, d)) => (b, d),
            Err(e) => (false, Some(e.to_string())),
        };
        self.outcomes.push(ConditionOutcome {
            condition: SideCondition { kind, label },
            passed,
            detail,
        });
    }

    fn problem(&mut self, msg: impl Into<String>) {
        self.problems.push(msg.into());
    }

    pub fn conditions(&self) -> Vec<SideCondition> {
        self.outcomes.iter().map(|o| o.condition.clone()).collect()
    }

    pub fn first_failure(&self) -> Option<String> {
        self.outcomes
            .iter()
            .find(|o| !o.passed)
            .map(|o| match &o.detail {
                Some(d) => format!("{} ({d})", o.condition.label),
                None => o.condition.label.clone(),
            })
            .or_else(|| self.problems.first().cloned())
    }
}

/// Auxiliary vectors of a sum-rule application on `(X, Y)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumAux {
    /// `w_S(X, Y)`.
    pub w: Vector3,
    /// `Z = -<Y,w>/<X,w> X + Y`, orthogonal to `w` and `g`.
    pub z: Vector3,
    /// Completes `{X, Y}` (and `{w, Z}`) to an orthogonal triple.
    pub u: Vector3,
    /// Completes `{Z, g}`.
    pub m: Vector3,
}

pub fn sum_rule_aux(x: &SVector, y: &SVector) -> Result<SumAux, RuleError> {
    let w = w_s(x, y)?.into_base();
    let xw = inner(x.base(), &w);
    if xw.is_zero() {
        return Err(RuleError::Precondition("<X, w_S(X, Y)> != 0".into()));
    }
    let k = -&inner(y.base(), &w).checked_div(&xw)?;
    let z = &x.base().scale(&k) + y.base();
    let u = crate::geometry::complete_triple(x.base(), y.base())?;
    let m = crate::geometry::complete_triple(&z, x.frame().g())?;
    Ok(SumAux { w, z, u, m })
}

fn same_line(a: &Vector3, b: &Vector3) -> Result<bool, RuleError> {
    Ok(projectively_equal(a, b)?)
}

fn orthogonal_nonzero(u: &Vector3, to: &[&Vector3]) -> bool {
    !u.is_zero() && to.iter().all(|t| inner(u, t).is_zero())
}

/// Conditions shared by every sum-rule application: inputs `X, Y` and the
/// stored ids of `w`, `Z`, `u`, `m`.
fn check_sum_core(
    ctx: &Ctx<'_>,
    out: &mut NodeCheck,
    x: &SVector,
    y: &SVector,
    ids: [VecId; 4],
) -> Result<(), RuleError> {
    let [w, z, u, m] = ids.map(|id| ctx.vec(id));
    let (w, z, u, m) = (w?, z?, u?, m?);
    out.exact("s_inner(X, Y) = -1", Ok(x.s_inner(y) == ExactScalar::int(-1)));
    out.exact("<X, Y> = 0", Ok(inner(x.base(), y.base()).is_zero()));
    // The auxiliary vectors divide by inner products of X and Y; with a bad
    // premise those quotients only grow, so they are not formed at all.
    let aux = if out.failed() { None } else { Some(sum_rule_aux(x, y)) };
    let aux = || aux.clone().expect("only evaluated when nothing failed");
    out.exact_with("w ~ w_S(X, Y)", || aux().and_then(|a| same_line(w, &a.w)));
    out.exact_with("Z ~ -<Y,w>/<X,w> X + Y", || aux().and_then(|a| same_line(z, &a.z)));
    out.exact_with("<Z, w> = 0", || Ok(inner(z, w).is_zero()));
    out.exact_with("<Z, g> = 0", || Ok(inner(z, ctx.g()).is_zero()));
    out.exact_with("span{w, Z} = span{X, Y}", || {
        Ok(det3(x.base(), w, z).is_zero() && det3(y.base(), w, z).is_zero() && !w.cross(z).is_zero())
    });
    out.exact_with("u orthogonal to X, Y", || Ok(orthogonal_nonzero(u, &[x.base(), y.base()])));
    out.exact_with("m orthogonal to Z, g", || Ok(orthogonal_nonzero(m, &[z, ctx.g()])));
    Ok(())
}

/// Premise nodes of `node` that conclude `v(seed) = 1`.
fn has_root_premise(ctx: &Ctx<'_>, node: &Node) -> bool {
    node.premises.iter().any(|&p| {
        ctx.nodes
            .get(p)
            .is_some_and(|n| n.conclusion.has_fact(ctx.seed, 1))
    })
}

fn premise_conclusions<'a>(ctx: &'a Ctx<'_>, ids: &[NodeId]) -> Vec<&'a Conclusion> {
    ids.iter()
        .filter_map(|&p| ctx.nodes.get(p).map(|n| &n.conclusion))
        .collect()
}

/// Checks node `id` (whose content is `node`) against the table.
pub(crate) fn check_node(ctx: &Ctx<'_>, id: NodeId, node: &Node) -> NodeCheck {
    let mut out = NodeCheck::default();
    if let Err(e) = check_rule(ctx, id, node, &mut out) {
        out.problem(e.to_string());
    }
    out
}

fn check_rule(ctx: &Ctx<'_>, id: NodeId, node: &Node, out: &mut NodeCheck) -> Result<(), RuleError> {
    let needs_root = matches!(
        node.rule,
        Rule::SumRule { .. } | Rule::ScaleDown { .. } | Rule::CaseSplit { .. } | Rule::ChainLink { .. }
    ) || matches!(node.rule, Rule::Monotone { parts: Some(_), .. });
    if needs_root && !has_root_premise(ctx, node) {
        out.problem(format!("no premise establishes v(v{}) = 1", ctx.seed));
    }
    match &node.rule {
        Rule::Assumption { vector } => {
            if *vector != ctx.seed {
                out.problem("assumption is not about the seed vector");
            }
            if !node.premises.is_empty() || !node.context.is_empty() {
                out.problem("root assumption must have no premises and no context");
            }
            out.exact("seed ~ g", same_line(ctx.vec(*vector)?, ctx.g()));
            out.expected = Some(Conclusion::fact(*vector, 1));
        }
        Rule::BranchAssumption { split, arm } => {
            let s = ctx.node(*split)?;
            let Rule::CaseSplit { plus, minus, .. } = &s.rule else {
                out.problem(format!("n{split} is not a case split"));
                return Ok(());
            };
            if *arm > 1 {
                out.problem("arm must be 0 or 1");
            }
            let mut ctx_expected = s.context.clone();
            ctx_expected.push((*split, *arm));
            if node.context != ctx_expected {
                out.problem("branch assumption context does not open its arm");
            }
            if node.premises != [*split] {
                out.problem("branch assumption must cite exactly its split");
            }
            let first = u8::from(*arm == 0);
            out.expected = Some(Conclusion::Facts(vec![(*plus, first), (*minus, 1 - first)]));
        }
        Rule::TripleSum { a, b, c } => {
            let (va, vb, vc) = (ctx.vec(*a)?, ctx.vec(*b)?, ctx.vec(*c)?);
            out.exact(
                "a, b, c pairwise orthogonal and nonzero",
                Ok(orthogonal_nonzero(va, &[vb, vc]) && orthogonal_nonzero(vb, &[vc]) && !vc.is_zero()),
            );
            out.expected = Some(Conclusion::linear([(*a, 1), (*b, 1), (*c, 1)], 1));
        }
        Rule::OrthForce { x, y, u } => {
            let (vx, vy, vu) = (ctx.vec(*x)?, ctx.vec(*y)?, ctx.vec(*u)?);
            if !premise_conclusions(ctx, &node.premises).iter().any(|c| c.has_fact(*x, 1)) {
                out.problem(format!("no premise establishes v(v{x}) = 1"));
            }
            out.exact("<x, y> = 0", Ok(!vx.is_zero() && !vy.is_zero() && inner(vx, vy).is_zero()));
            out.exact("u orthogonal to x, y", Ok(orthogonal_nonzero(vu, &[vx, vy])));
            out.expected = Some(Conclusion::fact(*y, 0));
        }
        Rule::Scale { from, to } => {
            out.exact("to ~ from", same_line(ctx.vec(*to)?, ctx.vec(*from)?));
            let value = premise_conclusions(ctx, &node.premises).iter().find_map(|c| match c {
                Conclusion::Facts(fs) => fs.iter().find(|f| f.0 == *from).map(|f| f.1),
                _ => None,
            });
            match value {
                Some(b) => out.expected = Some(Conclusion::fact(*to, b)),
                None => out.problem(format!("no premise fixes v(v{from})")),
            }
        }
        Rule::SumRule { x, y, w, z, u, m } => {
            let (sx, sy) = (ctx.s(*x)?, ctx.s(*y)?);
            check_sum_core(ctx, out, &sx, &sy, [*w, *z, *u, *m])?;
            out.expected = Some(Conclusion::linear([(*x, 1), (*y, 1), (*w, -1)], 0));
        }
        Rule::Monotone { x, y, parts } => check_monotone(ctx, out, *x, *y, parts.as_ref())?,
        Rule::ScaleDown {
            x,
            lambda,
            aux,
            mid,
            diff,
            target,
        } => check_scale_down(ctx, node, out, *x, lambda, [*aux, *mid, *diff, *target])?,
        Rule::CaseSplit {
            y,
            plus,
            minus,
            z,
            u,
            m,
        } => {
            // The stored y is only known up to scale; its S(g) offset is
            // recovered from X = g + y.
            let g = ctx.g();
            let sp = ctx.s(*plus)?;
            let off = sp.offset();
            out.exact("y ~ X - g", same_line(ctx.vec(*y)?, &off));
            let ny = inner(&off, &off);
            out.exact("<y, y> != 0", Ok(!ny.is_zero()));
            let stored_minus = ctx.vec(*minus)?;
            let sm = ctx.s(*minus)?;
            out.exact_with("X_alpha ~ g - alpha y", || {
                same_line(stored_minus, &(g - &off.scale(&ny.recip()?)))
            });
            out.exact_with("w_S(X, X_alpha) = g", || Ok(w_s(&sp, &sm)?.base() == g));
            check_sum_core(ctx, out, &sp, &sm, [ctx.seed, *z, *u, *m])?;
            out.expected = Some(Conclusion::linear([(*plus, 1), (*minus, 1)], 1));
        }
        Rule::ChainLink {
            x,
            y,
            rotation,
            scale,
            points,
        } => check_chain_link(ctx, node, out, *x, *y, *rotation, *scale, points)?,
        Rule::Lemma3Conclusion { target, split, arms } => {
            out.exact("P_y != P_g", same_line(ctx.vec(*target)?, ctx.g()).map(|b| !b));
            let claim = Conclusion::fact(*target, 0);
            check_closure(ctx, id, node, out, *split, arms, &claim)?;
            out.expected = Some(claim);
        }
        Rule::TheoremContradiction { split, arms } => {
            check_closure(ctx, id, node, out, *split, arms, &Conclusion::Contradiction)?;
            out.expected = Some(Conclusion::Contradiction);
        }
    }
    Ok(())
}

/// `t = -(1 + <Y,Y>_S) / <X,X>_S` and `W = tX + Y`, both in `S(g)`.
pub(crate) fn monotone_w(x: &SVector, y: &SVector) -> Result<SVector, RuleError> {
    let t = -&(&ExactScalar::one() + &y.s_norm2()).checked_div(&x.s_norm2())?;
    Ok(x.s_scale(&t).s_add(y))
}

fn check_monotone(
    ctx: &Ctx<'_>,
    out: &mut NodeCheck,
    x: VecId,
    y: VecId,
    parts: Option<&MonotoneParts>,
) -> Result<(), RuleError> {
    let (sx, sy) = (ctx.s(x)?, ctx.s(y)?);
    out.exact("s_inner(X, Y) = 0", Ok(sx.s_inner(&sy).is_zero()));
    out.exact("Y != 0 in S(g)", Ok(!sy.is_origin()));
    let Some(p) = parts else {
        out.exact("X = 0 in S(g)", Ok(sx.is_origin()));
        out.expected = Some(Conclusion::Le { lo: y, hi: y });
        return Ok(());
    };
    out.exact("X != 0 in S(g)", Ok(!sx.is_origin()));
    let sum = sx.s_add(&sy);
    let (stored_sum, stored_w) = (ctx.vec(p.sum)?, ctx.vec(p.big_w)?);
    out.exact("sum ~ X + Y", same_line(stored_sum, sum.base()));
    let w = if out.failed() { None } else { Some(monotone_w(&sx, &sy)?) };
    out.exact_with("W ~ tX + Y", || same_line(stored_w, w.as_ref().unwrap().base()));
    out.exact_with("w_S(W, X + Y) = Y", || Ok(w_s(w.as_ref().unwrap(), &sum)?.base() == sy.base()));
    let (sw, ss) = (ctx.s(p.big_w)?, ctx.s(p.sum)?);
    check_sum_core(ctx, out, &sw, &ss, [y, p.z, p.u, p.m])?;
    out.expected = Some(Conclusion::linear([(p.big_w, 1), (p.sum, 1), (y, -1)], 0));
    Ok(())
}

/// Finds the premise that is a Monotone node with the given inputs and sum.
fn find_monotone(ctx: &Ctx<'_>, node: &Node, x: Option<VecId>, y: VecId, sum: VecId) -> Option<NodeId> {
    node.premises.iter().copied().find(|&p| {
        matches!(ctx.nodes.get(p).map(|n| &n.rule),
            Some(Rule::Monotone { x: mx, y: my, parts: Some(parts) })
                if x.is_none_or(|x| *mx == x) && *my == y && parts.sum == sum)
    })
}

fn check_scale_down(
    ctx: &Ctx<'_>,
    node: &Node,
    out: &mut NodeCheck,
    x: VecId,
    lambda: &ExactScalar,
    [aux, mid, diff, target]: [VecId; 4],
) -> Result<(), RuleError> {
    let sx = ctx.s(x)?;
    let sy = ctx.s(aux)?;
    let one = ExactScalar::one();
    let lm1 = lambda - &one;
    out.interval(
        "lambda > 1",
        ctx.ev.sign(&lm1).map(|s| (s == Sign::Positive, None)).map_err(Into::into),
    );
    out.exact("X != 0 in S(g)", Ok(!sx.is_origin()));
    out.exact("s_inner(Y, X) = 0", Ok(sy.s_inner(&sx).is_zero()));
    out.exact(
        "s_inner(Y, Y) = (lambda - 1) s_inner(X, X)",
        Ok(sy.s_norm2() == &lm1 * &sx.s_norm2()),
    );
    let plus = sx.s_add(&sy);
    let minus = sx.s_scale(&lm1).s_sub(&sy);
    out.exact("s_inner(X + Y, (lambda - 1)X - Y) = 0", Ok(plus.s_inner(&minus).is_zero()));
    out.exact("mid ~ X + Y", same_line(ctx.vec(mid)?, plus.base()));
    out.exact("diff ~ (lambda - 1)X - Y", same_line(ctx.vec(diff)?, minus.base()));
    out.exact("target ~ lambda X", same_line(ctx.vec(target)?, sx.s_scale(lambda).base()));
    let first = find_monotone(ctx, node, Some(diff), mid, target);
    let second = find_monotone(ctx, node, Some(aux), x, mid);
    let claim = Conclusion::Le { lo: target, hi: x };
    match (first, second) {
        (Some(a), Some(b)) => {
            let prem = premise_conclusions(ctx, &[a, b]);
            if !entails(&prem, &[], &claim).unwrap_or(false) {
                out.problem("monotone premises do not give v(lambda X) <= v(X)");
            }
        }
        _ => out.problem("missing one of the two Monotone premises"),
    }
    out.expected = Some(claim);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn check_chain_link(
    ctx: &Ctx<'_>,
    node: &Node,
    out: &mut NodeCheck,
    x: VecId,
    y: VecId,
    rotation: u32,
    scale: u32,
    points: &[VecId],
) -> Result<(), RuleError> {
    let claim = Conclusion::Le { lo: y, hi: x };
    out.expected = Some(claim.clone());
    if points.len() < 2 || points.last() != Some(&y) {
        out.problem("chain points must run from Y_0 to Y_n = Y with n >= 1");
        return Ok(());
    }
    let n = (points.len() - 1) as u32;
    let (sx, sy) = (ctx.s(x)?, ctx.s(y)?);
    let c = ExactScalar::cos_sym(rotation);
    let c2 = c.square();
    let mut monos = Vec::new();
    for i in 1..points.len() {
        let prev = ctx.s(points[i - 1])?;
        let cur = ctx.s(points[i])?;
        out.exact(
            format!("step {i}: s_inner(Y_{}, Y_{}) = c^2 s_inner(Y_{i}, Y_{i})", i - 1, i - 1),
            Ok(prev.s_norm2() == &c2 * &cur.s_norm2()),
        );
        match find_monotone(ctx, node, None, points[i - 1], points[i]) {
            Some(p) => {
                let Rule::Monotone { x: d, .. } = &ctx.nodes[p].rule else { unreachable!() };
                let step = cur.s_sub(&prev);
                out.exact(
                    format!("step {i}: D ~ Y_{i} - Y_{}", i - 1),
                    same_line(ctx.vec(*d)?, step.base()),
                );
                let step_le = Conclusion::Le { lo: points[i], hi: points[i - 1] };
                if !entails(&[&ctx.nodes[p].conclusion], &[], &step_le).unwrap_or(false) {
                    out.problem(format!("step {i} premise does not give v(Y_{i}) <= v(Y_{})", i - 1));
                }
                monos.push(p);
            }
            None => out.problem(format!("missing Monotone premise for step {i}")),
        }
    }
    let beta_x = sx.s_norm2();
    let beta_y = sy.s_norm2();
    let beta_xy = sx.s_inner(&sy);
    out.interval(
        "beta_X < beta_Y",
        ctx.ev.sign(&(&beta_y - &beta_x)).map(|s| (s == Sign::Positive, None)).map_err(Into::into),
    );
    let env = ctx.ev.env();
    let (cos_theta, kappa) = match (env.pairs.get(&rotation), env.pairs.get(&scale)) {
        (
            Some(PairDef::Rotation { cos_theta, steps }),
            Some(PairDef::Scale {
                kappa,
                rotation: r,
                steps: k,
            }),
        ) if *steps == n && *r == rotation && *k == n => (cos_theta.clone(), kappa.clone()),
        _ => {
            out.problem(format!("symbol pairs {rotation}/{scale} are not a rotation/scale pair with n = {n}"));
            return Ok(());
        }
    };
    out.exact(
        "cos(theta)^2 beta_X beta_Y = beta_XY^2",
        Ok(&cos_theta.square() * &(&beta_x * &beta_y) == beta_xy.square()),
    );
    out.interval(
        "sign cos(theta) = sign beta_XY",
        (|| Ok((ctx.ev.sign(&cos_theta)? == ctx.ev.sign(&beta_xy)?, None)))(),
    );
    out.exact("kappa^2 beta_X = beta_Y", Ok(&kappa.square() * &beta_x == beta_y));
    out.interval(
        "kappa > 0",
        ctx.ev.sign(&kappa).map(|s| (s == Sign::Positive, None)).map_err(Into::into),
    );
    let alpha = &kappa * &c.pow(n);
    out.interval(
        "alpha = kappa c^n >= 1",
        ctx.ev
            .sign(&(&alpha - &ExactScalar::one()))
            .map(|s| (s != Sign::Negative, None))
            .map_err(Into::into),
    );
    out.interval("n minimal", minimality(ctx.ev.cfg(), &cos_theta, &kappa, n));
    let scale_down = node.premises.iter().copied().find(|&p| {
        matches!(ctx.nodes.get(p).map(|n| &n.rule), Some(Rule::ScaleDown { x: sx, .. }) if *sx == x)
    });
    let Some(sd) = scale_down else {
        out.problem("missing ScaleDown premise");
        return Ok(());
    };
    let Rule::ScaleDown { lambda, target, .. } = &ctx.nodes[sd].rule else { unreachable!() };
    let cs = ExactScalar::cos_sym(scale);
    out.exact("lambda = c'^-2", Ok(lambda == &cs.square().recip()?));
    let y0 = ctx.s(points[0])?;
    let t = ctx.s(*target)?;
    let residual = (|| {
        let diff = y0.base() - t.base();
        let mut ok = true;
        let mut widest = String::new();
        for d in diff.scalars() {
            let (inside, iv) = ctx.ev.within_tolerance(d)?;
            ok &= inside;
            widest = iv.to_string();
        }
        Ok((ok, Some(format!("last residual {widest}"))))
    })();
    out.interval("Y_0 = alpha X within tolerance", residual);
    // Steps compose by transitivity: v(Y_n) <= ... <= v(Y_0) = v(lambda X) <= v(X).
    if monos.len() != points.len() - 1 || ctx.nodes[sd].conclusion != (Conclusion::Le { lo: *target, hi: x }) {
        out.problem("chain premises do not give v(Y) <= v(X)");
    }
    Ok(())
}

/// `n == 1`, or `alpha >= 1` not certifiable at `n - 1`.
fn minimality(
    cfg: &PrecisionConfig,
    cos_theta: &ExactScalar,
    kappa: &ExactScalar,
    n: u32,
) -> Result<(bool, Option<String>), RuleError> {
    if n == 1 {
        return Ok((true, None));
    }
    let mut env = SymbolEnv::new();
    env.define(
        1,
        PairDef::Rotation {
            cos_theta: cos_theta.clone(),
            steps: n - 1,
        },
    );
    let ev = Evaluator::new(env, cfg.clone())?;
    let a = kappa * &ExactScalar::cos_sym(1).pow(n - 1);
    match ev.sign(&(&a - &ExactScalar::one())) {
        Ok(s) => Ok((s == Sign::Negative, None)),
        Err(ScalarError::UndecidedSign { bits }) => Ok((true, Some(format!("alpha at n - 1 undecided at {bits} bits")))),
        Err(e) => Err(e.into()),
    }
}

#[allow(clippy::too_many_arguments)]
fn check_closure(
    ctx: &Ctx<'_>,
    id: NodeId,
    node: &Node,
    out: &mut NodeCheck,
    split: NodeId,
    arms: &[Vec<NodeId>; 2],
    claim: &Conclusion,
) -> Result<(), RuleError> {
    let s = ctx.node(split)?;
    if !matches!(s.rule, Rule::CaseSplit { .. }) {
        out.problem(format!("n{split} is not a case split"));
        return Ok(());
    }
    if split >= id {
        out.problem("split must precede its closure");
    }
    if node.context != s.context {
        out.problem("closure must sit in the context of its split");
    }
    if !node.premises.contains(&split) {
        out.problem("closure must cite its split");
    }
    for (arm, members) in arms.iter().enumerate() {
        let mut opened = node.context.clone();
        opened.push((split, arm as u8));
        let mut has_assumption = false;
        for &m in members {
            let Some(mn) = ctx.nodes.get(m) else {
                out.problem(format!("unknown node n{m} in arm {arm}"));
                return Ok(());
            };
            if m >= id {
                out.problem(format!("arm node n{m} does not precede the closure"));
            }
            if !mn.context.starts_with(&opened) {
                out.problem(format!("arm node n{m} is not inside arm {arm}"));
            }
            if matches!(mn.rule, Rule::BranchAssumption { split: sp, arm: a } if sp == split && a as usize == arm) {
                has_assumption = true;
            }
        }
        if !has_assumption {
            out.problem(format!("arm {arm} lacks its branch assumption"));
        }
        let mut prem = premise_conclusions(ctx, &node.premises);
        prem.extend(premise_conclusions(ctx, members));
        match entails(&prem, &[], claim) {
            Ok(true) => {}
            Ok(false) => out.problem(format!("arm {arm} does not reach {claim}")),
            Err(e) => out.problem(format!("arm {arm}: {e}")),
        }
    }
    Ok(())
}
