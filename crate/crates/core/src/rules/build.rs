//! Construction of derivation nodes. Every `apply_*` computes the auxiliary
//! vectors, interns them, and runs the same checks the verifier runs; a
//! failing side condition is reported as [`RuleError::Precondition`].

use crate::geometry::{Frame, SVector, Vector3};
use crate::scalar::{Evaluator, ExactScalar};

use super::checks::{check_node, monotone_w, sum_rule_aux, Ctx};
use super::{Conclusion, Derivation, MonotoneParts, Node, NodeId, Rule, RuleError, VecId, VectorTable};

pub struct Builder<'a> {
    table: &'a mut VectorTable,
    ev: &'a mut Evaluator,
    frame: Frame,
    seed: VecId,
    root: NodeId,
    nodes: Vec<Node>,
    context: Vec<(NodeId, u8)>,
}

impl<'a> Builder<'a> {
    /// Starts a derivation rooted at `v(g) = 1` for the frame's `g`.
    pub fn new(table: &'a mut VectorTable, ev: &'a mut Evaluator, frame: Frame) -> Result<Self, RuleError> {
        let seed = table.intern(frame.g().clone(), ev)?;
        let mut b = Builder {
            table,
            ev,
            frame,
            seed,
            root: 0,
            nodes: Vec::new(),
            context: Vec::new(),
        };
        b.root = b.push(Rule::Assumption { vector: seed }, Vec::new())?;
        Ok(b)
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn seed(&self) -> VecId {
        self.seed
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn table(&self) -> &VectorTable {
        self.table
    }

    pub fn evaluator(&self) -> &Evaluator {
        self.ev
    }

    pub fn evaluator_mut(&mut self) -> &mut Evaluator {
        self.ev
    }

    pub fn intern(&mut self, v: Vector3) -> Result<VecId, RuleError> {
        self.table.intern(v, self.ev)
    }

    pub fn vector(&self, id: VecId) -> &Vector3 {
        &self.table.vectors()[id]
    }

    /// Element of `S(g)` on the line of vector `id`.
    pub fn s_vector(&self, id: VecId) -> Result<SVector, RuleError> {
        Ok(self.frame.normalize_into(self.vector(id))?)
    }

    /// Appends a node after running its checks in the current branch context.
    pub fn push(&mut self, rule: Rule, premises: Vec<NodeId>) -> Result<NodeId, RuleError> {
        let id = self.nodes.len();
        let mut node = Node {
            rule,
            premises,
            context: self.context.clone(),
            side_conditions: Vec::new(),
            conclusion: Conclusion::Contradiction,
        };
        let check = {
            let ctx = Ctx {
                table: self.table,
                frame: &self.frame,
                seed: self.seed,
                ev: self.ev,
                nodes: &self.nodes,
            };
            check_node(&ctx, id, &node)
        };
        if let Some(reason) = check.first_failure() {
            return Err(RuleError::Precondition(format!("{}: {reason}", node.rule.kind())));
        }
        node.side_conditions = check.conditions();
        node.conclusion = check.expected.expect("passing check yields a conclusion");
        self.nodes.push(node);
        Ok(id)
    }

    pub fn apply_triple_sum(&mut self, a: &Vector3, b: &Vector3, c: &Vector3) -> Result<NodeId, RuleError> {
        let (a, b, c) = (self.intern(a.clone())?, self.intern(b.clone())?, self.intern(c.clone())?);
        self.push(Rule::TripleSum { a, b, c }, Vec::new())
    }

    /// `v(x) = 1` (established by `fact`) and `x ⟂ y` give `v(y) = 0`.
    pub fn apply_orth_force(&mut self, fact: NodeId, x: &Vector3, y: &Vector3) -> Result<NodeId, RuleError> {
        let u = crate::geometry::complete_triple(x, y)?;
        let (x, y, u) = (self.intern(x.clone())?, self.intern(y.clone())?, self.intern(u)?);
        self.push(Rule::OrthForce { x, y, u }, vec![fact])
    }

    /// Transfers the fact about `from` (established by `fact`) to a multiple.
    pub fn apply_scale(&mut self, fact: NodeId, from: VecId, to: &Vector3) -> Result<NodeId, RuleError> {
        let to = self.intern(to.clone())?;
        self.push(Rule::Scale { from, to }, vec![fact])
    }

    /// Sum rule: `s_inner(X, Y) = -1` gives `v(X) + v(Y) = v(w_S(X, Y))`.
    pub fn apply_sum_rule(&mut self, x: &SVector, y: &SVector) -> Result<NodeId, RuleError> {
        if x.s_inner(y) != ExactScalar::int(-1) {
            return Err(RuleError::Precondition("SumRule: s_inner(X, Y) = -1".into()));
        }
        let aux = sum_rule_aux(x, y)?;
        let ids = [x.base(), y.base(), &aux.w, &aux.z, &aux.u, &aux.m].map(Clone::clone);
        let [x, y, w, z, u, m] = self.intern_all(ids)?;
        self.push(Rule::SumRule { x, y, w, z, u, m }, vec![self.root])
    }

    fn intern_all<const N: usize>(&mut self, vs: [Vector3; N]) -> Result<[VecId; N], RuleError> {
        let mut out = [0; N];
        for (slot, v) in out.iter_mut().zip(vs) {
            *slot = self.intern(v)?;
        }
        Ok(out)
    }

    /// Monotonicity: `s_inner(X, Y) = 0` gives `v(X + Y) <= v(Y)`, stored as
    /// `v(W) + v(X + Y) = v(Y)`.
    pub fn apply_monotone(&mut self, x: &SVector, y: &SVector) -> Result<NodeId, RuleError> {
        if y.is_origin() {
            return Err(RuleError::Precondition("Monotone: Y != 0 in S(g)".into()));
        }
        if x.is_origin() {
            let (x, y) = (self.intern(x.base().clone())?, self.intern(y.base().clone())?);
            return self.push(Rule::Monotone { x, y, parts: None }, Vec::new());
        }
        if !x.s_inner(y).is_zero() {
            return Err(RuleError::Precondition("Monotone: s_inner(X, Y) = 0".into()));
        }
        let sum = x.s_add(y);
        let w = monotone_w(x, y)?;
        let aux = sum_rule_aux(&w, &sum)?;
        let [xi, yi, sum, big_w, z, u, m] = self.intern_all(
            [x.base(), y.base(), sum.base(), w.base(), &aux.z, &aux.u, &aux.m].map(Clone::clone),
        )?;
        let parts = MonotoneParts { sum, big_w, z, u, m };
        self.push(
            Rule::Monotone {
                x: xi,
                y: yi,
                parts: Some(parts),
            },
            vec![self.root],
        )
    }

    /// Scale-down: `v(lambda X) <= v(X)` for `lambda > 1`, through the
    /// auxiliary `Y = g + mu J(X - g)` with `mu^2 = lambda - 1`.
    pub fn apply_scale_down(
        &mut self,
        x: &SVector,
        lambda: &ExactScalar,
        mu: &ExactScalar,
    ) -> Result<NodeId, RuleError> {
        if x.is_origin() {
            return Err(RuleError::Precondition("ScaleDown: X != 0 in S(g)".into()));
        }
        let turned = self.frame.quarter_turn(&x.offset()).scale(mu);
        let aux = self.frame.point(&turned)?;
        let lm1 = lambda - &ExactScalar::one();
        let mid = x.s_add(&aux);
        let diff = x.s_scale(&lm1).s_sub(&aux);
        let first = self.apply_monotone(&diff, &mid)?;
        let second = self.apply_monotone(&aux, x)?;
        let [xi, auxi, midi, diffi, target] = self.intern_all(
            [x.base(), aux.base(), mid.base(), diff.base(), x.s_scale(lambda).base()].map(Clone::clone),
        )?;
        self.push(
            Rule::ScaleDown {
                x: xi,
                lambda: lambda.clone(),
                aux: auxi,
                mid: midi,
                diff: diffi,
                target,
            },
            vec![self.root, first, second],
        )
    }

    /// Case split: `v(g + y) + v(g - y/<y,y>) = 1` for `y ⟂ g`. Returns the
    /// split node; arms are opened with [`Builder::open_arm`].
    pub fn apply_case_split(&mut self, y: &Vector3) -> Result<NodeId, RuleError> {
        let g = self.frame.g().clone();
        let ny = crate::geometry::norm2(y);
        let alpha = ny.recip()?;
        let plus = self.frame.point(y)?;
        let minus = self.frame.point(&-&y.scale(&alpha))?;
        let aux = sum_rule_aux(&plus, &minus)?;
        let [yi, p, mi, z, u, m] =
            self.intern_all([y, plus.base(), minus.base(), &aux.z, &aux.u, &aux.m].map(Clone::clone))?;
        debug_assert_eq!(aux.w, g);
        self.push(
            Rule::CaseSplit {
                y: yi,
                plus: p,
                minus: mi,
                z,
                u,
                m,
            },
            vec![self.root],
        )
    }

    /// Enters arm `arm` of `split` and records its assumption.
    pub fn open_arm(&mut self, split: NodeId, arm: u8) -> Result<NodeId, RuleError> {
        self.context.push((split, arm));
        let r = self.push(Rule::BranchAssumption { split, arm }, vec![split]);
        if r.is_err() {
            self.context.pop();
        }
        r
    }

    pub fn close_arm(&mut self) {
        self.context.pop();
    }

    /// Current branch context.
    pub fn context(&self) -> &[(NodeId, u8)] {
        &self.context
    }

    pub fn finish(self) -> Derivation {
        Derivation {
            frame: self.frame,
            seed: self.seed,
            nodes: self.nodes,
        }
    }
}
