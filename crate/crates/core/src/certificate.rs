//! Certificate files: canonical JSON holding the scalar header, the vector
//! table, every derivation and the compiled context sets.
//!
//! Keys are sorted, scalars are expression strings in the grammar of
//! [`crate::scalar::expr`], lines end in `\n`. Vector ids are positions in
//! `vectors`; node ids are positions in a derivation's `nodes`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::compiler::{check_triples, sub_set, union_set, CompileError, ContextSet, Instance, Origin};
use crate::geometry::{projectively_equal, Frame, GeometryError, Vector3};
use crate::pipeline::PipelineConfig;
use crate::rules::{verify_derivation, Conclusion, Derivation, Node, Rule, RuleError, VecId, VectorTable, VerificationReport};
use crate::scalar::{parse_scalar, Evaluator, ExactScalar, ExprError, PairDef, PrecisionConfig, ScalarError, SymbolEnv};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unsupported format_version {0}")]
    UnknownVersion(String),
    #[error("unresolved reference: {0}")]
    Unresolved(String),
    #[error("bad scalar expression in {field}: {source}")]
    Scalar { field: String, source: ExprError },
    #[error("malformed certificate: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Generator parameters; carried along, and the precision block is what
/// `verify` evaluates with.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Metadata {
    pub generator: String,
    pub precision: PrecisionConfig,
    pub max_chain_steps: u32,
    /// `--target`, when one was given.
    pub target: Option<Vector3>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub env: SymbolEnv,
    pub vectors: Vec<Vector3>,
    /// Seed axis of each derivation.
    pub axes: Vec<usize>,
    pub derivations: Vec<Derivation>,
    pub sub_instances: Vec<ContextSet>,
    pub context_set: ContextSet,
    pub metadata: Metadata,
}

impl Certificate {
    pub fn from_instance(inst: &Instance, cfg: &PipelineConfig, target: Option<Vector3>) -> Certificate {
        Certificate {
            env: inst.evaluator.env().clone(),
            // one representative per line, so a rescaled vector is a change
            // one representative per line, so a rescaled vector is a change
            vectors: inst
                .table
                .vectors()
                .iter()
                .map(|v| v.normal_form().expect("table vectors are nonzero"))
                .collect(),
            axes: inst.axes.clone(),
            derivations: inst.derivations.clone(),
            sub_instances: inst.sub_instances.clone(),
            context_set: inst.context_set.clone(),
            metadata: Metadata {
                generator: format!("bkscert {}", env!("CARGO_PKG_VERSION")),
                precision: inst.evaluator.cfg().clone(),
                max_chain_steps: cfg.max_chain_steps,
                target,
            },
        }
    }

    /// Radicals used anywhere in the certificate.
    pub fn sqrt_tower(&self) -> Vec<u64> {
        let mut tower = BTreeSet::new();
        for s in self.scalars() {
            tower.extend(s.radicals());
        }
        tower.into_iter().collect()
    }

    fn scalars(&self) -> impl Iterator<Item = &ExactScalar> {
        let pairs = self.env.pairs.values().map(|d| match d {
            PairDef::Rotation { cos_theta, .. } => cos_theta,
            PairDef::Scale { kappa, .. } => kappa,
        });
        let frames = self
            .derivations
            .iter()
            .flat_map(|d| [d.frame.g(), d.frame.h1(), d.frame.h2()]);
        let lambdas = self.derivations.iter().flat_map(|d| &d.nodes).filter_map(|n| match &n.rule {
            Rule::ScaleDown { lambda, .. } => Some(lambda),
            _ => None,
        });
        self.vectors
            .iter()
            .chain(frames)
            .chain(&self.metadata.target)
            .flat_map(|v| v.scalars())
            .chain(pairs)
            .chain(lambdas)
    }

    pub fn table(&self) -> VectorTable {
        VectorTable::from_vectors(self.vectors.clone())
    }

    pub fn evaluator(&self) -> Result<Evaluator, ScalarError> {
        Evaluator::new(self.env.clone(), self.metadata.precision.clone())
    }
}

pub(crate) mod scalar_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::scalar::{parse_scalar, ExactScalar};

    pub fn serialize<S: Serializer>(v: &ExactScalar, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ExactScalar, D::Error> {
        let text = String::deserialize(d)?;
        parse_scalar(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDto {
    format_version: u64,
    header: HeaderDto,
    vectors: Vec<[String; 3]>,
    derivations: Vec<DerivationDto>,
    sub_instances: Vec<ContextSet>,
    context_set: ContextSet,
    metadata: MetadataDto,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderDto {
    sqrt_tower: Vec<u64>,
    pairs: BTreeMap<u32, PairDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum PairDto {
    Rotation { cos_theta: String, steps: u32 },
    Scale { kappa: String, rotation: u32, steps: u32 },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DerivationDto {
    axis: usize,
    frame: [[String; 3]; 3],
    seed: usize,
    nodes: Vec<Node>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetadataDto {
    generator: String,
    max_chain_steps: u32,
    precision: PrecisionDto,
    target: Option<[String; 3]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrecisionDto {
    precision_bits: u32,
    max_precision_bits: u32,
    zero_tolerance: String,
}

fn vector_text(v: &Vector3) -> [String; 3] {
    v.coords.clone().map(|c| c.to_string())
}

/// Canonical text: sorted keys, two-space indent, trailing newline.
pub fn serialize(cert: &Certificate) -> String {
    let pairs = cert
        .env
        .pairs
        .iter()
        .map(|(&k, d)| {
            let dto = match d {
                PairDef::Rotation { cos_theta, steps } => PairDto::Rotation {
                    cos_theta: cos_theta.to_string(),
                    steps: *steps,
                },
                PairDef::Scale { kappa, rotation, steps } => PairDto::Scale {
                    kappa: kappa.to_string(),
                    rotation: *rotation,
                    steps: *steps,
                },
            };
            (k, dto)
        })
        .collect();
    let derivations = cert
        .derivations
        .iter()
        .zip(&cert.axes)
        .map(|(d, &axis)| DerivationDto {
            axis,
            frame: [d.frame.g(), d.frame.h1(), d.frame.h2()].map(vector_text),
            seed: d.seed,
            nodes: d.nodes.clone(),
        })
        .collect();
    let p = &cert.metadata.precision;
    let dto = FileDto {
        format_version: FORMAT_VERSION,
        header: HeaderDto {
            sqrt_tower: cert.sqrt_tower(),
            pairs,
        },
        vectors: cert.vectors.iter().map(vector_text).collect(),
        derivations,
        sub_instances: cert.sub_instances.clone(),
        context_set: cert.context_set.clone(),
        metadata: MetadataDto {
            generator: cert.metadata.generator.clone(),
            max_chain_steps: cert.metadata.max_chain_steps,
            precision: PrecisionDto {
                precision_bits: p.precision_bits,
                max_precision_bits: p.max_precision_bits,
                zero_tolerance: ExactScalar::rational(p.zero_tolerance.clone()).to_string(),
            },
            target: cert.metadata.target.as_ref().map(vector_text),
        },
    };
    // Going through `Value` sorts every object's keys.
    let value = serde_json::to_value(&dto).expect("certificate DTOs always serialize");
    let mut text = String::new();
    write_value(&mut text, &value, 0);
    text.push('\n');
    text
}

/// Pretty printing, except that arrays holding no objects or arrays stay on
/// one line.
fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, n: usize| out.extend(std::iter::repeat_n(' ', 2 * n));
    match v {
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
        Value::Array(items) if items.iter().any(|x| x.is_object() || x.is_array() && !is_flat(x)) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, indent + 1);
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, item, indent);
            }
            out.push(']');
        }
        leaf => out.push_str(&leaf.to_string()),
    }
}

fn is_flat(v: &Value) -> bool {
    match v {
        Value::Array(items) => items.iter().all(|x| !x.is_object() && !x.is_array()),
        Value::Object(map) => map.is_empty(),
        _ => true,
    }
}

fn scalar(field: impl Into<String>, text: &str) -> Result<ExactScalar, CertError> {
    parse_scalar(text).map_err(|source| CertError::Scalar {
        field: field.into(),
        source,
    })
}

fn vector(field: &str, t: &[String; 3]) -> Result<Vector3, CertError> {
    let [x, y, z] = [0, 1, 2].map(|i| scalar(format!("{field}[{i}]"), &t[i]));
    Ok(Vector3::new(x?, y?, z?))
}

/// Scalars inside rules are decoded by serde; they are parsed here first so
/// a bad one surfaces as a scalar error rather than a schema error.
fn precheck_rule_scalars(value: &Value) -> Result<(), CertError> {
    let Some(ds) = value.get("derivations").and_then(Value::as_array) else {
        return Ok(());
    };
    for (i, d) in ds.iter().enumerate() {
        let Some(nodes) = d.get("nodes").and_then(Value::as_array) else {
            continue;
        };
        for (j, n) in nodes.iter().enumerate() {
            let lambda = n.pointer("/rule/ScaleDown/lambda").and_then(Value::as_str);
            if let Some(text) = lambda {
                scalar(format!("derivations[{i}].nodes[{j}].lambda"), text)?;
            }
        }
    }
    Ok(())
}

pub fn parse(text: &str) -> Result<Certificate, CertError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CertError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    match value.get("format_version") {
        Some(Value::Number(n)) if n.as_u64() == Some(FORMAT_VERSION) => {}
        Some(v) => return Err(CertError::UnknownVersion(v.to_string())),
        None => return Err(CertError::Malformed("missing format_version".into())),
    }
    precheck_rule_scalars(&value)?;
    let dto: FileDto = serde_json::from_value(value).map_err(|e| CertError::Malformed(e.to_string()))?;

    let mut env = SymbolEnv::new();
    for (&k, p) in &dto.header.pairs {
        let def = match p {
            PairDto::Rotation { cos_theta, steps } => PairDef::Rotation {
                cos_theta: scalar(format!("header.pairs.{k}.cos_theta"), cos_theta)?,
                steps: *steps,
            },
            PairDto::Scale { kappa, rotation, steps } => PairDef::Scale {
                kappa: scalar(format!("header.pairs.{k}.kappa"), kappa)?,
                rotation: *rotation,
                steps: *steps,
            },
        };
        env.define(k, def);
    }
    let vectors = dto
        .vectors
        .iter()
        .enumerate()
        .map(|(i, t)| vector(&format!("vectors[{i}]"), t))
        .collect::<Result<Vec<_>, _>>()?;
    let mut axes = Vec::new();
    let mut derivations = Vec::new();
    for (i, d) in dto.derivations.into_iter().enumerate() {
        let [g, h1, h2] = [0, 1, 2].map(|j| vector(&format!("derivations[{i}].frame[{j}]"), &d.frame[j]));
        let frame = Frame::new(g?, h1?, h2?).map_err(|e| CertError::Malformed(format!("derivations[{i}].frame: {e}")))?;
        axes.push(d.axis);
        derivations.push(Derivation {
            frame,
            seed: d.seed,
            nodes: d.nodes,
        });
    }
    let m = dto.metadata;
    let tolerance = scalar("metadata.precision.zero_tolerance", &m.precision.zero_tolerance)?
        .as_rational()
        .ok_or_else(|| CertError::Malformed("zero_tolerance must be rational".into()))?;
    let target = m.target.as_ref().map(|t| vector("metadata.target", t)).transpose()?;
    let cert = Certificate {
        env,
        vectors,
        axes,
        derivations,
        sub_instances: dto.sub_instances,
        context_set: dto.context_set,
        metadata: Metadata {
            generator: m.generator,
            precision: PrecisionConfig {
                precision_bits: m.precision.precision_bits,
                zero_tolerance: tolerance,
                max_precision_bits: m.precision.max_precision_bits,
            },
            max_chain_steps: m.max_chain_steps,
            target,
        },
    };
    resolve(&cert)?;
    let tower = cert.sqrt_tower();
    if tower != dto.header.sqrt_tower {
        return Err(CertError::Malformed(format!(
            "header sqrt_tower {:?} does not match the radicals in use {:?}",
            dto.header.sqrt_tower, tower
        )));
    }
    Ok(cert)
}

/// Every id in the certificate points at something that exists.
fn resolve(cert: &Certificate) -> Result<(), CertError> {
    let nv = cert.vectors.len();
    let unresolved = |what: String| Err(CertError::Unresolved(what));
    for (k, def) in &cert.env.pairs {
        if let PairDef::Scale { rotation, .. } = def {
            if !cert.env.pairs.contains_key(rotation) {
                return unresolved(format!("pair {rotation} (rotation of pair {k})"));
            }
        }
    }
    for s in cert.scalars() {
        if let Some(p) = s.pairs().into_iter().find(|p| !cert.env.pairs.contains_key(p)) {
            return unresolved(format!("symbol pair c{p}/s{p} in {s}"));
        }
    }
    if cert.sub_instances.len() != cert.derivations.len() {
        return Err(CertError::Malformed(format!(
            "{} derivations but {} sub-instances",
            cert.derivations.len(),
            cert.sub_instances.len()
        )));
    }
    for (i, d) in cert.derivations.iter().enumerate() {
        if d.seed >= nv {
            return unresolved(format!("vector v{} (seed of derivation {i})", d.seed));
        }
        for (j, n) in d.nodes.iter().enumerate() {
            if let Some(v) = n.rule.vectors().into_iter().chain(n.conclusion.vectors()).find(|&v| v >= nv) {
                return unresolved(format!("vector v{v} (derivation {i}, node n{j})"));
            }
            let refs = n
                .premises
                .iter()
                .copied()
                .chain(n.context.iter().map(|&(s, _)| s))
                .chain(n.rule.node_refs());
            for r in refs {
                if r >= d.nodes.len() {
                    return unresolved(format!("node n{r} (derivation {i}, node n{j})"));
                }
            }
            if let Rule::ChainLink { rotation, scale, .. } = &n.rule {
                for p in [rotation, scale] {
                    if !cert.env.pairs.contains_key(p) {
                        return unresolved(format!("pair {p} (derivation {i}, node n{j})"));
                    }
                }
            }
        }
    }
    let sets = cert
        .sub_instances
        .iter()
        .enumerate()
        .map(|(i, s)| (format!("sub_instances[{i}]"), s))
        .chain([("context_set".to_string(), &cert.context_set)]);
    for (name, set) in sets {
        if set.members.len() != set.points.len() || set.provenance.len() != set.triples.len() {
            return Err(CertError::Malformed(format!("{name}: parallel lists differ in length")));
        }
        let ids = set.points.iter().chain(set.members.iter().flatten());
        if let Some(v) = ids.copied().find(|&v| v >= nv) {
            return unresolved(format!("vector v{v} ({name})"));
        }
        if let Some(p) = set.triples.iter().flatten().find(|&&p| p >= set.points.len()) {
            return unresolved(format!("point {p} ({name})"));
        }
        for o in set.provenance.iter().flatten() {
            if let Origin::Node { derivation, node } = *o {
                if cert.derivations.get(derivation).is_none_or(|d| node >= d.nodes.len()) {
                    return unresolved(format!("node n{node} of derivation {derivation} ({name})"));
                }
            }
        }
    }
    Ok(())
}

/// Outcome of [`verify_certificate`].
#[derive(Clone, Debug)]
pub struct CertificateReport {
    pub derivations: Vec<VerificationReport>,
    /// Defects outside the individual derivations.
    pub problems: Vec<String>,
    pub passed: bool,
}

impl CertificateReport {
    /// Failed only because some interval check could not decide a sign.
    pub fn undecided(&self) -> bool {
        if self.passed || !self.problems.is_empty() {
            return false;
        }
        let mut failures = self.derivations.iter().flat_map(|r| &r.nodes).filter(|n| !n.passed).peekable();
        failures.peek().is_some()
            && failures.all(|n| {
                n.problems.is_empty()
                    && n.conditions.iter().filter(|c| !c.passed).all(|c| {
                        c.detail.as_deref().is_some_and(|d| d.contains("undecided sign"))
                    })
            })
    }
}

impl fmt::Display for CertificateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.derivations.iter().enumerate() {
            writeln!(f, "== derivation {i}")?;
            write!(f, "{r}")?;
        }
        for p in &self.problems {
            writeln!(f, "problem: {p}")?;
        }
        writeln!(f, "certificate: {}", if self.passed { "pass" } else { "FAIL" })
    }
}

/// Re-checks everything from the parsed content alone: every derivation node,
/// that each derivation closes in a contradiction from its seed axis, the
/// compiled triple sets against the stored ones, and exact orthogonality of
/// every stored triple.
pub fn verify_certificate(cert: &Certificate) -> Result<CertificateReport, VerifyError> {
    let table = cert.table();
    let ev = cert.evaluator()?;
    let mut problems = Vec::new();
    let mut reports = Vec::new();
    let used: BTreeSet<VecId> = cert
        .derivations
        .iter()
        .flat_map(|d| d.nodes.iter().flat_map(|n| n.rule.vectors()))
        .chain(cert.context_set.members.iter().flatten().copied())
        .collect();
    for (i, v) in cert.vectors.iter().enumerate() {
        if !used.contains(&i) {
            problems.push(format!("v{i} is not used by any rule or triple"));
        }
        if !v.is_normal() {
            problems.push(format!("v{i} is not in normal form"));
        }
    }
    for (i, (d, &axis)) in cert.derivations.iter().zip(&cert.axes).enumerate() {
        if !(1..=3).contains(&axis) || d.frame != Frame::standard(axis) {
            problems.push(format!("derivation {i}: frame is not the standard frame of axis {axis}"));
        } else if !projectively_equal(table.get(d.seed)?, d.frame.g())? {
            problems.push(format!("derivation {i}: seed v{} is not the frame vector", d.seed));
        }
        if d.final_conclusion() != Some(&Conclusion::Contradiction) {
            problems.push(format!("derivation {i} does not end in a contradiction"));
        }
        if !d.nodes.first().is_some_and(|n| n.rule == Rule::Assumption { vector: d.seed }) {
            problems.push(format!("derivation {i} is not rooted at its seed"));
        }
        reports.push(verify_derivation(d, &table, &ev)?);
        if cert.sub_instances[i] != sub_set(d, i) {
            problems.push(format!("sub_instances[{i}] differs from the compiled expansion"));
        }
        if let Err(e) = check_triples(&cert.sub_instances[i], &table) {
            problems.push(format!("sub_instances[{i}]: {e}"));
        }
    }
    let axes: BTreeSet<usize> = cert.axes.iter().copied().collect();
    if axes.len() != cert.axes.len() {
        problems.push("a seed axis occurs twice".into());
    }
    match base_triple(&cert.vectors) {
        Some(base) => {
            if cert.context_set != union_set(&cert.derivations, base) {
                problems.push("context_set differs from the compiled union".into());
            }
        }
        None => problems.push("the basis vectors e1, e2, e3 are missing from the vector table".into()),
    }
    if let Err(e) = check_triples(&cert.context_set, &table) {
        match e {
            CompileError::Rule(e) => return Err(e.into()),
            e => problems.push(format!("context_set: {e}")),
        }
    }
    let passed = problems.is_empty() && reports.iter().all(|r| r.passed);
    Ok(CertificateReport {
        derivations: reports,
        problems,
        passed,
    })
}

/// First ids on the lines of `e1`, `e2`, `e3`.
fn base_triple(vectors: &[Vector3]) -> Option<[usize; 3]> {
    let find = |k| {
        let e = Vector3::basis(k);
        vectors.iter().position(|v| projectively_equal(v, &e).unwrap_or(false))
    };
    Some([find(1)?, find(2)?, find(3)?])
}


/// `"a, b, c"`, optionally wrapped in parentheses or brackets; each
/// coordinate is a scalar expression.
pub fn parse_vector(text: &str) -> Result<Vector3, CertError> {
    let t = text.trim();
    let inner = match (t.chars().next(), t.chars().last()) {
        (Some('('), Some(')')) | (Some('['), Some(']')) if top_level_commas(&t[1..t.len() - 1]).len() == 2 => {
            &t[1..t.len() - 1]
        }
        _ => t,
    };
    let cuts = top_level_commas(inner);
    if cuts.len() != 2 {
        return Err(CertError::Malformed(format!("expected three comma-separated coordinates, got {text:?}")));
    }
    let parts = [&inner[..cuts[0]], &inner[cuts[0] + 1..cuts[1]], &inner[cuts[1] + 1..]];
    let [x, y, z] = [0, 1, 2].map(|i| scalar(format!("coordinate {}", i + 1), parts[i]));
    Ok(Vector3::new(x?, y?, z?))
}

fn top_level_commas(s: &str) -> Vec<usize> {
    let mut depth = 0i32;
    let mut cuts = Vec::new();
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => cuts.push(i),
            _ => {}
        }
    }
    cuts
}
