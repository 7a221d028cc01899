use std::sync::OnceLock;

use bkscert::certificate::{parse, parse_vector, serialize, verify_certificate, CertError, Certificate};
use bkscert::compiler::assemble_instance;
use bkscert::geometry::Vector3;
use bkscert::pipeline::PipelineConfig;
use bkscert::scalar::{parse_scalar, Evaluator, ExactScalar, PrecisionConfig, SymbolEnv};

/// Single-seed certificate, shared by the tests below.
fn text() -> &'static str {
    static TEXT: OnceLock<String> = OnceLock::new();
    TEXT.get_or_init(|| {
        let ev = Evaluator::new(SymbolEnv::new(), PrecisionConfig::default()).unwrap();
        let cfg = PipelineConfig::default();
        let inst = assemble_instance(&[1], None, ev, &cfg).unwrap();
        serialize(&Certificate::from_instance(&inst, &cfg, None))
    })
}

#[test]
fn round_trip_is_identity() {
    let cert = parse(text()).unwrap();
    assert_eq!(serialize(&cert), text());
    assert_eq!(parse(&serialize(&cert)).unwrap(), cert);
    assert!(text().ends_with("}\n") && !text().contains('\r'));
}

#[test]
fn parsed_certificate_verifies() {
    let cert = parse(text()).unwrap();
    let report = verify_certificate(&cert).unwrap();
    assert!(report.passed, "{report}");
}

#[test]
fn canonical_scalars() {
    let s = parse_scalar("1/sqrt(3)").unwrap();
    assert_eq!(s.to_string(), "sqrt(3)/3");
    let v = Vector3::new(ExactScalar::one(), ExactScalar::one(), ExactScalar::sqrt_int(2));
    let text: Vec<String> = v.scalars().map(|c| c.to_string()).collect();
    assert_eq!(text, ["1", "1", "sqrt(2)"]);
    assert_eq!(parse_vector("(1, 1, sqrt(2))").unwrap(), v);
    assert_eq!(parse_vector("[1,1,sqrt(8)/2]").unwrap(), v);
    assert!(parse_vector("1, 2").is_err());
}

#[test]
fn syntax_error_has_position() {
    let broken = text().replacen("\"vectors\": [", "\"vectors\": [[", 1);
    match parse(&broken) {
        Err(CertError::Syntax { line, column, .. }) => assert!(line > 1 && column > 0),
        other => panic!("expected a syntax error, got {other:?}"),
    }
}

#[test]
fn unknown_version() {
    let t = text().replacen("\"format_version\": 1", "\"format_version\": 2", 1);
    assert!(matches!(parse(&t), Err(CertError::UnknownVersion(v)) if v == "2"));
}

#[test]
fn bad_scalar_is_a_grammar_error() {
    let t = text().replacen("[\"1\", \"0\", \"0\"]", "[\"sqrt(-1)\", \"0\", \"0\"]", 1);
    assert_ne!(t, text());
    assert!(matches!(parse(&t), Err(CertError::Scalar { .. })));
}

#[test]
fn missing_vector_is_named() {
    let cert = parse(text()).unwrap();
    let n = cert.vectors.len();
    let t = text().replacen("\"vector\": 0", &format!("\"vector\": {}", n + 5), 1);
    match parse(&t) {
        Err(CertError::Unresolved(what)) => assert!(what.contains(&format!("v{}", n + 5)), "{what}"),
        other => panic!("expected an unresolved id, got {other:?}"),
    }
}

#[test]
fn perturbed_vector_fails_verification() {
    let mut cert = parse(text()).unwrap();
    // a vector used by the first SumRule, nudged by 1e-6
    let id = 1;
    let eps = parse_scalar("1/1000000").unwrap();
    let v = &cert.vectors[id];
    cert.vectors[id] = Vector3::new(&v.coords[0] + &eps, v.coords[1].clone(), v.coords[2].clone());
    let report = verify_certificate(&cert).unwrap();
    assert!(!report.passed);
    let (node, _) = report.derivations[0].first_failure().unwrap();
    assert_eq!(node, Some(1), "{}", report.derivations[0]);
}

#[test]
fn stored_triple_set_must_match() {
    let mut cert = parse(text()).unwrap();
    cert.context_set.triples.pop();
    cert.context_set.provenance.pop();
    let report = verify_certificate(&cert).unwrap();
    assert!(!report.passed && !report.problems.is_empty());
}

#[test]
fn rescaled_vector_is_rejected() {
    let mut cert = parse(text()).unwrap();
    // same line, different representative
    cert.vectors[2] = cert.vectors[2].scale(&ExactScalar::int(-2));
    let report = verify_certificate(&cert).unwrap();
    assert!(!report.passed);
    assert!(report.problems.iter().any(|p| p.contains("v2 is not in normal form")), "{report}");
}
