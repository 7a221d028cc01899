use super::*;
use crate::geometry::{Frame, Vector3};
use crate::scalar::{Evaluator, ExactScalar, PrecisionConfig, SymbolEnv};

fn setup() -> (VectorTable, Evaluator) {
    let ev = Evaluator::new(SymbolEnv::new(), PrecisionConfig::default()).unwrap();
    (VectorTable::new(), ev)
}

fn id_of(table: &VectorTable, v: &Vector3) -> VecId {
    table
        .vectors()
        .iter()
        .position(|w| crate::geometry::projectively_equal(w, v).unwrap())
        .expect("vector not interned")
}

#[test]
fn sum_rule_on_opposite_points() {
    let (mut table, mut ev) = setup();
    let frame = Frame::standard(1);
    let mut b = Builder::new(&mut table, &mut ev, frame.clone()).unwrap();
    let x = frame.point(&Vector3::from_ints(0, 1, 0)).unwrap();
    let y = frame.point(&Vector3::from_ints(0, -1, 0)).unwrap();
    let n = b.apply_sum_rule(&x, &y).unwrap();
    let Rule::SumRule { w, .. } = b.node(n).rule else { unreachable!() };
    // w_S of two opposite unit offsets is g itself.
    assert_eq!(w, b.seed());
    let d = b.finish();
    let report = verify_derivation(&d, &table, &ev).unwrap();
    assert!(report.passed, "{report}");
}

#[test]
fn sum_rule_rejects_wrong_inner_product() {
    let (mut table, mut ev) = setup();
    let frame = Frame::standard(1);
    let mut b = Builder::new(&mut table, &mut ev, frame.clone()).unwrap();
    let x = frame.point(&Vector3::from_ints(0, 1, 0)).unwrap();
    let y = frame.point(&Vector3::from_ints(0, 0, 1)).unwrap();
    let r = b.apply_sum_rule(&x, &y);
    assert!(matches!(r, Err(RuleError::Precondition(_))), "{r:?}");
}

#[test]
fn monotone_example() {
    let (mut table, mut ev) = setup();
    let frame = Frame::standard(1);
    let mut b = Builder::new(&mut table, &mut ev, frame.clone()).unwrap();
    let x = frame.point(&Vector3::from_ints(0, 1, 0)).unwrap();
    let y = frame.point(&Vector3::from_ints(0, 0, 1)).unwrap();
    let n = b.apply_monotone(&x, &y).unwrap();
    let Rule::Monotone { parts: Some(p), y: yi, .. } = b.node(n).rule.clone() else {
        panic!("expected full monotone parts")
    };
    assert_eq!(b.vector(p.sum), &Vector3::from_ints(1, 1, 1));
    assert_eq!(b.vector(yi), &Vector3::from_ints(1, 0, 1));
    // t = -2: W = -2X + Y = g - 2 e2 + e3
    assert_eq!(b.vector(p.big_w), &Vector3::from_ints(1, -2, 1));
    let c = b.node(n).conclusion.clone();
    let le = Conclusion::Le { lo: p.sum, hi: yi };
    assert!(logic::entails(&[&c], &[], &le).unwrap());
    let d = b.finish();
    assert!(verify_derivation(&d, &table, &ev).unwrap().passed);
}

#[test]
fn scale_down_by_two() {
    let (mut table, mut ev) = setup();
    let frame = Frame::standard(1);
    let mut b = Builder::new(&mut table, &mut ev, frame.clone()).unwrap();
    let x = frame.point(&Vector3::from_ints(0, 1, 0)).unwrap();
    let n = b
        .apply_scale_down(&x, &ExactScalar::int(2), &ExactScalar::one())
        .unwrap();
    let Rule::ScaleDown { target, x: xi, .. } = b.node(n).rule.clone() else { unreachable!() };
    assert_eq!(target, id_of(b.table(), &Vector3::from_ints(1, 2, 0)));
    assert_eq!(b.node(n).conclusion, Conclusion::Le { lo: target, hi: xi });
    let d = b.finish();
    let report = verify_derivation(&d, &table, &ev).unwrap();
    assert!(report.passed, "{report}");
}

#[test]
fn scale_down_needs_lambda_above_one() {
    let (mut table, mut ev) = setup();
    let frame = Frame::standard(1);
    let mut b = Builder::new(&mut table, &mut ev, frame.clone()).unwrap();
    let x = frame.point(&Vector3::from_ints(0, 1, 0)).unwrap();
    let r = b.apply_scale_down(&x, &ExactScalar::ratio(1, 2), &ExactScalar::one());
    assert!(matches!(r, Err(RuleError::Precondition(_))), "{r:?}");
}

#[test]
fn case_split_rejects_zero_offset() {
    let (mut table, mut ev) = setup();
    let mut b = Builder::new(&mut table, &mut ev, Frame::standard(2)).unwrap();
    assert!(b.apply_case_split(&Vector3::zero()).is_err());
}

#[test]
fn case_split_arms_and_closure() {
    let (mut table, mut ev) = setup();
    let frame = Frame::standard(1);
    let mut b = Builder::new(&mut table, &mut ev, frame).unwrap();
    let split = b.apply_case_split(&Vector3::from_ints(0, 2, 0)).unwrap();
    let Rule::CaseSplit { plus, minus, .. } = b.node(split).rule else { unreachable!() };
    assert_eq!(b.vector(plus), &Vector3::from_ints(1, 2, 0));
    // alpha = 1/4, so g - y/4 = (1, -1/2, 0) ~ (2, -1, 0)
    assert!(crate::geometry::projectively_equal(b.vector(minus), &Vector3::from_ints(2, -1, 0)).unwrap());
    let a0 = b.open_arm(split, 0).unwrap();
    b.close_arm();
    let a1 = b.open_arm(split, 1).unwrap();
    b.close_arm();
    // Neither arm is contradictory on its own, so closing must fail.
    let r = b.push(
        Rule::TheoremContradiction {
            split,
            arms: [vec![a0], vec![a1]],
        },
        vec![split],
    );
    assert!(matches!(r, Err(RuleError::Precondition(_))));
}

#[test]
fn empty_derivation_verifies() {
    let (table, ev) = setup();
    let d = Derivation {
        frame: Frame::standard(1),
        seed: 0,
        nodes: Vec::new(),
    };
    // seed id must resolve
    assert!(verify_derivation(&d, &table, &ev).is_err());
    let table = VectorTable::from_vectors(vec![Vector3::basis(1)]);
    assert!(verify_derivation(&d, &table, &ev).unwrap().passed);
}

#[test]
fn perturbed_vector_is_caught() {
    let (mut table, mut ev) = setup();
    let frame = Frame::standard(1);
    let mut b = Builder::new(&mut table, &mut ev, frame.clone()).unwrap();
    let x = frame.point(&Vector3::from_ints(0, 1, 1)).unwrap();
    let y = frame.point(&Vector3::from_ints(0, -1, 0)).unwrap();
    let n = b.apply_sum_rule(&x, &y).unwrap();
    let Rule::SumRule { z, .. } = b.node(n).rule else { unreachable!() };
    let d = b.finish();
    let mut vs = table.vectors().to_vec();
    vs[z] = &vs[z] + &Vector3::from_ints(0, 0, 1);
    let bad = VectorTable::from_vectors(vs);
    let report = verify_derivation(&d, &bad, &ev).unwrap();
    assert!(!report.passed);
    assert_eq!(report.first_failure().unwrap().0, Some(n));
}
