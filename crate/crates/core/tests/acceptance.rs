//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! fails. Built without the libtest harness so the lines always show.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bkscert::certificate::{parse, serialize, verify_certificate, Certificate};
use bkscert::chain::{build_chain, chain_params, conclude_lemma2, DEFAULT_MAX_STEPS};
use bkscert::compiler::assemble_instance;
use bkscert::geometry::{inner, norm2, w_s, Frame, SVector, Vector3};
use bkscert::oracle::{check_consistency, ColoringProblem, Mode, Verdict};
use bkscert::pipeline::PipelineConfig;
use bkscert::rules::{verify_derivation, Builder, VectorTable};
use bkscert::scalar::{Evaluator, ExactScalar, PrecisionConfig, SymbolEnv};

const BIN: &str = env!("CARGO_BIN_EXE_bkscert");

// Tolerances and budgets of the acceptance criteria.
const THETA_DEG: (f64, f64) = (125.264, 1e-3);
const POWER4: (f64, f64) = (0.53268, 5e-6);
const POWER5: (f64, f64) = (0.61016, 5e-6);
const ALPHA: (f64, f64) = (1.05683, 5e-6);
const REPRO_BUDGET: Duration = Duration::from_secs(1);
const IDENTITY_INSTANCES: usize = 1000;
const CHAIN_INSTANCES: usize = 100;
const RESIDUAL_WIDTH: f64 = 1e-30;
const END_TO_END_BUDGET: Duration = Duration::from_secs(300);
const ORACLE_INSTANCES: usize = 1000;
const ORACLE_MAX_POINTS: usize = 20;
const TAMPER_TRIALS: usize = 100;

type Outcome = Result<String, String>;

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let criteria: [(&str, &dyn Fn(&Path) -> Outcome); 6] = [
        ("worked example reproduction", &|_| worked_example()),
        ("identity property suite", &|_| identities()),
        ("chain construction", &|_| chains()),
        ("end-to-end finite constructivity", &end_to_end),
        ("oracle cross-validation", &oracle),
        ("tamper detection", &|_| tampering()),
    ];
    // optional criterion numbers on the command line select a subset
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| run(dir.path())))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_text(&p))));
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({detail}; {t:.1?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({why}; {t:.1?})", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn panic_text(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_default()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("run bkscert")
}

// ---------------------------------------------------------------- 1

/// `[lo, hi]` printed after `name`.
fn printed_interval(out: &str, name: &str) -> Result<(f64, f64), String> {
    let line = out
        .lines()
        .find(|l| l.starts_with(name))
        .ok_or_else(|| format!("no line for {name}"))?;
    let body = line[name.len()..].trim().trim_start_matches('[').trim_end_matches(']');
    let (lo, hi) = body.split_once(',').ok_or_else(|| format!("bad interval line {line:?}"))?;
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("{line:?}: {e}"));
    Ok((parse(lo)?, parse(hi)?))
}

fn printed_int(out: &str, name: &str) -> Result<u64, String> {
    let line = out.lines().find(|l| l.starts_with(name)).ok_or_else(|| format!("no line for {name}"))?;
    line[name.len()..].trim().parse().map_err(|e| format!("{line:?}: {e}"))
}

fn worked_example() -> Outcome {
    let start = Instant::now();
    let out = run(&["repro"]);
    let elapsed = start.elapsed();
    ensure(out.status.success(), || format!("repro exited with {}", out.status))?;
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    for (name, (want, tol)) in [
        ("theta (degrees)", THETA_DEG),
        ("cos(theta/4)^4", POWER4),
        ("cos(theta/5)^5", POWER5),
        ("alpha", ALPHA),
    ] {
        let (lo, hi) = printed_interval(&text, name)?;
        ensure(lo >= want - tol && hi <= want + tol, || {
            format!("{name} = [{lo}, {hi}] is not within {want} ± {tol}")
        })?;
    }
    let n = printed_int(&text, "minimal n")?;
    let len = printed_int(&text, "chain length")?;
    ensure(n == 5 && len == 7, || format!("n = {n}, chain length = {len}"))?;
    ensure(elapsed < REPRO_BUDGET, || format!("repro took {elapsed:.2?}"))?;
    Ok(format!("n = {n}, length {len}, {elapsed:.0?}"))
}

// ---------------------------------------------------------------- 2

fn rational(rng: &mut ChaCha8Rng) -> ExactScalar {
    ExactScalar::ratio(rng.gen_range(-20..=20), rng.gen_range(1..=12))
}

fn nonzero_rational(rng: &mut ChaCha8Rng) -> ExactScalar {
    loop {
        let r = rational(rng);
        if !r.is_zero() {
            return r;
        }
    }
}

/// Rational rotation of the standard basis (Euler-Rodrigues).
fn random_frame(rng: &mut ChaCha8Rng) -> Frame {
    let a: Vec<ExactScalar> = (0..3).map(|_| rational(rng)).collect();
    let one = ExactScalar::one();
    let two = ExactScalar::int(2);
    let n2 = &(&a[0].square() + &a[1].square()) + &a[2].square();
    let d = &one + &n2;
    let diag = &one - &n2;
    // skew part [a]_x
    let skew = |i: usize, j: usize| -> ExactScalar {
        match (i, j) {
            (0, 1) => -&a[2],
            (1, 0) => a[2].clone(),
            (0, 2) => a[1].clone(),
            (2, 0) => -&a[1],
            (1, 2) => -&a[0],
            (2, 1) => a[0].clone(),
            _ => ExactScalar::zero(),
        }
    };
    let entry = |i: usize, j: usize| {
        let mut e = &(&a[i] * &a[j]) * &two;
        e = &e + &(&skew(i, j) * &two);
        if i == j {
            e = &e + &diag;
        }
        e.checked_div(&d).unwrap()
    };
    let col = |j: usize| Vector3::new(entry(0, j), entry(1, j), entry(2, j));
    Frame::new(col(0), col(1), col(2)).expect("rotation of an orthonormal basis")
}

/// Random point of `S(g)` with nonzero offset.
fn random_point(rng: &mut ChaCha8Rng, f: &Frame) -> SVector {
    loop {
        let off = &f.h1().scale(&rational(rng)) + &f.h2().scale(&rational(rng));
        if !off.is_zero() {
            return f.point(&off).unwrap();
        }
    }
}

/// `<a,h1><b,h1> + <a,h2><b,h2>`, written out here rather than borrowed.
fn parseval(f: &Frame, a: &Vector3, b: &Vector3) -> ExactScalar {
    let p = |h: &Vector3| &inner(a, h) * &inner(b, h);
    &p(f.h1()) + &p(f.h2())
}

fn identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let one = ExactScalar::one();
    let mut counts = [0usize; 6];
    for _ in 0..IDENTITY_INSTANCES {
        let f = random_frame(&mut rng);
        let g = f.g().clone();
        let x = random_point(&mut rng, &f);
        let (xb, xo) = (x.base().clone(), x.offset());
        let bx = parseval(&f, &xb, &xb);

        // decomposition of the ambient inner product
        let y = random_point(&mut rng, &f);
        let lhs = inner(&xb, y.base());
        let rhs = &(&inner(&xb, &g) * &inner(y.base(), &g)) + &parseval(&f, &xb, y.base());
        ensure(lhs == rhs && x.s_inner(&y) == parseval(&f, &xb, y.base()), || {
            format!("decomposition fails for X = {xb}, Y = {}", y.base())
        })?;
        counts[0] += 1;

        // <X,Y>_S = -1 iff <X,Y> = 0, on a forced pair and on a generic one
        let t = rational(&mut rng);
        let yo = &xo.scale(&(-&bx.recip().unwrap())) + &f.quarter_turn(&xo).scale(&t);
        let forced = f.point(&yo).unwrap();
        for cand in [&forced, &y] {
            let s = parseval(&f, &xb, cand.base());
            ensure((s == -&one) == inner(&xb, cand.base()).is_zero(), || {
                format!("equivalence fails for X = {xb}, Y = {}", cand.base())
            })?;
        }
        counts[1] += 1;

        // the two inner products of w_S(X, Y) when <X,Y>_S = -1
        let yb = forced.base().clone();
        let by = parseval(&f, &yb, &yb);
        let w = w_s(&x, &forced).unwrap();
        let d = &(&ExactScalar::int(2) + &bx) + &by;
        let yw = inner(&yb, w.base());
        let xw = inner(&xb, w.base());
        let ok = yw == (&(&one + &bx) * &norm2(&yb)).checked_div(&d).unwrap()
            && yw == (&norm2(&xb) * &norm2(&yb)).checked_div(&d).unwrap()
            && xw == (&(&one + &by) * &norm2(&xb)).checked_div(&d).unwrap()
            && xw == (&norm2(&yb) * &norm2(&xb)).checked_div(&d).unwrap();
        ensure(ok, || format!("w_S inner products fail for X = {xb}, Y = {yb}"))?;
        counts[2] += 1;

        // w_S(g + z, g - z) = g
        let plus = f.point(&xo).unwrap();
        let minus = f.point(&-&xo).unwrap();
        ensure(w_s(&plus, &minus).unwrap().base() == &g, || format!("w_S(g + z, g - z) != g for z = {xo}"))?;
        counts[3] += 1;

        // W = tX + Y with t = -(1 + beta_Y)/beta_X, for Y _|_S X
        let yo = f.quarter_turn(&xo).scale(&nonzero_rational(&mut rng));
        let y = f.point(&yo).unwrap();
        let by = parseval(&f, y.base(), y.base());
        let tw = -&(&one + &by).checked_div(&bx).unwrap();
        let big_w = f.point(&(&xo.scale(&tw) + &yo)).unwrap();
        let sum = f.point(&(&xo + &yo)).unwrap();
        ensure(parseval(&f, big_w.base(), sum.base()) == -&one, || format!("s_inner(W, X+Y) != -1 for X = {xb}"))?;
        ensure(w_s(&big_w, &sum).unwrap().base() == y.base(), || format!("w_S(W, X+Y) != Y for X = {xb}"))?;
        counts[4] += 1;

        // (X + Y) _|_S ((lambda - 1) X - Y) with lambda = 1 + r^2, Y = r J X
        let r = nonzero_rational(&mut rng);
        let lambda = &one + &r.square();
        let yo = f.quarter_turn(&xo).scale(&r);
        let a = f.point(&(&xo + &yo)).unwrap();
        let b = f.point(&(&xo.scale(&(&lambda - &one)) - &yo)).unwrap();
        ensure(parseval(&f, a.base(), b.base()).is_zero(), || format!("orthogonality fails for X = {xb}, r = {r}"))?;
        ensure(&a.offset() + &b.offset() == xo.scale(&lambda), || "sum is not lambda X".into())?;
        counts[5] += 1;
    }
    Ok(format!("{} instances per identity, 6 identities", counts.iter().min().unwrap()))
}

// ---------------------------------------------------------------- 3

/// `kappa cos(theta/n)^n` in floating point.
fn alpha_f64(kappa: f64, theta: f64, n: u32) -> f64 {
    kappa * (theta / n as f64).cos().powi(n as i32)
}

fn chains() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let mut max_n = 0;
    let mut widest = 0f64;
    for k in 0..CHAIN_INSTANCES {
        let f = random_frame(&mut rng);
        let x = random_point(&mut rng, &f);
        let xo = x.offset();
        // Y = kappa R(phi) X with a rational rotation, kappa in [5/4, 4]
        let kappa = ExactScalar::ratio(rng.gen_range(5..=16), 4);
        let t = nonzero_rational(&mut rng);
        let d = &ExactScalar::one() + &t.square();
        let cos = (&ExactScalar::one() - &t.square()).checked_div(&d).unwrap();
        let sin = (&ExactScalar::int(2) * &t).checked_div(&d).unwrap();
        let yo = (&xo.scale(&cos) + &f.quarter_turn(&xo).scale(&sin)).scale(&kappa);
        let y = f.point(&yo).unwrap();

        let mut table = VectorTable::new();
        let mut ev = Evaluator::new(SymbolEnv::new(), PrecisionConfig::with_bits(256)).unwrap();
        let p = chain_params(&x, &y, &ev, DEFAULT_MAX_STEPS).map_err(|e| format!("instance {k}: {e}"))?;
        let mut b = Builder::new(&mut table, &mut ev, f.clone()).unwrap();
        let chain = build_chain(&mut b, &p, &x, &y).map_err(|e| format!("instance {k}: {e}"))?;
        conclude_lemma2(&mut b, &chain).map_err(|e| format!("instance {k}: {e}"))?;

        let c = ExactScalar::cos_sym(chain.rotation);
        for i in 1..chain.points.len() {
            let (prev, cur) = (&chain.points[i - 1], &chain.points[i]);
            ensure(cur.s_sub(prev).s_inner(prev).is_zero(), || format!("instance {k}: step {i} not orthogonal"))?;
            ensure(prev.s_norm2() == &c.square() * &cur.s_norm2(), || format!("instance {k}: step {i} norm recurrence"))?;
        }
        let alpha_x = x.s_scale(&p.alpha(chain.rotation));
        let residual = chain.points[0].base() - alpha_x.base();
        for r in residual.scalars() {
            let iv = b.evaluator().interval_at(r, 256).unwrap();
            let w = iv.hi_f64() - iv.lo_f64();
            ensure(iv.contains_zero() && w < RESIDUAL_WIDTH, || format!("instance {k}: residual {iv}"))?;
            widest = widest.max(w);
        }
        let deriv = b.finish();
        let report = verify_derivation(&deriv, &table, &ev).unwrap();
        ensure(report.passed, || format!("instance {k}: {report}"))?;

        // minimal n against a floating-point recomputation
        let kf = p.kappa.as_rational().map(|q| q.numer().to_string().parse::<f64>().unwrap() / q.denom().to_string().parse::<f64>().unwrap()).unwrap();
        let cf = cos.as_rational().map(|q| q.numer().to_string().parse::<f64>().unwrap() / q.denom().to_string().parse::<f64>().unwrap()).unwrap();
        let theta = cf.acos();
        let n = p.n;
        let clear = |a: f64| (a - 1.0).abs() > 1e-9;
        if clear(alpha_f64(kf, theta, n)) && (n == 1 || clear(alpha_f64(kf, theta, n - 1))) {
            ensure(alpha_f64(kf, theta, n) > 1.0 && (n == 1 || alpha_f64(kf, theta, n - 1) < 1.0), || {
                format!("instance {k}: n = {n} is not minimal (kappa {kf}, theta {theta})")
            })?;
        }
        max_n = max_n.max(n);
    }
    Ok(format!("{CHAIN_INSTANCES} chains, n up to {max_n}, widest residual {widest:.1e}"))
}

// ---------------------------------------------------------------- 4

fn end_to_end(dir: &Path) -> Outcome {
    let start = Instant::now();
    let cert = dir.join("all.json");
    let path = cert.to_str().unwrap();
    let out = run(&["generate", "--seed-axis", "all", "--out", path]);
    ensure(out.status.success(), || format!("generate: {}", String::from_utf8_lossy(&out.stderr)))?;
    let out = run(&["verify", "--quiet", path]);
    ensure(out.status.success(), || format!("verify: {}", String::from_utf8_lossy(&out.stdout)))?;
    let out = run(&["color", path]);
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    ensure(out.status.success() && text.contains("verdict: uncolorable"), || format!("color: {text}"))?;
    for k in ["0", "1", "2"] {
        let out = run(&["color", path, "--sub-instance", k, "--pin", "seed=1"]);
        let text = String::from_utf8_lossy(&out.stdout).into_owned();
        ensure(out.status.success() && text.contains("verdict: uncolorable"), || {
            format!("color --sub-instance {k}: {text}")
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < END_TO_END_BUDGET, || format!("took {elapsed:.1?}"))?;
    let cert = parse(&std::fs::read_to_string(&cert).unwrap()).map_err(|e| e.to_string())?;
    let subs: Vec<String> = cert
        .sub_instances
        .iter()
        .map(|s| format!("{}/{}", s.points.len(), s.triples.len()))
        .collect();
    Ok(format!(
        "{} vectors, {} points, {} triples; per seed points/triples {}",
        cert.vectors.len(),
        cert.context_set.points.len(),
        cert.context_set.triples.len(),
        subs.join(", ")
    ))
}

// ---------------------------------------------------------------- 5

/// Exactly one 1 per triple and every pin respected, checked from scratch.
fn is_valid(w: &[u8], triples: &[[usize; 3]], pins: &[(usize, u8)]) -> bool {
    triples.iter().all(|t| t.iter().map(|&p| w[p] as u32).sum::<u32>() == 1) && pins.iter().all(|&(p, v)| w[p] == v)
}

fn random_problem(rng: &mut ChaCha8Rng) -> (usize, Vec<[usize; 3]>) {
    let points = rng.gen_range(3..=ORACLE_MAX_POINTS);
    let want = rng.gen_range(1..=2 * points);
    let mut triples: Vec<[usize; 3]> = Vec::new();
    for _ in 0..want {
        let mut t = [0; 3];
        loop {
            for s in t.iter_mut() {
                *s = rng.gen_range(0..points);
            }
            if t[0] != t[1] && t[0] != t[2] && t[1] != t[2] {
                break;
            }
        }
        t.sort_unstable();
        if !triples.contains(&t) {
            triples.push(t);
        }
    }
    (points, triples)
}

fn oracle(dir: &Path) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let (mut uncolorable, mut witnesses) = (0, 0);
    for k in 0..ORACLE_INSTANCES {
        let (points, triples) = random_problem(&mut rng);
        let pins: Vec<(usize, u8)> = if rng.gen_bool(0.5) {
            vec![(rng.gen_range(0..points), rng.gen_range(0..=1))]
        } else {
            Vec::new()
        };
        let p = ColoringProblem::new(points, triples.clone()).unwrap();
        let ex = check_consistency(&p, &pins, Mode::Exhaustive).unwrap();
        let bt = check_consistency(&p, &pins, Mode::Backtracking).unwrap();
        ensure(ex.verdict.is_uncolorable() == bt.verdict.is_uncolorable(), || {
            format!("instance {k}: modes disagree on {points} points {triples:?} pins {pins:?}")
        })?;
        for v in [&ex.verdict, &bt.verdict] {
            if let Verdict::Colorable(w) = v {
                ensure(is_valid(w, &triples, &pins), || format!("instance {k}: bad witness {w:?}"))?;
                witnesses += 1;
            }
        }
        uncolorable += usize::from(ex.verdict.is_uncolorable());
    }

    // robustness: drop one triple of the compiled union and re-run
    let path = dir.join("all.json");
    let cert: Certificate = parse(&std::fs::read_to_string(&path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let set = &cert.context_set;
    let full = ColoringProblem::new(set.points.len(), set.triples.clone()).unwrap();
    let mut flipped = 0;
    for i in 0..full.triples().len() {
        let r = check_consistency(&full.without_triple(i), &[], Mode::Backtracking).unwrap();
        flipped += usize::from(!r.verdict.is_uncolorable());
    }
    let path: PathBuf = path;
    for _ in 0..5 {
        let i = rng.gen_range(0..full.triples().len()).to_string();
        let out = run(&["color", path.to_str().unwrap(), "--drop-triple", &i]);
        ensure(matches!(out.status.code(), Some(0 | 1)), || format!("color --drop-triple {i}: {}", out.status))?;
    }
    Ok(format!(
        "{ORACLE_INSTANCES} instances ({uncolorable} uncolorable, {witnesses} witnesses rechecked); \
         dropping each of {} triples flips {flipped} verdicts",
        full.triples().len()
    ))
}

// ---------------------------------------------------------------- 6

/// Byte ranges of single tokens that may be corrupted: digit runs and
/// arithmetic operators, outside the informational metadata block.
fn tokens(text: &str) -> Vec<(usize, usize)> {
    let meta_start = text.find("\n  \"metadata\":").unwrap_or(text.len());
    let meta_end = text[meta_start + 1..]
        .find("\n  \"")
        .map_or(text.len(), |i| meta_start + 1 + i);
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if (meta_start..meta_end).contains(&i) {
            i = meta_end;
            continue;
        }
        let b = bytes[i];
        if b.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            out.push((start, i));
            continue;
        }
        if matches!(b, b'+' | b'*' | b'/') || (b == b'-' && i > 0 && bytes[i - 1] != b'_') {
            out.push((i, i + 1));
        }
        i += 1;
    }
    out
}

fn corrupt(text: &str, (s, e): (usize, usize), rng: &mut ChaCha8Rng) -> String {
    let tok = &text[s..e];
    let replacement = match tok {
        "+" => "-".to_string(),
        "-" => "+".to_string(),
        "*" => "/".to_string(),
        "/" => "*".to_string(),
        digits => {
            let n: u128 = digits.parse().unwrap_or(0);
            (n + rng.gen_range(1..=9)).to_string()
        }
    };
    format!("{}{}{}", &text[..s], replacement, &text[e..])
}

fn tampering() -> Outcome {
    let ev = Evaluator::new(SymbolEnv::new(), PrecisionConfig::default()).unwrap();
    let cfg = PipelineConfig::default();
    let inst = assemble_instance(&[1], None, ev, &cfg).map_err(|e| e.to_string())?;
    let text = serialize(&Certificate::from_instance(&inst, &cfg, None));
    let original = parse(&text).map_err(|e| e.to_string())?;
    ensure(verify_certificate(&original).map_err(|e| e.to_string())?.passed, || "baseline does not verify".into())?;
    let toks = tokens(&text);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let (mut parse_fail, mut verify_fail) = (0, 0);
    for trial in 0..TAMPER_TRIALS {
        let tok = toks[rng.gen_range(0..toks.len())];
        let bad = corrupt(&text, tok, &mut rng);
        match parse(&bad) {
            Err(_) => parse_fail += 1,
            Ok(cert) => match verify_certificate(&cert) {
                Err(_) => verify_fail += 1,
                Ok(r) if !r.passed => verify_fail += 1,
                Ok(_) => {
                    let ctx = &text[tok.0.saturating_sub(60)..(tok.1 + 20).min(text.len())];
                    return Err(format!("trial {trial}: corruption of {:?} passed; context {ctx:?}", &text[tok.0..tok.1]));
                }
            },
        }
    }
    Ok(format!("{TAMPER_TRIALS} corruptions: {parse_fail} rejected by the parser, {verify_fail} by verification"))
}
