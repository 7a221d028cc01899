use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use bkscert::certificate::{self, parse_vector, verify_certificate, Certificate};
use bkscert::chain::{worked_example, ChainError};
use bkscert::compiler::{assemble_instance, CompileError, ContextSet};
use bkscert::oracle::{check_consistency, ColoringProblem, Mode, Verdict};
use bkscert::pipeline::{PipelineConfig, PipelineError};
use bkscert::scalar::interval::decimal_down;
use bkscert::scalar::{Evaluator, Interval, PrecisionConfig, ScalarError, SymbolEnv};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_UNDECIDED: u8 = 3;

#[derive(Parser)]
#[command(name = "bkscert", version, about = "Generate and check valuation-collapse certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the derivations and the compiled triple set
    Generate {
        /// 1, 2, 3 or all
        #[arg(long, default_value = "all")]
        seed_axis: String,
        /// Target vector, e.g. "1, 1, sqrt(2)"; defaults to e_k + e_(k+1)
        #[arg(long)]
        target: Option<String>,
        #[arg(long, default_value_t = 256)]
        precision_bits: u32,
        #[arg(long, default_value_t = bkscert::chain::DEFAULT_MAX_STEPS)]
        max_chain_steps: u32,
        /// Output file; standard output when absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check every derivation node and every context triple
    Verify {
        file: PathBuf,
        /// Print only the summary
        #[arg(long)]
        quiet: bool,
    },
    /// Decide 0/1-colorability of the compiled triples
    Color {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Backtracking)]
        mode: ModeArg,
        /// `vID=0|1`, `ID=0|1`, or `seed=1` (with --sub-instance)
        #[arg(long)]
        pin: Vec<String>,
        /// Use the expansion of derivation K instead of the union
        #[arg(long)]
        sub_instance: Option<usize>,
        /// Drop triple N before solving
        #[arg(long)]
        drop_triple: Option<usize>,
    },
    /// Print the standard chain example
    Repro {
        #[arg(long, default_value_t = 256)]
        precision_bits: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Backtracking,
}

/// Failure with the exit status it maps to.
struct Failure(u8, String);

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure(EXIT_USAGE, msg.into())
    }
    fn fail(msg: impl ToString) -> Self {
        Failure(EXIT_FAIL, msg.to_string())
    }
}

fn scalar_failure(e: &ScalarError) -> u8 {
    match e {
        ScalarError::UndecidedSign { .. } => EXIT_UNDECIDED,
        _ => EXIT_FAIL,
    }
}

impl From<CompileError> for Failure {
    fn from(e: CompileError) -> Self {
        let code = match &e {
            CompileError::Pipeline(PipelineError::Scalar(s))
            | CompileError::Pipeline(PipelineError::Chain(ChainError::Scalar(s))) => scalar_failure(s),
            CompileError::Pipeline(PipelineError::TargetInSeedSpan(_) | PipelineError::BadAxis(_)) => EXIT_USAGE,
            _ => EXIT_FAIL,
        };
        Failure(code, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate {
            seed_axis,
            target,
            precision_bits,
            max_chain_steps,
            out,
        } => generate(&seed_axis, target.as_deref(), precision_bits, max_chain_steps, out),
        Command::Verify { file, quiet } => verify(&file, quiet),
        Command::Color {
            file,
            mode,
            pin,
            sub_instance,
            drop_triple,
        } => color(&file, mode, &pin, sub_instance, drop_triple),
        Command::Repro { precision_bits } => repro(precision_bits),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn generate(
    seed_axis: &str,
    target: Option<&str>,
    bits: u32,
    max_chain_steps: u32,
    out: Option<PathBuf>,
) -> Result<u8, Failure> {
    let axes = match seed_axis {
        "all" => vec![1, 2, 3],
        s => match s.parse::<usize>() {
            Ok(k @ 1..=3) => vec![k],
            _ => return Err(Failure::usage(format!("--seed-axis must be 1, 2, 3 or all, got {s}"))),
        },
    };
    let target = target
        .map(parse_vector)
        .transpose()
        .map_err(|e| Failure::usage(format!("--target: {e}")))?;
    let precision = PrecisionConfig::with_bits(bits);
    let ev = Evaluator::new(SymbolEnv::new(), precision).map_err(|e| Failure::usage(e.to_string()))?;
    let cfg = PipelineConfig { max_chain_steps };
    let start = Instant::now();
    let inst = assemble_instance(&axes, target.as_ref(), ev, &cfg)?;
    let cert = Certificate::from_instance(&inst, &cfg, target);
    let text = certificate::serialize(&cert);
    match out {
        Some(path) => fs::write(&path, text).map_err(|e| Failure::fail(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    let nodes: usize = cert.derivations.iter().map(|d| d.nodes.len()).sum();
    eprintln!(
        "generated {} derivation(s), {nodes} nodes, {} vectors, {} points, {} triples in {:.2?}",
        cert.derivations.len(),
        cert.vectors.len(),
        cert.context_set.points.len(),
        cert.context_set.triples.len(),
        start.elapsed()
    );
    Ok(0)
}

fn load(path: &PathBuf) -> Result<Certificate, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::fail(format!("{}: {e}", path.display())))?;
    certificate::parse(&text).map_err(Failure::fail)
}

fn verify(path: &PathBuf, quiet: bool) -> Result<u8, Failure> {
    let cert = load(path)?;
    let report = verify_certificate(&cert).map_err(Failure::fail)?;
    if quiet {
        for (i, r) in report.derivations.iter().enumerate() {
            let failed = r.nodes.iter().filter(|n| !n.passed).count();
            println!("derivation {i}: {} nodes, {failed} failed", r.nodes.len());
        }
        for p in &report.problems {
            println!("problem: {p}");
        }
        println!("certificate: {}", if report.passed { "pass" } else { "FAIL" });
    } else {
        print!("{report}");
    }
    Ok(if report.passed {
        0
    } else if report.undecided() {
        EXIT_UNDECIDED
    } else {
        EXIT_FAIL
    })
}

fn parse_pin(text: &str, set: &ContextSet, cert: &Certificate, sub: Option<usize>) -> Result<(usize, u8), Failure> {
    let (key, val) = text
        .split_once('=')
        .ok_or_else(|| Failure::usage(format!("--pin {text}: expected ID=VALUE")))?;
    let val: u8 = match val.trim() {
        "0" => 0,
        "1" => 1,
        v => return Err(Failure::usage(format!("--pin {text}: value must be 0 or 1, got {v}"))),
    };
    let key = key.trim();
    let vector = if key == "seed" {
        let k = match (sub, cert.derivations.len()) {
            (Some(k), _) => k,
            (None, 1) => 0,
            _ => return Err(Failure::usage("--pin seed=… needs --sub-instance when there are several seeds")),
        };
        cert.derivations[k].seed
    } else {
        key.trim_start_matches('v')
            .parse::<usize>()
            .map_err(|_| Failure::usage(format!("--pin {text}: bad vector id {key}")))?
    };
    let point = set
        .point_of(vector)
        .ok_or_else(|| Failure::usage(format!("--pin {text}: v{vector} is not a point of this triple set")))?;
    Ok((point, val))
}

fn color(
    path: &PathBuf,
    mode: ModeArg,
    pins: &[String],
    sub: Option<usize>,
    drop_triple: Option<usize>,
) -> Result<u8, Failure> {
    let cert = load(path)?;
    let set = match sub {
        Some(k) => cert
            .sub_instances
            .get(k)
            .ok_or_else(|| Failure::usage(format!("--sub-instance {k}: only {} exist", cert.sub_instances.len())))?,
        None => &cert.context_set,
    };
    let pins = pins
        .iter()
        .map(|p| parse_pin(p, set, &cert, sub))
        .collect::<Result<Vec<_>, _>>()?;
    let mut problem = ColoringProblem::new(set.points.len(), set.triples.clone()).map_err(Failure::fail)?;
    if let Some(i) = drop_triple {
        if i >= problem.triples().len() {
            return Err(Failure::usage(format!("--drop-triple {i}: only {} triples", problem.triples().len())));
        }
        problem = problem.without_triple(i);
    }
    let mode = match mode {
        ModeArg::Exhaustive => Mode::Exhaustive,
        ModeArg::Backtracking => Mode::Backtracking,
    };
    let result = check_consistency(&problem, &pins, mode).map_err(|e| Failure::usage(e.to_string()))?;
    println!("points: {}, triples: {}, pins: {}", problem.points(), problem.triples().len(), pins.len());
    let s = &result.stats;
    println!(
        "stats: {} decisions, {} propagations, {:.3?}",
        s.nodes, s.propagations, s.elapsed
    );
    match result.verdict {
        Verdict::Uncolorable => {
            println!("verdict: uncolorable");
            Ok(0)
        }
        Verdict::Colorable(w) => {
            let ones: Vec<String> = w
                .iter()
                .enumerate()
                .filter(|(_, &b)| b == 1)
                .map(|(p, _)| format!("v{}", set.points[p]))
                .collect();
            println!("verdict: colorable");
            println!("witness ones: {}", ones.join(" "));
            Ok(EXIT_FAIL)
        }
    }
}

fn show(name: &str, iv: &Interval) {
    let digits = 12;
    let lo = decimal_down(&iv.lo(), digits);
    let hi = bkscert::scalar::interval::decimal_up(&iv.hi(), digits);
    println!("{name:<18} [{lo}, {hi}]");
}

fn repro(bits: u32) -> Result<u8, Failure> {
    let start = Instant::now();
    let mut ev = Evaluator::new(SymbolEnv::new(), PrecisionConfig::with_bits(bits)).map_err(|e| Failure::usage(e.to_string()))?;
    let ex = worked_example(&mut ev).map_err(|e| match &e {
        ChainError::Scalar(s) => Failure(scalar_failure(s), e.to_string()),
        _ => Failure::fail(e),
    })?;
    let n = ex.n;
    show("theta (degrees)", &ex.theta_degrees);
    show(&format!("cos(theta/{})^{}", n - 1, n - 1), &ex.short_power);
    show(&format!("cos(theta/{n})^{n}"), &ex.power);
    show("alpha", &ex.alpha);
    println!("{:<18} {n}", "minimal n");
    println!("{:<18} {}", "chain length", ex.chain_length);
    eprintln!("({:.2?})", start.elapsed());
    Ok(0)
}
