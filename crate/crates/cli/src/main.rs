//! `invmeans`: compound means, orbit traces, contractivity probes, and
//! invariance verification from the command line.
//!
//! Exit codes: 0 success; 1 domain or validation error; 2 when a command
//! that requires convergence hits the iteration budget; 64 usage error.

mod engine;
mod repro;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use invariant_means::dynamics::{
    builtin_f64, builtin_names, compound_mean, fmt17, invariance_principle_check, orbit,
    weak_contractivity_probe, ConvergenceStatus, Example1Exact, ExprMapping, HamelMnMapping,
    MeanMapping, OrbitScalar, StopReason, StopRule, SwapMapping,
};
use invariant_means::funceq::{
    build_invariant_function, recover_phi, remark4_counterexample, DiagonalFunction,
};
use invariant_means::hamel::{
    mn_orbit, validate_lambda_params, AdditiveFunctional, HamelFloat, HamelNumber, LambdaParams,
};
use invariant_means::rational::{f64_to_rational, parse_rational, Rational};
use invariant_means::schema::parse_mapping_exprs;
use invariant_means::ScalarDomain;

use engine::{parse_vector, VectorData};

/// A command failure carrying its exit code (1 = validation, 2 = budget).
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn domain(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    pub fn budget(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "invmeans",
    version,
    about = "Iterate mean-type mappings: compound means, orbit traces, weak-contractivity probes, invariance checks"
)]
struct Cli {
    /// List the built-in mappings and exit.
    #[arg(long)]
    list_mappings: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the compound (invariant) mean at a starting vector.
    Compound(CompoundArgs),
    /// Trace the orbit v, M(v), M²(v), … with per-step extrema.
    Orbit(OrbitArgs),
    /// Find the first n with spread(Mⁿ(v)) < spread(v).
    Probe(ProbeArgs),
    /// Verify F∘M = F for F = φ∘K over sampled starting vectors.
    Verify(VerifyArgs),
    /// Classify sampled orbits per the invariance principle.
    Principle(PrincipleArgs),
    /// Exact-arithmetic demonstration of the λ pair family on the span of {1, √d}.
    HamelDemo(HamelDemoArgs),
    /// Evaluate F = φ∘K at a point; optionally recover φ on the diagonal.
    Funceq(FunceqArgs),
    /// Run the full reproduction suite and emit a JSON report.
    Repro(ReproArgs),
}

#[derive(Args)]
struct MappingOpt {
    /// Built-in mapping (`builtin:agm`, `agm`, `ahm`, `swap`, `example1`,
    /// `hamel-mn`) or a path to a mean-expression JSON mapping file.
    #[arg(long)]
    mapping: String,
}

#[derive(Args)]
struct OutputOpt {
    /// Output format.
    #[arg(long, default_value = "text")]
    format: String,

    /// Write the artifact here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompoundArgs {
    #[command(flatten)]
    mapping: MappingOpt,
    /// Starting vector, comma-separated (decimal, rational, or q0+q1*sqrt(d)).
    #[arg(long)]
    v: String,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[command(flatten)]
    output: OutputOpt,
}

#[derive(Args)]
struct OrbitArgs {
    #[command(flatten)]
    mapping: MappingOpt,
    #[arg(long)]
    v: String,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// `csv` (default) or `json`.
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProbeArgs {
    #[command(flatten)]
    mapping: MappingOpt,
    #[arg(long)]
    v: String,
    #[arg(long, default_value_t = 100)]
    n_max: usize,
    #[command(flatten)]
    output: OutputOpt,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    mapping: MappingOpt,
    /// φ: `identity`, `square`, `exp`, `log`, `negation`, or `step:<jump>`.
    #[arg(long)]
    phi: String,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[command(flatten)]
    output: OutputOpt,
}

#[derive(Args)]
struct PrincipleArgs {
    #[command(flatten)]
    mapping: MappingOpt,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[command(flatten)]
    output: OutputOpt,
}

#[derive(Args)]
struct HamelDemoArgs {
    /// First starting value (defaults to sqrt(d)).
    #[arg(long)]
    u: Option<String>,
    /// Second starting value (defaults to 0).
    #[arg(long)]
    v: Option<String>,
    /// Exact steps to materialize. State size roughly doubles per step,
    /// so this is capped at 16.
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// λ parameters, comma-separated rationals `b,c,d,kappa`.
    #[arg(long, default_value = "1,4/3,4,1/2")]
    params: String,
    /// Additive functional coefficients `a0,a1`.
    #[arg(long, default_value = "0,1")]
    functional: String,
    /// Square-free span discriminant.
    #[arg(long, default_value_t = 2)]
    d: u64,
    #[command(flatten)]
    output: OutputOpt,
}

#[derive(Args)]
struct FunceqArgs {
    #[command(flatten)]
    mapping: MappingOpt,
    #[arg(long)]
    phi: String,
    /// Point to evaluate F at.
    #[arg(long)]
    v: String,
    /// Also recover φ at these diagonal points (comma-separated decimals).
    #[arg(long)]
    recover: Option<String>,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[command(flatten)]
    output: OutputOpt,
}

#[derive(Args)]
struct ReproArgs {
    /// λ parameters used by the span checks.
    #[arg(long, default_value = "1,4/3,4,1/2")]
    params: String,
    /// Tolerance of the arithmetic-geometric oracle check.
    #[arg(long, default_value_t = 1e-12)]
    agm_tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum MappingKind {
    Agm,
    Ahm,
    Swap,
    Example1,
    HamelMn,
    File(String, Vec<invariant_means::MeanExpr>),
}

impl MappingKind {
    fn name(&self) -> String {
        match self {
            MappingKind::Agm => "agm".into(),
            MappingKind::Ahm => "ahm".into(),
            MappingKind::Swap => "swap".into(),
            MappingKind::Example1 => "example1".into(),
            MappingKind::HamelMn => "hamel-mn".into(),
            MappingKind::File(name, _) => name.clone(),
        }
    }

    fn f64_mapping(&self) -> Result<Box<dyn MeanMapping<f64>>, Failure> {
        match self {
            MappingKind::Agm => Ok(builtin_f64("agm").expect("catalog")),
            MappingKind::Ahm => Ok(builtin_f64("ahm").expect("catalog")),
            MappingKind::Swap => Ok(builtin_f64("swap").expect("catalog")),
            MappingKind::Example1 => Ok(builtin_f64("example1").expect("catalog")),
            MappingKind::HamelMn => Err(Failure::domain(
                "hamel-mn has no binary64 form; inputs stay on the span (this command runs its float-coefficient image)",
            )),
            MappingKind::File(name, exprs) => Ok(Box::new(
                ExprMapping::new(name.clone(), exprs.clone(), ScalarDomain::reals())
                    .map_err(|e| Failure::domain(e.to_string()))?,
            )),
        }
    }
}

fn resolve_mapping(spec: &str) -> Result<MappingKind, Failure> {
    let name = spec.strip_prefix("builtin:").unwrap_or(spec);
    match name {
        "agm" => return Ok(MappingKind::Agm),
        "ahm" => return Ok(MappingKind::Ahm),
        "swap" => return Ok(MappingKind::Swap),
        "example1" => return Ok(MappingKind::Example1),
        "hamel-mn" => return Ok(MappingKind::HamelMn),
        _ => {}
    }
    if spec.starts_with("builtin:") {
        return Err(Failure::domain(format!(
            "unknown built-in mapping {name:?}; available: {}",
            builtin_names().join(", ")
        )));
    }
    let text = fs::read_to_string(spec)
        .map_err(|e| Failure::domain(format!("cannot read mapping file {spec:?}: {e}")))?;
    let exprs = parse_mapping_exprs(&text).map_err(|e| Failure::domain(e.to_string()))?;
    let name = PathBuf::from(spec)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "file-mapping".into());
    Ok(MappingKind::File(name, exprs))
}

fn emit(output: &OutputOpt, text: String) -> Result<(), Failure> {
    match &output.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::domain(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn status_str(status: ConvergenceStatus) -> &'static str {
    match status {
        ConvergenceStatus::Converged => "converged",
        ConvergenceStatus::MaxIterReached => "max_iter_reached",
    }
}

fn exact_tol(tol: f64) -> Result<Rational, Failure> {
    f64_to_rational(tol)
        .filter(|t| t > &Rational::from_integer(0.into()))
        .ok_or_else(|| Failure::domain(format!("tolerance must be positive and finite, got {tol}")))
}

// ---------------------------------------------------------------------
// compound

struct CompoundOutcome {
    value_f64: f64,
    value_text: Option<String>,
    spread: f64,
    iterations: usize,
    status: ConvergenceStatus,
}

fn run_compound<S: OrbitScalar>(
    mapping: &dyn MeanMapping<S>,
    v: &[S],
    tol: S,
    max_iter: usize,
    exact_text: impl Fn(&S) -> Option<String>,
) -> Result<CompoundOutcome, Failure> {
    let result =
        compound_mean(mapping, v, tol, max_iter).map_err(|e| Failure::domain(e.to_string()))?;
    Ok(CompoundOutcome {
        value_f64: result.value.to_f64(),
        value_text: exact_text(&result.value),
        spread: result.spread_at_stop.to_f64(),
        iterations: result.iterations,
        status: result.status,
    })
}

fn compound_command(args: &CompoundArgs) -> Result<u8, Failure> {
    let kind = resolve_mapping(&args.mapping.mapping)?;
    let data = parse_vector(&args.v, 2)?;
    let outcome = match (&kind, &data) {
        (MappingKind::HamelMn, _) => {
            let mapping = HamelMnMapping::standard();
            let v = data.to_hamel_float(mapping.context_d());
            run_compound(
                &mapping,
                &v,
                HamelFloat::new(args.tol, 0.0, mapping.context_d()),
                args.max_iter,
                |_| None,
            )?
        }
        (MappingKind::Example1, VectorData::Exact(v)) => {
            let mapping = Example1Exact::unit();
            run_compound(&mapping, v, exact_tol(args.tol)?, args.max_iter, |s| {
                Some(s.to_string())
            })?
        }
        (MappingKind::Swap, VectorData::Exact(v)) => {
            run_compound(&SwapMapping, v, exact_tol(args.tol)?, args.max_iter, |s| {
                Some(s.to_string())
            })?
        }
        _ => {
            let mapping = kind.f64_mapping()?;
            run_compound(
                mapping.as_ref(),
                &data.to_f64(),
                args.tol,
                args.max_iter,
                |_| None,
            )?
        }
    };
    let json = json!({
        "mapping": kind.name(),
        "v": data.to_f64(),
        "value": outcome.value_f64,
        "value_exact": outcome.value_text,
        "spread_at_stop": outcome.spread,
        "iterations": outcome.iterations,
        "status": status_str(outcome.status),
    });
    let text = match args.output.format.as_str() {
        "json" => serde_json::to_string_pretty(&json).expect("serializable"),
        _ => format!(
            "{}\nstatus = {}, iterations = {}, spread_at_stop = {}",
            fmt17(outcome.value_f64),
            status_str(outcome.status),
            outcome.iterations,
            fmt17(outcome.spread),
        ),
    };
    emit(&args.output, text)?;
    Ok(if outcome.status == ConvergenceStatus::Converged {
        0
    } else {
        2
    })
}

// ---------------------------------------------------------------------
// orbit

fn run_orbit<S: OrbitScalar>(
    mapping: &dyn MeanMapping<S>,
    v: &[S],
    tol: S,
    max_iter: usize,
    format: &str,
) -> Result<(String, u8), Failure> {
    let trace = orbit(
        mapping,
        v,
        &StopRule {
            spread_tol: tol,
            max_iter,
        },
    )
    .map_err(|e| Failure::domain(e.to_string()))?;
    let exit = match trace.stop_reason {
        StopReason::MaxIter => 2,
        _ => 0,
    };
    let text = match format {
        "json" => {
            let steps: Vec<Value> = trace
                .steps
                .iter()
                .map(|s| {
                    json!({
                        "n": s.n,
                        "v": s.v.iter().map(OrbitScalar::to_f64).collect::<Vec<_>>(),
                        "min": s.min.to_f64(),
                        "max": s.max.to_f64(),
                        "spread": s.spread.to_f64(),
                    })
                })
                .collect();
            let reason = match trace.stop_reason {
                StopReason::SpreadTol => "spread_tol",
                StopReason::MaxIter => "max_iter",
                StopReason::ExactFixpoint => "exact_fixpoint",
            };
            serde_json::to_string_pretty(&json!({"stop_reason": reason, "steps": steps}))
                .expect("serializable")
        }
        _ => trace.to_csv(),
    };
    Ok((text, exit))
}

fn orbit_command(args: &OrbitArgs) -> Result<u8, Failure> {
    let kind = resolve_mapping(&args.mapping.mapping)?;
    let data = parse_vector(&args.v, 2)?;
    let (text, exit) = match (&kind, &data) {
        (MappingKind::HamelMn, _) => {
            let mapping = HamelMnMapping::standard();
            let v = data.to_hamel_float(mapping.context_d());
            run_orbit(
                &mapping,
                &v,
                HamelFloat::new(args.tol, 0.0, mapping.context_d()),
                args.max_iter,
                &args.format,
            )?
        }
        (MappingKind::Example1, VectorData::Exact(v)) => run_orbit(
            &Example1Exact::unit(),
            v,
            exact_tol(args.tol)?,
            args.max_iter,
            &args.format,
        )?,
        (MappingKind::Swap, VectorData::Exact(v)) => run_orbit(
            &SwapMapping,
            v,
            exact_tol(args.tol)?,
            args.max_iter,
            &args.format,
        )?,
        _ => {
            let mapping = kind.f64_mapping()?;
            run_orbit(
                mapping.as_ref(),
                &data.to_f64(),
                args.tol,
                args.max_iter,
                &args.format,
            )?
        }
    };
    match &args.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::domain(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(exit)
}

// ---------------------------------------------------------------------
// probe

fn run_probe<S: OrbitScalar>(
    mapping: &dyn MeanMapping<S>,
    v: &[S],
    n_max: usize,
) -> Result<(Option<usize>, Vec<f64>), Failure> {
    let report =
        weak_contractivity_probe(mapping, v, n_max).map_err(|e| Failure::domain(e.to_string()))?;
    Ok((
        report.n0,
        report.spread_history.iter().map(OrbitScalar::to_f64).collect(),
    ))
}

fn probe_command(args: &ProbeArgs) -> Result<u8, Failure> {
    let kind = resolve_mapping(&args.mapping.mapping)?;
    let data = parse_vector(&args.v, 2)?;
    let (n0, history) = match (&kind, &data) {
        (MappingKind::HamelMn, _) => {
            let mapping = HamelMnMapping::standard();
            let v = data.to_hamel_float(mapping.context_d());
            run_probe(&mapping, &v, args.n_max)?
        }
        (MappingKind::Example1, VectorData::Exact(v)) => {
            run_probe(&Example1Exact::unit(), v, args.n_max)?
        }
        (MappingKind::Swap, VectorData::Exact(v)) => run_probe(&SwapMapping, v, args.n_max)?,
        _ => {
            let mapping = kind.f64_mapping()?;
            run_probe(mapping.as_ref(), &data.to_f64(), args.n_max)?
        }
    };
    let json = json!({
        "mapping": kind.name(),
        "v": data.to_f64(),
        "n_max": args.n_max,
        "n0": n0,
        "spread_history": history,
    });
    let text = match args.output.format.as_str() {
        "json" => serde_json::to_string_pretty(&json).expect("serializable"),
        _ => match n0 {
            Some(n) => format!("n0 = {n}"),
            None => format!("n0 = not found within n_max = {}", args.n_max),
        },
    };
    emit(&args.output, text)?;
    Ok(0)
}

// ---------------------------------------------------------------------
// sampling helpers

fn sample_f64(kind: &MappingKind, arity: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::{rngs::StdRng, Rng, SeedableRng};
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            (0..arity)
                .map(|_| match kind {
                    MappingKind::Example1 => rng.random_range(0.0..=1.0),
                    _ => rng.random_range(0.01..=10.0),
                })
                .collect()
        })
        .collect()
}

fn sample_hamel_float(d: u64, n: usize, seed: u64) -> Vec<Vec<HamelFloat>> {
    use rand::{rngs::StdRng, Rng, SeedableRng};
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            (0..2)
                .map(|_| {
                    HamelFloat::new(
                        rng.random_range(-5.0..=5.0),
                        rng.random_range(-5.0..=5.0),
                        d,
                    )
                })
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------------
// verify / funceq

fn parse_phi(text: &str) -> Result<DiagonalFunction, Failure> {
    if let Some(jump) = text.strip_prefix("step:") {
        let jump: f64 = jump
            .parse()
            .map_err(|_| Failure::domain(format!("cannot parse step jump {jump:?}")))?;
        return Ok(DiagonalFunction::Step {
            jump,
            below: 0.0,
            at_or_above: 1.0,
        });
    }
    DiagonalFunction::catalog(text).ok_or_else(|| {
        Failure::domain(format!(
            "unknown phi {text:?}; expected identity, square, exp, log, negation, or step:<jump>"
        ))
    })
}

fn verify_command(args: &VerifyArgs) -> Result<u8, Failure> {
    let kind = resolve_mapping(&args.mapping.mapping)?;
    let phi = parse_phi(&args.phi)?;
    let compound_tol = 1e-13;
    let report = match &kind {
        MappingKind::HamelMn => {
            let mapping = HamelMnMapping::standard();
            let samples = sample_hamel_float(mapping.context_d(), args.samples, args.seed);
            let tol = HamelFloat::new(compound_tol, 0.0, mapping.context_d());
            let f = if phi.is_continuous() {
                build_invariant_function(&mapping, phi.clone(), tol, 100_000)
                    .map_err(|e| Failure::domain(e.to_string()))?
            } else {
                remark4_counterexample(phi.clone(), &mapping, tol, 100_000)
            };
            f.verify(&samples, args.tol)
                .map_err(|e| Failure::domain(e.to_string()))?
        }
        _ => {
            let mapping = kind.f64_mapping()?;
            let samples = sample_f64(&kind, mapping.arity(), args.samples, args.seed);
            let f = if phi.is_continuous() {
                build_invariant_function(mapping.as_ref(), phi.clone(), compound_tol, 100_000)
                    .map_err(|e| Failure::domain(e.to_string()))?
            } else {
                remark4_counterexample(phi.clone(), mapping.as_ref(), compound_tol, 100_000)
            };
            f.verify(&samples, args.tol)
                .map_err(|e| Failure::domain(e.to_string()))?
        }
    };
    let json = report.to_json(&kind.name(), &phi.name());
    let text = match args.output.format.as_str() {
        "json" => serde_json::to_string_pretty(&json).expect("serializable"),
        _ => format!(
            "max_residual = {}, pass = {} (samples = {}, filtered = {})",
            fmt17(report.max_residual),
            report.pass,
            report.samples_used,
            report.samples_filtered,
        ),
    };
    emit(&args.output, text)?;
    Ok(if report.pass { 0 } else { 1 })
}

fn funceq_command(args: &FunceqArgs) -> Result<u8, Failure> {
    let kind = resolve_mapping(&args.mapping.mapping)?;
    let phi = parse_phi(&args.phi)?;
    let data = parse_vector(&args.v, 2)?;
    let budget_error = |e: invariant_means::FunceqError| match e {
        invariant_means::FunceqError::NonConvergent { .. } => Failure::budget(e.to_string()),
        other => Failure::domain(other.to_string()),
    };

    let (value, compound, recovered): (f64, f64, Option<Vec<(f64, f64)>>) = match &kind {
        MappingKind::HamelMn => {
            let mapping = HamelMnMapping::standard();
            let tol = HamelFloat::new(args.tol, 0.0, mapping.context_d());
            let f = if phi.is_continuous() {
                build_invariant_function(&mapping, phi.clone(), tol, args.max_iter)
                    .map_err(budget_error)?
            } else {
                remark4_counterexample(phi.clone(), &mapping, tol, args.max_iter)
            };
            let v = data.to_hamel_float(mapping.context_d());
            let compound = f.compound_value(&v).map_err(budget_error)?;
            let value = f.eval(&v).map_err(budget_error)?;
            // diagonal recovery runs on unit-coefficient span points
            let recovered = match &args.recover {
                None => None,
                Some(list) => {
                    let points = parse_recover_points(list)?;
                    let eval = |diag: &[f64]| {
                        let lifted: Vec<HamelFloat> = diag
                            .iter()
                            .map(|&t| HamelFloat::new(t, 0.0, mapping.context_d()))
                            .collect();
                        f.eval(&lifted)
                    };
                    Some(recover_table(&eval, 2, &points)?)
                }
            };
            (value, compound, recovered)
        }
        _ => {
            let mapping = kind.f64_mapping()?;
            let f = if phi.is_continuous() {
                build_invariant_function(mapping.as_ref(), phi.clone(), args.tol, args.max_iter)
                    .map_err(budget_error)?
            } else {
                remark4_counterexample(phi.clone(), mapping.as_ref(), args.tol, args.max_iter)
            };
            let v = data.to_f64();
            let compound = f.compound_value(&v).map_err(budget_error)?;
            let value = f.eval(&v).map_err(budget_error)?;
            let recovered = match &args.recover {
                None => None,
                Some(list) => {
                    let points = parse_recover_points(list)?;
                    let eval = |diag: &[f64]| f.eval(diag);
                    Some(recover_table(&eval, mapping.arity(), &points)?)
                }
            };
            (value, compound, recovered)
        }
    };

    let json = json!({
        "mapping": kind.name(),
        "phi": phi.name(),
        "v": data.to_f64(),
        "compound": compound,
        "value": value,
        "recovered_phi": recovered.as_ref().map(|table| {
            table.iter().map(|(t, y)| json!({"t": t, "phi": y})).collect::<Vec<_>>()
        }),
    });
    let text = match args.output.format.as_str() {
        "json" => serde_json::to_string_pretty(&json).expect("serializable"),
        _ => {
            let mut s = format!("F(v) = {} (compound = {})", fmt17(value), fmt17(compound));
            if let Some(table) = &recovered {
                for (t, y) in table {
                    s.push_str(&format!("\nphi({}) = {}", fmt17(*t), fmt17(*y)));
                }
            }
            s
        }
    };
    emit(&args.output, text)?;
    Ok(0)
}

fn parse_recover_points(list: &str) -> Result<Vec<f64>, Failure> {
    list.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Failure::domain(format!("cannot parse diagonal point {t:?}")))
        })
        .collect()
}

fn recover_table(
    eval: &dyn Fn(&[f64]) -> Result<f64, invariant_means::FunceqError>,
    arity: usize,
    points: &[f64],
) -> Result<Vec<(f64, f64)>, Failure> {
    let table = recover_phi(eval, arity, points).map_err(|e| Failure::domain(e.to_string()))?;
    match table {
        DiagonalFunction::Table(nodes) => Ok(nodes),
        _ => unreachable!("recover_phi returns a table"),
    }
}

// ---------------------------------------------------------------------
// principle

fn principle_command(args: &PrincipleArgs) -> Result<u8, Failure> {
    let kind = resolve_mapping(&args.mapping.mapping)?;
    let (report_json, consistent, summary) = match &kind {
        MappingKind::HamelMn => {
            let mapping = HamelMnMapping::standard();
            let samples = sample_hamel_float(mapping.context_d(), args.samples, args.seed);
            let tol = HamelFloat::new(args.tol, 0.0, mapping.context_d());
            let report = invariance_principle_check(&mapping, &samples, tol, args.max_iter)
                .map_err(|e| Failure::domain(e.to_string()))?;
            summarize_principle(report)
        }
        _ => {
            let mapping = kind.f64_mapping()?;
            let samples = sample_f64(&kind, mapping.arity(), args.samples, args.seed);
            let report =
                invariance_principle_check(mapping.as_ref(), &samples, args.tol, args.max_iter)
                    .map_err(|e| Failure::domain(e.to_string()))?;
            summarize_principle(report)
        }
    };
    let json = json!({
        "mapping": kind.name(),
        "tol": args.tol,
        "report": report_json,
    });
    let text = match args.output.format.as_str() {
        "json" => serde_json::to_string_pretty(&json).expect("serializable"),
        _ => summary,
    };
    emit(&args.output, text)?;
    Ok(if consistent { 0 } else { 1 })
}

fn summarize_principle<S: OrbitScalar>(
    report: invariant_means::PrincipleReport<S>,
) -> (Value, bool, String) {
    use invariant_means::PrincipleVerdict::*;
    let counts = report.verdicts.iter().fold([0usize; 3], |mut acc, s| {
        match s.verdict {
            ConvergedUnique => acc[0] += 1,
            DivergentNonUnique => acc[1] += 1,
            Inconclusive => acc[2] += 1,
        }
        acc
    });
    let summary = format!(
        "samples = {}: converged_unique = {}, divergent_non_unique = {}, inconclusive = {}, consistent = {}",
        report.verdicts.len(),
        counts[0],
        counts[1],
        counts[2],
        report.consistent
    );
    (report.to_json(), report.consistent, summary)
}

// ---------------------------------------------------------------------
// hamel-demo

fn parse_params_list(text: &str) -> Result<LambdaParams, Failure> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err(Failure::domain(format!(
            "expected 4 comma-separated rationals b,c,d,kappa, got {}",
            parts.len()
        )));
    }
    let rationals: Vec<Rational> = parts
        .iter()
        .map(|t| parse_rational(t.trim()).map_err(|e| Failure::domain(e.to_string())))
        .collect::<Result<_, _>>()?;
    validate_lambda_params(
        rationals[0].clone(),
        rationals[1].clone(),
        rationals[2].clone(),
        rationals[3].clone(),
    )
    .map_err(|e| Failure::domain(e.to_string()))
}

fn parse_functional(text: &str, d: u64) -> Result<AdditiveFunctional, Failure> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Failure::domain("expected 2 comma-separated rationals a0,a1"));
    }
    let a0 = parse_rational(parts[0].trim()).map_err(|e| Failure::domain(e.to_string()))?;
    let a1 = parse_rational(parts[1].trim()).map_err(|e| Failure::domain(e.to_string()))?;
    AdditiveFunctional::new(a0, a1, d).map_err(|e| Failure::domain(e.to_string()))
}

fn hamel_demo_command(args: &HamelDemoArgs) -> Result<u8, Failure> {
    if args.n > 16 {
        return Err(Failure::domain(
            "exact state size roughly doubles per step; --n is capped at 16",
        ));
    }
    let params = parse_params_list(&args.params)?;
    let functional = parse_functional(&args.functional, args.d)?;
    let u = match &args.u {
        Some(text) => {
            HamelNumber::parse(text, args.d).map_err(|e| Failure::domain(e.to_string()))?
        }
        None => HamelNumber::sqrt_d(args.d).map_err(|e| Failure::domain(e.to_string()))?,
    };
    let v = match &args.v {
        Some(text) => {
            HamelNumber::parse(text, args.d).map_err(|e| Failure::domain(e.to_string()))?
        }
        None => HamelNumber::zero(args.d).map_err(|e| Failure::domain(e.to_string()))?,
    };

    let pairs = mn_orbit(&params, &functional, &u, &v, args.n);
    let total = &u + &v;
    let initial_gap = (&u - &v).abs();
    let kappa = params.kappa().clone();
    let mut rows = Vec::new();
    let mut kappa_power = Rational::from_integer(1.into());
    for (k, (m, n)) in pairs.iter().enumerate() {
        let gap = (m - n).abs();
        let bound = initial_gap.scale(&kappa_power);
        rows.push(json!({
            "n": k,
            "m": m.to_string(),
            "n_coord": n.to_string(),
            "m_f64": m.to_f64(),
            "n_f64": n.to_f64(),
            "sum_exact": (m + n) == total,
            "gap": gap.to_string(),
            "gap_f64": gap.to_f64(),
            "gap_bound": bound.to_string(),
            "gap_within_bound": gap <= bound,
        }));
        kappa_power *= &kappa;
    }
    let json = json!({
        "d": args.d,
        "params": args.params,
        "functional": args.functional,
        "u": u.to_string(),
        "v": v.to_string(),
        "arithmetic_mean": total.half().to_string(),
        "steps": rows,
    });
    let text = match args.output.format.as_str() {
        "json" => serde_json::to_string_pretty(&json).expect("serializable"),
        _ => {
            let mut s = format!(
                "pair orbit on the span of {{1, sqrt({})}} from u = {}, v = {}\ninvariant arithmetic mean: {}\n",
                args.d,
                u,
                v,
                total.half()
            );
            for row in json["steps"].as_array().expect("rows") {
                s.push_str(&format!(
                    "n = {:2}: M = {} | N = {} | gap = {} (≤ {}: {})\n",
                    row["n"],
                    row["m"].as_str().expect("text"),
                    row["n_coord"].as_str().expect("text"),
                    row["gap"].as_str().expect("text"),
                    row["gap_bound"].as_str().expect("text"),
                    row["gap_within_bound"],
                ));
            }
            s.push_str(&format!(
                "float images at n = {}: {} / {}",
                args.n,
                fmt17(pairs.last().expect("nonempty").0.to_f64()),
                fmt17(pairs.last().expect("nonempty").1.to_f64()),
            ));
            s
        }
    };
    emit(&args.output, text)?;
    Ok(0)
}

// ---------------------------------------------------------------------

fn list_mappings() {
    println!("built-in mappings:");
    for name in builtin_names() {
        let about = match *name {
            "agm" => "arithmetic and geometric means; compound is the Gauss AGM",
            "ahm" => "arithmetic and harmonic means; compound is the geometric mean",
            "swap" => "coordinate exchange; period-2 orbits, non-unique invariant means",
            "example1" => "piecewise halving mapping on [0,1]^3 with unbounded contraction onset",
            "hamel-mn" => "λ pair family on the span of {1, sqrt(2)}; compound is the arithmetic mean",
            _ => "",
        };
        println!("  {name:<9} {about}");
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    if cli.list_mappings {
        list_mappings();
        return Ok(0);
    }
    match &cli.command {
        None => Err(Failure {
            code: 64,
            message: "no command given; see --help".into(),
        }),
        Some(Command::Compound(args)) => compound_command(args),
        Some(Command::Orbit(args)) => orbit_command(args),
        Some(Command::Probe(args)) => probe_command(args),
        Some(Command::Verify(args)) => verify_command(args),
        Some(Command::Principle(args)) => principle_command(args),
        Some(Command::HamelDemo(args)) => hamel_demo_command(args),
        Some(Command::Funceq(args)) => funceq_command(args),
        Some(Command::Repro(args)) => repro::repro_command(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
