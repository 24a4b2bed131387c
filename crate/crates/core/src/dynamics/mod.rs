//! Orbits of mean-type mappings and everything computed from them.
//!
//! The machinery is generic over the scalar: binary64 for the numeric
//! catalog, exact rationals for the piecewise halving mapping, exact or
//! float-coefficient span elements for the λ pair family. Internality makes
//! `min(Mⁿ(v))` nondecreasing and `max(Mⁿ(v))` nonincreasing, so the
//! extremal invariant means are limits of monotone sequences and every
//! finite orbit yields certified two-sided estimates of them.

mod example1;
mod mappings;

pub use example1::{example1_mapping, example1_orbit_formula, Example1Exact, Example1Mapping};
pub use mappings::{
    builtin_f64, builtin_names, conjugate_mapping, ConjugateMapping, ExprMapping,
    HamelMnMapping, SwapMapping,
};

use serde_json::{json, Value};
use thiserror::Error;

use crate::hamel::{HamelFloat, HamelNumber};
use crate::mean::MeanError;
use crate::rational::{rational_to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Mean(#[from] MeanError),
    #[error("arity mismatch: mapping has arity {expected}, vector has length {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("weak-contractivity probe needs a nonconstant starting vector")]
    ConstantInput,
}

/// Scalar a mean-type orbit can run over.
pub trait OrbitScalar: Clone + PartialEq + PartialOrd + std::fmt::Debug {
    fn sub(&self, rhs: &Self) -> Self;
    fn midpoint(lo: &Self, hi: &Self) -> Self;
    fn div_nat(&self, k: u32) -> Self;
    /// Binary64 image, used for traces and reports.
    fn to_f64(&self) -> f64;
}

impl OrbitScalar for f64 {
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn midpoint(lo: &Self, hi: &Self) -> Self {
        (lo + hi) / 2.0
    }
    fn div_nat(&self, k: u32) -> Self {
        self / f64::from(k)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl OrbitScalar for Rational {
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn midpoint(lo: &Self, hi: &Self) -> Self {
        (lo + hi) / Rational::from_integer(2.into())
    }
    fn div_nat(&self, k: u32) -> Self {
        self / Rational::from_integer(i64::from(k).into())
    }
    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
}

impl OrbitScalar for HamelNumber {
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn midpoint(lo: &Self, hi: &Self) -> Self {
        (lo + hi).half()
    }
    fn div_nat(&self, k: u32) -> Self {
        self.scale(&crate::rational::rat(1, i64::from(k)))
    }
    fn to_f64(&self) -> f64 {
        HamelNumber::to_f64(self)
    }
}

impl OrbitScalar for HamelFloat {
    fn sub(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.d, rhs.d);
        HamelFloat::new(self.q0 - rhs.q0, self.q1 - rhs.q1, self.d)
    }
    fn midpoint(lo: &Self, hi: &Self) -> Self {
        debug_assert_eq!(lo.d, hi.d);
        HamelFloat::new((lo.q0 + hi.q0) / 2.0, (lo.q1 + hi.q1) / 2.0, lo.d)
    }
    fn div_nat(&self, k: u32) -> Self {
        HamelFloat::new(self.q0 / f64::from(k), self.q1 / f64::from(k), self.d)
    }
    fn to_f64(&self) -> f64 {
        self.value()
    }
}

/// A mean-type mapping over scalar `S`: every coordinate is a mean, so the
/// image of `v` stays inside `[min(v), max(v)]^p`.
pub trait MeanMapping<S> {
    fn arity(&self) -> usize;
    fn apply(&self, v: &[S]) -> Result<Vec<S>, DynamicsError>;
    fn name(&self) -> String;
}

fn check_arity<S>(mapping: &dyn MeanMapping<S>, v: &[S]) -> Result<(), DynamicsError> {
    if v.len() != mapping.arity() {
        return Err(DynamicsError::ArityMismatch {
            expected: mapping.arity(),
            got: v.len(),
        });
    }
    Ok(())
}

/// One application of the mapping, with an arity check.
pub fn apply_mapping<S: OrbitScalar>(
    mapping: &dyn MeanMapping<S>,
    v: &[S],
) -> Result<Vec<S>, DynamicsError> {
    check_arity(mapping, v)?;
    mapping.apply(v)
}

/// The `n`-th iterate; `n = 0` returns the input unchanged.
pub fn iterate<S: OrbitScalar>(
    mapping: &dyn MeanMapping<S>,
    v: &[S],
    n: usize,
) -> Result<Vec<S>, DynamicsError> {
    check_arity(mapping, v)?;
    let mut current = v.to_vec();
    for _ in 0..n {
        current = mapping.apply(&current)?;
    }
    Ok(current)
}

fn bounds<S: OrbitScalar>(v: &[S]) -> (S, S) {
    let mut lo = v[0].clone();
    let mut hi = v[0].clone();
    for x in &v[1..] {
        if x.partial_cmp(&lo) == Some(std::cmp::Ordering::Less) {
            lo = x.clone();
        }
        if x.partial_cmp(&hi) == Some(std::cmp::Ordering::Greater) {
            hi = x.clone();
        }
    }
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Spread fell to or below the tolerance.
    SpreadTol,
    /// Iteration budget exhausted before the tolerance was reached.
    MaxIter,
    /// `M(vₙ) = vₙ` exactly.
    ExactFixpoint,
}

/// Stopping rule for [`orbit`]: whichever trigger fires first.
#[derive(Debug, Clone)]
pub struct StopRule<S> {
    pub spread_tol: S,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub struct OrbitStep<S> {
    pub n: usize,
    pub v: Vec<S>,
    pub min: S,
    pub max: S,
    pub spread: S,
}

fn make_step<S: OrbitScalar>(n: usize, v: Vec<S>) -> OrbitStep<S> {
    let (min, max) = bounds(&v);
    let spread = max.sub(&min);
    OrbitStep {
        n,
        v,
        min,
        max,
        spread,
    }
}

/// Recorded orbit `v, M(v), M²(v), …` with per-step extrema and spread.
#[derive(Debug, Clone)]
pub struct OrbitTrace<S> {
    pub steps: Vec<OrbitStep<S>>,
    pub stop_reason: StopReason,
}

impl<S: OrbitScalar> OrbitTrace<S> {
    pub fn last(&self) -> &OrbitStep<S> {
        self.steps.last().expect("a trace holds at least step 0")
    }

    /// Checks the monotone-envelope invariant on the recorded steps:
    /// min nondecreasing, max nonincreasing.
    pub fn envelopes_monotone(&self) -> bool {
        self.steps.windows(2).all(|w| {
            w[1].min.partial_cmp(&w[0].min) != Some(std::cmp::Ordering::Less)
                && w[1].max.partial_cmp(&w[0].max) != Some(std::cmp::Ordering::Greater)
        })
    }

    /// CSV trace: header `n,v1,…,vp,min,max,spread`, one row per step,
    /// binary64 images printed with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let p = self.steps[0].v.len();
        let mut out = String::from("n");
        for i in 1..=p {
            out.push_str(&format!(",v{i}"));
        }
        out.push_str(",min,max,spread\n");
        for step in &self.steps {
            out.push_str(&step.n.to_string());
            for x in &step.v {
                out.push(',');
                out.push_str(&fmt17(x.to_f64()));
            }
            out.push_str(&format!(
                ",{},{},{}\n",
                fmt17(step.min.to_f64()),
                fmt17(step.max.to_f64()),
                fmt17(step.spread.to_f64())
            ));
        }
        out
    }
}

/// Binary64 with 17 significant digits: enough for exact round trips.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Runs the orbit until the stop rule triggers, recording every step.
pub fn orbit<S: OrbitScalar>(
    mapping: &dyn MeanMapping<S>,
    v0: &[S],
    stop: &StopRule<S>,
) -> Result<OrbitTrace<S>, DynamicsError> {
    check_arity(mapping, v0)?;
    let mut steps = vec![make_step(0, v0.to_vec())];
    if steps[0].spread <= stop.spread_tol {
        // already inside the tolerance band; constant vectors are exact
        // fixed points of every mean-type mapping (reflexivity)
        let next = mapping.apply(v0)?;
        let reason = if next == steps[0].v {
            StopReason::ExactFixpoint
        } else {
            StopReason::SpreadTol
        };
        return Ok(OrbitTrace {
            steps,
            stop_reason: reason,
        });
    }
    for n in 1..=stop.max_iter {
        let next = mapping.apply(&steps.last().expect("nonempty").v)?;
        let stalled = next == steps.last().expect("nonempty").v;
        steps.push(make_step(n, next));
        if stalled {
            return Ok(OrbitTrace {
                steps,
                stop_reason: StopReason::ExactFixpoint,
            });
        }
        if steps.last().expect("nonempty").spread <= stop.spread_tol {
            return Ok(OrbitTrace {
                steps,
                stop_reason: StopReason::SpreadTol,
            });
        }
    }
    Ok(OrbitTrace {
        steps,
        stop_reason: StopReason::MaxIter,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceStatus {
    Converged,
    MaxIterReached,
}

/// Compound-mean estimate: the midpoint of the final iterate's bracket.
#[derive(Debug, Clone)]
pub struct CompoundResult<S> {
    pub value: S,
    pub spread_at_stop: S,
    pub iterations: usize,
    pub status: ConvergenceStatus,
}

/// Iterates until the spread falls to `tol` (or the budget runs out) and
/// reports the midpoint of `[min, max]` of the final iterate. On
/// `Converged` every coordinate of the final iterate is within `tol` of
/// the value; on `MaxIterReached` the estimate is still reported and the
/// caller decides. Orbits that stall exactly above the tolerance can never
/// reach it and are reported as `MaxIterReached` as well.
pub fn compound_mean<S: OrbitScalar>(
    mapping: &dyn MeanMapping<S>,
    v: &[S],
    tol: S,
    max_iter: usize,
) -> Result<CompoundResult<S>, DynamicsError> {
    let trace = orbit(
        mapping,
        v,
        &StopRule {
            spread_tol: tol.clone(),
            max_iter,
        },
    )?;
    let last = trace.last();
    let status = if last.spread <= tol {
        ConvergenceStatus::Converged
    } else {
        ConvergenceStatus::MaxIterReached
    };
    Ok(CompoundResult {
        value: S::midpoint(&last.min, &last.max),
        spread_at_stop: last.spread.clone(),
        iterations: last.n,
        status,
    })
}

/// Two-sided estimate of the extremal invariant means after `n` steps:
/// `lower` underestimates the smallest invariant mean and `upper`
/// overestimates the biggest, both monotonically improving in `n`.
#[derive(Debug, Clone)]
pub struct EnvelopeEstimate<S> {
    pub lower: S,
    pub upper: S,
    /// Applications actually performed (stops early only on an exact
    /// fixed point, which no further step can change).
    pub steps_used: usize,
}

pub fn envelope_limits<S: OrbitScalar>(
    mapping: &dyn MeanMapping<S>,
    v: &[S],
    n: usize,
) -> Result<EnvelopeEstimate<S>, DynamicsError> {
    check_arity(mapping, v)?;
    let mut current = v.to_vec();
    let mut used = 0;
    for _ in 0..n {
        let next = mapping.apply(&current)?;
        let stalled = next == current;
        current = next;
        if stalled {
            break;
        }
        used += 1;
    }
    let (lower, upper) = bounds(&current);
    Ok(EnvelopeEstimate {
        lower,
        upper,
        steps_used: used,
    })
}

/// Result of probing weak contractivity at one starting vector.
#[derive(Debug, Clone)]
pub struct ContractivityReport<S> {
    /// Smallest `n` with `spread(Mⁿ(v)) < spread(v)` strictly, if one
    /// exists within the budget.
    pub n0: Option<usize>,
    pub n_max: usize,
    /// `spread(Mⁿ(v))` for `n = 0..`, up to the witness or the budget.
    pub spread_history: Vec<S>,
}

/// Searches for the first strict spread drop below the starting spread.
/// Ties count as not-yet-contracted; comparisons are exact in exact
/// arithmetic and plain strict `<` in binary64 (no epsilon slack).
pub fn weak_contractivity_probe<S: OrbitScalar>(
    mapping: &dyn MeanMapping<S>,
    v: &[S],
    n_max: usize,
) -> Result<ContractivityReport<S>, DynamicsError> {
    check_arity(mapping, v)?;
    let (lo, hi) = bounds(v);
    if lo == hi {
        return Err(DynamicsError::ConstantInput);
    }
    let initial_spread = hi.sub(&lo);
    let mut history = vec![initial_spread.clone()];
    let mut current = v.to_vec();
    for n in 1..=n_max {
        current = mapping.apply(&current)?;
        let (lo, hi) = bounds(&current);
        let spread = hi.sub(&lo);
        history.push(spread.clone());
        if spread < initial_spread {
            return Ok(ContractivityReport {
                n0: Some(n),
                n_max,
                spread_history: history,
            });
        }
    }
    Ok(ContractivityReport {
        n0: None,
        n_max,
        spread_history: history,
    })
}

/// Largest `|K(M(v)) − K(v)|` over the samples, for a candidate invariant
/// mean `K` given as an evaluator of binary64 images.
pub fn invariance_residual<S: OrbitScalar>(
    k: &dyn Fn(&[S]) -> Result<f64, DynamicsError>,
    mapping: &dyn MeanMapping<S>,
    samples: &[Vec<S>],
) -> Result<f64, DynamicsError> {
    let mut worst = 0.0f64;
    for v in samples {
        let image = apply_mapping(mapping, v)?;
        let residual = (k(&image)? - k(v)?).abs();
        worst = worst.max(residual);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrincipleVerdict {
    /// Orbit spread fell below the tolerance: iterates converge here and
    /// the compound estimate is the unique-invariant-mean candidate.
    ConvergedUnique,
    /// Spread stabilized strictly above the tolerance: the envelope gap
    /// certifies at least two distinct invariant means.
    DivergentNonUnique,
    /// Budget exhausted while the spread was still moving.
    Inconclusive,
}

impl PrincipleVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            PrincipleVerdict::ConvergedUnique => "converged_unique",
            PrincipleVerdict::DivergentNonUnique => "divergent_non_unique",
            PrincipleVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SampleVerdict<S> {
    pub verdict: PrincipleVerdict,
    pub lower: S,
    pub upper: S,
    pub iterations: usize,
    /// Compound estimate, present when the orbit converged.
    pub compound: Option<S>,
}

#[derive(Debug, Clone)]
pub struct PrincipleReport<S> {
    pub verdicts: Vec<SampleVerdict<S>>,
    /// The machine-checkable direction of the invariance principle: no
    /// sample may simultaneously converge and leave an envelope gap wider
    /// than the tolerance.
    pub consistent: bool,
}

impl<S: OrbitScalar> PrincipleReport<S> {
    pub fn to_json(&self) -> Value {
        json!({
            "consistent": self.consistent,
            "samples": self.verdicts.iter().map(|s| {
                json!({
                    "verdict": s.verdict.as_str(),
                    "lower": s.lower.to_f64(),
                    "upper": s.upper.to_f64(),
                    "iterations": s.iterations,
                    "compound": s.compound.as_ref().map(OrbitScalar::to_f64),
                })
            }).collect::<Vec<_>>(),
        })
    }
}

// A spread that moves by less than tol/1000 across this many consecutive
// steps while still above tol is declared stalled. Distinguishes periodic
// and exactly-stalled orbits from slow convergence without attempting to
// solve the halting problem; Inconclusive remains the honest third verdict.
const STALL_WINDOW: usize = 64;

/// Classifies each starting vector per the invariance principle and checks
/// the global consistency flag.
pub fn invariance_principle_check<S: OrbitScalar>(
    mapping: &dyn MeanMapping<S>,
    samples: &[Vec<S>],
    tol: S,
    max_iter: usize,
) -> Result<PrincipleReport<S>, DynamicsError> {
    let stall_quantum = tol.div_nat(1000);
    let mut verdicts = Vec::with_capacity(samples.len());
    for v in samples {
        check_arity(mapping, v)?;
        let mut current = v.to_vec();
        let mut spreads: Vec<S> = Vec::new();
        {
            let (lo, hi) = bounds(&current);
            spreads.push(hi.sub(&lo));
        }
        let mut verdict = None;
        let mut iterations = 0;
        if spreads[0] <= tol {
            verdict = Some(PrincipleVerdict::ConvergedUnique);
        }
        for n in 1..=max_iter {
            if verdict.is_some() {
                break;
            }
            let next = mapping.apply(&current)?;
            let stalled_exactly = next == current;
            current = next;
            iterations = n;
            let (lo, hi) = bounds(&current);
            let spread = hi.sub(&lo);
            spreads.push(spread.clone());
            if spread <= tol {
                verdict = Some(PrincipleVerdict::ConvergedUnique);
                break;
            }
            if stalled_exactly {
                verdict = Some(PrincipleVerdict::DivergentNonUnique);
                break;
            }
            if n >= STALL_WINDOW {
                let drop = spreads[n - STALL_WINDOW].sub(&spread);
                if drop < stall_quantum {
                    verdict = Some(PrincipleVerdict::DivergentNonUnique);
                    break;
                }
            }
        }
        let verdict = verdict.unwrap_or(PrincipleVerdict::Inconclusive);
        let (lower, upper) = bounds(&current);
        let compound = match verdict {
            PrincipleVerdict::ConvergedUnique => Some(S::midpoint(&lower, &upper)),
            _ => None,
        };
        verdicts.push(SampleVerdict {
            verdict,
            lower,
            upper,
            iterations,
            compound,
        });
    }
    let consistent = verdicts.iter().all(|s| {
        !(s.verdict == PrincipleVerdict::ConvergedUnique && s.upper.sub(&s.lower) > tol)
    });
    Ok(PrincipleReport {
        verdicts,
        consistent,
    })
}

#[cfg(test)]
mod tests;
