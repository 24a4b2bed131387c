//! Mean expressions and their evaluation.
//!
//! A mean is internal: `min(v) <= M(v) <= max(v)`. Floating point rounding
//! can push an otherwise-internal value a few ulps outside that bracket,
//! which would poison the monotone orbit envelopes downstream, so binary64
//! evaluation clamps the raw result into `[min(v), max(v)]` after asserting
//! the excursion stays within 8 ulp. Anything larger is reported as
//! [`MeanError::InternalityBreach`] — an implementation bug, not bad input.
//!
//! Exact evaluation over [`HamelNumber`] vectors supports the subset of the
//! expression language that is closed on the span (weighted arithmetic,
//! min/max, blends, piecewise regions, and the state-weighted λ family);
//! no clamping is applied there because the algebra is exact.

use thiserror::Error;

use crate::hamel::{AdditiveFunctional, HamelNumber, LambdaParams};
use crate::rational::{rat, rational_to_f64, Rational};
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeanError {
    #[error("arity mismatch: expression has arity {expected}, input has length {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("internality breach: raw value {raw:e} outside [{lo:e}, {hi:e}] by more than 8 ulp")]
    InternalityBreach { raw: f64, lo: f64, hi: f64 },
    #[error("{node} is not evaluable in {domain} arithmetic")]
    UnsupportedInDomain {
        node: &'static str,
        domain: &'static str,
    },
    #[error("invalid mean expression: {0}")]
    InvalidExpr(String),
}

/// Which arithmetic a domain carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    Binary64,
    HamelExact,
}

/// The interval `I` the means act on. Endpoints may be infinite; finite
/// endpoints are treated as included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub const REALS: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self, MeanError> {
        if lo.is_nan() || hi.is_nan() || !(lo < hi) {
            return Err(MeanError::InvalidExpr(format!(
                "empty interval [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        x.is_finite() && x >= self.lo && x <= self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

/// Scalar domain: arithmetic kind plus the interval `I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarDomain {
    pub kind: DomainKind,
    pub interval: Interval,
}

impl ScalarDomain {
    pub fn binary64(lo: f64, hi: f64) -> Result<Self, MeanError> {
        Ok(Self {
            kind: DomainKind::Binary64,
            interval: Interval::new(lo, hi)?,
        })
    }

    pub fn reals() -> Self {
        Self {
            kind: DomainKind::Binary64,
            interval: Interval::REALS,
        }
    }

    /// Strictly positive reals, the natural domain of the log/power generators.
    pub fn positive() -> Self {
        Self {
            kind: DomainKind::Binary64,
            interval: Interval {
                lo: f64::MIN_POSITIVE,
                hi: f64::INFINITY,
            },
        }
    }

    pub fn hamel_exact() -> Self {
        Self {
            kind: DomainKind::HamelExact,
            interval: Interval::REALS,
        }
    }
}

/// Generator of a quasi-arithmetic mean: continuous, strictly monotone on
/// its declared domain, with a closed-form inverse. The catalog is closed
/// so inverses stay total and exact.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorId {
    Identity,
    /// `ln x` on `(0, ∞)`.
    Log,
    /// `e^x` on ℝ.
    Exp,
    /// `x^r` on `(0, ∞)`, `r != 0`.
    Power(f64),
    /// `−x` on ℝ.
    Negation,
}

impl GeneratorId {
    pub fn validate(&self) -> Result<(), MeanError> {
        if let GeneratorId::Power(r) = self {
            if !r.is_finite() || *r == 0.0 {
                return Err(MeanError::InvalidExpr(format!(
                    "power generator exponent must be finite and nonzero, got {r}"
                )));
            }
        }
        Ok(())
    }

    pub fn domain_contains(&self, x: f64) -> bool {
        match self {
            GeneratorId::Identity | GeneratorId::Exp | GeneratorId::Negation => x.is_finite(),
            GeneratorId::Log | GeneratorId::Power(_) => x.is_finite() && x > 0.0,
        }
    }

    pub fn apply(&self, x: f64) -> Result<f64, MeanError> {
        if !self.domain_contains(x) {
            return Err(MeanError::DomainViolation(format!(
                "{x} is outside the domain of generator {self:?}"
            )));
        }
        Ok(match self {
            GeneratorId::Identity => x,
            GeneratorId::Log => x.ln(),
            GeneratorId::Exp => x.exp(),
            GeneratorId::Power(r) => x.powf(*r),
            GeneratorId::Negation => -x,
        })
    }

    pub fn invert(&self, y: f64) -> Result<f64, MeanError> {
        let out_of_range = || {
            MeanError::DomainViolation(format!(
                "{y} is outside the range of generator {self:?}"
            ))
        };
        match self {
            GeneratorId::Identity => Ok(y),
            GeneratorId::Log => Ok(y.exp()),
            GeneratorId::Exp => {
                if y > 0.0 {
                    Ok(y.ln())
                } else {
                    Err(out_of_range())
                }
            }
            GeneratorId::Power(r) => {
                if y > 0.0 {
                    Ok(y.powf(1.0 / r))
                } else {
                    Err(out_of_range())
                }
            }
            GeneratorId::Negation => Ok(-y),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GeneratorId::Identity => "identity",
            GeneratorId::Log => "log",
            GeneratorId::Exp => "exp",
            GeneratorId::Power(_) => "power",
            GeneratorId::Negation => "negation",
        }
    }
}

/// Scalar-valued coefficient for a convex blend of two means.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientFn {
    /// A fixed blend weight in `[0, 1]`.
    Const(Rational),
    /// The strip coefficient `(2|v3−v1| − (v2−v1)²) / (v2−v1)²` on `p = 3`,
    /// clamped into `[0, 1]`.
    Example1Strip,
}

impl CoefficientFn {
    fn validate(&self, arity: usize) -> Result<(), MeanError> {
        match self {
            CoefficientFn::Const(s) => {
                if s.is_negative() || s > &Rational::one() {
                    return Err(MeanError::InvalidExpr(format!(
                        "blend coefficient {s} outside [0, 1]"
                    )));
                }
            }
            CoefficientFn::Example1Strip => {
                if arity != 3 {
                    return Err(MeanError::InvalidExpr(format!(
                        "example1_strip coefficient needs arity 3, expression has {arity}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn eval_f64(&self, v: &[f64]) -> Result<f64, MeanError> {
        match self {
            CoefficientFn::Const(s) => Ok(rational_to_f64(s)),
            CoefficientFn::Example1Strip => {
                let gap = (v[2] - v[0]).abs();
                let threshold = (v[1] - v[0]) * (v[1] - v[0]);
                if threshold == 0.0 {
                    return Err(MeanError::DomainViolation(
                        "strip coefficient undefined when v2 = v1".into(),
                    ));
                }
                Ok(((2.0 * gap - threshold) / threshold).clamp(0.0, 1.0))
            }
        }
    }

    fn eval_exact(&self, v: &[HamelNumber]) -> Result<HamelNumber, MeanError> {
        let d = v[0].context_d();
        match self {
            CoefficientFn::Const(s) => Ok(HamelNumber::from_rational(s.clone(), d)
                .expect("context d was validated by the input vector")),
            CoefficientFn::Example1Strip => {
                let gap = (&v[2] - &v[0]).abs();
                let delta = &v[1] - &v[0];
                let threshold = &delta * &delta;
                let inv = threshold.recip().ok_or_else(|| {
                    MeanError::DomainViolation("strip coefficient undefined when v2 = v1".into())
                })?;
                let s = (gap.scale(&rat(2, 1)) - threshold) * inv;
                let zero = HamelNumber::zero(d).expect("valid context");
                let one = HamelNumber::from_rational(Rational::one(), d).expect("valid context");
                if s < zero {
                    Ok(zero)
                } else if s > one {
                    Ok(one)
                } else {
                    Ok(s)
                }
            }
        }
    }
}

/// Region predicate for piecewise means. Decided by exact comparisons in
/// both arithmetics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegionPredicate {
    /// `v1 <= v2`.
    FirstLeqSecond,
    /// `|v3 − v1| >= (v2 − v1)²` on `p = 3`.
    Example1Lambda,
}

impl RegionPredicate {
    fn validate(&self, arity: usize) -> Result<(), MeanError> {
        let needed = match self {
            RegionPredicate::FirstLeqSecond => 2,
            RegionPredicate::Example1Lambda => 3,
        };
        if arity < needed {
            return Err(MeanError::InvalidExpr(format!(
                "predicate {self:?} needs arity >= {needed}, expression has {arity}"
            )));
        }
        if matches!(self, RegionPredicate::Example1Lambda) && arity != 3 {
            return Err(MeanError::InvalidExpr(format!(
                "example1_lambda predicate needs arity 3, expression has {arity}"
            )));
        }
        Ok(())
    }

    fn holds_f64(&self, v: &[f64]) -> bool {
        match self {
            RegionPredicate::FirstLeqSecond => v[0] <= v[1],
            RegionPredicate::Example1Lambda => {
                (v[2] - v[0]).abs() >= (v[1] - v[0]) * (v[1] - v[0])
            }
        }
    }

    fn holds_exact(&self, v: &[HamelNumber]) -> bool {
        match self {
            RegionPredicate::FirstLeqSecond => v[0] <= v[1],
            RegionPredicate::Example1Lambda => {
                let delta = &v[1] - &v[0];
                (&v[2] - &v[0]).abs() >= &delta * &delta
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RegionPredicate::FirstLeqSecond => "first_leq_second",
            RegionPredicate::Example1Lambda => "example1_lambda",
        }
    }
}

/// One node of a mean expression tree.
///
/// Weighted arithmetic means are `PowerMean` with exponent 1; there is no
/// separate node, so serialization round trips are structurally exact.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanNode {
    /// `v[i]` — internal by definition.
    Projection(usize),
    /// `(Σ wᵢ·vᵢ^r)^(1/r)`; `r = 0` is the geometric mean, `r = ±∞` is
    /// max/min. Exponents other than 1 and ±∞ need strictly positive inputs.
    PowerMean { r: f64, weights: Vec<Rational> },
    /// `g⁻¹(Σ wᵢ·g(vᵢ))`.
    QuasiArithmetic {
        generator: GeneratorId,
        weights: Vec<Rational>,
    },
    Min,
    Max,
    /// `s(v)·left(v) + (1 − s(v))·right(v)`.
    ConvexBlend {
        coeff: CoefficientFn,
        left: Box<MeanNode>,
        right: Box<MeanNode>,
    },
    /// `then` where the predicate holds, `else` elsewhere.
    Piecewise {
        predicate: RegionPredicate,
        then_branch: Box<MeanNode>,
        else_branch: Box<MeanNode>,
    },
    /// The λ-family pair coordinate on `p = 2`:
    /// `λ(u)·u + (1−λ(u))·v`, or its mirror with the roles of λ and 1−λ
    /// exchanged. Evaluable only in exact arithmetic (the additive
    /// functional has no binary64 meaning off the span).
    StateWeighted {
        params: LambdaParams,
        functional: AdditiveFunctional,
        mirror: bool,
    },
}

/// A validated mean expression: a node tree plus its fixed arity `p >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanExpr {
    arity: usize,
    node: MeanNode,
}

fn validate_weights(weights: &[Rational], arity: usize) -> Result<(), MeanError> {
    if weights.len() != arity {
        return Err(MeanError::InvalidExpr(format!(
            "{} weights for arity {arity}",
            weights.len()
        )));
    }
    let mut sum = Rational::zero();
    for w in weights {
        if w.is_negative() {
            return Err(MeanError::InvalidExpr(format!("negative weight {w}")));
        }
        sum += w;
    }
    if !sum.is_one() {
        return Err(MeanError::InvalidExpr(format!(
            "weights sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

fn validate_node(node: &MeanNode, arity: usize) -> Result<(), MeanError> {
    match node {
        MeanNode::Projection(i) => {
            if *i >= arity {
                return Err(MeanError::InvalidExpr(format!(
                    "projection index {i} out of range for arity {arity}"
                )));
            }
        }
        MeanNode::PowerMean { r, weights } => {
            if r.is_nan() {
                return Err(MeanError::InvalidExpr("power exponent is NaN".into()));
            }
            validate_weights(weights, arity)?;
        }
        MeanNode::QuasiArithmetic { generator, weights } => {
            generator.validate()?;
            validate_weights(weights, arity)?;
        }
        MeanNode::Min | MeanNode::Max => {}
        MeanNode::ConvexBlend { coeff, left, right } => {
            coeff.validate(arity)?;
            validate_node(left, arity)?;
            validate_node(right, arity)?;
        }
        MeanNode::Piecewise {
            predicate,
            then_branch,
            else_branch,
        } => {
            predicate.validate(arity)?;
            validate_node(then_branch, arity)?;
            validate_node(else_branch, arity)?;
        }
        MeanNode::StateWeighted { .. } => {
            if arity != 2 {
                return Err(MeanError::InvalidExpr(format!(
                    "state_weighted mean needs arity 2, expression has {arity}"
                )));
            }
        }
    }
    Ok(())
}

impl MeanExpr {
    pub fn new(arity: usize, node: MeanNode) -> Result<Self, MeanError> {
        if arity < 2 {
            return Err(MeanError::InvalidExpr(format!(
                "arity must be at least 2, got {arity}"
            )));
        }
        validate_node(&node, arity)?;
        Ok(Self { arity, node })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn node(&self) -> &MeanNode {
        &self.node
    }

    pub fn equal_weights(arity: usize) -> Vec<Rational> {
        vec![rat(1, arity as i64); arity]
    }

    /// Unweighted arithmetic mean (power mean with exponent 1).
    pub fn arithmetic(arity: usize) -> Self {
        Self::power(1.0, Self::equal_weights(arity)).expect("equal weights are valid")
    }

    /// Weighted arithmetic mean.
    pub fn weighted_arithmetic(weights: Vec<Rational>) -> Result<Self, MeanError> {
        Self::power(1.0, weights)
    }

    /// Unweighted geometric mean (power mean with exponent 0).
    pub fn geometric(arity: usize) -> Self {
        Self::power(0.0, Self::equal_weights(arity)).expect("equal weights are valid")
    }

    /// Unweighted harmonic mean (power mean with exponent −1).
    pub fn harmonic(arity: usize) -> Self {
        Self::power(-1.0, Self::equal_weights(arity)).expect("equal weights are valid")
    }

    pub fn power(r: f64, weights: Vec<Rational>) -> Result<Self, MeanError> {
        let arity = weights.len();
        Self::new(arity, MeanNode::PowerMean { r, weights })
    }

    pub fn quasi_arithmetic(
        generator: GeneratorId,
        weights: Vec<Rational>,
    ) -> Result<Self, MeanError> {
        let arity = weights.len();
        Self::new(arity, MeanNode::QuasiArithmetic { generator, weights })
    }

    pub fn min_of(arity: usize) -> Self {
        Self::new(arity, MeanNode::Min).expect("min is valid at any arity")
    }

    pub fn max_of(arity: usize) -> Self {
        Self::new(arity, MeanNode::Max).expect("max is valid at any arity")
    }

    pub fn projection(arity: usize, index: usize) -> Result<Self, MeanError> {
        Self::new(arity, MeanNode::Projection(index))
    }

    /// The λ-family coordinate mean; see [`MeanNode::StateWeighted`].
    pub fn state_weighted(
        params: LambdaParams,
        functional: AdditiveFunctional,
        mirror: bool,
    ) -> Self {
        Self::new(
            2,
            MeanNode::StateWeighted {
                params,
                functional,
                mirror,
            },
        )
        .expect("state_weighted is valid at arity 2")
    }

    fn check_input_f64(&self, v: &[f64], domain: &ScalarDomain) -> Result<(), MeanError> {
        if domain.kind != DomainKind::Binary64 {
            return Err(MeanError::UnsupportedInDomain {
                node: "binary64 evaluation",
                domain: "hamel_exact",
            });
        }
        if v.len() != self.arity {
            return Err(MeanError::ArityMismatch {
                expected: self.arity,
                got: v.len(),
            });
        }
        for &x in v {
            if !domain.interval.contains(x) {
                return Err(MeanError::DomainViolation(format!(
                    "input {x} outside the domain interval [{}, {}]",
                    domain.interval.lo, domain.interval.hi
                )));
            }
        }
        Ok(())
    }

    /// Binary64 evaluation with the clamp-after-assert internality policy.
    pub fn eval(&self, v: &[f64], domain: &ScalarDomain) -> Result<f64, MeanError> {
        self.eval_with_raw(v, domain).map(|(clamped, _)| clamped)
    }

    /// Like [`MeanExpr::eval`], but also returns the raw top-level value
    /// before clamping (sub-expressions are still clamped).
    pub fn eval_with_raw(&self, v: &[f64], domain: &ScalarDomain) -> Result<(f64, f64), MeanError> {
        self.check_input_f64(v, domain)?;
        let raw = self.node.eval_f64_raw(v)?;
        let (lo, hi) = float_bounds(v);
        let clamped = clamp_internal(raw, lo, hi)?;
        Ok((clamped, raw))
    }

    /// Exact evaluation over a vector from one Hamel context. Supports the
    /// span-closed subset of the language; no clamping is applied.
    pub fn eval_exact(&self, v: &[HamelNumber]) -> Result<HamelNumber, MeanError> {
        if v.len() != self.arity {
            return Err(MeanError::ArityMismatch {
                expected: self.arity,
                got: v.len(),
            });
        }
        let d = v[0].context_d();
        if v.iter().any(|x| x.context_d() != d) {
            return Err(MeanError::DomainViolation(
                "input vector mixes Hamel contexts".into(),
            ));
        }
        self.node.eval_exact(v)
    }
}

fn float_bounds(v: &[f64]) -> (f64, f64) {
    let mut lo = v[0];
    let mut hi = v[0];
    for &x in &v[1..] {
        if x < lo {
            lo = x;
        }
        if x > hi {
            hi = x;
        }
    }
    (lo, hi)
}

/// Unit in the last place at the magnitude of `x` (spacing to the next
/// representable float above `|x|`).
pub fn ulp(x: f64) -> f64 {
    let ax = x.abs();
    if !ax.is_finite() {
        return f64::INFINITY;
    }
    f64::from_bits(ax.to_bits() + 1) - ax
}

/// Clamps `raw` into `[lo, hi]` after asserting the excursion is at most
/// 8 ulp at the working magnitude.
pub(crate) fn clamp_internal(raw: f64, lo: f64, hi: f64) -> Result<f64, MeanError> {
    let breach = MeanError::InternalityBreach { raw, lo, hi };
    if raw.is_nan() {
        return Err(breach);
    }
    let tolerance = 8.0 * ulp(raw.abs().max(lo.abs()).max(hi.abs()));
    if raw < lo {
        if lo - raw <= tolerance {
            Ok(lo)
        } else {
            Err(breach)
        }
    } else if raw > hi {
        if raw - hi <= tolerance {
            Ok(hi)
        } else {
            Err(breach)
        }
    } else {
        Ok(raw)
    }
}

impl MeanNode {
    /// Raw binary64 value at this node; children are evaluated with
    /// clamping, the node's own result is not.
    fn eval_f64_raw(&self, v: &[f64]) -> Result<f64, MeanError> {
        match self {
            MeanNode::Projection(i) => Ok(v[*i]),
            MeanNode::PowerMean { r, weights } => power_mean_f64(*r, weights, v),
            MeanNode::QuasiArithmetic { generator, weights } => {
                let mut acc = 0.0;
                for (w, &x) in weights.iter().zip(v) {
                    acc += rational_to_f64(w) * generator.apply(x)?;
                }
                generator.invert(acc)
            }
            MeanNode::Min => Ok(float_bounds(v).0),
            MeanNode::Max => Ok(float_bounds(v).1),
            MeanNode::ConvexBlend { coeff, left, right } => {
                let s = coeff.eval_f64(v)?;
                let a = left.eval_f64(v)?;
                let b = right.eval_f64(v)?;
                Ok(s * a + (1.0 - s) * b)
            }
            MeanNode::Piecewise {
                predicate,
                then_branch,
                else_branch,
            } => {
                if predicate.holds_f64(v) {
                    then_branch.eval_f64_raw(v)
                } else {
                    else_branch.eval_f64_raw(v)
                }
            }
            MeanNode::StateWeighted { .. } => Err(MeanError::UnsupportedInDomain {
                node: "state_weighted",
                domain: "binary64",
            }),
        }
    }

    /// Clamped binary64 value at this node.
    fn eval_f64(&self, v: &[f64]) -> Result<f64, MeanError> {
        let raw = self.eval_f64_raw(v)?;
        let (lo, hi) = float_bounds(v);
        clamp_internal(raw, lo, hi)
    }

    fn eval_exact(&self, v: &[HamelNumber]) -> Result<HamelNumber, MeanError> {
        let unsupported = |node| MeanError::UnsupportedInDomain {
            node,
            domain: "hamel_exact",
        };
        match self {
            MeanNode::Projection(i) => Ok(v[*i].clone()),
            MeanNode::PowerMean { r, weights } => {
                if *r == 1.0 {
                    Ok(weighted_sum_exact(weights, v))
                } else if *r == f64::INFINITY {
                    Ok(exact_bounds(v).1)
                } else if *r == f64::NEG_INFINITY {
                    Ok(exact_bounds(v).0)
                } else {
                    Err(unsupported("power mean with exponent other than 1 or ±inf"))
                }
            }
            MeanNode::QuasiArithmetic { generator, weights } => match generator {
                GeneratorId::Identity | GeneratorId::Negation => {
                    Ok(weighted_sum_exact(weights, v))
                }
                _ => Err(unsupported("quasi-arithmetic mean with a nonlinear generator")),
            },
            MeanNode::Min => Ok(exact_bounds(v).0),
            MeanNode::Max => Ok(exact_bounds(v).1),
            MeanNode::ConvexBlend { coeff, left, right } => {
                let s = coeff.eval_exact(v)?;
                let one = HamelNumber::from_rational(Rational::one(), v[0].context_d())
                    .expect("valid context");
                let a = left.eval_exact(v)?;
                let b = right.eval_exact(v)?;
                Ok(&(&s * &a) + &(&(&one - &s) * &b))
            }
            MeanNode::Piecewise {
                predicate,
                then_branch,
                else_branch,
            } => {
                if predicate.holds_exact(v) {
                    then_branch.eval_exact(v)
                } else {
                    else_branch.eval_exact(v)
                }
            }
            MeanNode::StateWeighted {
                params,
                functional,
                mirror,
            } => {
                if functional.context_d() != v[0].context_d() {
                    return Err(MeanError::DomainViolation(format!(
                        "functional context sqrt({}) does not match input context sqrt({})",
                        functional.context_d(),
                        v[0].context_d()
                    )));
                }
                let lambda = crate::hamel::lambda_eval(params, functional, &v[0]);
                let complement = Rational::one() - &lambda;
                let (wu, wv) = if *mirror {
                    (complement, lambda)
                } else {
                    (lambda, complement)
                };
                Ok(v[0].scale(&wu) + v[1].scale(&wv))
            }
        }
    }
}

fn weighted_sum_exact(weights: &[Rational], v: &[HamelNumber]) -> HamelNumber {
    let mut acc = HamelNumber::zero(v[0].context_d()).expect("valid context");
    for (w, x) in weights.iter().zip(v) {
        acc = acc + x.scale(w);
    }
    acc
}

fn exact_bounds(v: &[HamelNumber]) -> (HamelNumber, HamelNumber) {
    let mut lo = v[0].clone();
    let mut hi = v[0].clone();
    for x in &v[1..] {
        if x < &lo {
            lo = x.clone();
        }
        if x > &hi {
            hi = x.clone();
        }
    }
    (lo, hi)
}

fn power_mean_f64(r: f64, weights: &[Rational], v: &[f64]) -> Result<f64, MeanError> {
    if r == f64::INFINITY {
        return Ok(float_bounds(v).1);
    }
    if r == f64::NEG_INFINITY {
        return Ok(float_bounds(v).0);
    }
    if r == 1.0 {
        let mut acc = 0.0;
        for (w, &x) in weights.iter().zip(v) {
            acc += rational_to_f64(w) * x;
        }
        return Ok(acc);
    }
    // all remaining exponents need strictly positive inputs
    for &x in v {
        if x <= 0.0 {
            return Err(MeanError::DomainViolation(format!(
                "power mean with exponent {r} needs strictly positive inputs, got {x}"
            )));
        }
    }
    if r == 0.0 {
        let mut acc = 0.0;
        for (w, &x) in weights.iter().zip(v) {
            acc += rational_to_f64(w) * x.ln();
        }
        Ok(acc.exp())
    } else {
        let mut acc = 0.0;
        for (w, &x) in weights.iter().zip(v) {
            acc += rational_to_f64(w) * x.powf(r);
        }
        Ok(acc.powf(1.0 / r))
    }
}

/// Internality audit: evaluates the expression over the samples and counts
/// raw (pre-clamping) excursions outside `[min(v), max(v)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalityReport {
    pub samples: usize,
    pub violations: usize,
    pub worst_deviation: f64,
}

pub fn internality_report(
    expr: &MeanExpr,
    domain: &ScalarDomain,
    samples: &[Vec<f64>],
) -> Result<InternalityReport, MeanError> {
    let mut violations = 0;
    let mut worst = 0.0f64;
    for v in samples {
        let (_, raw) = expr.eval_with_raw(v, domain)?;
        let (lo, hi) = float_bounds(v);
        let deviation = (lo - raw).max(raw - hi).max(0.0);
        if deviation > 0.0 {
            violations += 1;
        }
        worst = worst.max(deviation);
    }
    Ok(InternalityReport {
        samples: samples.len(),
        violations,
        worst_deviation: worst,
    })
}
