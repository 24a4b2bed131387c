//! Mean-type mappings on p-dimensional boxes and their invariant means.
//!
//! A mean-type mapping `M = (M_1, …, M_p)` sends a vector to the vector of
//! its coordinate means. Iterating `M` squeezes the coordinates together;
//! when the iterates converge, their common limit defines the compound
//! (invariant) mean `K` with `K ∘ M = K`. This crate provides:
//!
//! - [`mean`]: an expression language for p-ary means (power means,
//!   quasi-arithmetic means, blends, piecewise regions) with an internality
//!   clamp for binary64 and an exact path over surd spans;
//! - [`hamel`]: exact arithmetic over the ℚ-span of `{1, √d}`, the
//!   ℚ-linear (discontinuous-additive) functional on it, and the λ mean
//!   family built from it;
//! - [`dynamics`]: orbit iteration, compound-mean computation, extremal
//!   invariant-mean envelopes, weak-contractivity probing, and the
//!   catalog of built-in mappings;
//! - [`funceq`]: solving and verifying the invariance equation
//!   `F ∘ M = F` via `F = φ ∘ K`;
//! - [`schema`]: the JSON text form of mean expressions.

pub mod dynamics;
pub mod funceq;
pub mod hamel;
pub mod mean;
pub mod rational;
pub mod schema;

pub use dynamics::{
    apply_mapping, builtin_f64, builtin_names, compound_mean, conjugate_mapping,
    envelope_limits, example1_mapping, example1_orbit_formula, invariance_principle_check,
    invariance_residual, iterate, orbit, weak_contractivity_probe, CompoundResult,
    ContractivityReport, ConvergenceStatus, DynamicsError, EnvelopeEstimate, Example1Exact,
    Example1Mapping, ExprMapping, HamelMnMapping, MeanMapping, OrbitScalar, OrbitTrace,
    PrincipleReport, PrincipleVerdict, StopReason, StopRule, SwapMapping,
};
pub use funceq::{
    build_invariant_function, recover_phi, remark4_counterexample, verify_invariance_equation,
    DiagonalFunction, FunceqError, InvariantFunction, VerificationReport,
};
pub use hamel::{
    alpha_eval, hamel_sign, lambda_eval, mn_orbit, mn_step, validate_lambda_params,
    AdditiveFunctional, HamelError, HamelFloat, HamelNumber, LambdaParams, LambdaRange,
};
pub use mean::{
    internality_report, DomainKind, GeneratorId, Interval, InternalityReport, MeanError,
    MeanExpr, MeanNode, ScalarDomain,
};
pub use rational::{format_rational, parse_rational, rat, Rational};
pub use schema::{parse_mapping_exprs, parse_mean_expr, serialize_mean_expr, SchemaError};
