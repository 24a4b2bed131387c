//! The mapping catalog: expression vectors, the coordinate swap, the λ
//! pair family (exact and float-image), and quasi-arithmetic conjugation.

use super::{DynamicsError, MeanMapping};
use crate::hamel::{mn_step, AdditiveFunctional, HamelFloat, HamelNumber, LambdaParams};
use crate::mean::{GeneratorId, Interval, MeanExpr, ScalarDomain};

/// A mapping given coordinatewise by mean expressions, all of arity `p`.
pub struct ExprMapping {
    name: String,
    exprs: Vec<MeanExpr>,
    domain: ScalarDomain,
}

impl ExprMapping {
    pub fn new(
        name: impl Into<String>,
        exprs: Vec<MeanExpr>,
        domain: ScalarDomain,
    ) -> Result<Self, DynamicsError> {
        let p = exprs.len();
        if p < 2 {
            return Err(DynamicsError::DomainViolation(format!(
                "a mean-type mapping needs at least 2 coordinates, got {p}"
            )));
        }
        if let Some(bad) = exprs.iter().find(|e| e.arity() != p) {
            return Err(DynamicsError::DomainViolation(format!(
                "coordinate mean has arity {}, mapping has {p} coordinates",
                bad.arity()
            )));
        }
        Ok(Self {
            name: name.into(),
            exprs,
            domain,
        })
    }

    pub fn domain(&self) -> &ScalarDomain {
        &self.domain
    }

    pub fn exprs(&self) -> &[MeanExpr] {
        &self.exprs
    }
}

impl MeanMapping<f64> for ExprMapping {
    fn arity(&self) -> usize {
        self.exprs.len()
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        self.exprs
            .iter()
            .map(|e| e.eval(v, &self.domain).map_err(DynamicsError::from))
            .collect()
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

impl MeanMapping<HamelNumber> for ExprMapping {
    fn apply(&self, v: &[HamelNumber]) -> Result<Vec<HamelNumber>, DynamicsError> {
        self.exprs
            .iter()
            .map(|e| e.eval_exact(v).map_err(DynamicsError::from))
            .collect()
    }

    fn arity(&self) -> usize {
        self.exprs.len()
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

/// Exchanges the two coordinates. Both coordinates are projections, hence
/// means; the orbit of any nonconstant pair is 2-periodic, the textbook
/// witness of non-unique invariant means.
pub struct SwapMapping;

impl<S: Clone> MeanMapping<S> for SwapMapping {
    fn arity(&self) -> usize {
        2
    }

    fn apply(&self, v: &[S]) -> Result<Vec<S>, DynamicsError> {
        Ok(vec![v[1].clone(), v[0].clone()])
    }

    fn name(&self) -> String {
        "swap".into()
    }
}

/// The λ pair family `(M, N)` over the span of `{1, √d}`.
///
/// Over [`HamelNumber`] every step is exact; over [`HamelFloat`] the same
/// formulas run on binary64 coefficients, which is the image arithmetic
/// used for long orbits and convergence estimates.
pub struct HamelMnMapping {
    params: LambdaParams,
    functional: AdditiveFunctional,
}

impl HamelMnMapping {
    pub fn new(params: LambdaParams, functional: AdditiveFunctional) -> Self {
        Self { params, functional }
    }

    /// Default family: standard parameters, coefficient-reading functional
    /// on the span of `{1, √2}`.
    pub fn standard() -> Self {
        Self::new(
            LambdaParams::standard(),
            AdditiveFunctional::coefficient_reader(2).expect("2 is square-free"),
        )
    }

    pub fn params(&self) -> &LambdaParams {
        &self.params
    }

    pub fn functional(&self) -> &AdditiveFunctional {
        &self.functional
    }

    pub fn context_d(&self) -> u64 {
        self.functional.context_d()
    }
}

impl MeanMapping<HamelNumber> for HamelMnMapping {
    fn arity(&self) -> usize {
        2
    }

    fn apply(&self, v: &[HamelNumber]) -> Result<Vec<HamelNumber>, DynamicsError> {
        let d = self.functional.context_d();
        if v.iter().any(|x| x.context_d() != d) {
            return Err(DynamicsError::DomainViolation(format!(
                "input is not in the sqrt({d}) span context"
            )));
        }
        let (m, n) = mn_step(&self.params, &self.functional, &v[0], &v[1]);
        Ok(vec![m, n])
    }

    fn name(&self) -> String {
        "hamel-mn".into()
    }
}

impl MeanMapping<HamelFloat> for HamelMnMapping {
    fn arity(&self) -> usize {
        2
    }

    fn apply(&self, v: &[HamelFloat]) -> Result<Vec<HamelFloat>, DynamicsError> {
        let d = self.functional.context_d();
        if v.iter().any(|x| x.d != d) {
            return Err(DynamicsError::DomainViolation(format!(
                "input is not in the sqrt({d}) span context"
            )));
        }
        let (u, w) = (v[0], v[1]);
        let alpha = self.functional.eval_float(&u).abs();
        let lambda = self.params.lambda_at_f64(alpha);
        let m = HamelFloat::new(
            lambda * u.q0 + (1.0 - lambda) * w.q0,
            lambda * u.q1 + (1.0 - lambda) * w.q1,
            d,
        );
        let n = HamelFloat::new(
            (1.0 - lambda) * u.q0 + lambda * w.q0,
            (1.0 - lambda) * u.q1 + lambda * w.q1,
            d,
        );
        Ok(vec![m, n])
    }

    fn name(&self) -> String {
        "hamel-mn".into()
    }
}

/// Conjugation by a generator: `v ↦ g⁻¹(M(g(v)))` coordinatewise. The
/// compound mean of the conjugate is `g⁻¹` of the inner compound at the
/// `g`-image, which turns the arithmetic-anchored results into their
/// quasi-arithmetic counterparts.
pub struct ConjugateMapping {
    generator: GeneratorId,
    inner: Box<dyn MeanMapping<f64>>,
}

pub fn conjugate_mapping(
    generator: GeneratorId,
    inner: Box<dyn MeanMapping<f64>>,
) -> Result<ConjugateMapping, DynamicsError> {
    generator.validate()?;
    Ok(ConjugateMapping { generator, inner })
}

impl MeanMapping<f64> for ConjugateMapping {
    fn arity(&self) -> usize {
        self.inner.arity()
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        let images = v
            .iter()
            .map(|&x| self.generator.apply(x))
            .collect::<Result<Vec<_>, _>>()?;
        let mapped = self.inner.apply(&images)?;
        mapped
            .into_iter()
            .map(|y| self.generator.invert(y).map_err(DynamicsError::from))
            .collect()
    }

    fn name(&self) -> String {
        format!("{}-conjugate({})", self.generator.name(), self.inner.name())
    }
}

/// Names of the built-in mappings, in catalog order.
pub fn builtin_names() -> &'static [&'static str] {
    &["agm", "ahm", "swap", "example1", "hamel-mn"]
}

/// Builds a built-in mapping over binary64.
///
/// `hamel-mn` has no binary64 form (the additive functional is only
/// defined on the span), so it returns `None` here; use
/// [`HamelMnMapping`] with exact or float-coefficient span vectors.
pub fn builtin_f64(name: &str) -> Option<Box<dyn MeanMapping<f64>>> {
    match name {
        "agm" => Some(Box::new(
            ExprMapping::new(
                "agm",
                vec![MeanExpr::arithmetic(2), MeanExpr::geometric(2)],
                ScalarDomain::positive(),
            )
            .expect("catalog mapping is well-formed"),
        )),
        "ahm" => Some(Box::new(
            ExprMapping::new(
                "ahm",
                vec![MeanExpr::arithmetic(2), MeanExpr::harmonic(2)],
                ScalarDomain::positive(),
            )
            .expect("catalog mapping is well-formed"),
        )),
        "swap" => Some(Box::new(SwapMapping)),
        "example1" => Some(Box::new(
            super::Example1Mapping::new(
                Interval::new(0.0, 1.0).expect("unit interval is valid"),
            )
            .expect("unit interval is bounded"),
        )),
        _ => None,
    }
}
