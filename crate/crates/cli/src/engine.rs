//! Scalar parsing and engine routing.
//!
//! Command-line scalars come in three spellings: decimals (`1.5`),
//! rationals (`3/8`), and span elements (`1/2+3/4*sqrt(2)`). Decimals
//! route to binary64; the other two route to exact arithmetic where the
//! mapping supports it. A vector is promoted to the strongest arithmetic
//! any of its elements needs; promotion is lossless because every finite
//! binary64 is an exact dyadic rational.

use invariant_means::hamel::{HamelFloat, HamelNumber};
use invariant_means::rational::{f64_to_rational, parse_rational, Rational};

use crate::Failure;

#[derive(Debug, Clone)]
pub enum VectorData {
    F64(Vec<f64>),
    Exact(Vec<Rational>),
    Hamel(Vec<HamelNumber>),
}

impl VectorData {
    /// Binary64 images, for reports and for mappings without an exact form.
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            VectorData::F64(v) => v.clone(),
            VectorData::Exact(v) => v
                .iter()
                .map(invariant_means::rational::rational_to_f64)
                .collect(),
            VectorData::Hamel(v) => v.iter().map(HamelNumber::to_f64).collect(),
        }
    }

    /// Float-coefficient span elements for the λ pair family.
    pub fn to_hamel_float(&self, d: u64) -> Vec<HamelFloat> {
        match self {
            VectorData::F64(v) => v.iter().map(|&x| HamelFloat::new(x, 0.0, d)).collect(),
            VectorData::Exact(v) => v
                .iter()
                .map(|q| HamelFloat::new(invariant_means::rational::rational_to_f64(q), 0.0, d))
                .collect(),
            VectorData::Hamel(v) => v.iter().map(HamelNumber::to_float).collect(),
        }
    }
}

enum ScalarToken {
    F64(f64),
    Exact(Rational),
    Hamel(HamelNumber),
}

fn parse_scalar(text: &str, d: u64) -> Result<ScalarToken, Failure> {
    let trimmed = text.trim();
    if trimmed.contains("sqrt") {
        return HamelNumber::parse(trimmed, d)
            .map(ScalarToken::Hamel)
            .map_err(|e| Failure::domain(e.to_string()));
    }
    if trimmed.contains('/') {
        return parse_rational(trimmed)
            .map(ScalarToken::Exact)
            .map_err(|e| Failure::domain(e.to_string()));
    }
    trimmed
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .map(ScalarToken::F64)
        .ok_or_else(|| Failure::domain(format!("cannot parse scalar {trimmed:?}")))
}

/// Parses a comma-separated vector and promotes all elements to the
/// strongest arithmetic present.
pub fn parse_vector(text: &str, d: u64) -> Result<VectorData, Failure> {
    let tokens: Vec<ScalarToken> = text
        .split(',')
        .map(|t| parse_scalar(t, d))
        .collect::<Result<_, _>>()?;
    if tokens.is_empty() {
        return Err(Failure::domain("empty vector"));
    }
    let any_hamel = tokens.iter().any(|t| matches!(t, ScalarToken::Hamel(_)));
    let any_exact = tokens.iter().any(|t| matches!(t, ScalarToken::Exact(_)));
    if any_hamel {
        let lifted = tokens
            .into_iter()
            .map(|t| match t {
                ScalarToken::Hamel(x) => Ok(x),
                ScalarToken::Exact(q) => {
                    HamelNumber::from_rational(q, d).map_err(|e| Failure::domain(e.to_string()))
                }
                ScalarToken::F64(x) => HamelNumber::from_rational(
                    f64_to_rational(x).expect("finite"),
                    d,
                )
                .map_err(|e| Failure::domain(e.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(VectorData::Hamel(lifted))
    } else if any_exact {
        let lifted = tokens
            .into_iter()
            .map(|t| match t {
                ScalarToken::Exact(q) => q,
                ScalarToken::F64(x) => f64_to_rational(x).expect("finite"),
                ScalarToken::Hamel(_) => unreachable!("handled above"),
            })
            .collect();
        Ok(VectorData::Exact(lifted))
    } else {
        Ok(VectorData::F64(
            tokens
                .into_iter()
                .map(|t| match t {
                    ScalarToken::F64(x) => x,
                    _ => unreachable!("handled above"),
                })
                .collect(),
        ))
    }
}
