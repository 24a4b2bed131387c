//! JSON text form of mean expressions (schema version 1).
//!
//! Every expression is an object with an `"op"` discriminator:
//!
//! - `{"op":"power","r":1,"weights":["1/2","1/2"]}` — weighted power mean;
//!   `r` is a number or `"inf"`/`"-inf"`, weights are rationals written as
//!   `"num/den"` strings and must sum to exactly 1;
//! - `{"op":"quasi","generator":"log","weights":[…]}` — quasi-arithmetic
//!   mean; generators are `"identity" | "log" | "exp" | "negation"` or
//!   `{"power": r}`;
//! - `{"op":"min","arity":3}`, `{"op":"max","arity":3}`,
//!   `{"op":"proj","index":0,"arity":3}`;
//! - `{"op":"blend","coeff":"1/3","left":{…},"right":{…}}` — convex blend;
//!   `coeff` is a rational string or `"example1_strip"`;
//! - `{"op":"piecewise","predicate":"example1_lambda","then":{…},"else":{…}}`;
//! - `{"op":"state_weighted","d":2,"functional":["0","1"],
//!    "params":["1","4/3","4","1/2"],"mirror":false}` — the λ-family
//!   coordinate over the span of `{1, √d}`.
//!
//! Arity is inferred from weights or from structurally-fixed nodes and may
//! be pinned anywhere with an `"arity"` field; conflicting inferences are
//! schema errors with the path of the offending field. A mapping file is
//! either an array of `p` expression objects (each of arity `p`) or
//! `{"version":1,"mapping":[…]}`.

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::hamel::AdditiveFunctional;
use crate::mean::{CoefficientFn, GeneratorId, MeanExpr, MeanNode, RegionPredicate};
use crate::rational::{format_rational, parse_rational, Rational};
use num_traits::{One, Signed, Zero};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemaError {
    #[error("schema error at {path}: {message}")]
    Invalid { path: String, message: String },
    #[error("weights at {path} sum to {sum}, expected exactly 1")]
    WeightSum { path: String, sum: String },
}

fn invalid(path: &str, message: impl Into<String>) -> SchemaError {
    SchemaError::Invalid {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Parses a mean-expression JSON document.
pub fn parse_mean_expr(text: &str) -> Result<MeanExpr, SchemaError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| invalid("$", format!("not valid JSON: {e}")))?;
    mean_expr_from_value(&value, "$")
}

/// Parses an already-decoded JSON value as a mean expression.
pub fn mean_expr_from_value(value: &Value, path: &str) -> Result<MeanExpr, SchemaError> {
    if let Some(obj) = value.as_object() {
        if let Some(version) = obj.get("version") {
            if version.as_u64() != Some(SCHEMA_VERSION) {
                return Err(invalid(
                    &format!("{path}.version"),
                    format!("unsupported schema version {version}, expected {SCHEMA_VERSION}"),
                ));
            }
        }
    }
    let (node, inferred) = parse_node(value, path)?;
    let arity = inferred.ok_or_else(|| {
        invalid(
            path,
            "arity cannot be inferred from this expression; add an \"arity\" field",
        )
    })?;
    MeanExpr::new(arity, node).map_err(|e| invalid(path, e.to_string()))
}

/// Parses a mapping document: an array of expressions or an object with a
/// `"mapping"` array. Coordinate count and arities are checked by the
/// mapping constructor, not here.
pub fn parse_mapping_exprs(text: &str) -> Result<Vec<MeanExpr>, SchemaError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| invalid("$", format!("not valid JSON: {e}")))?;
    let (array, base) = match &value {
        Value::Array(items) => (items, "$".to_string()),
        Value::Object(obj) => {
            if let Some(version) = obj.get("version") {
                if version.as_u64() != Some(SCHEMA_VERSION) {
                    return Err(invalid(
                        "$.version",
                        format!("unsupported schema version {version}"),
                    ));
                }
            }
            let mapping = obj
                .get("mapping")
                .ok_or_else(|| invalid("$", "expected an array or a \"mapping\" field"))?;
            let items = mapping
                .as_array()
                .ok_or_else(|| invalid("$.mapping", "expected an array of expressions"))?;
            (items, "$.mapping".to_string())
        }
        _ => return Err(invalid("$", "expected an array or an object")),
    };
    // a shared arity pin: nodes that cannot infer alone (min/max/proj)
    // borrow it from the coordinate count
    let mut pinned: Option<usize> = Some(array.len()).filter(|p| *p >= 2);
    let mut parsed = Vec::with_capacity(array.len());
    for (i, item) in array.iter().enumerate() {
        let path = format!("{base}[{i}]");
        let (node, inferred) = parse_node(item, &path)?;
        if let (Some(a), Some(b)) = (pinned, inferred) {
            if a != b {
                return Err(invalid(
                    &path,
                    format!("arity {b} conflicts with mapping arity {a}"),
                ));
            }
        }
        pinned = pinned.or(inferred);
        parsed.push((node, path));
    }
    let arity = pinned.ok_or_else(|| invalid(&base, "cannot infer the mapping arity"))?;
    parsed
        .into_iter()
        .map(|(node, path)| MeanExpr::new(arity, node).map_err(|e| invalid(&path, e.to_string())))
        .collect()
}

fn unify(a: Option<usize>, b: Option<usize>, path: &str) -> Result<Option<usize>, SchemaError> {
    match (a, b) {
        (Some(x), Some(y)) if x != y => Err(invalid(
            path,
            format!("conflicting arities {x} and {y}"),
        )),
        (Some(x), _) => Ok(Some(x)),
        (_, y) => Ok(y),
    }
}

fn parse_node(value: &Value, path: &str) -> Result<(MeanNode, Option<usize>), SchemaError> {
    let obj = value
        .as_object()
        .ok_or_else(|| invalid(path, "expected an object"))?;
    let op = obj
        .get("op")
        .and_then(Value::as_str)
        .ok_or_else(|| invalid(&format!("{path}.op"), "missing or non-string op"))?;
    let explicit = match obj.get("arity") {
        None => None,
        Some(v) => Some(
            v.as_u64()
                .map(|a| a as usize)
                .ok_or_else(|| invalid(&format!("{path}.arity"), "arity must be an integer"))?,
        ),
    };
    let (node, inferred) = match op {
        "power" => {
            let r = parse_exponent(obj, path)?;
            let weights = parse_weights(obj, path)?;
            let p = weights.len();
            (MeanNode::PowerMean { r, weights }, Some(p))
        }
        "quasi" => {
            let generator = parse_generator(obj, path)?;
            let weights = parse_weights(obj, path)?;
            let p = weights.len();
            (MeanNode::QuasiArithmetic { generator, weights }, Some(p))
        }
        "min" => (MeanNode::Min, None),
        "max" => (MeanNode::Max, None),
        "proj" => {
            let index = obj
                .get("index")
                .and_then(Value::as_u64)
                .ok_or_else(|| invalid(&format!("{path}.index"), "missing projection index"))?;
            (MeanNode::Projection(index as usize), None)
        }
        "blend" => {
            let coeff_path = format!("{path}.coeff");
            let coeff_text = obj
                .get("coeff")
                .and_then(Value::as_str)
                .ok_or_else(|| invalid(&coeff_path, "missing blend coefficient"))?;
            let coeff = if coeff_text == "example1_strip" {
                CoefficientFn::Example1Strip
            } else {
                CoefficientFn::Const(
                    parse_rational(coeff_text).map_err(|e| invalid(&coeff_path, e.to_string()))?,
                )
            };
            let coeff_arity = match coeff {
                CoefficientFn::Example1Strip => Some(3),
                CoefficientFn::Const(_) => None,
            };
            let left_value = obj
                .get("left")
                .ok_or_else(|| invalid(&format!("{path}.left"), "missing left mean"))?;
            let right_value = obj
                .get("right")
                .ok_or_else(|| invalid(&format!("{path}.right"), "missing right mean"))?;
            let (left, la) = parse_node(left_value, &format!("{path}.left"))?;
            let (right, ra) = parse_node(right_value, &format!("{path}.right"))?;
            let arity = unify(unify(la, ra, path)?, coeff_arity, path)?;
            (
                MeanNode::ConvexBlend {
                    coeff,
                    left: Box::new(left),
                    right: Box::new(right),
                },
                arity,
            )
        }
        "piecewise" => {
            let pred_path = format!("{path}.predicate");
            let predicate = match obj.get("predicate").and_then(Value::as_str) {
                Some("example1_lambda") => RegionPredicate::Example1Lambda,
                Some("first_leq_second") => RegionPredicate::FirstLeqSecond,
                Some(other) => {
                    return Err(invalid(&pred_path, format!("unknown predicate {other:?}")))
                }
                None => return Err(invalid(&pred_path, "missing predicate")),
            };
            let pred_arity = match predicate {
                RegionPredicate::Example1Lambda => Some(3),
                RegionPredicate::FirstLeqSecond => None,
            };
            let then_value = obj
                .get("then")
                .ok_or_else(|| invalid(&format!("{path}.then"), "missing then branch"))?;
            let else_value = obj
                .get("else")
                .ok_or_else(|| invalid(&format!("{path}.else"), "missing else branch"))?;
            let (then_branch, ta) = parse_node(then_value, &format!("{path}.then"))?;
            let (else_branch, ea) = parse_node(else_value, &format!("{path}.else"))?;
            let arity = unify(unify(ta, ea, path)?, pred_arity, path)?;
            (
                MeanNode::Piecewise {
                    predicate,
                    then_branch: Box::new(then_branch),
                    else_branch: Box::new(else_branch),
                },
                arity,
            )
        }
        "state_weighted" => {
            let d = obj
                .get("d")
                .and_then(Value::as_u64)
                .ok_or_else(|| invalid(&format!("{path}.d"), "missing span discriminant d"))?;
            let functional_path = format!("{path}.functional");
            let coeffs = parse_rational_array(obj.get("functional"), &functional_path, 2)?;
            let functional = AdditiveFunctional::new(coeffs[0].clone(), coeffs[1].clone(), d)
                .map_err(|e| invalid(&functional_path, e.to_string()))?;
            let params_path = format!("{path}.params");
            let params = parse_rational_array(obj.get("params"), &params_path, 4)?;
            let params = crate::hamel::validate_lambda_params(
                params[0].clone(),
                params[1].clone(),
                params[2].clone(),
                params[3].clone(),
            )
            .map_err(|e| invalid(&params_path, e.to_string()))?;
            let mirror = match obj.get("mirror") {
                None => false,
                Some(v) => v.as_bool().ok_or_else(|| {
                    invalid(&format!("{path}.mirror"), "mirror must be a boolean")
                })?,
            };
            (
                MeanNode::StateWeighted {
                    params,
                    functional,
                    mirror,
                },
                Some(2),
            )
        }
        other => {
            return Err(invalid(
                &format!("{path}.op"),
                format!("unknown op {other:?}"),
            ))
        }
    };
    let arity = unify(explicit, inferred, &format!("{path}.arity"))?;
    Ok((node, arity))
}

fn parse_exponent(obj: &Map<String, Value>, path: &str) -> Result<f64, SchemaError> {
    let r_path = format!("{path}.r");
    match obj.get("r") {
        Some(Value::Number(n)) => n
            .as_f64()
            .ok_or_else(|| invalid(&r_path, "exponent out of binary64 range")),
        Some(Value::String(s)) if s == "inf" => Ok(f64::INFINITY),
        Some(Value::String(s)) if s == "-inf" => Ok(f64::NEG_INFINITY),
        Some(other) => Err(invalid(
            &r_path,
            format!("exponent must be a number or \"inf\"/\"-inf\", got {other}"),
        )),
        None => Err(invalid(&r_path, "missing exponent r")),
    }
}

fn parse_generator(obj: &Map<String, Value>, path: &str) -> Result<GeneratorId, SchemaError> {
    let g_path = format!("{path}.generator");
    match obj.get("generator") {
        Some(Value::String(name)) => match name.as_str() {
            "identity" => Ok(GeneratorId::Identity),
            "log" => Ok(GeneratorId::Log),
            "exp" => Ok(GeneratorId::Exp),
            "negation" => Ok(GeneratorId::Negation),
            other => Err(invalid(&g_path, format!("unknown generator {other:?}"))),
        },
        Some(Value::Object(g)) => {
            let r = g
                .get("power")
                .and_then(Value::as_f64)
                .ok_or_else(|| invalid(&g_path, "generator object needs a numeric \"power\""))?;
            Ok(GeneratorId::Power(r))
        }
        Some(other) => Err(invalid(&g_path, format!("unexpected generator {other}"))),
        None => Err(invalid(&g_path, "missing generator")),
    }
}

fn parse_weights(obj: &Map<String, Value>, path: &str) -> Result<Vec<Rational>, SchemaError> {
    let w_path = format!("{path}.weights");
    let items = obj
        .get("weights")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid(&w_path, "missing weights array"))?;
    if items.len() < 2 {
        return Err(invalid(&w_path, "need at least two weights"));
    }
    let mut weights = Vec::with_capacity(items.len());
    let mut sum = Rational::zero();
    for (i, item) in items.iter().enumerate() {
        let item_path = format!("{w_path}[{i}]");
        let text = item
            .as_str()
            .ok_or_else(|| invalid(&item_path, "weights are rational strings like \"1/2\""))?;
        let w = parse_rational(text).map_err(|e| invalid(&item_path, e.to_string()))?;
        if w.is_negative() {
            return Err(invalid(&item_path, format!("negative weight {text}")));
        }
        sum += &w;
        weights.push(w);
    }
    if !sum.is_one() {
        return Err(SchemaError::WeightSum {
            path: w_path,
            sum: format_rational(&sum),
        });
    }
    Ok(weights)
}

fn parse_rational_array(
    value: Option<&Value>,
    path: &str,
    expected_len: usize,
) -> Result<Vec<Rational>, SchemaError> {
    let items = value
        .and_then(Value::as_array)
        .ok_or_else(|| invalid(path, format!("expected an array of {expected_len} rationals")))?;
    if items.len() != expected_len {
        return Err(invalid(
            path,
            format!("expected {expected_len} rationals, got {}", items.len()),
        ));
    }
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let item_path = format!("{path}[{i}]");
            let text = item
                .as_str()
                .ok_or_else(|| invalid(&item_path, "rationals are strings like \"4/3\""))?;
            parse_rational(text).map_err(|e| invalid(&item_path, e.to_string()))
        })
        .collect()
}

/// Serializes a mean expression back to its JSON form. Parsing the result
/// reproduces a structurally identical expression.
pub fn serialize_mean_expr(expr: &MeanExpr) -> Value {
    serialize_node(expr.node(), expr.arity())
}

fn exponent_value(r: f64) -> Value {
    if r == f64::INFINITY {
        json!("inf")
    } else if r == f64::NEG_INFINITY {
        json!("-inf")
    } else {
        json!(r)
    }
}

fn weight_values(weights: &[Rational]) -> Value {
    Value::Array(
        weights
            .iter()
            .map(|w| Value::String(format_rational(w)))
            .collect(),
    )
}

fn serialize_node(node: &MeanNode, arity: usize) -> Value {
    match node {
        MeanNode::Projection(i) => json!({"op": "proj", "index": i, "arity": arity}),
        MeanNode::PowerMean { r, weights } => {
            json!({"op": "power", "r": exponent_value(*r), "weights": weight_values(weights)})
        }
        MeanNode::QuasiArithmetic { generator, weights } => {
            let g = match generator {
                GeneratorId::Identity => json!("identity"),
                GeneratorId::Log => json!("log"),
                GeneratorId::Exp => json!("exp"),
                GeneratorId::Negation => json!("negation"),
                GeneratorId::Power(r) => json!({"power": r}),
            };
            json!({"op": "quasi", "generator": g, "weights": weight_values(weights)})
        }
        MeanNode::Min => json!({"op": "min", "arity": arity}),
        MeanNode::Max => json!({"op": "max", "arity": arity}),
        MeanNode::ConvexBlend { coeff, left, right } => {
            let coeff_value = match coeff {
                CoefficientFn::Const(s) => format_rational(s),
                CoefficientFn::Example1Strip => "example1_strip".into(),
            };
            json!({
                "op": "blend",
                "coeff": coeff_value,
                "left": serialize_node(left, arity),
                "right": serialize_node(right, arity),
                "arity": arity,
            })
        }
        MeanNode::Piecewise {
            predicate,
            then_branch,
            else_branch,
        } => json!({
            "op": "piecewise",
            "predicate": predicate.name(),
            "then": serialize_node(then_branch, arity),
            "else": serialize_node(else_branch, arity),
            "arity": arity,
        }),
        MeanNode::StateWeighted {
            params,
            functional,
            mirror,
        } => {
            let (b, c, d_param, kappa) = params.as_tuple();
            let (a0, a1) = functional.coefficients();
            json!({
                "op": "state_weighted",
                "d": functional.context_d(),
                "functional": [format_rational(a0), format_rational(a1)],
                "params": [
                    format_rational(b),
                    format_rational(c),
                    format_rational(d_param),
                    format_rational(kappa),
                ],
                "mirror": mirror,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn spec_examples_parse() {
        let expr = parse_mean_expr(r#"{"op":"power","r":1,"weights":["1/2","1/2"]}"#).unwrap();
        assert_eq!(expr.arity(), 2);
        assert!(matches!(expr.node(), MeanNode::PowerMean { r, .. } if *r == 1.0));

        let expr =
            parse_mean_expr(r#"{"op":"power","r":0,"weights":["1/3","1/3","1/3"]}"#).unwrap();
        assert_eq!(expr.arity(), 3);
        let g = expr
            .eval(&[2.0, 8.0, 4.0], &crate::mean::ScalarDomain::positive())
            .unwrap();
        assert!((g - 4.0).abs() < 1e-14, "geometric(2,8,4) = {g}");
    }

    #[test]
    fn weight_sum_error_has_the_path() {
        let err = parse_mean_expr(r#"{"op":"power","r":1,"weights":["1/2","1/3"]}"#).unwrap_err();
        match err {
            SchemaError::WeightSum { path, sum } => {
                assert_eq!(path, "$.weights");
                assert_eq!(sum, "5/6");
            }
            other => panic!("expected WeightSum, got {other:?}"),
        }
    }

    #[test]
    fn schema_errors_carry_paths() {
        let err = parse_mean_expr(r#"{"op":"power","r":1,"weights":["1/2",7]}"#).unwrap_err();
        assert!(matches!(
            err,
            SchemaError::Invalid { ref path, .. } if path == "$.weights[1]"
        ));

        let err = parse_mean_expr(r#"{"op":"nope"}"#).unwrap_err();
        assert!(matches!(
            err,
            SchemaError::Invalid { ref path, .. } if path == "$.op"
        ));

        let err = parse_mean_expr(r#"{"op":"min"}"#).unwrap_err();
        assert!(matches!(err, SchemaError::Invalid { ref path, .. } if path == "$"));

        let err = parse_mean_expr(
            r#"{"op":"blend","coeff":"1/2",
                "left":{"op":"power","r":1,"weights":["1/2","1/2"]},
                "right":{"op":"power","r":1,"weights":["1/3","1/3","1/3"]}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, SchemaError::Invalid { .. }));
    }

    #[test]
    fn round_trip_is_structural_identity() {
        let documents = [
            r#"{"op":"power","r":1,"weights":["1/2","1/2"]}"#,
            r#"{"op":"power","r":"inf","weights":["1/4","3/4"]}"#,
            r#"{"op":"quasi","generator":"log","weights":["1/3","2/3"]}"#,
            r#"{"op":"quasi","generator":{"power":2.5},"weights":["1/2","1/2"]}"#,
            r#"{"op":"min","arity":4}"#,
            r#"{"op":"proj","index":1,"arity":3}"#,
            r#"{"op":"blend","coeff":"1/3","arity":2,
                "left":{"op":"min"},"right":{"op":"max"}}"#,
            r#"{"op":"piecewise","predicate":"example1_lambda",
                "then":{"op":"proj","index":0},
                "else":{"op":"min"}}"#,
            r#"{"op":"blend","coeff":"example1_strip",
                "left":{"op":"min"},"right":{"op":"max"}}"#,
            r#"{"op":"state_weighted","d":2,"functional":["0","1"],
                "params":["1","4/3","4","1/2"],"mirror":true}"#,
        ];
        for text in documents {
            let expr = parse_mean_expr(text).unwrap();
            let serialized = serialize_mean_expr(&expr);
            let reparsed = mean_expr_from_value(&serialized, "$").unwrap();
            assert_eq!(expr, reparsed, "round trip of {text}");
        }
    }

    #[test]
    fn arity_conflicts_are_rejected() {
        let err = parse_mean_expr(r#"{"op":"power","r":1,"weights":["1/2","1/2"],"arity":3}"#)
            .unwrap_err();
        assert!(matches!(err, SchemaError::Invalid { .. }));
    }

    #[test]
    fn state_weighted_parameter_validation_surfaces() {
        let err = parse_mean_expr(
            r#"{"op":"state_weighted","d":2,"functional":["0","1"],
                "params":["1","1","4","1/2"]}"#,
        )
        .unwrap_err();
        match err {
            SchemaError::Invalid { path, message } => {
                assert_eq!(path, "$.params");
                assert!(message.contains("c > 1"), "message: {message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mapping_documents_parse() {
        let exprs = parse_mapping_exprs(
            r#"[{"op":"power","r":1,"weights":["1/2","1/2"]},
                {"op":"power","r":0,"weights":["1/2","1/2"]}]"#,
        )
        .unwrap();
        assert_eq!(exprs.len(), 2);

        // min/max borrow the arity from the coordinate count
        let exprs = parse_mapping_exprs(r#"[{"op":"min"},{"op":"max"}]"#).unwrap();
        assert_eq!(exprs[0].arity(), 2);

        let exprs =
            parse_mapping_exprs(r#"{"version":1,"mapping":[{"op":"min"},{"op":"max"}]}"#).unwrap();
        assert_eq!(exprs.len(), 2);

        assert!(parse_mapping_exprs(r#"{"mapping":7}"#).is_err());
    }

    #[test]
    fn equal_weight_helper_round_trips() {
        let g3 = MeanExpr::geometric(3);
        let value = serialize_mean_expr(&g3);
        assert_eq!(value["weights"][0], "1/3");
        let back = mean_expr_from_value(&value, "$").unwrap();
        assert_eq!(back, g3);
        assert_eq!(back.arity(), 3);
        let w = rat(1, 3);
        assert_eq!(format_rational(&w), "1/3");
    }
}
